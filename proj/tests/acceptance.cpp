// Acceptance gate: runs every criterion once and prints one line each.

#include <agespec/acceptance.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    agespec::AcceptanceOptions opt;
    if (argc > 1) opt.seed = std::strtoull(argv[1], nullptr, 10);
    auto results = agespec::run_acceptance(opt, [](const agespec::CriterionResult& r) {
        std::cout << agespec::format_line(r) << "  [" << r.seconds << " s]" << std::endl;
    });
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
