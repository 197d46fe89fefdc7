#pragma once

// Scenario files: JSON, or a TOML-style subset with [section] headers,
// `key = value` lines, '#' comments, numbers, "strings", true/false,
// [number arrays] and """multi-line strings""" for inline CSV tables.

#include <agespec/error.hpp>
#include <agespec/scenario.hpp>

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace agespec {

using json = nlohmann::json;

struct LoadedScenario {
    ScenarioConfig config;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

/// Scalar literal: number, bool, quoted string. Bare words are kept as strings.
inline json parse_scalar(const std::string& raw, std::size_t line_no) {
    std::string v = trim(raw);
    if (v.empty()) fail(ErrorKind::config, "syntax", "line " + std::to_string(line_no) + ": missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') {
            fail(ErrorKind::config, "syntax", "line " + std::to_string(line_no) + ": unterminated string");
        }
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') fail(ErrorKind::config, "syntax", "line " + std::to_string(line_no) + ": unterminated array");
        json arr = json::array();
        std::stringstream ss(v.substr(1, v.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (trim(item).empty()) continue;
            arr.push_back(parse_scalar(item, line_no));
        }
        return arr;
    }
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end && *end == '\0') {
        bool integral = v.find_first_of(".eE") == std::string::npos;
        if (integral) return static_cast<long long>(d);
        return d;
    }
    return v;
}

inline json parse_toml_subset(const std::string& text) {
    json root = json::object();
    json* section = &root;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
            std::string name = trim(body.substr(1, body.size() - 2));
            if (name.empty()) fail(ErrorKind::config, "syntax", "line " + std::to_string(line_no) + ": empty section name");
            if (!root.contains(name)) root[name] = json::object();
            section = &root[name];
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::config, "syntax", "line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(line.substr(line.find('=') + 1));
        if (value.rfind("\"\"\"", 0) == 0) {
            std::string acc = value.substr(3);
            std::size_t close = acc.find("\"\"\"");
            while (close == std::string::npos) {
                std::string more;
                if (!std::getline(in, more)) {
                    fail(ErrorKind::config, "syntax", "line " + std::to_string(line_no) + ": unterminated \"\"\" string");
                }
                ++line_no;
                acc += "\n" + more;
                close = acc.find("\"\"\"");
            }
            (*section)[key] = trim(acc.substr(0, close));
            continue;
        }
        (*section)[key] = parse_scalar(strip_comment(value), line_no);
    }
    return root;
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(ErrorKind::config, "type", path + " must be a number");
    return j.get<double>();
}

inline json parse_override_value(const std::string& raw) {
    std::string v = trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return parse_scalar(v, 0);
}

}  // namespace detail

/// Applies `section.key=value` overrides to the raw document.
inline void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos) fail(ErrorKind::config, "override", "override '" + ov + "' needs key=value");
        std::string path = detail::trim(ov.substr(0, eq));
        json* node = &doc;
        std::size_t start = 0;
        for (;;) {
            auto dot = path.find('.', start);
            std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) fail(ErrorKind::config, "override", "override '" + ov + "' has an empty path segment");
            if (dot == std::string::npos) {
                (*node)[part] = detail::parse_override_value(ov.substr(eq + 1));
                break;
            }
            if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
            node = &(*node)[part];
            start = dot + 1;
        }
    }
}

inline json parse_scenario_document(const std::string& text) {
    std::string t = detail::trim(text);
    if (!t.empty() && t.front() == '{') {
        try {
            return json::parse(t);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::config, "syntax", std::string("invalid JSON: ") + e.what());
        }
    }
    return detail::parse_toml_subset(text);
}

/// Builds a ScenarioConfig from a parsed document.
inline LoadedScenario scenario_from_json(const json& doc) {
    LoadedScenario out;
    ScenarioConfig& c = out.config;
    if (!doc.is_object()) fail(ErrorKind::config, "syntax", "scenario document must be a table/object");

    static const std::set<std::string> sections{"domain", "age", "kernel", "rates", "solver"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "name") continue;
        if (!sections.count(it.key())) out.warnings.push_back("unknown key '" + it.key() + "'");
    }
    if (doc.contains("name")) c.name = doc["name"].get<std::string>();

    auto section = [&](const char* name, const std::set<std::string>& known) -> json {
        json s = doc.contains(name) ? doc[name] : json::object();
        if (!s.is_object()) fail(ErrorKind::config, "syntax", std::string("[") + name + "] must be a section");
        for (auto it = s.begin(); it != s.end(); ++it) {
            if (!known.count(it.key())) {
                out.warnings.push_back(std::string("unknown key '") + name + "." + it.key() + "'");
            }
        }
        return s;
    };
    auto require = [](const json& s, const std::string& sec, const std::string& key) -> const json& {
        if (!s.contains(key)) fail(ErrorKind::config, "missing_key", "missing required key '" + sec + "." + key + "'");
        return s[key];
    };

    json dom = section("domain", {"lower", "upper", "n_x"});
    if (dom.contains("lower")) c.domain.lower = detail::get_number(dom["lower"], "domain.lower");
    if (dom.contains("upper")) c.domain.upper = detail::get_number(dom["upper"], "domain.upper");
    if (dom.contains("n_x")) c.domain.n_x = static_cast<std::size_t>(detail::get_number(dom["n_x"], "domain.n_x"));
    if (!(c.domain.upper > c.domain.lower)) fail(ErrorKind::config, "domain", "domain.upper must exceed domain.lower");
    if (c.domain.n_x < 3) fail(ErrorKind::config, "domain", "domain.n_x must be at least 3");

    json age = section("age", {"horizon", "n_a"});
    if (age.contains("horizon")) {
        const json& hz = age["horizon"];
        if (hz.is_string() && (hz.get<std::string>() == "infinite" || hz.get<std::string>() == "inf")) {
            c.age.horizon.reset();
        } else {
            double v = detail::get_number(hz, "age.horizon");
            if (!(v > 0.0)) fail(ErrorKind::config, "age", "age.horizon must be positive or \"infinite\"");
            c.age.horizon = v;
        }
    }
    if (age.contains("n_a")) c.age.n_a = static_cast<std::size_t>(detail::get_number(age["n_a"], "age.n_a"));
    if (c.age.n_a < 3) fail(ErrorKind::config, "age", "age.n_a must be at least 3");

    json ker = section("kernel", {"profile", "radius", "gamma", "m", "diffusion_rate", "table"});
    std::string profile = ker.contains("profile") ? ker["profile"].get<std::string>() : "epanechnikov";
    double gamma = ker.contains("gamma") ? detail::get_number(ker["gamma"], "kernel.gamma") : 1.0;
    double m = ker.contains("m") ? detail::get_number(ker["m"], "kernel.m") : 0.0;
    double radius = ker.contains("radius") ? detail::get_number(ker["radius"], "kernel.radius") : 1.0;
    if (profile == "epanechnikov") {
        c.kernel = KernelSpec::epanechnikov_kernel(radius, gamma, m);
    } else if (profile == "constant") {
        c.kernel = KernelSpec::constant_kernel(radius, gamma, m);
    } else if (profile == "custom") {
        std::string tab = require(ker, "kernel", "table").get<std::string>();
        std::vector<double> z, j;
        std::istringstream in(tab);
        std::string line;
        bool header = false;
        while (std::getline(in, line)) {
            line = detail::trim(line);
            if (line.empty()) continue;
            if (!header) {
                header = true;
                if (line != "z,J") fail(ErrorKind::config, "kernel", "custom kernel table header must be 'z,J'");
                continue;
            }
            double zz = 0, jj = 0;
            if (std::sscanf(line.c_str(), "%lf,%lf", &zz, &jj) != 2) {
                fail(ErrorKind::config, "kernel", "custom kernel table row '" + line + "' is malformed");
            }
            z.push_back(zz);
            j.push_back(jj);
        }
        c.kernel = KernelSpec::custom_kernel(std::move(z), std::move(j), gamma, m);
    } else {
        fail(ErrorKind::config, "kernel", "kernel.profile must be epanechnikov, constant or custom");
    }
    c.kernel.check();
    c.diffusion_rate = detail::get_number(require(ker, "kernel", "diffusion_rate"), "kernel.diffusion_rate");
    if (!(c.diffusion_rate > 0.0)) fail(ErrorKind::config, "diffusion_rate", "diffusion_rate must be positive");

    json rat = section("rates", {"beta", "mu", "table", "beta_cutoff_age", "mu_lower_bound", "smooth_c2",
                                 "mu_radial_monotone"});
    if (rat.contains("table")) {
        if (rat.contains("beta") || rat.contains("mu")) {
            fail(ErrorKind::config, "rates", "give either rates.table or rates.beta/rates.mu, not both");
        }
        RateCsv csv = parse_rate_csv(rat["table"].get<std::string>());
        c.rates.beta_field = ScalarField(csv.beta);
        c.rates.mu_field = ScalarField(csv.mu);
    } else {
        c.rates.beta_field = ScalarField(require(rat, "rates", "beta").get<std::string>());
        c.rates.mu_field = ScalarField(require(rat, "rates", "mu").get<std::string>());
    }
    if (rat.contains("beta_cutoff_age")) {
        c.rates.beta_cutoff_age = detail::get_number(rat["beta_cutoff_age"], "rates.beta_cutoff_age");
    }
    if (rat.contains("mu_lower_bound")) {
        c.rates.mu_lower_bound = detail::get_number(rat["mu_lower_bound"], "rates.mu_lower_bound");
    }
    if (rat.contains("smooth_c2")) c.rates.smooth_c2 = rat["smooth_c2"].get<bool>();
    if (rat.contains("mu_radial_monotone")) c.rates.mu_radial_monotone = rat["mu_radial_monotone"].get<bool>();

    json sol = section("solver", {"root_tol", "power_iter_tol", "max_iters", "seed", "strict"});
    if (sol.contains("root_tol")) c.tol.root_tol = detail::get_number(sol["root_tol"], "solver.root_tol");
    if (sol.contains("power_iter_tol")) c.tol.power_iter_tol = detail::get_number(sol["power_iter_tol"], "solver.power_iter_tol");
    if (sol.contains("max_iters")) c.tol.max_iters = static_cast<int>(detail::get_number(sol["max_iters"], "solver.max_iters"));
    if (sol.contains("seed")) c.seed = static_cast<std::uint64_t>(detail::get_number(sol["seed"], "solver.seed"));
    if (sol.contains("strict")) c.strict = sol["strict"].get<bool>();
    if (!(c.tol.root_tol > 0.0) || !(c.tol.power_iter_tol > 0.0) || c.tol.max_iters < 1) {
        fail(ErrorKind::config, "solver", "solver tolerances must be positive");
    }
    return out;
}

inline LoadedScenario load_scenario_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
    json doc = parse_scenario_document(text);
    apply_overrides(doc, overrides);
    try {
        return scenario_from_json(doc);
    } catch (const json::exception& e) {
        fail(ErrorKind::config, "type", std::string("config value has the wrong type: ") + e.what());
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::config, "io", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline LoadedScenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {}) {
    return load_scenario_text(read_text_file(path), overrides);
}

/// Serializes a config back to the document model. Only expression-only or
/// table-only rate fields are representable.
inline json scenario_to_json(const ScenarioConfig& c) {
    json doc;
    doc["name"] = c.name;
    doc["domain"] = {{"lower", c.domain.lower}, {"upper", c.domain.upper}, {"n_x", c.domain.n_x}};
    doc["age"] = {{"n_a", c.age.n_a}};
    if (c.age.horizon) doc["age"]["horizon"] = *c.age.horizon;
    else doc["age"]["horizon"] = "infinite";
    json k;
    k["profile"] = to_string(c.kernel.profile);
    k["gamma"] = c.kernel.gamma;
    k["m"] = c.kernel.m;
    k["diffusion_rate"] = c.diffusion_rate;
    if (c.kernel.profile == KernelProfile::custom) {
        std::ostringstream t;
        t.precision(17);
        t << "z,J\n";
        for (std::size_t i = 0; i < c.kernel.table_z.size(); ++i) t << c.kernel.table_z[i] << ',' << c.kernel.table_j[i] << '\n';
        k["table"] = t.str();
    } else {
        k["radius"] = c.kernel.radius;
    }
    doc["kernel"] = k;
    json r;
    const auto& bf = c.rates.beta_field;
    const auto& mf = c.rates.mu_field;
    if (bf.addend || mf.addend) {
        fail(ErrorKind::config, "rates", "composite rate fields cannot be serialized");
    } else if (bf.expr && !bf.table && mf.expr && !mf.table) {
        r["beta"] = bf.expr->text();
        r["mu"] = mf.expr->text();
    } else if (!bf.expr && bf.table && !mf.expr && mf.table && bf.table->ages == mf.table->ages &&
               bf.table->positions == mf.table->positions) {
        r["table"] = format_rate_csv(*bf.table, *mf.table);
    } else {
        fail(ErrorKind::config, "rates", "composite rate fields cannot be serialized");
    }
    if (c.rates.beta_cutoff_age) r["beta_cutoff_age"] = *c.rates.beta_cutoff_age;
    if (c.rates.mu_lower_bound) r["mu_lower_bound"] = *c.rates.mu_lower_bound;
    r["smooth_c2"] = c.rates.smooth_c2;
    r["mu_radial_monotone"] = c.rates.mu_radial_monotone;
    doc["rates"] = r;
    doc["solver"] = {{"root_tol", c.tol.root_tol},
                     {"power_iter_tol", c.tol.power_iter_tol},
                     {"max_iters", c.tol.max_iters},
                     {"seed", c.seed},
                     {"strict", c.strict}};
    return doc;
}

/// TOML-style text for a config; numbers are written with 17 significant digits.
inline std::string scenario_to_toml(const ScenarioConfig& c) {
    json doc = scenario_to_json(c);
    std::ostringstream out;
    auto scalar = [](const json& v) {
        if (v.is_string()) {
            const auto& s = v.get_ref<const std::string&>();
            if (s.find('\n') != std::string::npos) return "\"\"\"\n" + s + "\"\"\"";
            return "\"" + s + "\"";
        }
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        if (v.is_number_float()) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
            std::string s = buf;
            if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
            return s;
        }
        return v.dump();
    };
    out << "name = " << scalar(doc["name"]) << "\n";
    for (const char* sec : {"domain", "age", "kernel", "rates", "solver"}) {
        out << "\n[" << sec << "]\n";
        for (auto it = doc[sec].begin(); it != doc[sec].end(); ++it) {
            out << it.key() << " = " << scalar(it.value()) << "\n";
        }
    }
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::config, "io", "cannot write '" + path + "'");
    out << text;
}

}  // namespace agespec
