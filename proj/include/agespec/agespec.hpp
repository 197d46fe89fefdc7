#pragma once

#include <agespec/acceptance.hpp>
#include <agespec/config_io.hpp>
#include <agespec/criteria.hpp>
#include <agespec/error.hpp>
#include <agespec/evolution.hpp>
#include <agespec/limits.hpp>
#include <agespec/report_io.hpp>
#include <agespec/simulate.hpp>
#include <agespec/spectral.hpp>
#include <agespec/validation.hpp>
