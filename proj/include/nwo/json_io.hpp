#pragma once

#include <string>

#include "json.hpp"
#include "nwo/dynamics.hpp"
#include "nwo/input_function.hpp"
#include "nwo/model.hpp"
#include "nwo/odometer.hpp"
#include "nwo/synthesis.hpp"

namespace nwo {

using Json = nlohmann::json;

// Rationals travel as canonical "p/q" strings so round-trips are bit-exact.
Json rational_to_json(const Rational& r);
Rational rational_from_json(const Json& j, const std::string& context);

Json model_to_json(const PiecewiseModel& model);
// Re-derives gap bridges and validates every invariant, rejecting on the
// first violation with a machine-readable error code.
PiecewiseModel model_from_json(const Json& j);

Json family_to_json(const NiceFamily& family);
// Re-certifies the members against the model and cross-checks the stored
// fates exactly.
NiceFamily family_from_json(const PiecewiseModel& model, const Json& j);

Json outcome_to_json(const Rational& x, const TrajectoryOutcome& outcome);

Json input_function_to_json(const InputFunction& f);
InputFunction input_function_from_json(const Json& j);

Json cycle_to_json(const CyclicFamilyRef& cycle);
CyclicFamilyRef cycle_from_json(const Json& j);

Json tower_to_json(const RefinementTower& tower);
// Structural parse only; condition checking is verify_tower's job, so that
// corrupted towers load and fail verification rather than loading.
RefinementTower tower_from_json(const Json& j);

AlphaSequence alpha_from_json(const Json& j);
Json profile_to_json(const PrimeProfile& profile);

Json construction_log_to_json_lines(const ConstructionLog& log); // array of entries
std::string json_lines(const Json& array_of_entries);

Json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace nwo
