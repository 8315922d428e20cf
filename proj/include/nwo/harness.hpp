#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nwo/json_io.hpp"

namespace nwo {

struct Budgets {
    std::uint32_t max_steps = 0; // 0 = derived from the model (4 * pieces + 8)
    std::uint32_t rejection_retries = 200;
    std::uint64_t exhaustion_limit = 10'000'000;
};

struct ExperimentConfig {
    Rational M{2};
    Rational epsilon{1, 10};
    Rational delta{1, 10};
    Rational Delta{1, 100};
    Rational t{1, 3};
    std::uint32_t depth = 1;
    std::vector<std::uint32_t> multipliers{1};
    std::uint32_t grid_points = 101;
    std::uint64_t seed = 1;
    Budgets budgets;

    static ExperimentConfig from_json(const Json& j);
    Json to_json() const;
};

// Each command returns its report; pass == false maps to exit code 5.
// Input/validation/construction failures throw nwo::Error.
struct CommandResult {
    Json report;
    bool pass = true;
};

CommandResult cmd_approximate(const std::string& config_path, const std::string& input_path,
                              const std::string& out_dir);
CommandResult cmd_classify_grid(const std::string& config_path, const std::string& model_path,
                                const std::string& family_path, const std::string& out_dir);
CommandResult cmd_tower(const std::string& config_path, const std::string& input_path,
                        const std::string& out_dir);
CommandResult cmd_verify_odometer(const std::string& alpha_path,
                                  const std::optional<std::string>& beta_path,
                                  std::uint64_t primes_up_to, std::uint64_t depth_limit,
                                  const std::string& out_dir);
CommandResult cmd_contraction(const std::string& config_path, const std::string& piece_path,
                              std::uint32_t trials, std::uint32_t samples,
                              const std::optional<std::string>& scale_override,
                              const std::string& out_dir);

// Worker pool size: NEWTON_ODOMETER_THREADS when set, else hardware capped.
unsigned worker_count();

} // namespace nwo
