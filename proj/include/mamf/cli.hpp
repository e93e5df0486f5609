#pragma once

// Batch front-end. A run is a command plus a JSON config:
//
//   mamf solve --config ball_uniform.json
//   mamf sweep --config sweep_gamma.json --threads 4
//   mamf verify-fs --n 1 --eps 0.25,1,4
//
// Exit codes: 0 success, 1 runtime failure, 2 validation error (reported with
// the JSON path), 3 solver divergence when fail_on_divergence is set.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace mamf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDivergence = 3;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool fail_on_divergence = false;
  std::optional<int> n;
  std::optional<std::vector<double>> epsilons;
  std::optional<std::string> output_dir;
};

/// Fills defaults and validates. The result is the resolved config embedded
/// in every output JSON. Throws ConfigError.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& input,
                              const Overrides& overrides);

/// Executes a resolved config, writing artifacts under its output_dir and a
/// short summary to `out`.
int execute(const nlohmann::json& config, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mamf::cli
