#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdslab/augmentation.hpp"

namespace mdslab {

inline constexpr const char *kToolVersion = "0.1.0";

/// Invalid configuration; field() names the offending key.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string &message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

enum class Subcommand { simulate, rate_fit, augment_demo, linear_process, lemma_check };

std::string to_string(Subcommand sub);
Subcommand parse_subcommand(const std::string &s);

struct ExperimentConfig {
  Subcommand subcommand = Subcommand::simulate;
  std::string model;
  std::vector<std::size_t> n_grid;
  std::size_t reps = 0;     // replications; paths for augment-demo
  std::uint64_t seed = 0;
  double delta_conf = 0.01;
  std::string out;
  bool plot = false;
  NormMode mode = NormMode::Linf;
  int workers = 0;          // 0: every processor
  std::string input;        // rate-fit: CSV with n and ks columns
  std::string coeffs;       // linear-process
  double p = 0.0;           // linear-process moment exponent, inf allowed
  std::size_t joints = 0;   // lemma-check
};

/// Flat key=value lines; '#' starts a comment, blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_config_text(const std::string &text);
KeyValues read_config_file(const std::string &path);

/// "16,32,64" or "2^4..2^10".
std::vector<std::size_t> parse_n_grid(const std::string &s);

/// Defaults, overridden by the file, overridden by flags; then validated.
/// Throws ConfigError.
ExperimentConfig resolve_config(Subcommand sub, const KeyValues &file, const KeyValues &flags);

/// The full effective configuration as ordered key=value pairs.
std::vector<std::pair<std::string, std::string>> echo_config(const ExperimentConfig &cfg);

struct RunResult {
  int exit_code = 0; // 0 ok, 3 augmentation failures
  std::string message;
  std::vector<std::string> files; // written, relative to cfg.out
};

/// Runs a validated configuration, writing every artifact under cfg.out.
/// Progress and plot warnings go to `log`.
RunResult run_experiment(const ExperimentConfig &cfg, std::ostream &log);

/// Command-line entry point. Exit codes: 0 ok, 1 runtime failure, 2 invalid
/// configuration, 3 augmentation failures.
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace mdslab
