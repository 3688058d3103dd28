#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bvsa/design.hpp"
#include "bvsa/measures.hpp"
#include "bvsa/model.hpp"
#include "bvsa/sampler.hpp"
#include "bvsa/trial_data.hpp"

namespace bvsa {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct CheckConfig {
  int replicates = 200;
  int overlay_draws = 50;
  double rmst_horizon = 3.0;
  // Administrative censoring horizon for replicates when only a summary
  // table is available (patient-level runs resample follow-up from the
  // per-arm censoring-distribution estimate instead).
  double censor_horizon = 4.0;
  void validate() const;
};

struct SimulateConfig {
  int n_per_cell = 100;
  std::array<std::array<std::vector<double>, 2>, 2> lambda;  // [arm][w][g-1]
  std::array<std::vector<double>, 2> p;                      // [arm][g-1]
  std::string censor_kind = "fixed";                         // fixed | uniform
  double censor_time = 4.0;
  double censor_lo = 0.0;
  double censor_hi = 0.0;
  void validate(int subgroups) const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> patients_path;
  std::optional<std::filesystem::path> summary_path;
  std::optional<FactorScheme> scheme;
  ModelSpec model{ModelKind::Saturated, ModelKind::Saturated};
  std::vector<ModelSpec> compare_models;  // defaults to saturated + additive
  Hyperparams hyper;
  ChainConfig chains;
  MeasureConfig measures;
  CheckConfig checks;
  std::optional<SimulateConfig> simulate;
  std::filesystem::path output_dir = "out";
  bool allow_nonconverged = false;

  std::string config_hash;            // FNV-1a of the config document bytes
  std::filesystem::path base_dir;     // directory the config was loaded from

  // Relative paths in the config resolve against the config file directory.
  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
};

// 16-hex-digit FNV-1a of a byte string.
std::string fnv1a_hex(const std::string& bytes);

// Strict parse: unknown keys anywhere in the document are errors that name
// the key; missing `seed` or an input selection other than exactly one of
// data.patients / data.summary is an error.
RunConfig config_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir,
                           const std::string& config_hash);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace bvsa
