#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace bvsa {

// Log-density a chain samples from. Implementations must be safe to call
// concurrently from several chains.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;
  virtual int dim() const = 0;
  virtual double log_density(const Eigen::VectorXd& u) const = 0;
};

struct ChainConfig {
  int chains = 4;
  int iterations = 1500;
  int warmup = 500;
  std::uint64_t seed = 0;
  double target_accept = 0.30;
  double init_jitter = 0.1;
  int max_init_tries = 100;
  int kept() const { return iterations - warmup; }
  void validate() const;
};

// Acceptance bookkeeping for one proposal block of one chain.
struct BlockStats {
  long long warm_accepts = 0;
  long long warm_proposals = 0;
  long long kept_accepts = 0;
  long long kept_proposals = 0;
  double final_step = 0.0;
  double warm_rate() const {
    return warm_proposals > 0 ? static_cast<double>(warm_accepts) / warm_proposals : 0.0;
  }
  double kept_rate() const {
    return kept_proposals > 0 ? static_cast<double>(kept_accepts) / kept_proposals : 0.0;
  }
};

struct DrawSet {
  ChainConfig cfg;
  int dim = 0;
  std::vector<std::vector<int>> blocks;
  std::vector<Eigen::MatrixXd> chain_draws;        // per chain: kept x dim
  std::vector<Eigen::VectorXd> chain_lp;           // per chain: kept
  std::vector<std::vector<BlockStats>> block_stats;  // [chain][block]

  int chains() const { return static_cast<int>(chain_draws.size()); }
  int kept() const { return chains() > 0 ? static_cast<int>(chain_draws[0].rows()) : 0; }
  long long total_draws() const { return static_cast<long long>(chains()) * kept(); }
  // Draws flattened chain-major: index = chain * kept + i.
  Eigen::VectorXd draw(long long index) const;
  double lp(long long index) const;
  // FNV-1a over the raw bytes of all draws and lp values, for reproducibility checks.
  std::uint64_t content_hash() const;
  // Kept draws of one coordinate, one vector per chain (diagnostic input form).
  std::vector<std::vector<double>> coordinate(int j) const;
  std::vector<std::vector<double>> lp_series() const;
};

// Blockwise adaptive random-walk Metropolis. Each block carries its own
// proposal scale (Robbins-Monro tuned toward cfg.target_accept) and proposal
// covariance (running estimate of the block's posterior covariance, Cholesky
// refreshed periodically). Both adapt during warmup only and are frozen for
// the kept phase. Chains run in parallel, each on its own deterministic
// stream, so results are bit-identical for identical (cfg, init, target).
//
// `blocks` must partition [0, dim); an empty list means one block with every
// coordinate. `init` is jittered per chain; chains whose jittered start has
// a non-finite log density redraw up to cfg.max_init_tries times.
DrawSet run_chains(const TargetDensity& target, const ChainConfig& cfg,
                   const Eigen::VectorXd& init,
                   const std::vector<std::vector<int>>& blocks = {});

// Split-chain potential scale reduction factor. Chains are split in half, so
// it needs at least 2 chains of at least 4 draws. Returns NaN (undefined)
// when every half-chain is constant; +infinity when chains are constant at
// distinct values.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Multi-chain effective sample size from paired autocovariance sums,
// truncated at the first negative pair (Geyer initial positive sequence) and
// clipped at the total number of draws. NaN for constant sequences.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

struct CoordinateDiagnostic {
  std::string name;
  double rhat = 0.0;
  double ess = 0.0;
};

struct ConvergenceReport {
  std::vector<CoordinateDiagnostic> coords;  // parameters, then "lp"
  std::vector<std::vector<double>> block_warm_accept;  // [chain][block]
  std::vector<std::vector<double>> block_kept_accept;
  std::vector<std::string> warnings;
  double max_rhat = 0.0;  // over coordinates with defined R-hat
  double min_ess = 0.0;
  bool converged(double rhat_threshold = 1.05) const;
  nlohmann::json to_json() const;
};

ConvergenceReport diagnose(const DrawSet& draws,
                           const std::vector<std::string>& names);

}  // namespace bvsa
