#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bvsa/model.hpp"

namespace bvsa {

struct MeasureConfig {
  double kappa0 = 3.0;   // horizon for the four-outcome probabilities, years
  double tau_h = 3.0;    // truncation for the utility composite, years
  double delta = 0.2;    // win-ratio indifference parameter
  std::array<double, 4> theta_weights{1.0, 0.8, 0.0, 0.0};
  std::vector<double> eta_b1{0.8, 0.5};  // one eta measure per preset
  double eta_b2 = 1.0;
  void validate() const;
};

// Joint survival S_ag(t,w) = exp(-lambda_awg t) p^w (1-p)^(1-w) and its
// companion F_ag(t,w) = (1 - exp(-lambda_awg t)) p^w (1-p)^(1-w).
double joint_survival(const CellParams& cp, int a, int g, double t, int w);
double joint_cdf(const CellParams& cp, int a, int g, double t, int w);

// Four-outcome treatment differences at horizon kappa0:
//   theta_g1 = S_1g(k,0) - S_0g(k,0)   (PE-free, AE-free survival)
//   theta_g2 = S_1g(k,1) - S_0g(k,1)   (PE-free with AE)
//   theta_g3 = F_1g(k,0) - F_0g(k,0)   (PE without AE)
//   theta_g4 = F_1g(k,1) - F_0g(k,1)   (PE with AE)
// They sum to zero exactly for every draw.
std::array<double, 4> theta_four(const CellParams& cp, int g, double kappa0);

double weighted_theta(const std::array<double, 4>& theta,
                      const std::array<double, 4>& b);

// Difference in expected utility E[H | a=1,g] - E[H | a=0,g] with
// E[H | a,g] = b1 p_ag (1-e^{-tau lambda_a1g})/lambda_a1g
//            + b2 (1-p_ag) (1-e^{-tau lambda_a0g})/lambda_a0g.
double eta_utility(const CellParams& cp, int g, double b1, double b2,
                   double tau_h);

// Win-ratio-style ordering probability contrast, closed form under the
// exponential/Bernoulli model; phi in [-1, 1], zero for identical arms at
// delta = 0.
double phi_ordering(const CellParams& cp, int g, double delta);

// Monte Carlo check of phi_ordering: simulates treatment-discordant pairs
// and applies the pairwise ordering rules directly (AE-discordant pairs use
// the (1+delta) margin; AE-concordant pairs compare event times).
struct PhiEstimate {
  double value;
  double se;
};
PhiEstimate phi_mc_oracle(const CellParams& cp, int g, double delta,
                          long long n_pairs, std::uint64_t seed);

// Lower/upper type-7 quantiles of a copy of xs.
double quantile(std::vector<double> xs, double prob);

struct SubgroupSummary {
  double mean = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  double prob_positive = 0.0;
};

struct MeasureBlock {
  std::string name;
  std::vector<SubgroupSummary> by_group;  // indexed g-1
  double overall = 0.0;                   // mean over g of posterior means
};

struct MeasureSet {
  MeasureConfig cfg;
  std::vector<MeasureBlock> blocks;
  const MeasureBlock& block(const std::string& name) const;
};

// Posterior summaries for theta1..theta4, theta_tilde, one eta per b1
// preset, and phi. Needs at least 100 draws.
MeasureSet summarize_measures(const std::vector<CellParams>& cells,
                              const FactorScheme& scheme,
                              const MeasureConfig& cfg);

// Forest-plot table: comment header lines (artifact version, config hash),
// then rows measure,subgroup,mean,lo95,hi95,overall,model_kind.
void write_forest_csv(const MeasureSet& set, const FactorScheme& scheme,
                      const std::string& model_kind,
                      const std::string& config_hash,
                      const std::filesystem::path& path);

nlohmann::json measures_to_json(const MeasureSet& set,
                                const FactorScheme& scheme,
                                const std::string& model_kind,
                                const std::string& config_hash);

}  // namespace bvsa
