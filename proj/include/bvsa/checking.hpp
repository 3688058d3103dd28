#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bvsa/model.hpp"
#include "bvsa/sampler.hpp"

namespace bvsa {

// Product-limit survival estimate. `times`/`survival`/`at_risk` describe the
// drops: survival value just after each distinct event time.
struct KMCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<long long> at_risk;
  double max_time = 0.0;  // largest observed time, event or censoring
};

KMCurve km_estimate(const std::vector<double>& times,
                    const std::vector<int>& events);
double km_survival_at(const KMCurve& curve, double t);
// Area under the curve on [0, tau]; the last value is carried forward when
// tau exceeds the last event time.
double rmst(const KMCurve& curve, double tau);
// Inverse-CDF draw from the distribution the curve estimates: the smallest
// drop time whose survival is <= u, else max_time (the remaining mass).
double sample_from_km(const KMCurve& curve, double u);

// Two-sided posterior predictive p-value, ties counted in both tails:
// 2 min{ (#[rep >= obs]+1)/(R+1), (#[rep <= obs]+1)/(R+1) }, capped at 1.
// Resolution limit is 2/(R+1). Needs at least 50 replicates.
double ppp_value(double observed, const std::vector<double>& replicated);

struct CensusEntry {
  int arm;
  int g;
  double censor_time;
};

struct ReplicatedPatient {
  double y;
  int event;
  int ae;
};

struct ReplicatedDataset {
  long long draw_index;
  std::vector<ReplicatedPatient> patients;  // aligned with the census
};

// Posterior predictive replicates: each replicate picks one posterior draw,
// then per patient W ~ Bernoulli(p_ag) and T ~ Exponential(lambda_{a,W,g}).
// Censoring comes from the census entry's fixed time, or, when an arm's
// censoring-distribution curve is supplied, from a fresh draw off that curve.
std::vector<ReplicatedDataset> simulate_ppd(
    const std::vector<CellParams>& cells,
    const std::vector<CensusEntry>& census, int n_reps, std::uint64_t seed,
    const std::array<const KMCurve*, 2>& censor_curves = {nullptr, nullptr});

// One row per draw; columns are the 4G Poisson cells (a major, then w, then
// g) followed by the 2G binomial cells (a major, then g). Zero-exposure and
// zero-count cells contribute zero columns.
Eigen::MatrixXd pointwise_log_lik(const std::vector<CellParams>& cells,
                                  const SummaryTable& table);

// (DIC, p_D): DIC = -2 log L(posterior mean) + 2 p_D, with the plug-in taken
// as the mean of the unconstrained draws mapped back through the model, and
// p_D = 2 (log L(plug-in) - mean log L).
std::pair<double, double> dic(const JointModel& model, const DrawSet& draws,
                              const std::vector<CellParams>& cells,
                              const SummaryTable& table);
/// (WAIC, p_WAIC): WAIC = -2 (lppd - p_WAIC) over the same pointwise cells.
std::pair<double, double> waic(const std::vector<CellParams>& cells,
                               const SummaryTable& table);

// The underlying reductions, exposed for direct bookkeeping tests.
std::pair<double, double> dic_from_loglik(double loglik_at_mean,
                                          const Eigen::VectorXd& loglik_draws);
std::pair<double, double> waic_from_pointwise(const Eigen::MatrixXd& ll);

}  // namespace bvsa
