#include "bvsa/checking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bvsa/rng.hpp"

namespace bvsa {

KMCurve km_estimate(const std::vector<double>& times,
                    const std::vector<int>& events) {
  if (times.empty()) throw std::invalid_argument("empty survival sample");
  if (times.size() != events.size()) {
    throw std::invalid_argument("times and event flags differ in length");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) {
      throw std::invalid_argument("survival times must be nonnegative");
    }
    if (events[i] != 0 && events[i] != 1) {
      throw std::invalid_argument("event flags must be 0 or 1");
    }
  }
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return times[a] < times[b];
  });

  KMCurve curve;
  curve.max_time = times[order.back()];
  double s = 1.0;
  const std::size_t n = order.size();
  std::size_t i = 0;
  while (i < n) {
    const double t = times[order[i]];
    const long long at_risk = static_cast<long long>(n - i);
    long long d = 0;
    std::size_t j = i;
    while (j < n && times[order[j]] == t) {
      d += events[order[j]];
      ++j;
    }
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.survival.push_back(s);
      curve.at_risk.push_back(at_risk);
    }
    i = j;
  }
  return curve;
}

double km_survival_at(const KMCurve& curve, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("time must be nonnegative");
  const auto it =
      std::upper_bound(curve.times.begin(), curve.times.end(), t);
  if (it == curve.times.begin()) return 1.0;
  return curve.survival[static_cast<std::size_t>(it - curve.times.begin()) - 1];
}

double rmst(const KMCurve& curve, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  double area = 0.0;
  double prev_t = 0.0;
  double prev_s = 1.0;
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    if (curve.times[k] >= tau) break;
    area += prev_s * (curve.times[k] - prev_t);
    prev_t = curve.times[k];
    prev_s = curve.survival[k];
  }
  area += prev_s * (tau - prev_t);
  return area;
}

double sample_from_km(const KMCurve& curve, double u) {
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    if (curve.survival[k] <= u) return curve.times[k];
  }
  return curve.max_time;
}

double ppp_value(double observed, const std::vector<double>& replicated) {
  const std::size_t r = replicated.size();
  if (r < 50) {
    throw std::invalid_argument(
        "posterior predictive p-value needs at least 50 replicates");
  }
  long long ge = 0, le = 0;
  for (double x : replicated) {
    if (x >= observed) ++ge;
    if (x <= observed) ++le;
  }
  const double denom = static_cast<double>(r) + 1.0;
  const double p = 2.0 * std::min((static_cast<double>(ge) + 1.0) / denom,
                                  (static_cast<double>(le) + 1.0) / denom);
  return std::min(p, 1.0);
}

std::vector<ReplicatedDataset> simulate_ppd(
    const std::vector<CellParams>& cells,
    const std::vector<CensusEntry>& census, int n_reps, std::uint64_t seed,
    const std::array<const KMCurve*, 2>& censor_curves) {
  if (cells.empty()) throw std::invalid_argument("empty draw set");
  if (n_reps < 1) throw std::invalid_argument("replicate count must be positive");
  const int G = cells[0].subgroups();
  for (const auto& e : census) {
    if (e.arm < 0 || e.arm > 1) throw std::invalid_argument("census arm must be 0 or 1");
    if (e.g < 1 || e.g > G) throw std::invalid_argument("census subgroup out of range");
    if (std::isnan(e.censor_time) || e.censor_time < 0.0) {
      throw std::invalid_argument("census censor time must be nonnegative");
    }
  }

  std::vector<ReplicatedDataset> reps;
  reps.reserve(n_reps);
  for (int r = 0; r < n_reps; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    ReplicatedDataset rep;
    rep.draw_index = static_cast<long long>(
        rng.below(static_cast<std::uint64_t>(cells.size())));
    const CellParams& cp = cells[static_cast<std::size_t>(rep.draw_index)];
    rep.patients.reserve(census.size());
    for (const auto& e : census) {
      ReplicatedPatient pat;
      const double p = cp.p[e.arm][e.g - 1];
      const int w = rng.bernoulli(p) ? 1 : 0;
      const double t = rng.exponential(cp.lambda[e.arm][w][e.g - 1]);
      double c = e.censor_time;
      if (censor_curves[e.arm] != nullptr) {
        c = sample_from_km(*censor_curves[e.arm], rng.uniform());
      }
      pat.ae = w;
      pat.event = t <= c ? 1 : 0;
      pat.y = std::min(t, c);
      rep.patients.push_back(pat);
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

Eigen::MatrixXd pointwise_log_lik(const std::vector<CellParams>& cells,
                                  const SummaryTable& table) {
  if (cells.empty()) throw std::invalid_argument("empty draw set");
  const int G = table.scheme().subgroup_count();
  if (cells[0].subgroups() != G) {
    throw std::invalid_argument("cell parameter dimension mismatch");
  }
  const std::size_t S = cells.size();
  Eigen::MatrixXd ll(S, 6 * G);
  for (std::size_t s = 0; s < S; ++s) {
    const CellParams& cp = cells[s];
    int col = 0;
    for (int a = 0; a < 2; ++a) {
      for (int w = 0; w < 2; ++w) {
        for (int g = 1; g <= G; ++g, ++col) {
          const double U = table.u(a, w, g);
          const double D = static_cast<double>(table.d(a, w, g));
          if (!(U > 0.0)) {
            if (D > 0.0) {
              throw std::invalid_argument(
                  "events observed in a cell with zero exposure");
            }
            ll(s, col) = 0.0;
            continue;
          }
          const double log_mean = cp.log_lambda[a][w][g - 1] + std::log(U);
          ll(s, col) = D * log_mean - std::exp(std::min(log_mean, 700.0)) -
                       std::lgamma(D + 1.0);
        }
      }
    }
    for (int a = 0; a < 2; ++a) {
      for (int g = 1; g <= G; ++g, ++col) {
        const double n = static_cast<double>(table.n(a, g));
        const double V = static_cast<double>(table.v(a, g));
        if (n <= 0.0) {
          ll(s, col) = 0.0;
          continue;
        }
        const double lc = std::lgamma(n + 1.0) - std::lgamma(V + 1.0) -
                          std::lgamma(n - V + 1.0);
        ll(s, col) = lc + V * cp.log_p[a][g - 1] +
                     (n - V) * cp.log_1mp[a][g - 1];
      }
    }
  }
  return ll;
}

std::pair<double, double> dic_from_loglik(double loglik_at_mean,
                                          const Eigen::VectorXd& loglik_draws) {
  if (loglik_draws.size() < 100) {
    throw std::invalid_argument("information criteria need at least 100 draws");
  }
  const double mean_ll = loglik_draws.mean();
  const double p_d = 2.0 * (loglik_at_mean - mean_ll);
  const double dic_value = -2.0 * loglik_at_mean + 2.0 * p_d;
  return {dic_value, p_d};
}

std::pair<double, double> waic_from_pointwise(const Eigen::MatrixXd& ll) {
  const Eigen::Index S = ll.rows();
  if (S < 100) {
    throw std::invalid_argument("information criteria need at least 100 draws");
  }
  double lppd = 0.0;
  double p_waic = 0.0;
  const double log_s = std::log(static_cast<double>(S));
  for (Eigen::Index k = 0; k < ll.cols(); ++k) {
    const double m = ll.col(k).maxCoeff();
    double sum_exp = 0.0;
    for (Eigen::Index s = 0; s < S; ++s) sum_exp += std::exp(ll(s, k) - m);
    lppd += m + std::log(sum_exp) - log_s;
    const double mean = ll.col(k).mean();
    double var = 0.0;
    for (Eigen::Index s = 0; s < S; ++s) {
      const double d = ll(s, k) - mean;
      var += d * d;
    }
    var /= static_cast<double>(S - 1);
    p_waic += var;
  }
  return {-2.0 * (lppd - p_waic), p_waic};
}

std::pair<double, double> dic(const JointModel& model, const DrawSet& draws,
                              const std::vector<CellParams>& cells,
                              const SummaryTable& table) {
  const long long total = draws.total_draws();
  if (total < 100) {
    throw std::invalid_argument("information criteria need at least 100 draws");
  }
  if (static_cast<long long>(cells.size()) != total) {
    throw std::invalid_argument("draw and cell counts differ");
  }
  Eigen::VectorXd mean_u = Eigen::VectorXd::Zero(draws.dim);
  for (int c = 0; c < draws.chains(); ++c) {
    mean_u += draws.chain_draws[c].colwise().sum().transpose();
  }
  mean_u /= static_cast<double>(total);
  const double ll_at_mean = JointModel::log_likelihood(
      model.cell_params(model.to_constrained(mean_u)), table);
  const Eigen::MatrixXd pw = pointwise_log_lik(cells, table);
  const Eigen::VectorXd ll_draws = pw.rowwise().sum();
  return dic_from_loglik(ll_at_mean, ll_draws);
}

std::pair<double, double> waic(const std::vector<CellParams>& cells,
                               const SummaryTable& table) {
  return waic_from_pointwise(pointwise_log_lik(cells, table));
}

}  // namespace bvsa
