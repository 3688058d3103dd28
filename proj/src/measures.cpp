#include "bvsa/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bvsa/rng.hpp"
#include "bvsa/version.hpp"

namespace bvsa {

namespace {

void check_subgroup(const CellParams& cp, int g) {
  if (g < 1 || g > cp.subgroups()) {
    throw std::out_of_range("subgroup index out of range");
  }
}

// (1 - exp(-t*lambda)) / lambda, continuous at lambda = 0.
double survival_mass(double lambda, double t) {
  if (lambda == 0.0) return t;
  return -std::expm1(-t * lambda) / lambda;
}

double expected_utility(const CellParams& cp, int a, int g, double b1,
                        double b2, double tau_h) {
  const double p = cp.p[a][g - 1];
  const double l1 = cp.lambda[a][1][g - 1];
  const double l0 = cp.lambda[a][0][g - 1];
  return b1 * p * survival_mass(l1, tau_h) +
         b2 * (1.0 - p) * survival_mass(l0, tau_h);
}

}  // namespace

void MeasureConfig::validate() const {
  if (!(kappa0 > 0.0) || !std::isfinite(kappa0)) {
    throw std::invalid_argument("kappa0 must be positive");
  }
  if (!(tau_h > 0.0) || !std::isfinite(tau_h)) {
    throw std::invalid_argument("tau_h must be positive");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("delta must be nonnegative");
  }
  for (double b : theta_weights) {
    if (!std::isfinite(b)) throw std::invalid_argument("theta weights must be finite");
  }
  if (eta_b1.empty()) throw std::invalid_argument("at least one eta b1 preset required");
  for (double b : eta_b1) {
    if (!std::isfinite(b)) throw std::invalid_argument("eta weights must be finite");
  }
  if (!std::isfinite(eta_b2)) throw std::invalid_argument("eta weights must be finite");
}

double joint_survival(const CellParams& cp, int a, int g, double t, int w) {
  check_subgroup(cp, g);
  if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
  const double p = cp.p[a][g - 1];
  const double pw = (w == 1) ? p : (1.0 - p);
  return std::exp(-cp.lambda[a][w][g - 1] * t) * pw;
}

double joint_cdf(const CellParams& cp, int a, int g, double t, int w) {
  check_subgroup(cp, g);
  if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
  const double p = cp.p[a][g - 1];
  const double pw = (w == 1) ? p : (1.0 - p);
  return -std::expm1(-cp.lambda[a][w][g - 1] * t) * pw;
}

std::array<double, 4> theta_four(const CellParams& cp, int g, double kappa0) {
  if (!(kappa0 > 0.0)) throw std::invalid_argument("kappa0 must be positive");
  return {joint_survival(cp, 1, g, kappa0, 0) - joint_survival(cp, 0, g, kappa0, 0),
          joint_survival(cp, 1, g, kappa0, 1) - joint_survival(cp, 0, g, kappa0, 1),
          joint_cdf(cp, 1, g, kappa0, 0) - joint_cdf(cp, 0, g, kappa0, 0),
          joint_cdf(cp, 1, g, kappa0, 1) - joint_cdf(cp, 0, g, kappa0, 1)};
}

double weighted_theta(const std::array<double, 4>& theta,
                      const std::array<double, 4>& b) {
  double s = 0.0;
  for (int j = 0; j < 4; ++j) s += b[j] * theta[j];
  return s;
}

double eta_utility(const CellParams& cp, int g, double b1, double b2,
                   double tau_h) {
  check_subgroup(cp, g);
  if (!(tau_h > 0.0)) throw std::invalid_argument("tau_h must be positive");
  return expected_utility(cp, 1, g, b1, b2, tau_h) -
         expected_utility(cp, 0, g, b1, b2, tau_h);
}

double phi_ordering(const CellParams& cp, int g, double delta) {
  check_subgroup(cp, g);
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
  const double l00 = cp.lambda[0][0][g - 1];  // standard arm, no AE
  const double l01 = cp.lambda[0][1][g - 1];  // standard arm, AE
  const double l10 = cp.lambda[1][0][g - 1];  // intensive arm, no AE
  const double l11 = cp.lambda[1][1][g - 1];  // intensive arm, AE
  const double p0 = cp.p[0][g - 1];
  const double p1 = cp.p[1][g - 1];
  const double c = 1.0 + delta;
  // Win probabilities for the intensive-arm patient in each AE configuration:
  // AE-discordant pairs require the AE-bearing patient to survive c times
  // longer; AE-concordant pairs compare event times directly.
  const double win_10 = l00 / (c * l11 + l00);        // W_i=1, W_j=0
  const double win_01 = c * l01 / (l10 + c * l01);    // W_i=0, W_j=1
  const double win_00 = l00 / (l10 + l00);            // W_i=0, W_j=0
  const double win_11 = l01 / (l11 + l01);            // W_i=1, W_j=1
  const double win = p1 * (1.0 - p0) * win_10 + (1.0 - p1) * p0 * win_01 +
                     (1.0 - p1) * (1.0 - p0) * win_00 + p1 * p0 * win_11;
  return 2.0 * win - 1.0;
}

PhiEstimate phi_mc_oracle(const CellParams& cp, int g, double delta,
                          long long n_pairs, std::uint64_t seed) {
  check_subgroup(cp, g);
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be positive");
  Rng rng(seed);
  const double p0 = cp.p[0][g - 1];
  const double p1 = cp.p[1][g - 1];
  long long wins = 0;
  for (long long k = 0; k < n_pairs; ++k) {
    const int wi = rng.bernoulli(p1) ? 1 : 0;  // intensive-arm patient i
    const int wj = rng.bernoulli(p0) ? 1 : 0;  // standard-arm patient j
    const double ti = rng.exponential(cp.lambda[1][wi][g - 1]);
    const double tj = rng.exponential(cp.lambda[0][wj][g - 1]);
    bool win;
    if (wi == 1 && wj == 0) {
      win = ti > tj * (1.0 + delta);
    } else if (wi == 0 && wj == 1) {
      win = !(tj > ti * (1.0 + delta));
    } else {
      win = ti > tj;
    }
    if (win) ++wins;
  }
  const double phat = static_cast<double>(wins) / static_cast<double>(n_pairs);
  PhiEstimate est;
  est.value = 2.0 * phat - 1.0;
  est.se = 2.0 * std::sqrt(phat * (1.0 - phat) / static_cast<double>(n_pairs));
  return est;
}

double quantile(std::vector<double> xs, double prob) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw std::invalid_argument("quantile probability outside [0,1]");
  }
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

const MeasureBlock& MeasureSet::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("no measure named " + name);
}

namespace {

SubgroupSummary summarize_draws(const std::vector<double>& xs) {
  SubgroupSummary s;
  double mean = 0.0;
  long long pos = 0;
  for (double x : xs) {
    mean += x;
    if (x > 0.0) ++pos;
  }
  s.mean = mean / static_cast<double>(xs.size());
  s.lo95 = quantile(xs, 0.025);
  s.hi95 = quantile(xs, 0.975);
  s.prob_positive = static_cast<double>(pos) / static_cast<double>(xs.size());
  return s;
}

std::string format_number(double x) { return nlohmann::json(x).dump(); }

}  // namespace

MeasureSet summarize_measures(const std::vector<CellParams>& cells,
                              const FactorScheme& scheme,
                              const MeasureConfig& cfg) {
  cfg.validate();
  if (cells.size() < 100) {
    throw std::invalid_argument("measure summaries need at least 100 draws");
  }
  const int G = scheme.subgroup_count();
  const std::size_t S = cells.size();

  std::vector<std::string> names{"theta1", "theta2", "theta3", "theta4",
                                 "theta_tilde"};
  for (double b1 : cfg.eta_b1) {
    names.push_back("eta(b1=" + format_number(b1) + ")");
  }
  names.emplace_back("phi");

  MeasureSet set;
  set.cfg = cfg;
  std::vector<double> buffer(S);
  for (std::size_t mi = 0; mi < names.size(); ++mi) {
    const std::string& name = names[mi];
    MeasureBlock block;
    block.name = name;
    double overall = 0.0;
    for (int g = 1; g <= G; ++g) {
      for (std::size_t s = 0; s < S; ++s) {
        const CellParams& cp = cells[s];
        double value = 0.0;
        if (mi < 4) {
          value = theta_four(cp, g, cfg.kappa0)[mi];
        } else if (name == "theta_tilde") {
          value = weighted_theta(theta_four(cp, g, cfg.kappa0),
                                 cfg.theta_weights);
        } else if (name == "phi") {
          value = phi_ordering(cp, g, cfg.delta);
        } else {
          value = eta_utility(cp, g, cfg.eta_b1[mi - 5], cfg.eta_b2, cfg.tau_h);
        }
        buffer[s] = value;
      }
      block.by_group.push_back(summarize_draws(buffer));
      overall += block.by_group.back().mean;
    }
    block.overall = overall / static_cast<double>(G);
    set.blocks.push_back(std::move(block));
  }
  return set;
}

void write_forest_csv(const MeasureSet& set, const FactorScheme& scheme,
                      const std::string& model_kind,
                      const std::string& config_hash,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open forest table for writing: " +
                             path.string());
  }
  out << "# " << kArtifactName << " " << kArtifactVersion << "\n";
  out << "# config_hash=" << config_hash << "\n";
  out << "measure,subgroup,mean,lo95,hi95,overall,model_kind\n";
  for (const auto& block : set.blocks) {
    for (std::size_t g = 0; g < block.by_group.size(); ++g) {
      const auto& s = block.by_group[g];
      out << block.name << "," << scheme.subgroup_label(static_cast<int>(g) + 1)
          << "," << format_number(s.mean) << "," << format_number(s.lo95)
          << "," << format_number(s.hi95) << "," << format_number(block.overall)
          << "," << model_kind << "\n";
    }
  }
  if (!out) {
    throw std::runtime_error("failed while writing forest table: " +
                             path.string());
  }
}

nlohmann::json measures_to_json(const MeasureSet& set,
                                const FactorScheme& scheme,
                                const std::string& model_kind,
                                const std::string& config_hash) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& block : set.blocks) {
    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t g = 0; g < block.by_group.size(); ++g) {
      const auto& s = block.by_group[g];
      groups.push_back({{"subgroup", static_cast<int>(g) + 1},
                        {"label", scheme.subgroup_label(static_cast<int>(g) + 1)},
                        {"mean", s.mean},
                        {"lo95", s.lo95},
                        {"hi95", s.hi95},
                        {"prob_positive", s.prob_positive}});
    }
    blocks.push_back({{"measure", block.name},
                      {"overall", block.overall},
                      {"subgroups", groups}});
  }
  return nlohmann::json{
      {"format", "bvsa-measures/1"},
      {"artifact", {{"name", kArtifactName}, {"version", kArtifactVersion}}},
      {"config_hash", config_hash},
      {"model", model_kind},
      {"settings",
       {{"kappa0", set.cfg.kappa0},
        {"tau_h", set.cfg.tau_h},
        {"delta", set.cfg.delta},
        {"theta_weights", set.cfg.theta_weights},
        {"eta_b1", set.cfg.eta_b1},
        {"eta_b2", set.cfg.eta_b2}}},
      {"measures", blocks}};
}

}  // namespace bvsa
