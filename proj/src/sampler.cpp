#include "bvsa/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <thread>

#include "bvsa/rng.hpp"

namespace bvsa {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// One proposal block: indices into the state vector, a tuned log step size,
// a proposal Cholesky factor, and running moments of the visited states.
struct BlockSampler {
  std::vector<int> idx;
  double log_step;
  Eigen::MatrixXd chol;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;
  long long count = 0;
  long long accepted = 0;
  BlockStats stats;

  explicit BlockSampler(std::vector<int> indices) : idx(std::move(indices)) {
    const int d = size();
    log_step = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    chol = Eigen::MatrixXd::Identity(d, d);
    mean = Eigen::VectorXd::Zero(d);
    m2 = Eigen::MatrixXd::Zero(d, d);
  }

  int size() const { return static_cast<int>(idx.size()); }

  void update_moments(const Eigen::VectorXd& u) {
    Eigen::VectorXd x(size());
    for (int k = 0; k < size(); ++k) x[k] = u[idx[k]];
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2.noalias() += delta * (x - mean).transpose();
  }

  // Replace the proposal shape with the Cholesky factor of the running
  // covariance once enough distinct states have been seen. A small ridge
  // keeps the factorization defined when coordinates are nearly collinear.
  void refresh_chol() {
    const int d = size();
    if (count < 2 * d + 4 || accepted < 2 * d) return;
    const Eigen::MatrixXd cov = m2 / static_cast<double>(count - 1);
    const double scale = cov.diagonal().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) return;
    double ridge = 1e-6 * scale + 1e-12;
    for (int tries = 0; tries < 5; ++tries) {
      Eigen::LLT<Eigen::MatrixXd> llt(
          cov + ridge * Eigen::MatrixXd::Identity(d, d));
      if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
        return;
      }
      ridge *= 100.0;
    }
  }
};

void run_one_chain(const TargetDensity& target, const ChainConfig& cfg,
                   const Eigen::VectorXd& init,
                   const std::vector<std::vector<int>>& blocks,
                   int chain_index, Eigen::MatrixXd& out_draws,
                   Eigen::VectorXd& out_lp, std::vector<BlockStats>& out_stats,
                   std::string& error) {
  try {
    Rng rng(cfg.seed ^ static_cast<std::uint64_t>(chain_index));
    const int dim = target.dim();
    Eigen::VectorXd u(dim);
    double lp = -kInf;
    bool started = false;
    for (int t = 0; t < cfg.max_init_tries && !started; ++t) {
      for (int j = 0; j < dim; ++j) {
        u[j] = init[j] + cfg.init_jitter * rng.normal();
      }
      lp = target.log_density(u);
      started = std::isfinite(lp);
    }
    if (!started) {
      throw std::runtime_error(
          "log density non-finite at every initialization attempt");
    }

    std::vector<BlockSampler> samplers;
    samplers.reserve(blocks.size());
    for (const auto& b : blocks) samplers.emplace_back(b);

    Eigen::VectorXd v(dim), z, step;
    for (int t = 0; t < cfg.iterations; ++t) {
      const bool warm = t < cfg.warmup;
      for (auto& b : samplers) {
        const int d = b.size();
        z.resize(d);
        for (int k = 0; k < d; ++k) z[k] = rng.normal();
        step = b.chol.triangularView<Eigen::Lower>() * z;
        step *= std::exp(b.log_step);
        v = u;
        for (int k = 0; k < d; ++k) v[b.idx[k]] += step[k];
        const double lp_new = target.log_density(v);
        double alpha = lp_new >= lp ? 1.0 : std::exp(lp_new - lp);
        if (!(alpha > 0.0)) alpha = 0.0;  // also catches NaN
        const bool accept = rng.uniform() < alpha;
        if (accept) {
          u.swap(v);
          lp = lp_new;
          ++b.accepted;
        }
        if (warm) {
          ++b.stats.warm_proposals;
          if (accept) ++b.stats.warm_accepts;
          b.log_step +=
              std::pow(t + 1.0, -0.6) * (alpha - cfg.target_accept);
          b.update_moments(u);
          if (t + 1 >= 100 && (t + 1) % 25 == 0) b.refresh_chol();
        } else {
          ++b.stats.kept_proposals;
          if (accept) ++b.stats.kept_accepts;
        }
      }
      if (!warm) {
        out_draws.row(t - cfg.warmup) = u.transpose();
        out_lp[t - cfg.warmup] = lp;
      }
    }
    out_stats.clear();
    for (auto& b : samplers) {
      b.stats.final_step = std::exp(b.log_step);
      out_stats.push_back(b.stats);
    }
  } catch (const std::exception& e) {
    error = e.what();
  }
}

std::uint64_t fnv1a_update(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// Mean autocovariance across chains at a given lag, denominator n.
double mean_autocov(const std::vector<std::vector<double>>& chains,
                    const std::vector<double>& means, std::size_t n, int lag) {
  double total = 0.0;
  for (std::size_t j = 0; j < chains.size(); ++j) {
    const double* x = chains[j].data();
    const double m = means[j];
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      s += (x[i] - m) * (x[i + lag] - m);
    }
    total += s / static_cast<double>(n);
  }
  return total / static_cast<double>(chains.size());
}

}  // namespace

void ChainConfig::validate() const {
  if (chains < 2) throw std::invalid_argument("chains must be at least 2");
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (warmup < 0) throw std::invalid_argument("warmup must be nonnegative");
  if (warmup >= iterations) {
    throw std::invalid_argument("warmup must be smaller than iterations");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target_accept must lie in (0,1)");
  }
  if (!(init_jitter >= 0.0) || !std::isfinite(init_jitter)) {
    throw std::invalid_argument("init_jitter must be nonnegative");
  }
  if (max_init_tries < 1) {
    throw std::invalid_argument("max_init_tries must be positive");
  }
}

Eigen::VectorXd DrawSet::draw(long long index) const {
  const int k = kept();
  const int c = static_cast<int>(index / k);
  const int i = static_cast<int>(index % k);
  return chain_draws[c].row(i).transpose();
}

double DrawSet::lp(long long index) const {
  const int k = kept();
  return chain_lp[index / k][index % k];
}

std::uint64_t DrawSet::content_hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (int c = 0; c < chains(); ++c) {
    for (int i = 0; i < kept(); ++i) {
      for (int j = 0; j < dim; ++j) {
        const double x = chain_draws[c](i, j);
        h = fnv1a_update(h, &x, sizeof(x));
      }
      const double l = chain_lp[c][i];
      h = fnv1a_update(h, &l, sizeof(l));
    }
  }
  return h;
}

std::vector<std::vector<double>> DrawSet::coordinate(int j) const {
  std::vector<std::vector<double>> out(chains());
  for (int c = 0; c < chains(); ++c) {
    out[c].resize(kept());
    for (int i = 0; i < kept(); ++i) out[c][i] = chain_draws[c](i, j);
  }
  return out;
}

std::vector<std::vector<double>> DrawSet::lp_series() const {
  std::vector<std::vector<double>> out(chains());
  for (int c = 0; c < chains(); ++c) {
    out[c].assign(chain_lp[c].data(), chain_lp[c].data() + kept());
  }
  return out;
}

DrawSet run_chains(const TargetDensity& target, const ChainConfig& cfg,
                   const Eigen::VectorXd& init,
                   const std::vector<std::vector<int>>& blocks) {
  cfg.validate();
  const int dim = target.dim();
  if (dim < 1) throw std::invalid_argument("target dimension must be positive");
  if (init.size() != dim) {
    throw std::invalid_argument("dimension mismatch between init and target");
  }
  if (!init.allFinite()) {
    throw std::invalid_argument("initial point must be finite");
  }
  std::vector<std::vector<int>> blks = blocks;
  if (blks.empty()) {
    blks.emplace_back(dim);
    for (int j = 0; j < dim; ++j) blks[0][j] = j;
  }
  std::vector<int> seen(dim, 0);
  for (const auto& b : blks) {
    if (b.empty()) throw std::invalid_argument("empty proposal block");
    for (int j : b) {
      if (j < 0 || j >= dim) {
        throw std::invalid_argument("block index out of range");
      }
      ++seen[j];
    }
  }
  for (int j = 0; j < dim; ++j) {
    if (seen[j] != 1) {
      throw std::invalid_argument("blocks must partition the coordinates");
    }
  }

  DrawSet out;
  out.cfg = cfg;
  out.dim = dim;
  out.blocks = blks;
  out.chain_draws.assign(cfg.chains, Eigen::MatrixXd(cfg.kept(), dim));
  out.chain_lp.assign(cfg.chains, Eigen::VectorXd(cfg.kept()));
  out.block_stats.assign(cfg.chains, {});
  std::vector<std::string> errors(cfg.chains);

  std::vector<std::thread> threads;
  threads.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    threads.emplace_back(run_one_chain, std::cref(target), std::cref(cfg),
                         std::cref(init), std::cref(blks), c,
                         std::ref(out.chain_draws[c]), std::ref(out.chain_lp[c]),
                         std::ref(out.block_stats[c]), std::ref(errors[c]));
  }
  for (auto& t : threads) t.join();
  for (int c = 0; c < cfg.chains; ++c) {
    if (!errors[c].empty()) {
      throw std::runtime_error("chain " + std::to_string(c) + ": " + errors[c]);
    }
  }
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    throw std::invalid_argument("split R-hat needs at least 2 chains");
  }
  std::size_t n = chains[0].size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) throw std::invalid_argument("split R-hat needs at least 4 draws per chain");
  const std::size_t half = n / 2;

  std::vector<double> means, vars;
  auto add_segment = [&](const double* x) {
    double m = 0.0;
    for (std::size_t i = 0; i < half; ++i) m += x[i];
    m /= static_cast<double>(half);
    double s = 0.0;
    for (std::size_t i = 0; i < half; ++i) s += (x[i] - m) * (x[i] - m);
    means.push_back(m);
    vars.push_back(s / static_cast<double>(half - 1));
  };
  for (const auto& c : chains) {
    add_segment(c.data());
    add_segment(c.data() + (n - half));
  }

  const std::size_t m = means.size();
  double w = 0.0;
  for (double v : vars) w += v;
  w /= static_cast<double>(m);
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= static_cast<double>(m);
  double var_means = 0.0;
  for (double v : means) var_means += (v - grand) * (v - grand);
  var_means /= static_cast<double>(m - 1);

  if (!(w > 0.0)) {
    return var_means > 0.0 ? kInf : kNan;
  }
  const double hn = static_cast<double>(half);
  const double var_plus = (hn - 1.0) / hn * w + var_means;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) {
    throw std::invalid_argument("effective sample size needs at least 1 chain");
  }
  std::size_t n = chains[0].size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) {
    throw std::invalid_argument(
        "effective sample size needs at least 4 draws per chain");
  }
  const std::size_t m = chains.size();

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double* x = chains[j].data();
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += x[i];
    mu /= static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (x[i] - mu) * (x[i] - mu);
    means[j] = mu;
    vars[j] = s / static_cast<double>(n - 1);
  }
  double w = 0.0;
  for (double v : vars) w += v;
  w /= static_cast<double>(m);
  double var_means = 0.0;
  if (m > 1) {
    double grand = 0.0;
    for (double v : means) grand += v;
    grand /= static_cast<double>(m);
    for (double v : means) var_means += (v - grand) * (v - grand);
    var_means /= static_cast<double>(m - 1);
  }
  const double dn = static_cast<double>(n);
  const double var_plus = (dn - 1.0) / dn * w + var_means;
  if (!(var_plus > 0.0)) return kNan;

  auto rho = [&](int lag) {
    if (lag == 0) return 1.0;
    return 1.0 - (w - mean_autocov(chains, means, n, lag)) / var_plus;
  };

  // Paired sums of autocorrelations, truncated at the first negative pair
  // and forced nonincreasing (Geyer initial monotone sequence).
  double pair_sum_total = 0.0;
  double prev = kInf;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(static_cast<int>(2 * k)) + rho(static_cast<int>(2 * k + 1));
    if (pair < 0.0) break;
    pair = std::min(pair, prev);
    pair_sum_total += pair;
    prev = pair;
  }
  const double tau = -1.0 + 2.0 * pair_sum_total;
  const double total = static_cast<double>(m) * dn;
  if (!(tau > 0.0)) return total;
  return std::min(total / tau, total);
}

bool ConvergenceReport::converged(double rhat_threshold) const {
  if (coords.empty()) return false;
  return max_rhat <= rhat_threshold;
}

nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json coord_list = nlohmann::json::array();
  for (const auto& c : coords) {
    coord_list.push_back({{"name", c.name}, {"rhat", c.rhat}, {"ess", c.ess}});
  }
  return nlohmann::json{{"coordinates", coord_list},
                        {"max_rhat", max_rhat},
                        {"min_ess", min_ess},
                        {"block_acceptance",
                         {{"warmup", block_warm_accept},
                          {"kept", block_kept_accept}}},
                        {"warnings", warnings}};
}

ConvergenceReport diagnose(const DrawSet& draws,
                           const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != draws.dim) {
    throw std::invalid_argument("coordinate name count mismatch");
  }
  ConvergenceReport rep;
  rep.max_rhat = -kInf;
  rep.min_ess = kInf;
  auto add_coord = [&](const std::string& name,
                       const std::vector<std::vector<double>>& series) {
    CoordinateDiagnostic d;
    d.name = name;
    d.rhat = split_rhat(series);
    d.ess = effective_sample_size(series);
    if (std::isnan(d.rhat)) {
      rep.warnings.push_back("R-hat undefined (zero variance): " + name);
    } else {
      rep.max_rhat = std::max(rep.max_rhat, d.rhat);
    }
    if (!std::isnan(d.ess)) rep.min_ess = std::min(rep.min_ess, d.ess);
    rep.coords.push_back(std::move(d));
  };
  for (int j = 0; j < draws.dim; ++j) {
    add_coord(names[j], draws.coordinate(j));
  }
  add_coord("lp", draws.lp_series());
  if (rep.max_rhat == -kInf) rep.max_rhat = kNan;
  if (rep.min_ess == kInf) rep.min_ess = kNan;

  rep.block_warm_accept.resize(draws.block_stats.size());
  rep.block_kept_accept.resize(draws.block_stats.size());
  for (std::size_t c = 0; c < draws.block_stats.size(); ++c) {
    for (std::size_t b = 0; b < draws.block_stats[c].size(); ++b) {
      const BlockStats& s = draws.block_stats[c][b];
      rep.block_warm_accept[c].push_back(s.warm_rate());
      rep.block_kept_accept[c].push_back(s.kept_rate());
      if (s.kept_rate() < 0.01) {
        rep.warnings.push_back("stuck block " + std::to_string(b) +
                               " in chain " + std::to_string(c) +
                               " (post-warmup acceptance " +
                               std::to_string(s.kept_rate()) + ")");
      }
    }
  }
  return rep;
}

}  // namespace bvsa
