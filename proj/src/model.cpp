#include "bvsa/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bvsa {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kLogHalf = -0.69314718055994530942;
// Intercept columns of the additive structure sit outside the shrinkage
// layer and get a fixed diffuse prior.
constexpr double kInterceptSd = 100.0;

double log1m_tanh_sq(double r) {
  // log(1 - tanh(r)^2) = log 4 - 2|r| - 2 log(1 + exp(-2|r|))
  const double a = std::fabs(r);
  return 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
}

double lchoose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

void Hyperparams::validate() const {
  auto check = [](const std::array<double, 2>& v, const char* name) {
    for (double x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument(std::string("hyperparameter ") + name +
                                    " must be positive and finite");
      }
    }
  };
  check(sigma_mu, "sigma_mu");
  check(sigma_tau, "sigma_tau");
  check(sigma_mu_gamma, "sigma_mu_gamma");
  check(sigma_tau_gamma, "sigma_tau_gamma");
}

double normal_lpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

double bvn_lpdf(double x1, double x2, double mean, double sd, double rho) {
  const double omr2 = 1.0 - rho * rho;
  if (!(omr2 > 0.0)) return -std::numeric_limits<double>::infinity();
  const double z1 = (x1 - mean) / sd;
  const double z2 = (x2 - mean) / sd;
  const double quad = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / omr2;
  return -kLogTwoPi - 2.0 * std::log(sd) - 0.5 * std::log(omr2) - 0.5 * quad;
}

JointModel::JointModel(FactorScheme scheme, ModelSpec spec, Hyperparams hp)
    : scheme_(std::move(scheme)), spec_(spec), hp_(hp),
      design_(build_design(scheme_, spec_)) {
  hp_.validate();
  q_ = static_cast<int>(design_.x.cols());
  nb_ = ph() ? 2 : 4;
  dim_ = off_rho() + (ph() ? 1 : 4);
}

bool JointModel::has_intercept() const {
  const ModelKind base =
      ph() ? spec_.base : spec_.kind;
  return base == ModelKind::Additive;
}

ParameterState JointModel::to_constrained(const Eigen::VectorXd& u,
                                          double* log_jacobian) const {
  if (u.size() != dim_) {
    throw std::invalid_argument("state dimension mismatch");
  }
  ParameterState s;
  s.beta.resize(nb_);
  for (int b = 0; b < nb_; ++b) s.beta[b] = u.segment(off_beta(b), q_);
  for (int a = 0; a < 2; ++a) s.gamma[a] = u.segment(off_gamma(a), q_);
  s.mu.resize(nb_);
  s.tau.resize(nb_);
  double jac = 0.0;
  for (int b = 0; b < nb_; ++b) s.mu[b] = u[off_mu() + b];
  for (int a = 0; a < 2; ++a) s.mu_gamma[a] = u[off_mu_gamma() + a];
  for (int b = 0; b < nb_; ++b) {
    const double v = u[off_log_tau() + b];
    s.tau[b] = std::exp(v);
    jac += v;
  }
  for (int a = 0; a < 2; ++a) {
    const double v = u[off_log_tau_gamma() + a];
    s.tau_gamma[a] = std::exp(v);
    jac += v;
  }
  if (!ph()) {
    for (int a = 0; a < 2; ++a) {
      const double r = u[off_rho() + a];
      s.rho_mu[a] = std::tanh(r);
      jac += log1m_tanh_sq(r);
    }
    for (int a = 0; a < 2; ++a) {
      const double r = u[off_rho() + 2 + a];
      s.rho_tau[a] = std::tanh(r);
      jac += log1m_tanh_sq(r);
    }
  } else {
    s.log_phi = u[off_log_phi()];
  }
  if (log_jacobian != nullptr) *log_jacobian = jac;
  return s;
}

Eigen::VectorXd JointModel::to_unconstrained(const ParameterState& s) const {
  if (static_cast<int>(s.beta.size()) != nb_ ||
      static_cast<int>(s.mu.size()) != nb_ ||
      static_cast<int>(s.tau.size()) != nb_) {
    throw std::invalid_argument("parameter block count mismatch");
  }
  Eigen::VectorXd u(dim_);
  for (int b = 0; b < nb_; ++b) {
    if (s.beta[b].size() != q_) {
      throw std::invalid_argument("beta block length mismatch");
    }
    u.segment(off_beta(b), q_) = s.beta[b];
  }
  for (int a = 0; a < 2; ++a) {
    if (s.gamma[a].size() != q_) {
      throw std::invalid_argument("gamma block length mismatch");
    }
    u.segment(off_gamma(a), q_) = s.gamma[a];
  }
  for (int b = 0; b < nb_; ++b) u[off_mu() + b] = s.mu[b];
  for (int a = 0; a < 2; ++a) u[off_mu_gamma() + a] = s.mu_gamma[a];
  for (int b = 0; b < nb_; ++b) u[off_log_tau() + b] = std::log(s.tau[b]);
  for (int a = 0; a < 2; ++a) {
    u[off_log_tau_gamma() + a] = std::log(s.tau_gamma[a]);
  }
  if (!ph()) {
    for (int a = 0; a < 2; ++a) u[off_rho() + a] = std::atanh(s.rho_mu[a]);
    for (int a = 0; a < 2; ++a) u[off_rho() + 2 + a] = std::atanh(s.rho_tau[a]);
  } else {
    u[off_log_phi()] = s.log_phi;
  }
  return u;
}

CellParams JointModel::cell_params(const ParameterState& s) const {
  const int G = scheme_.subgroup_count();
  CellParams cp;
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      if (ph()) {
        cp.log_lambda[a][w] = design_.x * s.beta[a];
        if (w == 1) cp.log_lambda[a][w].array() += s.log_phi;
      } else {
        cp.log_lambda[a][w] = design_.x * s.beta[2 * a + w];
      }
      cp.lambda[a][w] = cp.log_lambda[a][w].array().exp();
    }
    const Eigen::VectorXd t = design_.z * s.gamma[a];
    cp.p[a].resize(G);
    cp.log_p[a].resize(G);
    cp.log_1mp[a].resize(G);
    for (int g = 0; g < G; ++g) {
      const double x = t[g];
      double lp;  // log p, computed without cancellation on either tail
      if (x >= 0.0) {
        lp = -std::log1p(std::exp(-x));
      } else {
        lp = x - std::log1p(std::exp(x));
      }
      cp.log_p[a][g] = lp;
      cp.log_1mp[a][g] = lp - x;
      cp.p[a][g] = std::exp(lp);
    }
  }
  return cp;
}

double JointModel::log_likelihood(const CellParams& cp,
                                  const SummaryTable& table) {
  const int G = table.scheme().subgroup_count();
  if (cp.subgroups() != G) {
    throw std::invalid_argument("cell parameter dimension mismatch");
  }
  double ll = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      for (int g = 1; g <= G; ++g) {
        const double U = table.u(a, w, g);
        const double D = static_cast<double>(table.d(a, w, g));
        if (!(U > 0.0)) {
          if (D > 0.0) {
            throw std::invalid_argument(
                "events observed in a cell with zero exposure");
          }
          continue;
        }
        const double log_mean = cp.log_lambda[a][w][g - 1] + std::log(U);
        ll += D * log_mean - std::exp(std::min(log_mean, 700.0)) -
              std::lgamma(D + 1.0);
      }
    }
    for (int g = 1; g <= G; ++g) {
      const double n = static_cast<double>(table.n(a, g));
      const double V = static_cast<double>(table.v(a, g));
      if (n <= 0.0) continue;
      ll += lchoose(n, V) + V * cp.log_p[a][g - 1] +
            (n - V) * cp.log_1mp[a][g - 1];
    }
  }
  return ll;
}

double JointModel::log_prior(const ParameterState& s) const {
  if (static_cast<int>(s.beta.size()) != nb_ ||
      static_cast<int>(s.mu.size()) != nb_ ||
      static_cast<int>(s.tau.size()) != nb_) {
    throw std::invalid_argument("parameter block count mismatch");
  }
  const bool intercept = has_intercept();
  double lp = 0.0;
  for (int b = 0; b < nb_; ++b) {
    for (int j = 0; j < q_; ++j) {
      if (intercept && j == 0) {
        lp += normal_lpdf(s.beta[b][j], 0.0, kInterceptSd);
      } else {
        lp += normal_lpdf(s.beta[b][j], s.mu[b], s.tau[b]);
      }
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int j = 0; j < q_; ++j) {
      if (intercept && j == 0) {
        lp += normal_lpdf(s.gamma[a][j], 0.0, kInterceptSd);
      } else {
        lp += normal_lpdf(s.gamma[a][j], s.mu_gamma[a], s.tau_gamma[a]);
      }
    }
  }
  if (!ph()) {
    for (int a = 0; a < 2; ++a) {
      lp += bvn_lpdf(s.mu[2 * a], s.mu[2 * a + 1], 0.0, hp_.sigma_mu[a],
                     s.rho_mu[a]);
      const double lt0 = std::log(s.tau[2 * a]);
      const double lt1 = std::log(s.tau[2 * a + 1]);
      lp += bvn_lpdf(lt0, lt1, kLogHalf, hp_.sigma_tau[a], s.rho_tau[a]) -
            lt0 - lt1;
      lp += 2.0 * kLogHalf;  // uniform(-1,1) densities for rho_mu, rho_tau
    }
  } else {
    for (int a = 0; a < 2; ++a) {
      lp += normal_lpdf(s.mu[a], 0.0, hp_.sigma_mu[a]);
      const double lt = std::log(s.tau[a]);
      lp += normal_lpdf(lt, kLogHalf, hp_.sigma_tau[a]) - lt;
    }
    lp += normal_lpdf(s.log_phi, 0.0, 1.0);
  }
  for (int a = 0; a < 2; ++a) {
    lp += normal_lpdf(s.mu_gamma[a], kLogHalf, hp_.sigma_mu_gamma[a]);
    const double ltg = std::log(s.tau_gamma[a]);
    lp += normal_lpdf(ltg, 0.0, hp_.sigma_tau_gamma[a]) - ltg;
  }
  return lp;
}

double JointModel::log_posterior(const Eigen::VectorXd& u,
                                 const SummaryTable& table) const {
  if (!u.allFinite()) {
    throw std::invalid_argument("non-finite state vector");
  }
  double jac = 0.0;
  const ParameterState s = to_constrained(u, &jac);
  const CellParams cp = cell_params(s);
  return log_likelihood(cp, table) + log_prior(s) + jac;
}

Eigen::VectorXd JointModel::initial_point(const SummaryTable& table) const {
  const int G = scheme_.subgroup_count();
  double sum_d = 0.0, sum_u = 0.0;
  double sum_v = 0.0, sum_n = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      for (int g = 1; g <= G; ++g) {
        sum_d += static_cast<double>(table.d(a, w, g));
        sum_u += table.u(a, w, g);
      }
    }
    for (int g = 1; g <= G; ++g) {
      sum_v += static_cast<double>(table.v(a, g));
      sum_n += static_cast<double>(table.n(a, g));
    }
  }
  const double rate = sum_u > 0.0 ? sum_d / sum_u : 0.0;
  const double log_rate = std::log(std::max(rate, 1e-8));
  double ae = sum_n > 0.0 ? sum_v / sum_n : 0.5;
  ae = std::min(std::max(ae, 1e-6), 1.0 - 1e-6);
  const double logit_ae = std::log(ae / (1.0 - ae));

  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim_);
  for (int b = 0; b < nb_; ++b) u[off_mu() + b] = log_rate;
  for (int a = 0; a < 2; ++a) u[off_mu_gamma() + a] = logit_ae;
  for (int b = 0; b < nb_; ++b) u[off_log_tau() + b] = kLogHalf;
  for (int a = 0; a < 2; ++a) u[off_log_tau_gamma() + a] = kLogHalf;
  // coefficients, correlations, and the PH log hazard ratio start at zero
  return u;
}

std::vector<std::vector<int>> JointModel::sampler_blocks() const {
  std::vector<std::vector<int>> blocks;
  for (int b = 0; b < nb_; ++b) {
    std::vector<int> blk(q_);
    for (int j = 0; j < q_; ++j) blk[j] = off_beta(b) + j;
    blocks.push_back(std::move(blk));
  }
  for (int a = 0; a < 2; ++a) {
    std::vector<int> blk(q_);
    for (int j = 0; j < q_; ++j) blk[j] = off_gamma(a) + j;
    blocks.push_back(std::move(blk));
  }
  std::vector<int> means;
  for (int b = 0; b < nb_; ++b) means.push_back(off_mu() + b);
  for (int a = 0; a < 2; ++a) means.push_back(off_mu_gamma() + a);
  blocks.push_back(std::move(means));
  std::vector<int> spreads;
  for (int b = 0; b < nb_; ++b) spreads.push_back(off_log_tau() + b);
  for (int a = 0; a < 2; ++a) spreads.push_back(off_log_tau_gamma() + a);
  if (!ph()) {
    for (int k = 0; k < 4; ++k) spreads.push_back(off_rho() + k);
  }
  blocks.push_back(std::move(spreads));
  if (ph()) blocks.push_back({off_log_phi()});
  return blocks;
}

std::vector<std::string> JointModel::parameter_names() const {
  std::vector<std::string> names(dim_);
  auto arm_tag = [this](int b) {
    std::ostringstream os;
    if (ph()) {
      os << "a=" << b;
    } else {
      os << "a=" << (b >> 1) << ",w=" << (b & 1);
    }
    return os.str();
  };
  for (int b = 0; b < nb_; ++b) {
    for (int j = 0; j < q_; ++j) {
      names[off_beta(b) + j] =
          "beta[" + arm_tag(b) + "][" + design_.column_labels[j] + "]";
    }
  }
  for (int a = 0; a < 2; ++a) {
    const std::string tag = "a=" + std::to_string(a);
    for (int j = 0; j < q_; ++j) {
      names[off_gamma(a) + j] =
          "gamma[" + tag + "][" + design_.column_labels[j] + "]";
    }
    names[off_mu_gamma() + a] = "mu_gamma[" + tag + "]";
    names[off_log_tau_gamma() + a] = "log_tau_gamma[" + tag + "]";
  }
  for (int b = 0; b < nb_; ++b) {
    names[off_mu() + b] = "mu[" + arm_tag(b) + "]";
    names[off_log_tau() + b] = "log_tau[" + arm_tag(b) + "]";
  }
  if (!ph()) {
    for (int a = 0; a < 2; ++a) {
      names[off_rho() + a] = "atanh_rho_mu[a=" + std::to_string(a) + "]";
      names[off_rho() + 2 + a] = "atanh_rho_tau[a=" + std::to_string(a) + "]";
    }
  } else {
    names[off_log_phi()] = "log_phi";
  }
  return names;
}

}  // namespace bvsa
