#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvsa/design.hpp"
#include "bvsa/trial_data.hpp"

namespace bvsa {

// Prior scales, one pair per treatment arm. Defaults follow the weakly
// informative choices used for the case study: essentially flat means
// (sigma 100) and unit lognormal spreads centred so that hazard ratios
// between subgroups stay mostly within [1/4, 4].
struct Hyperparams {
  std::array<double, 2> sigma_mu{100.0, 100.0};
  std::array<double, 2> sigma_tau{1.0, 1.0};
  std::array<double, 2> sigma_mu_gamma{100.0, 100.0};
  std::array<double, 2> sigma_tau_gamma{1.0, 1.0};
  void validate() const;  // throws unless all scales are positive and finite
};

// Constrained-space parameters.
//
// Saturated/Additive: four hazard coefficient blocks indexed aw = 2a + w
// (arm a, AE status w), each with its own mean mu[aw] and spread tau[aw];
// per arm, (mu_a0, mu_a1) and (log tau_a0, log tau_a1) get bivariate normal
// priors with correlations rho_mu[a], rho_tau[a].
//
// ProportionalHazards: one hazard block per arm (the AE-free hazard) plus a
// shared log hazard ratio log_phi for the AE-occurring hazard; hyperpriors
// are univariate and the rho fields are unused.
struct ParameterState {
  std::vector<Eigen::VectorXd> beta;
  std::array<Eigen::VectorXd, 2> gamma;
  std::vector<double> mu;
  std::vector<double> tau;
  std::array<double, 2> mu_gamma{0.0, 0.0};
  std::array<double, 2> tau_gamma{1.0, 1.0};
  std::array<double, 2> rho_mu{0.0, 0.0};
  std::array<double, 2> rho_tau{0.0, 0.0};
  double log_phi = 0.0;
};

// Per-cell likelihood parameters: lambda[a][w] and p[a] are length-G vectors.
// Log/logit companions are carried along because the likelihood needs the
// log scale (no overflow for extreme states) while the measures need the
// natural scale.
struct CellParams {
  std::array<std::array<Eigen::VectorXd, 2>, 2> lambda;
  std::array<std::array<Eigen::VectorXd, 2>, 2> log_lambda;
  std::array<Eigen::VectorXd, 2> p;
  std::array<Eigen::VectorXd, 2> log_p;
  std::array<Eigen::VectorXd, 2> log_1mp;
  int subgroups() const { return static_cast<int>(p[0].size()); }
};

double normal_lpdf(double x, double mean, double sd);
// Bivariate normal with common marginal sd and correlation rho.
double bvn_lpdf(double x1, double x2, double mean, double sd, double rho);

// Model definition: regression structure, priors, likelihood, and the
// bijection between the unconstrained sampling space and ParameterState.
class JointModel {
 public:
  JointModel(FactorScheme scheme, ModelSpec spec, Hyperparams hp = {});

  const FactorScheme& scheme() const { return scheme_; }
  const ModelSpec& spec() const { return spec_; }
  const Hyperparams& hyper() const { return hp_; }
  const DesignMatrices& design() const { return design_; }
  int q() const { return q_; }
  int beta_blocks() const { return nb_; }
  int dim() const { return dim_; }

  // Unconstrained layout (coordinate labels via parameter_names()):
  //   beta blocks | gamma blocks | mu | mu_gamma | log tau | log tau_gamma
  //   | atanh rho_mu | atanh rho_tau   (non-PH)
  //   ... | log_phi                    (PH, no rho coordinates)
  // Spreads map through exp (Jacobian term u), correlations through tanh
  // (Jacobian term log(1 - rho^2)); everything else is the identity.
  ParameterState to_constrained(const Eigen::VectorXd& u,
                                double* log_jacobian = nullptr) const;
  Eigen::VectorXd to_unconstrained(const ParameterState& s) const;

  CellParams cell_params(const ParameterState& s) const;

  double log_prior(const ParameterState& s) const;

  // Joint Poisson/Binomial log likelihood with all constants kept:
  //   sum_awg [ D log(lambda U) - lambda U - log D! ]
  // + sum_ag  [ log C(n,V) + V log p + (n-V) log(1-p) ].
  // Cells with U = 0 (and hence D = 0) and arms with n = 0 contribute zero.
  static double log_likelihood(const CellParams& cp, const SummaryTable& table);

  // log_likelihood + log_prior + transform Jacobian, finite for every finite
  // u (the lambda*U term is computed in log space and clamped at exp(700)).
  double log_posterior(const Eigen::VectorXd& u, const SummaryTable& table) const;

  // Data-informed start: hyper means at the pooled crude log event rate and
  // pooled logit AE rate, coefficients zero, spreads 1/2, correlations zero.
  Eigen::VectorXd initial_point(const SummaryTable& table) const;

  // Update blocks for the sampler: one per coefficient block, one for the
  // location hyperparameters, one for spreads + correlations, and (PH) one
  // for the hazard ratio.
  std::vector<std::vector<int>> sampler_blocks() const;

  std::vector<std::string> parameter_names() const;

 private:
  bool ph() const { return spec_.kind == ModelKind::ProportionalHazards; }
  bool has_intercept() const;  // additive structure: column 1 is an intercept
  int off_beta(int b) const { return b * q_; }
  int off_gamma(int a) const { return (nb_ + a) * q_; }
  int off_mu() const { return (nb_ + 2) * q_; }
  int off_mu_gamma() const { return off_mu() + nb_; }
  int off_log_tau() const { return off_mu_gamma() + 2; }
  int off_log_tau_gamma() const { return off_log_tau() + nb_; }
  int off_rho() const { return off_log_tau_gamma() + 2; }
  int off_log_phi() const { return off_rho(); }

  FactorScheme scheme_;
  ModelSpec spec_;
  Hyperparams hp_;
  DesignMatrices design_;
  int q_ = 0;
  int nb_ = 0;
  int dim_ = 0;
};

}  // namespace bvsa
