// Acceptance gate for the bvsa artifact. Each criterion prints exactly one
// PASS:/FAIL: summary line (followed by indented evidence lines) and the
// process exits nonzero if any requested criterion fails. Run with no
// arguments for all criteria, or pass criterion numbers (1..9).

#include "bvsa/checking.hpp"
#include "bvsa/config.hpp"
#include "bvsa/design.hpp"
#include "bvsa/fit.hpp"
#include "bvsa/measures.hpp"
#include "bvsa/model.hpp"
#include "bvsa/pipeline.hpp"
#include "bvsa/rng.hpp"
#include "bvsa/sampler.hpp"
#include "bvsa/trial_data.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace bvsa;

namespace {

fs::path fixture_path(const std::string& name) {
  return fs::path(BVSA_DATA_DIR) / name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

// Collects sub-checks for one criterion; every sub-check must hold.
struct Criterion {
  bool ok = true;
  std::vector<std::string> notes;
  void check(bool cond, const std::string& what) {
    ok = ok && cond;
    notes.push_back(std::string(cond ? "    ok   " : "    MISS ") + what);
  }
  void note(const std::string& s) { notes.push_back("    note " + s); }
};

// ---------------------------------------------------------------------------
// 1. Ingesting the SPRINT summary fixture reproduces the published totals.
// ---------------------------------------------------------------------------
Criterion criterion_1() {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  SummaryTable table = load_summary(fixture_path("sprint_summary.json"));
  const double elapsed = seconds_since(t0);
  c.check(table.total_events(0) == 319,
          "control-arm primary events = " + std::to_string(table.total_events(0)) +
              " (want 319)");
  c.check(table.total_events(1) == 243,
          "treated-arm primary events = " + std::to_string(table.total_events(1)) +
              " (want 243)");
  c.check(table.total_ae(0) == 118,
          "control-arm AE patients = " + std::to_string(table.total_ae(0)) +
              " (want 118)");
  c.check(table.total_ae(1) == 220,
          "treated-arm AE patients = " + std::to_string(table.total_ae(1)) +
              " (want 220)");
  // Published enrolment is 9361; the fixture approximates per-arm subgroup
  // sizes as round(N_g/2), which adds one patient in each of the three
  // subgroups with odd N_g.
  c.check(table.total_patients(0) + table.total_patients(1) == 9364,
          "total patients = " +
              std::to_string(table.total_patients(0) + table.total_patients(1)) +
              " (9361 published + 3 from per-arm rounding)");
  c.check(elapsed < 1.0, "runtime " + fmt(elapsed, 3) + " s < 1 s");
  return c;
}

// ---------------------------------------------------------------------------
// 2. Summary-statistic log-likelihood differs from the patient-level
//    log-likelihood only by a parameter-free constant.
// ---------------------------------------------------------------------------
Criterion criterion_2() {
  Criterion c;
  FactorScheme scheme({{"stratum", {"one", "two"}}});
  Rng rng(314159);
  std::vector<PatientRecord> records;
  for (int i = 0; i < 1000; ++i) {
    PatientRecord r;
    r.id = "p" + std::to_string(i);
    r.arm = static_cast<int>(rng.below(2));
    const int g = 1 + static_cast<int>(rng.below(2));
    r.levels = {g};
    r.ae = rng.bernoulli(0.3) ? 1 : 0;
    const double t = rng.exponential(0.4 + 0.2 * r.ae);
    const double censor = 0.5 + 2.5 * rng.uniform();
    r.time = std::min(t, censor);
    r.event = t <= censor ? 1 : 0;
    records.push_back(std::move(r));
  }
  SummaryTable table = compute_summaries(records, scheme);
  JointModel model(scheme, model_spec_from_name("saturated"));

  auto individual_ll = [&](const CellParams& cp) {
    double ll = 0.0;
    for (const auto& r : records) {
      const int g = scheme.subgroup_index(r.levels);
      if (r.event) ll += cp.log_lambda[r.arm][r.ae][g - 1];
      ll -= cp.lambda[r.arm][r.ae][g - 1] * r.time;
      ll += r.ae ? cp.log_p[r.arm][g - 1] : cp.log_1mp[r.arm][g - 1];
    }
    return ll;
  };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int s = 0; s < 20; ++s) {
    Eigen::VectorXd u(model.dim());
    for (int j = 0; j < model.dim(); ++j) u[j] = 0.5 * rng.normal();
    const CellParams cp = model.cell_params(model.to_constrained(u));
    const double diff = JointModel::log_likelihood(cp, table) - individual_ll(cp);
    lo = std::min(lo, diff);
    hi = std::max(hi, diff);
  }
  c.note("constant offset = " + fmt(lo, 6) + " over 1000 patients, 20 states");
  c.check(std::isfinite(lo) && std::isfinite(hi), "offsets finite");
  c.check(hi - lo <= 1e-10,
          "offset spread " + fmt(hi - lo, 14) + " <= 1e-10");
  c.check(std::abs(lo) > 1.0,
          "offset is a genuine constant (counting terms retained)");
  return c;
}

// ---------------------------------------------------------------------------
// 3. On a one-cell Poisson/Gamma reduction the sampler reproduces the
//    conjugate posterior's mean and variance.
// ---------------------------------------------------------------------------
struct ConjugateTarget final : TargetDensity {
  double shape;  // a0 + D
  double rate;   // b0 + U
  ConjugateTarget(double k, double r) : shape(k), rate(r) {}
  int dim() const override { return 1; }
  // Density of u = log(lambda) when lambda ~ Gamma(shape, rate).
  double log_density(const Eigen::VectorXd& u) const override {
    return shape * u[0] - rate * std::exp(u[0]);
  }
};

Criterion criterion_3() {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  struct Setting {
    double a0, b0;
    long long d;
    double u;
  };
  const std::vector<Setting> settings = {
      {2.0, 1.0, 7, 10.0}, {0.5, 0.1, 0, 4.0}, {1.0, 2.0, 40, 35.0}};
  int idx = 0;
  for (const auto& s : settings) {
    const double shape = s.a0 + static_cast<double>(s.d);
    const double rate = s.b0 + s.u;
    ConjugateTarget target(shape, rate);
    ChainConfig cfg;
    cfg.chains = 4;
    cfg.iterations = 20000;
    cfg.warmup = 4000;
    cfg.seed = 90 + idx;
    DrawSet d = run_chains(target, cfg,
                           Eigen::VectorXd::Constant(1, std::log(shape / rate)));
    std::vector<std::vector<double>> lam(d.chains());
    double mean = 0.0;
    long long n = 0;
    for (int ch = 0; ch < d.chains(); ++ch) {
      lam[ch].reserve(d.kept());
      for (int i = 0; i < d.kept(); ++i) {
        const double v = std::exp(d.chain_draws[ch](i, 0));
        lam[ch].push_back(v);
        mean += v;
        ++n;
      }
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& ch : lam)
      for (double v : ch) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    const double ess = effective_sample_size(lam);
    const double true_mean = shape / rate;
    const double true_var = shape / (rate * rate);
    // Monte Carlo standard errors: Var(sample mean) = sigma^2/ESS and, for a
    // gamma law with excess kurtosis 6/shape, Var(sample variance) is
    // approximately sigma^4 (2 + 6/shape)/ESS.
    const double se_mean = std::sqrt(var / ess);
    const double se_var = true_var * std::sqrt((2.0 + 6.0 / shape) / ess);
    const std::string tag = "(D=" + std::to_string(s.d) + ", U=" + fmt(s.u, 1) + ")";
    c.check(std::abs(mean - true_mean) <= 3.0 * se_mean,
            tag + " mean " + fmt(mean) + " vs " + fmt(true_mean) + " +/- " +
                fmt(3.0 * se_mean) + " [ESS " + fmt(ess, 0) + "]");
    c.check(std::abs(var - true_var) <= 3.0 * se_var,
            tag + " variance " + fmt(var) + " vs " + fmt(true_var) + " +/- " +
                fmt(3.0 * se_var));
    ++idx;
  }
  const double elapsed = seconds_since(t0);
  c.check(elapsed < 30.0, "runtime " + fmt(elapsed, 2) + " s < 30 s");
  return c;
}

// ---------------------------------------------------------------------------
// 4. The closed-form ordering probability contrast agrees with a pairwise
//    Monte Carlo simulation across random parameter draws.
// ---------------------------------------------------------------------------
CellParams random_one_group(Rng& rng) {
  CellParams cp;
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      const double lam = std::exp(rng.uniform(-2.0, 1.0));
      cp.lambda[a][w] = Eigen::VectorXd::Constant(1, lam);
      cp.log_lambda[a][w] = Eigen::VectorXd::Constant(1, std::log(lam));
    }
    const double p = rng.uniform(0.05, 0.95);
    cp.p[a] = Eigen::VectorXd::Constant(1, p);
    cp.log_p[a] = Eigen::VectorXd::Constant(1, std::log(p));
    cp.log_1mp[a] = Eigen::VectorXd::Constant(1, std::log1p(-p));
  }
  return cp;
}

Criterion criterion_4() {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::array<double, 3> deltas = {0.0, 0.2, 1.0};
  Rng rng(2718281);
  int misses = 0;
  double worst_z = 0.0;
  for (int i = 0; i < 25; ++i) {
    const CellParams cp = random_one_group(rng);
    const double delta = deltas[i % 3];
    const double closed = phi_ordering(cp, 1, delta);
    const PhiEstimate mc = phi_mc_oracle(cp, 1, delta, 1000000, 660000 + i);
    const double se = std::max(mc.se, 1e-12);
    const double z = std::abs(closed - mc.value) / se;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) {
      ++misses;
      c.check(false, "draw " + std::to_string(i) + " delta=" + fmt(delta, 1) +
                         ": closed " + fmt(closed) + " vs mc " + fmt(mc.value) +
                         " (z=" + fmt(z, 2) + ")");
    }
  }
  c.check(misses == 0, "all 25 draws within 3 MC standard errors (worst |z| = " +
                           fmt(worst_z, 2) + ")");
  const double elapsed = seconds_since(t0);
  c.check(elapsed < 120.0, "runtime " + fmt(elapsed, 2) + " s < 2 min");
  return c;
}

// ---------------------------------------------------------------------------
// 5. The four-outcome differences sum to zero for every posterior draw and
//    subgroup of a real fit.
// ---------------------------------------------------------------------------
Criterion criterion_5() {
  Criterion c;
  SummaryTable table = load_summary(fixture_path("sprint_summary.json"));
  ChainConfig cfg;
  cfg.iterations = 2000;
  cfg.warmup = 500;
  cfg.seed = 11;
  Fit fit = fit_model(table, model_spec_from_name("saturated"), Hyperparams{}, cfg);
  double worst = 0.0;
  for (const auto& cp : fit.cells) {
    for (int g = 1; g <= table.subgroup_count(); ++g) {
      const auto th = theta_four(cp, g, 3.0);
      worst = std::max(worst, std::abs(th[0] + th[1] + th[2] + th[3]));
    }
  }
  c.check(worst <= 1e-14,
          "max |theta1+theta2+theta3+theta4| = " + fmt(worst, 18) + " over " +
              std::to_string(fit.total_draws()) + " draws x " +
              std::to_string(table.subgroup_count()) + " subgroups <= 1e-14");
  return c;
}

// ---------------------------------------------------------------------------
// 6. Fitting the SPRINT fixture reproduces published overall estimates
//    within the stated bands (n_ag = round(N_g/2) approximation flagged in
//    the fixture itself).
// ---------------------------------------------------------------------------
struct ModelSummary {
  std::array<double, 4> theta_ov{};
  double phi_ov = 0.0;
  double dic_v = 0.0;
  double waic_v = 0.0;
  double max_rhat = 0.0;
};

ModelSummary fit_and_summarize(const SummaryTable& table, const std::string& name) {
  JointModel model(table.scheme(), model_spec_from_name(name));
  ChainConfig cfg;
  cfg.iterations = 60000;
  cfg.warmup = 10000;
  cfg.seed = 42;
  Fit fit = fit_model(table, model_spec_from_name(name), Hyperparams{}, cfg);
  ModelSummary out;
  out.max_rhat = fit.report.max_rhat;
  MeasureSet ms = summarize_measures(fit.cells, table.scheme(), MeasureConfig{});
  for (int j = 0; j < 4; ++j)
    out.theta_ov[j] = ms.block("theta" + std::to_string(j + 1)).overall;
  out.phi_ov = ms.block("phi").overall;
  out.dic_v = dic(model, fit.draws, fit.cells, table).first;
  out.waic_v = waic(fit.cells, table).first;
  return out;
}

Criterion criterion_6() {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  SummaryTable table = load_summary(fixture_path("sprint_summary.json"));
  const ModelSummary sat = fit_and_summarize(table, "saturated");
  const ModelSummary add = fit_and_summarize(table, "additive");
  c.note("convergence: max R-hat saturated " + fmt(sat.max_rhat, 3) +
         ", additive " + fmt(add.max_rhat, 3));

  const std::array<double, 4> ref = {-0.019, 0.025, -0.007, 0.001};
  for (int j = 0; j < 4; ++j) {
    c.check(std::abs(sat.theta_ov[j] - ref[j]) <= 0.010,
            "overall theta" + std::to_string(j + 1) + " = " +
                fmt(sat.theta_ov[j]) + " vs reference " + fmt(ref[j]) +
                " +/- 0.010");
  }
  // The reference vector's first and third entries do not match the stated
  // outcome definitions; our estimates agree with those entries swapped, and
  // crude estimates computed directly from the fixture's raw rates agree
  // with the definitions as implemented.
  if (std::abs(sat.theta_ov[0] - ref[2]) <= 0.010 &&
      std::abs(sat.theta_ov[2] - ref[0]) <= 0.010 &&
      (std::abs(sat.theta_ov[0] - ref[0]) > 0.010 ||
       std::abs(sat.theta_ov[2] - ref[2]) > 0.010)) {
    c.note("theta1/theta3 match the reference with entries 1 and 3 swapped "
           "(|diff| " +
           fmt(std::abs(sat.theta_ov[0] - ref[2]), 4) + ", " +
           fmt(std::abs(sat.theta_ov[2] - ref[0]), 4) +
           "); the reference appears to list those two components transposed");
  }

  c.check(std::abs(sat.phi_ov - 0.12) <= 0.04,
          "overall phi (saturated) = " + fmt(sat.phi_ov) + " vs 0.12 +/- 0.04");
  c.check(std::abs(add.phi_ov - 0.13) <= 0.04,
          "overall phi (additive) = " + fmt(add.phi_ov) + " vs 0.13 +/- 0.04");

  const double dic_diff = sat.dic_v - add.dic_v;
  const double waic_diff = sat.waic_v - add.waic_v;
  c.check(std::abs(dic_diff - 10.0) <= 6.0,
          "DIC(saturated) - DIC(additive) = " + fmt(dic_diff, 2) + " vs 10 +/- 6");
  c.check(std::abs(waic_diff - 3.0) <= 4.0,
          "WAIC(saturated) - WAIC(additive) = " + fmt(waic_diff, 2) + " vs 3 +/- 4");
  const double elapsed = seconds_since(t0);
  c.check(elapsed < 300.0, "runtime " + fmt(elapsed, 1) + " s < 5 min");
  return c;
}

// ---------------------------------------------------------------------------
// 7. Posterior predictive p-values accept data simulated from the fitted
//    model class and flag a grossly misspecified hazard.
// ---------------------------------------------------------------------------
double pooled_rmst(const std::vector<double>& times, const std::vector<int>& events,
                   double tau) {
  return rmst(km_estimate(times, events), tau);
}

// One replication: simulate a two-arm cohort, fit the exponential joint
// model, and return the posterior predictive p-value of the pooled RMST.
double ppc_pvalue(std::uint64_t seed, bool misspecified) {
  const double censor_time = 3.0;
  FactorScheme scheme({{"stratum", {"one", "two"}}});
  Rng rng(seed);
  std::vector<PatientRecord> records;
  std::vector<CensusEntry> census;
  for (int i = 0; i < 1000; ++i) {
    PatientRecord r;
    r.id = "p" + std::to_string(i);
    r.arm = i % 2;
    const int g = 1 + static_cast<int>(rng.below(2));
    r.levels = {g};
    r.ae = rng.bernoulli(0.3) ? 1 : 0;
    double t;
    if (misspecified) {
      // Piecewise hazard: 0.15 before t=1, ten times that afterwards.
      t = rng.exponential(0.15);
      if (t >= 1.0) t = 1.0 + rng.exponential(1.5);
    } else {
      t = rng.exponential(0.25);
    }
    r.time = std::min(t, censor_time);
    r.event = t <= censor_time ? 1 : 0;
    census.push_back({r.arm, g, censor_time});
    records.push_back(std::move(r));
  }
  SummaryTable table = compute_summaries(records, scheme);
  ChainConfig cfg;
  cfg.iterations = 6000;
  cfg.warmup = 1500;
  cfg.seed = derive_seed(seed, 1);
  Fit fit = fit_model(table, model_spec_from_name("saturated"), Hyperparams{}, cfg);

  const int n_reps = 200;
  auto reps = simulate_ppd(fit.cells, census, n_reps, derive_seed(seed, 2));
  std::vector<double> times;
  std::vector<int> events;
  times.reserve(records.size());
  events.reserve(records.size());
  for (const auto& r : records) {
    times.push_back(r.time);
    events.push_back(r.event);
  }
  const double observed = pooled_rmst(times, events, censor_time);
  std::vector<double> rep_stats;
  rep_stats.reserve(n_reps);
  for (const auto& rep : reps) {
    times.clear();
    events.clear();
    for (const auto& p : rep.patients) {
      times.push_back(p.y);
      events.push_back(p.event);
    }
    rep_stats.push_back(pooled_rmst(times, events, censor_time));
  }
  return ppp_value(observed, rep_stats);
}

Criterion criterion_7() {
  Criterion c;
  int well_ok = 0;
  int mis_flagged = 0;
  for (int r = 0; r < 20; ++r) {
    if (ppc_pvalue(derive_seed(7100, r), false) > 0.05) ++well_ok;
    if (ppc_pvalue(derive_seed(7200, r), true) < 0.05) ++mis_flagged;
  }
  c.check(well_ok >= 18, "well-specified data: RMST p-value > 0.05 in " +
                             std::to_string(well_ok) + "/20 (need >= 18)");
  c.check(mis_flagged >= 16,
          "10x hazard shift at t=1: p-value < 0.05 in " +
              std::to_string(mis_flagged) + "/20 (need >= 16)");
  return c;
}

// ---------------------------------------------------------------------------
// 8. 90% credible intervals for the cell rates and AE probabilities cover
//    the truth at the nominal level over simulated trials.
// ---------------------------------------------------------------------------
Criterion criterion_8() {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  FactorScheme scheme({{"f1", {"lo", "hi"}}, {"f2", {"x", "y"}}});
  const int G = scheme.subgroup_count();
  const int per_cell = 125;  // 125 x 4 subgroups = 500 patients per arm
  const double censor_time = 3.0;

  // Fixed truth, drawn once.
  Rng truth_rng(20240901);
  std::array<std::array<std::vector<double>, 2>, 2> lam_true;
  std::array<std::vector<double>, 2> p_true;
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      for (int g = 0; g < G; ++g)
        lam_true[a][w].push_back(
            std::exp(truth_rng.uniform(std::log(0.1), std::log(0.8))));
    }
    for (int g = 0; g < G; ++g) p_true[a].push_back(truth_rng.uniform(0.15, 0.5));
  }

  long long lam_hits = 0, lam_total = 0, p_hits = 0, p_total = 0;
  const int n_trials = 50;
  for (int t = 0; t < n_trials; ++t) {
    Rng rng(derive_seed(8800, t));
    std::vector<PatientRecord> records;
    for (int a = 0; a < 2; ++a) {
      for (int g = 1; g <= G; ++g) {
        for (int i = 0; i < per_cell; ++i) {
          PatientRecord r;
          r.id = "t" + std::to_string(a) + "g" + std::to_string(g) + "i" +
                 std::to_string(i);
          r.arm = a;
          r.levels = scheme.subgroup_levels(g);
          r.ae = rng.bernoulli(p_true[a][g - 1]) ? 1 : 0;
          const double tt = rng.exponential(lam_true[a][r.ae][g - 1]);
          r.time = std::min(tt, censor_time);
          r.event = tt <= censor_time ? 1 : 0;
          records.push_back(std::move(r));
        }
      }
    }
    SummaryTable table = compute_summaries(records, scheme);
    ChainConfig cfg;
    cfg.iterations = 20000;
    cfg.warmup = 4000;
    cfg.seed = derive_seed(8900, t);
    Fit fit =
        fit_model(table, model_spec_from_name("saturated"), Hyperparams{}, cfg);

    std::vector<double> series(fit.cells.size());
    for (int a = 0; a < 2; ++a) {
      for (int w = 0; w < 2; ++w) {
        for (int g = 0; g < G; ++g) {
          for (std::size_t i = 0; i < fit.cells.size(); ++i)
            series[i] = fit.cells[i].lambda[a][w][g];
          const double lo = quantile(series, 0.05);
          const double hi = quantile(series, 0.95);
          lam_hits += (lam_true[a][w][g] >= lo && lam_true[a][w][g] <= hi);
          ++lam_total;
        }
      }
      for (int g = 0; g < G; ++g) {
        for (std::size_t i = 0; i < fit.cells.size(); ++i)
          series[i] = fit.cells[i].p[a][g];
        const double lo = quantile(series, 0.05);
        const double hi = quantile(series, 0.95);
        p_hits += (p_true[a][g] >= lo && p_true[a][g] <= hi);
        ++p_total;
      }
    }
  }
  const double lam_cov = static_cast<double>(lam_hits) / lam_total;
  const double p_cov = static_cast<double>(p_hits) / p_total;
  c.check(lam_cov >= 0.80 && lam_cov <= 1.00,
          "hazard-rate coverage " + fmt(lam_cov, 3) + " (" +
              std::to_string(lam_hits) + "/" + std::to_string(lam_total) +
              ") within 0.90 +/- 0.10");
  c.check(p_cov >= 0.80 && p_cov <= 1.00,
          "AE-probability coverage " + fmt(p_cov, 3) + " (" +
              std::to_string(p_hits) + "/" + std::to_string(p_total) +
              ") within 0.90 +/- 0.10");
  const double elapsed = seconds_since(t0);
  c.check(elapsed < 1800.0, "runtime " + fmt(elapsed, 1) + " s < 30 min");
  return c;
}

// ---------------------------------------------------------------------------
// 9. Identical config and seed produce byte-identical draw files and measure
//    tables across two independent pipeline runs.
// ---------------------------------------------------------------------------
std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Criterion criterion_9() {
  Criterion c;
  const fs::path root = fs::temp_directory_path() / "bvsa_accept9";
  fs::remove_all(root);
  const std::string config_text = std::string("{\n") +
      "  \"seed\": 4242,\n" +
      "  \"data\": {\"summary\": \"" +
      fixture_path("sprint_summary.json").string() + "\"},\n" +
      "  \"sampler\": {\"iterations\": 800, \"warmup\": 200},\n" +
      "  \"allow_nonconverged\": true\n}\n";
  std::ostringstream log;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    std::ofstream(dir / "run.json", std::ios::binary) << config_text;
    const RunConfig cfg = load_config(dir / "run.json");
    const int rc_fit = run_pipeline(cfg, Command::Fit, log);
    const int rc_meas = run_pipeline(cfg, Command::Measures, log);
    c.check(rc_fit == 0 && rc_meas == 0,
            std::string("run ") + run + " exit codes fit=" +
                std::to_string(rc_fit) + " measures=" + std::to_string(rc_meas));
  }
  const fs::path a = root / "a" / "out";
  const fs::path b = root / "b" / "out";
  for (const char* name :
       {"draws_saturated.jsonl", "measures_saturated.csv", "measures_saturated.json"}) {
    const std::string ba = read_bytes(a / name);
    const std::string bb = read_bytes(b / name);
    c.check(ba == bb, std::string(name) + " byte-identical (" +
                          std::to_string(ba.size()) + " bytes)");
  }
  const auto da = load_draws_jsonl(a / "draws_saturated.jsonl");
  const auto db = load_draws_jsonl(b / "draws_saturated.jsonl");
  std::ostringstream ha, hb;
  ha << std::hex << da.fit.draws.content_hash();
  hb << std::hex << db.fit.draws.content_hash();
  c.check(da.fit.draws.content_hash() == db.fit.draws.content_hash(),
          "reloaded draw-set content hashes match (" + ha.str() + ")");
  fs::remove_all(root);
  return c;
}

const char* criterion_name(int n) {
  switch (n) {
    case 1: return "fixture ingest reproduces published SPRINT totals";
    case 2: return "summary and patient-level log-likelihoods differ by a constant";
    case 3: return "sampler recovers conjugate gamma posteriors";
    case 4: return "closed-form ordering probability matches pairwise simulation";
    case 5: return "four-outcome differences sum to zero for every draw";
    case 6: return "SPRINT fixture reproduction within stated bands";
    case 7: return "predictive checks accept well-specified data, flag misspecified";
    case 8: return "credible-interval calibration on simulated trials";
    case 9: return "identical config and seed give byte-identical outputs";
    default: return "unknown";
  }
}

Criterion run_criterion(int n) {
  switch (n) {
    case 1: return criterion_1();
    case 2: return criterion_2();
    case 3: return criterion_3();
    case 4: return criterion_4();
    case 5: return criterion_5();
    case 6: return criterion_6();
    case 7: return criterion_7();
    case 8: return criterion_8();
    case 9: return criterion_9();
    default: throw std::runtime_error("no criterion " + std::to_string(n));
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) {
    try {
      const int n = std::stoi(argv[i]);
      if (n < 1 || n > 9) throw std::out_of_range("range");
      wanted.push_back(n);
    } catch (const std::exception&) {
      std::cerr << "usage: bvsa_acceptance [criterion numbers 1..9]\n";
      return 2;
    }
  }
  if (wanted.empty())
    for (int n = 1; n <= 9; ++n) wanted.push_back(n);

  bool all_ok = true;
  for (int n : wanted) {
    Criterion c;
    try {
      c = run_criterion(n);
    } catch (const std::exception& e) {
      c.ok = false;
      c.note(std::string("exception: ") + e.what());
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << ": criterion " << n << " ("
              << criterion_name(n) << ")\n";
    for (const auto& line : c.notes) std::cout << line << "\n";
    std::cout.flush();
    all_ok = all_ok && c.ok;
  }
  return all_ok ? 0 : 1;
}
