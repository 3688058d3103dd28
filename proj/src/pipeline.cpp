#include "bvsa/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "bvsa/checking.hpp"
#include "bvsa/fit.hpp"
#include "bvsa/rng.hpp"
#include "bvsa/version.hpp"

namespace bvsa {

namespace {

namespace fs = std::filesystem;

constexpr double kRhatGate = 1.05;
// Stream tags keep posterior-predictive and simulation randomness disjoint
// from the chain seeds (which use the config seed XOR chain index).
constexpr std::uint64_t kPpcStreamTag = 0x707063;
constexpr std::uint64_t kSimStreamTag = 0x73696D;

class ConvergenceFailure : public std::runtime_error {
 public:
  explicit ConvergenceFailure(const std::string& what)
      : std::runtime_error(what) {}
};

struct Inputs {
  SummaryTable table;
  std::vector<PatientRecord> patients;
  bool patient_level = false;
};

Inputs load_inputs(const RunConfig& cfg) {
  Inputs inputs;
  if (cfg.patients_path) {
    const fs::path path = cfg.resolve(*cfg.patients_path);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open patients file: " + path.string());
    inputs.patients = ingest_patients(in, *cfg.scheme);
    inputs.table = compute_summaries(inputs.patients, *cfg.scheme);
    inputs.patient_level = true;
  } else {
    inputs.table = load_summary(cfg.resolve(*cfg.summary_path));
    if (cfg.scheme &&
        scheme_to_json(*cfg.scheme) != scheme_to_json(inputs.table.scheme())) {
      throw std::runtime_error(
          "scheme in config disagrees with the summary file's scheme");
    }
  }
  const ValidationReport report = validate_summaries(inputs.table);
  if (!report.ok()) {
    std::string msg = "summary table failed validation:";
    for (const auto& f : report.failures) {
      msg += "\n  " + f.check + ": " + f.detail;
    }
    throw std::runtime_error(msg);
  }
  return inputs;
}

nlohmann::json stamp(const RunConfig& cfg, const char* format) {
  return nlohmann::json{
      {"format", format},
      {"artifact", {{"name", kArtifactName}, {"version", kArtifactVersion}}},
      {"config_hash", cfg.config_hash}};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed while writing " + path.string());
}

fs::path draws_path(const fs::path& outdir, const ModelSpec& spec) {
  return outdir / ("draws_" + model_kind_name(spec) + ".jsonl");
}

void gate_convergence(const RunConfig& cfg, const std::string& kind,
                      double max_rhat, std::ostream& log) {
  if (std::isnan(max_rhat) || max_rhat > kRhatGate) {
    const std::string msg = "fit of " + kind + " model failed convergence gate "
                            "(max R-hat " + std::to_string(max_rhat) + " > " +
                            std::to_string(kRhatGate) + ")";
    if (cfg.allow_nonconverged) {
      log << "warning: " << msg << " (continuing: allow_nonconverged)\n";
    } else {
      throw ConvergenceFailure(msg);
    }
  }
}

// Fits the requested model and persists draws + convergence report, or
// reuses an existing draws file when it was produced by this exact config.
Fit ensure_fit(const RunConfig& cfg, const Inputs& inputs,
               const ModelSpec& spec, const fs::path& outdir, bool force_refit,
               std::ostream& log) {
  const std::string kind = model_kind_name(spec);
  const fs::path dpath = draws_path(outdir, spec);
  if (!force_refit && fs::exists(dpath)) {
    try {
      LoadedDraws loaded = load_draws_jsonl(dpath);
      if (loaded.config_hash == cfg.config_hash &&
          model_kind_name(loaded.fit.spec) == kind &&
          scheme_to_json(loaded.scheme) ==
              scheme_to_json(inputs.table.scheme())) {
        log << "reusing draws: " << dpath.string() << "\n";
        gate_convergence(cfg, kind, loaded.max_rhat, log);
        return std::move(loaded.fit);
      }
      log << "existing draws file does not match this config; refitting\n";
    } catch (const std::exception& e) {
      log << "cannot reuse " << dpath.string() << " (" << e.what()
          << "); refitting\n";
    }
  }

  Fit fit = fit_model(inputs.table, spec, cfg.hyper, cfg.chains);
  save_draws_jsonl(fit, inputs.table.scheme(), cfg.config_hash, dpath);
  nlohmann::json cj = stamp(cfg, "bvsa-convergence/1");
  cj["model"] = kind;
  cj.update(fit.report.to_json());
  write_json(outdir / ("convergence_" + kind + ".json"), cj);
  log << "fit " << kind << ": max R-hat " << fit.report.max_rhat
      << ", min ESS " << fit.report.min_ess << "\n";
  for (const auto& w : fit.report.warnings) log << "warning: " << w << "\n";
  gate_convergence(cfg, kind, fit.report.max_rhat, log);
  return fit;
}

int cmd_summarize(const RunConfig& cfg, const fs::path& outdir,
                  std::ostream& log) {
  const Inputs inputs = load_inputs(cfg);
  const fs::path path = outdir / "summary_table.json";
  save_summary(path, inputs.table, cfg.config_hash);
  log << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_fit(const RunConfig& cfg, const fs::path& outdir, std::ostream& log) {
  const Inputs inputs = load_inputs(cfg);
  ensure_fit(cfg, inputs, cfg.model, outdir, /*force_refit=*/true, log);
  return 0;
}

int cmd_measures(const RunConfig& cfg, const fs::path& outdir,
                 std::ostream& log) {
  const Inputs inputs = load_inputs(cfg);
  const Fit fit =
      ensure_fit(cfg, inputs, cfg.model, outdir, /*force_refit=*/false, log);
  const std::string kind = model_kind_name(cfg.model);
  const MeasureSet set =
      summarize_measures(fit.cells, inputs.table.scheme(), cfg.measures);
  const fs::path csv = outdir / ("measures_" + kind + ".csv");
  write_forest_csv(set, inputs.table.scheme(), kind, cfg.config_hash, csv);
  nlohmann::json mj = measures_to_json(set, inputs.table.scheme(), kind,
                                       cfg.config_hash);
  if (!inputs.table.assumptions().empty()) {
    mj["assumptions"] = inputs.table.assumptions();
  }
  write_json(outdir / ("measures_" + kind + ".json"), mj);
  log << "wrote " << csv.string() << "\n";
  return 0;
}

struct ArmSeries {
  std::vector<double> times;
  std::vector<int> events;
};

int cmd_check(const RunConfig& cfg, const fs::path& outdir, std::ostream& log) {
  const Inputs inputs = load_inputs(cfg);
  const Fit fit =
      ensure_fit(cfg, inputs, cfg.model, outdir, /*force_refit=*/false, log);
  const std::string kind = model_kind_name(cfg.model);
  const FactorScheme& scheme = inputs.table.scheme();
  const int G = scheme.subgroup_count();

  // Census of patients to replicate, plus the censoring mechanism.
  std::vector<CensusEntry> census;
  std::array<KMCurve, 2> censor_curves;
  std::array<const KMCurve*, 2> curve_ptrs{nullptr, nullptr};
  std::array<ArmSeries, 2> observed;
  if (inputs.patient_level) {
    census.reserve(inputs.patients.size());
    for (const auto& p : inputs.patients) {
      census.push_back({p.arm, scheme.subgroup_index(p.levels), p.time});
      observed[p.arm].times.push_back(p.time);
      observed[p.arm].events.push_back(p.event);
    }
    for (int a = 0; a < 2; ++a) {
      std::vector<int> censored(observed[a].events.size());
      for (std::size_t i = 0; i < censored.size(); ++i) {
        censored[i] = 1 - observed[a].events[i];
      }
      censor_curves[a] = km_estimate(observed[a].times, censored);
      curve_ptrs[a] = &censor_curves[a];
    }
  } else {
    for (int a = 0; a < 2; ++a) {
      for (int g = 1; g <= G; ++g) {
        for (long long k = 0; k < inputs.table.n(a, g); ++k) {
          census.push_back({a, g, cfg.checks.censor_horizon});
        }
      }
    }
  }

  const int n_reps = std::max(cfg.checks.replicates, cfg.checks.overlay_draws);
  const std::vector<ReplicatedDataset> reps =
      simulate_ppd(fit.cells, census, n_reps,
                   derive_seed(cfg.seed, kPpcStreamTag), curve_ptrs);

  // Replicate statistics: event and AE totals per arm, and (with
  // patient-level data) RMST of the replicated survival curves per arm.
  struct StatDef {
    std::string name;
    double observed = 0.0;
    std::vector<double> reps;
  };
  std::vector<StatDef> stats;
  for (int a = 0; a < 2; ++a) {
    stats.push_back({"events_arm" + std::to_string(a),
                     static_cast<double>(inputs.table.total_events(a)),
                     {}});
    stats.push_back({"ae_arm" + std::to_string(a),
                     static_cast<double>(inputs.table.total_ae(a)),
                     {}});
    if (inputs.patient_level) {
      stats.push_back(
          {"rmst_arm" + std::to_string(a),
           rmst(km_estimate(observed[a].times, observed[a].events),
                cfg.checks.rmst_horizon),
           {}});
    }
  }
  const int n_pvalue_reps = cfg.checks.replicates;
  for (int r = 0; r < n_pvalue_reps; ++r) {
    const ReplicatedDataset& rep = reps[r];
    std::array<double, 2> events{0.0, 0.0}, aes{0.0, 0.0};
    std::array<ArmSeries, 2> series;
    for (std::size_t i = 0; i < census.size(); ++i) {
      const int a = census[i].arm;
      events[a] += rep.patients[i].event;
      aes[a] += rep.patients[i].ae;
      if (inputs.patient_level) {
        series[a].times.push_back(rep.patients[i].y);
        series[a].events.push_back(rep.patients[i].event);
      }
    }
    for (auto& s : stats) {
      const int a = s.name.back() - '0';
      if (s.name.rfind("events_", 0) == 0) {
        s.reps.push_back(events[a]);
      } else if (s.name.rfind("ae_", 0) == 0) {
        s.reps.push_back(aes[a]);
      } else {
        s.reps.push_back(rmst(km_estimate(series[a].times, series[a].events),
                              cfg.checks.rmst_horizon));
      }
    }
  }

  nlohmann::json pj = stamp(cfg, "bvsa-ppc/1");
  pj["model"] = kind;
  pj["settings"] = {{"replicates", cfg.checks.replicates},
                    {"overlay_draws", cfg.checks.overlay_draws},
                    {"rmst_horizon", cfg.checks.rmst_horizon},
                    {"censoring", inputs.patient_level
                                      ? "reverse-km"
                                      : "administrative"},
                    {"censor_horizon", cfg.checks.censor_horizon}};
  pj["resolution"] = 2.0 / (static_cast<double>(n_pvalue_reps) + 1.0);
  nlohmann::json sj = nlohmann::json::array();
  for (auto& s : stats) {
    double mean = 0.0;
    for (double x : s.reps) mean += x;
    mean /= static_cast<double>(s.reps.size());
    sj.push_back({{"name", s.name},
                  {"observed", s.observed},
                  {"replicate_mean", mean},
                  {"ppp", ppp_value(s.observed, s.reps)}});
  }
  pj["statistics"] = sj;
  if (!inputs.table.assumptions().empty()) {
    pj["assumptions"] = inputs.table.assumptions();
  }
  write_json(outdir / ("ppc_" + kind + ".json"), pj);

  // Overlay table: replicated KM curves per arm, observed curve as
  // replicate -1 when patient-level data exist.
  const fs::path opath = outdir / ("ppc_overlay_" + kind + ".csv");
  std::ofstream out(opath);
  if (!out) throw std::runtime_error("cannot open " + opath.string() + " for writing");
  out << "# " << kArtifactName << " " << kArtifactVersion << "\n";
  out << "# config_hash=" << cfg.config_hash << "\n";
  out << "replicate,arm,time,survival\n";
  auto emit_curve = [&out](int rep_id, int arm, const KMCurve& curve) {
    out << rep_id << "," << arm << ",0,1\n";
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
      out << rep_id << "," << arm << ","
          << nlohmann::json(curve.times[k]).dump() << ","
          << nlohmann::json(curve.survival[k]).dump() << "\n";
    }
  };
  if (inputs.patient_level) {
    for (int a = 0; a < 2; ++a) {
      emit_curve(-1, a, km_estimate(observed[a].times, observed[a].events));
    }
  }
  for (int r = 0; r < cfg.checks.overlay_draws; ++r) {
    std::array<ArmSeries, 2> series;
    for (std::size_t i = 0; i < census.size(); ++i) {
      const int a = census[i].arm;
      series[a].times.push_back(reps[r].patients[i].y);
      series[a].events.push_back(reps[r].patients[i].event);
    }
    for (int a = 0; a < 2; ++a) {
      emit_curve(r, a, km_estimate(series[a].times, series[a].events));
    }
  }
  if (!out) throw std::runtime_error("failed while writing " + opath.string());
  log << "wrote " << opath.string() << "\n";
  return 0;
}

int cmd_compare(const RunConfig& cfg, const fs::path& outdir,
                std::ostream& log) {
  const Inputs inputs = load_inputs(cfg);
  nlohmann::json mj = nlohmann::json::array();
  for (const auto& spec : cfg.compare_models) {
    const Fit fit =
        ensure_fit(cfg, inputs, spec, outdir, /*force_refit=*/false, log);
    const JointModel model(inputs.table.scheme(), spec, cfg.hyper);
    const auto [dic_value, p_d] =
        dic(model, fit.draws, fit.cells, inputs.table);
    const auto [waic_value, p_waic] = waic(fit.cells, inputs.table);
    mj.push_back({{"model", model_kind_name(spec)},
                  {"dic", dic_value},
                  {"p_d", p_d},
                  {"waic", waic_value},
                  {"p_waic", p_waic}});
    log << model_kind_name(spec) << ": DIC " << dic_value << " (p_D " << p_d
        << "), WAIC " << waic_value << " (p_WAIC " << p_waic << ")\n";
  }
  nlohmann::json cj = stamp(cfg, "bvsa-compare/1");
  cj["models"] = mj;
  if (!inputs.table.assumptions().empty()) {
    cj["assumptions"] = inputs.table.assumptions();
  }
  write_json(outdir / "compare.json", cj);
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const fs::path& outdir,
                 std::ostream& log) {
  if (!cfg.simulate) {
    throw std::runtime_error("the simulate command requires a 'simulate' "
                             "config block");
  }
  if (!cfg.scheme) {
    throw std::runtime_error("the simulate command requires a 'scheme'");
  }
  const FactorScheme& scheme = *cfg.scheme;
  const int G = scheme.subgroup_count();
  const SimulateConfig& sim = *cfg.simulate;
  sim.validate(G);

  Rng rng(derive_seed(cfg.seed, kSimStreamTag));
  std::vector<PatientRecord> patients;
  patients.reserve(static_cast<std::size_t>(2) * G * sim.n_per_cell);
  long long id = 0;
  char buf[32];
  for (int a = 0; a < 2; ++a) {
    for (int g = 1; g <= G; ++g) {
      for (int k = 0; k < sim.n_per_cell; ++k) {
        PatientRecord rec;
        std::snprintf(buf, sizeof(buf), "sim-%06lld", ++id);
        rec.id = buf;
        rec.arm = a;
        const int w = rng.bernoulli(sim.p[a][g - 1]) ? 1 : 0;
        const double t = rng.exponential(sim.lambda[a][w][g - 1]);
        const double c = sim.censor_kind == "fixed"
                             ? sim.censor_time
                             : rng.uniform(sim.censor_lo, sim.censor_hi);
        rec.time = std::min(t, c);
        rec.event = t <= c ? 1 : 0;
        rec.ae = w;
        rec.levels = scheme.subgroup_levels(g);
        patients.push_back(std::move(rec));
      }
    }
  }
  const fs::path path = outdir / "patients.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_patients_csv(out, patients, scheme);
  if (!out) throw std::runtime_error("failed while writing " + path.string());
  log << "wrote " << path.string() << " (" << patients.size() << " patients)\n";
  return 0;
}

}  // namespace

Command command_from_name(const std::string& name) {
  if (name == "summarize") return Command::Summarize;
  if (name == "fit") return Command::Fit;
  if (name == "measures") return Command::Measures;
  if (name == "check") return Command::Check;
  if (name == "compare") return Command::Compare;
  if (name == "simulate") return Command::Simulate;
  throw std::invalid_argument("unknown command: " + name);
}

int run_pipeline(const RunConfig& cfg, Command command, std::ostream& log) {
  try {
    const fs::path outdir = cfg.resolve(cfg.output_dir);
    fs::create_directories(outdir);
    switch (command) {
      case Command::Summarize:
        return cmd_summarize(cfg, outdir, log);
      case Command::Fit:
        return cmd_fit(cfg, outdir, log);
      case Command::Measures:
        return cmd_measures(cfg, outdir, log);
      case Command::Check:
        return cmd_check(cfg, outdir, log);
      case Command::Compare:
        return cmd_compare(cfg, outdir, log);
      case Command::Simulate:
        return cmd_simulate(cfg, outdir, log);
    }
    return 1;
  } catch (const ConvergenceFailure& e) {
    log << "error: " << e.what() << "\n";
    log << "rerun with --allow-nonconverged to proceed anyway\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bvsa
