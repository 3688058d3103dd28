#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bvsa/model.hpp"
#include "bvsa/sampler.hpp"

namespace bvsa {

// Adapts a model and a data table to the sampler's density interface.
class PosteriorTarget : public TargetDensity {
 public:
  PosteriorTarget(const JointModel& model, const SummaryTable& table)
      : model_(model), table_(table) {}
  int dim() const override { return model_.dim(); }
  double log_density(const Eigen::VectorXd& u) const override {
    return model_.log_posterior(u, table_);
  }

 private:
  const JointModel& model_;
  const SummaryTable& table_;
};

// A fitted model: kept draws plus the per-draw cell parameters that the
// measures and posterior predictive checks consume.
struct Fit {
  ModelSpec spec;
  Hyperparams hyper;
  ChainConfig cfg;
  DrawSet draws;
  std::vector<std::string> names;
  ConvergenceReport report;
  std::vector<CellParams> cells;  // chain-major, one per kept draw
  long long total_draws() const { return draws.total_draws(); }
};

Fit fit_model(const SummaryTable& table, const ModelSpec& spec,
              const Hyperparams& hp, const ChainConfig& cfg);

// JSON-lines persistence: a header object (format tag, artifact version,
// config hash, model, factor scheme, sampler settings, parameter names)
// followed by one line per kept draw carrying the unconstrained state, its
// log posterior, and the implied cell-level hazard rates and AE
// probabilities. Numbers round-trip exactly, so reloading reproduces the
// fit bit for bit.
void save_draws_jsonl(const Fit& fit, const FactorScheme& scheme,
                      const std::string& config_hash,
                      const std::filesystem::path& path);

struct LoadedDraws {
  explicit LoadedDraws(FactorScheme s) : scheme(std::move(s)) {}
  FactorScheme scheme;
  Fit fit;  // report and block statistics are not persisted
  std::string config_hash;
  double max_rhat = 0.0;  // convergence summary recorded at fit time
};

LoadedDraws load_draws_jsonl(const std::filesystem::path& path);

}  // namespace bvsa
