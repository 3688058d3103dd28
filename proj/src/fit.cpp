#include "bvsa/fit.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>

#include "bvsa/version.hpp"

namespace bvsa {

namespace {

void require_keys(const nlohmann::json& obj,
                  const std::vector<std::string>& keys, const char* where) {
  for (const auto& k : keys) {
    if (!obj.contains(k)) {
      throw std::runtime_error(std::string("draws file: missing key '") + k +
                               "' in " + where);
    }
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const auto& k : keys) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::runtime_error(std::string("draws file: unknown key '") +
                               item.key() + "' in " + where);
    }
  }
}

nlohmann::json hyper_to_json(const Hyperparams& hp) {
  return {{"sigma_mu", hp.sigma_mu},
          {"sigma_tau", hp.sigma_tau},
          {"sigma_mu_gamma", hp.sigma_mu_gamma},
          {"sigma_tau_gamma", hp.sigma_tau_gamma}};
}

Hyperparams hyper_from_json(const nlohmann::json& j) {
  require_keys(j, {"sigma_mu", "sigma_tau", "sigma_mu_gamma", "sigma_tau_gamma"},
               "hyperparams");
  Hyperparams hp;
  j.at("sigma_mu").get_to(hp.sigma_mu);
  j.at("sigma_tau").get_to(hp.sigma_tau);
  j.at("sigma_mu_gamma").get_to(hp.sigma_mu_gamma);
  j.at("sigma_tau_gamma").get_to(hp.sigma_tau_gamma);
  return hp;
}

}  // namespace

Fit fit_model(const SummaryTable& table, const ModelSpec& spec,
              const Hyperparams& hp, const ChainConfig& cfg) {
  const JointModel model(table.scheme(), spec, hp);
  const PosteriorTarget target(model, table);
  const Eigen::VectorXd init = model.initial_point(table);

  Fit fit;
  fit.spec = spec;
  fit.hyper = hp;
  fit.cfg = cfg;
  fit.draws = run_chains(target, cfg, init, model.sampler_blocks());
  fit.names = model.parameter_names();
  fit.report = diagnose(fit.draws, fit.names);
  const long long total = fit.draws.total_draws();
  fit.cells.reserve(total);
  for (long long i = 0; i < total; ++i) {
    fit.cells.push_back(model.cell_params(model.to_constrained(fit.draws.draw(i))));
  }
  return fit;
}

void save_draws_jsonl(const Fit& fit, const FactorScheme& scheme,
                      const std::string& config_hash,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open draws file for writing: " +
                             path.string());
  }
  nlohmann::json header{
      {"format", kDrawsFormat},
      {"artifact", {{"name", kArtifactName}, {"version", kArtifactVersion}}},
      {"config_hash", config_hash},
      {"model", model_kind_name(fit.spec)},
      {"scheme", scheme_to_json(scheme)},
      {"hyperparams", hyper_to_json(fit.hyper)},
      {"sampler",
       {{"chains", fit.cfg.chains},
        {"iterations", fit.cfg.iterations},
        {"warmup", fit.cfg.warmup},
        {"seed", fit.cfg.seed},
        {"target_accept", fit.cfg.target_accept},
        {"init_jitter", fit.cfg.init_jitter},
        {"max_init_tries", fit.cfg.max_init_tries}}},
      {"max_rhat", fit.report.max_rhat},
      {"dim", fit.draws.dim},
      {"parameters", fit.names}};
  out << header.dump() << '\n';

  const int kept = fit.draws.kept();
  for (int c = 0; c < fit.draws.chains(); ++c) {
    for (int i = 0; i < kept; ++i) {
      const long long flat = static_cast<long long>(c) * kept + i;
      const CellParams& cp = fit.cells[flat];
      std::vector<std::vector<double>> lambda;
      for (int a = 0; a < 2; ++a) {
        for (int w = 0; w < 2; ++w) {
          lambda.emplace_back(cp.lambda[a][w].data(),
                              cp.lambda[a][w].data() + cp.lambda[a][w].size());
        }
      }
      std::vector<std::vector<double>> p;
      for (int a = 0; a < 2; ++a) {
        p.emplace_back(cp.p[a].data(), cp.p[a].data() + cp.p[a].size());
      }
      const Eigen::VectorXd u = fit.draws.chain_draws[c].row(i).transpose();
      nlohmann::json line{
          {"chain", c},
          {"index", i},
          {"lp", fit.draws.chain_lp[c][i]},
          {"u", std::vector<double>(u.data(), u.data() + u.size())},
          {"lambda", lambda},
          {"p", p}};
      out << line.dump() << '\n';
    }
  }
  if (!out) {
    throw std::runtime_error("failed while writing draws file: " +
                             path.string());
  }
}

LoadedDraws load_draws_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open draws file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("draws file is empty: " + path.string());
  }
  const nlohmann::json header = nlohmann::json::parse(line);
  require_keys(header,
               {"format", "artifact", "config_hash", "model", "scheme",
                "hyperparams", "sampler", "max_rhat", "dim", "parameters"},
               "header");
  if (header.at("format").get<std::string>() != kDrawsFormat) {
    throw std::runtime_error("unsupported draws format: " +
                             header.at("format").dump());
  }

  LoadedDraws loaded(scheme_from_json(header.at("scheme")));
  loaded.config_hash = header.at("config_hash").get<std::string>();
  Fit& fit = loaded.fit;
  fit.spec = model_spec_from_name(header.at("model").get<std::string>());
  fit.hyper = hyper_from_json(header.at("hyperparams"));
  const nlohmann::json& sj = header.at("sampler");
  require_keys(sj,
               {"chains", "iterations", "warmup", "seed", "target_accept",
                "init_jitter", "max_init_tries"},
               "sampler");
  fit.cfg.chains = sj.at("chains").get<int>();
  fit.cfg.iterations = sj.at("iterations").get<int>();
  fit.cfg.warmup = sj.at("warmup").get<int>();
  fit.cfg.seed = sj.at("seed").get<std::uint64_t>();
  fit.cfg.target_accept = sj.at("target_accept").get<double>();
  fit.cfg.init_jitter = sj.at("init_jitter").get<double>();
  fit.cfg.max_init_tries = sj.at("max_init_tries").get<int>();
  fit.names = header.at("parameters").get<std::vector<std::string>>();
  loaded.max_rhat = header.at("max_rhat").is_number()
                        ? header.at("max_rhat").get<double>()
                        : std::numeric_limits<double>::quiet_NaN();

  const JointModel model(loaded.scheme, fit.spec, fit.hyper);
  const int dim = header.at("dim").get<int>();
  if (dim != model.dim() || static_cast<int>(fit.names.size()) != dim) {
    throw std::runtime_error("draws file dimension inconsistent with model");
  }
  const int kept = fit.cfg.kept();
  const int chains = fit.cfg.chains;
  fit.draws.cfg = fit.cfg;
  fit.draws.dim = dim;
  fit.draws.chain_draws.assign(chains, Eigen::MatrixXd(kept, dim));
  fit.draws.chain_lp.assign(chains, Eigen::VectorXd(kept));
  fit.cells.reserve(static_cast<std::size_t>(chains) * kept);

  long long count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json dj = nlohmann::json::parse(line);
    require_keys(dj, {"chain", "index", "lp", "u", "lambda", "p"}, "draw");
    const int c = dj.at("chain").get<int>();
    const int i = dj.at("index").get<int>();
    if (c < 0 || c >= chains || i < 0 || i >= kept) {
      throw std::runtime_error("draws file: draw index out of range");
    }
    const auto u = dj.at("u").get<std::vector<double>>();
    if (static_cast<int>(u.size()) != dim) {
      throw std::runtime_error("draws file: state length mismatch");
    }
    for (int j = 0; j < dim; ++j) fit.draws.chain_draws[c](i, j) = u[j];
    fit.draws.chain_lp[c][i] = dj.at("lp").get<double>();
    ++count;
  }
  if (count != static_cast<long long>(chains) * kept) {
    throw std::runtime_error("draws file: expected " +
                             std::to_string(static_cast<long long>(chains) * kept) +
                             " draws, found " + std::to_string(count));
  }
  // Cell parameters are recomputed from the stored states through the same
  // code path as at fit time, so downstream results do not depend on whether
  // the fit was reloaded or produced in-process.
  for (long long i = 0; i < count; ++i) {
    fit.cells.push_back(model.cell_params(model.to_constrained(fit.draws.draw(i))));
  }
  return loaded;
}

}  // namespace bvsa
