#include "bvsa/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bvsa {

namespace {

void reject_unknown(const nlohmann::json& obj,
                    const std::vector<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) {
    throw ConfigError("expected an object at " + where);
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const auto& k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

double get_number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

int get_int(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  return j.get<int>();
}

std::string get_string(const nlohmann::json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

bool get_bool(const nlohmann::json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be a boolean");
  return j.get<bool>();
}

// Prior scales accept either a scalar (applied to both arms) or a two-element array.
std::array<double, 2> get_arm_pair(const nlohmann::json& j,
                                   const std::string& where) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v};
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(where + " must be a number or a two-element array");
}

std::vector<double> get_number_vector(const nlohmann::json& j,
                                      const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

FactorScheme scheme_from_config(const nlohmann::json& j) {
  reject_unknown(j, {"factors"}, "scheme");
  if (!j.contains("factors")) throw ConfigError("scheme requires 'factors'");
  const auto& fj = j.at("factors");
  if (!fj.is_array() || fj.empty()) {
    throw ConfigError("scheme.factors must be a nonempty array");
  }
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < fj.size(); ++i) {
    const std::string where = "scheme.factors[" + std::to_string(i) + "]";
    reject_unknown(fj[i], {"name", "labels"}, where);
    if (!fj[i].contains("name") || !fj[i].contains("labels")) {
      throw ConfigError(where + " requires 'name' and 'labels'");
    }
    Factor f;
    f.name = get_string(fj[i].at("name"), where + ".name");
    const auto& lj = fj[i].at("labels");
    if (!lj.is_array()) throw ConfigError(where + ".labels must be an array");
    for (const auto& l : lj) f.labels.push_back(get_string(l, where + ".labels"));
    factors.push_back(std::move(f));
  }
  return FactorScheme(factors);
}

}  // namespace

void CheckConfig::validate() const {
  if (replicates < 50) {
    throw ConfigError("checks.replicates must be at least 50");
  }
  if (overlay_draws < 0) {
    throw ConfigError("checks.overlay_draws must be nonnegative");
  }
  if (!(rmst_horizon > 0.0) || !std::isfinite(rmst_horizon)) {
    throw ConfigError("checks.rmst_horizon must be positive");
  }
  if (!(censor_horizon > 0.0) || !std::isfinite(censor_horizon)) {
    throw ConfigError("checks.censor_horizon must be positive");
  }
}

void SimulateConfig::validate(int subgroups) const {
  if (n_per_cell < 1) throw ConfigError("simulate.n_per_cell must be positive");
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      if (static_cast<int>(lambda[a][w].size()) != subgroups) {
        throw ConfigError("simulate.lambda must be a 2x2 nest of arrays with "
                          "one rate per subgroup");
      }
      for (double l : lambda[a][w]) {
        if (!(l > 0.0) || !std::isfinite(l)) {
          throw ConfigError("simulate.lambda entries must be positive");
        }
      }
    }
    if (static_cast<int>(p[a].size()) != subgroups) {
      throw ConfigError("simulate.p must hold one probability per subgroup "
                        "for each arm");
    }
    for (double v : p[a]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("simulate.p entries must lie in [0,1]");
      }
    }
  }
  if (censor_kind == "fixed") {
    if (!(censor_time > 0.0) || !std::isfinite(censor_time)) {
      throw ConfigError("simulate.censor.time must be positive");
    }
  } else if (censor_kind == "uniform") {
    if (!(censor_lo >= 0.0) || !(censor_hi > censor_lo) ||
        !std::isfinite(censor_hi)) {
      throw ConfigError("simulate.censor uniform bounds must satisfy "
                        "0 <= lo < hi");
    }
  } else {
    throw ConfigError("simulate.censor.kind must be 'fixed' or 'uniform'");
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

RunConfig config_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir,
                           const std::string& config_hash) {
  reject_unknown(j,
                 {"seed", "data", "scheme", "model", "compare_models",
                  "hyperparams", "sampler", "measures", "checks", "simulate",
                  "output_dir", "allow_nonconverged"},
                 "config root");
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.config_hash = config_hash;

  if (!j.contains("seed")) {
    throw ConfigError("config requires 'seed' (runs must be reproducible)");
  }
  if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
    throw ConfigError("seed must be a nonnegative integer");
  }
  if (j.at("seed").is_number_integer() && j.at("seed").get<long long>() < 0) {
    throw ConfigError("seed must be a nonnegative integer");
  }
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.chains.seed = cfg.seed;

  if (!j.contains("data")) throw ConfigError("config requires 'data'");
  reject_unknown(j.at("data"), {"patients", "summary"}, "data");
  const bool has_patients = j.at("data").contains("patients");
  const bool has_summary = j.at("data").contains("summary");
  if (has_patients == has_summary) {
    throw ConfigError("data must name exactly one of 'patients' or 'summary'");
  }
  if (has_patients) {
    cfg.patients_path = get_string(j.at("data").at("patients"), "data.patients");
  } else {
    cfg.summary_path = get_string(j.at("data").at("summary"), "data.summary");
  }

  if (j.contains("scheme")) cfg.scheme = scheme_from_config(j.at("scheme"));
  if (cfg.patients_path && !cfg.scheme) {
    throw ConfigError("patient-level input requires a 'scheme'");
  }

  if (j.contains("model")) {
    try {
      cfg.model = model_spec_from_name(get_string(j.at("model"), "model"));
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("compare_models")) {
    if (!j.at("compare_models").is_array() || j.at("compare_models").empty()) {
      throw ConfigError("compare_models must be a nonempty array");
    }
    for (const auto& m : j.at("compare_models")) {
      try {
        cfg.compare_models.push_back(
            model_spec_from_name(get_string(m, "compare_models")));
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
  } else {
    cfg.compare_models = {model_spec_from_name("saturated"),
                          model_spec_from_name("additive")};
  }

  if (j.contains("hyperparams")) {
    const auto& hj = j.at("hyperparams");
    reject_unknown(hj,
                   {"sigma_mu", "sigma_tau", "sigma_mu_gamma",
                    "sigma_tau_gamma"},
                   "hyperparams");
    if (hj.contains("sigma_mu")) {
      cfg.hyper.sigma_mu = get_arm_pair(hj.at("sigma_mu"), "hyperparams.sigma_mu");
    }
    if (hj.contains("sigma_tau")) {
      cfg.hyper.sigma_tau = get_arm_pair(hj.at("sigma_tau"), "hyperparams.sigma_tau");
    }
    if (hj.contains("sigma_mu_gamma")) {
      cfg.hyper.sigma_mu_gamma =
          get_arm_pair(hj.at("sigma_mu_gamma"), "hyperparams.sigma_mu_gamma");
    }
    if (hj.contains("sigma_tau_gamma")) {
      cfg.hyper.sigma_tau_gamma =
          get_arm_pair(hj.at("sigma_tau_gamma"), "hyperparams.sigma_tau_gamma");
    }
    try {
      cfg.hyper.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }

  if (j.contains("sampler")) {
    const auto& sj = j.at("sampler");
    reject_unknown(sj,
                   {"chains", "iterations", "warmup", "target_accept",
                    "init_jitter", "max_init_tries"},
                   "sampler");
    if (sj.contains("chains")) cfg.chains.chains = get_int(sj.at("chains"), "sampler.chains");
    if (sj.contains("iterations")) {
      cfg.chains.iterations = get_int(sj.at("iterations"), "sampler.iterations");
    }
    if (sj.contains("warmup")) cfg.chains.warmup = get_int(sj.at("warmup"), "sampler.warmup");
    if (sj.contains("target_accept")) {
      cfg.chains.target_accept =
          get_number(sj.at("target_accept"), "sampler.target_accept");
    }
    if (sj.contains("init_jitter")) {
      cfg.chains.init_jitter = get_number(sj.at("init_jitter"), "sampler.init_jitter");
    }
    if (sj.contains("max_init_tries")) {
      cfg.chains.max_init_tries =
          get_int(sj.at("max_init_tries"), "sampler.max_init_tries");
    }
  }
  try {
    cfg.chains.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("measures")) {
    const auto& mj = j.at("measures");
    reject_unknown(mj,
                   {"kappa0", "tau_h", "delta", "theta_weights", "eta_b1",
                    "eta_b2"},
                   "measures");
    if (mj.contains("kappa0")) cfg.measures.kappa0 = get_number(mj.at("kappa0"), "measures.kappa0");
    if (mj.contains("tau_h")) cfg.measures.tau_h = get_number(mj.at("tau_h"), "measures.tau_h");
    if (mj.contains("delta")) cfg.measures.delta = get_number(mj.at("delta"), "measures.delta");
    if (mj.contains("theta_weights")) {
      const auto w = get_number_vector(mj.at("theta_weights"), "measures.theta_weights");
      if (w.size() != 4) {
        throw ConfigError("measures.theta_weights must have four entries");
      }
      std::copy(w.begin(), w.end(), cfg.measures.theta_weights.begin());
    }
    if (mj.contains("eta_b1")) {
      cfg.measures.eta_b1 = get_number_vector(mj.at("eta_b1"), "measures.eta_b1");
    }
    if (mj.contains("eta_b2")) cfg.measures.eta_b2 = get_number(mj.at("eta_b2"), "measures.eta_b2");
  }
  try {
    cfg.measures.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("checks")) {
    const auto& cj = j.at("checks");
    reject_unknown(cj,
                   {"replicates", "overlay_draws", "rmst_horizon",
                    "censor_horizon"},
                   "checks");
    if (cj.contains("replicates")) {
      cfg.checks.replicates = get_int(cj.at("replicates"), "checks.replicates");
    }
    if (cj.contains("overlay_draws")) {
      cfg.checks.overlay_draws = get_int(cj.at("overlay_draws"), "checks.overlay_draws");
    }
    if (cj.contains("rmst_horizon")) {
      cfg.checks.rmst_horizon = get_number(cj.at("rmst_horizon"), "checks.rmst_horizon");
    }
    if (cj.contains("censor_horizon")) {
      cfg.checks.censor_horizon =
          get_number(cj.at("censor_horizon"), "checks.censor_horizon");
    }
  }
  cfg.checks.validate();

  if (j.contains("simulate")) {
    const auto& sj = j.at("simulate");
    reject_unknown(sj, {"n_per_cell", "lambda", "p", "censor"}, "simulate");
    SimulateConfig sim;
    if (sj.contains("n_per_cell")) {
      sim.n_per_cell = get_int(sj.at("n_per_cell"), "simulate.n_per_cell");
    }
    if (!sj.contains("lambda") || !sj.contains("p")) {
      throw ConfigError("simulate requires 'lambda' and 'p'");
    }
    const auto& lj = sj.at("lambda");
    if (!lj.is_array() || lj.size() != 2 || !lj[0].is_array() ||
        !lj[1].is_array() || lj[0].size() != 2 || lj[1].size() != 2) {
      throw ConfigError("simulate.lambda must be nested [arm][ae-status] arrays");
    }
    for (int a = 0; a < 2; ++a) {
      for (int w = 0; w < 2; ++w) {
        sim.lambda[a][w] = get_number_vector(lj[a][w], "simulate.lambda");
      }
    }
    const auto& pj = sj.at("p");
    if (!pj.is_array() || pj.size() != 2) {
      throw ConfigError("simulate.p must be a two-element array of arrays");
    }
    for (int a = 0; a < 2; ++a) {
      sim.p[a] = get_number_vector(pj[a], "simulate.p");
    }
    if (sj.contains("censor")) {
      const auto& cj = sj.at("censor");
      reject_unknown(cj, {"kind", "time", "lo", "hi"}, "simulate.censor");
      if (cj.contains("kind")) sim.censor_kind = get_string(cj.at("kind"), "simulate.censor.kind");
      if (cj.contains("time")) sim.censor_time = get_number(cj.at("time"), "simulate.censor.time");
      if (cj.contains("lo")) sim.censor_lo = get_number(cj.at("lo"), "simulate.censor.lo");
      if (cj.contains("hi")) sim.censor_hi = get_number(cj.at("hi"), "simulate.censor.hi");
    }
    cfg.simulate = std::move(sim);
  }

  if (j.contains("output_dir")) {
    cfg.output_dir = get_string(j.at("output_dir"), "output_dir");
  }
  if (j.contains("allow_nonconverged")) {
    cfg.allow_nonconverged = get_bool(j.at("allow_nonconverged"), "allow_nonconverged");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  std::filesystem::path base = path.parent_path();
  if (base.empty()) base = ".";
  return config_from_json(j, base, fnv1a_hex(bytes));
}

}  // namespace bvsa
