#include "bvsa/trial_data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bvsa/version.hpp"

namespace bvsa {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Sorted Kahan sum: permutation-invariant to the last bit, which lets the
// summary builder promise exact equality for reordered inputs.
double stable_sum(std::vector<double>& xs) {
  std::sort(xs.begin(), xs.end());
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace

FactorScheme::FactorScheme(std::vector<Factor> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("scheme needs at least one factor");
  long long g = 1;
  for (const auto& f : factors_) {
    if (f.name.empty()) throw std::invalid_argument("factor with empty name");
    if (f.labels.size() < 2)
      throw std::invalid_argument("factor '" + f.name + "' needs >= 2 levels");
    for (size_t i = 0; i < f.labels.size(); ++i)
      for (size_t k = i + 1; k < f.labels.size(); ++k)
        if (f.labels[i] == f.labels[k])
          throw std::invalid_argument("factor '" + f.name + "' has duplicate label '" +
                                      f.labels[i] + "'");
    g *= static_cast<long long>(f.labels.size());
  }
  for (size_t i = 0; i < factors_.size(); ++i)
    for (size_t k = i + 1; k < factors_.size(); ++k)
      if (factors_[i].name == factors_[k].name)
        throw std::invalid_argument("duplicate factor name '" + factors_[i].name + "'");
  if (g > 4096) throw std::invalid_argument("subgroup count over 4096");
  g_count_ = static_cast<int>(g);
}

int FactorScheme::level_count(int j) const { return static_cast<int>(factor(j).labels.size()); }

const Factor& FactorScheme::factor(int j) const {
  if (j < 1 || j > factor_count()) throw std::out_of_range("factor index");
  return factors_[j - 1];
}

int FactorScheme::subgroup_index(const std::vector<int>& levels) const {
  if (static_cast<int>(levels.size()) != factor_count())
    throw std::invalid_argument("level tuple has wrong length");
  int g = 0;
  for (int j = 1; j <= factor_count(); ++j) {
    int p = level_count(j);
    int lv = levels[j - 1];
    if (lv < 1 || lv > p) throw std::out_of_range("level out of range for factor " + factor(j).name);
    g = g * p + (lv - 1);
  }
  return g + 1;
}

std::vector<int> FactorScheme::subgroup_levels(int g) const {
  if (g < 1 || g > g_count_) throw std::out_of_range("subgroup index");
  std::vector<int> levels(factor_count());
  int rem = g - 1;
  for (int j = factor_count(); j >= 1; --j) {
    int p = level_count(j);
    levels[j - 1] = rem % p + 1;
    rem /= p;
  }
  return levels;
}

std::string FactorScheme::subgroup_label(int g) const {
  auto levels = subgroup_levels(g);
  std::string out;
  for (int j = 1; j <= factor_count(); ++j) {
    if (j > 1) out += '/';
    out += factor(j).labels[levels[j - 1] - 1];
  }
  return out;
}

int FactorScheme::level_from_label(int j, const std::string& label) const {
  const auto& f = factor(j);
  for (size_t i = 0; i < f.labels.size(); ++i)
    if (f.labels[i] == label) return static_cast<int>(i) + 1;
  throw std::invalid_argument("unknown label '" + label + "' for factor '" + f.name + "'");
}

SummaryTable::SummaryTable(FactorScheme scheme) : scheme_(std::move(scheme)) {
  int g = scheme_.subgroup_count();
  d_.assign(4 * g, 0);
  u_.assign(4 * g, 0.0);
  v_.assign(2 * g, 0);
  n_.assign(2 * g, 0);
}

int SummaryTable::idx3(int a, int w, int g) const {
  int gc = scheme_.subgroup_count();
  if (a < 0 || a > 1 || w < 0 || w > 1 || g < 1 || g > gc)
    throw std::out_of_range("summary cell index");
  return ((a * 2) + w) * gc + (g - 1);
}

int SummaryTable::idx2(int a, int g) const {
  int gc = scheme_.subgroup_count();
  if (a < 0 || a > 1 || g < 1 || g > gc) throw std::out_of_range("summary cell index");
  return a * gc + (g - 1);
}

long long SummaryTable::total_events(int a) const {
  long long s = 0;
  for (int w = 0; w < 2; ++w)
    for (int g = 1; g <= subgroup_count(); ++g) s += d(a, w, g);
  return s;
}

long long SummaryTable::total_ae(int a) const {
  long long s = 0;
  for (int g = 1; g <= subgroup_count(); ++g) s += v(a, g);
  return s;
}

long long SummaryTable::total_patients(int a) const {
  long long s = 0;
  for (int g = 1; g <= subgroup_count(); ++g) s += n(a, g);
  return s;
}

double SummaryTable::total_exposure(int a) const {
  double s = 0;
  for (int w = 0; w < 2; ++w)
    for (int g = 1; g <= subgroup_count(); ++g) s += u(a, w, g);
  return s;
}

std::vector<PatientRecord> ingest_patients(std::istream& in, const FactorScheme& scheme) {
  std::string line;
  if (!std::getline(in, line))
    throw IngestError(IngestError::Kind::BadHeader, 1, "empty input: no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> fixed = {"id", "arm", "time", "event", "ae"};
  auto header = split_csv_line(line);
  std::vector<int> fixed_col(fixed.size(), -1);
  std::vector<int> factor_col(scheme.factor_count(), -1);
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    bool known = false;
    for (size_t k = 0; k < fixed.size(); ++k) {
      if (name == fixed[k]) {
        if (fixed_col[k] != -1)
          throw IngestError(IngestError::Kind::BadHeader, 1, "duplicate column '" + name + "'");
        fixed_col[k] = static_cast<int>(c);
        known = true;
      }
    }
    for (int j = 1; j <= scheme.factor_count(); ++j) {
      if (name == scheme.factor(j).name) {
        if (factor_col[j - 1] != -1)
          throw IngestError(IngestError::Kind::BadHeader, 1, "duplicate column '" + name + "'");
        factor_col[j - 1] = static_cast<int>(c);
        known = true;
      }
    }
    if (!known)
      throw IngestError(IngestError::Kind::BadHeader, 1, "unknown column '" + name + "'");
  }
  for (size_t k = 0; k < fixed.size(); ++k)
    if (fixed_col[k] == -1)
      throw IngestError(IngestError::Kind::BadHeader, 1, "missing column '" + fixed[k] + "'");
  for (int j = 1; j <= scheme.factor_count(); ++j)
    if (factor_col[j - 1] == -1)
      throw IngestError(IngestError::Kind::BadHeader, 1,
                        "missing factor column '" + scheme.factor(j).name + "'");

  auto parse_flag = [](const std::string& s, int lineno, const char* what) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw IngestError(IngestError::Kind::BadFlag, lineno,
                      std::string(what) + " must be 0 or 1, got '" + s + "'");
  };

  std::vector<PatientRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // tolerate a trailing blank line
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IngestError(IngestError::Kind::MalformedRow, lineno,
                        "expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
    PatientRecord r;
    r.id = cells[fixed_col[0]];
    r.arm = parse_flag(cells[fixed_col[1]], lineno, "arm");
    const std::string& ts = cells[fixed_col[2]];
    double t = 0;
    auto res = std::from_chars(ts.data(), ts.data() + ts.size(), t);
    if (res.ec != std::errc{} || res.ptr != ts.data() + ts.size() || !std::isfinite(t))
      throw IngestError(IngestError::Kind::MalformedRow, lineno,
                        "cannot parse time '" + ts + "'");
    if (t < 0)
      throw IngestError(IngestError::Kind::NegativeTime, lineno,
                        "negative follow-up time " + ts);
    r.time = t;
    r.event = parse_flag(cells[fixed_col[3]], lineno, "event");
    r.ae = parse_flag(cells[fixed_col[4]], lineno, "ae");
    r.levels.resize(scheme.factor_count());
    for (int j = 1; j <= scheme.factor_count(); ++j) {
      const std::string& lab = cells[factor_col[j - 1]];
      try {
        r.levels[j - 1] = scheme.level_from_label(j, lab);
      } catch (const std::invalid_argument& e) {
        throw IngestError(IngestError::Kind::UnknownLabel, lineno, e.what());
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_patients_csv(std::ostream& out, const std::vector<PatientRecord>& records,
                        const FactorScheme& scheme) {
  out << "id,arm,time,event,ae";
  for (int j = 1; j <= scheme.factor_count(); ++j) out << ',' << scheme.factor(j).name;
  out << '\n';
  for (const auto& r : records) {
    // Round-trip formatting for time; nlohmann prints the shortest digits
    // that parse back to the same double.
    out << r.id << ',' << r.arm << ',' << nlohmann::json(r.time).dump() << ',' << r.event
        << ',' << r.ae;
    for (int j = 1; j <= scheme.factor_count(); ++j)
      out << ',' << scheme.factor(j).labels[r.levels[j - 1] - 1];
    out << '\n';
  }
}

SummaryTable compute_summaries(const std::vector<PatientRecord>& records,
                               const FactorScheme& scheme) {
  SummaryTable table(scheme);
  int gc = scheme.subgroup_count();
  std::vector<std::vector<double>> times(4 * gc);
  for (const auto& r : records) {
    int g = scheme.subgroup_index(r.levels);
    times[(r.arm * 2 + r.ae) * gc + (g - 1)].push_back(r.time);
    table.d(r.arm, r.ae, g) += r.event;
    table.v(r.arm, g) += r.ae;
    table.n(r.arm, g) += 1;
  }
  for (int a = 0; a < 2; ++a)
    for (int w = 0; w < 2; ++w)
      for (int g = 1; g <= gc; ++g)
        table.u(a, w, g) = stable_sum(times[(a * 2 + w) * gc + (g - 1)]);
  return table;
}

ValidationReport validate_summaries(const SummaryTable& table) {
  ValidationReport rep;
  int gc = table.subgroup_count();
  auto cell = [&](int a, int w, int g) {
    std::ostringstream os;
    os << "a=" << a << " w=" << w << " g=" << g;
    return os.str();
  };
  auto arm_cell = [&](int a, int g) {
    std::ostringstream os;
    os << "a=" << a << " g=" << g;
    return os.str();
  };
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      for (int g = 1; g <= gc; ++g) {
        ++rep.checks_run;
        double u = table.u(a, w, g);
        long long d = table.d(a, w, g);
        if (!std::isfinite(u) || u < 0)
          rep.failures.push_back({"exposure_nonnegative_finite", cell(a, w, g)});
        if (d < 0) rep.failures.push_back({"event_count_nonnegative", cell(a, w, g)});
        if (u == 0 && d > 0)
          rep.failures.push_back({"events_without_exposure", cell(a, w, g)});
      }
    }
    for (int g = 1; g <= gc; ++g) {
      ++rep.checks_run;
      long long v = table.v(a, g), n = table.n(a, g);
      if (n < 0) rep.failures.push_back({"patient_count_nonnegative", arm_cell(a, g)});
      if (v < 0 || v > n) rep.failures.push_back({"ae_count_in_range", arm_cell(a, g)});
    }
  }
  return rep;
}

nlohmann::ordered_json scheme_to_json(const FactorScheme& scheme) {
  nlohmann::ordered_json factors = nlohmann::ordered_json::array();
  for (const auto& f : scheme.factors())
    factors.push_back({{"name", f.name}, {"labels", f.labels}});
  return nlohmann::ordered_json{{"factors", std::move(factors)}};
}

FactorScheme scheme_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("factors"))
    throw std::runtime_error("scheme: expected object with 'factors'");
  for (const auto& [key, v] : j.items()) {
    (void)v;
    if (key != "factors") throw std::runtime_error("scheme: unknown key '" + key + "'");
  }
  std::vector<Factor> factors;
  for (const auto& fj : j.at("factors")) {
    Factor f;
    for (const auto& [key, v] : fj.items()) {
      (void)v;
      if (key != "name" && key != "labels")
        throw std::runtime_error("scheme factor: unknown key '" + key + "'");
    }
    f.name = fj.at("name").get<std::string>();
    f.labels = fj.at("labels").get<std::vector<std::string>>();
    factors.push_back(std::move(f));
  }
  return FactorScheme(std::move(factors));
}

nlohmann::ordered_json summary_to_json(const SummaryTable& table,
                                       const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["format"] = kSummaryFormat;
  j["artifact"] = {{"name", kArtifactName}, {"version", kArtifactVersion}};
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["scheme"] = scheme_to_json(table.scheme());
  nlohmann::ordered_json pe = nlohmann::ordered_json::array();
  nlohmann::ordered_json ae = nlohmann::ordered_json::array();
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w)
      for (int g = 1; g <= table.subgroup_count(); ++g)
        pe.push_back({{"a", a},
                      {"w", w},
                      {"g", g},
                      {"events", table.d(a, w, g)},
                      {"exposure", table.u(a, w, g)}});
    for (int g = 1; g <= table.subgroup_count(); ++g)
      ae.push_back({{"a", a},
                    {"g", g},
                    {"ae_patients", table.v(a, g)},
                    {"patients", table.n(a, g)}});
  }
  j["pe_cells"] = std::move(pe);
  j["ae_cells"] = std::move(ae);
  j["assumptions"] = table.assumptions();
  return j;
}

SummaryTable summary_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> top = {"format",      "artifact",
                                               "config_hash", "scheme",
                                               "pe_cells",    "ae_cells",
                                               "assumptions"};
  if (!j.is_object()) throw std::runtime_error("summary: expected a JSON object");
  for (const auto& [key, v] : j.items()) {
    (void)v;
    if (std::find(top.begin(), top.end(), key) == top.end())
      throw std::runtime_error("summary: unknown key '" + key + "'");
  }
  for (const char* key : {"format", "scheme", "pe_cells", "ae_cells"}) {
    if (!j.contains(key))
      throw std::runtime_error(std::string("summary: missing required key '") +
                               key + "'");
  }
  if (j.at("format").get<std::string>() != kSummaryFormat)
    throw std::runtime_error("summary: unsupported format tag '" +
                             j.at("format").get<std::string>() + "'");
  SummaryTable table(scheme_from_json(j.at("scheme")));
  int gc = table.subgroup_count();
  std::vector<bool> seen_pe(4 * gc, false), seen_ae(2 * gc, false);
  for (const auto& cj : j.at("pe_cells")) {
    for (const auto& [key, v] : cj.items()) {
      (void)v;
      if (key != "a" && key != "w" && key != "g" && key != "events" && key != "exposure")
        throw std::runtime_error("summary pe cell: unknown key '" + key + "'");
    }
    int a = cj.at("a").get<int>(), w = cj.at("w").get<int>(), g = cj.at("g").get<int>();
    table.d(a, w, g) = cj.at("events").get<long long>();
    table.u(a, w, g) = cj.at("exposure").get<double>();
    int idx = (a * 2 + w) * gc + (g - 1);
    if (seen_pe[idx]) throw std::runtime_error("summary: duplicate pe cell");
    seen_pe[idx] = true;
  }
  for (const auto& cj : j.at("ae_cells")) {
    for (const auto& [key, v] : cj.items()) {
      (void)v;
      if (key != "a" && key != "g" && key != "ae_patients" && key != "patients")
        throw std::runtime_error("summary ae cell: unknown key '" + key + "'");
    }
    int a = cj.at("a").get<int>(), g = cj.at("g").get<int>();
    table.v(a, g) = cj.at("ae_patients").get<long long>();
    table.n(a, g) = cj.at("patients").get<long long>();
    int idx = a * gc + (g - 1);
    if (seen_ae[idx]) throw std::runtime_error("summary: duplicate ae cell");
    seen_ae[idx] = true;
  }
  if (std::find(seen_pe.begin(), seen_pe.end(), false) != seen_pe.end() ||
      std::find(seen_ae.begin(), seen_ae.end(), false) != seen_ae.end())
    throw std::runtime_error("summary: missing cells");
  if (j.contains("assumptions"))
    table.assumptions() = j.at("assumptions").get<std::vector<std::string>>();
  return table;
}

void save_summary(const std::filesystem::path& path, const SummaryTable& table,
                  const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << summary_to_json(table, config_hash).dump(2) << '\n';
}

SummaryTable load_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return summary_from_json(j);
}

}  // namespace bvsa
