#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bvsa {

// One stratification variable: >= 2 ordered levels, labels as they appear in
// patient CSV columns. Level indices are 1-based throughout.
struct Factor {
  std::string name;
  std::vector<std::string> labels;
};

// Cross-classification of the declared factors into subgroups g = 1..G.
// The subgroup index is the mixed-radix encoding of the level tuple with the
// FIRST declared factor most significant: with two binary factors,
// (1,1) -> 1, (1,2) -> 2, (2,1) -> 3, (2,2) -> 4.
class FactorScheme {
 public:
  FactorScheme() = default;
  explicit FactorScheme(std::vector<Factor> factors);

  int factor_count() const { return static_cast<int>(factors_.size()); }
  int level_count(int j) const;  // j is 1-based
  int subgroup_count() const { return g_count_; }
  const Factor& factor(int j) const;
  const std::vector<Factor>& factors() const { return factors_; }

  int subgroup_index(const std::vector<int>& levels) const;
  std::vector<int> subgroup_levels(int g) const;
  // Level labels joined with '/' in declaration order, e.g. "Male/lt75/No".
  std::string subgroup_label(int g) const;
  int level_from_label(int j, const std::string& label) const;

 private:
  std::vector<Factor> factors_;
  int g_count_ = 0;
};

struct PatientRecord {
  std::string id;
  int arm = 0;              // 0 = control, 1 = treated
  double time = 0.0;        // follow-up, years; zero is legal
  int event = 0;            // primary event observed at `time`
  int ae = 0;               // adverse event during follow-up
  std::vector<int> levels;  // one 1-based level per declared factor
};

// Sufficient statistics for the joint model, per cell:
//   d(a,w,g)  events among arm-a patients with AE status w in subgroup g
//   u(a,w,g)  person-time in the same cell
//   v(a,g)    patients with an AE
//   n(a,g)    patients
class SummaryTable {
 public:
  SummaryTable() = default;
  explicit SummaryTable(FactorScheme scheme);

  const FactorScheme& scheme() const { return scheme_; }
  int subgroup_count() const { return scheme_.subgroup_count(); }

  long long& d(int a, int w, int g) { return d_[idx3(a, w, g)]; }
  long long d(int a, int w, int g) const { return d_[idx3(a, w, g)]; }
  double& u(int a, int w, int g) { return u_[idx3(a, w, g)]; }
  double u(int a, int w, int g) const { return u_[idx3(a, w, g)]; }
  long long& v(int a, int g) { return v_[idx2(a, g)]; }
  long long v(int a, int g) const { return v_[idx2(a, g)]; }
  long long& n(int a, int g) { return n_[idx2(a, g)]; }
  long long n(int a, int g) const { return n_[idx2(a, g)]; }

  long long total_events(int a) const;
  long long total_ae(int a) const;
  long long total_patients(int a) const;
  double total_exposure(int a) const;

  // Free-text caveats about how the table was built (e.g. per-arm subgroup
  // sizes approximated from published totals); copied into every output that
  // uses the table.
  std::vector<std::string>& assumptions() { return assumptions_; }
  const std::vector<std::string>& assumptions() const { return assumptions_; }

 private:
  int idx3(int a, int w, int g) const;
  int idx2(int a, int g) const;

  FactorScheme scheme_;
  std::vector<long long> d_;
  std::vector<double> u_;
  std::vector<long long> v_, n_;
  std::vector<std::string> assumptions_;
};

class IngestError : public std::runtime_error {
 public:
  enum class Kind { BadHeader, MalformedRow, UnknownLabel, NegativeTime, BadFlag };
  IngestError(Kind kind, int line, const std::string& msg)
      : std::runtime_error(msg), kind(kind), line(line) {}
  Kind kind;
  int line;  // 1-based; header is line 1
};

// CSV with header id,arm,time,event,ae plus one column per declared factor,
// matched by name in any order. Unknown or missing columns are errors.
std::vector<PatientRecord> ingest_patients(std::istream& in,
                                           const FactorScheme& scheme);
void write_patients_csv(std::ostream& out,
                        const std::vector<PatientRecord>& records,
                        const FactorScheme& scheme);

// Exact cell sums. Person-time per cell is accumulated over sorted values so
// the result is identical for any permutation of the input records.
SummaryTable compute_summaries(const std::vector<PatientRecord>& records,
                               const FactorScheme& scheme);

struct ValidationFinding {
  std::string check;
  std::string detail;
};
struct ValidationReport {
  int checks_run = 0;
  std::vector<ValidationFinding> failures;
  bool ok() const { return failures.empty(); }
};
// Structural checks a table must pass before fitting: finite non-negative
// exposures, no events in zero-exposure cells, 0 <= v <= n. Never throws.
ValidationReport validate_summaries(const SummaryTable& table);

nlohmann::ordered_json scheme_to_json(const FactorScheme& scheme);
FactorScheme scheme_from_json(const nlohmann::json& j);

// Canonical JSON layout with explicit (a,w,g) keys so published summary
// tables can be typed in by hand. Reading rejects unknown keys, duplicate
// cells, and missing cells; writing is byte-stable for a fixed table.
nlohmann::ordered_json summary_to_json(const SummaryTable& table,
                                       const std::string& config_hash = "");
SummaryTable summary_from_json(const nlohmann::json& j);
void save_summary(const std::filesystem::path& path, const SummaryTable& table,
                  const std::string& config_hash = "");
SummaryTable load_summary(const std::filesystem::path& path);

}  // namespace bvsa
