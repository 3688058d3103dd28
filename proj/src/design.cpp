#include "bvsa/design.hpp"

#include <stdexcept>

namespace bvsa {

std::string model_kind_name(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::Saturated:
      return "saturated";
    case ModelKind::Additive:
      return "additive";
    case ModelKind::ProportionalHazards:
      return spec.base == ModelKind::Additive ? "ph_additive" : "ph_saturated";
  }
  throw std::logic_error("bad model kind");
}

ModelSpec model_spec_from_name(const std::string& name) {
  if (name == "saturated") return {ModelKind::Saturated, ModelKind::Saturated};
  if (name == "additive") return {ModelKind::Additive, ModelKind::Additive};
  if (name == "ph_saturated")
    return {ModelKind::ProportionalHazards, ModelKind::Saturated};
  if (name == "ph_additive")
    return {ModelKind::ProportionalHazards, ModelKind::Additive};
  throw std::invalid_argument(
      "unknown model '" + name +
      "' (expected saturated, additive, ph_saturated or ph_additive)");
}

int column_index(int factor, int level, const FactorScheme& scheme) {
  if (factor < 1 || factor > scheme.factor_count())
    throw std::out_of_range("factor index out of range");
  if (level < 1 || level > scheme.level_count(factor))
    throw std::out_of_range("level out of range");
  if (level == 1)
    throw std::invalid_argument("level 1 is absorbed by the intercept; no column");
  int q = 1 - factor;  // Q_j = 1 - j + p_1 + ... + p_{j-1}
  for (int i = 1; i < factor; ++i) q += scheme.level_count(i);
  return q + level;
}

DesignMatrices build_design(const FactorScheme& scheme, const ModelSpec& spec) {
  ModelKind kind = spec.kind == ModelKind::ProportionalHazards ? spec.base : spec.kind;
  int g_count = scheme.subgroup_count();
  DesignMatrices dm;

  if (kind == ModelKind::Saturated) {
    dm.x = Eigen::MatrixXd::Identity(g_count, g_count);
    dm.z = dm.x;
    for (int g = 1; g <= g_count; ++g)
      dm.column_labels.push_back(scheme.subgroup_label(g));
    return dm;
  }
  if (kind != ModelKind::Additive) throw std::logic_error("bad base kind");

  int q = 1;
  for (int j = 1; j <= scheme.factor_count(); ++j) q += scheme.level_count(j) - 1;
  dm.x = Eigen::MatrixXd::Zero(g_count, q);
  for (int g = 1; g <= g_count; ++g) {
    dm.x(g - 1, 0) = 1.0;
    auto levels = scheme.subgroup_levels(g);
    for (int j = 1; j <= scheme.factor_count(); ++j)
      if (levels[j - 1] >= 2)
        dm.x(g - 1, column_index(j, levels[j - 1], scheme) - 1) = 1.0;
  }
  dm.z = dm.x;
  dm.column_labels.push_back("intercept");
  for (int j = 1; j <= scheme.factor_count(); ++j)
    for (int k = 2; k <= scheme.level_count(j); ++k)
      dm.column_labels.push_back(scheme.factor(j).name + "=" + scheme.factor(j).labels[k - 1]);
  return dm;
}

}  // namespace bvsa
