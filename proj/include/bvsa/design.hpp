#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvsa/trial_data.hpp"

namespace bvsa {

enum class ModelKind { Saturated, Additive, ProportionalHazards };

// ProportionalHazards reuses the base kind's regression structure for the
// AE-free hazard and multiplies the AE-occurring hazard by a single ratio.
struct ModelSpec {
  ModelKind kind = ModelKind::Saturated;
  ModelKind base = ModelKind::Saturated;  // only read when kind == ProportionalHazards
};

std::string model_kind_name(const ModelSpec& spec);
ModelSpec model_spec_from_name(const std::string& name);

// Row g of X picks out the design columns for log(lambda) in subgroup g;
// Z does the same for logit(p). Entries are all 0/1.
struct DesignMatrices {
  Eigen::MatrixXd x, z;
  std::vector<std::string> column_labels;  // shared by x and z
};

// Column of the non-intercept indicator for `factor` at `level` (>= 2) in the
// additive layout: column 1 is the intercept, factor j level k sits at
// Q_j + k with Q_1 = 0 and Q_j = 1 - j + sum_{i<j} p_i. Level 1 has no
// column (absorbed by the intercept) and is rejected.
int column_index(int factor, int level, const FactorScheme& scheme);

// Saturated: X = Z = I_G (one free cell per subgroup).
// Additive: intercept plus main-effect indicators, q = 1 + sum_j (p_j - 1).
DesignMatrices build_design(const FactorScheme& scheme, const ModelSpec& spec);

}  // namespace bvsa
