#include "bvsa/design.hpp"
#include "doctest.h"

using namespace bvsa;

namespace {

FactorScheme two_binary() {
  return FactorScheme({Factor{"f1", {"a", "b"}}, Factor{"f2", {"x", "y"}}});
}

}  // namespace

TEST_CASE("model names round-trip") {
  for (const char* name :
       {"saturated", "additive", "ph_saturated", "ph_additive"}) {
    CHECK(model_kind_name(model_spec_from_name(name)) == name);
  }
  CHECK_THROWS_AS((void)model_spec_from_name("shrunken"), std::invalid_argument);
}

TEST_CASE("saturated design is the identity with subgroup labels") {
  FactorScheme s({Factor{"f1", {"a", "b"}},
                  Factor{"f2", {"x", "y"}},
                  Factor{"f3", {"p", "q"}}});
  DesignMatrices dm = build_design(s, model_spec_from_name("saturated"));
  CHECK(dm.x.rows() == 8);
  CHECK(dm.x.cols() == 8);
  CHECK(dm.x.isIdentity(0.0));
  CHECK(dm.z.isIdentity(0.0));
  REQUIRE(dm.column_labels.size() == 8);
  CHECK(dm.column_labels[0] == "a/x/p");
  CHECK(dm.column_labels[7] == "b/y/q");
}

TEST_CASE("additive design for two binary factors") {
  DesignMatrices dm = build_design(two_binary(), model_spec_from_name("additive"));
  REQUIRE(dm.x.rows() == 4);
  REQUIRE(dm.x.cols() == 3);
  const double expect[4][3] = {
      {1, 0, 0}, {1, 0, 1}, {1, 1, 0}, {1, 1, 1}};
  for (int g = 0; g < 4; ++g)
    for (int c = 0; c < 3; ++c) CHECK(dm.x(g, c) == expect[g][c]);
  CHECK(dm.z == dm.x);
  REQUIRE(dm.column_labels.size() == 3);
  CHECK(dm.column_labels[0] == "intercept");
  CHECK(dm.column_labels[1] == "f1=b");
  CHECK(dm.column_labels[2] == "f2=y");
}

TEST_CASE("additive design with a three-level factor") {
  FactorScheme s({Factor{"f1", {"a", "b"}}, Factor{"f2", {"x", "y", "z"}}});
  DesignMatrices dm = build_design(s, model_spec_from_name("additive"));
  REQUIRE(dm.x.rows() == 6);
  REQUIRE(dm.x.cols() == 4);  // intercept + 1 + 2
  // Subgroup with levels (2,3) is g = 6; expect intercept, f1=b, f2=z.
  CHECK(s.subgroup_index({2, 3}) == 6);
  CHECK(dm.x(5, 0) == 1.0);
  CHECK(dm.x(5, 1) == 1.0);
  CHECK(dm.x(5, 2) == 0.0);
  CHECK(dm.x(5, 3) == 1.0);
  // Reference subgroup (1,1) has only the intercept.
  CHECK(dm.x.row(0).sum() == 1.0);
  // Every row has exactly 1 + (#factors) nonzero entries at most, and the
  // level-1 cells contribute nothing beyond the intercept.
  CHECK(dm.x(1, 2) == 1.0);  // levels (1,2): f2=y column
  CHECK(dm.x(1, 3) == 0.0);
  CHECK(dm.column_labels[2] == "f2=y");
  CHECK(dm.column_labels[3] == "f2=z");
}

TEST_CASE("column indexing follows the running-offset formula") {
  FactorScheme s({Factor{"f1", {"a", "b"}}, Factor{"f2", {"x", "y", "z"}},
                  Factor{"f3", {"p", "q"}}});
  // Q_j = 1 - j + p_1 + ... + p_{j-1} + level (1-based coefficient position).
  CHECK(column_index(1, 2, s) == 2);
  CHECK(column_index(2, 2, s) == 3);
  CHECK(column_index(2, 3, s) == 4);
  CHECK(column_index(3, 2, s) == 5);
  CHECK_THROWS_AS((void)column_index(1, 1, s), std::invalid_argument);
  CHECK_THROWS_AS((void)column_index(4, 2, s), std::out_of_range);
  CHECK_THROWS_AS((void)column_index(2, 4, s), std::out_of_range);
}

TEST_CASE("proportional hazards designs reuse the base design") {
  FactorScheme s = two_binary();
  DesignMatrices sat = build_design(s, model_spec_from_name("ph_saturated"));
  CHECK(sat.x.isIdentity(0.0));
  DesignMatrices add = build_design(s, model_spec_from_name("ph_additive"));
  CHECK(add.x.cols() == 3);
}
