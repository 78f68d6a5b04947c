#include "ddrom/bounds.hpp"
#include "ddrom/pod.hpp"

#include <gtest/gtest.h>

#include <random>

namespace ddrom {
namespace {

TEST(Bounds, InverseLipschitzApproachesSmallestSingularValue) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> N;
  Mat M(3, 3);
  for (Index k = 0; k < 9; ++k) M.data()[k] = N(rng);
  const Vec b = Vec::Ones(3);
  const double smin = Eigen::JacobiSVD<Mat>(M).singularValues()[2];
  const VecFn r = [&](const Vec& x) { return Vec(M * x - b); };
  double previous = std::numeric_limits<double>::infinity();
  for (int n : {10, 100, 10000}) {
    std::vector<VecPair> pairs;
    for (int s = 0; s < n; ++s) {
      Vec y(3), z(3);
      for (Index k = 0; k < 3; ++k) {
        y[k] = N(rng);
        z[k] = N(rng);
      }
      pairs.emplace_back(y, z);
    }
    const double est = inverse_lipschitz_estimate(r, pairs);
    EXPECT_GE(est, smin * (1 - 1e-12));
    EXPECT_LE(est, previous * 1.5);
    previous = std::min(previous, est);
  }
  EXPECT_LT(previous, 1.05 * smin);
}

TEST(Bounds, IdentityWeightingGivesUnitRatio) {
  const VecFn r = [](const Vec& x) { return Vec(x.array().sin()); };
  const std::vector<Vec> pts = {Vec::LinSpaced(4, 0.1, 1.0), Vec::LinSpaced(4, -2.0, 0.3)};
  EXPECT_NEAR(weighting_ratio_estimate(r, r, pts), 1.0, 1e-15);
  EXPECT_THROW(weighting_ratio_estimate(r, r, {Vec::Zero(4)}), InvalidArgument);
}

TEST(Bounds, LipschitzOfLinearMapIsBoundedByNorm) {
  Mat M(2, 2);
  M << 3, 1, 0, 0.5;
  const VecFn r = [&](const Vec& x) { return Vec(M * x); };
  std::vector<VecPair> pairs = {{Vec::Unit(2, 0), Vec::Zero(2)}, {Vec::Unit(2, 1), Vec::Zero(2)}};
  const double L = lipschitz_estimate(r, pairs);
  EXPECT_LE(L, Eigen::JacobiSVD<Mat>(M).singularValues()[0] + 1e-12);
  EXPECT_NEAR(L, 3.0, 1e-12);
}

TEST(Bounds, TinyBurgersPosterioriBoundHolds) {
  const Grid2D grid{20, 4, 0.1};
  const Partition part = build_partition(grid, 2, 1);
  const SnapshotSet snaps = generate_snapshots(grid, sample_grid({}, 5, 5), part);
  std::vector<MapPtr> in, ga;
  for (int i = 0; i < part.count(); ++i) {
    in.push_back(make_linear_map(pod(snaps.interior[std::size_t(i)], FixedDimension{4}).phi));
    ga.push_back(make_linear_map(pod(snaps.interface[std::size_t(i)], FixedDimension{2}).phi));
  }
  RomInstance inst = wfpc_instance(grid, part, in, ga, gaussian_test_matrix(2, part.constraint_rows(), 1));
  fit_initializer(inst, snaps, {});
  const ParameterPoint p{4321.0, 13.3};
  const RomSolution sol = solve_rom(inst, p, {});
  const Vec x = solve_monolithic(BurgersFom(grid, p), Vec::Zero(grid.dofs())).state;
  const BoundDiagnostics d = verify_bounds(inst, p, sol, x, 200, 9);
  EXPECT_GT(d.kappa_l, 0.0);
  EXPECT_NEAR(d.P, 1.0, 1e-12);  // no hyper-reduction
  EXPECT_GT(d.lhs, 0.0);
  EXPECT_TRUE(d.a_posteriori_holds()) << d.lhs << " vs " << d.rhs;
  EXPECT_TRUE(d.a_priori_holds()) << d.lhs << " vs " << d.a_priori_rhs;
  const BoundDiagnostics again = verify_bounds(inst, p, sol, x, 200, 9);
  EXPECT_EQ(again.kappa_l, d.kappa_l);
}

}  // namespace
}  // namespace ddrom
