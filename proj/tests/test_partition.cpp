#include "ddrom/partition.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

namespace ddrom {
namespace {

Vec random_vec(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Vec x(n);
  for (Index k = 0; k < n; ++k) x[k] = U(rng);
  return x;
}

// Scalar stencil pattern on an nx x ny grid; `diagonal` adds the corner neighbours.
SpMat scalar_pattern(int nx, int ny, bool diagonal) {
  std::vector<Eigen::Triplet<double, Index>> t;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (!diagonal && di != 0 && dj != 0) continue;
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
          t.emplace_back(j * nx + i, b * nx + a, 1.0);
        }
  SpMat P(nx * ny, nx * ny);
  P.setFromTriplets(t.begin(), t.end());
  return P;
}

std::vector<int> quadrant_owner(int nx, int ny, int nsx, int nsy) {
  std::vector<int> sub(nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) sub[j * nx + i] = std::min(j / (ny / nsy), nsy - 1) * nsx + std::min(i / (nx / nsx), nsx - 1);
  return sub;
}

TEST(Partition, SingleSubdomainHasNoPorts) {
  const Partition p = build_partition(Grid2D{8, 5, 0.1}, 1, 1);
  EXPECT_TRUE(p.ports.empty());
  EXPECT_TRUE(p[0].interface_cols.empty());
  EXPECT_EQ(Index(p[0].interior_cols.size()), p.global_size);
  EXPECT_EQ(p.constraint_rows(), 0);
}

TEST(Partition, InterfaceMatchesBruteForceColumnRule) {
  // Scalar analogue of the 2x1 illustration: nx = 14, ny = 5.
  const int nx = 14, ny = 5;
  const SpMat P = scalar_pattern(nx, ny, false);
  std::vector<Index> node(nx * ny);
  for (Index k = 0; k < Index(node.size()); ++k) node[k] = k;
  const auto owner = quadrant_owner(nx, ny, 2, 1);
  const Partition part = build_partition(P, node, owner, 2);
  for (int s = 0; s < 2; ++s) {
    IndexList expect;
    for (Index c = 0; c < P.cols(); ++c) {
      std::set<int> users;
      for (Index r = 0; r < P.rows(); ++r)
        if (P.coeff(r, c) != 0.0) users.insert(owner[r]);
      if (users.count(s) && users.size() > 1) expect.push_back(c);
    }
    EXPECT_EQ(part[s].interface_cols, expect);
  }
  // Grid columns 7 and 8 (1-based) are the shared ones.
  for (Index c : part[0].interface_cols) {
    const Index i = c % nx + 1;
    EXPECT_TRUE(i == 7 || i == 8);
  }
  EXPECT_EQ(part[0].interface_cols.size(), std::size_t(2 * ny));
}

TEST(Partition, FivePointStencilTwoByTwoPorts) {
  const Partition p = build_partition(Grid2D{12, 8, 0.1}, 2, 2);
  ASSERT_EQ(p.ports.size(), 8u);
  int pairs = 0, triples = 0;
  for (const Port& port : p.ports) {
    if (port.members.size() == 2) ++pairs;
    if (port.members.size() == 3) {
      ++triples;
      EXPECT_EQ(port.cols.size(), 2u);  // one node, u and v
    }
  }
  EXPECT_EQ(pairs, 4);
  EXPECT_EQ(triples, 4);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(p[i].ports.size(), 5u);
}

TEST(Partition, NinePointStencilGivesCrossPort) {
  const int nx = 10, ny = 8;
  const SpMat P = scalar_pattern(nx, ny, true);
  std::vector<Index> node(nx * ny);
  for (Index k = 0; k < Index(node.size()); ++k) node[k] = k;
  const Partition part = build_partition(P, node, quadrant_owner(nx, ny, 2, 2), 4);
  ASSERT_EQ(part.ports.size(), 5u);
  const auto it = std::find_if(part.ports.begin(), part.ports.end(), [](const Port& q) { return q.members.size() == 4; });
  ASSERT_NE(it, part.ports.end());
  const Port& cross = *it;
  EXPECT_EQ(cross.members, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(cross.cols.size(), 4u);
  // Three chained conditions per node for the four-member port.
  const auto A = fom_constraint_blocks(part);
  Index expect_rows = 0;
  for (const Port& q : part.ports) expect_rows += Index(q.members.size() - 1) * Index(q.cols.size());
  EXPECT_EQ(A[0].rows(), expect_rows);
  EXPECT_EQ(expect_rows, 3 * 4 + 6 + 6 + 8 + 8);
}

TEST(Partition, PaperScaleTwoByTwoDimensions) {
  const Partition p = build_partition(Grid2D{480, 24, 0.1}, 2, 2);
  Index total = 0;
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(p[i].interior_cols.size(), 5258u);
    EXPECT_EQ(p[i].interface_cols.size(), 1006u);
    total += Index(p[i].interior_cols.size() + p[i].interface_cols.size());
  }
  EXPECT_EQ(total, 25056);
}

TEST(Partition, RemainderGoesToLastSubdomain) {
  const Partition p = build_partition(Grid2D{10, 7, 0.1}, 3, 2);
  // bx = 3: columns 1-3, 4-6, 7-10; by = 3: rows 1-3, 4-7.
  EXPECT_EQ(p[0].res_rows.size(), std::size_t(2 * 3 * 3));
  EXPECT_EQ(p[5].res_rows.size(), std::size_t(2 * 4 * 4));
  EXPECT_THROW(build_partition(Grid2D{4, 4, 0.1}, 5, 1), InvalidArgument);
}

TEST(Constraints, FomBlocksAnnihilateRestrictedStates) {
  const Grid2D g{16, 9, 0.1};
  for (auto [sx, sy] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{2, 1}}) {
    const Partition p = build_partition(g, sx, sy);
    const auto blocks = fom_constraint_blocks(p);
    const SpMat A = hstack(blocks);
    EXPECT_EQ(A.rows(), p.constraint_rows());
    const Vec x = random_vec(p.global_size, 5);
    Vec stacked(p.total_interface());
    for (int i = 0; i < p.count(); ++i) stacked.segment(p.interface_offset(i), p[i].interface_cols.size()) = p.interface(i, x);
    EXPECT_LE((A * stacked).cwiseAbs().maxCoeff(), 0.0);
    const Mat D(A);
    for (Index r = 0; r < D.rows(); ++r) {
      EXPECT_EQ((D.row(r).array() == 1.0).count(), 1);
      EXPECT_EQ((D.row(r).array() == -1.0).count(), 1);
      EXPECT_EQ((D.row(r).array() != 0.0).count(), 2);
    }
    if (D.rows() <= 200) {
      Eigen::JacobiSVD<Mat> svd(D);
      svd.setThreshold(1e-10);
      EXPECT_EQ(svd.rank(), D.rows());
    }
  }
}

TEST(Constraints, RomBlocksTwoSubdomainsOnePort) {
  const Partition p = build_partition(Grid2D{8, 4, 0.1}, 2, 1);
  ASSERT_EQ(p.ports.size(), 1u);
  const std::vector<Index> dims{3};
  const auto blocks = rom_constraint_blocks(p, dims);
  EXPECT_EQ(Mat(blocks[0]), Mat::Identity(3, 3));
  EXPECT_EQ(Mat(blocks[1]), -Mat::Identity(3, 3));
  EXPECT_THROW(rom_constraint_blocks(p, std::vector<Index>{0}), InvalidArgument);
}

TEST(Constraints, RomBlocksRankAndNullSpace) {
  const Partition p = build_partition(Grid2D{12, 8, 0.1}, 2, 2);
  std::vector<Index> dims;
  for (const Port& q : p.ports) dims.push_back(std::max<Index>(std::min<Index>(Index(q.cols.size()) - 1, 2), 1));
  const Mat A(hstack(rom_constraint_blocks(p, dims)));
  Index total = 0;
  for (int i = 0; i < p.count(); ++i) total += latent_interface_dim(p, i, dims);
  EXPECT_EQ(A.cols(), total);
  EXPECT_EQ(A.rows(), rom_constraint_rows(p, dims));
  Eigen::JacobiSVD<Mat> svd(A);
  svd.setThreshold(1e-10);
  EXPECT_EQ(svd.rank(), A.rows());
  EXPECT_GE(total - A.rows(), 1);
  for (int i = 0; i < p.count(); ++i) EXPECT_EQ(latent_interface_dim(p, i, dims), 2 * 2 + 3);
}

TEST(SubdomainResidual, ReassemblesMonolithicResidual) {
  const Grid2D g{15, 7, 0.1};
  const BurgersFom fom(g, {600.0, 17.0});
  const Partition p = build_partition(g, 3, 2);
  const Vec x = random_vec(g.dofs(), 9);
  Vec r = Vec::Zero(g.dofs());
  for (int i = 0; i < p.count(); ++i) {
    const SubdomainResidual sr(fom, p, i);
    const Vec ri = sr.residual(p.interior(i, x), p.interface(i, x));
    for (std::size_t k = 0; k < p[i].res_rows.size(); ++k) r[p[i].res_rows[k]] += ri[k];
  }
  EXPECT_EQ(r, fom.residual(x));
}

TEST(SubdomainResidual, VanishesAtMonolithicSolution) {
  const Grid2D g{24, 6, 0.1};
  const BurgersFom fom(g, {5000.0, 15.0});
  const Vec x = solve_monolithic(fom, Vec::Zero(g.dofs()), {1e-10, 50, 20}).state;
  const Partition p = build_partition(g, 2, 2);
  for (int i = 0; i < p.count(); ++i) {
    const SubdomainResidual sr(fom, p, i);
    EXPECT_LE(sr.residual(p.interior(i, x), p.interface(i, x)).norm(), 1e-10);
  }
}

TEST(SubdomainResidual, JacobianBlocksMatchFiniteDifferences) {
  const Grid2D g{10, 6, 0.1};
  const BurgersFom fom(g, {90.0, 9.0});
  const Partition p = build_partition(g, 2, 2);
  const Vec x = random_vec(g.dofs(), 21);
  for (int i = 0; i < p.count(); ++i) {
    const SubdomainResidual sr(fom, p, i);
    const Vec xo = p.interior(i, x), xg = p.interface(i, x);
    const Vec dox = random_vec(xo.size(), 100 + i), dgx = random_vec(xg.size(), 200 + i);
    const double eps = 1e-6;
    const Vec fd = (sr.residual(xo + eps * dox, xg + eps * dgx) - sr.residual(xo - eps * dox, xg - eps * dgx)) / (2 * eps);
    const auto [Jo, Jg] = sr.jacobians(xo, xg);
    const Vec an = Jo * dox + Jg * dgx;
    EXPECT_LT((fd - an).norm() / an.norm(), 1e-6);
  }
}

}  // namespace
}  // namespace ddrom
