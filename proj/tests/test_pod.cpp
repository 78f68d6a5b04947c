#include "ddrom/pod.hpp"
#include "ddrom/snapshots.hpp"

#include <gtest/gtest.h>

#include <random>

namespace ddrom {
namespace {

Mat random_mat(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Mat m(r, c);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = N(rng);
  return m;
}

TEST(Pod, EnergyCriterionArithmetic) {
  const Vec s = (Vec(3) << 2.0, 1.0, 0.1).finished();
  EXPECT_EQ(energy_dimension(s, 0.01), 2);
  EXPECT_EQ(energy_dimension(s, 0.5), 1);
  EXPECT_EQ(energy_dimension(s, 1e-6), 3);
  EXPECT_THROW(energy_dimension(s, 0.0), InvalidArgument);
}

TEST(Pod, RankOneData) {
  const Vec u = Vec::LinSpaced(12, -1, 2), v = Vec::LinSpaced(5, 1, 3);
  const Mat X = u * v.transpose();
  const PodBasis b = pod(X, EnergyTolerance{1e-10});
  EXPECT_EQ(b.dim(), 1);
  EXPECT_LE((X - b.phi * (b.phi.transpose() * X)).norm(), 1e-12 * X.norm());
}

TEST(Pod, TailEnergyIdentityAgainstJacobiSvd) {
  const Mat X = random_mat(30, 10, 4);
  Eigen::JacobiSVD<Mat> oracle(X);
  const Vec s = oracle.singularValues();
  for (Index n = 1; n <= 10; ++n) {
    const PodBasis b = pod(X, FixedDimension{n});
    const double lhs = (X - b.phi * (b.phi.transpose() * X)).squaredNorm();
    const double rhs = n < 10 ? s.tail(10 - n).squaredNorm() : 0.0;
    EXPECT_LE(std::abs(lhs - rhs), 1e-8 * std::max(rhs, 1e-300) + 1e-20) << n;
    EXPECT_LE((b.phi.transpose() * b.phi - Mat::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pod, BeatsRandomOrthonormalBases) {
  const Mat X = random_mat(20, 8, 9) * random_mat(8, 15, 10);
  const PodBasis b = pod(X, FixedDimension{3});
  const double best = (X - b.phi * (b.phi.transpose() * X)).norm();
  for (int t = 0; t < 20; ++t) {
    const Mat Q = Eigen::HouseholderQR<Mat>(random_mat(20, 3, 100 + t)).householderQ() * Mat::Identity(20, 3);
    EXPECT_LE(best, (X - Q * (Q.transpose() * X)).norm());
  }
}

TEST(Pod, RejectsBadInput) {
  EXPECT_THROW(pod(Mat::Zero(4, 3), EnergyTolerance{0.1}), InvalidArgument);
  EXPECT_THROW(pod(Mat(0, 0), EnergyTolerance{0.1}), InvalidArgument);
  EXPECT_THROW(pod(Mat::Ones(4, 3), FixedDimension{4}), InvalidArgument);
}

TEST(LinearMap, EncodeDecode) {
  const PodBasis b = pod(random_mat(15, 6, 2), FixedDimension{4});
  const LinearMap g(b.phi);
  const Vec xh = random_mat(4, 1, 3);
  EXPECT_LE((g.encode(g.decode(xh)) - xh).norm(), 1e-14);
  const Vec x = random_mat(15, 1, 5);
  const Vec p = g.decode(g.encode(x));
  EXPECT_LE((g.decode(g.encode(p)) - p).norm(), 1e-13);
  EXPECT_THROW(g.decode(Vec::Zero(3)), DimensionError);
}

class PortBasisFixture : public ::testing::Test {
 protected:
  Grid2D grid{20, 6, 0.1};
  Partition part = build_partition(grid, 2, 2);
  SnapshotSet snaps = generate_snapshots(grid, sample_grid({}, 3, 3), part);
  std::vector<Mat> port_bases;
  std::vector<Index> dims;

  void SetUp() override {
    for (const Mat& X : snaps.ports) {
      const Index n = std::max<Index>(std::min<Index>(X.rows() - 1, 3), 1);
      port_bases.push_back(pod(X, FixedDimension{n}).phi);
      dims.push_back(n);
    }
  }
};

TEST_F(PortBasisFixture, OrthonormalAndPortCompatible) {
  const auto Ahat = rom_constraint_blocks(part, dims);
  const auto A = fom_constraint_blocks(part);
  std::vector<Mat> phis;
  for (int i = 0; i < part.count(); ++i) {
    phis.push_back(port_interface_basis(part, port_bases, i));
    const Mat& phi = phis.back();
    EXPECT_LE((phi.transpose() * phi - Mat::Identity(phi.cols(), phi.cols())).cwiseAbs().maxCoeff(), 1e-12);
  }
  // Compatible latent interfaces: one latent vector per port, copied to every member.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec> port_latent;
    for (Index d : dims) {
      Vec v(d);
      for (Index k = 0; k < d; ++k) v[k] = N(rng);
      port_latent.push_back(v);
    }
    Vec con = Vec::Zero(Ahat[0].rows()), fom_con = Vec::Zero(A[0].rows());
    for (int i = 0; i < part.count(); ++i) {
      Vec xh(latent_interface_dim(part, i, dims));
      for (int j : part[i].ports) xh.segment(latent_port_offset(part, i, j, dims), dims[j]) = port_latent[j];
      con += Ahat[i] * xh;
      fom_con += A[i] * (phis[i] * xh);
    }
    EXPECT_LE(con.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(fom_con.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(PortBasisFixture, SinglePortIsPermutation) {
  const Grid2D g{10, 4, 0.1};
  const Partition p = build_partition(g, 2, 1);
  ASSERT_EQ(p.ports.size(), 1u);
  const Mat pb = pod(random_mat(Index(p.ports[0].cols.size()), 5, 3), FixedDimension{2}).phi;
  const Mat phi = port_interface_basis(p, {pb}, 0);
  const IndexList& pos = p.port_positions(0, 0);
  for (std::size_t t = 0; t < pos.size(); ++t) EXPECT_EQ(phi.row(pos[t]), pb.row(Index(t)));
}

TEST_F(PortBasisFixture, PodIdentityOnGeneratedSnapshots) {
  for (int i = 0; i < part.count(); ++i) {
    const Mat& X = snaps.interior[i];
    const PodBasis b = pod(X, FixedDimension{4});
    const double lhs = (X - b.phi * (b.phi.transpose() * X)).squaredNorm();
    EXPECT_LE(std::abs(lhs - b.discarded_energy), 1e-8 * b.discarded_energy);
  }
}

}  // namespace
}  // namespace ddrom
