#include "ddrom/autoencoder.hpp"
#include "ddrom/fom.hpp"
#include "ddrom/partition.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace ddrom {
namespace {

Autoencoder random_net(Index N, Index n, int band, int shift, Activation act, std::uint64_t seed) {
  Autoencoder a = init_autoencoder(build_mask(N, band, shift).pattern, n, act, seed);
  std::mt19937_64 rng(seed + 7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (Index r = 0; r < N; ++r) {
    a.norm.shift[r] = U(rng);
    a.norm.scale[r] = 0.5 + 0.5 * std::abs(U(rng));
  }
  return a;
}

Vec random_vec(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Vec v(n);
  for (Index k = 0; k < n; ++k) v[k] = N(rng);
  return v;
}

TEST(BandedMask, ReferenceWidthsAndNonzeros) {
  const auto a = build_mask(1006, 5, 5);
  EXPECT_EQ(a.pattern.cols, 5030);
  EXPECT_EQ(a.pattern.nnz(), 15040);
  const auto b = build_mask(5258, 5, 5);
  EXPECT_EQ(b.pattern.cols, 26290);
  EXPECT_EQ(b.pattern.nnz(), 78820);
  EXPECT_NEAR(1.0 - double(a.pattern.nnz()) / (1006.0 * 5030.0), 0.9970, 5e-5);
}

TEST(BandedMask, ReportedInteriorPairIsUnreachableByAnyThreeBandMask) {
  // Three bands of five entries give at most 15 nonzeros per row.
  EXPECT_LT(15 * 5238, 78820);
  EXPECT_NE(build_mask(5238, 5, 5).pattern.nnz(), 78820);
}

TEST(BandedMask, DegenerateAndInvalid) {
  const auto m = build_mask(1, 1, 1);
  EXPECT_EQ(m.pattern.rows, 1);
  EXPECT_GE(m.pattern.nnz(), 1);
  EXPECT_LE(m.pattern.nnz(), 3);
  EXPECT_THROW(build_mask(4, 0, 1), InvalidArgument);
  EXPECT_THROW(build_mask(4, 1, 0), InvalidArgument);
}

TEST(BandedMask, BandSeparationAndOrder) {
  const auto m = build_mask(10, 2, 3);
  const auto& p = m.pattern;
  for (Index r = 0; r < p.rows; ++r) {
    EXPECT_GE(p.row_ptr[r + 1] - p.row_ptr[r], 1);
    for (Index e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) {
      if (e > p.row_ptr[r]) EXPECT_LT(p.col_idx[e - 1], p.col_idx[e]);
      const Index off = p.col_idx[e] - r * 3;
      const bool in_band = (off >= -6 && off < -4) || (off >= 0 && off < 2) || (off >= 6 && off < 8);
      EXPECT_TRUE(in_band) << r << " " << p.col_idx[e];
    }
  }
}

// Interior (n=6) and interface (n=3) nets with b = s = 5; the reported maximum is over single nets.
struct Tally {
  Index max = 0, total = 0;
};

Tally tally(int nsx, int nsy) {
  const Grid2D g{480, 24, 0.1};
  const Partition part = build_partition(g, nsx, nsy);
  Tally t;
  for (const auto& s : part.subdomains) {
    const Index ni = Index(s.interior_cols.size()), ng = Index(s.interface_cols.size());
    Autoencoder ai, ag;
    ai.pattern = build_mask(ni, 5, 5).pattern;
    ai.dec_w1.resize(ai.pattern.cols, 6);
    ag.pattern = build_mask(ng, 5, 5).pattern;
    ag.dec_w1.resize(ag.pattern.cols, 3);
    t.max = std::max({t.max, ai.parameter_count(), ag.parameter_count()});
    t.total += ai.parameter_count() + ag.parameter_count();
  }
  return t;
}

double round4(double v) {
  const double e = std::pow(10.0, std::floor(std::log10(v)) - 3);
  return std::round(v / e) * e;
}

TEST(ParameterCount, SingleDomainMatchesReportedTotal) {
  const Grid2D g{480, 24, 0.1};
  Autoencoder a;
  a.pattern = build_mask(g.dofs(), 5, 5).pattern;
  a.dec_w1.resize(a.pattern.cols, 9);
  EXPECT_EQ(round4(double(a.parameter_count())), 2.995e6);
}

TEST(ParameterCount, DecomposedMaxAndTotalMatchReportedTable) {
  const struct {
    int nsx, nsy;
    double max, total;
  } rows[] = {{2, 1, 1.147e6, 2.307e6}, {2, 2, 5.257e5, 2.384e6}, {4, 2, 2.617e5, 2.391e6}, {8, 2, 1.297e5, 2.406e6}};
  for (const auto& r : rows) {
    const Tally t = tally(r.nsx, r.nsy);
    EXPECT_EQ(round4(double(t.max)), r.max) << r.nsx << "x" << r.nsy << " max " << t.max;
    EXPECT_EQ(round4(double(t.total)), r.total) << r.nsx << "x" << r.nsy << " total " << t.total;
  }
}

TEST(Activation, SwishAndSigmoidValues) {
  EXPECT_NEAR(activate(Activation::Swish, 1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(activate(Activation::Swish, 1.0), 0.731059, 5e-7);
  EXPECT_EQ(activate(Activation::Swish, 0.0), 0.0);
  EXPECT_NEAR(activate(Activation::Sigmoid, 0.0), 0.5, 1e-15);
  EXPECT_NEAR(activate(Activation::Sigmoid, -800.0), 0.0, 1e-300);
  for (double z : {-3.0, -0.2, 0.0, 0.7, 4.0})
    for (Activation a : {Activation::Swish, Activation::Sigmoid}) {
      const double h = 1e-6;
      EXPECT_NEAR(activate_prime(a, z), (activate(a, z + h) - activate(a, z - h)) / (2 * h), 1e-8);
    }
  EXPECT_EQ(activation_from_string(to_string(Activation::Sigmoid)), Activation::Sigmoid);
  EXPECT_THROW(activation_from_string("relu"), ConfigError);
}

TEST(Autoencoder, ZeroWeightsDecodeToShift) {
  Autoencoder a = random_net(12, 3, 2, 2, Activation::Swish, 1);
  a.dec_w1.setZero();
  a.dec_b1.setZero();
  a.dec_w2.setZero();
  const Vec xh = Vec::LinSpaced(3, -1, 1);
  EXPECT_EQ(a.decode(xh), a.norm.shift);
}

TEST(Autoencoder, DecoderJacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Activation act = trial % 2 ? Activation::Sigmoid : Activation::Swish;
    const Autoencoder a = random_net(15 + trial, 2 + trial % 3, 2, 3, act, 100 + trial);
    const Vec xh = random_vec(a.latent_dim(), rng);
    const Mat J = a.decoder_jacobian(xh);
    const double eps = 1e-5 * (1.0 + xh.cwiseAbs().maxCoeff());
    Mat Jfd(a.full_dim(), a.latent_dim());
    for (Index k = 0; k < a.latent_dim(); ++k) {
      Vec p = xh, m = xh;
      p[k] += eps;
      m[k] -= eps;
      Jfd.col(k) = (a.decode(p) - a.decode(m)) / (2 * eps);
    }
    EXPECT_LT((J - Jfd).norm() / J.norm(), 1e-5);
  }
}

TEST(Autoencoder, DenseViewsRespectMask) {
  const Autoencoder a = random_net(9, 2, 2, 2, Activation::Swish, 4);
  const Mat W2 = a.decoder_w2_dense(), W1 = a.encoder_w1_dense();
  const Mat M = a.pattern.dense(Vec::Ones(a.pattern.nnz()));
  EXPECT_EQ(W1.rows(), a.width());
  EXPECT_EQ(W1.cols(), a.full_dim());
  for (Index r = 0; r < M.rows(); ++r)
    for (Index c = 0; c < M.cols(); ++c)
      if (M(r, c) == 0.0) {
        EXPECT_EQ(W2(r, c), 0.0);
        EXPECT_EQ(W1(c, r), 0.0);
      }
}

TEST(Autoencoder, DimensionChecks) {
  const Autoencoder a = random_net(9, 2, 2, 2, Activation::Swish, 4);
  EXPECT_THROW(a.decode(Vec::Zero(3)), DimensionError);
  EXPECT_THROW(a.encode(Vec::Zero(8)), DimensionError);
  EXPECT_THROW(a.decoder_jacobian(Vec::Zero(1)), DimensionError);
}

TEST(Autoencoder, ArchiveRoundTripIsExact) {
  const Autoencoder a = random_net(11, 3, 2, 2, Activation::Sigmoid, 5);
  MatrixArchive ar;
  a.save(ar, "net");
  const Autoencoder b = Autoencoder::load(MatrixArchive::deserialize(ar.serialize()), "net");
  const Vec xh = Vec::LinSpaced(3, -0.5, 0.9);
  EXPECT_EQ(a.decode(xh), b.decode(xh));
  EXPECT_EQ(b.act, Activation::Sigmoid);
  MatrixArchive bad = ar;
  bad.add("net/dec_b1", Vec::Zero(3));
  EXPECT_THROW(Autoencoder::load(bad, "net"), FormatError);
}

Mat rank_one(Index N, Index m) {
  const Vec u = Vec::LinSpaced(N, 0.0, 1.0).array().sin() + 0.3;
  Mat X(N, m);
  for (Index j = 0; j < m; ++j) X.col(j) = (0.5 + 1.5 * double(j) / double(m - 1)) * u;
  return X;
}

TEST(Training, RankOneDataIsLearnt) {
  const Mat X = rank_one(20, 60);
  TrainConfig cfg;
  cfg.epochs = 1500;
  cfg.batch_size = 8;
  cfg.seed = 11;
  const TrainResult r = train_autoencoder(X, build_mask(20, 2, 2).pattern, 1, Activation::Swish, cfg);
  EXPECT_LT(r.history.best_validation, 1e-4);
  EXPECT_GE(r.history.best_epoch, 0);
  // Best-so-far tracker is monotone and the returned net reproduces it.
  double best = r.history.validation_loss.front();
  for (double v : r.history.validation_loss) best = std::min(best, v);
  EXPECT_EQ(best, r.history.best_validation);
  const Vec x = X.col(30);
  EXPECT_LT((r.net.decode(r.net.encode(x)) - x).norm() / x.norm(), 2e-2);
}

TEST(Training, SeededRunsAreIdentical) {
  const Mat X = rank_one(12, 20);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 5;
  const auto m = build_mask(12, 2, 2).pattern;
  const TrainResult a = train_autoencoder(X, m, 2, Activation::Swish, cfg);
  const TrainResult b = train_autoencoder(X, m, 2, Activation::Swish, cfg);
  EXPECT_EQ(a.history.train_loss, b.history.train_loss);
  EXPECT_EQ(a.history.validation_loss, b.history.validation_loss);
  // Masked entries stay untouched: the dense view is zero off the pattern.
  const Mat M = m.dense(Vec::Ones(m.nnz()));
  const Mat W2 = a.net.decoder_w2_dense();
  EXPECT_EQ(W2.cwiseProduct((M.array() == 0.0).cast<double>().matrix()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Training, LearningRateDropsOnPlateau) {
  const Mat X = rank_one(8, 12);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.plateau_patience = 2;
  cfg.stop_patience = 1000;
  cfg.learning_rate = 0.5;  // large enough to stall immediately
  cfg.seed = 2;
  const TrainResult r = train_autoencoder(X, build_mask(8, 1, 1).pattern, 1, Activation::Swish, cfg);
  EXPECT_LT(r.history.learning_rate.back(), cfg.learning_rate);
}

TEST(Training, RejectsBadInput) {
  const auto m = build_mask(6, 1, 1).pattern;
  EXPECT_THROW(train_autoencoder(Mat::Ones(6, 1), m, 1, Activation::Swish, {}), InvalidArgument);
  EXPECT_THROW(train_autoencoder(Mat::Ones(6, 4), m, 6, Activation::Swish, {}), InvalidArgument);
  EXPECT_THROW(train_autoencoder(Mat::Ones(5, 4), m, 1, Activation::Swish, {}), DimensionError);
}

class PortAssembly : public ::testing::Test {
 protected:
  Grid2D grid{20, 6, 0.1};
  Partition part = build_partition(grid, 2, 2);
  std::vector<Autoencoder> nets;
  std::vector<Index> dims;

  void SetUp() override {
    for (std::size_t j = 0; j < part.ports.size(); ++j) {
      const Index N = Index(part.ports[j].cols.size());
      const Index n = std::max<Index>(1, std::min<Index>(N - 1, 2));
      nets.push_back(random_net(N, n, 3, 1, Activation::Sigmoid, 40 + j));
      dims.push_back(n);
    }
  }
};

TEST_F(PortAssembly, BlockFormEqualsSumOverPorts) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < part.count(); ++i) {
    const Autoencoder a = assemble_port_interface(part, nets, i);
    ASSERT_EQ(a.full_dim(), Index(part[i].interface_cols.size()));
    ASSERT_EQ(a.latent_dim(), latent_interface_dim(part, i, dims));
    for (int trial = 0; trial < 3; ++trial) {
      const Vec xh = random_vec(a.latent_dim(), rng);
      Vec direct = Vec::Zero(a.full_dim());
      Mat Jdirect = Mat::Zero(a.full_dim(), a.latent_dim());
      for (int j : part[i].ports) {
        const Index off = latent_port_offset(part, i, j, dims);
        const Vec yj = nets[j].decode(xh.segment(off, dims[j]));
        const Mat Jj = nets[j].decoder_jacobian(xh.segment(off, dims[j]));
        const IndexList& pos = part.port_positions(j, i);
        for (std::size_t t = 0; t < pos.size(); ++t) {
          direct[pos[t]] += yj[Index(t)];
          Jdirect.block(pos[t], off, 1, dims[j]) += Jj.row(Index(t));
        }
      }
      EXPECT_LE((a.decode(xh) - direct).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((a.decoder_jacobian(xh) - Jdirect).cwiseAbs().maxCoeff(), 1e-12);

      const Vec x = a.decode(xh);
      Vec enc_direct(a.latent_dim());
      for (int j : part[i].ports) {
        const IndexList& pos = part.port_positions(j, i);
        Vec xj(Index(pos.size()));
        for (std::size_t t = 0; t < pos.size(); ++t) xj[Index(t)] = x[pos[t]];
        enc_direct.segment(latent_port_offset(part, i, j, dims), dims[j]) = nets[j].encode(xj);
      }
      EXPECT_LE((a.encode(x) - enc_direct).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST_F(PortAssembly, CompatibleLatentsGiveIdenticalPortValues) {
  std::mt19937_64 rng(9);
  std::vector<Vec> port_latent;
  for (Index d : dims) port_latent.push_back(random_vec(d, rng));
  std::vector<Vec> decoded;
  for (int i = 0; i < part.count(); ++i) {
    Vec xh(latent_interface_dim(part, i, dims));
    for (int j : part[i].ports) xh.segment(latent_port_offset(part, i, j, dims), dims[j]) = port_latent[j];
    decoded.push_back(assemble_port_interface(part, nets, i).decode(xh));
  }
  for (std::size_t j = 0; j < part.ports.size(); ++j) {
    const auto& mem = part.ports[j].members;
    for (std::size_t k = 1; k < mem.size(); ++k) {
      const IndexList& p0 = part.port_positions(int(j), mem[0]);
      const IndexList& pk = part.port_positions(int(j), mem[k]);
      for (std::size_t t = 0; t < p0.size(); ++t) EXPECT_EQ(decoded[mem[0]][p0[t]], decoded[mem[k]][pk[t]]);
    }
  }
}

TEST_F(PortAssembly, MissingPortNetThrows) {
  nets.pop_back();
  EXPECT_THROW(assemble_port_interface(part, nets, 0), InvalidArgument);
}

}  // namespace
}  // namespace ddrom
