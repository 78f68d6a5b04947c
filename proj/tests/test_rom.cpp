#include "ddrom/pod.hpp"
#include "ddrom/rom.hpp"

#include <gtest/gtest.h>

#include <random>

namespace ddrom {
namespace {

TEST(DdFom, MatchesMonolithicNewton) {
  const Grid2D grid{60, 8, 0.1};
  const ParameterPoint p{5000.0, 15.0};
  const Partition part = build_partition(grid, 2, 2);
  const Vec mono = solve_monolithic(BurgersFom(grid, p), Vec::Zero(grid.dofs())).state;
  RomSolveConfig cfg;
  cfg.use_initializer = false;
  // ||F|| bottoms out near 1e-7 in double precision here (initial value ~1e9).
  cfg.sqp.tol = 1e-6;
  cfg.sqp.max_iter = 50;
  const RomSolution sol = solve_rom(dd_fom_instance(grid, part), p, cfg);
  EXPECT_TRUE(sol.sqp.converged) << sol.sqp.iterations;
  const Vec dd = assemble_global(part, sol.interior, sol.interface);
  EXPECT_LE((dd - mono).norm() / mono.norm(), 1e-6);
  for (double k : sol.sqp.kkt_residual) EXPECT_LE(k, 1e-10);
}

TEST(RelativeError, ZeroHomogeneityAndHandValue) {
  const std::vector<Vec> io = {(Vec(2) << 1, 2).finished(), (Vec(1) << 3).finished()};
  const std::vector<Vec> ig = {(Vec(1) << 2).finished(), (Vec(2) << 0, 4).finished()};
  EXPECT_EQ(relative_error(io, ig, io, ig), 0.0);
  std::vector<Vec> io2 = io, ig2 = ig;
  for (auto& v : io2) v *= 2.0;
  for (auto& v : ig2) v *= 2.0;
  EXPECT_NEAR(relative_error(io, ig, io2, ig2), 1.0, 1e-15);
  // Block 0: error (0,0 | 1) over 9; block 1: error (1 | 0,0) over 25.
  std::vector<Vec> io3 = io, ig3 = ig;
  ig3[0][0] += 1.0;
  io3[1][0] += 1.0;
  EXPECT_NEAR(relative_error(io, ig, io3, ig3), std::sqrt((1.0 / 9.0 + 1.0 / 25.0) / 2.0), 1e-15);
  std::vector<Vec> zero = {Vec::Zero(2), Vec::Zero(1)};
  EXPECT_THROW(relative_error(zero, std::vector<Vec>{Vec::Zero(1), Vec::Zero(2)}, io, ig), InvalidArgument);
}

TEST(Rbf, InterpolatesTrainingPointsAndReproducesLinearData) {
  const ParameterBox box;
  const auto centers = sample_grid(box, 5, 4);
  Mat V(2, Index(centers.size()));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  for (Index k = 0; k < V.cols(); ++k) {
    V(0, k) = N(rng);
    V(1, k) = 3.0 + 2e-4 * centers[std::size_t(k)].a - 0.5 * centers[std::size_t(k)].lambda;
  }
  const RbfInterpolator f(centers, V, box);
  for (std::size_t k = 0; k < centers.size(); ++k)
    EXPECT_LE((f(centers[k]) - V.col(Index(k))).cwiseAbs().maxCoeff(), 1e-8);
  const ParameterPoint q{1234.5, 17.25};
  EXPECT_NEAR(f(q)[1], 3.0 + 2e-4 * q.a - 0.5 * q.lambda, 1e-9);
  EXPECT_FALSE(f.extrapolates(q));
  EXPECT_TRUE(f.extrapolates({-5000.0, 15.0}));
  MatrixArchive ar;
  f.save(ar, "rbf");
  EXPECT_EQ(RbfInterpolator::load(ar, "rbf")(q), f(q));
  EXPECT_THROW(RbfInterpolator()(q), Error);
}

class SmallRom : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    grid_ = new Grid2D{24, 6, 0.1};
    part_ = new Partition(build_partition(*grid_, 2, 2));
    snaps_ = new SnapshotSet(generate_snapshots(*grid_, sample_grid({}, 6, 6), *part_));
  }
  static void TearDownTestSuite() {
    delete snaps_;
    delete part_;
    delete grid_;
  }
  static Grid2D* grid_;
  static Partition* part_;
  static SnapshotSet* snaps_;

  static std::vector<MapPtr> interior_maps(Index n) {
    std::vector<MapPtr> m;
    for (const Mat& X : snaps_->interior) m.push_back(make_linear_map(pod(X, FixedDimension{n}).phi));
    return m;
  }
  static RomInstance lsrom_wfpc(Index no, Index ng, Index nc) {
    std::vector<MapPtr> g;
    for (const Mat& X : snaps_->interface) g.push_back(make_linear_map(pod(X, FixedDimension{ng}).phi));
    RomInstance inst = wfpc_instance(*grid_, *part_, interior_maps(no), std::move(g),
                                     gaussian_test_matrix(nc, part_->constraint_rows(), 3));
    fit_initializer(inst, *snaps_, {});
    return inst;
  }
  static RomInstance lsrom_srpc(Index no, Index np) {
    std::vector<Mat> pb;
    for (const Mat& X : snaps_->ports) pb.push_back(pod(X, FixedDimension{std::min<Index>(np, X.rows() - 1)}).phi);
    RomInstance inst = srpc_linear_instance(*grid_, *part_, interior_maps(no), pb);
    fit_initializer(inst, *snaps_, {});
    return inst;
  }
};
Grid2D* SmallRom::grid_ = nullptr;
Partition* SmallRom::part_ = nullptr;
SnapshotSet* SmallRom::snaps_ = nullptr;

TEST_F(SmallRom, InitializerReproducesEncodedTrainingSnapshot) {
  const RomInstance inst = lsrom_wfpc(6, 3, 4);
  const Mat V = initializer_values(inst, *snaps_);
  for (Index c : {Index(0), Index(7), Index(20)})
    EXPECT_LE((inst.initializer(snaps_->params[std::size_t(c)]) - V.col(c)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST_F(SmallRom, LsromAtTrainingParameterReachesProjectionLevel) {
  const RomInstance inst = lsrom_wfpc(8, 4, 6);
  const std::size_t c = 14;
  const ParameterPoint p = snaps_->params[c];
  const RomSolution sol = solve_rom(inst, p, {});
  EXPECT_LE(sol.sqp.iterations, 15);
  // Projection error of the training snapshot bounds what any decoder output in these spans can do.
  std::vector<Vec> io, ig, po, pg;
  for (int i = 0; i < part_->count(); ++i) {
    io.push_back(snaps_->interior[std::size_t(i)].col(Index(c)));
    ig.push_back(snaps_->interface[std::size_t(i)].col(Index(c)));
    po.push_back(inst.interior[std::size_t(i)]->decode(inst.interior[std::size_t(i)]->encode(io.back())));
    pg.push_back(inst.interface[std::size_t(i)]->decode(inst.interface[std::size_t(i)]->encode(ig.back())));
  }
  const double proj = relative_error(io, ig, po, pg);
  const double err = relative_error(io, ig, sol.interior, sol.interface);
  EXPECT_LE(err, std::max(20.0 * proj, 1e-6)) << "projection " << proj;
}

TEST_F(SmallRom, SrpcDecodedPortsCompatibleAtEveryIterate) {
  const RomInstance inst = lsrom_srpc(6, 2);
  const auto A = fom_constraint_blocks(*part_);
  double worst = 0.0;
  int calls = 0;
  RomSolveConfig cfg;
  cfg.sqp.on_iterate = [&](int, const std::vector<Vec>& x, const Vec&) {
    Vec s = Vec::Zero(part_->constraint_rows());
    for (int i = 0; i < part_->count(); ++i) {
      const auto& g = inst.interface[std::size_t(i)];
      s += A[std::size_t(i)] * g->decode(x[std::size_t(i)].tail(g->latent_dim()));
    }
    worst = std::max(worst, s.cwiseAbs().maxCoeff());
    ++calls;
  };
  const RomSolution sol = solve_rom(inst, {7692.5384, 21.9230}, cfg);
  EXPECT_GE(calls, 2);
  EXPECT_LE(worst, 1e-10);
  EXPECT_TRUE(sol.sqp.converged);
}

TEST_F(SmallRom, CollocationEvaluatesOnlySampledRows) {
  RomInstance inst = lsrom_wfpc(6, 3, 4);
  attach_hyper_reduction(inst, HrMode::Collocation, 20, snaps_->residuals);
  const ParameterPoint p{3000.0, 12.0};
  RomProblem rp(inst, p);
  std::vector<Vec> x;
  for (int i = 0; i < part_->count(); ++i) x.push_back(Vec::LinSpaced(inst.block_dim(i), -0.2, 0.3));
  std::vector<BlockEvaluation> ev(std::size_t(part_->count()));
  for (int i = 0; i < part_->count(); ++i) rp.problem().blocks[std::size_t(i)].evaluate(x[std::size_t(i)], ev[std::size_t(i)]);
  EXPECT_EQ(rp.residual_rows_evaluated(), std::size_t(20 * part_->count()));
  // Compare against the full residual of the decoded global state.
  std::vector<Vec> io, ig;
  for (int i = 0; i < part_->count(); ++i) {
    const auto& mo = inst.interior[std::size_t(i)];
    io.push_back(mo->decode(x[std::size_t(i)].head(mo->latent_dim())));
    const auto& mg = inst.interface[std::size_t(i)];
    ig.push_back(mg->decode(x[std::size_t(i)].tail(mg->latent_dim())));
  }
  for (int i = 0; i < part_->count(); ++i) {
    // Subdomain-local residual uses this subdomain's own interface values.
    std::vector<Vec> io_i(io.size()), ig_i(ig.size());
    for (std::size_t k = 0; k < io.size(); ++k) {
      io_i[k] = io[k];
      ig_i[k] = ig[k];
    }
    Vec xg = Vec::Zero(grid_->dofs());
    const auto& s = (*part_)[i];
    for (std::size_t c = 0; c < s.interior_cols.size(); ++c) xg[s.interior_cols[c]] = io[std::size_t(i)][Index(c)];
    for (std::size_t c = 0; c < s.interface_cols.size(); ++c) xg[s.interface_cols[c]] = ig[std::size_t(i)][Index(c)];
    const Vec r = rp.fom().residual(xg);
    Vec ri(Index(s.res_rows.size()));
    for (std::size_t k = 0; k < s.res_rows.size(); ++k) ri[Index(k)] = r[s.res_rows[k]];
    EXPECT_LE((inst.hr[std::size_t(i)].apply(ri) - ev[std::size_t(i)].weighted_residual).norm(), 1e-12 * (1 + ri.norm()));
  }
}

TEST_F(SmallRom, GappyAndCollocationSolve) {
  for (HrMode m : {HrMode::Collocation, HrMode::Gappy}) {
    RomInstance inst = lsrom_wfpc(6, 3, 4);
    attach_hyper_reduction(inst, m, 30, snaps_->residuals);
    const RomSolution sol = solve_rom(inst, {7692.5384, 21.9230}, {});
    const Vec ref = solve_monolithic(BurgersFom(*grid_, {7692.5384, 21.9230}), Vec::Zero(grid_->dofs())).state;
    EXPECT_LT(relative_error(*part_, ref, sol), 0.2) << to_string(m);
  }
}

}  // namespace
}  // namespace ddrom
