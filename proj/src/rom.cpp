#include "ddrom/rom.hpp"

#include "ddrom/pod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace ddrom {

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class DenseRows final : public RowDecoder {
 public:
  explicit DenseRows(Mat rows) : rows_(std::move(rows)) {}
  void evaluate(const Vec& xh, Vec& values, Mat& jacobian) const override {
    values.noalias() = rows_ * xh;
    jacobian = rows_;
  }

 private:
  Mat rows_;
};

class SelectRows final : public RowDecoder {
 public:
  SelectRows(IndexList rows, Index n) : rows_(std::move(rows)), n_(n) {}
  void evaluate(const Vec& xh, Vec& values, Mat& jacobian) const override {
    values.resize(Index(rows_.size()));
    jacobian.setZero(Index(rows_.size()), n_);
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      values[Index(k)] = xh[rows_[k]];
      jacobian(Index(k), rows_[k]) = 1.0;
    }
  }

 private:
  IndexList rows_;
  Index n_;
};

class SubnetRows final : public RowDecoder {
 public:
  explicit SubnetRows(Subnet s) : s_(std::move(s)) {}
  void evaluate(const Vec& xh, Vec& values, Mat& jacobian) const override {
    values = s_.decode(xh);
    jacobian = s_.jacobian(xh);
  }

 private:
  Subnet s_;
};

void check_outputs(const IndexList& outputs, Index n) {
  for (Index r : outputs)
    if (r < 0 || r >= n) throw InvalidArgument("decoder output index out of range");
}

class LinearReduction final : public ReductionMap {
 public:
  explicit LinearReduction(Mat phi) : phi_(std::move(phi)) {}
  Index full_dim() const override { return phi_.rows(); }
  Index latent_dim() const override { return phi_.cols(); }
  Vec decode(const Vec& xh) const override {
    require_size(xh.size(), latent_dim(), "linear decode");
    return phi_ * xh;
  }
  Mat jacobian(const Vec&) const override { return phi_; }
  Vec encode(const Vec& x) const override {
    require_size(x.size(), full_dim(), "linear encode");
    return phi_.transpose() * x;
  }
  std::unique_ptr<RowDecoder> restrict_to(const IndexList& outputs) const override {
    check_outputs(outputs, full_dim());
    Mat rows(Index(outputs.size()), phi_.cols());
    for (std::size_t k = 0; k < outputs.size(); ++k) rows.row(Index(k)) = phi_.row(outputs[k]);
    return std::make_unique<DenseRows>(std::move(rows));
  }
  bool is_linear() const override { return true; }

 private:
  Mat phi_;
};

class IdentityReduction final : public ReductionMap {
 public:
  explicit IdentityReduction(Index n) : n_(n) {}
  Index full_dim() const override { return n_; }
  Index latent_dim() const override { return n_; }
  Vec decode(const Vec& xh) const override { return xh; }
  Mat jacobian(const Vec&) const override { return Mat::Identity(n_, n_); }
  Vec encode(const Vec& x) const override { return x; }
  std::unique_ptr<RowDecoder> restrict_to(const IndexList& outputs) const override {
    check_outputs(outputs, n_);
    return std::make_unique<SelectRows>(outputs, n_);
  }
  bool is_linear() const override { return true; }

 private:
  Index n_;
};

class AutoencoderReduction final : public ReductionMap {
 public:
  explicit AutoencoderReduction(Autoencoder ae) : ae_(std::move(ae)) {}
  Index full_dim() const override { return ae_.full_dim(); }
  Index latent_dim() const override { return ae_.latent_dim(); }
  Vec decode(const Vec& xh) const override { return ae_.decode(xh); }
  Mat jacobian(const Vec& xh) const override { return ae_.decoder_jacobian(xh); }
  Vec encode(const Vec& x) const override { return ae_.encode(x); }
  std::unique_ptr<RowDecoder> restrict_to(const IndexList& outputs) const override {
    return std::make_unique<SubnetRows>(extract_subnet(ae_, outputs));
  }

 private:
  Autoencoder ae_;
};

double tps(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

}  // namespace

MapPtr make_linear_map(Mat phi) { return std::make_shared<LinearReduction>(std::move(phi)); }
MapPtr make_identity_map(Index n) { return std::make_shared<IdentityReduction>(n); }
MapPtr make_autoencoder_map(Autoencoder ae) { return std::make_shared<AutoencoderReduction>(std::move(ae)); }

// ---------------------------------------------------------------------------------------------

Eigen::Vector2d RbfInterpolator::scaled(const ParameterPoint& p) const {
  return {(p.a - box_.a_lo) / (box_.a_hi - box_.a_lo), (p.lambda - box_.lambda_lo) / (box_.lambda_hi - box_.lambda_lo)};
}

RbfInterpolator::RbfInterpolator(const std::vector<ParameterPoint>& centers, const Mat& values, const ParameterBox& box)
    : box_(box) {
  const Index m = Index(centers.size());
  if (m < 3) throw InvalidArgument("RBF interpolation needs at least three centers");
  require_size(values.cols(), m, "RBF training values");
  if (!(box.a_hi > box.a_lo) || !(box.lambda_hi > box.lambda_lo)) throw InvalidArgument("degenerate parameter box");
  centers_.resize(m, 2);
  for (Index k = 0; k < m; ++k) centers_.row(k) = scaled(centers[std::size_t(k)]).transpose();
  Mat K = Mat::Zero(m + 3, m + 3);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) K(a, b) = tps((centers_.row(a) - centers_.row(b)).norm());
    K(a, m) = K(m, a) = 1.0;
    K(a, m + 1) = K(m + 1, a) = centers_(a, 0);
    K(a, m + 2) = K(m + 2, a) = centers_(a, 1);
  }
  Mat rhs = Mat::Zero(m + 3, values.rows());
  rhs.topRows(m) = values.transpose();
  Eigen::FullPivLU<Mat> lu(K);
  if (!lu.isInvertible()) throw SingularityError("RBF system is singular (collinear or repeated centers)");
  const Mat sol = lu.solve(rhs);
  weights_ = sol.topRows(m);
  poly_ = sol.bottomRows(3);
}

Vec RbfInterpolator::operator()(const ParameterPoint& p) const {
  if (!fitted()) throw Error("RBF initializer has not been fitted");
  const Eigen::Vector2d s = scaled(p);
  Vec phi(centers_.rows());
  for (Index k = 0; k < phi.size(); ++k) phi[k] = tps((centers_.row(k).transpose() - s).norm());
  return weights_.transpose() * phi + poly_.row(0).transpose() + s[0] * poly_.row(1).transpose() +
         s[1] * poly_.row(2).transpose();
}

bool RbfInterpolator::extrapolates(const ParameterPoint& p) const {
  const Eigen::Vector2d s = scaled(p);
  return (s.array() < -0.1).any() || (s.array() > 1.1).any();
}

void RbfInterpolator::save(MatrixArchive& ar, const std::string& prefix) const {
  Mat box(4, 1);
  box << box_.a_lo, box_.a_hi, box_.lambda_lo, box_.lambda_hi;
  ar.add(prefix + "/box", box);
  ar.add(prefix + "/centers", centers_);
  ar.add(prefix + "/weights", weights_);
  ar.add(prefix + "/poly", poly_);
}

RbfInterpolator RbfInterpolator::load(const MatrixArchive& ar, const std::string& prefix) {
  RbfInterpolator r;
  const Mat& box = ar.get(prefix + "/box");
  if (box.size() != 4) throw FormatError("RBF box record malformed");
  r.box_ = {box(0), box(1), box(2), box(3)};
  r.centers_ = ar.get(prefix + "/centers");
  r.weights_ = ar.get(prefix + "/weights");
  r.poly_ = ar.get(prefix + "/poly");
  if (r.centers_.cols() != 2 || r.weights_.rows() != r.centers_.rows() || r.poly_.rows() != 3 ||
      r.poly_.cols() != r.weights_.cols())
    throw FormatError("RBF records have inconsistent dimensions");
  return r;
}

// ---------------------------------------------------------------------------------------------

std::string to_string(ConstraintMode m) { return m == ConstraintMode::Wfpc ? "wfpc" : "srpc"; }

ConstraintMode constraint_mode_from_string(const std::string& s) {
  if (s == "wfpc") return ConstraintMode::Wfpc;
  if (s == "srpc") return ConstraintMode::Srpc;
  throw ConfigError("unknown constraint mode '" + s + "'");
}

Index RomInstance::total_dim() const {
  Index n = 0;
  for (int i = 0; i < part.count(); ++i) n += block_dim(i);
  return n;
}

Index RomInstance::constraint_rows() const {
  return mode == ConstraintMode::Wfpc ? test_matrix.rows() : rom_constraint_rows(part, port_dims);
}

void RomInstance::validate() const {
  const std::size_t n = std::size_t(part.count());
  if (interior.size() != n || interface.size() != n) throw DimensionError("one interior and interface map per subdomain");
  for (std::size_t i = 0; i < n; ++i) {
    require_size(interior[i]->full_dim(), Index(part.subdomains[i].interior_cols.size()), "interior map");
    require_size(interface[i]->full_dim(), Index(part.subdomains[i].interface_cols.size()), "interface map");
  }
  if (mode == ConstraintMode::Wfpc) {
    require_size(test_matrix.cols(), part.constraint_rows(), "test matrix columns");
    if (test_matrix.rows() < 1) throw InvalidArgument("test matrix needs at least one row");
  } else {
    if (port_dims.size() != part.ports.size()) throw DimensionError("one latent dimension per port");
    for (std::size_t i = 0; i < n; ++i)
      require_size(interface[i]->latent_dim(), latent_interface_dim(part, int(i), port_dims), "SRPC interface latent");
  }
  if (!hr.empty()) {
    if (hr.size() != n) throw DimensionError("one hyper-reduction operator per subdomain");
    for (std::size_t i = 0; i < n; ++i)
      require_size(hr[i].full_rows(), Index(part.subdomains[i].res_rows.size()), "hyper-reduction rows");
  }
}

Mat gaussian_test_matrix(Index n_c, Index n_a, std::uint64_t seed) {
  if (n_c < 1 || n_c > n_a) throw InvalidArgument("test matrix rows must lie in [1, N_A]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Mat C(n_c, n_a);
  const double s = 1.0 / std::sqrt(double(n_c));
  for (Index j = 0; j < n_a; ++j)
    for (Index i = 0; i < n_c; ++i) C(i, j) = s * N(rng);
  return C;
}

Index default_test_rows(const Partition& part, std::span<const Index> interface_dims) {
  Index total = 0;
  for (Index d : interface_dims) total += d;
  return std::clamp<Index>(total / 2, 1, part.constraint_rows());
}

RomInstance wfpc_instance(const Grid2D& grid, const Partition& part, std::vector<MapPtr> interior,
                          std::vector<MapPtr> interface, Mat test_matrix) {
  RomInstance inst;
  inst.grid = grid;
  inst.part = part;
  inst.interior = std::move(interior);
  inst.interface = std::move(interface);
  inst.mode = ConstraintMode::Wfpc;
  inst.test_matrix = std::move(test_matrix);
  inst.validate();
  return inst;
}

RomInstance srpc_linear_instance(const Grid2D& grid, const Partition& part, std::vector<MapPtr> interior,
                                 const std::vector<Mat>& port_bases) {
  RomInstance inst;
  inst.grid = grid;
  inst.part = part;
  inst.interior = std::move(interior);
  inst.mode = ConstraintMode::Srpc;
  for (const Mat& b : port_bases) {
    inst.ports.push_back(make_linear_map(b));
    inst.port_dims.push_back(b.cols());
  }
  for (int i = 0; i < part.count(); ++i) inst.interface.push_back(make_linear_map(port_interface_basis(part, port_bases, i)));
  inst.validate();
  return inst;
}

RomInstance srpc_autoencoder_instance(const Grid2D& grid, const Partition& part, std::vector<MapPtr> interior,
                                      const std::vector<Autoencoder>& port_nets) {
  RomInstance inst;
  inst.grid = grid;
  inst.part = part;
  inst.interior = std::move(interior);
  inst.mode = ConstraintMode::Srpc;
  for (const Autoencoder& a : port_nets) {
    inst.ports.push_back(make_autoencoder_map(a));
    inst.port_dims.push_back(a.latent_dim());
  }
  for (int i = 0; i < part.count(); ++i)
    inst.interface.push_back(make_autoencoder_map(assemble_port_interface(part, port_nets, i)));
  inst.validate();
  return inst;
}

RomInstance dd_fom_instance(const Grid2D& grid, const Partition& part) {
  std::vector<MapPtr> in, ga;
  for (const auto& s : part.subdomains) {
    in.push_back(make_identity_map(Index(s.interior_cols.size())));
    ga.push_back(make_identity_map(Index(s.interface_cols.size())));
  }
  const Index na = part.constraint_rows();
  return wfpc_instance(grid, part, std::move(in), std::move(ga), Mat::Identity(na, na));
}

// WFPC: [x_1; ...; x_n]. SRPC: interior latents of every subdomain, then one latent per port,
// so that interpolated port coordinates are shared by all members.
Mat initializer_values(const RomInstance& inst, const SnapshotSet& snaps) {
  const int n = inst.part.count();
  require_size(Index(snaps.interior.size()), Index(n), "snapshot interior blocks");
  Index rows = 0;
  for (int i = 0; i < n; ++i) rows += inst.interior[std::size_t(i)]->latent_dim();
  if (inst.mode == ConstraintMode::Wfpc)
    for (int i = 0; i < n; ++i) rows += inst.interface[std::size_t(i)]->latent_dim();
  else
    for (Index d : inst.port_dims) rows += d;
  Mat V(rows, snaps.count());
  for (Index c = 0; c < snaps.count(); ++c) {
    Index off = 0;
    auto put = [&](const Vec& v) {
      V.col(c).segment(off, v.size()) = v;
      off += v.size();
    };
    if (inst.mode == ConstraintMode::Wfpc) {
      for (int i = 0; i < n; ++i) {
        put(inst.interior[std::size_t(i)]->encode(snaps.interior[std::size_t(i)].col(c)));
        put(inst.interface[std::size_t(i)]->encode(snaps.interface[std::size_t(i)].col(c)));
      }
    } else {
      for (int i = 0; i < n; ++i) put(inst.interior[std::size_t(i)]->encode(snaps.interior[std::size_t(i)].col(c)));
      for (std::size_t j = 0; j < inst.ports.size(); ++j) put(inst.ports[j]->encode(snaps.ports[j].col(c)));
    }
  }
  return V;
}

void fit_initializer(RomInstance& inst, const SnapshotSet& snaps, const ParameterBox& box) {
  inst.initializer = RbfInterpolator(snaps.params, initializer_values(inst, snaps), box);
}

namespace {

std::vector<Vec> unstack_initial(const RomInstance& inst, const Vec& v) {
  const int n = inst.part.count();
  std::vector<Vec> x(static_cast<std::size_t>(n));
  Index off = 0;
  if (inst.mode == ConstraintMode::Wfpc) {
    for (int i = 0; i < n; ++i) {
      x[std::size_t(i)] = v.segment(off, inst.block_dim(i));
      off += inst.block_dim(i);
    }
  } else {
    std::vector<Index> port_off;
    Index o = 0;
    for (int i = 0; i < n; ++i) o += inst.interior[std::size_t(i)]->latent_dim();
    for (Index d : inst.port_dims) {
      port_off.push_back(o);
      o += d;
    }
    for (int i = 0; i < n; ++i) {
      const Index no = inst.interior[std::size_t(i)]->latent_dim();
      Vec xi(inst.block_dim(i));
      xi.head(no) = v.segment(off, no);
      off += no;
      for (int j : inst.part[i].ports)
        xi.segment(no + latent_port_offset(inst.part, i, j, inst.port_dims), inst.port_dims[std::size_t(j)]) =
            v.segment(port_off[std::size_t(j)], inst.port_dims[std::size_t(j)]);
      x[std::size_t(i)] = xi;
    }
  }
  return x;
}

}  // namespace

void attach_hyper_reduction(RomInstance& inst, HrMode mode, Index samples, const std::vector<Mat>& residual_snapshots,
                            double residual_energy) {
  inst.hr.clear();
  if (mode == HrMode::None) return;
  inst.hr = make_hr_operators(inst.part, mode, sample_residual_rows(inst.part, samples, residual_snapshots, residual_energy));
}

// ---------------------------------------------------------------------------------------------

struct RomProblem::Block {
  const BurgersFom& fom;
  const Subdomain& sub;
  HrOperator hr;
  Index n_o = 0, n_g = 0;
  std::unique_ptr<RowDecoder> dec_o, dec_g;
  MapPtr full_g;
  bool g_from_full = false;  // WFPC with a nonlinear interface map: decode it once, in full
  IndexList need_g;
  std::vector<Index> cols;  // global column of every needed output, interior first
  std::vector<Index> slot;  // global column -> position in `cols`, or -1
  Index n_need_o = 0;
  ConstraintMode mode;
  Mat CA;    // WFPC: C A_i
  Mat CAJ;   // WFPC with a linear interface map: C A_i Phi
  Mat Ahat;  // SRPC
  Index n_a = 0;
  Vec scratch;
  std::size_t rows_evaluated = 0;
  // Workspace
  Vec vo, vg, r;
  Mat Jo, Jg, R;
  std::vector<std::pair<Index, double>> entries;

  Block(const RomInstance& inst, const BurgersFom& f, const SpMat& pattern, int i, const std::vector<SpMat>& A,
        const std::vector<SpMat>& Ahat_blocks)
      : fom(f), sub(inst.part[i]), mode(inst.mode) {
    const std::size_t k = std::size_t(i);
    hr = inst.hr.empty() ? HrOperator::none(Index(sub.res_rows.size())) : inst.hr[k];
    n_o = inst.interior[k]->latent_dim();
    n_g = inst.interface[k]->latent_dim();
    const NeededOutputs need = hr_rows_for_subdomain(pattern, inst.part, i, hr.sampled_rows());
    if (!need.interior.empty()) dec_o = inst.interior[k]->restrict_to(need.interior);
    full_g = inst.interface[k];
    g_from_full = mode == ConstraintMode::Wfpc && !full_g->is_linear();
    need_g = need.interface;
    if (!g_from_full && !need_g.empty()) dec_g = full_g->restrict_to(need_g);
    n_need_o = Index(need.interior.size());
    for (Index p : need.interior) cols.push_back(sub.interior_cols[std::size_t(p)]);
    for (Index p : need.interface) cols.push_back(sub.interface_cols[std::size_t(p)]);
    slot.assign(std::size_t(f.size()), -1);
    for (std::size_t c = 0; c < cols.size(); ++c) slot[std::size_t(cols[c])] = Index(c);
    scratch = Vec::Zero(f.size());
    if (mode == ConstraintMode::Wfpc) {
      CA = inst.test_matrix * A[k];
      if (full_g->is_linear()) CAJ = CA * full_g->jacobian(Vec::Zero(n_g));
      n_a = CA.rows();
    } else {
      Ahat = Mat(Ahat_blocks[k]);
      n_a = Ahat.rows();
    }
  }

  void evaluate(const Vec& x, BlockEvaluation& out) {
    const Vec xo = x.head(n_o), xg = x.tail(n_g);
    if (dec_o) dec_o->evaluate(xo, vo, Jo);
    Vec g_full;
    Mat Jg_full;
    if (g_from_full) {
      g_full = full_g->decode(xg);
      Jg_full = full_g->jacobian(xg);
      vg.resize(Index(need_g.size()));
      Jg.resize(Index(need_g.size()), n_g);
      for (std::size_t q = 0; q < need_g.size(); ++q) {
        vg[Index(q)] = g_full[need_g[q]];
        Jg.row(Index(q)) = Jg_full.row(need_g[q]);
      }
    } else if (dec_g) {
      dec_g->evaluate(xg, vg, Jg);
    }
    for (Index c = 0; c < n_need_o; ++c) scratch[cols[std::size_t(c)]] = vo[c];
    for (std::size_t q = 0; q < need_g.size(); ++q) scratch[cols[std::size_t(n_need_o) + q]] = vg[Index(q)];

    const IndexList& rows = hr.sampled_rows();
    const Index m = Index(rows.size());
    r.resize(m);
    R.setZero(m, n_o + n_g);
    for (Index q = 0; q < m; ++q) {
      const Index row = sub.res_rows[std::size_t(rows[std::size_t(q)])];
      r[q] = fom.residual_row(row, scratch.data());
      fom.jacobian_row(row, scratch.data(), entries);
      for (const auto& [col, val] : entries) {
        const Index s = slot[std::size_t(col)];
        if (s < n_need_o)
          R.row(q).head(n_o) += val * Jo.row(s);
        else
          R.row(q).tail(n_g) += val * Jg.row(s - n_need_o);
      }
    }
    rows_evaluated += std::size_t(m);
    out.weighted_residual = hr.apply_sampled(r);
    out.weighted_jacobian = hr.apply_sampled(R);

    out.constraint_jacobian.setZero(n_a, n_o + n_g);
    if (mode == ConstraintMode::Srpc) {
      out.constraint = Ahat * xg;
      out.constraint_jacobian.rightCols(n_g) = Ahat;
    } else if (CAJ.size() > 0) {
      out.constraint = CAJ * xg;
      out.constraint_jacobian.rightCols(n_g) = CAJ;
    } else {
      out.constraint = CA * g_full;
      out.constraint_jacobian.rightCols(n_g) = CA * Jg_full;
    }
  }
};

RomProblem::RomProblem(const RomInstance& inst, const ParameterPoint& p) : fom_(inst.grid, p), pattern_(fom_.pattern()) {
  inst.validate();
  const std::vector<SpMat> A = inst.mode == ConstraintMode::Wfpc ? fom_constraint_blocks(inst.part) : std::vector<SpMat>{};
  const std::vector<SpMat> Ahat =
      inst.mode == ConstraintMode::Srpc ? rom_constraint_blocks(inst.part, inst.port_dims) : std::vector<SpMat>{};
  prob_.n_constraints = inst.constraint_rows();
  for (int i = 0; i < inst.part.count(); ++i) {
    blocks_.push_back(std::make_unique<Block>(inst, fom_, pattern_, i, A, Ahat));
    SqpBlock b;
    b.n_interior = blocks_.back()->n_o;
    b.n_interface = blocks_.back()->n_g;
    b.evaluate = [blk = blocks_.back().get()](const Vec& x, BlockEvaluation& out) { blk->evaluate(x, out); };
    prob_.blocks.push_back(std::move(b));
  }
}

RomProblem::~RomProblem() = default;

std::size_t RomProblem::residual_rows_evaluated() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b->rows_evaluated;
  return n;
}

RomSolution solve_rom(const RomInstance& inst, const ParameterPoint& p, const RomSolveConfig& cfg) {
  const auto t_wall = Clock::now();
  RomProblem rp(inst, p);
  const auto& prob = rp.problem();
  RomSolution sol;

  const auto t_init = Clock::now();
  std::vector<Vec> x0;
  if (cfg.use_initializer) {
    sol.extrapolated = inst.initializer.extrapolates(p);
    x0 = unstack_initial(inst, inst.initializer(p));
  } else {
    for (int i = 0; i < inst.part.count(); ++i) x0.push_back(Vec::Zero(inst.block_dim(i)));
  }
  const Vec lambda0 = least_squares_multipliers(prob, x0);
  sol.init_time = seconds_since(t_init);
  const std::size_t rows_before = rp.residual_rows_evaluated();

  sol.sqp = solve_sqp(prob, std::move(x0), lambda0, cfg.sqp);
  sol.solve_time = sol.sqp.timing.modeled();
  sol.residual_rows_evaluated = rp.residual_rows_evaluated() - rows_before;
  sol.latent = sol.sqp.x;
  sol.lambda = sol.sqp.lambda;
  for (int i = 0; i < inst.part.count(); ++i) {
    const std::size_t k = std::size_t(i);
    const Index no = inst.interior[k]->latent_dim();
    sol.interior.push_back(inst.interior[k]->decode(sol.latent[k].head(no)));
    sol.interface.push_back(inst.interface[k]->decode(sol.latent[k].tail(inst.interface[k]->latent_dim())));
  }
  sol.wall_time = seconds_since(t_wall);
  return sol;
}

double relative_error(const std::vector<Vec>& ref_interior, const std::vector<Vec>& ref_interface,
                      const std::vector<Vec>& rom_interior, const std::vector<Vec>& rom_interface) {
  const std::size_t n = ref_interior.size();
  if (n == 0 || ref_interface.size() != n || rom_interior.size() != n || rom_interface.size() != n)
    throw DimensionError("relative_error needs matching non-empty block lists");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require_size(rom_interior[i].size(), ref_interior[i].size(), "relative_error interior");
    require_size(rom_interface[i].size(), ref_interface[i].size(), "relative_error interface");
    const double den = ref_interior[i].squaredNorm() + ref_interface[i].squaredNorm();
    if (den == 0.0) throw InvalidArgument("relative_error: zero reference block " + std::to_string(i));
    acc += ((ref_interior[i] - rom_interior[i]).squaredNorm() + (ref_interface[i] - rom_interface[i]).squaredNorm()) / den;
  }
  return std::sqrt(acc / double(n));
}

double relative_error(const Partition& part, const Vec& fom_state, const RomSolution& rom) {
  std::vector<Vec> io, ig;
  for (int i = 0; i < part.count(); ++i) {
    io.push_back(part.interior(i, fom_state));
    ig.push_back(part.interface(i, fom_state));
  }
  return relative_error(io, ig, rom.interior, rom.interface);
}

Vec assemble_global(const Partition& part, const std::vector<Vec>& interior, const std::vector<Vec>& interface) {
  Vec x = Vec::Zero(part.global_size);
  for (int i = part.count() - 1; i >= 0; --i) {
    const auto& s = part[i];
    const std::size_t k = std::size_t(i);
    require_size(interior[k].size(), Index(s.interior_cols.size()), "assemble_global interior");
    require_size(interface[k].size(), Index(s.interface_cols.size()), "assemble_global interface");
    for (std::size_t c = 0; c < s.interior_cols.size(); ++c) x[s.interior_cols[c]] = interior[k][Index(c)];
    for (std::size_t c = 0; c < s.interface_cols.size(); ++c) x[s.interface_cols[c]] = interface[k][Index(c)];
  }
  return x;
}

}  // namespace ddrom
