#include "ddrom/fom.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <string>

namespace ddrom {

void Grid2D::validate() const {
  if (nx < 2 || ny < 2) {
    throw InvalidArgument("grid needs nx >= 2 and ny >= 2, got " + std::to_string(nx) + "x" +
                          std::to_string(ny));
  }
  if (!(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
}

Velocity exact_solution(const ParameterPoint& p, double nu, double x, double y) {
  const double ep = std::exp(p.lambda * (x - 1.0));
  const double em = std::exp(-p.lambda * (x - 1.0));
  const double c = std::cos(p.lambda * y);
  const double s = std::sin(p.lambda * y);
  const double psi = p.a * (1.0 + x) + (ep + em) * c;
  if (!(std::abs(psi) >= 1e-300)) {
    throw SingularityError("exact solution: psi vanishes at (" + std::to_string(x) + ", " +
                           std::to_string(y) + ")");
  }
  return {-2.0 * nu * (p.a + p.lambda * (ep - em) * c) / psi,
          2.0 * nu * (p.lambda * (ep + em) * s) / psi};
}

BurgersFom::BurgersFom(const Grid2D& grid, const ParameterPoint& p) : grid_(grid), param_(p) {
  grid_.validate();
  const int nx = grid_.nx, ny = grid_.ny;
  const Index n = grid_.nodes();
  const double hx = grid_.hx(), hy = grid_.hy(), nu = grid_.nu;
  const double ax = -1.0 / (2.0 * hx), ay = -1.0 / (2.0 * hy);
  const double dx = nu / (hx * hx), dy = nu / (hy * hy);

  std::vector<Eigen::Triplet<double, Index>> tbx, tby, tc;
  stencil_ptr_.assign(1, 0);
  stencil_.reserve(5 * n);
  for (int j = 1; j <= ny; ++j) {
    for (int i = 1; i <= nx; ++i) {
      const Index row = grid_.node(i, j);
      // Stencil columns in ascending order: south, west, centre, east, north.
      if (j > 1) stencil_.push_back({grid_.node(i, j - 1), 0.0, -ay, dy});
      if (i > 1) stencil_.push_back({grid_.node(i - 1, j), -ax, 0.0, dx});
      stencil_.push_back({row, 0.0, 0.0, -2.0 * dx - 2.0 * dy});
      if (i < nx) stencil_.push_back({grid_.node(i + 1, j), ax, 0.0, dx});
      if (j < ny) stencil_.push_back({grid_.node(i, j + 1), 0.0, ay, dy});
      stencil_ptr_.push_back(Index(stencil_.size()));
      for (Index e = stencil_ptr_[row]; e < stencil_ptr_[row + 1]; ++e) {
        const auto& s = stencil_[e];
        if (s.bx != 0.0) tbx.emplace_back(row, s.col, s.bx);
        if (s.by != 0.0) tby.emplace_back(row, s.col, s.by);
        tc.emplace_back(row, s.col, s.c);
      }
    }
  }
  Bx_.resize(n, n);
  By_.resize(n, n);
  C_.resize(n, n);
  Bx_.setFromTriplets(tbx.begin(), tbx.end());
  By_.setFromTriplets(tby.begin(), tby.end());
  C_.setFromTriplets(tc.begin(), tc.end());

  // Ghost-point data: "l"/"r" are the x = -1 / x = 1 lines, "b"/"t" the y = 0 / y = 0.05 lines.
  Vec uxl = Vec::Zero(n), uxr = Vec::Zero(n), uyb = Vec::Zero(n), uyt = Vec::Zero(n);
  Vec vxl = Vec::Zero(n), vxr = Vec::Zero(n), vyb = Vec::Zero(n), vyt = Vec::Zero(n);
  for (int j = 1; j <= ny; ++j) {
    const Velocity l = exact_solution(p, nu, grid_.x(0), grid_.y(j));
    const Velocity r = exact_solution(p, nu, grid_.x(nx + 1), grid_.y(j));
    uxl[grid_.node(1, j)] = l.u;
    vxl[grid_.node(1, j)] = l.v;
    uxr[grid_.node(nx, j)] = r.u;
    vxr[grid_.node(nx, j)] = r.v;
  }
  for (int i = 1; i <= nx; ++i) {
    const Velocity b = exact_solution(p, nu, grid_.x(i), grid_.y(0));
    const Velocity t = exact_solution(p, nu, grid_.x(i), grid_.y(ny + 1));
    uyb[grid_.node(i, 1)] = b.u;
    vyb[grid_.node(i, 1)] = b.v;
    uyt[grid_.node(i, ny)] = t.u;
    vyt[grid_.node(i, ny)] = t.v;
  }
  bux_ = ax * (uxl - uxr);
  buy_ = ay * (uyb - uyt);
  cu_ = dx * (uxl + uxr) + dy * (uyb + uyt);
  bvx_ = ax * (vxl - vxr);
  bvy_ = ay * (vyb - vyt);
  cv_ = dx * (vxl + vxr) + dy * (vyb + vyt);
}

double BurgersFom::residual_row(Index k, const double* x) const {
  const Index n = grid_.nodes();
  const bool is_u = k < n;
  const Index p = is_u ? k : k - n;
  const double* u = x;
  const double* v = x + n;
  const double* w = is_u ? u : v;
  double bxw = 0.0, byw = 0.0, cw = 0.0;
  for (Index e = stencil_ptr_[p]; e < stencil_ptr_[p + 1]; ++e) {
    const auto& s = stencil_[e];
    const double wq = w[s.col];
    bxw += s.bx * wq;
    byw += s.by * wq;
    cw += s.c * wq;
  }
  if (is_u) return u[p] * (bxw - bux_[p]) + v[p] * (byw - buy_[p]) + cw + cu_[p];
  return u[p] * (bxw - bvx_[p]) + v[p] * (byw - bvy_[p]) + cw + cv_[p];
}

void BurgersFom::jacobian_row(Index k, const double* x,
                              std::vector<std::pair<Index, double>>& out) const {
  const Index n = grid_.nodes();
  const bool is_u = k < n;
  const Index p = is_u ? k : k - n;
  const double up = x[p];
  const double vp = x[n + p];
  const double* w = is_u ? x : x + n;
  const Index off = is_u ? 0 : n;
  double bxw = 0.0, byw = 0.0;
  for (Index e = stencil_ptr_[p]; e < stencil_ptr_[p + 1]; ++e) {
    bxw += stencil_[e].bx * w[stencil_[e].col];
    byw += stencil_[e].by * w[stencil_[e].col];
  }
  out.clear();
  // r_v depends on u only through u_p (Bx v - b_vx) and sits before the v block.
  if (!is_u) out.emplace_back(p, bxw - bvx_[p]);
  for (Index e = stencil_ptr_[p]; e < stencil_ptr_[p + 1]; ++e) {
    const auto& s = stencil_[e];
    double val = up * s.bx + vp * s.by + s.c;
    if (s.col == p) val += is_u ? (bxw - bux_[p]) : (byw - bvy_[p]);
    out.emplace_back(off + s.col, val);
  }
  if (is_u) out.emplace_back(n + p, byw - buy_[p]);
}

void BurgersFom::row_pattern(Index k, IndexList& cols) const {
  const Index n = grid_.nodes();
  const bool is_u = k < n;
  const Index p = is_u ? k : k - n;
  const Index off = is_u ? 0 : n;
  cols.clear();
  if (!is_u) cols.push_back(p);
  for (Index e = stencil_ptr_[p]; e < stencil_ptr_[p + 1]; ++e) cols.push_back(off + stencil_[e].col);
  if (is_u) cols.push_back(n + p);
}

Vec BurgersFom::residual(const Vec& x) const {
  require_size(x.size(), size(), "residual");
  Vec r(size());
  for (Index k = 0; k < size(); ++k) r[k] = residual_row(k, x.data());
  return r;
}

SpMat BurgersFom::jacobian(const Vec& x) const {
  require_size(x.size(), size(), "jacobian");
  const Index N = size();
  SpMat J(N, N);
  J.reserve(Eigen::VectorXi::Constant(N, 6));
  std::vector<std::pair<Index, double>> row;
  for (Index k = 0; k < N; ++k) {
    jacobian_row(k, x.data(), row);
    for (const auto& [c, v] : row) J.insert(k, c) = v;
  }
  J.makeCompressed();
  return J;
}

SpMat BurgersFom::pattern() const {
  const Index N = size();
  SpMat P(N, N);
  P.reserve(Eigen::VectorXi::Constant(N, 6));
  IndexList cols;
  for (Index k = 0; k < N; ++k) {
    row_pattern(k, cols);
    for (Index c : cols) P.insert(k, c) = 1.0;
  }
  P.makeCompressed();
  return P;
}

Vec BurgersFom::exact_state() const {
  const Index n = grid_.nodes();
  Vec x(2 * n);
  for (int j = 1; j <= grid_.ny; ++j) {
    for (int i = 1; i <= grid_.nx; ++i) {
      const Velocity e = exact_solution(param_, grid_.nu, grid_.x(i), grid_.y(j));
      x[grid_.node(i, j)] = e.u;
      x[n + grid_.node(i, j)] = e.v;
    }
  }
  return x;
}

NewtonResult solve_monolithic(const BurgersFom& fom, const Vec& init, const NewtonOptions& opts) {
  require_size(init.size(), fom.size(), "solve_monolithic init");
  if (!init.allFinite()) throw InvalidArgument("solve_monolithic: initial state is not finite");

  NewtonResult res;
  res.state = init;
  Vec r = fom.residual(res.state);
  double norm = r.norm();
  res.residuals.push_back(r);
  res.residual_norms.push_back(norm);

  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, Index>> lu;
  bool analyzed = false;
  while (norm > opts.tol) {
    if (res.iterations >= opts.max_iter) {
      throw ConvergenceError("Newton did not converge in " + std::to_string(opts.max_iter) +
                             " iterations (|r| = " + std::to_string(norm) + ")");
    }
    const Eigen::SparseMatrix<double, Eigen::ColMajor, Index> J = fom.jacobian(res.state);
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw SingularityError("Newton: singular Jacobian");
    const Vec dx = lu.solve(-r);

    double alpha = 1.0;
    Vec trial, rt;
    double nt = 0.0;
    int h = 0;
    for (;; ++h) {
      trial = res.state + alpha * dx;
      rt = fom.residual(trial);
      nt = rt.norm();
      if (nt < norm) break;
      if (h == opts.max_halvings) {
        throw ConvergenceError("Newton step damping exhausted at |r| = " + std::to_string(norm));
      }
      alpha *= 0.5;
    }
    res.state = std::move(trial);
    r = std::move(rt);
    norm = nt;
    res.residuals.push_back(r);
    res.residual_norms.push_back(norm);
    ++res.iterations;
  }
  return res;
}

}  // namespace ddrom
