#pragma once

#include "ddrom/common.hpp"

#include <utility>

namespace ddrom {

struct ParameterPoint {
  double a = 1.0;
  double lambda = 5.0;

  // The training box [1, 1e4] x [5, 25]; points outside are allowed but flagged by callers.
  bool in_domain() const { return a >= 1.0 && a <= 1e4 && lambda >= 5.0 && lambda <= 25.0; }
  friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;
};

// Interior grid on [-1, 1] x [0, 0.05]. Index 0 and n+1 are the Dirichlet ghost lines.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double nu = 0.1;

  double hx() const { return 2.0 / (nx + 1); }
  double hy() const { return 0.05 / (ny + 1); }
  double x(int i) const { return -1.0 + i * hx(); }
  double y(int j) const { return j * hy(); }
  Index nodes() const { return Index(nx) * ny; }
  Index dofs() const { return 2 * nodes(); }
  // 1-based interior coordinates to node number (row-major by y).
  Index node(int i, int j) const { return Index(j - 1) * nx + (i - 1); }
  void validate() const;
};

struct Velocity {
  double u;
  double v;
};

Velocity exact_solution(const ParameterPoint& p, double nu, double x, double y);

// One entry of the 5-point stencil for node p: neighbour column q with the Bx, By and
// diffusion coefficients of row p at that column.
struct StencilEntry {
  Index col;
  double bx;
  double by;
  double c;
};

class BurgersFom {
 public:
  BurgersFom(const Grid2D& grid, const ParameterPoint& p);

  const Grid2D& grid() const { return grid_; }
  const ParameterPoint& parameter() const { return param_; }
  Index size() const { return grid_.dofs(); }

  const SpMat& Bx() const { return Bx_; }
  const SpMat& By() const { return By_; }
  const SpMat& Cdiff() const { return C_; }
  const Vec& bux() const { return bux_; }
  const Vec& buy() const { return buy_; }
  const Vec& cu() const { return cu_; }
  const Vec& bvx() const { return bvx_; }
  const Vec& bvy() const { return bvy_; }
  const Vec& cv() const { return cv_; }

  Vec residual(const Vec& x) const;
  SpMat jacobian(const Vec& x) const;

  // Row-level access used by hyper-reduction. `x` must be a full-length state array, but
  // only the entries in the row's stencil are read.
  double residual_row(Index k, const double* x) const;
  void jacobian_row(Index k, const double* x, std::vector<std::pair<Index, double>>& out) const;
  // Columns referenced by residual row k, ascending.
  void row_pattern(Index k, IndexList& cols) const;

  // Structural Jacobian pattern (all ones), state independent.
  SpMat pattern() const;
  Vec exact_state() const;

 private:
  Grid2D grid_;
  ParameterPoint param_;
  SpMat Bx_, By_, C_;
  Vec bux_, buy_, cu_, bvx_, bvy_, cv_;
  std::vector<Index> stencil_ptr_;
  std::vector<StencilEntry> stencil_;
};

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 50;
  int max_halvings = 20;
};

struct NewtonResult {
  Vec state;
  // Residual of every iterate, starting with the initial guess and ending with the
  // accepted final iterate.
  std::vector<Vec> residuals;
  std::vector<double> residual_norms;
  int iterations = 0;
};

// Damped Newton with a sparse LU; throws ConvergenceError or SingularityError.
NewtonResult solve_monolithic(const BurgersFom& fom, const Vec& init, const NewtonOptions& opts = {});

}  // namespace ddrom
