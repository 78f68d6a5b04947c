#pragma once

#include "ddrom/common.hpp"

#include <functional>

namespace ddrom {

// Quantities of one subdomain block at a latent point x_i = [interior; interface].
struct BlockEvaluation {
  Vec weighted_residual;    // B_i r_i
  Mat weighted_jacobian;    // B_i R_i (rows x n_i)
  Vec constraint;           // \tilde A_i(x_i), length n_A
  Mat constraint_jacobian;  // n_A x n_i
};

struct SqpBlock {
  Index n_interior = 0;
  Index n_interface = 0;
  std::function<void(const Vec& x, BlockEvaluation& out)> evaluate;

  Index dim() const { return n_interior + n_interface; }
};

struct SqpProblem {
  std::vector<SqpBlock> blocks;
  Index n_constraints = 0;
};

struct SqpConfig {
  double tol = 1e-4;
  int max_iter = 15;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_halvings = 25;
  double kkt_residual_tol = 1e-10;  // relative back-substitution residual
  bool keep_iterates = false;
  // Called with the iteration index and the accepted iterate (including the initial one).
  std::function<void(int, const std::vector<Vec>&, const Vec&)> on_iterate;
};

struct SqpTiming {
  double block_eval = 0.0;  // sum over evaluation rounds of the slowest block
  double kkt = 0.0;         // assembly + factorization + back-substitution
  double total_wall = 0.0;  // measured, blocks evaluated sequentially
  double modeled() const { return block_eval + kkt; }
};

struct SqpResult {
  std::vector<Vec> x;
  Vec lambda;
  bool converged = false;
  bool line_search_failed = false;
  bool regularized = false;
  int iterations = 0;
  std::vector<double> merit;      // ||F|| per accepted iterate, starting at the initial one
  std::vector<double> objective;  // 1/2 sum ||B_i r_i||^2
  std::vector<double> step_size;
  std::vector<double> kkt_residual;  // relative back-substitution residual per solve
  std::vector<std::vector<Vec>> iterates;  // only with keep_iterates
  std::vector<Vec> lambdas;
  std::vector<std::vector<Vec>> steps;
  SqpTiming timing;
};

// Lagrange-Gauss-Newton SQP with Armijo backtracking on ||F||.
// F = (rho_1, ..., rho_n, sum_i A_i(x_i)), rho_i = (B_i R_i)^T B_i r_i + E_i^T lambda.
SqpResult solve_sqp(const SqpProblem& prob, std::vector<Vec> x0, Vec lambda0, const SqpConfig& cfg = {});

// Stacked optimality residual F at a point.
Vec kkt_residual(const SqpProblem& prob, const std::vector<Vec>& x, const Vec& lambda);

// Multipliers minimizing ||sum-stacked rho_i|| for fixed x (dense least squares).
Vec least_squares_multipliers(const SqpProblem& prob, const std::vector<Vec>& x);

struct SqpDiagnostics {
  std::vector<double> merit;
  std::vector<double> contraction;  // merit[k+1] / merit[k]
  std::vector<double> eta;          // ||(Hess L - H_GN) s_k|| / ||F_k|| by central differences
};

// Needs a result produced with keep_iterates; evaluates the problem 2 extra times per step.
SqpDiagnostics convergence_diagnostics(const SqpProblem& prob, const SqpResult& res);

}  // namespace ddrom
