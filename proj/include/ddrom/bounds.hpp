#pragma once

#include "ddrom/common.hpp"
#include "ddrom/rom.hpp"

#include <cstdint>
#include <functional>

namespace ddrom {

using VecFn = std::function<Vec(const Vec&)>;
using VecPair = std::pair<Vec, Vec>;

// min ||r(y) - r(z)|| / ||y - z|| over the pairs (pairs with y == z are skipped).
double inverse_lipschitz_estimate(const VecFn& r, const std::vector<VecPair>& pairs);
// max ||Br(y) - Br(z)|| / ||y - z||.
double lipschitz_estimate(const VecFn& br, const std::vector<VecPair>& pairs);
// min ||Br(y)|| / ||r(y)|| over the points (points with r(y) == 0 are skipped).
double weighting_ratio_estimate(const VecFn& br, const VecFn& r, const std::vector<Vec>& points);

// Sampled constants and both error bounds at one ROM solution. All constants are estimates
// from finitely many samples, not certified values.
struct BoundDiagnostics {
  double kappa_l = 0.0;
  double P = 0.0;
  double kappa_u = 0.0;
  double lhs = 0.0;             // ||x* - g(x^*)||
  double weighted_residual = 0.0;  // (sum_i ||B_i r_i(g(x^*))||^2)^(1/2)
  double rhs = 0.0;             // weighted_residual / (P kappa_l)
  double best_feasible = 0.0;   // min over sampled feasible w of ||x* - g(w)||
  double a_priori_rhs = 0.0;    // kappa_u / (P kappa_l) * best_feasible
  // The same estimate without the pair (x*, g(x^*)), which by itself makes rhs >= lhs.
  double kappa_l_random = 0.0;
  double rhs_random = 0.0;
  Index samples = 0;
  std::uint64_t seed = 0;

  bool a_posteriori_holds() const { return lhs <= rhs * (1.0 + 1e-12); }
  bool a_priori_holds() const { return lhs <= a_priori_rhs * (1.0 + 1e-12); }
  bool random_pairs_hold() const { return lhs <= rhs_random * (1.0 + 1e-12); }
};

// Pairs mix the decisive pair (x*, g(x^*)), random perturbations of both and points on the
// segment between them. Feasible points move x^* inside the null space of the constraint
// Jacobian. `fom_state` is the global FOM solution.
BoundDiagnostics verify_bounds(const RomInstance& inst, const ParameterPoint& p, const RomSolution& sol,
                               const Vec& fom_state, Index n_samples, std::uint64_t seed);

}  // namespace ddrom
