#pragma once

#include "ddrom/common.hpp"
#include "ddrom/partition.hpp"

namespace ddrom {

struct EnergyTolerance {
  double value;
};

struct FixedDimension {
  Index n;
};

struct PodBasis {
  Mat phi;             // N x n, orthonormal columns
  Vec spectrum;        // all singular values above 1e-12 * sigma_1, descending
  double energy_tol = 0.0;  // 0 when the dimension was fixed
  double discarded_energy = 0.0;  // sum_{j > n} sigma_j^2

  Index dim() const { return phi.cols(); }
};

PodBasis pod(const Mat& X, EnergyTolerance tol);
PodBasis pod(const Mat& X, FixedDimension n);

// Smallest n with sum_{j<=n} s_j^2 >= (1 - tol) sum_j s_j^2.
Index energy_dimension(const Vec& sigma, double tol);

// Phi_i^Gamma = sum_{j in Q(i)} (P_i^j)^T Phi_j^p \hat P_i^j
Mat port_interface_basis(const Partition& part, const std::vector<Mat>& port_bases, int i);

// g(x) = Phi x, h(x) = Phi^T x with constant Jacobian Phi.
class LinearMap {
 public:
  explicit LinearMap(Mat phi) : phi_(std::move(phi)) {}
  Index full_dim() const { return phi_.rows(); }
  Index latent_dim() const { return phi_.cols(); }
  Vec decode(const Vec& xh) const;
  Vec encode(const Vec& x) const;
  const Mat& jacobian() const { return phi_; }

 private:
  Mat phi_;
};

}  // namespace ddrom
