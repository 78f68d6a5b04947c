#pragma once

#include "ddrom/common.hpp"
#include "ddrom/fom.hpp"

#include <span>

namespace ddrom {

struct Subdomain {
  IndexList res_rows;        // rows of P_i^r
  IndexList interior_cols;   // rows of P_i^Omega
  IndexList interface_cols;  // rows of P_i^Gamma
  std::vector<int> ports;    // Q(i), ascending
};

struct Port {
  IndexList cols;                       // global columns, ascending
  std::vector<int> members;             // P(j), ascending
  std::vector<IndexList> positions;     // per member: offsets of `cols` inside its interface_cols
};

class Partition {
 public:
  Index global_size = 0;
  std::vector<Subdomain> subdomains;
  std::vector<Port> ports;

  int count() const { return int(subdomains.size()); }
  const Subdomain& operator[](int i) const { return subdomains[i]; }

  Vec interior(int i, const Vec& x) const;
  Vec interface(int i, const Vec& x) const;
  // Offset of subdomain i's interface block in the stacked vector [x_1^G; ...; x_n^G].
  Index interface_offset(int i) const;
  Index total_interface() const;
  // N_A = sum_j (|P(j)| - 1) N_j^p
  Index constraint_rows() const;
  // Position of port j inside member i (throws if i is not a member).
  const IndexList& port_positions(int j, int i) const;

  // Checks the partition laws; throws Error on violation.
  void validate() const;
};

// Generic algebraic partition. `node_of_col` groups columns into nodes that must share
// a subdomain and port; `sub_of_node` gives the owning subdomain of each node.
Partition build_partition(const SpMat& pattern, std::span<const Index> node_of_col,
                          std::span<const int> sub_of_node, int n_sub);

// Uniform nsx x nsy split of the Burgers grid; subdomains numbered x-fastest from the
// bottom-left, the last row/column of subdomains absorbs the remainder.
Partition build_partition(const Grid2D& grid, int nsx, int nsy);

// Signed incidence blocks A_i (N_A x N_i^Gamma) with consecutive chaining per port.
std::vector<SpMat> fom_constraint_blocks(const Partition& part);

// Latent port layout: subdomain i's latent interface is the concatenation of its ports'
// latent coordinates in ascending port order.
Index latent_interface_dim(const Partition& part, int i, std::span<const Index> port_dims);
Index latent_port_offset(const Partition& part, int i, int j, std::span<const Index> port_dims);
Index rom_constraint_rows(const Partition& part, std::span<const Index> port_dims);

// Blocks \hat A_i (n_A x n_i^Gamma) on latent port coordinates.
std::vector<SpMat> rom_constraint_blocks(const Partition& part, std::span<const Index> port_dims);

// [A_1 ... A_n]
SpMat hstack(const std::vector<SpMat>& blocks);

// r_i(x_i^Omega, x_i^Gamma) = P_i^r r(...) evaluated on the scattered state.
class SubdomainResidual {
 public:
  SubdomainResidual(const BurgersFom& fom, const Partition& part, int i);

  Vec residual(const Vec& xo, const Vec& xg) const;
  // (dr_i/dx^Omega, dr_i/dx^Gamma)
  std::pair<SpMat, SpMat> jacobians(const Vec& xo, const Vec& xg) const;

 private:
  void scatter(const Vec& xo, const Vec& xg) const;

  const BurgersFom& fom_;
  const Subdomain& sub_;
  std::vector<Index> slot_;  // global column -> k (interior) or -(k+1) (interface), else unused
  mutable Vec scratch_;
};

}  // namespace ddrom
