#include "ddrom/partition.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace ddrom {

namespace {

Vec gather(const Vec& x, const IndexList& idx) {
  Vec out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = x[idx[k]];
  return out;
}

Index position_in(const IndexList& sorted, Index c) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), c);
  if (it == sorted.end() || *it != c) throw Error("partition: column " + std::to_string(c) + " missing");
  return Index(it - sorted.begin());
}

}  // namespace

Vec Partition::interior(int i, const Vec& x) const {
  require_size(x.size(), global_size, "Partition::interior");
  return gather(x, subdomains[i].interior_cols);
}

Vec Partition::interface(int i, const Vec& x) const {
  require_size(x.size(), global_size, "Partition::interface");
  return gather(x, subdomains[i].interface_cols);
}

Index Partition::interface_offset(int i) const {
  Index off = 0;
  for (int k = 0; k < i; ++k) off += Index(subdomains[k].interface_cols.size());
  return off;
}

Index Partition::total_interface() const { return interface_offset(count()); }

Index Partition::constraint_rows() const {
  Index n = 0;
  for (const auto& p : ports) n += Index(p.members.size() - 1) * Index(p.cols.size());
  return n;
}

const IndexList& Partition::port_positions(int j, int i) const {
  const Port& p = ports[j];
  const auto it = std::find(p.members.begin(), p.members.end(), i);
  if (it == p.members.end()) throw Error("subdomain " + std::to_string(i) + " is not on port " + std::to_string(j));
  return p.positions[it - p.members.begin()];
}

void Partition::validate() const {
  std::vector<int> row_owner(global_size, -1), interior_owner(global_size, -1), iface_count(global_size, 0);
  Index nrows = 0;
  for (int i = 0; i < count(); ++i) {
    const Subdomain& s = subdomains[i];
    if (s.res_rows.empty()) throw Error("subdomain " + std::to_string(i) + " has no residual rows");
    nrows += Index(s.res_rows.size());
    for (Index r : s.res_rows) {
      if (row_owner[r] != -1) throw Error("residual row assigned twice");
      row_owner[r] = i;
    }
    for (Index c : s.interior_cols) {
      if (interior_owner[c] != -1) throw Error("interior column assigned twice");
      interior_owner[c] = i;
    }
    for (Index c : s.interface_cols) {
      if (std::binary_search(s.interior_cols.begin(), s.interior_cols.end(), c))
        throw Error("column both interior and interface for one subdomain");
      ++iface_count[c];
    }
    Index port_total = 0;
    for (int j : s.ports) port_total += Index(ports[j].cols.size());
    if (port_total != Index(s.interface_cols.size())) throw Error("ports do not tile the interface");
  }
  if (nrows != global_size) throw Error("residual rows do not cover the state");
  for (Index c = 0; c < global_size; ++c) {
    const bool ok = interior_owner[c] != -1 ? iface_count[c] == 0 : iface_count[c] >= 2;
    if (!ok)
      throw Error("column " + std::to_string(c) + " is neither interior nor shared interface");
  }
  std::vector<int> port_of(global_size, -1);
  for (std::size_t j = 0; j < ports.size(); ++j)
    for (Index c : ports[j].cols) {
      if (port_of[c] != -1) throw Error("ports overlap");
      port_of[c] = int(j);
    }
}

Partition build_partition(const SpMat& pattern, std::span<const Index> node_of_col,
                          std::span<const int> sub_of_node, int n_sub) {
  const Index N = pattern.rows();
  if (pattern.cols() != N) throw DimensionError("build_partition: pattern must be square");
  require_size(Index(node_of_col.size()), N, "build_partition node_of_col");
  const Index n_nodes = Index(sub_of_node.size());

  // Sharing set of every node: subdomains whose residual rows reference any of its columns.
  std::vector<std::vector<int>> share(n_nodes);
  for (Index r = 0; r < N; ++r) {
    const int s = sub_of_node[node_of_col[r]];
    for (SpMat::InnerIterator it(pattern, r); it; ++it) {
      auto& set = share[node_of_col[it.col()]];
      const auto pos = std::lower_bound(set.begin(), set.end(), s);
      if (pos == set.end() || *pos != s) set.insert(pos, s);
    }
  }

  Partition part;
  part.global_size = N;
  part.subdomains.resize(n_sub);
  std::map<std::vector<int>, int> port_id;
  std::vector<int> port_of_node(n_nodes, -1);
  for (Index nd = 0; nd < n_nodes; ++nd) {
    const auto& set = share[nd];
    const int own = sub_of_node[nd];
    if (!std::binary_search(set.begin(), set.end(), own))
      throw Error("build_partition: node " + std::to_string(nd) + " not referenced by its own subdomain");
    if (set.size() >= 2) port_of_node[nd] = port_id.emplace(set, 0).first->second;
  }
  int next = 0;
  for (auto& [set, id] : port_id) {
    id = next++;
    part.ports.push_back(Port{{}, set, {}});
  }
  for (Index nd = 0; nd < n_nodes; ++nd)
    if (port_of_node[nd] >= 0) port_of_node[nd] = port_id.at(share[nd]);

  for (Index c = 0; c < N; ++c) {
    const Index nd = node_of_col[c];
    const int own = sub_of_node[nd];
    part.subdomains[own].res_rows.push_back(c);
    if (port_of_node[nd] < 0) {
      part.subdomains[own].interior_cols.push_back(c);
    } else {
      Port& p = part.ports[port_of_node[nd]];
      p.cols.push_back(c);
      for (int s : p.members) part.subdomains[s].interface_cols.push_back(c);
    }
  }
  for (std::size_t j = 0; j < part.ports.size(); ++j) {
    Port& p = part.ports[j];
    for (int s : p.members) {
      part.subdomains[s].ports.push_back(int(j));
      IndexList pos;
      for (Index c : p.cols) pos.push_back(position_in(part.subdomains[s].interface_cols, c));
      p.positions.push_back(std::move(pos));
    }
  }
  for (int i = 0; i < n_sub; ++i)
    if (part.subdomains[i].res_rows.empty())
      throw InvalidArgument("build_partition: subdomain " + std::to_string(i) + " is empty");
  part.validate();
  return part;
}

Partition build_partition(const Grid2D& grid, int nsx, int nsy) {
  grid.validate();
  if (nsx < 1 || nsy < 1) throw InvalidArgument("subdomain counts must be positive");
  if (grid.nx / nsx < 1 || grid.ny / nsy < 1)
    throw InvalidArgument("build_partition: " + std::to_string(nsx) + "x" + std::to_string(nsy) +
                          " subdomains leave an empty subdomain on a " + std::to_string(grid.nx) + "x" +
                          std::to_string(grid.ny) + " grid");
  const int bx = grid.nx / nsx, by = grid.ny / nsy;
  const Index n = grid.nodes();
  std::vector<int> sub(n);
  for (int j = 1; j <= grid.ny; ++j)
    for (int i = 1; i <= grid.nx; ++i) {
      const int sx = std::min((i - 1) / bx, nsx - 1);
      const int sy = std::min((j - 1) / by, nsy - 1);
      sub[grid.node(i, j)] = sy * nsx + sx;
    }
  std::vector<Index> node_of_col(2 * n);
  for (Index k = 0; k < 2 * n; ++k) node_of_col[k] = k % n;
  const BurgersFom structure(grid, ParameterPoint{});
  return build_partition(structure.pattern(), node_of_col, sub, nsx * nsy);
}

std::vector<SpMat> fom_constraint_blocks(const Partition& part) {
  std::vector<Index> dims(part.ports.size());
  for (std::size_t j = 0; j < dims.size(); ++j) dims[j] = Index(part.ports[j].cols.size());
  const Index rows = part.constraint_rows();
  std::vector<std::vector<Eigen::Triplet<double, Index>>> trip(part.count());
  Index row = 0;
  for (const Port& p : part.ports) {
    const Index np = Index(p.cols.size());
    for (std::size_t k = 0; k + 1 < p.members.size(); ++k) {
      for (Index t = 0; t < np; ++t) {
        trip[p.members[k]].emplace_back(row + t, p.positions[k][t], 1.0);
        trip[p.members[k + 1]].emplace_back(row + t, p.positions[k + 1][t], -1.0);
      }
      row += np;
    }
  }
  std::vector<SpMat> blocks(part.count());
  for (int i = 0; i < part.count(); ++i) {
    blocks[i].resize(rows, Index(part[i].interface_cols.size()));
    blocks[i].setFromTriplets(trip[i].begin(), trip[i].end());
  }
  return blocks;
}

Index latent_port_offset(const Partition& part, int i, int j, std::span<const Index> port_dims) {
  Index off = 0;
  for (int q : part[i].ports) {
    if (q == j) return off;
    off += port_dims[q];
  }
  throw Error("subdomain " + std::to_string(i) + " is not on port " + std::to_string(j));
}

Index latent_interface_dim(const Partition& part, int i, std::span<const Index> port_dims) {
  Index n = 0;
  for (int q : part[i].ports) n += port_dims[q];
  return n;
}

Index rom_constraint_rows(const Partition& part, std::span<const Index> port_dims) {
  Index n = 0;
  for (std::size_t j = 0; j < part.ports.size(); ++j) n += Index(part.ports[j].members.size() - 1) * port_dims[j];
  return n;
}

std::vector<SpMat> rom_constraint_blocks(const Partition& part, std::span<const Index> port_dims) {
  require_size(Index(port_dims.size()), Index(part.ports.size()), "rom_constraint_blocks port dims");
  for (std::size_t j = 0; j < port_dims.size(); ++j)
    if (port_dims[j] < 1 || port_dims[j] > Index(part.ports[j].cols.size()))
      throw InvalidArgument("latent port dim out of range for port " + std::to_string(j));
  const Index rows = rom_constraint_rows(part, port_dims);
  std::vector<std::vector<Eigen::Triplet<double, Index>>> trip(part.count());
  Index row = 0;
  for (std::size_t j = 0; j < part.ports.size(); ++j) {
    const Port& p = part.ports[j];
    const Index np = port_dims[j];
    for (std::size_t k = 0; k + 1 < p.members.size(); ++k) {
      const Index a = latent_port_offset(part, p.members[k], int(j), port_dims);
      const Index b = latent_port_offset(part, p.members[k + 1], int(j), port_dims);
      for (Index t = 0; t < np; ++t) {
        trip[p.members[k]].emplace_back(row + t, a + t, 1.0);
        trip[p.members[k + 1]].emplace_back(row + t, b + t, -1.0);
      }
      row += np;
    }
  }
  std::vector<SpMat> blocks(part.count());
  for (int i = 0; i < part.count(); ++i) {
    blocks[i].resize(rows, latent_interface_dim(part, i, port_dims));
    blocks[i].setFromTriplets(trip[i].begin(), trip[i].end());
  }
  return blocks;
}

SpMat hstack(const std::vector<SpMat>& blocks) {
  if (blocks.empty()) return SpMat();
  Index cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  std::vector<Eigen::Triplet<double, Index>> trip;
  Index off = 0;
  for (const auto& b : blocks) {
    for (Index r = 0; r < b.outerSize(); ++r)
      for (SpMat::InnerIterator it(b, r); it; ++it) trip.emplace_back(it.row(), off + it.col(), it.value());
    off += b.cols();
  }
  SpMat A(blocks.front().rows(), cols);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SubdomainResidual::SubdomainResidual(const BurgersFom& fom, const Partition& part, int i)
    : fom_(fom), sub_(part[i]), slot_(part.global_size, 0), scratch_(Vec::Zero(part.global_size)) {
  for (std::size_t k = 0; k < sub_.interior_cols.size(); ++k) slot_[sub_.interior_cols[k]] = Index(k);
  for (std::size_t k = 0; k < sub_.interface_cols.size(); ++k) slot_[sub_.interface_cols[k]] = -Index(k) - 1;
}

void SubdomainResidual::scatter(const Vec& xo, const Vec& xg) const {
  require_size(xo.size(), Index(sub_.interior_cols.size()), "subdomain interior state");
  require_size(xg.size(), Index(sub_.interface_cols.size()), "subdomain interface state");
  for (std::size_t k = 0; k < sub_.interior_cols.size(); ++k) scratch_[sub_.interior_cols[k]] = xo[k];
  for (std::size_t k = 0; k < sub_.interface_cols.size(); ++k) scratch_[sub_.interface_cols[k]] = xg[k];
}

Vec SubdomainResidual::residual(const Vec& xo, const Vec& xg) const {
  scatter(xo, xg);
  Vec r(sub_.res_rows.size());
  for (std::size_t k = 0; k < sub_.res_rows.size(); ++k) r[k] = fom_.residual_row(sub_.res_rows[k], scratch_.data());
  return r;
}

std::pair<SpMat, SpMat> SubdomainResidual::jacobians(const Vec& xo, const Vec& xg) const {
  scatter(xo, xg);
  std::vector<Eigen::Triplet<double, Index>> to, tg;
  std::vector<std::pair<Index, double>> row;
  for (std::size_t k = 0; k < sub_.res_rows.size(); ++k) {
    fom_.jacobian_row(sub_.res_rows[k], scratch_.data(), row);
    for (const auto& [c, v] : row) {
      const Index s = slot_[c];
      if (s >= 0) to.emplace_back(Index(k), s, v);
      else tg.emplace_back(Index(k), -s - 1, v);
    }
  }
  const Index nr = Index(sub_.res_rows.size());
  SpMat Jo(nr, Index(sub_.interior_cols.size())), Jg(nr, Index(sub_.interface_cols.size()));
  Jo.setFromTriplets(to.begin(), to.end());
  Jg.setFromTriplets(tg.begin(), tg.end());
  return {std::move(Jo), std::move(Jg)};
}

}  // namespace ddrom
