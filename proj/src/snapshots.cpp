#include "ddrom/snapshots.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

namespace ddrom {

std::vector<ParameterPoint> sample_grid(const ParameterBox& box, int na, int nl) {
  if (na < 2 || nl < 2) throw InvalidArgument("sample_grid needs at least 2 points per direction");
  std::vector<ParameterPoint> pts;
  pts.reserve(std::size_t(na) * nl);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nl; ++j)
      pts.push_back({box.a_lo + (box.a_hi - box.a_lo) * i / (na - 1),
                     box.lambda_lo + (box.lambda_hi - box.lambda_lo) * j / (nl - 1)});
  return pts;
}

void SnapshotSet::check_port_consistency(const Partition& part) const {
  for (std::size_t j = 0; j < part.ports.size(); ++j) {
    const Port& p = part.ports[j];
    for (std::size_t m = 0; m < p.members.size(); ++m) {
      const Mat& Xg = interface[p.members[m]];
      for (std::size_t t = 0; t < p.cols.size(); ++t)
        if (!(Xg.row(p.positions[m][t]).array() == ports[j].row(Index(t)).array()).all())
          throw Error("port snapshot " + std::to_string(j) + " disagrees with subdomain " +
                      std::to_string(p.members[m]));
    }
  }
}

SnapshotSet generate_snapshots(const Grid2D& grid, const std::vector<ParameterPoint>& params,
                               const Partition& part, const SnapshotOptions& opts) {
  const int ns = part.count();
  std::vector<Vec> states;
  std::vector<std::vector<Vec>> res(ns);
  SnapshotSet out;
  Vec warm = Vec::Zero(grid.dofs());
  bool have_warm = false;
  for (const ParameterPoint& p : params) {
    const BurgersFom fom(grid, p);
    NewtonResult sol;
    try {
      try {
        sol = solve_monolithic(fom, have_warm && opts.warm_start ? warm : Vec::Zero(grid.dofs()), opts.newton);
      } catch (const Error&) {
        if (!(have_warm && opts.warm_start)) throw;
        sol = solve_monolithic(fom, Vec::Zero(grid.dofs()), opts.newton);
      }
    } catch (const Error& e) {
      std::cerr << "[snapshots] warning: skipping (a=" << p.a << ", lambda=" << p.lambda << "): " << e.what() << '\n';
      out.failures.push_back(p);
      continue;
    }
    out.params.push_back(p);
    // Every iterate except the converged one.
    for (std::size_t k = 0; k + 1 < sol.residuals.size(); ++k)
      for (int i = 0; i < ns; ++i) {
        const auto& rows = part[i].res_rows;
        Vec ri(rows.size());
        for (std::size_t q = 0; q < rows.size(); ++q) ri[q] = sol.residuals[k][rows[q]];
        res[i].push_back(std::move(ri));
      }
    warm = sol.state;
    have_warm = true;
    states.push_back(std::move(sol.state));
  }

  const Index n = Index(states.size());
  out.interior.resize(ns);
  out.interface.resize(ns);
  out.residuals.resize(ns);
  for (int i = 0; i < ns; ++i) {
    out.interior[i].resize(Index(part[i].interior_cols.size()), n);
    out.interface[i].resize(Index(part[i].interface_cols.size()), n);
    for (Index c = 0; c < n; ++c) {
      out.interior[i].col(c) = part.interior(i, states[c]);
      out.interface[i].col(c) = part.interface(i, states[c]);
    }
    out.residuals[i].resize(Index(part[i].res_rows.size()), Index(res[i].size()));
    for (std::size_t c = 0; c < res[i].size(); ++c) out.residuals[i].col(Index(c)) = res[i][c];
  }
  for (const Port& p : part.ports) {
    Mat X(Index(p.cols.size()), n);
    for (Index c = 0; c < n; ++c)
      for (std::size_t t = 0; t < p.cols.size(); ++t) X(Index(t), c) = states[c][p.cols[t]];
    out.ports.push_back(std::move(X));
  }
  out.check_port_consistency(part);
  return out;
}

namespace {

Mat params_matrix(const std::vector<ParameterPoint>& ps) {
  Mat P(2, Index(ps.size()));
  for (std::size_t c = 0; c < ps.size(); ++c) P.col(Index(c)) << ps[c].a, ps[c].lambda;
  return P;
}

std::vector<ParameterPoint> params_from(const Mat& P) {
  if (P.rows() != 2 && P.size() != 0) throw FormatError("parameter record must have 2 rows");
  std::vector<ParameterPoint> ps;
  for (Index c = 0; c < P.cols(); ++c) ps.push_back({P(0, c), P(1, c)});
  return ps;
}

}  // namespace

void save_snapshots(const SnapshotSet& s, const std::filesystem::path& dir) {
  MatrixArchive snap, res;
  snap.add("params", params_matrix(s.params));
  snap.add("failures", params_matrix(s.failures));
  for (std::size_t i = 0; i < s.interior.size(); ++i) {
    snap.add("interior/" + std::to_string(i), s.interior[i]);
    snap.add("interface/" + std::to_string(i), s.interface[i]);
    res.add("residual/" + std::to_string(i), s.residuals[i]);
  }
  for (std::size_t j = 0; j < s.ports.size(); ++j) snap.add("port/" + std::to_string(j), s.ports[j]);
  snap.save(dir / "snapshots.bin");
  res.save(dir / "residuals.bin");
}

SnapshotSet load_snapshots(const std::filesystem::path& dir) {
  const MatrixArchive snap = MatrixArchive::load(dir / "snapshots.bin");
  SnapshotSet s;
  s.params = params_from(snap.get("params"));
  if (snap.contains("failures")) s.failures = params_from(snap.get("failures"));
  for (int i = 0; snap.contains("interior/" + std::to_string(i)); ++i) {
    s.interior.push_back(snap.get("interior/" + std::to_string(i)));
    s.interface.push_back(snap.get("interface/" + std::to_string(i)));
  }
  for (int j = 0; snap.contains("port/" + std::to_string(j)); ++j) s.ports.push_back(snap.get("port/" + std::to_string(j)));
  if (std::filesystem::exists(dir / "residuals.bin")) {
    const MatrixArchive res = MatrixArchive::load(dir / "residuals.bin");
    for (std::size_t i = 0; i < s.interior.size(); ++i) s.residuals.push_back(res.get("residual/" + std::to_string(i)));
  }
  for (const auto* group : {&s.interior, &s.interface, &s.ports})
    for (const Mat& X : *group)
      if (X.cols() != s.count()) throw FormatError("snapshot column count mismatch");
  return s;
}

Normalization Normalization::fit(const Mat& X) {
  if (X.cols() == 0) throw InvalidArgument("Normalization::fit on empty data");
  Normalization n;
  const Vec lo = X.rowwise().minCoeff(), hi = X.rowwise().maxCoeff();
  n.shift = 0.5 * (hi + lo);
  n.scale = 0.5 * (hi - lo);
  for (Index k = 0; k < n.scale.size(); ++k)
    if (!(n.scale[k] > 0.0)) {
      n.scale[k] = 1.0;
      n.shift[k] = X(k, 0);
    }
  return n;
}

Mat Normalization::normalize(const Mat& X) const {
  return (X.colwise() - shift).array().colwise() / scale.array();
}

Mat Normalization::denormalize(const Mat& Xn) const {
  return (Xn.array().colwise() * scale.array()).matrix().colwise() + shift;
}

DataSplit split_columns(Index n, double validation_fraction, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("split_columns needs at least two columns");
  IndexList idx(n);
  std::iota(idx.begin(), idx.end(), Index(0));
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const Index nv = std::clamp<Index>(Index(std::llround(validation_fraction * double(n))), 1, n - 1);
  DataSplit s;
  s.validation.assign(idx.begin(), idx.begin() + nv);
  s.train.assign(idx.begin() + nv, idx.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

Mat select_columns(const Mat& X, const IndexList& cols) {
  Mat out(X.rows(), Index(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(Index(c)) = X.col(cols[c]);
  return out;
}

}  // namespace ddrom
