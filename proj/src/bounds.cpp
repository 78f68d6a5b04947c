#include "ddrom/bounds.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ddrom {

double inverse_lipschitz_estimate(const VecFn& r, const std::vector<VecPair>& pairs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [y, z] : pairs) {
    const double d = (y - z).norm();
    if (d == 0.0) continue;
    best = std::min(best, (r(y) - r(z)).norm() / d);
  }
  if (!std::isfinite(best)) throw InvalidArgument("inverse_lipschitz_estimate: no usable pair");
  return best;
}

double lipschitz_estimate(const VecFn& br, const std::vector<VecPair>& pairs) {
  double best = -1.0;
  for (const auto& [y, z] : pairs) {
    const double d = (y - z).norm();
    if (d == 0.0) continue;
    best = std::max(best, (br(y) - br(z)).norm() / d);
  }
  if (best < 0.0) throw InvalidArgument("lipschitz_estimate: no usable pair");
  return best;
}

double weighting_ratio_estimate(const VecFn& br, const VecFn& r, const std::vector<Vec>& points) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& y : points) {
    const double d = r(y).norm();
    if (d == 0.0) continue;
    best = std::min(best, br(y).norm() / d);
  }
  if (!std::isfinite(best)) throw InvalidArgument("weighting_ratio_estimate: no usable point");
  return best;
}

namespace {

// DD state y = [y_1^Omega; y_1^Gamma; ...; y_n^Omega; y_n^Gamma].
struct DdLayout {
  std::vector<Index> off_o, off_g;
  Index size = 0;

  explicit DdLayout(const Partition& part) {
    for (const auto& s : part.subdomains) {
      off_o.push_back(size);
      size += Index(s.interior_cols.size());
      off_g.push_back(size);
      size += Index(s.interface_cols.size());
    }
  }
};

}  // namespace

BoundDiagnostics verify_bounds(const RomInstance& inst, const ParameterPoint& p, const RomSolution& sol,
                               const Vec& fom_state, Index n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("verify_bounds needs at least one sample");
  const Partition& part = inst.part;
  require_size(fom_state.size(), part.global_size, "verify_bounds FOM state");
  const BurgersFom fom(inst.grid, p);
  std::vector<SubdomainResidual> res;
  for (int i = 0; i < part.count(); ++i) res.emplace_back(fom, part, i);
  const DdLayout L(part);
  const int n = part.count();

  auto block_o = [&](const Vec& y, int i) { return y.segment(L.off_o[std::size_t(i)], Index(part[i].interior_cols.size())); };
  auto block_g = [&](const Vec& y, int i) { return y.segment(L.off_g[std::size_t(i)], Index(part[i].interface_cols.size())); };
  const VecFn r = [&](const Vec& y) {
    Vec out;
    std::vector<Vec> parts;
    Index total = 0;
    for (int i = 0; i < n; ++i) {
      parts.push_back(res[std::size_t(i)].residual(block_o(y, i), block_g(y, i)));
      total += parts.back().size();
    }
    out.resize(total);
    Index off = 0;
    for (const Vec& v : parts) {
      out.segment(off, v.size()) = v;
      off += v.size();
    }
    return out;
  };
  const VecFn br = [&](const Vec& y) {
    std::vector<Vec> parts;
    Index total = 0;
    for (int i = 0; i < n; ++i) {
      Vec ri = res[std::size_t(i)].residual(block_o(y, i), block_g(y, i));
      parts.push_back(inst.hr.empty() ? ri : inst.hr[std::size_t(i)].apply(ri));
      total += parts.back().size();
    }
    Vec out(total);
    Index off = 0;
    for (const Vec& v : parts) {
      out.segment(off, v.size()) = v;
      off += v.size();
    }
    return out;
  };
  auto decode = [&](const std::vector<Vec>& latent) {
    Vec y(L.size);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = std::size_t(i);
      const Index no = inst.interior[k]->latent_dim();
      y.segment(L.off_o[k], inst.interior[k]->full_dim()) = inst.interior[k]->decode(latent[k].head(no));
      y.segment(L.off_g[k], inst.interface[k]->full_dim()) =
          inst.interface[k]->decode(latent[k].tail(inst.interface[k]->latent_dim()));
    }
    return y;
  };

  Vec xstar(L.size);
  for (int i = 0; i < n; ++i) {
    xstar.segment(L.off_o[std::size_t(i)], Index(part[i].interior_cols.size())) = part.interior(i, fom_state);
    xstar.segment(L.off_g[std::size_t(i)], Index(part[i].interface_cols.size())) = part.interface(i, fom_state);
  }
  const Vec gstar = decode(sol.latent);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  auto random_dir = [&](Index m) {
    Vec v(m);
    for (Index k = 0; k < m; ++k) v[k] = N(rng);
    return Vec(v / v.norm());
  };
  const double scale = std::max((xstar - gstar).norm(), 1e-8 * (1.0 + xstar.norm()));

  std::vector<VecPair> pairs{{xstar, gstar}};
  for (Index s = 1; s < n_samples; ++s) {
    switch (s % 3) {
      case 0: pairs.emplace_back(xstar + scale * random_dir(L.size), gstar); break;
      case 1: pairs.emplace_back(xstar, gstar + scale * random_dir(L.size)); break;
      default: {
        const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        pairs.emplace_back(xstar, xstar + t * (gstar - xstar) + 0.1 * scale * random_dir(L.size));
      }
    }
  }

  // Feasible latent points: x^* moved inside the null space of the stacked constraint Jacobian.
  RomProblem rp(inst, p);
  std::vector<BlockEvaluation> ev(static_cast<std::size_t>(n));
  Index nD = 0;
  for (int i = 0; i < n; ++i) {
    rp.problem().blocks[std::size_t(i)].evaluate(sol.latent[std::size_t(i)], ev[std::size_t(i)]);
    nD += inst.block_dim(i);
  }
  Mat E(rp.problem().n_constraints, nD);
  Index off = 0;
  for (int i = 0; i < n; ++i) {
    E.middleCols(off, inst.block_dim(i)) = ev[std::size_t(i)].constraint_jacobian;
    off += inst.block_dim(i);
  }
  const Mat Z = E.rows() > 0 ? Mat(Eigen::FullPivLU<Mat>(E).kernel()) : Mat::Identity(nD, nD);
  double latent_norm = 0.0;
  for (const Vec& v : sol.latent) latent_norm += v.squaredNorm();
  latent_norm = std::sqrt(latent_norm);
  std::vector<Vec> points{gstar};
  std::vector<std::vector<Vec>> feasible{sol.latent};
  for (Index s = 1; s < n_samples; ++s) {
    const double step = 0.05 * (1.0 + latent_norm) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const Vec dz = step * (Z * random_dir(Z.cols()));
    std::vector<Vec> w = sol.latent;
    Index o = 0;
    for (int i = 0; i < n; ++i) {
      w[std::size_t(i)] += dz.segment(o, inst.block_dim(i));
      o += inst.block_dim(i);
    }
    points.push_back(decode(w));
    feasible.push_back(std::move(w));
  }

  BoundDiagnostics d;
  d.samples = n_samples;
  d.seed = seed;
  d.kappa_l = inverse_lipschitz_estimate(r, pairs);
  d.kappa_u = lipschitz_estimate(br, pairs);
  d.P = weighting_ratio_estimate(br, r, points);
  d.lhs = (xstar - gstar).norm();
  d.weighted_residual = br(gstar).norm();
  d.rhs = d.weighted_residual / (d.P * d.kappa_l);
  d.kappa_l_random = pairs.size() > 1 ? inverse_lipschitz_estimate(r, {pairs.begin() + 1, pairs.end()}) : d.kappa_l;
  d.rhs_random = d.weighted_residual / (d.P * d.kappa_l_random);
  d.best_feasible = std::numeric_limits<double>::infinity();
  for (const Vec& y : points) d.best_feasible = std::min(d.best_feasible, (xstar - y).norm());
  d.a_priori_rhs = d.kappa_u / (d.P * d.kappa_l) * d.best_feasible;
  return d;
}

}  // namespace ddrom
