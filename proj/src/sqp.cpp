#include "ddrom/sqp.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

namespace ddrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Index total_dim(const SqpProblem& prob) {
  Index n = 0;
  for (const auto& b : prob.blocks) n += b.dim();
  return n;
}

void check_point(const SqpProblem& prob, const std::vector<Vec>& x) {
  if (x.size() != prob.blocks.size()) throw DimensionError("SQP: one latent vector per block expected");
  for (std::size_t i = 0; i < x.size(); ++i) {
    require_size(x[i].size(), prob.blocks[i].dim(), "SQP block state");
    if (!x[i].allFinite()) throw InvalidArgument("SQP: non-finite initial state in block " + std::to_string(i));
  }
}

// Blocks run one after another; the cost model charges the slowest.
double evaluate_all(const SqpProblem& prob, const std::vector<Vec>& x, std::vector<BlockEvaluation>& ev) {
  ev.resize(prob.blocks.size());
  double slowest = 0.0;
  for (std::size_t i = 0; i < prob.blocks.size(); ++i) {
    const SqpBlock& b = prob.blocks[i];
    const auto t0 = Clock::now();
    try {
      b.evaluate(x[i], ev[i]);
    } catch (const std::exception& e) {
      throw Error("block " + std::to_string(i) + ": " + e.what());
    }
    slowest = std::max(slowest, seconds_since(t0));
    const BlockEvaluation& e = ev[i];
    if (e.weighted_jacobian.rows() != e.weighted_residual.size() || e.weighted_jacobian.cols() != b.dim() ||
        e.constraint.size() != prob.n_constraints || e.constraint_jacobian.rows() != prob.n_constraints ||
        e.constraint_jacobian.cols() != b.dim())
      throw DimensionError("block " + std::to_string(i) + " returned inconsistent dimensions");
  }
  return slowest;
}

Vec stacked_F(const SqpProblem& prob, const std::vector<BlockEvaluation>& ev, const Vec& lambda) {
  Vec F(total_dim(prob) + prob.n_constraints);
  Index off = 0;
  Vec c = Vec::Zero(prob.n_constraints);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const Index n = prob.blocks[i].dim();
    F.segment(off, n) = ev[i].weighted_jacobian.transpose() * ev[i].weighted_residual +
                        ev[i].constraint_jacobian.transpose() * lambda;
    c += ev[i].constraint;
    off += n;
  }
  F.tail(prob.n_constraints) = c;
  return F;
}

double objective(const std::vector<BlockEvaluation>& ev) {
  double f = 0.0;
  for (const auto& e : ev) f += 0.5 * e.weighted_residual.squaredNorm();
  return f;
}

struct KktSolve {
  Vec step;
  double residual = 0.0;
  bool regularized = false;
};

KktSolve solve_kkt(const SqpProblem& prob, const std::vector<BlockEvaluation>& ev, const Vec& F, double tol) {
  const Index nD = total_dim(prob), nA = prob.n_constraints;
  Mat K = Mat::Zero(nD + nA, nD + nA);
  Index off = 0;
  double trace = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const Index n = prob.blocks[i].dim();
    auto H = K.block(off, off, n, n);
    H.noalias() = ev[i].weighted_jacobian.transpose() * ev[i].weighted_jacobian;
    trace += H.trace();
    K.block(nD, off, nA, n) = ev[i].constraint_jacobian;
    K.block(off, nD, n, nA) = ev[i].constraint_jacobian.transpose();
    off += n;
  }
  const Vec rhs = -F;
  const double rhs_norm = std::max(rhs.norm(), std::numeric_limits<double>::min());
  KktSolve out;
  Eigen::PartialPivLU<Mat> lu(K);
  out.step = lu.solve(rhs);
  out.residual = (K * out.step - rhs).norm() / rhs_norm;
  if (out.step.allFinite() && out.residual <= tol) return out;

  const double delta = 1e-12 * std::max(trace, 1.0);
  std::cerr << "[sqp] KKT solve inaccurate (rel. residual " << out.residual << "), regularizing H by " << delta << "\n";
  K.topLeftCorner(nD, nD).diagonal().array() += delta;
  lu.compute(K);
  out.step = lu.solve(rhs);
  out.residual = (K * out.step - rhs).norm() / rhs_norm;
  out.regularized = true;
  if (!out.step.allFinite() || out.residual > tol) {
    const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    throw SingularityError("KKT system singular or indefinite (smallest pivot " + std::to_string(pivot) +
                           ", relative residual " + std::to_string(out.residual) + ")");
  }
  return out;
}

std::vector<Vec> split(const SqpProblem& prob, const Vec& s) {
  std::vector<Vec> out;
  Index off = 0;
  for (const auto& b : prob.blocks) {
    out.push_back(s.segment(off, b.dim()));
    off += b.dim();
  }
  return out;
}

}  // namespace

Vec kkt_residual(const SqpProblem& prob, const std::vector<Vec>& x, const Vec& lambda) {
  check_point(prob, x);
  require_size(lambda.size(), prob.n_constraints, "SQP multipliers");
  std::vector<BlockEvaluation> ev;
  evaluate_all(prob, x, ev);
  return stacked_F(prob, ev, lambda);
}

Vec least_squares_multipliers(const SqpProblem& prob, const std::vector<Vec>& x) {
  check_point(prob, x);
  std::vector<BlockEvaluation> ev;
  evaluate_all(prob, x, ev);
  const Index nD = total_dim(prob);
  Mat Et(nD, prob.n_constraints);
  Vec g(nD);
  Index off = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const Index n = prob.blocks[i].dim();
    Et.middleRows(off, n) = ev[i].constraint_jacobian.transpose();
    g.segment(off, n) = ev[i].weighted_jacobian.transpose() * ev[i].weighted_residual;
    off += n;
  }
  return Et.completeOrthogonalDecomposition().solve(-g);
}

SqpResult solve_sqp(const SqpProblem& prob, std::vector<Vec> x0, Vec lambda0, const SqpConfig& cfg) {
  check_point(prob, x0);
  require_size(lambda0.size(), prob.n_constraints, "SQP multipliers");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 0 || !(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    throw InvalidArgument("invalid SQP configuration");
  const auto t_start = Clock::now();

  SqpResult res;
  res.x = std::move(x0);
  res.lambda = std::move(lambda0);
  std::vector<BlockEvaluation> ev, trial_ev;
  res.timing.block_eval += evaluate_all(prob, res.x, ev);
  Vec F = stacked_F(prob, ev, res.lambda);
  double merit = F.norm();
  res.merit.push_back(merit);
  res.objective.push_back(objective(ev));
  if (cfg.keep_iterates) {
    res.iterates.push_back(res.x);
    res.lambdas.push_back(res.lambda);
  }
  if (cfg.on_iterate) cfg.on_iterate(0, res.x, res.lambda);

  while (true) {
    if (merit < cfg.tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= cfg.max_iter) break;

    const auto t_kkt = Clock::now();
    const KktSolve ks = solve_kkt(prob, ev, F, cfg.kkt_residual_tol);
    res.timing.kkt += seconds_since(t_kkt);
    res.kkt_residual.push_back(ks.residual);
    res.regularized = res.regularized || ks.regularized;
    const std::vector<Vec> s = split(prob, ks.step.head(total_dim(prob)));
    const Vec s_lambda = ks.step.tail(prob.n_constraints);
    if (cfg.keep_iterates) res.steps.push_back(s);

    double alpha = 1.0;
    bool accepted = false;
    std::vector<Vec> xt(res.x.size());
    Vec lt, Ft;
    for (int h = 0; h <= cfg.max_halvings; ++h, alpha *= cfg.backtrack) {
      for (std::size_t i = 0; i < xt.size(); ++i) xt[i] = res.x[i] + alpha * s[i];
      lt = res.lambda + alpha * s_lambda;
      res.timing.block_eval += evaluate_all(prob, xt, trial_ev);
      Ft = stacked_F(prob, trial_ev, lt);
      const double mt = Ft.norm();
      if (std::isfinite(mt) && mt <= (1.0 - cfg.armijo_c1 * alpha) * merit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }
    res.x = std::move(xt);
    res.lambda = std::move(lt);
    std::swap(ev, trial_ev);
    F = std::move(Ft);
    merit = F.norm();
    ++res.iterations;
    res.merit.push_back(merit);
    res.objective.push_back(objective(ev));
    res.step_size.push_back(alpha);
    if (cfg.keep_iterates) {
      res.iterates.push_back(res.x);
      res.lambdas.push_back(res.lambda);
    }
    if (cfg.on_iterate) cfg.on_iterate(res.iterations, res.x, res.lambda);
  }
  res.timing.total_wall = seconds_since(t_start);
  return res;
}

SqpDiagnostics convergence_diagnostics(const SqpProblem& prob, const SqpResult& res) {
  SqpDiagnostics d;
  d.merit = res.merit;
  for (std::size_t k = 0; k + 1 < res.merit.size(); ++k)
    d.contraction.push_back(res.merit[k] > 0.0 ? res.merit[k + 1] / res.merit[k] : 0.0);
  if (res.steps.empty()) return d;
  if (res.iterates.size() < res.steps.size() || res.lambdas.size() < res.steps.size())
    throw InvalidArgument("convergence_diagnostics needs a result recorded with keep_iterates");

  const Index nD = total_dim(prob);
  for (std::size_t k = 0; k < res.steps.size(); ++k) {
    const auto& x = res.iterates[k];
    const auto& s = res.steps[k];
    const Vec& lambda = res.lambdas[k];
    double xn = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xn += x[i].squaredNorm();
      sn += s[i].squaredNorm();
    }
    xn = std::sqrt(xn);
    sn = std::sqrt(sn);
    if (sn == 0.0 || res.merit[k] == 0.0) {
      d.eta.push_back(0.0);
      continue;
    }
    const double eps = 1e-6 * (1.0 + xn) / sn;
    std::vector<Vec> xp(x.size()), xm(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + eps * s[i];
      xm[i] = x[i] - eps * s[i];
    }
    const Vec Hs = (kkt_residual(prob, xp, lambda).head(nD) - kkt_residual(prob, xm, lambda).head(nD)) / (2.0 * eps);
    std::vector<BlockEvaluation> ev;
    evaluate_all(prob, x, ev);
    Vec Hgn(nD);
    Index off = 0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const Index n = prob.blocks[i].dim();
      Hgn.segment(off, n) = ev[i].weighted_jacobian.transpose() * (ev[i].weighted_jacobian * s[i]);
      off += n;
    }
    d.eta.push_back((Hs - Hgn).norm() / res.merit[k]);
  }
  return d;
}

}  // namespace ddrom
