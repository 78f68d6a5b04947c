#include "ddrom/hyper_reduction.hpp"

#include "ddrom/pod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace ddrom {

std::string to_string(HrMode m) {
  switch (m) {
    case HrMode::None: return "none";
    case HrMode::Collocation: return "collocation";
    case HrMode::Gappy: return "gappy";
  }
  return "?";
}

HrMode hr_mode_from_string(const std::string& s) {
  if (s == "none") return HrMode::None;
  if (s == "collocation") return HrMode::Collocation;
  if (s == "gappy") return HrMode::Gappy;
  throw ConfigError("unknown hyper-reduction mode '" + s + "'");
}

IndexList greedy_sample(const Mat& phi_r, Index n_samples) {
  const Index N = phi_r.rows(), m = phi_r.cols();
  if (m < 1) throw InvalidArgument("greedy_sample needs a non-empty basis");
  if (n_samples < m) throw InvalidArgument("greedy_sample needs at least as many samples as basis columns");
  if (n_samples > N) throw InvalidArgument("greedy_sample: more samples than rows");

  std::vector<char> taken(std::size_t(N), 0);
  IndexList chosen;
  chosen.reserve(std::size_t(n_samples));
  for (Index c = 0; c < m; ++c) {
    const Index quota = n_samples / m + (c < n_samples % m ? 1 : 0);
    for (Index q = 0; q < quota; ++q) {
      Vec err = phi_r.col(c);
      if (c > 0) {
        Mat ZP(Index(chosen.size()), c);
        Vec Zt(Index(chosen.size()));
        for (std::size_t k = 0; k < chosen.size(); ++k) {
          ZP.row(Index(k)) = phi_r.row(chosen[k]).head(c);
          Zt[Index(k)] = phi_r(chosen[k], c);
        }
        const Vec coef = ZP.completeOrthogonalDecomposition().solve(Zt);
        err -= phi_r.leftCols(c) * coef;
      }
      Index best = -1;
      double best_val = -1.0;
      for (Index r = 0; r < N; ++r)
        if (!taken[std::size_t(r)] && std::abs(err[r]) > best_val) {
          best_val = std::abs(err[r]);
          best = r;
        }
      taken[std::size_t(best)] = 1;
      chosen.push_back(best);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

namespace {

void check_rows(const IndexList& rows, Index n_rows) {
  if (rows.empty()) throw InvalidArgument("hyper-reduction needs at least one sampled row");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= n_rows) throw InvalidArgument("sampled row out of range");
    if (k > 0 && rows[k] <= rows[k - 1]) throw InvalidArgument("sampled rows must be strictly increasing");
  }
}

}  // namespace

HrOperator HrOperator::none(Index n_rows) {
  HrOperator h;
  h.mode_ = HrMode::None;
  h.n_rows_ = n_rows;
  h.rows_.resize(std::size_t(n_rows));
  std::iota(h.rows_.begin(), h.rows_.end(), Index(0));
  return h;
}

HrOperator HrOperator::collocation(Index n_rows, IndexList rows) {
  check_rows(rows, n_rows);
  HrOperator h;
  h.mode_ = HrMode::Collocation;
  h.n_rows_ = n_rows;
  h.rows_ = std::move(rows);
  return h;
}

HrOperator HrOperator::gappy(IndexList rows, Mat phi_r) {
  check_rows(rows, phi_r.rows());
  if (phi_r.cols() < 1 || Index(rows.size()) < phi_r.cols())
    throw InvalidArgument("gappy hyper-reduction needs at least as many samples as basis vectors");
  Mat ZP(Index(rows.size()), phi_r.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) ZP.row(Index(k)) = phi_r.row(rows[k]);
  Eigen::JacobiSVD<Mat> svd(ZP, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  if (s[s.size() - 1] <= 1e-12 * s[0])
    throw SingularityError("sampled residual basis is rank deficient (sigma_min/sigma_max = " +
                           std::to_string(s[s.size() - 1] / s[0]) + ")");
  HrOperator h;
  h.mode_ = HrMode::Gappy;
  h.n_rows_ = phi_r.rows();
  h.rows_ = std::move(rows);
  h.pinv_ = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  h.phi_r_ = std::move(phi_r);
  return h;
}

Vec HrOperator::apply(const Vec& v) const {
  require_size(v.size(), n_rows_, "HrOperator::apply");
  Vec s(Index(rows_.size()));
  for (std::size_t k = 0; k < rows_.size(); ++k) s[Index(k)] = v[rows_[k]];
  return apply_sampled(s);
}

Vec HrOperator::apply_sampled(const Vec& sampled) const {
  require_size(sampled.size(), Index(rows_.size()), "HrOperator::apply_sampled");
  return mode_ == HrMode::Gappy ? Vec(pinv_ * sampled) : sampled;
}

Mat HrOperator::apply_sampled(const Mat& sampled) const {
  require_size(sampled.rows(), Index(rows_.size()), "HrOperator::apply_sampled");
  return mode_ == HrMode::Gappy ? Mat(pinv_ * sampled) : sampled;
}

Vec Subnet::decode(const Vec& xh) const {
  require_size(xh.size(), latent_dim(), "Subnet::decode");
  Vec a(Index(hidden.size()));
  for (Index c = 0; c < a.size(); ++c) a[c] = activate(act, hidden_preactivation(w1, b1, c, xh.data()));
  Vec x(Index(outputs.size()));
  for (Index r = 0; r < x.size(); ++r) {
    double y = 0.0;
    for (Index e = row_ptr[r]; e < row_ptr[r + 1]; ++e) y += w2[e] * a[col_idx[e]];
    x[r] = scale[r] * y + shift[r];
  }
  return x;
}

Mat Subnet::jacobian(const Vec& xh) const {
  require_size(xh.size(), latent_dim(), "Subnet::jacobian");
  Vec sp(Index(hidden.size()));
  for (Index c = 0; c < sp.size(); ++c) sp[c] = activate_prime(act, hidden_preactivation(w1, b1, c, xh.data()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> W1 = w1;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> J(Index(outputs.size()), latent_dim());
  J.setZero();
  for (Index r = 0; r < J.rows(); ++r) {
    for (Index e = row_ptr[r]; e < row_ptr[r + 1]; ++e) J.row(r) += (w2[e] * sp[col_idx[e]]) * W1.row(col_idx[e]);
    J.row(r) *= scale[r];
  }
  return J;
}

Subnet extract_subnet(const Autoencoder& ae, const IndexList& outputs) {
  if (outputs.empty()) throw InvalidArgument("extract_subnet needs a non-empty output set");
  const SparsePattern& p = ae.pattern;
  std::vector<Index> local(std::size_t(p.cols), -1);
  for (Index r : outputs) {
    if (r < 0 || r >= p.rows) throw InvalidArgument("subnet output index out of range");
    for (Index e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) local[std::size_t(p.col_idx[e])] = 0;
  }
  Subnet s;
  s.outputs = outputs;
  s.act = ae.act;
  for (Index c = 0; c < p.cols; ++c)
    if (local[std::size_t(c)] == 0) {
      local[std::size_t(c)] = Index(s.hidden.size());
      s.hidden.push_back(c);
    }
  const Index h = Index(s.hidden.size());
  s.w1.resize(h, ae.latent_dim());
  s.b1.resize(h);
  for (Index k = 0; k < h; ++k) {
    s.w1.row(k) = ae.dec_w1.row(s.hidden[k]);
    s.b1[k] = ae.dec_b1[s.hidden[k]];
  }
  s.row_ptr.assign(1, 0);
  std::vector<double> w2;
  s.shift.resize(Index(outputs.size()));
  s.scale.resize(Index(outputs.size()));
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const Index r = outputs[k];
    for (Index e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) {
      s.col_idx.push_back(local[std::size_t(p.col_idx[e])]);
      w2.push_back(ae.dec_w2[e]);
    }
    s.row_ptr.push_back(Index(s.col_idx.size()));
    s.shift[Index(k)] = ae.norm.shift[r];
    s.scale[Index(k)] = ae.norm.scale[r];
  }
  s.w2 = Eigen::Map<Vec>(w2.data(), Index(w2.size()));
  return s;
}

NeededOutputs hr_rows_for_subdomain(const SpMat& pattern, const Partition& part, int i, const IndexList& rows) {
  const Subdomain& sub = part[i];
  std::unordered_map<Index, Index> interior_pos, interface_pos;
  for (std::size_t k = 0; k < sub.interior_cols.size(); ++k) interior_pos.emplace(sub.interior_cols[k], Index(k));
  for (std::size_t k = 0; k < sub.interface_cols.size(); ++k) interface_pos.emplace(sub.interface_cols[k], Index(k));
  std::vector<char> in_o(sub.interior_cols.size(), 0), in_g(sub.interface_cols.size(), 0);
  for (Index z : rows) {
    if (z < 0 || z >= Index(sub.res_rows.size())) throw InvalidArgument("sampled row out of range");
    const Index row = sub.res_rows[z];
    for (SpMat::InnerIterator it(pattern, row); it; ++it) {
      if (auto f = interior_pos.find(it.col()); f != interior_pos.end()) {
        in_o[std::size_t(f->second)] = 1;
      } else if (auto g = interface_pos.find(it.col()); g != interface_pos.end()) {
        in_g[std::size_t(g->second)] = 1;
      } else {
        throw Error("residual row " + std::to_string(row) + " depends on a column outside subdomain " + std::to_string(i));
      }
    }
  }
  NeededOutputs out;
  for (std::size_t k = 0; k < in_o.size(); ++k)
    if (in_o[k]) out.interior.push_back(Index(k));
  for (std::size_t k = 0; k < in_g.size(); ++k)
    if (in_g[k]) out.interface.push_back(Index(k));
  return out;
}

void HrSamples::save(MatrixArchive& ar) const {
  Mat meta(1, 1);
  meta(0, 0) = double(rows.size());
  ar.add("hr/meta", meta);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Mat r(Index(rows[i].size()), 1);
    for (std::size_t k = 0; k < rows[i].size(); ++k) r(Index(k), 0) = double(rows[i][k]);
    ar.add("hr/" + std::to_string(i) + "/rows", r);
    ar.add("hr/" + std::to_string(i) + "/basis", bases[i]);
  }
}

HrSamples HrSamples::load(const MatrixArchive& ar) {
  const Mat& meta = ar.get("hr/meta");
  if (meta.size() != 1 || meta(0, 0) < 1) throw FormatError("hr/meta: bad subdomain count");
  HrSamples s;
  for (Index i = 0; i < Index(meta(0, 0)); ++i) {
    const Mat& r = ar.get("hr/" + std::to_string(i) + "/rows");
    IndexList rows;
    for (Index k = 0; k < r.size(); ++k) rows.push_back(Index(r(k)));
    s.rows.push_back(std::move(rows));
    s.bases.push_back(ar.get("hr/" + std::to_string(i) + "/basis"));
    if (s.bases.back().cols() > Index(s.rows.back().size()))
      throw FormatError("hr/" + std::to_string(i) + ": more basis vectors than sample rows");
  }
  return s;
}

HrSamples sample_residual_rows(const Partition& part, Index samples, const std::vector<Mat>& residual_snapshots,
                               double residual_energy) {
  const int n = part.count();
  require_size(Index(residual_snapshots.size()), Index(n), "residual snapshot blocks");
  if (samples < 1) throw InvalidArgument("hyper-reduction needs at least one sample per subdomain");
  HrSamples s;
  for (int i = 0; i < n; ++i) {
    const Mat& R = residual_snapshots[std::size_t(i)];
    const Index rows = Index(part[i].res_rows.size());
    require_size(R.rows(), rows, "residual snapshots");
    const Index ns = std::min(samples, rows);
    PodBasis b = pod(R, EnergyTolerance{residual_energy});
    const Index nr = std::min(b.dim(), ns);
    Mat phi = b.phi.leftCols(nr);
    s.rows.push_back(greedy_sample(phi, ns));
    s.bases.push_back(std::move(phi));
  }
  return s;
}

std::vector<HrOperator> make_hr_operators(const Partition& part, HrMode mode, const HrSamples& s) {
  std::vector<HrOperator> ops;
  if (mode == HrMode::None) return ops;
  require_size(Index(s.rows.size()), Index(part.count()), "hyper-reduction subdomains");
  for (int i = 0; i < part.count(); ++i) {
    const std::size_t k = std::size_t(i);
    const Index n_rows = Index(part[i].res_rows.size());
    for (Index r : s.rows[k])
      if (r < 0 || r >= n_rows) throw InvalidArgument("hyper-reduction row out of range in subdomain " + std::to_string(i));
    ops.push_back(mode == HrMode::Gappy ? HrOperator::gappy(s.rows[k], s.bases[k])
                                        : HrOperator::collocation(n_rows, s.rows[k]));
  }
  return ops;
}

}  // namespace ddrom
