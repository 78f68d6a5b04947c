#include "ddrom/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

namespace ddrom {

Mat SparsePattern::dense(const Vec& values) const {
  require_size(values.size(), nnz(), "SparsePattern::dense");
  Mat D = Mat::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index e = row_ptr[r]; e < row_ptr[r + 1]; ++e) D(r, col_idx[e]) = values[e];
  return D;
}

BandedMask build_mask(Index N, int band, int shift) {
  if (N < 1 || band < 1 || shift < 1) throw InvalidArgument("build_mask needs N, band, shift >= 1");
  BandedMask m;
  m.band = band;
  m.shift = shift;
  SparsePattern& p = m.pattern;
  p.rows = N;
  p.cols = N * shift;
  p.row_ptr.assign(1, 0);
  p.col_idx.reserve(std::size_t(3 * band * N));
  const Index sep = Index(band) * shift;
  for (Index r = 0; r < N; ++r) {
    for (int k = -1; k <= 1; ++k) {
      const Index start = r * shift + k * sep;
      for (Index c = std::max<Index>(start, 0); c < std::min<Index>(start + band, p.cols); ++c) p.col_idx.push_back(c);
    }
    if (Index(p.col_idx.size()) == p.row_ptr.back()) throw InvalidArgument("build_mask: empty row");
    p.row_ptr.push_back(Index(p.col_idx.size()));
  }
  return m;
}

double activate(Activation a, double z) {
  const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return a == Activation::Swish ? z * s : s;
}

double activate_prime(Activation a, double z) {
  const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return a == Activation::Swish ? s + z * s * (1.0 - s) : s * (1.0 - s);
}

std::string to_string(Activation a) { return a == Activation::Swish ? "swish" : "sigmoid"; }

Activation activation_from_string(const std::string& s) {
  if (s == "swish") return Activation::Swish;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

Vec Autoencoder::encode(const Vec& x) const {
  require_size(x.size(), full_dim(), "Autoencoder::encode");
  const Vec xn = (x - norm.shift).cwiseQuotient(norm.scale);
  Vec z = enc_b1;
  for (Index r = 0; r < pattern.rows; ++r)
    for (Index e = pattern.row_ptr[r]; e < pattern.row_ptr[r + 1]; ++e) z[pattern.col_idx[e]] += enc_w1[e] * xn[r];
  for (Index c = 0; c < z.size(); ++c) z[c] = activate(act, z[c]);
  return enc_w2 * z;
}

Vec Autoencoder::decode(const Vec& xh) const {
  require_size(xh.size(), latent_dim(), "Autoencoder::decode");
  Vec a(width());
  for (Index c = 0; c < width(); ++c) a[c] = activate(act, hidden_preactivation(dec_w1, dec_b1, c, xh.data()));
  Vec x(full_dim());
  for (Index r = 0; r < full_dim(); ++r) {
    double y = 0.0;
    for (Index e = pattern.row_ptr[r]; e < pattern.row_ptr[r + 1]; ++e) y += dec_w2[e] * a[pattern.col_idx[e]];
    x[r] = norm.scale[r] * y + norm.shift[r];
  }
  return x;
}

Mat Autoencoder::decoder_jacobian(const Vec& xh) const {
  require_size(xh.size(), latent_dim(), "Autoencoder::decoder_jacobian");
  Vec sp(width());
  for (Index c = 0; c < width(); ++c) sp[c] = activate_prime(act, hidden_preactivation(dec_w1, dec_b1, c, xh.data()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> W1 = dec_w1;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> J =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(full_dim(), latent_dim());
  for (Index r = 0; r < full_dim(); ++r) {
    for (Index e = pattern.row_ptr[r]; e < pattern.row_ptr[r + 1]; ++e) {
      const Index c = pattern.col_idx[e];
      J.row(r) += (dec_w2[e] * sp[c]) * W1.row(c);
    }
    J.row(r) *= norm.scale[r];
  }
  return J;
}

Mat Autoencoder::encoder_w1_dense() const { return pattern.dense(enc_w1).transpose(); }
Mat Autoencoder::decoder_w2_dense() const { return pattern.dense(dec_w2); }

void Autoencoder::save(MatrixArchive& ar, const std::string& prefix) const {
  auto as_mat = [](const std::vector<Index>& v) {
    Mat m(Index(v.size()), 1);
    for (std::size_t k = 0; k < v.size(); ++k) m(Index(k), 0) = double(v[k]);
    return m;
  };
  Mat meta(4, 1);
  meta << double(pattern.rows), double(pattern.cols), double(latent_dim()), act == Activation::Swish ? 0.0 : 1.0;
  ar.add(prefix + "/meta", meta);
  ar.add(prefix + "/row_ptr", as_mat(pattern.row_ptr));
  ar.add(prefix + "/col_idx", as_mat(pattern.col_idx));
  ar.add(prefix + "/enc_w1", enc_w1);
  ar.add(prefix + "/enc_w2", enc_w2);
  ar.add(prefix + "/enc_b1", enc_b1);
  ar.add(prefix + "/dec_w1", dec_w1);
  ar.add(prefix + "/dec_b1", dec_b1);
  ar.add(prefix + "/dec_w2", dec_w2);
  ar.add(prefix + "/norm_shift", norm.shift);
  ar.add(prefix + "/norm_scale", norm.scale);
}

Autoencoder Autoencoder::load(const MatrixArchive& ar, const std::string& prefix) {
  auto as_idx = [](const Mat& m) {
    std::vector<Index> v(std::size_t(m.size()));
    for (Index k = 0; k < m.size(); ++k) v[std::size_t(k)] = Index(m.data()[k]);
    return v;
  };
  const Mat& meta = ar.get(prefix + "/meta");
  if (meta.size() != 4) throw FormatError("autoencoder meta record malformed");
  Autoencoder a;
  a.pattern.rows = Index(meta(0));
  a.pattern.cols = Index(meta(1));
  a.pattern.row_ptr = as_idx(ar.get(prefix + "/row_ptr"));
  a.pattern.col_idx = as_idx(ar.get(prefix + "/col_idx"));
  a.act = meta(3) == 0.0 ? Activation::Swish : Activation::Sigmoid;
  a.enc_w1 = ar.get(prefix + "/enc_w1");
  a.enc_w2 = ar.get(prefix + "/enc_w2");
  a.enc_b1 = ar.get(prefix + "/enc_b1");
  a.dec_w1 = ar.get(prefix + "/dec_w1");
  a.dec_b1 = ar.get(prefix + "/dec_b1");
  a.dec_w2 = ar.get(prefix + "/dec_w2");
  a.norm.shift = ar.get(prefix + "/norm_shift");
  a.norm.scale = ar.get(prefix + "/norm_scale");
  const Index N = a.pattern.rows, w = a.pattern.cols, n = Index(meta(2));
  if (Index(a.pattern.row_ptr.size()) != N + 1 || a.enc_w1.size() != a.pattern.nnz() || a.dec_w2.size() != a.pattern.nnz() ||
      a.enc_w2.rows() != n || a.enc_w2.cols() != w || a.dec_w1.rows() != w || a.dec_w1.cols() != n ||
      a.enc_b1.size() != w || a.dec_b1.size() != w || a.norm.shift.size() != N || a.norm.scale.size() != N)
    throw FormatError("autoencoder '" + prefix + "' has inconsistent dimensions");
  return a;
}

Autoencoder init_autoencoder(const SparsePattern& pattern, Index latent, Activation act, std::uint64_t seed) {
  if (latent < 1) throw InvalidArgument("latent dimension must be positive");
  const Index N = pattern.rows, w = pattern.cols;
  std::mt19937_64 rng(seed);
  auto uniform = [&](double bound) { return std::uniform_real_distribution<double>(-bound, bound)(rng); };

  std::vector<Index> col_fan(w, 0);
  for (Index c : pattern.col_idx) ++col_fan[c];

  Autoencoder a;
  a.pattern = pattern;
  a.act = act;
  a.norm.shift = Vec::Zero(N);
  a.norm.scale = Vec::Ones(N);
  a.enc_w1.resize(pattern.nnz());
  a.dec_w2.resize(pattern.nnz());
  for (Index r = 0; r < N; ++r)
    for (Index e = pattern.row_ptr[r]; e < pattern.row_ptr[r + 1]; ++e)
      a.enc_w1[e] = uniform(1.0 / std::sqrt(double(std::max<Index>(col_fan[pattern.col_idx[e]], 1))));
  a.enc_b1.resize(w);
  for (Index c = 0; c < w; ++c) a.enc_b1[c] = uniform(1.0 / std::sqrt(double(std::max<Index>(col_fan[c], 1))));
  a.enc_w2.resize(latent, w);
  for (Index k = 0; k < a.enc_w2.size(); ++k) a.enc_w2.data()[k] = uniform(1.0 / std::sqrt(double(w)));
  a.dec_w1.resize(w, latent);
  for (Index k = 0; k < a.dec_w1.size(); ++k) a.dec_w1.data()[k] = uniform(1.0 / std::sqrt(double(latent)));
  a.dec_b1.resize(w);
  for (Index c = 0; c < w; ++c) a.dec_b1[c] = uniform(1.0 / std::sqrt(double(latent)));
  for (Index r = 0; r < N; ++r) {
    const double bound = 1.0 / std::sqrt(double(std::max<Index>(pattern.row_ptr[r + 1] - pattern.row_ptr[r], 1)));
    for (Index e = pattern.row_ptr[r]; e < pattern.row_ptr[r + 1]; ++e) a.dec_w2[e] = uniform(bound);
  }
  return a;
}

namespace {

// Batches are stored sample-major (B x N) so that a column is contiguous over the batch.
struct Workspace {
  Mat Z1, A1, H, Z2, A2, Y;
  Mat dY, dA2, dZ2, dH, dA1, dZ1;
};

struct Gradients {
  Vec enc_w1, enc_b1, dec_b1, dec_w2;
  Mat enc_w2, dec_w1;
};

Mat apply(Activation a, const Mat& Z) {
  return Z.unaryExpr([a](double z) { return activate(a, z); });
}

Mat apply_prime(Activation a, const Mat& Z) {
  return Z.unaryExpr([a](double z) { return activate_prime(a, z); });
}

double forward(const Autoencoder& net, const Mat& Xb, Workspace& ws) {
  const auto& p = net.pattern;
  const Index B = Xb.rows();
  ws.Z1 = net.enc_b1.transpose().replicate(B, 1);
  for (Index r = 0; r < p.rows; ++r)
    for (Index e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) ws.Z1.col(p.col_idx[e]) += net.enc_w1[e] * Xb.col(r);
  ws.A1 = apply(net.act, ws.Z1);
  ws.H.noalias() = ws.A1 * net.enc_w2.transpose();
  ws.Z2.noalias() = ws.H * net.dec_w1.transpose();
  ws.Z2.rowwise() += net.dec_b1.transpose();
  ws.A2 = apply(net.act, ws.Z2);
  ws.Y.setZero(B, p.rows);
  for (Index r = 0; r < p.rows; ++r)
    for (Index e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) ws.Y.col(r) += net.dec_w2[e] * ws.A2.col(p.col_idx[e]);
  return (ws.Y - Xb).squaredNorm() / double(B * p.rows);
}

void backward(const Autoencoder& net, const Mat& Xb, Workspace& ws, Gradients& g) {
  const auto& p = net.pattern;
  const Index B = Xb.rows();
  ws.dY = (2.0 / double(B * p.rows)) * (ws.Y - Xb);
  ws.dA2.setZero(B, p.cols);
  g.dec_w2.resize(p.nnz());
  for (Index r = 0; r < p.rows; ++r)
    for (Index e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) {
      const Index c = p.col_idx[e];
      g.dec_w2[e] = ws.dY.col(r).dot(ws.A2.col(c));
      ws.dA2.col(c) += net.dec_w2[e] * ws.dY.col(r);
    }
  ws.dZ2 = ws.dA2.cwiseProduct(apply_prime(net.act, ws.Z2));
  g.dec_w1.noalias() = ws.dZ2.transpose() * ws.H;
  g.dec_b1 = ws.dZ2.colwise().sum().transpose();
  ws.dH.noalias() = ws.dZ2 * net.dec_w1;
  g.enc_w2.noalias() = ws.dH.transpose() * ws.A1;
  ws.dA1.noalias() = ws.dH * net.enc_w2;
  ws.dZ1 = ws.dA1.cwiseProduct(apply_prime(net.act, ws.Z1));
  g.enc_b1 = ws.dZ1.colwise().sum().transpose();
  g.enc_w1.resize(p.nnz());
  for (Index r = 0; r < p.rows; ++r)
    for (Index e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) g.enc_w1[e] = ws.dZ1.col(p.col_idx[e]).dot(Xb.col(r));
}

class Adam {
 public:
  explicit Adam(const Autoencoder& net) {
    sizes_ = {net.enc_w1.size(), net.enc_w2.size(), net.enc_b1.size(), net.dec_w1.size(), net.dec_b1.size(), net.dec_w2.size()};
    for (Index s : sizes_) {
      m_.push_back(Vec::Zero(s));
      v_.push_back(Vec::Zero(s));
    }
  }

  void step(Autoencoder& net, const Gradients& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, double(t_)), c2 = 1.0 - std::pow(b2_, double(t_));
    double* params[] = {net.enc_w1.data(), net.enc_w2.data(), net.enc_b1.data(),
                        net.dec_w1.data(), net.dec_b1.data(), net.dec_w2.data()};
    const double* grads[] = {g.enc_w1.data(), g.enc_w2.data(), g.enc_b1.data(),
                             g.dec_w1.data(), g.dec_b1.data(), g.dec_w2.data()};
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
      double* m = m_[k].data();
      double* v = v_[k].data();
      for (Index i = 0; i < sizes_[k]; ++i) {
        const double gi = grads[k][i];
        m[i] = b1_ * m[i] + (1.0 - b1_) * gi;
        v[i] = b2_ * v[i] + (1.0 - b2_) * gi * gi;
        params[k][i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      }
    }
  }

 private:
  static constexpr double b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  std::vector<Index> sizes_;
  std::vector<Vec> m_, v_;
  long t_ = 0;
};

Mat gather_rows(const Mat& T, const IndexList& idx, std::size_t begin, std::size_t end) {
  Mat out(Index(end - begin), T.cols());
  for (std::size_t k = begin; k < end; ++k) out.row(Index(k - begin)) = T.row(idx[k]);
  return out;
}

}  // namespace

TrainResult train_autoencoder(const Mat& X, const SparsePattern& mask, Index latent, Activation act,
                              const TrainConfig& cfg) {
  if (X.cols() < 2) throw InvalidArgument("train_autoencoder needs at least two snapshots");
  require_size(X.rows(), mask.rows, "train_autoencoder snapshot rows");
  if (latent < 1 || latent >= X.rows()) throw InvalidArgument("latent dimension must lie in [1, N)");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) throw InvalidArgument("invalid training config");

  const DataSplit split = split_columns(X.cols(), cfg.validation_fraction, cfg.seed ^ 0x5bd1e995ULL);
  const Mat Xtrain = select_columns(X, split.train);
  TrainResult res;
  res.net = init_autoencoder(mask, latent, act, cfg.seed);
  res.net.norm = Normalization::fit(Xtrain);
  const Mat T = res.net.norm.normalize(Xtrain).transpose();
  const Mat V = res.net.norm.normalize(select_columns(X, split.validation)).transpose();

  std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
  IndexList order(T.rows());
  std::iota(order.begin(), order.end(), Index(0));
  Adam adam(res.net);
  Workspace ws;
  Gradients g;
  double lr = cfg.learning_rate;
  double sched_best = std::numeric_limits<double>::infinity();
  int sched_bad = 0, stop_wait = 0;
  Autoencoder best = res.net;
  res.history.best_validation = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += std::size_t(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), b + std::size_t(cfg.batch_size));
      const Mat Xb = gather_rows(T, order, b, e);
      train_sum += forward(res.net, Xb, ws) * double(e - b);
      backward(res.net, Xb, ws, g);
      adam.step(res.net, g, lr);
    }
    const double train_loss = train_sum / double(order.size());
    const double val_loss = forward(res.net, V, ws);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw ConvergenceError("autoencoder training diverged at epoch " + std::to_string(epoch));
    res.history.train_loss.push_back(train_loss);
    res.history.validation_loss.push_back(val_loss);
    res.history.learning_rate.push_back(lr);

    if (val_loss < res.history.best_validation) {
      res.history.best_validation = val_loss;
      res.history.best_epoch = epoch;
      best = res.net;
      stop_wait = 0;
    } else if (++stop_wait >= cfg.stop_patience) {
      break;
    }
    // Plateau detection with a relative threshold of 1e-4.
    if (val_loss < sched_best * (1.0 - 1e-4)) {
      sched_best = val_loss;
      sched_bad = 0;
    } else if (++sched_bad > cfg.plateau_patience) {
      lr *= cfg.plateau_factor;
      sched_bad = 0;
    }
  }
  res.net = std::move(best);
  return res;
}

Autoencoder assemble_port_interface(const Partition& part, const std::vector<Autoencoder>& port_nets, int i) {
  if (port_nets.size() != part.ports.size()) throw InvalidArgument("assemble_port_interface: missing port net");
  const Subdomain& sub = part[i];
  const Index N = Index(sub.interface_cols.size());
  Index w = 0, n = 0;
  for (int j : sub.ports) {
    const Autoencoder& pj = port_nets[j];
    require_size(pj.full_dim(), Index(part.ports[j].cols.size()), "port net dimension");
    if (pj.act != port_nets[sub.ports.front()].act) throw InvalidArgument("port nets mix activations");
    w += pj.width();
    n += pj.latent_dim();
  }
  Autoencoder a;
  a.act = port_nets[sub.ports.front()].act;
  a.norm.shift.resize(N);
  a.norm.scale.resize(N);
  a.enc_w2 = Mat::Zero(n, w);
  a.enc_b1.resize(w);
  a.dec_w1 = Mat::Zero(w, n);
  a.dec_b1.resize(w);

  // Each interface row belongs to exactly one port; remember where its entries come from.
  struct Source {
    int port = -1;
    Index row = 0;
    Index hidden_off = 0;
  };
  std::vector<Source> src(N);
  Index hoff = 0, loff = 0;
  for (int j : sub.ports) {
    const Autoencoder& pj = port_nets[j];
    const IndexList& pos = part.port_positions(j, i);
    for (std::size_t t = 0; t < pos.size(); ++t) {
      src[pos[t]] = {j, Index(t), hoff};
      a.norm.shift[pos[t]] = pj.norm.shift[Index(t)];
      a.norm.scale[pos[t]] = pj.norm.scale[Index(t)];
    }
    a.enc_w2.block(loff, hoff, pj.latent_dim(), pj.width()) = pj.enc_w2;
    a.dec_w1.block(hoff, loff, pj.width(), pj.latent_dim()) = pj.dec_w1;
    a.enc_b1.segment(hoff, pj.width()) = pj.enc_b1;
    a.dec_b1.segment(hoff, pj.width()) = pj.dec_b1;
    hoff += pj.width();
    loff += pj.latent_dim();
  }
  a.pattern.rows = N;
  a.pattern.cols = w;
  a.pattern.row_ptr.assign(1, 0);
  std::vector<double> ew1, dw2;
  for (Index r = 0; r < N; ++r) {
    const Source& s = src[r];
    const Autoencoder& pj = port_nets[s.port];
    for (Index e = pj.pattern.row_ptr[s.row]; e < pj.pattern.row_ptr[s.row + 1]; ++e) {
      a.pattern.col_idx.push_back(s.hidden_off + pj.pattern.col_idx[e]);
      ew1.push_back(pj.enc_w1[e]);
      dw2.push_back(pj.dec_w2[e]);
    }
    a.pattern.row_ptr.push_back(a.pattern.nnz());
  }
  a.enc_w1 = Eigen::Map<Vec>(ew1.data(), Index(ew1.size()));
  a.dec_w2 = Eigen::Map<Vec>(dw2.data(), Index(dw2.size()));
  return a;
}

}  // namespace ddrom
