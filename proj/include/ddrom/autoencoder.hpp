#pragma once

#include "ddrom/common.hpp"
#include "ddrom/matrix_io.hpp"
#include "ddrom/partition.hpp"
#include "ddrom/snapshots.hpp"

#include <cstdint>
#include <string>

namespace ddrom {

// CSR pattern of an N x w matrix, columns ascending within a row.
struct SparsePattern {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_ptr{0};
  std::vector<Index> col_idx;

  Index nnz() const { return Index(col_idx.size()); }
  Mat dense(const Vec& values) const;
};

struct BandedMask {
  SparsePattern pattern;
  int band = 0;   // nonzeros per band
  int shift = 0;  // column shift per row
};

// Three bands per row, centred on row r: band k in {-1, 0, 1} covers columns
// [r*s + k*b*s, r*s + k*b*s + b) clipped to [0, w), with w = N*s.
BandedMask build_mask(Index N, int band, int shift);

enum class Activation { Swish, Sigmoid };

double activate(Activation a, double z);
double activate_prime(Activation a, double z);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Shallow sparse autoencoder
//   h(x) = W2h s(W1h n(x) + b1h),  g(xh) = D(W2g s(W1g xh + b1g))
// where n/D are the data normalization and its inverse. W2g lives on `pattern` and W1h
// on its transpose; both sparse layers keep their values in pattern order.
struct Autoencoder {
  SparsePattern pattern;
  Activation act = Activation::Swish;
  Normalization norm;
  Vec enc_w1;  // nnz
  Mat enc_w2;  // n x w
  Vec enc_b1;  // w
  Mat dec_w1;  // w x n
  Vec dec_b1;  // w
  Vec dec_w2;  // nnz

  Index full_dim() const { return pattern.rows; }
  Index width() const { return pattern.cols; }
  Index latent_dim() const { return dec_w1.cols(); }
  Index parameter_count() const { return 2 * pattern.nnz() + 2 * latent_dim() * width() + 2 * width(); }

  Vec encode(const Vec& x) const;
  Vec decode(const Vec& xh) const;
  Mat decoder_jacobian(const Vec& xh) const;

  // Dense views, for tests and inspection.
  Mat encoder_w1_dense() const;  // w x N
  Mat decoder_w2_dense() const;  // N x w

  void save(MatrixArchive& ar, const std::string& prefix) const;
  static Autoencoder load(const MatrixArchive& ar, const std::string& prefix);
};

// Random initialisation (fan-in uniform) with zero normalization shift and unit scale.
Autoencoder init_autoencoder(const SparsePattern& pattern, Index latent, Activation act, std::uint64_t seed);

// Pre-activation of hidden unit c; shared by the full decoder and its subnets so both
// perform the same floating-point operations.
inline double hidden_preactivation(const Mat& w1, const Vec& b1, Index c, const double* xh) {
  double z = b1[c];
  for (Index k = 0; k < w1.cols(); ++k) z += w1(c, k) * xh[k];
  return z;
}

struct TrainConfig {
  int epochs = 2000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int plateau_patience = 50;
  double plateau_factor = 0.1;
  int stop_patience = 300;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::vector<double> learning_rate;
  int best_epoch = -1;
  double best_validation = 0.0;
};

struct TrainResult {
  Autoencoder net;
  TrainHistory history;
};

// Adam on the MSE of normalized snapshots (columns of X); restores the best-validation
// weights. Throws ConvergenceError if the loss becomes non-finite.
TrainResult train_autoencoder(const Mat& X, const SparsePattern& mask, Index latent, Activation act,
                              const TrainConfig& cfg);

// Interface net of subdomain i assembled from port nets in block form.
Autoencoder assemble_port_interface(const Partition& part, const std::vector<Autoencoder>& port_nets, int i);

}  // namespace ddrom
