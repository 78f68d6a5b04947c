#pragma once

#include "ddrom/autoencoder.hpp"
#include "ddrom/common.hpp"
#include "ddrom/matrix_io.hpp"
#include "ddrom/partition.hpp"

#include <string>

namespace ddrom {

enum class HrMode { None, Collocation, Gappy };

std::string to_string(HrMode m);
HrMode hr_mode_from_string(const std::string& s);

// Greedy row selection on the columns of phi_r. Samples are spread over the columns
// cyclically (the first n_samples mod m columns get one extra); for column c each new row
// maximizes the error of fitting phi_r[:, c] by columns 0..c-1 on the rows chosen so far.
// Ties go to the lowest row. Result is sorted.
IndexList greedy_sample(const Mat& phi_r, Index n_samples);

class HrOperator {
 public:
  HrOperator() = default;
  static HrOperator none(Index n_rows);
  static HrOperator collocation(Index n_rows, IndexList rows);
  // Throws SingularityError when Z * phi_r is rank deficient.
  static HrOperator gappy(IndexList rows, Mat phi_r);

  HrMode mode() const { return mode_; }
  Index full_rows() const { return n_rows_; }
  // Rows of the residual that have to be evaluated, ascending.
  const IndexList& sampled_rows() const { return rows_; }
  Index output_dim() const { return mode_ == HrMode::Gappy ? pinv_.rows() : Index(rows_.size()); }
  const Mat& residual_basis() const { return phi_r_; }

  // B v for a full residual vector.
  Vec apply(const Vec& v) const;
  // Same, given only the sampled entries (in sampled_rows() order).
  Vec apply_sampled(const Vec& sampled) const;
  Mat apply_sampled(const Mat& sampled) const;

 private:
  HrMode mode_ = HrMode::None;
  Index n_rows_ = 0;
  IndexList rows_;
  Mat phi_r_;
  Mat pinv_;  // (Z phi_r)^+
};

// Decoder rows I_o evaluated through the hidden units I_h they touch.
struct Subnet {
  IndexList outputs;
  IndexList hidden;
  Activation act = Activation::Swish;
  Mat w1;  // |I_h| x n
  Vec b1;
  std::vector<Index> row_ptr;  // CSR over outputs, columns local to `hidden`
  std::vector<Index> col_idx;
  Vec w2;
  Vec shift;
  Vec scale;

  Index latent_dim() const { return w1.cols(); }
  Vec decode(const Vec& xh) const;
  Mat jacobian(const Vec& xh) const;  // |I_o| x n
};

// Bitwise equal to rows I_o of ae.decode(); I_o must be non-empty and in range.
Subnet extract_subnet(const Autoencoder& ae, const IndexList& outputs);

struct NeededOutputs {
  IndexList interior;   // positions into interior_cols
  IndexList interface;  // positions into interface_cols
};

// State entries of subdomain i that the sampled local residual rows depend on.
// `pattern` is the global Jacobian sparsity pattern; `rows` index part[i].res_rows.
NeededOutputs hr_rows_for_subdomain(const SpMat& pattern, const Partition& part, int i, const IndexList& rows);

// Per-subdomain sample rows and the residual bases they were selected from. Both weighting
// modes are built from the same samples.
struct HrSamples {
  std::vector<IndexList> rows;
  std::vector<Mat> bases;

  void save(MatrixArchive& ar) const;
  static HrSamples load(const MatrixArchive& ar);
};

// Residual POD basis per subdomain (energy criterion, at most `samples` vectors) and greedy rows.
HrSamples sample_residual_rows(const Partition& part, Index samples, const std::vector<Mat>& residual_snapshots,
                               double residual_energy = 1e-10);
std::vector<HrOperator> make_hr_operators(const Partition& part, HrMode mode, const HrSamples& s);

}  // namespace ddrom
