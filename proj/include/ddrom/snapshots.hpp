#pragma once

#include "ddrom/common.hpp"
#include "ddrom/fom.hpp"
#include "ddrom/matrix_io.hpp"
#include "ddrom/partition.hpp"

#include <cstdint>
#include <filesystem>

namespace ddrom {

struct ParameterBox {
  double a_lo = 1.0, a_hi = 1e4;
  double lambda_lo = 5.0, lambda_hi = 25.0;
};

// Tensor grid including endpoints, a outer and lambda inner (lambda varies fastest).
std::vector<ParameterPoint> sample_grid(const ParameterBox& box, int na, int nl);

struct SnapshotSet {
  std::vector<ParameterPoint> params;
  std::vector<Mat> interior;   // X_i^Omega
  std::vector<Mat> interface;  // X_i^Gamma
  std::vector<Mat> ports;      // X_j^p
  std::vector<Mat> residuals;  // Newton-iterate residuals restricted to each subdomain's rows
  std::vector<ParameterPoint> failures;

  Index count() const { return Index(params.size()); }
  // Asserts X_j^p = P_i^j X_i^Gamma for every member i, bitwise.
  void check_port_consistency(const Partition& part) const;
};

struct SnapshotOptions {
  NewtonOptions newton{};
  bool warm_start = true;
};

SnapshotSet generate_snapshots(const Grid2D& grid, const std::vector<ParameterPoint>& params,
                               const Partition& part, const SnapshotOptions& opts = {});

// snapshots.bin and residuals.bin inside `dir`.
void save_snapshots(const SnapshotSet& s, const std::filesystem::path& dir);
SnapshotSet load_snapshots(const std::filesystem::path& dir);

// Per-component affine map of the data range onto [-1, 1].
struct Normalization {
  Vec shift;
  Vec scale;

  static Normalization fit(const Mat& X);
  Mat normalize(const Mat& X) const;
  Mat denormalize(const Mat& Xn) const;
};

struct DataSplit {
  IndexList train;
  IndexList validation;
};

// Seeded uniform shuffle; `validation_fraction` of the columns (at least one) are held out.
DataSplit split_columns(Index n, double validation_fraction, std::uint64_t seed);
Mat select_columns(const Mat& X, const IndexList& cols);

}  // namespace ddrom
