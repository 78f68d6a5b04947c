#pragma once

#include "ddrom/autoencoder.hpp"
#include "ddrom/common.hpp"
#include "ddrom/fom.hpp"
#include "ddrom/hyper_reduction.hpp"
#include "ddrom/matrix_io.hpp"
#include "ddrom/partition.hpp"
#include "ddrom/snapshots.hpp"
#include "ddrom/sqp.hpp"

#include <memory>

namespace ddrom {

// Evaluates a fixed subset of decoder outputs and their latent Jacobian rows.
class RowDecoder {
 public:
  virtual ~RowDecoder() = default;
  virtual void evaluate(const Vec& xh, Vec& values, Mat& jacobian) const = 0;
};

// Decoder g and encoder h between a subdomain state block and its latent coordinates.
class ReductionMap {
 public:
  virtual ~ReductionMap() = default;
  virtual Index full_dim() const = 0;
  virtual Index latent_dim() const = 0;
  virtual Vec decode(const Vec& xh) const = 0;
  virtual Mat jacobian(const Vec& xh) const = 0;
  virtual Vec encode(const Vec& x) const = 0;
  virtual std::unique_ptr<RowDecoder> restrict_to(const IndexList& outputs) const = 0;
  // Linear maps have a constant Jacobian, available as jacobian(anything).
  virtual bool is_linear() const { return false; }
};

using MapPtr = std::shared_ptr<const ReductionMap>;

MapPtr make_linear_map(Mat phi);
MapPtr make_identity_map(Index n);
MapPtr make_autoencoder_map(Autoencoder ae);

// Thin-plate spline r^2 log r plus a linear polynomial, on parameters scaled to the unit square.
class RbfInterpolator {
 public:
  RbfInterpolator() = default;
  RbfInterpolator(const std::vector<ParameterPoint>& centers, const Mat& values, const ParameterBox& box);

  bool fitted() const { return weights_.size() > 0; }
  Index output_dim() const { return weights_.cols(); }
  Vec operator()(const ParameterPoint& p) const;
  // More than 10% of the box width outside the training box.
  bool extrapolates(const ParameterPoint& p) const;

  void save(MatrixArchive& ar, const std::string& prefix) const;
  static RbfInterpolator load(const MatrixArchive& ar, const std::string& prefix);

 private:
  Eigen::Vector2d scaled(const ParameterPoint& p) const;
  ParameterBox box_;
  Mat centers_;  // m x 2, scaled
  Mat weights_;  // m x d
  Mat poly_;     // 3 x d
};

enum class ConstraintMode { Wfpc, Srpc };
std::string to_string(ConstraintMode m);
ConstraintMode constraint_mode_from_string(const std::string& s);

struct RomInstance {
  Grid2D grid;
  Partition part;
  std::vector<MapPtr> interior;
  std::vector<MapPtr> interface;  // SRPC: assembled from the port maps
  ConstraintMode mode = ConstraintMode::Wfpc;
  Mat test_matrix;  // WFPC: n_C x N_A
  std::vector<MapPtr> ports;  // SRPC only
  std::vector<Index> port_dims;
  std::vector<HrOperator> hr;  // one per subdomain; empty means no hyper-reduction
  RbfInterpolator initializer;  // stacked latent layout, see initializer_values

  Index block_dim(int i) const { return interior[std::size_t(i)]->latent_dim() + interface[std::size_t(i)]->latent_dim(); }
  Index total_dim() const;
  Index constraint_rows() const;
  void validate() const;
};

// Entries i.i.d. N(0, 1) / sqrt(n_c).
Mat gaussian_test_matrix(Index n_c, Index n_a, std::uint64_t seed);

// Number of WFPC test rows used when none is given.
Index default_test_rows(const Partition& part, std::span<const Index> interface_dims);

RomInstance wfpc_instance(const Grid2D& grid, const Partition& part, std::vector<MapPtr> interior,
                          std::vector<MapPtr> interface, Mat test_matrix);
RomInstance srpc_linear_instance(const Grid2D& grid, const Partition& part, std::vector<MapPtr> interior,
                                 const std::vector<Mat>& port_bases);
RomInstance srpc_autoencoder_instance(const Grid2D& grid, const Partition& part, std::vector<MapPtr> interior,
                                      const std::vector<Autoencoder>& port_nets);
// Identity maps, no hyper-reduction, WFPC with C = I: the decomposed full-order problem.
RomInstance dd_fom_instance(const Grid2D& grid, const Partition& part);

// Latent training coordinates in the initializer's stacked layout, one column per snapshot.
Mat initializer_values(const RomInstance& inst, const SnapshotSet& snaps);
void fit_initializer(RomInstance& inst, const SnapshotSet& snaps, const ParameterBox& box);

// Residual POD basis per subdomain (energy criterion, at most `samples` vectors), greedy
// rows, and the weighting operator.
void attach_hyper_reduction(RomInstance& inst, HrMode mode, Index samples, const std::vector<Mat>& residual_snapshots,
                            double residual_energy = 1e-10);

// The SQP problem of an instance at one parameter. Owns the evaluators the blocks refer to.
class RomProblem {
 public:
  RomProblem(const RomInstance& inst, const ParameterPoint& p);
  ~RomProblem();
  RomProblem(const RomProblem&) = delete;
  RomProblem& operator=(const RomProblem&) = delete;

  const SqpProblem& problem() const { return prob_; }
  const BurgersFom& fom() const { return fom_; }
  // Residual rows evaluated so far, over all blocks.
  std::size_t residual_rows_evaluated() const;

 private:
  struct Block;
  BurgersFom fom_;
  SpMat pattern_;
  std::vector<std::unique_ptr<Block>> blocks_;
  SqpProblem prob_;
};

struct RomSolveConfig {
  SqpConfig sqp{};
  bool use_initializer = true;  // otherwise zero latents
};

struct RomSolution {
  std::vector<Vec> latent;
  Vec lambda;
  std::vector<Vec> interior;   // decoded with the full decoders
  std::vector<Vec> interface;
  SqpResult sqp;
  double init_time = 0.0;  // initializer + multiplier least squares
  double solve_time = 0.0;  // modeled SQP time (slowest block per evaluation)
  double wall_time = 0.0;
  std::size_t residual_rows_evaluated = 0;
  bool extrapolated = false;

  double per_iteration_time() const { return solve_time / std::max(1, sqp.iterations); }
};

RomSolution solve_rom(const RomInstance& inst, const ParameterPoint& p, const RomSolveConfig& cfg = {});

// Relative error averaged over subdomains (root of the mean of squared block errors).
double relative_error(const std::vector<Vec>& ref_interior, const std::vector<Vec>& ref_interface,
                      const std::vector<Vec>& rom_interior, const std::vector<Vec>& rom_interface);
double relative_error(const Partition& part, const Vec& fom_state, const RomSolution& rom);

// Global state from decoded subdomain blocks (interface values taken from the owning subdomain
// with the lowest index).
Vec assemble_global(const Partition& part, const std::vector<Vec>& interior, const std::vector<Vec>& interface);

}  // namespace ddrom
