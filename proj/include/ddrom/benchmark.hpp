#pragma once

#include "ddrom/autoencoder.hpp"
#include "ddrom/matrix_io.hpp"
#include "ddrom/rom.hpp"
#include "ddrom/snapshots.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace ddrom {

// n_j^p = max(min(N_j^p - 1, n_tilde), 1)
std::vector<Index> port_latent_dims(const Partition& part, Index n_tilde);

enum class RomKind { Lsrom, Nmrom };
std::string to_string(RomKind k);
RomKind rom_kind_from_string(const std::string& s);

struct RomSpec {
  RomKind rom = RomKind::Lsrom;
  ConstraintMode constraint = ConstraintMode::Wfpc;
  Index n_interior = 8;
  Index n_interface = 4;  // WFPC
  Index port_n = 2;       // SRPC: n_tilde
  HrMode hr = HrMode::None;
  Index samples = 100;
  double residual_energy = 1e-10;
  Index nc = 0;  // WFPC test rows; 0 picks default_test_rows
  std::uint64_t seed = 0;
  TrainConfig train{};
  int band = 5, shift = 5;            // interior and interface masks
  int port_band = 3, port_shift = 3;  // port masks
};

// Trained bases or nets for every subdomain (interior, interface) and port. Interface
// entries are only needed for WFPC and port entries only for SRPC.
struct ModelSet {
  RomKind kind = RomKind::Lsrom;
  std::vector<Mat> pod_interior, pod_interface, pod_ports;
  std::vector<Autoencoder> ae_interior, ae_interface, ae_ports;

  bool has_interface() const;
  bool has_ports() const;
  void save(MatrixArchive& ar) const;
  static ModelSet load(const MatrixArchive& ar);
};

// POD bases with fixed dimensions; port_n = 0 skips the port bases and n_interface = 0 the
// interface bases. Port dimensions follow port_latent_dims.
ModelSet train_pod_models(const Partition& part, const SnapshotSet& snaps, Index n_interior, Index n_interface,
                          Index port_n);

// WFPC or SRPC instance from a model set; `nc` = 0 picks default_test_rows.
RomInstance make_instance(const Grid2D& grid, const Partition& part, const ModelSet& m, ConstraintMode mode, Index nc,
                          std::uint64_t seed);

// Trained nets keyed by role, block index, latent size, mask and training settings, so that
// sweeps reuse them across constraint and hyper-reduction settings.
class NetCache {
 public:
  const Autoencoder& get_or_train(const std::string& role, int index, const Mat& X, Index latent, int band, int shift,
                                  Activation act, const TrainConfig& cfg);
  std::size_t size() const { return nets_.size(); }
  std::size_t trained() const { return trained_; }
  void save(const std::filesystem::path& file) const;
  void load(const std::filesystem::path& file);
  const std::map<std::string, TrainHistory>& histories() const { return histories_; }

 private:
  std::map<std::string, Autoencoder> nets_;
  std::map<std::string, TrainHistory> histories_;
  std::size_t trained_ = 0;
};

// Seed of net `index` with role 0 interior, 1 interface, 2 port.
std::uint64_t net_seed(std::uint64_t base, int role, int index);

// Nets for a spec, trained through the cache.
ModelSet train_ae_models(const Partition& part, const SnapshotSet& snaps, const RomSpec& spec, NetCache& cache);

RomInstance build_rom(const Grid2D& grid, const Partition& part, const SnapshotSet& snaps, const RomSpec& spec,
                      NetCache& cache, const ParameterBox& box = {});

struct BenchmarkRecord {
  RomSpec spec;
  ParameterPoint p;
  Index dofs = 0;
  double error = 0.0;
  double fom_time = 0.0;
  double rom_time = 0.0;   // initial guess + modeled SQP time
  double init_time = 0.0;
  double per_iteration_time = 0.0;
  double speedup = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status = "ok";  // otherwise the failure message; numeric fields are then NaN
};

struct BenchmarkPlan {
  Grid2D grid{120, 12, 0.1};
  int nsx = 2, nsy = 2;
  ParameterBox box{};
  int na = 20, nl = 20;
  std::vector<ParameterPoint> tests{{7692.5384, 21.9230}};
  std::vector<RomSpec> specs;
  int timing_repeats = 3;
  std::string snapshot_dir;  // empty: generate from the grid settings
};

// Plan file: [problem] nx ny nu nsx nsy; [snapshots] na nl; [test] a lambda (comma lists);
// [sweep] rom constraint dims port_n hr samples nc epochs seed timing_repeats (comma lists, dims as
// n_interior:n_interface). The sweep is the cartesian product of the lists.
BenchmarkPlan parse_plan(const KeyValues& kv);

std::vector<BenchmarkRecord> run_benchmark(const BenchmarkPlan& plan, const SnapshotSet& snaps, NetCache& cache);

// Fixed CSV schemas; pareto.csv keeps the non-dominated (relative time, error) records per
// (rom, constraint, test parameter). Relative time is rom_time / fom_time.
extern const char* const kRecordsHeader;
extern const char* const kParetoHeader;
void write_records_csv(const std::filesystem::path& file, const std::vector<BenchmarkRecord>& recs);
void write_pareto_csv(const std::filesystem::path& file, const std::vector<BenchmarkRecord>& recs);

// Minimum monolithic Newton wall time over `repeats` runs from a zero state.
double time_fom_solve(const Grid2D& grid, const ParameterPoint& p, int repeats, Vec* state = nullptr);

}  // namespace ddrom
