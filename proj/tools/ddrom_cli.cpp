#include "ddrom/benchmark.hpp"
#include "ddrom/bounds.hpp"
#include "ddrom/pod.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace ddrom;

namespace {

constexpr const char* kVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Single-line log records, tagged by pipeline phase.
template <class... Args>
void log(std::string_view phase, fmt::format_string<Args...> f, Args&&... args) {
  fmt::print(stderr, "[{}] {}\n", phase, fmt::format(f, std::forward<Args>(args)...));
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

// Output directory filled in a hidden sibling and renamed into place on commit; an
// uncommitted directory is removed on destruction.
class StagedDir {
 public:
  explicit StagedDir(fs::path out) : out_(fs::absolute(std::move(out)).lexically_normal()) {
    if (out_.filename().empty()) out_ = out_.parent_path();
    fs::create_directories(out_.parent_path());
    tmp_ = out_.parent_path() / fmt::format(".{}.tmp-{}", out_.filename().string(), ::getpid());
    fs::remove_all(tmp_);
    fs::create_directory(tmp_);
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }

  fs::path operator/(const std::string& name) const { return tmp_ / name; }
  const fs::path& path() const { return tmp_; }
  const fs::path& final_path() const { return out_; }

  void commit() {
    fs::path old;
    if (fs::exists(out_)) {
      old = out_.parent_path() / fmt::format(".{}.old-{}", out_.filename().string(), ::getpid());
      fs::remove_all(old);
      fs::rename(out_, old);
    }
    fs::rename(tmp_, out_);
    committed_ = true;
    if (!old.empty()) fs::remove_all(old);
  }

 private:
  fs::path out_, tmp_;
  bool committed_ = false;
};

// Everything a subcommand records in meta.txt.
struct RunInfo {
  std::string command;
  std::uint64_t seed = 0;
  Clock::time_point start = Clock::now();
  const CLI::App* app = nullptr;
};

void write_meta(const StagedDir& dir, const RunInfo& run, KeyValues extra = {}) {
  KeyValues kv{{"command", run.command},
               {"version", kVersion},
               {"seed", std::to_string(run.seed)},
               {"wall_time", num(seconds_since(run.start))},
               {"timestamp", std::to_string(std::time(nullptr))}};
  std::istringstream cfg(run.app->config_to_str(true, false));
  for (std::string line; std::getline(cfg, line);) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '[' || line[0] == '#' || eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\"'");
      const auto e = s.find_last_not_of(" \t\"'");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv.emplace_back("config." + trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (auto& e : extra) kv.push_back(std::move(e));
  write_key_values(dir / "meta.txt", kv);
}

std::pair<int, int> parse_pair(const std::string& s, const char* what) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t p1 = 0, p2 = 0;
    const int a = std::stoi(s.substr(0, x), &p1);
    const int b = std::stoi(s.substr(x + 1), &p2);
    if (p1 != x || p2 != s.size() - x - 1 || a < 1 || b < 1) throw std::invalid_argument(s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("{} must look like AxB with positive integers, got '{}'", what, s));
  }
}

// Problem description stored next to the snapshots; later stages rebuild the grid and
// partition from it.
struct Problem {
  Grid2D grid;
  int nsx = 1, nsy = 1;
  ParameterBox box;
  Partition part;
};

void write_problem(const StagedDir& dir, const Grid2D& g, int nsx, int nsy, int na, int nl) {
  write_key_values(dir / "problem.txt", {{"nx", std::to_string(g.nx)},
                                         {"ny", std::to_string(g.ny)},
                                         {"nu", num(g.nu)},
                                         {"nsx", std::to_string(nsx)},
                                         {"nsy", std::to_string(nsy)},
                                         {"na", std::to_string(na)},
                                         {"nl", std::to_string(nl)}});
}

Problem read_problem(const fs::path& snap_dir) {
  const KeyValues kv = read_key_values(snap_dir / "problem.txt");
  Problem p;
  try {
    p.grid = {std::stoi(lookup(kv, "nx")), std::stoi(lookup(kv, "ny")), std::stod(lookup(kv, "nu"))};
    p.nsx = std::stoi(lookup(kv, "nsx"));
    p.nsy = std::stoi(lookup(kv, "nsy"));
  } catch (const std::logic_error&) {
    throw FormatError("malformed " + (snap_dir / "problem.txt").string());
  }
  p.part = build_partition(p.grid, p.nsx, p.nsy);
  return p;
}

void write_partition_report(const StagedDir& dir, const Partition& part) {
  std::ofstream rep(dir / "partition.txt");
  KeyValues kv{{"subdomains", std::to_string(part.count())},
               {"ports", std::to_string(part.ports.size())},
               {"constraint_rows", std::to_string(part.constraint_rows())}};
  fmt::print(rep, "{:>9} {:>8} {:>8} {:>8}  ports\n", "subdomain", "N_r", "N_int", "N_itf");
  for (int i = 0; i < part.count(); ++i) {
    const Subdomain& s = part[i];
    fmt::print(rep, "{:>9} {:>8} {:>8} {:>8}  {}\n", i, s.res_rows.size(), s.interior_cols.size(), s.interface_cols.size(),
               fmt::join(s.ports, " "));
    const std::string k = fmt::format("subdomain.{}.", i);
    kv.emplace_back(k + "residual_rows", std::to_string(s.res_rows.size()));
    kv.emplace_back(k + "interior", std::to_string(s.interior_cols.size()));
    kv.emplace_back(k + "interface", std::to_string(s.interface_cols.size()));
  }
  fmt::print(rep, "\n{:>4} {:>6}  members\n", "port", "N_p");
  for (std::size_t j = 0; j < part.ports.size(); ++j) {
    const Port& p = part.ports[j];
    fmt::print(rep, "{:>4} {:>6}  {}\n", j, p.cols.size(), fmt::join(p.members, " "));
    kv.emplace_back(fmt::format("port.{}.size", j), std::to_string(p.cols.size()));
    kv.emplace_back(fmt::format("port.{}.members", j), fmt::format("{}", fmt::join(p.members, " ")));
  }
  fmt::print(rep, "\nN_A = {}\n", part.constraint_rows());
  write_key_values(dir / "partition.kv", kv);
}

// ---------------------------------------------------------------------------------------------

struct FomOpts {
  int nx = 0, ny = 0;
  double nu = 0.1, a = 1.0, lambda = 5.0, tol = 1e-8;
  int max_iter = 50;
  std::string out;
};

void run_fom_solve(const FomOpts& o, RunInfo& run) {
  const Grid2D grid{o.nx, o.ny, o.nu};
  grid.validate();
  const ParameterPoint p{o.a, o.lambda};
  if (!p.in_domain()) log("fom", "warning: parameter ({}, {}) lies outside the training box", o.a, o.lambda);
  StagedDir dir(o.out);
  const auto t0 = Clock::now();
  const BurgersFom fom(grid, p);
  NewtonOptions nopt;
  nopt.tol = o.tol;
  nopt.max_iter = o.max_iter;
  const NewtonResult res = solve_monolithic(fom, Vec::Zero(fom.size()), nopt);
  const double t = seconds_since(t0);
  log("fom", "converged iterations={} residual={:.3e} time={:.3f}s", res.iterations, res.residual_norms.back(), t);
  MatrixArchive ar;
  ar.add("state", res.state);
  ar.add("residual_norms", Eigen::Map<const Vec>(res.residual_norms.data(), Index(res.residual_norms.size())));
  ar.save(dir / "state.bin");
  write_meta(dir, run,
             {{"iterations", std::to_string(res.iterations)},
              {"residual_norm", num(res.residual_norms.back())},
              {"solve_time", num(t)},
              {"dofs", std::to_string(fom.size())}});
  dir.commit();
}

struct SnapOpts {
  int nx = 0, ny = 0;
  double nu = 0.1;
  std::string grid = "20x20", subdomains = "2x2", out;
  double tol = 1e-8;
};

void run_snapshots(const SnapOpts& o, RunInfo& run) {
  const Grid2D grid{o.nx, o.ny, o.nu};
  grid.validate();
  const auto [na, nl] = parse_pair(o.grid, "--grid");
  const auto [nsx, nsy] = parse_pair(o.subdomains, "--subdomains");
  if (na < 2 || nl < 2) throw ConfigError("--grid needs at least 2 points per parameter");
  const Partition part = build_partition(grid, nsx, nsy);
  StagedDir dir(o.out);
  const auto t0 = Clock::now();
  SnapshotOptions sopt;
  sopt.newton.tol = o.tol;
  const SnapshotSet s = generate_snapshots(grid, sample_grid({}, na, nl), part, sopt);
  log("snapshots", "generated count={} failures={} time={:.2f}s", s.count(), s.failures.size(), seconds_since(t0));
  save_snapshots(s, dir.path());
  write_problem(dir, grid, nsx, nsy, na, nl);
  write_partition_report(dir, part);
  std::string fails;
  for (const auto& f : s.failures) fails += fmt::format("{}({},{})", fails.empty() ? "" : " ", num(f.a), num(f.lambda));
  write_meta(dir, run,
             {{"grid", o.grid}, {"subdomains", o.subdomains}, {"failures", std::to_string(s.failures.size())},
              {"failed_parameters", fails}});
  dir.commit();
}

struct PodOpts {
  std::string snapshots, out;
  Index ni_omega = 8, ni_gamma = 4, port_n = 0;
  double energy = 0.0;
};

void run_train_pod(const PodOpts& o, RunInfo& run) {
  const Problem pr = read_problem(o.snapshots);
  const SnapshotSet snaps = load_snapshots(o.snapshots);
  StagedDir dir(o.out);
  ModelSet m;
  KeyValues info;
  if (o.energy > 0.0) {
    // Energy mode: every block gets its own dimension.
    m.kind = RomKind::Lsrom;
    for (int i = 0; i < pr.part.count(); ++i) {
      m.pod_interior.push_back(pod(snaps.interior[std::size_t(i)], EnergyTolerance{o.energy}).phi);
      m.pod_interface.push_back(pod(snaps.interface[std::size_t(i)], EnergyTolerance{o.energy}).phi);
    }
    if (o.port_n > 0)
      for (const Mat& X : snaps.ports) m.pod_ports.push_back(pod(X, EnergyTolerance{o.energy}).phi);
  } else {
    m = train_pod_models(pr.part, snaps, o.ni_omega, o.ni_gamma, o.port_n);
  }
  for (std::size_t i = 0; i < m.pod_interior.size(); ++i) {
    info.emplace_back(fmt::format("interior.{}.dim", i), std::to_string(m.pod_interior[i].cols()));
    info.emplace_back(fmt::format("interface.{}.dim", i), std::to_string(m.pod_interface.empty() ? 0 : m.pod_interface[i].cols()));
  }
  for (std::size_t j = 0; j < m.pod_ports.size(); ++j)
    info.emplace_back(fmt::format("port.{}.dim", j), std::to_string(m.pod_ports[j].cols()));
  MatrixArchive ar;
  m.save(ar);
  ar.save(dir / "model.bin");
  write_key_values(dir / "bases.txt", info);
  log("train", "pod bases for {} subdomains and {} ports", m.pod_interior.size(), m.pod_ports.size());
  info.emplace_back("snapshots", fs::absolute(o.snapshots).string());
  write_meta(dir, run, info);
  dir.commit();
}

struct AeOpts {
  std::string snapshots, out, constraint = "wfpc";
  Index ni_omega = 8, ni_gamma = 4, port_n = 2;
  int band = 5, shift = 5, port_band = 3, port_shift = 3, epochs = 500, batch = 32;
  double lr = 1e-3;
};

void run_train_ae(const AeOpts& o, RunInfo& run) {
  const Problem pr = read_problem(o.snapshots);
  const SnapshotSet snaps = load_snapshots(o.snapshots);
  RomSpec spec;
  spec.rom = RomKind::Nmrom;
  spec.constraint = constraint_mode_from_string(o.constraint);
  spec.n_interior = o.ni_omega;
  spec.n_interface = o.ni_gamma;
  spec.port_n = o.port_n;
  spec.band = o.band;
  spec.shift = o.shift;
  spec.port_band = o.port_band;
  spec.port_shift = o.port_shift;
  spec.seed = run.seed;
  spec.train.epochs = o.epochs;
  spec.train.batch_size = o.batch;
  spec.train.learning_rate = o.lr;
  StagedDir dir(o.out);
  const auto t0 = Clock::now();
  NetCache cache;
  const ModelSet m = train_ae_models(pr.part, snaps, spec, cache);
  log("train", "trained {} nets in {:.1f}s", cache.trained(), seconds_since(t0));

  MatrixArchive ar;
  m.save(ar);
  ar.save(dir / "model.bin");
  KeyValues header;
  auto describe = [&](const std::string& role, const std::vector<Autoencoder>& nets, int band, int shift) {
    for (std::size_t i = 0; i < nets.size(); ++i) {
      const Autoencoder& a = nets[i];
      const std::string k = fmt::format("{}.{}.", role, i);
      header.emplace_back(k + "full_dim", std::to_string(a.full_dim()));
      header.emplace_back(k + "latent_dim", std::to_string(a.latent_dim()));
      header.emplace_back(k + "width", std::to_string(a.width()));
      header.emplace_back(k + "nnz", std::to_string(a.pattern.nnz()));
      header.emplace_back(k + "parameters", std::to_string(a.parameter_count()));
      header.emplace_back(k + "activation", to_string(a.act));
      header.emplace_back(k + "band", std::to_string(band));
      header.emplace_back(k + "shift", std::to_string(shift));
      header.emplace_back(k + "norm_shift_min", num(a.norm.shift.minCoeff()));
      header.emplace_back(k + "norm_scale_max", num(a.norm.scale.maxCoeff()));
      header.emplace_back(k + "seed", std::to_string(net_seed(spec.seed, role == "interior" ? 0 : role == "interface" ? 1 : 2, int(i))));
    }
  };
  describe("interior", m.ae_interior, o.band, o.shift);
  describe("interface", m.ae_interface, o.band, o.shift);
  describe("port", m.ae_ports, o.port_band, o.port_shift);
  write_key_values(dir / "nets.txt", header);

  std::ofstream hist(dir / "history.csv");
  hist << "net,epoch,train_loss,validation_loss,learning_rate\n";
  for (const auto& [key, h] : cache.histories())
    for (std::size_t e = 0; e < h.train_loss.size(); ++e)
      hist << key << ',' << e << ',' << num(h.train_loss[e]) << ',' << num(h.validation_loss[e]) << ','
           << num(h.learning_rate[e]) << '\n';
  KeyValues extra{{"snapshots", fs::absolute(o.snapshots).string()}};
  for (const auto& [key, h] : cache.histories()) extra.emplace_back("best_validation." + key, num(h.best_validation));
  write_meta(dir, run, extra);
  dir.commit();
}

struct HrOpts {
  std::string snapshots, out, mode = "collocation";
  Index samples = 100;
  double residual_energy = 1e-10;
};

void run_hr_build(const HrOpts& o, RunInfo& run) {
  const Problem pr = read_problem(o.snapshots);
  const SnapshotSet snaps = load_snapshots(o.snapshots);
  const HrMode mode = hr_mode_from_string(o.mode);
  if (mode == HrMode::None) throw ConfigError("hr-build needs --mode collocation or gappy");
  if (snaps.residuals.empty()) throw FormatError("snapshot directory has no residuals.bin");
  StagedDir dir(o.out);
  const HrSamples s = sample_residual_rows(pr.part, o.samples, snaps.residuals, o.residual_energy);
  make_hr_operators(pr.part, mode, s);  // surfaces a singular gappy system before anything is written
  MatrixArchive ar;
  s.save(ar);
  ar.save(dir / "hr.bin");
  KeyValues info{{"mode", o.mode}, {"snapshots", fs::absolute(o.snapshots).string()}};
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    info.emplace_back(fmt::format("subdomain.{}.samples", i), std::to_string(s.rows[i].size()));
    info.emplace_back(fmt::format("subdomain.{}.residual_basis", i), std::to_string(s.bases[i].cols()));
  }
  write_key_values(dir / "hr.txt", info);
  log("hr", "sampled {} rows per subdomain ({})", o.samples, o.mode);
  write_meta(dir, run, info);
  dir.commit();
}

// Shared by rom-solve and verify-bounds.
struct RomOpts {
  std::string snapshots, model, rom = "lsrom", constraint = "wfpc", hr = "none", hr_dir, out;
  Index nc = 0, hr_samples = 100;
  double tol = 1e-4, a = 7692.5384, lambda = 21.9230;
  int max_iter = 15;
};

struct LoadedRom {
  Problem pr;
  RomInstance inst;
};

LoadedRom load_rom(const RomOpts& o, std::uint64_t seed) {
  LoadedRom r{read_problem(o.snapshots), {}};
  const SnapshotSet snaps = load_snapshots(o.snapshots);
  const ModelSet m = ModelSet::load(MatrixArchive::load(fs::path(o.model) / "model.bin"));
  if (m.kind != rom_kind_from_string(o.rom))
    throw ConfigError(fmt::format("--rom {} does not match the model in {} ({})", o.rom, o.model, to_string(m.kind)));
  r.inst = make_instance(r.pr.grid, r.pr.part, m, constraint_mode_from_string(o.constraint), o.nc, seed);
  fit_initializer(r.inst, snaps, r.pr.box);
  const HrMode mode = hr_mode_from_string(o.hr);
  if (mode != HrMode::None) {
    const HrSamples s = o.hr_dir.empty() ? sample_residual_rows(r.pr.part, o.hr_samples, snaps.residuals)
                                         : HrSamples::load(MatrixArchive::load(fs::path(o.hr_dir) / "hr.bin"));
    r.inst.hr = make_hr_operators(r.pr.part, mode, s);
  }
  return r;
}

void run_rom_solve(const RomOpts& o, bool skip_error, RunInfo& run) {
  const ParameterPoint p{o.a, o.lambda};
  const LoadedRom r = load_rom(o, run.seed);
  StagedDir dir(o.out);
  RomSolveConfig cfg;
  cfg.sqp.tol = o.tol;
  cfg.sqp.max_iter = o.max_iter;
  const RomSolution sol = solve_rom(r.inst, p, cfg);
  if (sol.extrapolated) log("init", "warning: ({}, {}) is far outside the training box", o.a, o.lambda);
  log("init", "time={:.4f}s", sol.init_time);
  log("solve", "iterations={} converged={} merit={:.3e} modeled_time={:.4f}s", sol.sqp.iterations, sol.sqp.converged,
      sol.sqp.merit.back(), sol.solve_time);

  MatrixArchive lat, dec;
  for (std::size_t i = 0; i < sol.latent.size(); ++i) {
    lat.add("latent/" + std::to_string(i), sol.latent[i]);
    dec.add("interior/" + std::to_string(i), sol.interior[i]);
    dec.add("interface/" + std::to_string(i), sol.interface[i]);
  }
  lat.add("lambda", sol.lambda);
  const Vec global = assemble_global(r.pr.part, sol.interior, sol.interface);
  dec.add("state", global);
  lat.save(dir / "latent.bin");
  dec.save(dir / "decoded.bin");

  std::ofstream tr(dir / "trace.csv");
  tr << "iteration,merit,objective,step_size,kkt_residual\n";
  const auto& s = sol.sqp;
  for (std::size_t k = 0; k < s.merit.size(); ++k) {
    const double step = k > 0 && k - 1 < s.step_size.size() ? s.step_size[k - 1] : std::nan("");
    const double kkt = k > 0 && k - 1 < s.kkt_residual.size() ? s.kkt_residual[k - 1] : std::nan("");
    tr << k << ',' << num(s.merit[k]) << ',' << (k < s.objective.size() ? num(s.objective[k]) : "nan") << ','
       << num(step) << ',' << num(kkt) << '\n';
  }

  KeyValues summary{{"converged", s.converged ? "1" : "0"},
                    {"line_search_failed", s.line_search_failed ? "1" : "0"},
                    {"iterations", std::to_string(s.iterations)},
                    {"latent_dofs", std::to_string(r.inst.total_dim())},
                    {"constraint_rows", std::to_string(r.inst.constraint_rows())},
                    {"init_time", num(sol.init_time)},
                    {"solve_time", num(sol.solve_time)},
                    {"per_iteration_time", num(sol.per_iteration_time())},
                    {"residual_rows_evaluated", std::to_string(sol.residual_rows_evaluated)},
                    {"extrapolated", sol.extrapolated ? "1" : "0"}};
  if (!skip_error) {
    Vec ref;
    const double fom_time = time_fom_solve(r.pr.grid, p, 1, &ref);
    const double e = relative_error(r.pr.part, ref, sol);
    summary.emplace_back("error", num(e));
    summary.emplace_back("fom_time", num(fom_time));
    summary.emplace_back("speedup", num(fom_time / (sol.init_time + sol.solve_time)));
    log("solve", "relative_error={:.4e}", e);
  }
  write_key_values(dir / "summary.txt", summary);
  write_meta(dir, run, summary);
  dir.commit();
  if (!s.converged) log("solve", "warning: SQP did not converge, see trace.csv");
}

void run_verify_bounds(const RomOpts& o, Index samples, RunInfo& run) {
  const ParameterPoint p{o.a, o.lambda};
  const LoadedRom r = load_rom(o, run.seed);
  StagedDir dir(o.out);
  RomSolveConfig cfg;
  cfg.sqp.tol = o.tol;
  cfg.sqp.max_iter = o.max_iter;
  const RomSolution sol = solve_rom(r.inst, p, cfg);
  Vec ref;
  time_fom_solve(r.pr.grid, p, 1, &ref);
  const BoundDiagnostics d = verify_bounds(r.inst, p, sol, ref, samples, run.seed);
  std::ofstream f(dir / "bounds.txt");
  fmt::print(f,
             "# Constants are sampled estimates, not certified values.\n"
             "samples = {}\nseed = {}\nkappa_l = {}\nP = {}\nkappa_u = {}\n"
             "lhs = {}\nweighted_residual = {}\nrhs = {}\na_posteriori_holds = {}\n"
             "best_feasible = {}\na_priori_rhs = {}\na_priori_holds = {}\n"
             "kappa_l_random_pairs = {}\nrhs_random_pairs = {}\nrandom_pairs_hold = {}\n",
             d.samples, d.seed, num(d.kappa_l), num(d.P), num(d.kappa_u), num(d.lhs), num(d.weighted_residual),
             num(d.rhs), int(d.a_posteriori_holds()), num(d.best_feasible), num(d.a_priori_rhs),
             int(d.a_priori_holds()), num(d.kappa_l_random), num(d.rhs_random), int(d.random_pairs_hold()));
  f.close();
  log("bounds", "lhs={:.3e} rhs={:.3e} kappa_l={:.3e} P={:.3e} holds={}", d.lhs, d.rhs, d.kappa_l, d.P,
      d.a_posteriori_holds());
  write_meta(dir, run, {{"a_posteriori_holds", d.a_posteriori_holds() ? "1" : "0"}});
  dir.commit();
}

struct BenchOpts {
  std::string plan, out, cache;
};

void run_benchmark_cmd(const BenchOpts& o, RunInfo& run) {
  const KeyValues kv = read_key_values(o.plan);
  BenchmarkPlan plan = parse_plan(kv);
  StagedDir dir(o.out);
  SnapshotSet snaps;
  if (!plan.snapshot_dir.empty()) {
    const Problem pr = read_problem(plan.snapshot_dir);
    if (pr.grid.nx != plan.grid.nx || pr.grid.ny != plan.grid.ny || pr.grid.nu != plan.grid.nu || pr.nsx != plan.nsx ||
        pr.nsy != plan.nsy)
      throw ConfigError("plan [problem] does not match the snapshots in " + plan.snapshot_dir);
    snaps = load_snapshots(plan.snapshot_dir);
  } else {
    const auto t0 = Clock::now();
    snaps = generate_snapshots(plan.grid, sample_grid(plan.box, plan.na, plan.nl),
                               build_partition(plan.grid, plan.nsx, plan.nsy));
    log("snapshots", "generated count={} time={:.2f}s", snaps.count(), seconds_since(t0));
  }
  NetCache cache;
  if (!o.cache.empty() && fs::exists(o.cache)) cache.load(o.cache);
  log("benchmark", "cells={} tests={}", plan.specs.size(), plan.tests.size());
  const auto recs = run_benchmark(plan, snaps, cache);
  if (!o.cache.empty() && cache.trained() > 0) cache.save(o.cache);
  write_records_csv(dir / "records.csv", recs);
  write_pareto_csv(dir / "pareto.csv", recs);
  fs::copy_file(o.plan, dir / "plan.txt");
  std::size_t failed = 0;
  for (const auto& r : recs) failed += r.status != "ok";
  log("benchmark", "records={} failed={}", recs.size(), failed);
  write_meta(dir, run, {{"records", std::to_string(recs.size())}, {"failed_cells", std::to_string(failed)}});
  dir.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-decomposition reduced-order models for 2D steady Burgers", "ddrom"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "INI file with one [subcommand] section per subcommand");
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  RunInfo run;
  std::function<void()> action;

  FomOpts fo;
  auto* fom = app.add_subcommand("fom-solve", "Monolithic Newton solve of the full-order model");
  fom->add_option("--nx", fo.nx, "interior grid points in x")->required()->check(CLI::PositiveNumber);
  fom->add_option("--ny", fo.ny, "interior grid points in y")->required()->check(CLI::PositiveNumber);
  fom->add_option("--nu", fo.nu, "viscosity")->check(CLI::PositiveNumber);
  fom->add_option("--a", fo.a, "parameter a")->required();
  fom->add_option("--lambda", fo.lambda, "parameter lambda")->required();
  fom->add_option("--tol", fo.tol, "residual 2-norm tolerance")->check(CLI::PositiveNumber);
  fom->add_option("--max-iter", fo.max_iter, "Newton iteration limit")->check(CLI::PositiveNumber);
  fom->add_option("--out", fo.out, "output directory")->required();
  fom->add_option("--seed", run.seed, "recorded for reproducibility");
  fom->callback([&] { action = [&] { run_fom_solve(fo, run); }; });

  SnapOpts so;
  auto* snap = app.add_subcommand("snapshots", "FOM snapshots on a tensor parameter grid, restricted to subdomains");
  snap->add_option("--nx", so.nx)->required()->check(CLI::PositiveNumber);
  snap->add_option("--ny", so.ny)->required()->check(CLI::PositiveNumber);
  snap->add_option("--nu", so.nu)->check(CLI::PositiveNumber);
  snap->add_option("--grid", so.grid, "parameter grid NAxNL");
  snap->add_option("--subdomains", so.subdomains, "subdomain layout NXxNY");
  snap->add_option("--tol", so.tol, "Newton tolerance")->check(CLI::PositiveNumber);
  snap->add_option("--out", so.out)->required();
  snap->add_option("--seed", run.seed, "recorded for reproducibility");
  snap->callback([&] { action = [&] { run_snapshots(so, run); }; });

  PodOpts po;
  auto* tpod = app.add_subcommand("train-pod", "POD bases per subdomain and port");
  tpod->add_option("--snapshots", po.snapshots)->required()->check(CLI::ExistingDirectory);
  tpod->add_option("--ni-omega", po.ni_omega, "interior basis size")->check(CLI::PositiveNumber);
  tpod->add_option("--ni-gamma", po.ni_gamma, "interface basis size (0 skips)")->check(CLI::NonNegativeNumber);
  tpod->add_option("--port-n", po.port_n, "port basis size cap (0 skips the port bases)")->check(CLI::NonNegativeNumber);
  tpod->add_option("--energy", po.energy, "energy tolerance; overrides the fixed sizes when positive")
      ->check(CLI::Range(0.0, 1.0));
  tpod->add_option("--out", po.out)->required();
  tpod->add_option("--seed", run.seed, "recorded for reproducibility");
  tpod->callback([&] { action = [&] { run_train_pod(po, run); }; });

  AeOpts ao;
  auto* tae = app.add_subcommand("train-ae", "Sparse shallow autoencoders per subdomain or port");
  tae->add_option("--snapshots", ao.snapshots)->required()->check(CLI::ExistingDirectory);
  tae->add_option("--ni-omega", ao.ni_omega)->check(CLI::PositiveNumber);
  tae->add_option("--ni-gamma", ao.ni_gamma)->check(CLI::PositiveNumber);
  tae->add_option("--band", ao.band, "mask band width")->check(CLI::PositiveNumber);
  tae->add_option("--shift", ao.shift, "mask shift")->check(CLI::PositiveNumber);
  tae->add_option("--port-band", ao.port_band)->check(CLI::PositiveNumber);
  tae->add_option("--port-shift", ao.port_shift)->check(CLI::PositiveNumber);
  tae->add_option("--epochs", ao.epochs)->check(CLI::PositiveNumber);
  tae->add_option("--batch", ao.batch)->check(CLI::PositiveNumber);
  tae->add_option("--lr", ao.lr)->check(CLI::PositiveNumber);
  tae->add_option("--constraint", ao.constraint)->check(CLI::IsMember({"wfpc", "srpc"}));
  tae->add_option("--port-n", ao.port_n, "port latent size cap")->check(CLI::PositiveNumber);
  tae->add_option("--seed", run.seed);
  tae->add_option("--out", ao.out)->required();
  tae->callback([&] { action = [&] { run_train_ae(ao, run); }; });

  HrOpts ho;
  auto* hr = app.add_subcommand("hr-build", "Residual bases and greedy sample rows per subdomain");
  hr->add_option("--snapshots", ho.snapshots)->required()->check(CLI::ExistingDirectory);
  hr->add_option("--mode", ho.mode)->check(CLI::IsMember({"collocation", "gappy"}));
  hr->add_option("--samples", ho.samples)->check(CLI::PositiveNumber);
  hr->add_option("--residual-energy", ho.residual_energy)->check(CLI::Range(0.0, 1.0));
  hr->add_option("--seed", run.seed, "recorded for reproducibility");
  hr->add_option("--out", ho.out)->required();
  hr->callback([&] { action = [&] { run_hr_build(ho, run); }; });

  auto add_rom_options = [](CLI::App* sc, RomOpts& ro, RunInfo& ri) {
    sc->add_option("--snapshots", ro.snapshots)->required()->check(CLI::ExistingDirectory);
    sc->add_option("--model", ro.model, "directory written by train-pod or train-ae")->required()->check(CLI::ExistingDirectory);
    sc->add_option("--rom", ro.rom)->check(CLI::IsMember({"lsrom", "nmrom"}));
    sc->add_option("--constraint", ro.constraint)->check(CLI::IsMember({"wfpc", "srpc"}));
    sc->add_option("--hr", ro.hr)->check(CLI::IsMember({"none", "collocation", "gappy"}));
    sc->add_option("--hr-dir", ro.hr_dir, "directory written by hr-build")->check(CLI::ExistingDirectory);
    sc->add_option("--hr-samples", ro.hr_samples, "samples per subdomain without --hr-dir")->check(CLI::PositiveNumber);
    sc->add_option("--nc", ro.nc, "WFPC test rows (0: default)")->check(CLI::NonNegativeNumber);
    sc->add_option("--tol", ro.tol)->check(CLI::PositiveNumber);
    sc->add_option("--max-iter", ro.max_iter)->check(CLI::PositiveNumber);
    sc->add_option("--a", ro.a);
    sc->add_option("--lambda", ro.lambda);
    sc->add_option("--seed", ri.seed, "test matrix and sampling seed");
    sc->add_option("--out", ro.out)->required();
  };

  RomOpts ro;
  bool skip_error = false;
  auto* rs = app.add_subcommand("rom-solve", "Solve a trained ROM at one parameter");
  add_rom_options(rs, ro, run);
  rs->add_flag("--skip-error", skip_error, "do not solve the FOM for the error");
  rs->callback([&] { action = [&] { run_rom_solve(ro, skip_error, run); }; });

  BenchOpts bo;
  auto* bench = app.add_subcommand("benchmark", "Run a sweep plan; writes records.csv and pareto.csv");
  bench->add_option("--plan", bo.plan, "key-value plan file")->required()->check(CLI::ExistingFile);
  bench->add_option("--cache", bo.cache, "net cache archive, read and updated");
  bench->add_option("--seed", run.seed, "recorded for reproducibility; cell seeds come from the plan");
  bench->add_option("--out", bo.out)->required();
  bench->callback([&] { action = [&] { run_benchmark_cmd(bo, run); }; });

  RomOpts vo;
  Index bound_samples = 200;
  auto* vb = app.add_subcommand("verify-bounds", "Sampled-constant error bound diagnostics; writes bounds.txt");
  add_rom_options(vb, vo, run);
  vb->add_option("--samples", bound_samples, "sample pairs (at least 100)")->check(CLI::Range(Index(100), Index(1) << 40));
  vb->callback([&] { action = [&] { run_verify_bounds(vo, bound_samples, run); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const CLI::App* sc : app.get_subcommands()) {
    run.command = sc->get_name();
    run.app = sc;
  }
  try {
    action();
    return 0;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: usage: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}: {}\n", run.command, e.what());
    return 1;
  }
}
