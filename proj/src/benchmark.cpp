#include "ddrom/benchmark.hpp"

#include "ddrom/pod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

namespace ddrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty entry in list '" + s + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T x{};
  is >> x;
  if (!is || !is.eof()) throw ConfigError("bad value for " + key + ": '" + v + "'");
  return x;
}

template <class T>
std::vector<T> number_list(const KeyValues& kv, const std::string& key, const std::string& fallback) {
  std::vector<T> out;
  for (const auto& s : split_list(lookup_or(kv, key, fallback))) out.push_back(parse_number<T>(key, s));
  return out;
}

std::string net_key(const std::string& role, int index, const Mat& X, Index latent, int band, int shift, Activation act,
                    const TrainConfig& c) {
  std::ostringstream k;
  k << role << '.' << index << ".N" << X.rows() << ".m" << X.cols() << ".n" << latent << ".b" << band << ".s" << shift
    << '.' << to_string(act) << ".e" << c.epochs << ".bs" << c.batch_size << ".lr" << std::setprecision(17)
    << c.learning_rate << ".p" << c.plateau_patience << ".f" << c.plateau_factor << ".sp" << c.stop_patience << ".v"
    << c.validation_fraction << ".seed" << c.seed;
  return k.str();
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string csv_field(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string spec_echo(const RomSpec& s) {
  std::ostringstream os;
  os << to_string(s.rom) << ',' << to_string(s.constraint) << ',' << to_string(s.hr) << ',' << s.n_interior << ','
     << s.n_interface << ',' << s.port_n << ',' << s.samples << ',' << s.nc;
  return os.str();
}

}  // namespace

std::vector<Index> port_latent_dims(const Partition& part, Index n_tilde) {
  std::vector<Index> dims;
  for (const Port& p : part.ports) dims.push_back(std::max<Index>(std::min<Index>(Index(p.cols.size()) - 1, n_tilde), 1));
  return dims;
}

std::string to_string(RomKind k) { return k == RomKind::Lsrom ? "lsrom" : "nmrom"; }

RomKind rom_kind_from_string(const std::string& s) {
  if (s == "lsrom") return RomKind::Lsrom;
  if (s == "nmrom") return RomKind::Nmrom;
  throw ConfigError("unknown rom type '" + s + "' (expected lsrom or nmrom)");
}

// ---------------------------------------------------------------------------------------------

bool ModelSet::has_interface() const {
  return kind == RomKind::Lsrom ? !pod_interface.empty() : !ae_interface.empty();
}

bool ModelSet::has_ports() const { return kind == RomKind::Lsrom ? !pod_ports.empty() : !ae_ports.empty(); }

void ModelSet::save(MatrixArchive& ar) const {
  Mat meta(1, 4);
  meta << double(kind == RomKind::Nmrom), 0, 0, 0;
  auto save_group = [&](const char* name, Index count, auto&& put) {
    for (Index i = 0; i < count; ++i) put(std::string("model/") + name + "/" + std::to_string(i), std::size_t(i));
  };
  if (kind == RomKind::Lsrom) {
    meta(0, 1) = double(pod_interior.size());
    meta(0, 2) = double(pod_interface.size());
    meta(0, 3) = double(pod_ports.size());
    ar.add("model/meta", meta);
    save_group("interior", meta(0, 1), [&](const std::string& k, std::size_t i) { ar.add(k, pod_interior[i]); });
    save_group("interface", meta(0, 2), [&](const std::string& k, std::size_t i) { ar.add(k, pod_interface[i]); });
    save_group("port", meta(0, 3), [&](const std::string& k, std::size_t i) { ar.add(k, pod_ports[i]); });
  } else {
    meta(0, 1) = double(ae_interior.size());
    meta(0, 2) = double(ae_interface.size());
    meta(0, 3) = double(ae_ports.size());
    ar.add("model/meta", meta);
    save_group("interior", meta(0, 1), [&](const std::string& k, std::size_t i) { ae_interior[i].save(ar, k); });
    save_group("interface", meta(0, 2), [&](const std::string& k, std::size_t i) { ae_interface[i].save(ar, k); });
    save_group("port", meta(0, 3), [&](const std::string& k, std::size_t i) { ae_ports[i].save(ar, k); });
  }
}

ModelSet ModelSet::load(const MatrixArchive& ar) {
  const Mat& meta = ar.get("model/meta");
  if (meta.rows() != 1 || meta.cols() != 4) throw FormatError("model/meta must be 1 x 4");
  ModelSet m;
  m.kind = meta(0, 0) != 0.0 ? RomKind::Nmrom : RomKind::Lsrom;
  const char* names[] = {"interior", "interface", "port"};
  for (int g = 0; g < 3; ++g) {
    for (Index i = 0; i < Index(meta(0, g + 1)); ++i) {
      const std::string k = std::string("model/") + names[g] + "/" + std::to_string(i);
      if (m.kind == RomKind::Lsrom) {
        auto& dst = g == 0 ? m.pod_interior : g == 1 ? m.pod_interface : m.pod_ports;
        dst.push_back(ar.get(k));
      } else {
        auto& dst = g == 0 ? m.ae_interior : g == 1 ? m.ae_interface : m.ae_ports;
        dst.push_back(Autoencoder::load(ar, k));
      }
    }
  }
  return m;
}

ModelSet train_pod_models(const Partition& part, const SnapshotSet& snaps, Index n_interior, Index n_interface,
                          Index port_n) {
  if (n_interior < 1) throw InvalidArgument("interior dimension must be positive");
  ModelSet m;
  m.kind = RomKind::Lsrom;
  for (int i = 0; i < part.count(); ++i) {
    m.pod_interior.push_back(pod(snaps.interior[std::size_t(i)], FixedDimension{n_interior}).phi);
    if (n_interface > 0) m.pod_interface.push_back(pod(snaps.interface[std::size_t(i)], FixedDimension{n_interface}).phi);
  }
  if (port_n > 0) {
    const auto dims = port_latent_dims(part, port_n);
    for (std::size_t j = 0; j < dims.size(); ++j) m.pod_ports.push_back(pod(snaps.ports[j], FixedDimension{dims[j]}).phi);
  }
  return m;
}

RomInstance make_instance(const Grid2D& grid, const Partition& part, const ModelSet& m, ConstraintMode mode, Index nc,
                          std::uint64_t seed) {
  std::vector<MapPtr> in;
  for (int i = 0; i < part.count(); ++i) {
    const std::size_t k = std::size_t(i);
    if (m.kind == RomKind::Lsrom) {
      if (k >= m.pod_interior.size()) throw ConfigError("model has no interior basis for subdomain " + std::to_string(i));
      in.push_back(make_linear_map(m.pod_interior[k]));
    } else {
      if (k >= m.ae_interior.size()) throw ConfigError("model has no interior net for subdomain " + std::to_string(i));
      in.push_back(make_autoencoder_map(m.ae_interior[k]));
    }
  }
  if (mode == ConstraintMode::Srpc) {
    if (!m.has_ports()) throw ConfigError("SRPC needs port models (train with a port dimension)");
    return m.kind == RomKind::Lsrom ? srpc_linear_instance(grid, part, std::move(in), m.pod_ports)
                                    : srpc_autoencoder_instance(grid, part, std::move(in), m.ae_ports);
  }
  if (!m.has_interface()) throw ConfigError("WFPC needs interface models (train with an interface dimension)");
  std::vector<MapPtr> ga;
  std::vector<Index> dims;
  for (int i = 0; i < part.count(); ++i) {
    const std::size_t k = std::size_t(i);
    ga.push_back(m.kind == RomKind::Lsrom ? make_linear_map(m.pod_interface.at(k))
                                          : make_autoencoder_map(m.ae_interface.at(k)));
    dims.push_back(ga.back()->latent_dim());
  }
  const Index rows = nc > 0 ? nc : default_test_rows(part, dims);
  return wfpc_instance(grid, part, std::move(in), std::move(ga), gaussian_test_matrix(rows, part.constraint_rows(), seed));
}

// ---------------------------------------------------------------------------------------------

const Autoencoder& NetCache::get_or_train(const std::string& role, int index, const Mat& X, Index latent, int band,
                                          int shift, Activation act, const TrainConfig& cfg) {
  const std::string key = net_key(role, index, X, latent, band, shift, act, cfg);
  if (auto it = nets_.find(key); it != nets_.end()) return it->second;
  TrainResult r = train_autoencoder(X, build_mask(X.rows(), band, shift).pattern, latent, act, cfg);
  ++trained_;
  histories_[key] = std::move(r.history);
  return nets_.emplace(key, std::move(r.net)).first->second;
}

void NetCache::save(const std::filesystem::path& file) const {
  MatrixArchive ar;
  for (const auto& [k, net] : nets_) net.save(ar, "cache/" + k);
  ar.save(file);
}

void NetCache::load(const std::filesystem::path& file) {
  const MatrixArchive ar = MatrixArchive::load(file);
  const std::string suffix = "/meta";
  for (const auto& [name, m] : ar.records()) {
    if (!name.starts_with("cache/") || !name.ends_with(suffix)) continue;
    const std::string prefix = name.substr(0, name.size() - suffix.size());
    nets_.insert_or_assign(prefix.substr(6), Autoencoder::load(ar, prefix));
  }
}

std::uint64_t net_seed(std::uint64_t base, int role, int index) {
  return base * 1000003ULL + std::uint64_t(role) * 1000ULL + std::uint64_t(index);
}

ModelSet train_ae_models(const Partition& part, const SnapshotSet& snaps, const RomSpec& spec, NetCache& cache) {
  ModelSet m;
  m.kind = RomKind::Nmrom;
  TrainConfig cfg = spec.train;
  for (int i = 0; i < part.count(); ++i) {
    const std::size_t k = std::size_t(i);
    cfg.seed = net_seed(spec.seed, 0, i);
    m.ae_interior.push_back(
        cache.get_or_train("interior", i, snaps.interior[k], spec.n_interior, spec.band, spec.shift, Activation::Swish, cfg));
    if (spec.constraint == ConstraintMode::Wfpc) {
      cfg.seed = net_seed(spec.seed, 1, i);
      m.ae_interface.push_back(cache.get_or_train("interface", i, snaps.interface[k], spec.n_interface, spec.band,
                                                  spec.shift, Activation::Swish, cfg));
    }
  }
  if (spec.constraint == ConstraintMode::Srpc) {
    const auto dims = port_latent_dims(part, spec.port_n);
    for (std::size_t j = 0; j < dims.size(); ++j) {
      cfg.seed = net_seed(spec.seed, 2, int(j));
      m.ae_ports.push_back(cache.get_or_train("port", int(j), snaps.ports[j], dims[j], spec.port_band, spec.port_shift,
                                              Activation::Sigmoid, cfg));
    }
  }
  return m;
}

RomInstance build_rom(const Grid2D& grid, const Partition& part, const SnapshotSet& snaps, const RomSpec& spec,
                      NetCache& cache, const ParameterBox& box) {
  const bool wfpc = spec.constraint == ConstraintMode::Wfpc;
  const ModelSet m = spec.rom == RomKind::Lsrom
                         ? train_pod_models(part, snaps, spec.n_interior, wfpc ? spec.n_interface : 0, wfpc ? 0 : spec.port_n)
                         : train_ae_models(part, snaps, spec, cache);
  RomInstance inst = make_instance(grid, part, m, spec.constraint, spec.nc, spec.seed);
  fit_initializer(inst, snaps, box);
  attach_hyper_reduction(inst, spec.hr, spec.samples, snaps.residuals, spec.residual_energy);
  return inst;
}

// ---------------------------------------------------------------------------------------------

BenchmarkPlan parse_plan(const KeyValues& kv) {
  BenchmarkPlan plan;
  plan.grid.nx = parse_number<int>("problem.nx", lookup_or(kv, "problem.nx", "120"));
  plan.grid.ny = parse_number<int>("problem.ny", lookup_or(kv, "problem.ny", "12"));
  plan.grid.nu = parse_number<double>("problem.nu", lookup_or(kv, "problem.nu", "0.1"));
  plan.grid.validate();
  plan.nsx = parse_number<int>("problem.nsx", lookup_or(kv, "problem.nsx", "2"));
  plan.nsy = parse_number<int>("problem.nsy", lookup_or(kv, "problem.nsy", "2"));
  plan.na = parse_number<int>("snapshots.na", lookup_or(kv, "snapshots.na", "20"));
  plan.nl = parse_number<int>("snapshots.nl", lookup_or(kv, "snapshots.nl", "20"));
  plan.snapshot_dir = lookup_or(kv, "snapshots.dir", "");

  const auto a = number_list<double>(kv, "test.a", "7692.5384");
  const auto l = number_list<double>(kv, "test.lambda", "21.9230");
  if (a.size() != l.size()) throw ConfigError("test.a and test.lambda must have the same length");
  plan.tests.clear();
  for (std::size_t k = 0; k < a.size(); ++k) plan.tests.push_back({a[k], l[k]});

  RomSpec base;
  base.train.epochs = parse_number<int>("train.epochs", lookup_or(kv, "train.epochs", "500"));
  base.train.batch_size = parse_number<int>("train.batch", lookup_or(kv, "train.batch", "32"));
  base.train.learning_rate = parse_number<double>("train.lr", lookup_or(kv, "train.lr", "1e-3"));
  base.band = parse_number<int>("train.band", lookup_or(kv, "train.band", "5"));
  base.shift = parse_number<int>("train.shift", lookup_or(kv, "train.shift", "5"));
  base.port_band = parse_number<int>("train.port_band", lookup_or(kv, "train.port_band", "3"));
  base.port_shift = parse_number<int>("train.port_shift", lookup_or(kv, "train.port_shift", "3"));
  base.residual_energy = parse_number<double>("hr.residual_energy", lookup_or(kv, "hr.residual_energy", "1e-10"));
  plan.timing_repeats = parse_number<int>("sweep.timing_repeats", lookup_or(kv, "sweep.timing_repeats", "3"));
  if (plan.timing_repeats < 1) throw ConfigError("sweep.timing_repeats must be positive");

  std::vector<RomKind> roms;
  for (const auto& s : split_list(lookup_or(kv, "sweep.rom", "lsrom"))) roms.push_back(rom_kind_from_string(s));
  std::vector<ConstraintMode> modes;
  for (const auto& s : split_list(lookup_or(kv, "sweep.constraint", "wfpc"))) modes.push_back(constraint_mode_from_string(s));
  std::vector<std::pair<Index, Index>> dims;
  for (const auto& s : split_list(lookup_or(kv, "sweep.dims", "8:4"))) {
    const auto p = split_list(s, ':');
    if (p.size() != 2) throw ConfigError("sweep.dims entries are n_interior:n_interface, got '" + s + "'");
    dims.emplace_back(parse_number<Index>("sweep.dims", p[0]), parse_number<Index>("sweep.dims", p[1]));
  }
  const auto port_n = number_list<Index>(kv, "sweep.port_n", "2");
  std::vector<HrMode> hrs;
  for (const auto& s : split_list(lookup_or(kv, "sweep.hr", "none"))) hrs.push_back(hr_mode_from_string(s));
  const auto samples = number_list<Index>(kv, "sweep.samples", "100");
  const auto nc = number_list<Index>(kv, "sweep.nc", "0");
  const auto seeds = number_list<std::uint64_t>(kv, "sweep.seed", "0");

  // Knobs that do not apply to a cell are zeroed, then repeated cells dropped.
  std::set<std::string> seen;
  for (RomKind r : roms)
    for (ConstraintMode c : modes)
      for (const auto& [no, ng] : dims)
        for (Index pn : port_n)
          for (HrMode h : hrs)
            for (Index ns : samples)
              for (Index n_c : nc)
                for (std::uint64_t sd : seeds) {
                  const bool wfpc = c == ConstraintMode::Wfpc;
                  RomSpec s = base;
                  s.rom = r;
                  s.constraint = c;
                  s.n_interior = no;
                  s.n_interface = wfpc ? ng : 0;
                  s.port_n = wfpc ? 0 : pn;
                  s.hr = h;
                  s.samples = h == HrMode::None ? 0 : ns;
                  s.nc = wfpc ? n_c : 0;
                  s.seed = sd;
                  if (seen.insert(spec_echo(s) + "," + std::to_string(sd)).second) plan.specs.push_back(s);
                }
  return plan;
}

double time_fom_solve(const Grid2D& grid, const ParameterPoint& p, int repeats, Vec* state) {
  const BurgersFom fom(grid, p);
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, repeats); ++r) {
    const auto t0 = Clock::now();
    NewtonResult res = solve_monolithic(fom, Vec::Zero(fom.size()));
    best = std::min(best, seconds_since(t0));
    if (state && r == 0) *state = std::move(res.state);
  }
  return best;
}

std::vector<BenchmarkRecord> run_benchmark(const BenchmarkPlan& plan, const SnapshotSet& snaps, NetCache& cache) {
  const Partition part = build_partition(plan.grid, plan.nsx, plan.nsy);
  std::vector<Vec> ref(plan.tests.size());
  std::vector<double> fom_time(plan.tests.size());
  for (std::size_t t = 0; t < plan.tests.size(); ++t)
    fom_time[t] = time_fom_solve(plan.grid, plan.tests[t], plan.timing_repeats, &ref[t]);

  std::vector<BenchmarkRecord> out;
  for (const RomSpec& spec : plan.specs) {
    std::optional<RomInstance> inst;
    std::string build_error;
    try {
      inst.emplace(build_rom(plan.grid, part, snaps, spec, cache, plan.box));
    } catch (const Error& e) {
      build_error = e.what();
    }
    for (std::size_t t = 0; t < plan.tests.size(); ++t) {
      BenchmarkRecord rec;
      rec.spec = spec;
      rec.p = plan.tests[t];
      rec.fom_time = fom_time[t];
      rec.error = rec.rom_time = rec.init_time = rec.per_iteration_time = rec.speedup = kNaN;
      if (!inst) {
        rec.status = "build failed: " + build_error;
        out.push_back(rec);
        continue;
      }
      rec.dofs = inst->total_dim();
      rec.spec.nc = inst->mode == ConstraintMode::Wfpc ? inst->test_matrix.rows() : 0;
      try {
        for (int r = 0; r < plan.timing_repeats; ++r) {
          const RomSolution sol = solve_rom(*inst, plan.tests[t]);
          const double total = sol.init_time + sol.solve_time;
          if (r == 0) {
            rec.error = relative_error(part, ref[t], sol);
            rec.iterations = sol.sqp.iterations;
            rec.converged = sol.sqp.converged;
            rec.rom_time = total;
            rec.init_time = sol.init_time;
            rec.per_iteration_time = sol.per_iteration_time();
          } else if (total < rec.rom_time) {
            rec.rom_time = total;
            rec.init_time = sol.init_time;
            rec.per_iteration_time = sol.per_iteration_time();
          }
        }
        rec.speedup = rec.fom_time / rec.rom_time;
      } catch (const Error& e) {
        rec.status = std::string("solve failed: ") + e.what();
      }
      out.push_back(rec);
    }
  }
  return out;
}

const char* const kRecordsHeader =
    "rom,constraint,hr,n_interior,n_interface,port_n,samples,nc,a,lambda,dofs,error,fom_time,rom_time,init_time,"
    "per_iteration_time,speedup,iterations,converged,status";
const char* const kParetoHeader =
    "rom,constraint,hr,n_interior,n_interface,port_n,samples,nc,a,lambda,relative_time,error";

void write_records_csv(const std::filesystem::path& file, const std::vector<BenchmarkRecord>& recs) {
  std::ofstream f(file);
  if (!f) throw Error("cannot write " + file.string());
  f << kRecordsHeader << '\n';
  for (const auto& r : recs) {
    f << spec_echo(r.spec) << ',' << csv_number(r.p.a) << ',' << csv_number(r.p.lambda) << ',' << r.dofs << ','
      << csv_number(r.error) << ',' << csv_number(r.fom_time) << ',' << csv_number(r.rom_time) << ','
      << csv_number(r.init_time) << ',' << csv_number(r.per_iteration_time) << ',' << csv_number(r.speedup) << ','
      << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << csv_field(r.status) << '\n';
  }
  if (!f) throw Error("write failed: " + file.string());
}

void write_pareto_csv(const std::filesystem::path& file, const std::vector<BenchmarkRecord>& recs) {
  struct Point {
    const BenchmarkRecord* r;
    double t, e;
  };
  std::map<std::tuple<std::string, std::string, double, double>, std::vector<Point>> groups;
  for (const auto& r : recs)
    if (r.status == "ok" && std::isfinite(r.error) && std::isfinite(r.rom_time))
      groups[{to_string(r.spec.rom), to_string(r.spec.constraint), r.p.a, r.p.lambda}].push_back({&r, r.rom_time / r.fom_time, r.error});

  std::ofstream f(file);
  if (!f) throw Error("cannot write " + file.string());
  f << kParetoHeader << '\n';
  for (auto& [key, pts] : groups) {
    std::stable_sort(pts.begin(), pts.end(), [](const Point& x, const Point& y) { return x.t < y.t || (x.t == y.t && x.e < y.e); });
    double best = std::numeric_limits<double>::infinity();
    for (const Point& p : pts) {
      if (!(p.e < best)) continue;
      best = p.e;
      f << spec_echo(p.r->spec) << ',' << csv_number(p.r->p.a) << ',' << csv_number(p.r->p.lambda) << ','
        << csv_number(p.t) << ',' << csv_number(p.e) << '\n';
    }
  }
  if (!f) throw Error("write failed: " + file.string());
}

}  // namespace ddrom
