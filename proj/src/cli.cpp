#include <antidot/bessel.hpp>
#include <antidot/cli.hpp>
#include <antidot/experiments.hpp>
#include <antidot/feshbach.hpp>
#include <antidot/gapscan.hpp>
#include <antidot/pauli.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#ifndef ANTIDOT_VERSION
#define ANTIDOT_VERSION "unknown"
#endif

namespace antidot::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

json to_json(const Vec2& v) { return json::array({v(0), v(1)}); }

json to_json(const ConfigValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

json to_json(const Matrix2c& m) {
  json rows = json::array();
  for (int i = 0; i < 2; ++i) {
    json row = json::array();
    for (int j = 0; j < 2; ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(row);
  }
  return rows;
}

json profile_json(const MassProfile& p) {
  return {{"description", p.describe()}, {"height", p.height()}, {"normalized", p.normalized()},
          {"phi", p.phi()},              {"l1_norm", p.l1_norm()}, {"l2_norm", p.l2_norm()},
          {"linf_norm", p.linf_norm()}};
}

json eigen_json(const MinAbsEig& e) {
  return {{"min_abs", e.value},
          {"signed", e.signed_value},
          {"residual", e.residual},
          {"polished", e.polished},
          {"method", to_string(e.method)}};
}

json gap_json(const GapReport& r) {
  json samples_at_min;
  for (const KSample& s : r.samples)
    if (s.k == r.argmin_k) samples_at_min = eigen_json(s.eig);
  return {{"grid_min", r.grid_min},
          {"argmin_k", to_json(r.argmin_k)},
          {"certified_lower", r.certified_lower},
          {"grid_n", r.grid_n},
          {"refine_depth", r.refine_depth},
          {"half_zone", r.half_zone},
          {"lattice", r.lattice},
          {"grid_min_by_level", r.grid_min_by_level},
          {"certified_by_level", r.certified_by_level},
          {"max_residual", r.max_residual},
          {"evaluations", r.evaluations},
          {"sample_count", r.samples.size()},
          {"argmin_eigenvalue", samples_at_min}};
}

json fit_json(const ScalingFit& f) {
  json points = json::array();
  for (const ScalingPoint& p : f.points)
    points.push_back({{"parameter", p.parameter},
                      {"alpha", p.alpha},
                      {"beta", p.beta},
                      {"gap", p.gap},
                      {"residual", p.residual},
                      {"reliable", p.reliable},
                      {"cutoff", p.cutoff},
                      {"solver", to_string(p.solver)},
                      {"argmin_k", to_json(p.argmin_k)},
                      {"certified_lower", p.certified_lower}});
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"stderr_slope", f.stderr_slope},
          {"r_squared", f.r_squared},
          {"warnings", f.warnings},
          {"points", points}};
}

EigenSolveOptions solve_options(const FiberConfig& f) {
  EigenSolveOptions o;
  o.solver = f.solver;
  o.iterative.tol = f.residual_tol;
  o.memory_limit_mb = f.memory_limit_mb;
  return o;
}

ScanSpec scan_spec(const ScanConfig& s, int threads) {
  ScanSpec spec;
  spec.grid_n = s.grid_n;
  spec.refine_depth = s.refine_depth;
  spec.half_zone = s.half_zone;
  spec.threads = threads;
  return spec;
}

SweepOptions sweep_options(const RunConfig& c, int threads) {
  SweepOptions o;
  o.scan = scan_spec(c.scan, 1);
  o.solver = solve_options(c.fiber);
  const double cc = c.sweep.cutoff_c;
  const int cmin = c.sweep.cutoff_min;
  o.cutoff_rule = [cc, cmin](double alpha) { return std::max(cmin, static_cast<int>(std::ceil(cc / alpha))); };
  o.dense_limit = c.sweep.dense_limit;
  o.threads = threads;
  return o;
}

// Collects the files a subcommand writes, relative to the output directory.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + (dir_ / name).string());
    body(os);
    if (!os) throw NumericalError("write failed for " + (dir_ / name).string());
    files_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Context {
  const RunConfig& config;
  int threads;
  std::uint64_t seed;
  Artifacts& artifacts;
  std::ostream& out;
};

void cmd_fourier(Context& c) {
  const MassProfile p = build_profile(c.config.potential);
  const FourierTable table(p, c.config.fiber.alpha, c.config.fiber.M);
  c.artifacts.write("fourier.csv", [&](std::ostream& os) { table.write_csv(os); });
  c.artifacts.write_json("report.json", {{"profile", profile_json(p)},
                                         {"alpha", table.alpha()},
                                         {"cutoff", table.cutoff()},
                                         {"span", table.span()},
                                         {"absolute_sum", table.absolute_sum()},
                                         {"zero_mode", json::array({table(0, 0).real(), table(0, 0).imag()})}});
  c.out << "fourier: " << p.describe() << ", span " << table.span() << ", sum |c| = " << table.absolute_sum() << '\n';
}

void cmd_bands(Context& c) {
  const RunConfig& cfg = c.config;
  const MassProfile p = build_profile(cfg.potential);
  const auto kernel = std::make_shared<const MassKernel>(p, cfg.fiber.alpha, cfg.fiber.M);
  const int n = cfg.scan.grid_n;
  const Eigen::Index dim = kernel->basis().dim();
  const int bands = static_cast<int>(std::min<Eigen::Index>(cfg.fiber.bands, dim));
  std::vector<std::vector<double>> values(static_cast<std::size_t>(n) * n);
  std::vector<double> residuals(values.size(), 0.0);
  parallel_for(n * n, c.threads, [&](int idx) {
    const Vec2 k(-0.5 + static_cast<double>(idx / n) / (n - 1), -0.5 + static_cast<double>(idx % n) / (n - 1));
    AssembleOptions ao;
    ao.dense = cfg.fiber.solver == SolverKind::dense;
    ao.memory_limit_mb = cfg.fiber.memory_limit_mb;
    const FiberOperator op(kernel, cfg.fiber.beta, k, ao);
    std::vector<double> ev;
    if (cfg.fiber.solver == SolverKind::dense) {
      const Spectrum s = eigenvalues_dense(op, false);
      ev = s.eigenvalues;
      std::stable_sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
      ev.resize(static_cast<std::size_t>(bands));
      residuals[static_cast<std::size_t>(idx)] = static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * op.norm_bound();
    } else {
      IterativeOptions io;
      io.count = bands;
      io.tol = cfg.fiber.residual_tol;
      const Spectrum s = eigenvalues_near_zero(op, io);
      ev = s.eigenvalues;
      residuals[static_cast<std::size_t>(idx)] = s.residual_bound;
    }
    std::sort(ev.begin(), ev.end());
    values[static_cast<std::size_t>(idx)] = std::move(ev);
  });
  c.artifacts.write("bands.csv", [&](std::ostream& os) {
    std::ostringstream line;
    line.precision(17);
    os << "k1,k2,band_index,eigenvalue\r\n";
    for (int idx = 0; idx < n * n; ++idx)
      for (std::size_t b = 0; b < values[static_cast<std::size_t>(idx)].size(); ++b) {
        line.str("");
        line << -0.5 + static_cast<double>(idx / n) / (n - 1) << ',' << -0.5 + static_cast<double>(idx % n) / (n - 1)
             << ',' << b << ',' << values[static_cast<std::size_t>(idx)][b] << "\r\n";
        os << line.str();
      }
  });
  c.artifacts.write_json("report.json", {{"profile", profile_json(p)},
                                         {"alpha", cfg.fiber.alpha},
                                         {"beta", cfg.fiber.beta},
                                         {"cutoff", cfg.fiber.M},
                                         {"dim", dim},
                                         {"bands", bands},
                                         {"grid_n", n},
                                         {"solver", to_string(cfg.fiber.solver)},
                                         {"max_residual", *std::max_element(residuals.begin(), residuals.end())}});
  c.out << "bands: " << n * n << " k-points, " << bands << " bands each\n";
}

void cmd_gap(Context& c) {
  const RunConfig& cfg = c.config;
  const MassProfile p = build_profile(cfg.potential);
  const GapReport r = global_gap(p, cfg.fiber.alpha, cfg.fiber.beta, cfg.fiber.M, scan_spec(cfg.scan, c.threads),
                                 solve_options(cfg.fiber));
  json j = gap_json(r);
  j["profile"] = profile_json(p);
  j["alpha"] = cfg.fiber.alpha;
  j["beta"] = cfg.fiber.beta;
  j["cutoff"] = cfg.fiber.M;
  j["solver"] = to_string(cfg.fiber.solver);
  c.artifacts.write_json("report.json", j);
  if (cfg.output.per_k_csv) c.artifacts.write("per_k.csv", [&](std::ostream& os) { r.write_per_k_csv(os); });
  c.out.precision(12);
  c.out << "gap: grid_min = " << r.grid_min << " at k = (" << r.argmin_k(0) << ", " << r.argmin_k(1)
        << "), certified_lower = " << r.certified_lower << '\n';
}

void write_fit(Context& c, const ScalingFit& f, json extra) {
  json j = fit_json(f);
  for (auto& [k, v] : extra.items()) j[k] = v;
  c.artifacts.write_json("fit.json", j);
  c.artifacts.write("points.csv", [&](std::ostream& os) { f.write_csv(os); });
  c.artifacts.write("points.dat", [&](std::ostream& os) { f.write_dat(os); });
  for (const auto& w : f.warnings) c.out << "warning: " << w << '\n';
  c.out.precision(6);
  c.out << "slope = " << f.slope << " +- " << f.stderr_slope << " (r^2 = " << f.r_squared << ")\n";
}

void cmd_sweep_alpha(Context& c) {
  const RunConfig& cfg = c.config;
  const MassProfile p = build_profile(cfg.potential);
  const ScalingFit f = sweep_alpha(p, cfg.fiber.beta, cfg.sweep.alphas, sweep_options(cfg, c.threads));
  const Theorem1Constant t = theorem1_constant(f, p.phi());
  write_fit(c, f,
            {{"profile", profile_json(p)},
             {"beta", cfg.fiber.beta},
             {"leading_order", {{"c_fit", t.c_fit}, {"min_ratio", t.min_ratio}, {"max_ratio", t.max_ratio}, {"holds", t.holds}}}});
}

void cmd_sweep_beta(Context& c) {
  const RunConfig& cfg = c.config;
  const MassProfile p = build_profile(cfg.potential);
  const ScalingFit f = sweep_beta(p, cfg.fiber.alpha, cfg.sweep.betas, cfg.fiber.M, sweep_options(cfg, c.threads));
  json extra{{"profile", profile_json(p)}, {"alpha", cfg.fiber.alpha}, {"cutoff", cfg.fiber.M}};
  if (p.phi() > 0) {
    const Theorem1Constant t = theorem1_constant(f, p.phi());
    extra["leading_order"] = {{"c_fit", t.c_fit}, {"min_ratio", t.min_ratio}, {"max_ratio", t.max_ratio}, {"holds", t.holds}};
  } else {
    const Hyp1Result s = hyp1_sum(p, std::max(cfg.fiber.M, p.mode_extent().value_or(cfg.fiber.M)));
    const double reference = std::abs(s.value) / (8 * kPi * kPi);
    json ratios = json::array();
    for (const ScalingPoint& pt : f.points) ratios.push_back(pt.gap / std::pow(pt.beta, 3) / reference);
    extra["phi_zero"] = {{"s_chi", s.value}, {"reference_prefactor", reference}, {"gap_over_beta3_ratio", ratios}};
  }
  write_fit(c, f, extra);
}

void cmd_hyp1(Context& c) {
  const MassProfile p = build_profile(c.config.potential);
  const int cutoff = std::max(c.config.fiber.M, p.mode_extent().value_or(c.config.fiber.M));
  const Hyp1Result s = hyp1_sum(p, cutoff);
  c.artifacts.write_json("report.json", {{"profile", profile_json(p)},
                                         {"s_chi", s.value},
                                         {"imag_residual", s.imag_residual},
                                         {"magnitude", s.magnitude},
                                         {"cutoff", s.cutoff},
                                         {"tail_estimate", s.tail_estimate},
                                         {"phi_nonzero", s.phi_nonzero}});
  c.out.precision(15);
  c.out << "S = " << s.value << " (cutoff " << s.cutoff << ", tail estimate " << s.tail_estimate << ")\n";
  if (s.phi_nonzero) c.out << "note: Phi != 0 for this profile\n";
}

void cmd_feshbach(Context& c) {
  const RunConfig& cfg = c.config;
  const MassProfile p = build_profile(cfg.potential);
  const Vec2 k(cfg.feshbach.k1, cfg.feshbach.k2);
  const FeshbachReport r = feshbach_report(p, cfg.fiber.alpha, cfg.fiber.beta, k, cfg.feshbach.z, cfg.fiber.M);
  c.artifacts.write_json("report.json",
                         {{"profile", profile_json(p)},
                          {"alpha", cfg.fiber.alpha},
                          {"beta", cfg.fiber.beta},
                          {"cutoff", cfg.fiber.M},
                          {"k", to_json(r.k)},
                          {"z", r.z},
                          {"schur", to_json(r.schur.f)},
                          {"q0_smallest_singular", r.schur.q0_smallest_singular},
                          {"q0_condition", r.schur.q0_condition},
                          {"w_vector", json::array({r.w_vector(0), r.w_vector(1), r.w_vector(2)})},
                          {"w_value", r.w_value},
                          {"s_chi", r.s_chi},
                          {"norm_wru", r.norm_wru},
                          {"norm_finv", std::isfinite(r.norm_finv) ? json(r.norm_finv) : json("inf")},
                          {"norm_coupling", r.norm_coupling},
                          {"regime", to_string(r.regime)}});
  c.out << "feshbach: regime " << to_string(r.regime) << ", ||W R0 U|| = " << r.norm_wru << '\n';
}

void cmd_kernel(Context& c) {
  const KernelConfig& k = c.config.kernel;
  const KernelBoundReport r = kernel_bound_check(k.r_min, k.r_max, k.samples);
  c.artifacts.write("kernel.csv", [&](std::ostream& os) {
    std::ostringstream line;
    line.precision(17);
    os << "r,max_entry,bound_ratio\r\n";
    for (const KernelSample& s : r.samples) {
      line.str("");
      line << s.r << ',' << s.max_entry << ',' << s.bound_ratio << "\r\n";
      os << line.str();
    }
  });
  c.artifacts.write_json("report.json", {{"r_min", k.r_min},
                                         {"r_max", k.r_max},
                                         {"samples", k.samples},
                                         {"max_bound_ratio", r.max_bound_ratio},
                                         {"envelope", r.envelope},
                                         {"within_envelope", r.within_envelope}});
  c.out << "kernel: max bound ratio " << r.max_bound_ratio << ", envelope " << r.envelope << " -> "
        << (r.within_envelope ? "within" : "EXCEEDED") << '\n';
}

void cmd_physical(Context& c) {
  const RunConfig& cfg = c.config;
  if (!(cfg.sweep.L > 0)) throw ValidationError("physical needs [sweep].L > 0");
  if (!(cfg.sweep.mu > 0)) throw ValidationError("physical needs [sweep].mu > 0");
  const MassProfile p = build_profile(cfg.potential);
  const double beta = cfg.sweep.mu * cfg.sweep.L / cfg.sweep.hbar_vf;
  const GapReport r =
      global_gap(p, cfg.fiber.alpha, beta, cfg.fiber.M, scan_spec(cfg.scan, c.threads), solve_options(cfg.fiber));
  const PhysicalGap g = to_physical(r.grid_min, cfg.fiber.alpha, cfg.sweep.L, cfg.sweep.mu, cfg.sweep.hbar_vf, p.phi());
  json j{{"profile", profile_json(p)},
         {"alpha", cfg.fiber.alpha},
         {"L", g.L},
         {"mu", g.mu},
         {"hbar_vf", g.hbar_vf},
         {"beta", g.beta},
         {"gap_half_width", r.grid_min},
         {"E_g", g.E_g},
         {"reference", g.reference},
         {"scan", gap_json(r)}};
  c.artifacts.write_json("report.json", j);
  c.out << "physical: beta = " << g.beta << ", E_g = " << g.E_g << " J, reference mu Phi alpha^2 = " << g.reference
        << " J\n";
}

const std::map<std::string, std::function<void(Context&)>>& commands() {
  static const std::map<std::string, std::function<void(Context&)>> m{
      {"fourier", cmd_fourier}, {"bands", cmd_bands},       {"gap", cmd_gap},   {"sweep-alpha", cmd_sweep_alpha},
      {"sweep-beta", cmd_sweep_beta}, {"hyp1", cmd_hyp1}, {"feshbach", cmd_feshbach}, {"kernel", cmd_kernel},
      {"physical", cmd_physical}};
  return m;
}

void write_manifest(Artifacts& a, const Invocation& inv, const RunConfig& cfg, std::uint64_t seed, int threads,
                    double seconds, int status, const std::string& error) {
  json echo = json::object();
  for (const auto& [section, keys] : config_echo(cfg)) {
    json s = json::object();
    for (const auto& [key, value] : keys) s[key] = to_json(value);
    echo[section] = s;
  }
  json files = a.files();
  json m{{"subcommand", inv.subcommand},
         {"config_path", inv.config_path},
         {"config", echo},
         {"version", ANTIDOT_VERSION},
         {"seed", seed},
         {"threads", threads},
         {"outputs", files},
         {"wall_time_s", seconds},
         {"exit_status", status}};
  if (!error.empty()) m["error"] = error;
  std::ofstream os(a.dir() / "manifest.json", std::ios::binary);
  os << m.dump(2) << '\n';
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"fourier", "bands",    "gap",    "sweep-alpha", "sweep-beta",
                                              "hyp1",    "feshbach", "kernel", "physical",    "selftest"};
  return names;
}

std::string usage() {
  std::ostringstream os;
  os << "usage: antidot <subcommand> --config FILE [--out DIR] [--threads N] [--seed S]\n"
     << "subcommands:";
  for (const auto& s : subcommands()) os << ' ' << s;
  os << "\n`selftest` runs without a config.\n";
  return os.str();
}

int dispatch(const Invocation& inv, const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto cmd = commands().find(inv.subcommand);
  if (cmd == commands().end()) {
    err << "unknown subcommand '" << inv.subcommand << "'\n" << usage();
    return kExitUsage;
  }
  const std::uint64_t seed = inv.seed.value_or(config.output.seed);
  const int threads = resolve_threads(inv.threads);
  std::optional<Artifacts> artifacts;
  try {
    artifacts.emplace(fs::path(inv.out_dir.value_or(config.output.dir)));
  } catch (const std::exception& e) {
    err << "error: cannot create output directory: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto start = std::chrono::steady_clock::now();
  int status = kExitOk;
  std::string message;
  try {
    Context ctx{config, threads, seed, *artifacts, out};
    cmd->second(ctx);
  } catch (const ValidationError& e) {
    status = kExitUsage;
    message = e.what();
  } catch (const DomainError& e) {
    status = kExitUsage;
    message = e.what();
  } catch (const NumericalError& e) {
    status = kExitNumerical;
    message = e.what();
  } catch (const std::exception& e) {
    status = kExitNumerical;
    message = e.what();
  }
  if (!message.empty()) err << "error: " << message << '\n';
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(*artifacts, inv, config, seed, threads, seconds, status, message);
  return status;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral gap of the periodic-mass Dirac operator", "antidot"};
  Invocation inv;
  std::uint64_t seed = 0;
  app.add_option("subcommand", inv.subcommand, "one of the subcommands below")->required();
  app.add_option("--config", inv.config_path, "run configuration file");
  app.add_option("--out", inv.out_dir, "output directory (overrides [output].dir)");
  app.add_option("--threads", inv.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", seed, "seed (overrides [output].seed)");
  app.footer(usage());
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << usage();
    return kExitUsage;
  }
  if (*seed_opt) inv.seed = seed;

  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), inv.subcommand) == names.end()) {
    err << "unknown subcommand '" << inv.subcommand << "'\n" << usage();
    return kExitUsage;
  }
  if (inv.subcommand == "selftest") return selftest(out, inv.seed.value_or(0));
  if (inv.config_path.empty()) {
    err << "error: --config is required for '" << inv.subcommand << "'\n" << usage();
    return kExitUsage;
  }
  RunConfig config;
  try {
    config = load_config(inv.config_path);
  } catch (const std::exception& e) {
    err << "error: " << inv.config_path << ": " << e.what() << '\n';
    return kExitUsage;
  }
  return dispatch(inv, config, out, err);
}

int selftest(std::ostream& out, std::uint64_t seed) {
  int failures = 0;
  auto check = [&](const std::string& name, const std::function<bool()>& f) {
    bool ok = false;
    try {
      ok = f();
    } catch (const std::exception& e) {
      out << "  (" << e.what() << ")\n";
    }
    out << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };
  auto config_error = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);

  check("config defaults", [] {
    const RunConfig c = parse_config("[potential]\nshape = disk\nr = 0.2\n");
    return c.fiber.M == 14 && c.scan.grid_n == 9 && c.fiber.solver == SolverKind::dense;
  });
  check("config rejects alpha = 1.5", [&] {
    return config_error("[potential]\nshape = disk\nr = 0.2\n[fiber]\nalpha = 1.5\n").find("[fiber].alpha ∈ (0,1]") !=
           std::string::npos;
  });
  check("config rejects grid_n = 8", [&] {
    return config_error("[potential]\nshape = disk\nr = 0.2\n[scan]\ngrid_n = 8\n").find("grid_n must be odd") !=
           std::string::npos;
  });
  check("Fourier reality symmetry", [&] {
    const MassProfile p = MassProfile::disk(0.2);
    for (int t = 0; t < 20; ++t) {
      const Vec2i m(static_cast<int>(std::floor(20 * unit(rng))), static_cast<int>(std::floor(20 * unit(rng))));
      if (std::abs(fourier_coeff(p, 0.7, -m) - std::conj(fourier_coeff(p, 0.7, m))) > 1e-14) return false;
    }
    return true;
  });
  check("normalize is idempotent", [] {
    const MassProfile p = normalize(MassProfile::disk(0.2));
    return std::abs(normalize(p).height() - p.height()) <= 1e-12 * p.height();
  });
  check("normalized square(0.4): height 2.5, Phi 0.4", [] {
    const MassProfile p = normalize(MassProfile::square(0.4));
    return std::abs(p.height() - 2.5) < 1e-12 && std::abs(p.phi() - 0.4) < 1e-12;
  });
  check("annulus has no zero mode", [] { return fourier_coeff(annulus_profile(4, 1), 1.0, Vec2i::Zero()) == 0.0; });
  check("single cosine: S = 0", [] {
    return hyp1_sum(MassProfile::modes({{{1, 0}, 0.5}, {{-1, 0}, 0.5}}), 4).value == 0.0;
  });
  check("free fibre at k = 0 has a double zero", [] {
    const Spectrum s = eigenvalues_dense(assemble(MassProfile::disk(0.2), 1.0, 0.0, Vec2::Zero(), 2));
    return std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(), [](double v) { return std::abs(v) < 1e-9; }) == 2;
  });
  check("spectrum is traceless", [] {
    const FiberOperator op = assemble(normalize(MassProfile::disk(0.2)), 0.6, 0.8, Vec2(0.1, 0.3), 3);
    const Spectrum s = eigenvalues_dense(op, false);
    double sum = 0;
    for (double v : s.eigenvalues) sum += v;
    return std::abs(sum) <= 1e-9 * op.norm_bound();
  });
  check("free corner: min |lambda| = pi sqrt 2", [] {
    return std::abs(min_abs_eig(MassProfile::disk(0.2), 1.0, 0.0, Vec2(0.5, 0.5), 3) - kPi * std::sqrt(2.0)) < 1e-9;
  });
  check("beta = 0 is gapless", [] {
    ScanSpec s;
    s.grid_n = 3;
    return global_gap(MassProfile::disk(0.2), 1.0, 0.0, 2, s).grid_min < 1e-9;
  });
  check("Schur complement at beta = 0", [] {
    const Vec2 k(0.2, -0.3);
    const FiberOperator op = assemble(MassProfile::disk(0.2), 0.5, 0.0, k, 3);
    const Matrix2c expected = -kTwoPi * pauli::dot(k) - 0.7 * Matrix2c::Identity();
    return (schur_complement(op, 0.7).f - expected).cwiseAbs().maxCoeff() <= 1e-12;
  });
  check("Q0 block at beta = 0, k = 0: smallest singular value 2 pi", [] {
    const FiberOperator op = assemble(MassProfile::disk(0.2), 1.0, 0.0, Vec2::Zero(), 3);
    return std::abs(q0_smallest_singular(op, 0.0) - kTwoPi) < 1e-9;
  });
  check("W R0 U vanishes at beta = 0", [] { return wru_norm(MassProfile::disk(0.2), 0.3, 0.0, 0.0, 4).norm == 0.0; });
  check("J1(0) = 0", [] { return bessel_j1(0.0) == 0.0; });
  check("kernel sample at r = 2 inside the envelope", [] {
    const KernelBoundReport r = kernel_bound_check(2.0, 2.0 + 1e-9, 2);
    return r.samples.front().bound_ratio >= 1.0 && r.within_envelope;
  });
  check("constant mass: alpha slope 0", [] {
    SweepOptions o;
    o.scan.grid_n = 3;
    o.cutoff_rule = [](double) { return 2; };
    o.scale_profile = false;
    const ScalingFit f = sweep_alpha(MassProfile::modes({{{0, 0}, 1.0}}), 0.4, {0.2, 0.3, 0.4}, o);
    return std::abs(f.slope) < 0.05;
  });
  check("single-point sweep is rejected", [] {
    try {
      sweep_beta(normalize(MassProfile::disk(0.2)), 0.3, {0.1}, 4);
    } catch (const ValidationError&) {
      return true;
    }
    return false;
  });
  check("beta = 0 in a sweep is rejected", [] {
    try {
      sweep_beta(normalize(MassProfile::disk(0.2)), 0.3, {0.0, 0.1, 0.2}, 4);
    } catch (const ValidationError&) {
      return true;
    }
    return false;
  });
  check("zero half-width gives E_g = 0", [] { return to_physical(0.0, 0.3, 5e-8, 1e-20, 6.6e-29, 0.4).E_g == 0.0; });
  check("unknown subcommand exits 2", [] {
    std::ostringstream sink;
    const char* argv[] = {"antidot", "no-such-command"};
    return run(2, argv, sink, sink) == kExitUsage && sink.str().find("usage:") != std::string::npos;
  });
  out << (failures == 0 ? "selftest: all checks passed\n" : "selftest: " + std::to_string(failures) + " failed\n");
  return failures == 0 ? kExitOk : kExitNumerical;
}

}  // namespace antidot::cli
