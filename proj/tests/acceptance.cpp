// Acceptance run: one PASS/FAIL line per criterion, followed by the measured
// numbers. The process exits 0 once every criterion has been evaluated; the
// verdicts are in the output.
#include <antidot/bessel.hpp>
#include <antidot/cli.hpp>
#include <antidot/experiments.hpp>
#include <antidot/feshbach.hpp>
#include <antidot/gapscan.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

using namespace antidot;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::ostringstream detail;
};

int passed = 0, failed = 0;

void criterion(int id, const std::string& title, const std::function<void(Verdict&)>& body) {
  Verdict v;
  v.detail << std::setprecision(10);
  const auto start = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << "\n    exception: " << e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  (v.pass ? passed : failed)++;
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " (" << std::fixed
            << std::setprecision(1) << seconds << " s)" << std::defaultfloat << v.detail.str() << "\n"
            << std::flush;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<ScalingPoint> pts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ScalingPoint p;
    p.parameter = x[i];
    p.gap = y[i];
    pts.push_back(p);
  }
  return fit_power_law(pts).slope;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<double> kAlphas{0.20, 0.25, 0.30, 0.35, 0.40};

}  // namespace

int main() {
  std::mt19937_64 rng(20261019);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int threads = resolve_threads(0);
  const MassProfile disk = normalize(MassProfile::disk(0.2));
  const MassProfile ring = annulus_profile(4, 1);

  criterion(1, "constant mass, gap half-width 0.5 at k = 0", [&](Verdict& v) {
    // chi = height on the whole cell: h_k^2 = 4 pi^2 |m - k|^2 + (beta height)^2.
    const double height = 2.0, beta = 0.25;
    ScanSpec scan;
    scan.grid_n = 9;
    scan.refine_depth = 2;
    scan.threads = 1;
    EigenSolveOptions o;
    o.solver = SolverKind::iterative;
    const auto t0 = std::chrono::steady_clock::now();
    const GapReport r = global_gap(MassProfile::square(1.0, height), 1.0, beta, 12, scan, o);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double err = std::abs(r.grid_min - beta * height);
    v.pass = err <= 1e-8 && r.argmin_k.norm() == 0.0 && seconds <= 30;
    v.detail << "\n    grid_min = " << r.grid_min << ", |error| = " << err << ", argmin k = (" << r.argmin_k(0)
             << ", " << r.argmin_k(1) << "), " << r.evaluations << " solves, iterative, single thread";
  });

  criterion(2, "P0 block singular values", [&](Verdict& v) {
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
      const Vec2 k(unit(rng) - 0.5, unit(rng) - 0.5);
      const double alpha = 0.1 + 0.9 * unit(rng), beta = 2 * unit(rng), radius = 0.05 + 0.4 * unit(rng);
      const MassProfile p = MassProfile::disk(radius, 0.5 + unit(rng));
      const FiberOperator op = assemble(p, alpha, beta, k, 3);
      const Eigen::Vector2d s = Eigen::JacobiSVD<Matrix2c>(p0_block(op)).singularValues();
      const double mass = alpha * alpha * beta * p.phi();
      const double expected = std::sqrt(4 * kPi * kPi * k.squaredNorm() + mass * mass);
      worst = std::max({worst, std::abs(s(0) - expected), std::abs(s(1) - expected)});
    }
    v.pass = worst <= 1e-12;
    v.detail << "\n    max deviation over 20 configurations = " << worst;
  });

  criterion(3, "charge-conjugation symmetry of the spectrum", [&](Verdict& v) {
    double worst = 0, worst_zero = 0;
    for (int t = 0; t < 10; ++t) {
      const Vec2 k(unit(rng) - 0.5, unit(rng) - 0.5);
      const double alpha = 0.2 + 0.8 * unit(rng), beta = 2 * unit(rng);
      const MassProfile p = t % 2 ? normalize(MassProfile::disk(0.05 + 0.4 * unit(rng))) : ring;
      const FiberOperator plus = assemble(p, t % 2 ? alpha : 1.0, beta, k, 6);
      const FiberOperator minus = assemble(p, t % 2 ? alpha : 1.0, beta, Vec2(-k), 6);
      const auto a = eigenvalues_dense(plus, false).eigenvalues;
      const auto b = eigenvalues_dense(minus, false).eigenvalues;
      const double norm = plus.norm_bound();
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] + b[b.size() - 1 - i]) / norm);
      const FiberOperator zero = assemble(p, t % 2 ? alpha : 1.0, beta, Vec2::Zero(), 6);
      const auto c = eigenvalues_dense(zero, false).eigenvalues;
      for (std::size_t i = 0; i < c.size(); ++i)
        worst_zero = std::max(worst_zero, std::abs(c[i] + c[c.size() - 1 - i]) / zero.norm_bound());
    }
    v.pass = worst <= 1e-9 && worst_zero <= 1e-9;
    v.detail << "\n    max |eig(h_k) + reverse eig(h_-k)| / ||H|| = " << worst
             << ", asymmetry at k = 0 = " << worst_zero;
  });

  criterion(4, "alpha scaling of the gap, Phi > 0", [&](Verdict& v) {
    SweepOptions o;
    o.scan.grid_n = 9;
    o.scan.refine_depth = 3;
    o.solver.solver = SolverKind::iterative;
    o.threads = threads;
    const ScalingFit f = sweep_alpha(disk, 0.2, kAlphas, o);
    bool band = true;
    for (const ScalingPoint& p : f.points) {
      const double ratio = p.gap / (p.alpha * p.alpha * p.beta * disk.phi());
      band = band && ratio >= 0.7 && ratio <= 1.3;
      v.detail << "\n    alpha = " << p.alpha << ", M = " << p.cutoff << ", gap = " << p.gap
               << ", gap / (alpha^2 beta Phi) = " << ratio;
    }
    v.pass = std::abs(f.slope - 2.0) <= 0.2 && band;
    v.detail << "\n    slope = " << f.slope << " +- " << f.stderr_slope << " (" << threads << " threads, iterative)";
  });

  criterion(5, "beta scaling of the gap, Phi > 0", [&](Verdict& v) {
    SweepOptions o;
    o.scan.grid_n = 9;
    o.scan.refine_depth = 3;
    o.solver.solver = SolverKind::iterative;
    o.threads = threads;
    const ScalingFit f = sweep_beta(disk, 0.3, {0.10, 0.15, 0.20, 0.25, 0.30}, default_cutoff_rule(0.3), o);
    const Theorem1Constant c = theorem1_constant(f, disk.phi());
    v.pass = std::abs(f.slope - 1.0) <= 0.15;
    v.detail << "\n    slope = " << f.slope << " +- " << f.stderr_slope << ", smallest C = " << c.c_fit
             << ", gap / (alpha^2 beta Phi) in [" << c.min_ratio << ", " << c.max_ratio << "]";
  });

  criterion(6, "beta^3 scaling of the gap, Phi = 0 (annulus(4,1))", [&](Verdict& v) {
    const cplx brute = oracle::hyp1_bruteforce(oracle::annulus(4, 1));
    const double s = hyp1_sum(ring, 8).value;
    const double reference = std::abs(s) / (8 * kPi * kPi);
    std::vector<double> betas;
    for (double t : {0.02, 0.04, 0.06, 0.08, 0.10}) betas.push_back(t / ring.linf_norm());
    SweepOptions o;
    o.scan.grid_n = 9;
    o.scan.refine_depth = 2;
    o.threads = threads;
    const ScalingFit f = sweep_beta(ring, 1.0, betas, 8, o);
    bool prefactor = true;
    for (const ScalingPoint& p : f.points) {
      const double ratio = p.gap / std::pow(p.beta, 3) / reference;
      prefactor = prefactor && ratio >= 0.5 && ratio <= 2.0;
      v.detail << "\n    beta ||chi|| = " << p.beta * ring.linf_norm() << ", gap = " << p.gap
               << ", gap / beta^3 / (|S| / 8 pi^2) = " << ratio;
    }
    v.pass = std::abs(brute.real() - s) <= 1e-10 * std::abs(s) && s != 0 && std::abs(f.slope - 3.0) <= 0.3 &&
             prefactor;
    v.detail << "\n    S = " << s << " (brute force " << brute.real() << "), slope = " << f.slope << " +- "
             << f.stderr_slope;
  });

  criterion(7, "w'(0) against -S / (4 pi^2); w(0) = 0; traceless m_k", [&](Verdict& v) {
    const int M = 8;
    const WPrime w = w_prime_zero(ring, M);
    const double stated = -w.s_chi / (4 * kPi * kPi);
    const double rel = std::abs(stated - w.finite_difference) / std::max(std::abs(stated), std::abs(w.finite_difference));
    const double w0 = w_value(ring, 0.0, M);
    double trace = 0;
    for (const Vec2& k : {Vec2(0, 0), Vec2(0.1, -0.2), Vec2(0.3, 0.4)}) {
      const Matrix2c m = m_matrix(ring, 0.01, k, M).m;
      trace = std::max(trace, std::abs(m.trace()) / m.norm());
    }
    v.pass = rel <= 1e-3 && std::abs(w0) <= 1e-9 && trace <= 1e-9;
    v.detail << "\n    finite difference w'(0) = " << w.finite_difference << ", -S/(4 pi^2) = " << stated
             << ", relative gap = " << rel << "\n    w(0) = " << w0 << ", max |Tr m_k| / ||m_k|| = " << trace
             << "\n    info: S/(2 pi^2) = " << w.analytic << ", relative gap to the finite difference = "
             << w.relative_gap;
  });

  criterion(8, "hyp-1 sum: annulus(40,10) positive, single cosine zero", [&](Verdict& v) {
    const auto t0 = std::chrono::steady_clock::now();
    const cplx brute = oracle::hyp1_bruteforce(oracle::annulus(40, 10));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double fast = hyp1_sum(annulus_profile(40, 10), 50).value;
    const double cosine = hyp1_sum(MassProfile::modes({{{3, 1}, 1.0}, {{-3, -1}, 1.0}}), 4).value;
    v.pass = brute.real() > 0 && seconds <= 120 && cosine == 0.0;
    v.detail << "\n    brute force S = " << brute.real() << " (" << seconds << " s), FFT S = " << fast
             << ", single cosine S = " << cosine;
  });

  criterion(9, "alpha slopes of ||W R0(0) U|| (1.0) and ||F(0) - P0 block|| (3.0)", [&](Verdict& v) {
    const double beta = 0.2;
    std::vector<double> wru, coupling;
    for (double a : kAlphas) {
      const int M = default_cutoff_rule(a);
      wru.push_back(wru_norm(disk, a, beta, 0.0, M).norm);
      const FiberOperator op = assemble(disk, a, beta, Vec2::Zero(), M);
      coupling.push_back(coupling_correction(op, 0.0).norm());
    }
    const double s1 = log_slope(kAlphas, wru), s2 = log_slope(kAlphas, coupling);
    v.pass = std::abs(s1 - 1.0) <= 0.25 && std::abs(s2 - 3.0) <= 0.3;
    v.detail << "\n    ||W R0 U|| slope = " << s1 << ", ||F(0) - P0 block|| slope = " << s2;
  });

  criterion(10, "||F_k(0)^{-1}|| <= pi / (2 beta^2) for |k| > 2 beta^2 / pi^2, Phi = 0", [&](Verdict& v) {
    const double beta = 0.01;
    const double threshold = 2 * beta * beta / (kPi * kPi);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
      // log-uniform radius in (threshold, 1/2], uniform direction
      const double r = threshold * std::pow(0.5 / threshold, 0.01 + 0.99 * unit(rng));
      const double phi = 2 * kPi * unit(rng);
      const Vec2 k(r * std::cos(phi), r * std::sin(phi));
      worst = std::max(worst, feshbach_inverse_norm(ring, beta, k, 6) * 2 * beta * beta / kPi);
    }
    v.pass = worst <= 1.0;
    v.detail << "\n    beta = " << beta << ", max ||F^{-1}|| / (pi / 2 beta^2) over 20 k = " << worst;
  });

  criterion(11, "resolvent kernel: K0, K1 accuracy, bound ratio envelope, r K1(r) -> 1", [&](Verdict& v) {
    double worst = 0;
    for (int i = 0; i <= 60; ++i) {
      const double x = 0.1 * std::pow(100.0, i / 60.0);
      worst = std::max({worst, std::abs(bessel_k0(x) - oracle::k0(x)) / oracle::k0(x),
                        std::abs(bessel_k1(x) - oracle::k1(x)) / oracle::k1(x)});
    }
    const KernelBoundReport r = kernel_bound_check(0.05, 4.0, 200);
    const double limit = 1e-3 * bessel_k1(1e-3);
    v.pass = worst <= 1e-8 && r.within_envelope && std::abs(limit - 1) <= 1e-4;
    v.detail << "\n    max relative error vs heat-kernel quadrature = " << worst << "\n    max bound ratio = "
             << r.max_bound_ratio << " <= envelope " << r.envelope << "\n    r K1(r) at r = 1e-3: " << limit;
  });

  criterion(12, "iterative vs dense; matrix-free vs dense apply", [&](Verdict& v) {
    double eig = 0, apply = 0;
    for (int t = 0; t < 10; ++t) {
      const int M = 6 + t;  // n = 2 (2M + 1)^2 <= 1922
      const Vec2 k(unit(rng) - 0.5, unit(rng) - 0.5);
      const MassProfile p = t % 3 == 2 ? ring : normalize(MassProfile::disk(0.1 + 0.3 * unit(rng)));
      const double alpha = t % 3 == 2 ? 1.0 : 0.3 + 0.7 * unit(rng);
      const double beta = t % 3 == 2 ? 0.02 : 0.5 * unit(rng) + 0.1;
      const FiberOperator op = assemble(p, alpha, beta, k, M);
      const auto dense = eigenvalues_dense(op, false).eigenvalues;
      IterativeOptions io;
      io.count = 2;
      const auto iter = eigenvalues_near_zero(op, io).eigenvalues;
      // magnitudes against the two smallest dense ones, signed values against the nearest
      std::vector<double> da, ia;
      for (double d : dense) da.push_back(std::abs(d));
      for (double d : iter) ia.push_back(std::abs(d));
      std::sort(da.begin(), da.end());
      std::sort(ia.begin(), ia.end());
      for (int i = 0; i < 2; ++i) {
        eig = std::max(eig, std::abs(ia[i] - da[i]) / da[i]);
        double nearest = std::numeric_limits<double>::infinity();
        for (double d : dense) nearest = std::min(nearest, std::abs(iter[i] - d));
        eig = std::max(eig, nearest / std::abs(iter[i]));
      }

      const MatrixXc x = MatrixXc::Random(op.dim(), 3);
      MatrixXc y1, y2;
      op.apply(x, y1);
      op.apply_matrix_free(x, y2);
      apply = std::max(apply, (y1 - y2).cwiseAbs().maxCoeff() / (op.norm_bound() * x.cwiseAbs().maxCoeff()));
    }
    v.pass = eig <= 1e-8 && apply <= 1e-12;
    v.detail << "\n    max relative eigenvalue difference = " << eig << ", max apply difference = " << apply;
  });

  criterion(13, "repeated gap and sweep-beta runs are bit-identical", [&](Verdict& v) {
    const fs::path dir = fs::temp_directory_path() / "antidot_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream(dir / "run.ini") << "[potential]\nshape = disk\nr = 0.2\nnormalized = true\n"
                                        "[fiber]\nalpha = 0.3\nbeta = 0.2\nM = 6\n"
                                        "[scan]\ngrid_n = 5\nrefine_depth = 1\n"
                                        "[sweep]\nbetas = 0.1, 0.2, 0.3\n"
                                        "[output]\nseed = 7\n";
    }
    bool same = true;
    for (const std::string cmd : {"gap", "sweep-beta"}) {
      for (const char* run : {"a", "b"}) {
        const std::string cfg = (dir / "run.ini").string(), out = (dir / (cmd + run)).string();
        const char* argv[] = {"antidot", cmd.c_str(), "--config", cfg.c_str(), "--out", out.c_str(), "--threads", "0"};
        std::ostringstream sink;
        if (cli::run(8, argv, sink, sink) != cli::kExitOk) throw NumericalError(cmd + " failed: " + sink.str());
      }
      for (const auto& entry : fs::directory_iterator(dir / (cmd + "a"))) {
        const std::string name = entry.path().filename().string();
        if (name == "manifest.json") continue;  // carries the wall time
        const bool eq = read_file(entry.path()) == read_file(dir / (cmd + "b") / name);
        same = same && eq;
        v.detail << "\n    " << cmd << "/" << name << (eq ? " identical" : " DIFFERS");
      }
    }
    v.pass = same;
  });

  std::cout << passed << " passed, " << failed << " failed\n";
  return 0;
}
