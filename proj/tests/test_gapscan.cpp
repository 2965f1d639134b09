#include <antidot/gapscan.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

using namespace antidot;

namespace {

MassProfile constant_mass(double height) { return MassProfile::modes({{{0, 0}, cplx(1.0)}}, height); }

}  // namespace

TEST_CASE("min_abs_eig on free and constant-mass fibres") {
  const MassProfile disk = normalize(MassProfile::disk(0.2));
  CHECK(std::abs(min_abs_eig(disk, 0.5, 0.0, Vec2::Zero(), 4)) < 1e-12);
  CHECK(min_abs_eig(disk, 0.5, 0.0, Vec2(0.5, 0.5), 4) == doctest::Approx(kPi * std::sqrt(2.0)).epsilon(1e-13));

  const MassProfile c = constant_mass(2.0);
  const double beta = 0.3;
  for (const Vec2 k : {Vec2(0, 0), Vec2(0.1, -0.2), Vec2(0.3, 0.05), Vec2(-0.45, 0.4)}) {
    const double expect = std::sqrt(4 * kPi * kPi * k.squaredNorm() + beta * beta * 4.0);
    CHECK(min_abs_eig(c, 1.0, beta, k, 5) == doctest::Approx(expect).epsilon(1e-12));
    EigenSolveOptions it;
    it.solver = SolverKind::iterative;
    CHECK(min_abs_eig(c, 1.0, beta, k, 5, it) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("polishing keeps the value inside the solver error window") {
  const MassProfile disk = normalize(MassProfile::disk(0.2));
  auto kernel = std::make_shared<const MassKernel>(disk, 0.4, 6);
  EigenSolveOptions raw;
  raw.polish = false;
  for (const Vec2 k : {Vec2(0, 0), Vec2(0.05, 0.02)}) {
    const MinAbsEig a = min_abs_eig(kernel, 0.2, k, raw);
    const MinAbsEig b = min_abs_eig(kernel, 0.2, k);
    CHECK(b.polished);
    CHECK(std::abs(a.value - b.value) <= 2 * a.residual + 1e-12);
    CHECK(b.residual < a.residual);
  }
}

TEST_CASE("constant mass: gap equals beta * height at k = 0") {
  ScanSpec scan;
  scan.grid_n = 9;
  scan.refine_depth = 2;
  const GapReport r = global_gap(constant_mass(1.0), 1.0, 0.5, 6, scan);
  CHECK(std::abs(r.grid_min - 0.5) < 1e-9);
  CHECK(r.argmin_k.norm() == 0.0);
  CHECK(r.certified_lower <= r.grid_min);
  CHECK(r.lattice == 32);
}

TEST_CASE("beta = 0 is gapless") {
  ScanSpec scan;
  scan.grid_n = 5;
  const GapReport r = global_gap(normalize(MassProfile::disk(0.2)), 0.5, 0.0, 3, scan);
  CHECK(std::abs(r.grid_min) < 1e-12);
  CHECK(r.argmin_k.norm() == 0.0);
}

TEST_CASE("grid preconditions") {
  const MassProfile c = constant_mass(1.0);
  ScanSpec scan;
  scan.grid_n = 8;
  try {
    global_gap(c, 1.0, 0.5, 2, scan);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "grid_n must be odd");
  }
  scan.grid_n = 1;
  CHECK_THROWS_AS(global_gap(c, 1.0, 0.5, 2, scan), ValidationError);
  scan.grid_n = 5;
  scan.refine_depth = -1;
  CHECK_THROWS_AS(global_gap(c, 1.0, 0.5, 2, scan), ValidationError);
  scan.refine_depth = 0;
  scan.threads = -2;
  CHECK_THROWS_AS(global_gap(c, 1.0, 0.5, 2, scan), ValidationError);
}

TEST_CASE("refinement invariants and the certified bound") {
  const MassProfile p = normalize(MassProfile::disk(0.25));
  const double alpha = 0.8, beta = 0.6;
  const int M = 4;
  ScanSpec scan;
  scan.grid_n = 5;
  scan.refine_depth = 3;
  const GapReport r = global_gap(p, alpha, beta, M, scan);
  REQUIRE(r.grid_min_by_level.size() == 4);
  for (std::size_t l = 1; l < r.grid_min_by_level.size(); ++l) {
    CHECK(r.grid_min_by_level[l] <= r.grid_min_by_level[l - 1]);
    CHECK(r.certified_by_level[l] >= r.certified_by_level[l - 1]);
  }
  CHECK(r.certified_lower <= r.grid_min);
  CHECK(r.certified_lower == r.certified_by_level.back());

  // Off-grid samples never undercut the certificate.
  auto kernel = std::make_shared<const MassKernel>(p, alpha, M);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double lowest = 1e300;
  for (int t = 0; t < 100; ++t) lowest = std::min(lowest, min_abs_eig(kernel, beta, Vec2(u(rng), u(rng))).value);
  CHECK(lowest >= r.certified_lower);
}

TEST_CASE("half-zone scan reproduces the full zone") {
  const MassProfile p = normalize(MassProfile::square(0.4));
  ScanSpec scan;
  scan.grid_n = 7;
  scan.refine_depth = 2;
  const GapReport full = global_gap(p, 0.7, 0.5, 4, scan);
  scan.half_zone = true;
  const GapReport half = global_gap(p, 0.7, 0.5, 4, scan);
  CHECK(std::abs(full.grid_min - half.grid_min) < 1e-9);
  CHECK(std::abs(full.certified_lower - half.certified_lower) < 1e-9);
  CHECK(half.evaluations < full.evaluations);
  CHECK(half.samples.size() == full.samples.size());
}

TEST_CASE("scan results do not depend on the thread count") {
  const MassProfile p = normalize(MassProfile::disk(0.3));
  ScanSpec scan;
  scan.grid_n = 5;
  scan.refine_depth = 2;
  scan.threads = 1;
  const GapReport a = global_gap(p, 0.6, 0.4, 3, scan);
  scan.threads = 3;
  const GapReport b = global_gap(p, 0.6, 0.4, 3, scan);
  std::ostringstream ca, cb;
  a.write_per_k_csv(ca);
  b.write_per_k_csv(cb);
  CHECK(ca.str() == cb.str());
  CHECK(a.grid_min == b.grid_min);
  CHECK(a.certified_lower == b.certified_lower);
}

TEST_CASE("per-k CSV layout") {
  ScanSpec scan;
  scan.grid_n = 3;
  const GapReport r = global_gap(constant_mass(1.0), 1.0, 0.2, 2, scan);
  std::ostringstream os;
  r.write_per_k_csv(os);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  std::getline(is, line);
  CHECK(line == "i,j,k1,k2,level,mirrored,min_abs,signed,residual,polished\r");
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  for (int threads : {1, 4}) {
    try {
      parallel_for(20, threads, [](int i) {
        if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
  }
}
