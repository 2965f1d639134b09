#ifndef ANTIDOT_GAPSCAN_HPP
#define ANTIDOT_GAPSCAN_HPP

#include <antidot/fiber.hpp>
#include <antidot/potential.hpp>

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace antidot {

struct EigenSolveOptions {
  SolverKind solver = SolverKind::dense;
  IterativeOptions iterative;
  bool polish = true;  ///< Schur-complement refinement when |lambda| < pi/4
  double memory_limit_mb = 2048;
};

struct MinAbsEig {
  double value = 0;         ///< min |lambda|
  double signed_value = 0;  ///< the eigenvalue attaining it
  double residual = 0;      ///< error bound carried by the eigensolver
  bool polished = false;
  SolverKind method = SolverKind::dense;
};

/// Smallest |lambda| of the truncated h_k on a shared kernel.
MinAbsEig min_abs_eig(const std::shared_ptr<const MassKernel>& kernel, double beta, const Vec2& k,
                      const EigenSolveOptions& options = {});

double min_abs_eig(const MassProfile& profile, double alpha, double beta, const Vec2& k, int cutoff,
                   const EigenSolveOptions& options = {});

struct ScanSpec {
  int grid_n = 9;
  int refine_depth = 0;
  bool half_zone = false;
  int threads = 1;  ///< 0 = hardware concurrency
};

struct KSample {
  int i = 0, j = 0;  ///< coordinates on the finest lattice
  Vec2 k = Vec2::Zero();
  int level = 0;          ///< refinement round that introduced the point
  bool mirrored = false;  ///< value taken from -k
  MinAbsEig eig;
};

/// Gap scan over the zone [-1/2, 1/2]^2 with local dyadic refinement.
///
/// Points live on the lattice k = -1/2 + (i, j) / F with F = (grid_n - 1) 2^depth.
/// Every cell of side h carries the bound min(corners) - 2 pi h / sqrt 2 (no
/// point of a square is farther than h / sqrt 2 from its nearest corner) and
/// inherits its parent's bound when that is larger. certified_lower is the
/// minimum over the leaf cells.
struct GapReport {
  double grid_min = 0;
  Vec2 argmin_k = Vec2::Zero();
  double certified_lower = 0;
  int grid_n = 0;
  int refine_depth = 0;
  bool half_zone = false;
  int lattice = 0;  ///< F
  std::vector<double> grid_min_by_level;
  std::vector<double> certified_by_level;
  double max_residual = 0;
  int evaluations = 0;  ///< eigenproblems actually solved
  std::vector<KSample> samples;  ///< sorted by (i, j)

  /// RFC-4180 CSV: i,j,k1,k2,level,mirrored,min_abs,signed,residual,polished.
  void write_per_k_csv(std::ostream& os) const;
};

GapReport global_gap(const MassProfile& profile, double alpha, double beta, int cutoff, const ScanSpec& scan,
                     const EigenSolveOptions& options = {});

/// Runs f(0), ..., f(count - 1) on up to `threads` workers. The first failing
/// index (lowest) has its exception rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& f);

int resolve_threads(int threads);

}  // namespace antidot

#endif
