#ifndef ANTIDOT_EXPERIMENTS_HPP
#define ANTIDOT_EXPERIMENTS_HPP

#include <antidot/gapscan.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace antidot {

struct ScalingPoint {
  double parameter = 0;
  double alpha = 0, beta = 0;
  double gap = 0;  ///< half-width
  double residual = 0;
  bool reliable = true;
  int cutoff = 0;
  SolverKind solver = SolverKind::dense;
  Vec2 argmin_k = Vec2::Zero();
  double certified_lower = 0;
};

/// Least squares on (log parameter, log gap) over the reliable points.
struct ScalingFit {
  std::vector<ScalingPoint> points;  ///< sorted by parameter, unreliable ones included
  double slope = 0;
  double intercept = 0;
  double stderr_slope = 0;
  double r_squared = 0;
  std::vector<std::string> warnings;

  void write_csv(std::ostream& os) const;
  /// Two-column whitespace data (parameter gap) for plotting.
  void write_dat(std::ostream& os) const;
};

/// Fit of log y = slope log x + intercept. Needs at least three points with
/// x, y > 0; the result does not depend on the input order.
ScalingFit fit_power_law(std::vector<ScalingPoint> points);

/// max(8, ceil(4 / alpha)).
int default_cutoff_rule(double alpha);

struct SweepOptions {
  ScanSpec scan;
  EigenSolveOptions solver;
  std::function<int(double)> cutoff_rule = default_cutoff_rule;
  /// Dimensions above this switch to the iterative solver.
  Eigen::Index dense_limit = 5000;
  int threads = 1;  ///< parallel sweep points; scans inside run single-threaded
  /// false: sweep_alpha keeps the profile's coefficients fixed (alpha = 1)
  /// for every alpha, the alpha-independent control case.
  bool scale_profile = true;
};

/// Gap half-width versus alpha at fixed beta. Requires Phi > 0 and alpha beta <= 0.2.
ScalingFit sweep_alpha(const MassProfile& profile, double beta, const std::vector<double>& alphas,
                       const SweepOptions& options = {});

/// Gap half-width versus beta at fixed alpha and cutoff. For Phi = 0 every
/// beta must satisfy beta ||chi||_inf < pi / 2.
ScalingFit sweep_beta(const MassProfile& profile, double alpha, const std::vector<double>& betas, int cutoff,
                      const SweepOptions& options = {});

/// C with gap >= alpha^2 beta (Phi - C alpha beta) on a sweep.
struct Theorem1Constant {
  double c_fit = 0;      ///< smallest C satisfying every reliable point
  double max_ratio = 0;  ///< max over points of gap / (alpha^2 beta Phi)
  double min_ratio = 0;
  bool holds = false;    ///< every reliable point satisfies the inequality with c_fit
};

/// Uses the reliable points of a sweep.
Theorem1Constant theorem1_constant(const ScalingFit& fit, double phi);

struct PhysicalGap {
  double L = 0;
  double mu = 0;
  double hbar_vf = 0;
  double beta = 0;       ///< mu L / hbar_vf
  double E_g = 0;        ///< 2 hbar_vf gap / L, the full gap
  double reference = 0;  ///< mu Phi alpha^2
};

PhysicalGap to_physical(double gap_half_width, double alpha, double L, double mu, double hbar_vf, double phi);

}  // namespace antidot

#endif
