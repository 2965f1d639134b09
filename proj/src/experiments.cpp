#include <antidot/experiments.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace antidot {

namespace {

void check_parameters(const std::vector<double>& values, const char* name) {
  for (double v : values)
    if (!(v > 0) || !std::isfinite(v)) {
      std::ostringstream msg;
      msg << name << " values must be positive (got " << v << "); a log fit is undefined otherwise";
      throw ValidationError(msg.str());
    }
}

ScalingPoint run_point(const MassProfile& profile, double alpha, double beta, int cutoff, double parameter,
                       const SweepOptions& options) {
  ScanSpec scan = options.scan;
  scan.threads = 1;
  EigenSolveOptions solver = options.solver;
  if (PlaneWaveBasis(cutoff).dim() > options.dense_limit) solver.solver = SolverKind::iterative;
  const double kernel_alpha = options.scale_profile ? alpha : 1.0;
  const GapReport r = global_gap(profile, kernel_alpha, beta, cutoff, scan, solver);
  ScalingPoint p;
  p.parameter = parameter;
  p.alpha = alpha;
  p.beta = beta;
  p.gap = r.grid_min;
  p.cutoff = cutoff;
  p.solver = solver.solver;
  p.argmin_k = r.argmin_k;
  p.certified_lower = r.certified_lower;
  // Residual of the point that sets the minimum.
  for (const KSample& s : r.samples)
    if (s.k == r.argmin_k) p.residual = s.eig.residual;
  p.reliable = p.gap >= 10 * p.residual;
  return p;
}

ScalingFit run_sweep(std::vector<double> parameters, const SweepOptions& options,
                     const std::function<ScalingPoint(double)>& point) {
  std::vector<ScalingPoint> points(parameters.size());
  parallel_for(static_cast<int>(parameters.size()), options.threads,
               [&](int i) { points[static_cast<std::size_t>(i)] = point(parameters[static_cast<std::size_t>(i)]); });
  return fit_power_law(std::move(points));
}

}  // namespace

ScalingFit fit_power_law(std::vector<ScalingPoint> points) {
  if (points.size() < 3) throw ValidationError("a scaling fit needs at least 3 points");
  std::sort(points.begin(), points.end(), [](const ScalingPoint& a, const ScalingPoint& b) {
    return a.parameter < b.parameter || (a.parameter == b.parameter && a.gap < b.gap);
  });
  ScalingFit fit;
  std::vector<double> x, y;
  for (const ScalingPoint& p : points) {
    if (!(p.parameter > 0)) throw ValidationError("scaling fit: parameters must be positive");
    if (!p.reliable) {
      std::ostringstream msg;
      msg << "point " << p.parameter << " excluded: gap " << p.gap << " below 10x solver residual " << p.residual;
      fit.warnings.push_back(msg.str());
      continue;
    }
    if (!(p.gap > 0)) throw NumericalError("scaling fit: non-positive gap at parameter " + std::to_string(p.parameter));
    x.push_back(std::log(p.parameter));
    y.push_back(std::log(p.gap));
  }
  fit.points = std::move(points);
  const std::size_t n = x.size();
  if (n < 3) throw NumericalError("scaling fit: fewer than 3 reliable points");

  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw ValidationError("scaling fit: parameters must not all coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    ssr += e * e;
  }
  fit.stderr_slope = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  // A flat response (slope 0 exactly) leaves only round-off in syy.
  const double flat = 1e-24 * static_cast<double>(n) * (1 + my * my);
  fit.r_squared = syy > flat ? 1 - ssr / syy : 1.0;
  return fit;
}

void ScalingFit::write_csv(std::ostream& os) const {
  std::ostringstream line;
  line.precision(17);
  os << "parameter,gap,residual,reliable,cutoff,solver,argmin_k1,argmin_k2,certified_lower\r\n";
  for (const ScalingPoint& p : points) {
    line.str("");
    line << p.parameter << ',' << p.gap << ',' << p.residual << ',' << (p.reliable ? 1 : 0) << ',' << p.cutoff << ','
         << to_string(p.solver) << ',' << p.argmin_k(0) << ',' << p.argmin_k(1) << ',' << p.certified_lower << "\r\n";
    os << line.str();
  }
}

void ScalingFit::write_dat(std::ostream& os) const {
  std::ostringstream line;
  line.precision(17);
  os << "# parameter gap_half_width\n";
  for (const ScalingPoint& p : points) {
    if (!p.reliable) continue;
    line.str("");
    line << p.parameter << ' ' << p.gap << '\n';
    os << line.str();
  }
}

int default_cutoff_rule(double alpha) {
  if (!(alpha > 0)) throw ValidationError("cutoff rule: alpha must be positive");
  return std::max(8, static_cast<int>(std::ceil(4.0 / alpha)));
}

ScalingFit sweep_alpha(const MassProfile& profile, double beta, const std::vector<double>& alphas,
                       const SweepOptions& options) {
  if (alphas.size() < 3) throw ValidationError("sweep_alpha: a scaling fit needs at least 3 points");
  check_parameters(alphas, "alpha");
  if (!(profile.phi() > 0)) throw ValidationError("sweep_alpha requires Phi > 0");
  if (!(beta > 0)) throw ValidationError("sweep_alpha requires beta > 0");
  for (double a : alphas) {
    if (a > 1) throw ValidationError("sweep_alpha: alpha must lie in (0,1]");
    if (a * beta > 0.2) throw ValidationError("sweep_alpha: alpha beta must be <= 0.2");
  }
  return run_sweep(alphas, options, [&](double a) {
    return run_point(profile, a, beta, options.cutoff_rule(a), a, options);
  });
}

ScalingFit sweep_beta(const MassProfile& profile, double alpha, const std::vector<double>& betas, int cutoff,
                      const SweepOptions& options) {
  if (betas.size() < 3) throw ValidationError("sweep_beta: a scaling fit needs at least 3 points");
  check_parameters(betas, "beta");
  if (!std::is_sorted(betas.begin(), betas.end()) ||
      std::adjacent_find(betas.begin(), betas.end()) != betas.end())
    throw ValidationError("sweep_beta: betas must be strictly ascending");
  if (!(alpha > 0 && alpha <= 1)) throw ValidationError("sweep_beta: alpha must lie in (0,1]");
  if (profile.phi() == 0.0)
    for (double b : betas)
      if (!(b * profile.linf_norm() < kPi / 2))
        throw ValidationError("sweep_beta: Phi = 0 runs need beta ||chi||_inf < pi/2");
  return run_sweep(betas, options, [&](double b) { return run_point(profile, alpha, b, cutoff, b, options); });
}

Theorem1Constant theorem1_constant(const ScalingFit& fit, double phi) {
  if (!(phi > 0)) throw ValidationError("theorem1_constant requires Phi > 0");
  Theorem1Constant out;
  out.c_fit = -std::numeric_limits<double>::infinity();
  out.min_ratio = std::numeric_limits<double>::infinity();
  int used = 0;
  for (const ScalingPoint& p : fit.points) {
    if (!p.reliable) continue;
    const double scale = p.alpha * p.alpha * p.beta;
    out.c_fit = std::max(out.c_fit, (phi - p.gap / scale) / (p.alpha * p.beta));
    out.max_ratio = std::max(out.max_ratio, p.gap / (scale * phi));
    out.min_ratio = std::min(out.min_ratio, p.gap / (scale * phi));
    ++used;
  }
  if (used == 0) throw ValidationError("theorem1_constant: no reliable points");
  out.holds = true;
  for (const ScalingPoint& p : fit.points) {
    if (!p.reliable) continue;
    const double bound = p.alpha * p.alpha * p.beta * (phi - out.c_fit * p.alpha * p.beta);
    if (p.gap < bound * (1 - 1e-12)) out.holds = false;
  }
  return out;
}

PhysicalGap to_physical(double gap_half_width, double alpha, double L, double mu, double hbar_vf, double phi) {
  if (!(gap_half_width >= 0)) throw ValidationError("to_physical: gap half-width must be >= 0");
  if (!(alpha > 0 && alpha <= 1)) throw ValidationError("to_physical: alpha must lie in (0,1]");
  if (!(L > 0)) throw ValidationError("to_physical: L must be > 0");
  if (!(mu >= 0)) throw ValidationError("to_physical: mu must be >= 0");
  if (!(hbar_vf > 0)) throw ValidationError("to_physical: hbar_vf must be > 0");
  PhysicalGap g;
  g.L = L;
  g.mu = mu;
  g.hbar_vf = hbar_vf;
  g.beta = mu * L / hbar_vf;
  g.E_g = 2 * gap_half_width * hbar_vf / L;
  g.reference = mu * phi * alpha * alpha;
  return g;
}

}  // namespace antidot
