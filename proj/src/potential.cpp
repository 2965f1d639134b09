#include <antidot/bessel.hpp>
#include <antidot/fft.hpp>
#include <antidot/potential.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace antidot {
namespace {

// sin(pi x) / (pi x) with exact zeros at nonzero integers.
double sinc_pi(double x) {
  if (x == 0.0) return 1.0;
  const double r = std::remainder(x, 2.0);
  if (r == 0.0 || std::abs(r) == 1.0) return 0.0;
  return std::sin(kPi * r) / (kPi * x);
}

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int modes_extent(const ModesShape& s) {
  int extent = 0;
  for (const auto& [m, c] : s.coefficients)
    if (c != cplx(0)) extent = std::max({extent, std::abs(m.first), std::abs(m.second)});
  return extent;
}

// Samples of a mode profile (unit height) on the G x G grid x_j = -1/2 + (j + offset)/G.
std::vector<double> sample_modes(const ModesShape& s, int G, double offset = 0.5) {
  std::vector<cplx> grid(static_cast<std::size_t>(G) * G, cplx(0));
  const double shift = -0.5 + offset / G;
  for (const auto& [m, c] : s.coefficients) {
    const double phase = kTwoPi * (m.first + m.second) * shift;
    const int a = ((m.first % G) + G) % G;
    const int b = ((m.second % G) + G) % G;
    grid[static_cast<std::size_t>(a) * G + b] += c * std::polar(1.0, phase);
  }
  // inverse transform without the 1/G^2 factor: sum_m c_m e^{+2 pi i m j / G}
  fft2(grid, G, true);
  std::vector<double> values(grid.size());
  const double scale = static_cast<double>(G) * G;
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = grid[i].real() * scale;
  return values;
}

int modes_sampling_size(const ModesShape& s) { return smooth_size(std::max(64, 8 * (2 * modes_extent(s) + 1))); }

double grid_coordinate(int j, int n) { return -0.5 + (j + 0.5) / n; }

void check_grid_resolution(const GridShape& g, double alpha, int max_abs_m) {
  if (max_abs_m == 0) return;
  const double per_oscillation = g.n / (alpha * max_abs_m);
  if (per_oscillation < 8.0) {
    std::ostringstream msg;
    msg << "fourier_coeff: grid of " << g.n << " samples gives " << per_oscillation
        << " samples per oscillation at |m_i| = " << max_abs_m << " (alpha = " << alpha
        << "), need at least 8";
    throw ValidationError(msg.str());
  }
}

cplx grid_coeff(const GridShape& g, double alpha, const Vec2i& m) {
  check_grid_resolution(g, alpha, std::max(std::abs(m(0)), std::abs(m(1))));
  std::vector<cplx> phase2(g.n);
  for (int j = 0; j < g.n; ++j) phase2[j] = std::polar(1.0, -kTwoPi * alpha * m(1) * grid_coordinate(j, g.n));
  cplx sum = 0;
  for (int i = 0; i < g.n; ++i) {
    cplx row = 0;
    for (int j = 0; j < g.n; ++j) row += g.values[static_cast<std::size_t>(i) * g.n + j] * phase2[j];
    sum += row * std::polar(1.0, -kTwoPi * alpha * m(0) * grid_coordinate(i, g.n));
  }
  return alpha * alpha * sum / (static_cast<double>(g.n) * g.n);
}

void check_alpha(const MassProfile& p, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "alpha = " << alpha << " outside (0, 1]";
    throw ValidationError(msg.str());
  }
  if (p.full_cell_support() && alpha != 1.0)
    throw ValidationError("profiles supported on the whole cell only admit alpha = 1");
}

}  // namespace

MassProfile::MassProfile(Shape shape, double height) : shape_(std::move(shape)), height_(height) {
  compute_norms();
}

MassProfile MassProfile::disk(double radius, double height) {
  if (!(radius > 0.0 && radius < 0.5)) throw ValidationError("disk radius must lie in (0, 1/2)");
  return MassProfile(DiskShape{radius}, height);
}

MassProfile MassProfile::square(double side, double height) {
  if (!(side > 0.0 && side <= 1.0)) throw ValidationError("square side must lie in (0, 1]");
  return MassProfile(SquareShape{side}, height);
}

MassProfile MassProfile::modes(std::map<std::pair<int, int>, cplx> coefficients, double height) {
  for (const auto& [m, c] : coefficients) {
    const auto it = coefficients.find({-m.first, -m.second});
    const cplx mirror = it == coefficients.end() ? cplx(0) : it->second;
    if (std::abs(mirror - std::conj(c)) > 1e-12)
      throw ValidationError("mode coefficients must satisfy c(-m) = conj(c(m)) for a real profile");
  }
  return MassProfile(ModesShape{std::move(coefficients)}, height);
}

MassProfile MassProfile::grid(int n, std::vector<double> values, double height, bool full_cell_support) {
  if (n < 2 || values.size() != static_cast<std::size_t>(n) * n)
    throw ValidationError("grid profile needs n >= 2 and n*n samples");
  return MassProfile(GridShape{n, std::move(values), full_cell_support}, height);
}

bool MassProfile::full_cell_support() const {
  return std::visit(overloaded{[](const ModesShape&) { return true; },
                               [](const GridShape& g) { return g.full_cell_support; },
                               [](const SquareShape& s) { return s.side == 1.0; },
                               [](const DiskShape&) { return false; }},
                    shape_);
}

std::optional<int> MassProfile::mode_extent() const {
  if (const auto* s = std::get_if<ModesShape>(&shape_)) return modes_extent(*s);
  return std::nullopt;
}

void MassProfile::compute_norms() {
  const double h = height_, ah = std::abs(height_);
  std::visit(overloaded{
                 [&](const DiskShape& d) {
                   const double area = kPi * d.radius * d.radius;
                   phi_ = h * area;
                   l1_ = ah * area;
                   l2_ = ah * std::sqrt(area);
                   linf_ = ah;
                 },
                 [&](const SquareShape& s) {
                   const double area = s.side * s.side;
                   phi_ = h * area;
                   l1_ = ah * area;
                   l2_ = ah * s.side;
                   linf_ = ah;
                 },
                 [&](const ModesShape& s) {
                   const auto zero = s.coefficients.find({0, 0});
                   phi_ = zero == s.coefficients.end() ? 0.0 : h * zero->second.real();
                   double sq = 0;
                   for (const auto& [m, c] : s.coefficients) sq += std::norm(c);
                   l2_ = ah * std::sqrt(sq);
                   const int G = modes_sampling_size(s);
                   const auto values = sample_modes(s, G);
                   double sum_abs = 0, max_abs = 0;
                   for (double v : values) {
                     sum_abs += std::abs(v);
                     max_abs = std::max(max_abs, std::abs(v));
                   }
                   l1_ = ah * sum_abs / values.size();
                   for (double v : sample_modes(s, G, 0.0)) max_abs = std::max(max_abs, std::abs(v));
                   linf_ = ah * max_abs;
                 },
                 [&](const GridShape& g) {
                   double sum = 0, sum_abs = 0, sum_sq = 0, max_abs = 0;
                   for (double v : g.values) {
                     sum += v;
                     sum_abs += std::abs(v);
                     sum_sq += v * v;
                     max_abs = std::max(max_abs, std::abs(v));
                   }
                   const double count = static_cast<double>(g.values.size());
                   phi_ = h * sum / count;
                   l1_ = ah * sum_abs / count;
                   l2_ = ah * std::sqrt(sum_sq / count);
                   linf_ = ah * max_abs;
                 }},
             shape_);
}

double MassProfile::value(const Vec2& x) const {
  return height_ *
         std::visit(overloaded{
                        [&](const DiskShape& d) { return x.norm() < d.radius ? 1.0 : 0.0; },
                        [&](const SquareShape& s) {
                          return std::abs(x(0)) < s.side / 2 && std::abs(x(1)) < s.side / 2 ? 1.0 : 0.0;
                        },
                        [&](const ModesShape& s) {
                          cplx v = 0;
                          for (const auto& [m, c] : s.coefficients)
                            v += c * std::polar(1.0, kTwoPi * (m.first * x(0) + m.second * x(1)));
                          return v.real();
                        },
                        [&](const GridShape& g) {
                          const int i = std::clamp(static_cast<int>(std::floor((x(0) + 0.5) * g.n)), 0, g.n - 1);
                          const int j = std::clamp(static_cast<int>(std::floor((x(1) + 0.5) * g.n)), 0, g.n - 1);
                          return g.values[static_cast<std::size_t>(i) * g.n + j];
                        }},
                    shape_);
}

MassProfile MassProfile::scaled(double c) const {
  MassProfile p(shape_, height_ * c);
  p.normalized_ = false;
  return p;
}

MassProfile MassProfile::sqrt_abs(bool signed_root, int min_samples) const {
  const double root = std::sqrt(std::abs(height_));
  const double sign = signed_root && height_ < 0 ? -1.0 : 1.0;
  if (std::holds_alternative<DiskShape>(shape_) || std::holds_alternative<SquareShape>(shape_))
    return MassProfile(shape_, sign * root);
  auto transform = [&](std::vector<double> values) {
    for (double& v : values) {
      const double s = signed_root && v * height_ < 0 ? -1.0 : 1.0;
      v = s * std::sqrt(std::abs(v));
    }
    return values;
  };
  if (const auto* g = std::get_if<GridShape>(&shape_))
    return MassProfile(GridShape{g->n, transform(g->values), g->full_cell_support}, root);
  const auto& s = std::get<ModesShape>(shape_);
  const int G = smooth_size(std::max(modes_sampling_size(s), min_samples));
  return MassProfile(GridShape{G, transform(sample_modes(s, G)), true}, root);
}

std::string MassProfile::describe() const {
  std::ostringstream os;
  os << std::setprecision(10);
  std::visit(overloaded{[&](const DiskShape& d) { os << "disk(r=" << d.radius << ")"; },
                        [&](const SquareShape& s) { os << "square(a=" << s.side << ")"; },
                        [&](const ModesShape& s) { os << "modes(" << s.coefficients.size() << " coefficients)"; },
                        [&](const GridShape& g) { os << "grid(" << g.n << "x" << g.n << ")"; }},
             shape_);
  os << " height=" << height_;
  return os.str();
}

MassProfile normalize(const MassProfile& profile) {
  if (!(profile.l2_norm() > 0.0)) throw ValidationError("normalize: profile has zero L2 norm");
  const double c = 1.0 / profile.l2_norm();
  MassProfile p = profile;
  if (profile.normalized() && std::abs(profile.l2_norm() - 1.0) <= 1e-12) return p;
  p.height_ *= c;
  p.phi_ *= c;
  p.l1_ *= c;
  p.l2_ *= c;
  p.linf_ *= c;
  p.normalized_ = true;
  return p;
}

MassProfile annulus_profile(int N, int width) {
  if (!(width >= 1 && N > width)) throw ValidationError("annulus needs N > width >= 1");
  const int lo2 = (N - width) * (N - width);
  const int hi2 = (N + width) * (N + width);
  std::map<std::pair<int, int>, cplx> c;
  for (int a = -(N + width); a <= N + width; ++a)
    for (int b = -(N + width); b <= N + width; ++b) {
      const int r2 = a * a + b * b;
      if (r2 >= lo2 && r2 <= hi2) c[{a, b}] = 1.0;
    }
  return MassProfile::modes(std::move(c));
}

cplx fourier_coeff(const MassProfile& profile, double alpha, const Vec2i& m) {
  check_alpha(profile, alpha);
  const double h = profile.height();
  return std::visit(
      overloaded{[&](const DiskShape& d) -> cplx {
                   const double q = m.cast<double>().norm();
                   if (q == 0.0) return h * alpha * alpha * kPi * d.radius * d.radius;
                   return h * alpha * d.radius * bessel_j1(kTwoPi * d.radius * alpha * q) / q;
                 },
                 [&](const SquareShape& s) -> cplx {
                   const double w = alpha * s.side;
                   return h * w * w * sinc_pi(w * m(0)) * sinc_pi(w * m(1));
                 },
                 [&](const ModesShape& s) -> cplx {
                   const auto it = s.coefficients.find({m(0), m(1)});
                   return it == s.coefficients.end() ? cplx(0) : h * it->second;
                 },
                 [&](const GridShape& g) -> cplx { return h * grid_coeff(g, alpha, m); }},
      profile.shape());
}

FourierTable::FourierTable(const MassProfile& profile, double alpha, int cutoff)
    : cutoff_(cutoff), alpha_(alpha) {
  if (cutoff < 1) throw ValidationError("Fourier table cutoff must be >= 1");
  check_alpha(profile, alpha);
  const int span = 2 * cutoff;
  const int w = 2 * span + 1;
  entries_.assign(static_cast<std::size_t>(w) * w, cplx(0));
  auto at = [&](int d1, int d2) -> cplx& {
    return entries_[static_cast<std::size_t>((d1 + span) * w + (d2 + span))];
  };
  if (const auto* g = std::get_if<GridShape>(&profile.shape())) {
    // Separable sums: first over x2 for each d2, then over x1.
    check_grid_resolution(*g, alpha, span);
    const int n = g->n;
    std::vector<cplx> partial(static_cast<std::size_t>(n) * w);
    for (int i = 0; i < n; ++i)
      for (int d2 = -span; d2 <= span; ++d2) {
        cplx s = 0;
        for (int j = 0; j < n; ++j)
          s += g->values[static_cast<std::size_t>(i) * n + j] *
               std::polar(1.0, -kTwoPi * alpha * d2 * grid_coordinate(j, n));
        partial[static_cast<std::size_t>(i) * w + (d2 + span)] = s;
      }
    const double scale = profile.height() * alpha * alpha / (static_cast<double>(n) * n);
    for (int d1 = 0; d1 <= span; ++d1)
      for (int d2 = -span; d2 <= span; ++d2) {
        if (d1 == 0 && d2 < 0) continue;
        cplx s = 0;
        for (int i = 0; i < n; ++i)
          s += partial[static_cast<std::size_t>(i) * w + (d2 + span)] *
               std::polar(1.0, -kTwoPi * alpha * d1 * grid_coordinate(i, n));
        at(d1, d2) = scale * s;
      }
  } else {
    for (int d1 = 0; d1 <= span; ++d1)
      for (int d2 = -span; d2 <= span; ++d2) {
        if (d1 == 0 && d2 < 0) continue;
        at(d1, d2) = fourier_coeff(profile, alpha, Vec2i(d1, d2));
      }
  }
  // Exact conjugate symmetry keeps the assembled operator exactly Hermitian.
  at(0, 0) = at(0, 0).real();
  for (int d1 = 0; d1 <= span; ++d1)
    for (int d2 = -span; d2 <= span; ++d2) {
      if (d1 == 0 && d2 <= 0) continue;
      at(-d1, -d2) = std::conj(at(d1, d2));
    }
}

double FourierTable::absolute_sum() const {
  double s = 0;
  for (const cplx& c : entries_) s += std::abs(c);
  return s;
}

void FourierTable::write_csv(std::ostream& os) const {
  os << "m1,m2,re,im\r\n";
  os << std::setprecision(17);
  const int span = 2 * cutoff_;
  for (int d1 = -span; d1 <= span; ++d1)
    for (int d2 = -span; d2 <= span; ++d2) {
      const cplx c = (*this)(d1, d2);
      os << d1 << ',' << d2 << ',' << c.real() << ',' << c.imag() << "\r\n";
    }
}

Hyp1Result hyp1_sum(const MassProfile& profile, int cutoff) {
  if (cutoff < 1) throw ValidationError("hyp1: cutoff must be >= 1");
  if (const auto extent = profile.mode_extent(); extent && *extent > cutoff) {
    std::ostringstream msg;
    msg << "hyp1: cutoff " << cutoff << " is smaller than the mode support " << *extent
        << "; truncation would change S";
    throw ValidationError(msg.str());
  }
  Hyp1Result result;
  result.cutoff = cutoff;
  result.phi_nonzero = profile.phi() != 0.0;

  const FourierTable table(profile, 1.0, cutoff);
  const int C = cutoff;
  const int n = 2 * C + 1;
  const std::size_t box = static_cast<std::size_t>(n) * n;

  // a_j(m) = m_j c(m) / |m|^2 on the box, zero at m = 0.
  std::vector<std::vector<cplx>> a(2, std::vector<cplx>(box, cplx(0)));
  std::vector<std::pair<int, int>> support_a;
  for (int m1 = -C; m1 <= C; ++m1)
    for (int m2 = -C; m2 <= C; ++m2) {
      if (m1 == 0 && m2 == 0) continue;
      const cplx c = table(m1, m2);
      if (c == cplx(0)) continue;
      const double q2 = static_cast<double>(m1 * m1 + m2 * m2);
      const std::size_t idx = static_cast<std::size_t>(m1 + C) * n + (m2 + C);
      a[0][idx] = static_cast<double>(m1) * c / q2;
      a[1][idx] = static_cast<double>(m2) * c / q2;
      support_a.emplace_back(m1, m2);
    }
  std::vector<std::pair<int, int>> support_c;
  for (int d1 = -2 * C; d1 <= 2 * C; ++d1)
    for (int d2 = -2 * C; d2 <= 2 * C; ++d2)
      if (table(d1, d2) != cplx(0)) support_c.emplace_back(d1, d2);

  // b_j = c * a_j restricted to the box; scatter over supports when sparse
  // (keeps exact zeros exact), FFT otherwise.
  std::vector<std::vector<cplx>> b(2, std::vector<cplx>(box, cplx(0)));
  std::vector<std::vector<double>> b_abs(2, std::vector<double>(box, 0.0));
  const double pair_work = static_cast<double>(support_a.size()) * static_cast<double>(support_c.size());
  if (pair_work <= 5e7) {
    for (const auto& [p1, p2] : support_a) {
      const std::size_t src = static_cast<std::size_t>(p1 + C) * n + (p2 + C);
      for (const auto& [d1, d2] : support_c) {
        const int q1 = p1 + d1, q2 = p2 + d2;
        if (std::abs(q1) > C || std::abs(q2) > C) continue;
        const std::size_t dst = static_cast<std::size_t>(q1 + C) * n + (q2 + C);
        const cplx c = table(d1, d2);
        for (int j = 0; j < 2; ++j) {
          b[j][dst] += c * a[j][src];
          b_abs[j][dst] += std::abs(c) * std::abs(a[j][src]);
        }
      }
    }
  } else {
    const ConvolutionGrid conv(table, C);
    struct AbsTable {
      const FourierTable& t;
      cplx operator()(int d1, int d2) const { return std::abs(t(d1, d2)); }
    };
    const ConvolutionGrid conv_abs(AbsTable{table}, C);
    std::vector<cplx> abs_in(box), abs_out(box);
    for (int j = 0; j < 2; ++j) {
      conv.apply(a[j].data(), 1, b[j].data(), 1);
      for (std::size_t i = 0; i < box; ++i) abs_in[i] = std::abs(a[j][i]);
      conv_abs.apply(abs_in.data(), 1, abs_out.data(), 1);
      for (std::size_t i = 0; i < box; ++i) b_abs[j][i] = std::abs(abs_out[i]);
    }
  }

  cplx total = 0;
  double magnitude = 0;
  for (int j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < box; ++i) {
      total += std::conj(a[j][i]) * b[j][i];
      magnitude += std::abs(a[j][i]) * b_abs[j][i];
    }
  result.value = total.real();
  result.imag_residual = std::abs(total.imag());
  result.magnitude = magnitude;
  if (result.imag_residual > 1e-10 * std::max(magnitude, 1e-300) && result.imag_residual > 1e-13)
    throw NumericalError("hyp1: complex accumulation has a non-negligible imaginary part");

  if (!profile.mode_extent()) {
    // Advisory tail: sum over the next shell C < max|m_i| <= 2C of |c|^2 max|c| / |m|^2.
    double max_c = 0;
    for (const auto& [d1, d2] : support_c) max_c = std::max(max_c, std::abs(table(d1, d2)));
    double tail = 0;
    for (int m1 = -2 * C; m1 <= 2 * C; ++m1)
      for (int m2 = -2 * C; m2 <= 2 * C; ++m2) {
        if (std::max(std::abs(m1), std::abs(m2)) <= C) continue;
        tail += std::norm(table(m1, m2)) * max_c / static_cast<double>(m1 * m1 + m2 * m2);
      }
    result.tail_estimate = tail;
  }
  return result;
}

}  // namespace antidot
