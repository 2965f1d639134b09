#include <antidot/feshbach.hpp>
#include <antidot/gapscan.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace antidot {

int resolve_threads(int threads) {
  if (threads < 0) throw ValidationError("threads must be >= 0");
  if (threads == 0) return std::max(1u, std::thread::hardware_concurrency());
  return threads;
}

void parallel_for(int count, int threads, const std::function<void(int)>& f) {
  const int workers = std::min(resolve_threads(threads), std::max(count, 1));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex guard;
  int failed_index = std::numeric_limits<int>::max();
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

MinAbsEig min_abs_eig(const std::shared_ptr<const MassKernel>& kernel, double beta, const Vec2& k,
                      const EigenSolveOptions& options) {
  const bool dense = options.solver == SolverKind::dense;
  const FiberOperator op(kernel, beta, k, AssembleOptions{dense, options.memory_limit_mb});

  MinAbsEig out;
  out.method = options.solver;
  Spectrum spectrum;
  if (dense) {
    spectrum = eigenvalues_dense(op, false);
    // Backward-stable tridiagonalisation: each eigenvalue is exact for a matrix
    // within n eps ||H|| of the input.
    out.residual = static_cast<double>(op.dim()) * std::numeric_limits<double>::epsilon() * op.norm_bound();
  } else {
    spectrum = eigenvalues_near_zero(op, options.iterative);
    out.residual = spectrum.residual_bound;
  }
  const auto& ev = spectrum.eigenvalues;
  if (ev.empty()) throw NumericalError("min_abs_eig: empty spectrum");
  double best = ev.front();
  for (double lambda : ev)
    if (std::abs(lambda) < std::abs(best)) best = lambda;

  if (options.polish && std::abs(best) < kPi / 4) {
    const PolishResult p = polish_eigenvalue(op, best);
    if (p.converged && std::abs(p.value - best) <= 2 * out.residual + 1e-12) {
      const double c = beta * kernel->table().absolute_sum();
      best = p.value;
      out.polished = true;
      out.residual = std::max(p.last_step, 1e-14 * std::abs(best)) +
                     std::numeric_limits<double>::epsilon() * c * c / kPi;
    }
  }
  out.signed_value = best;
  out.value = std::abs(best);
  return out;
}

double min_abs_eig(const MassProfile& profile, double alpha, double beta, const Vec2& k, int cutoff,
                   const EigenSolveOptions& options) {
  auto kernel = std::make_shared<const MassKernel>(profile, alpha, cutoff);
  return min_abs_eig(kernel, beta, k, options).value;
}

void GapReport::write_per_k_csv(std::ostream& os) const {
  std::ostringstream line;
  line.precision(17);
  os << "i,j,k1,k2,level,mirrored,min_abs,signed,residual,polished\r\n";
  for (const auto& s : samples) {
    line.str("");
    line << s.i << ',' << s.j << ',' << s.k(0) << ',' << s.k(1) << ',' << s.level << ',' << (s.mirrored ? 1 : 0)
         << ',' << s.eig.value << ',' << s.eig.signed_value << ',' << s.eig.residual << ','
         << (s.eig.polished ? 1 : 0) << "\r\n";
    os << line.str();
  }
}

namespace {

using Key = std::pair<int, int>;

struct Cell {
  int i = 0, j = 0, size = 0;  // lower-left corner and side in lattice units
  double bound = -std::numeric_limits<double>::infinity();
};

class Scanner {
 public:
  Scanner(std::shared_ptr<const MassKernel> kernel, double beta, const ScanSpec& scan,
          const EigenSolveOptions& options)
      : kernel_(std::move(kernel)), beta_(beta), scan_(scan), options_(options),
        lattice_((scan.grid_n - 1) << scan.refine_depth) {}

  int lattice() const { return lattice_; }

  Vec2 k_of(const Key& p) const {
    return Vec2(-0.5 + static_cast<double>(p.first) / lattice_, -0.5 + static_cast<double>(p.second) / lattice_);
  }

  // Solves at every listed point not already in the memo.
  void evaluate(const std::vector<Key>& points, int level) {
    std::vector<Key> todo;
    for (const Key& p : points) {
      if (seen_.count(p)) continue;
      seen_[p] = level;
      const Key c = canonical(p);
      if (!values_.count(c) && std::find(todo.begin(), todo.end(), c) == todo.end()) todo.push_back(c);
    }
    std::sort(todo.begin(), todo.end());
    std::vector<MinAbsEig> results(todo.size());
    parallel_for(static_cast<int>(todo.size()), scan_.threads, [&](int n) {
      results[static_cast<std::size_t>(n)] = min_abs_eig(kernel_, beta_, k_of(todo[static_cast<std::size_t>(n)]),
                                                         options_);
    });
    for (std::size_t n = 0; n < todo.size(); ++n) values_[todo[n]] = results[n];
    evaluations_ += static_cast<int>(todo.size());
  }

  const MinAbsEig& value(const Key& p) const { return values_.at(canonical(p)); }

  // Minimum over every referenced point, ties to the lexicographically smallest k.
  std::pair<double, Key> minimum() const {
    double best = std::numeric_limits<double>::infinity();
    Key arg{0, 0};
    for (const auto& [p, level] : seen_) {
      const double v = value(p).value;
      if (v < best) {
        best = v;
        arg = p;
      }
    }
    return {best, arg};
  }

  double corner_min(const Cell& c) const {
    return std::min({value({c.i, c.j}).value, value({c.i + c.size, c.j}).value, value({c.i, c.j + c.size}).value,
                     value({c.i + c.size, c.j + c.size}).value});
  }

  double cell_bound(const Cell& c) const {
    const double h = static_cast<double>(c.size) / lattice_;
    return corner_min(c) - kTwoPi * h / std::sqrt(2.0);
  }

  GapReport report(const std::vector<double>& mins, const std::vector<double>& certs) const {
    GapReport r;
    const auto [best, arg] = minimum();
    r.grid_min = best;
    r.argmin_k = k_of(arg);
    r.certified_lower = certs.back();
    r.grid_n = scan_.grid_n;
    r.refine_depth = scan_.refine_depth;
    r.half_zone = scan_.half_zone;
    r.lattice = lattice_;
    r.grid_min_by_level = mins;
    r.certified_by_level = certs;
    r.evaluations = evaluations_;
    for (const auto& [p, level] : seen_) {
      KSample s;
      s.i = p.first;
      s.j = p.second;
      s.k = k_of(p);
      s.level = level;
      s.mirrored = canonical(p) != p;
      s.eig = value(p);
      r.max_residual = std::max(r.max_residual, s.eig.residual);
      r.samples.push_back(s);
    }
    return r;
  }

 private:
  Key canonical(const Key& p) const {
    if (!scan_.half_zone) return p;
    const Key q{lattice_ - p.first, lattice_ - p.second};
    return std::min(p, q);
  }

  std::shared_ptr<const MassKernel> kernel_;
  double beta_;
  ScanSpec scan_;
  EigenSolveOptions options_;
  int lattice_;
  std::map<Key, int> seen_;  // point -> level
  std::map<Key, MinAbsEig> values_;
  int evaluations_ = 0;
};

}  // namespace

GapReport global_gap(const MassProfile& profile, double alpha, double beta, int cutoff, const ScanSpec& scan,
                     const EigenSolveOptions& options) {
  if (scan.grid_n < 3) throw ValidationError("grid_n must be >= 3");
  if (scan.grid_n % 2 == 0) throw ValidationError("grid_n must be odd");
  if (scan.refine_depth < 0) throw ValidationError("refine_depth must be >= 0");
  if (scan.refine_depth > 12) throw ValidationError("refine_depth must be <= 12");
  if (!(beta >= 0)) throw ValidationError("beta must be >= 0");
  resolve_threads(scan.threads);

  Scanner scanner(std::make_shared<const MassKernel>(profile, alpha, cutoff), beta, scan, options);
  const int F = scanner.lattice();
  const int coarse = 1 << scan.refine_depth;

  std::vector<Key> points;
  for (int a = 0; a <= F; a += coarse)
    for (int b = 0; b <= F; b += coarse) points.emplace_back(a, b);
  scanner.evaluate(points, 0);

  std::vector<Cell> leaves;
  for (int a = 0; a < F; a += coarse)
    for (int b = 0; b < F; b += coarse) {
      Cell c{a, b, coarse};
      c.bound = scanner.cell_bound(c);
      leaves.push_back(c);
    }

  auto certified = [&] {
    double lo = std::numeric_limits<double>::infinity();
    for (const Cell& c : leaves) lo = std::min(lo, c.bound);
    return lo;
  };
  std::vector<double> mins{scanner.minimum().first};
  std::vector<double> certs{certified()};

  for (int level = 1; level <= scan.refine_depth; ++level) {
    const double incumbent = mins.back();
    std::vector<Cell> keep, split;
    for (const Cell& c : leaves) {
      const double h = static_cast<double>(c.size) / F;
      if (c.size > 1 && scanner.corner_min(c) <= incumbent + kTwoPi * h)
        split.push_back(c);
      else
        keep.push_back(c);
    }
    points.clear();
    for (const Cell& c : split) {
      const int s = c.size / 2;
      for (int da = 0; da <= 2; ++da)
        for (int db = 0; db <= 2; ++db) points.emplace_back(c.i + da * s, c.j + db * s);
    }
    scanner.evaluate(points, level);
    for (const Cell& c : split) {
      const int s = c.size / 2;
      for (int da = 0; da < 2; ++da)
        for (int db = 0; db < 2; ++db) {
          Cell child{c.i + da * s, c.j + db * s, s};
          child.bound = std::max(c.bound, scanner.cell_bound(child));
          keep.push_back(child);
        }
    }
    leaves = std::move(keep);
    mins.push_back(scanner.minimum().first);
    certs.push_back(certified());
  }
  return scanner.report(mins, certs);
}

}  // namespace antidot
