#include <antidot/fiber.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <random>
#include <sstream>

namespace antidot {

PlaneWaveBasis::PlaneWaveBasis(int cutoff) : cutoff_(cutoff) {
  if (cutoff < 1) throw ValidationError("plane-wave cutoff M must be >= 1");
}

MassKernel::MassKernel(const MassProfile& profile, double alpha, int cutoff)
    : profile_(profile), basis_(cutoff), table_(profile, alpha, cutoff), conv_(table_, cutoff) {}

void MassKernel::convolve(const cplx* in, cplx* out) const {
  conv_.apply(in, 2, out, 2);
  conv_.apply(in + 1, 2, out + 1, 2);
}

std::string to_string(SolverKind kind) { return kind == SolverKind::dense ? "dense" : "iterative"; }

double dense_bytes(Eigen::Index n) { return 16.0 * static_cast<double>(n) * static_cast<double>(n); }

FiberOperator::FiberOperator(std::shared_ptr<const MassKernel> kernel, double beta, const Vec2& k,
                             const AssembleOptions& options)
    : kernel_(std::move(kernel)), beta_(beta), k_(k) {
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  if (!(k(0) > -0.5 - 1e-15 && k(0) <= 0.5 && k(1) > -0.5 - 1e-15 && k(1) <= 0.5))
    throw ValidationError("Bloch momentum k must lie in the cell [-1/2, 1/2]^2");
  if (!options.dense) return;
  const Eigen::Index n = dim();
  if (dense_bytes(n) > options.memory_limit_mb * 1024.0 * 1024.0) {
    std::ostringstream msg;
    msg << "dense fibre matrix of dimension " << n << " needs " << dense_bytes(n) / (1024.0 * 1024.0)
        << " MB, above the " << options.memory_limit_mb << " MB limit; use the iterative solver";
    throw ValidationError(msg.str());
  }
  const PlaneWaveBasis& b = basis();
  const FourierTable& table = kernel_->table();
  MatrixXc h = MatrixXc::Zero(n, n);
  const Eigen::Index modes = b.modes();
  for (Eigen::Index j = 0; j < modes; ++j) {
    const Vec2i mj = b.mode(j);
    for (Eigen::Index i = 0; i < modes; ++i) {
      const cplx c = beta_ * table(b.mode(i) - mj);
      h(2 * i, 2 * j) = c;
      h(2 * i + 1, 2 * j + 1) = -c;
    }
  }
  for (Eigen::Index i = 0; i < modes; ++i) {
    const Vec2 v = kTwoPi * momentum(i);
    h(2 * i, 2 * i + 1) += cplx(v(0), -v(1));
    h(2 * i + 1, 2 * i) += cplx(v(0), v(1));
  }
  dense_ = std::move(h);
}

const MatrixXc& FiberOperator::dense() const {
  if (!dense_) throw ValidationError("fibre operator was assembled without a dense matrix");
  return *dense_;
}

void FiberOperator::apply_kinetic(const MatrixXc& x, MatrixXc& y) const {
  y.resize(x.rows(), x.cols());
  const Eigen::Index modes = basis().modes();
  for (Eigen::Index i = 0; i < modes; ++i) {
    const Vec2 v = kTwoPi * momentum(i);
    const cplx minus(v(0), -v(1)), plus(v(0), v(1));
    y.row(2 * i) = minus * x.row(2 * i + 1);
    y.row(2 * i + 1) = plus * x.row(2 * i);
  }
}

void FiberOperator::apply_matrix_free(const MatrixXc& x, MatrixXc& y) const {
  apply_kinetic(x, y);
  if (beta_ == 0.0) return;
  VectorXc in(x.rows()), out(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    in = x.col(c);
    kernel_->convolve(in.data(), out.data());
    for (Eigen::Index r = 0; r < x.rows(); r += 2) {
      y(r, c) += beta_ * out(r);
      y(r + 1, c) -= beta_ * out(r + 1);
    }
  }
}

void FiberOperator::apply(const MatrixXc& x, MatrixXc& y) const {
  if (dense_)
    y.noalias() = *dense_ * x;
  else
    apply_matrix_free(x, y);
}

double FiberOperator::norm_bound() const {
  double kinetic = 0;
  for (Eigen::Index i = 0; i < basis().modes(); ++i) kinetic = std::max(kinetic, momentum(i).norm());
  return kTwoPi * kinetic + beta_ * kernel_->table().absolute_sum();
}

FiberOperator assemble(const MassProfile& profile, double alpha, double beta, const Vec2& k, int cutoff,
                       const AssembleOptions& options) {
  return FiberOperator(std::make_shared<const MassKernel>(profile, alpha, cutoff), beta, k, options);
}

Spectrum eigenvalues_dense(const FiberOperator& op, bool with_vectors) {
  const MatrixXc& h = op.dense();
  Eigen::SelfAdjointEigenSolver<MatrixXc> solver(h, with_vectors ? Eigen::ComputeEigenvectors
                                                                 : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "dense eigensolver did not converge (dimension " << h.rows() << ", k = (" << op.k()(0) << ", "
        << op.k()(1) << "))";
    throw NumericalError(msg.str());
  }
  Spectrum s;
  s.method = SolverKind::dense;
  const Eigen::VectorXd& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  if (with_vectors) {
    s.vectors = solver.eigenvectors();
    const MatrixXc residual = h * s.vectors - s.vectors * ev.cast<cplx>().asDiagonal();
    s.residual_bound = residual.colwise().norm().maxCoeff();
  }
  return s;
}

namespace {

// Columns of the given blocks side by side; empty blocks are skipped.
MatrixXc hstack(std::initializer_list<const MatrixXc*> blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const MatrixXc* b : blocks)
    if (b->cols() > 0) {
      rows = b->rows();
      cols += b->cols();
    }
  MatrixXc out(rows, cols);
  Eigen::Index at = 0;
  for (const MatrixXc* b : blocks)
    if (b->cols() > 0) {
      out.middleCols(at, b->cols()) = *b;
      at += b->cols();
    }
  return out;
}

// Orthonormal basis of span(S) by eigen-decomposition of the Gram matrix,
// dropping directions below a relative threshold. Returns the n_s x r map.
MatrixXc svqb(const MatrixXc& s) {
  MatrixXc gram = s.adjoint() * s;
  gram = 0.5 * (gram + gram.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXc> eig(gram);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > 1e-10 * top) keep.push_back(i);
  MatrixXc map(s.cols(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    map.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(keep[c]) / std::sqrt(lambda(keep[c]));
  return map;
}

void normalize_columns(MatrixXc& w) {
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const double nrm = w.col(c).norm();
    if (nrm > 0) w.col(c) /= nrm;
  }
}

struct RitzOnH {
  std::vector<double> values;
  MatrixXc vectors;
  std::vector<double> residuals;
};

// Rayleigh-Ritz of H on the orthonormal block X. The wanted pairs are those
// with the smallest ||H y||, not the smallest |mu|: a mixture of +lambda and
// -lambda eigenvectors has a Rayleigh quotient near zero but ||H y|| = |lambda|.
RitzOnH ritz_on_h(const MatrixXc& x, const MatrixXc& hx, int wanted) {
  MatrixXc g = x.adjoint() * hx;
  g = 0.5 * (g + g.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXc> eig(g);
  const Eigen::VectorXd& mu = eig.eigenvalues();
  const Eigen::VectorXd fold = (hx * eig.eigenvectors()).colwise().norm().transpose();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(mu.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return fold(a) < fold(b); });
  order.resize(static_cast<std::size_t>(wanted));
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return mu(a) < mu(b); });
  RitzOnH out;
  MatrixXc u(x.cols(), wanted);
  for (int c = 0; c < wanted; ++c) {
    u.col(c) = eig.eigenvectors().col(order[c]);
    out.values.push_back(mu(order[c]));
  }
  out.vectors = x * u;
  const MatrixXc r = hx * u - out.vectors * Eigen::Map<const Eigen::VectorXd>(out.values.data(), wanted)
                                                 .cast<cplx>()
                                                 .asDiagonal();
  for (int c = 0; c < wanted; ++c) out.residuals.push_back(r.col(c).norm());
  return out;
}

// Rayleigh-Ritz of H on span{X, H X}, given A X = H (H X). Covers a +-lambda
// cluster of H^2 that is wider than the block.
RitzOnH ritz_on_h_extended(const MatrixXc& x, const MatrixXc& hx, const MatrixXc& ax, int wanted) {
  MatrixXc y = hx, hy = ax;
  for (int pass = 0; pass < 2; ++pass) {
    const MatrixXc g = x.adjoint() * y;
    y -= x * g;
    hy -= hx * g;
  }
  // drop directions of H X outside X below 1e-6 ||H X||
  const double floor = 1e-6 * hx.colwise().norm().maxCoeff();
  MatrixXc gram = y.adjoint() * y;
  gram = 0.5 * (gram + gram.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXc> eig(gram);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    if (eig.eigenvalues()(i) > floor * floor) keep.push_back(i);
  if (keep.empty()) return ritz_on_h(x, hx, wanted);
  MatrixXc map(y.cols(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    map.col(static_cast<Eigen::Index>(c)) =
        eig.eigenvectors().col(keep[c]) / std::sqrt(eig.eigenvalues()(keep[c]));
  const MatrixXc ys = y * map, hys = hy * map;
  const MatrixXc q = hstack({&x, &ys}), hq = hstack({&hx, &hys});
  return ritz_on_h(q, hq, wanted);
}

}  // namespace

Spectrum folded_lobpcg(const FoldedProblem& problem, const IterativeOptions& options) {
  const Eigen::Index n = problem.dim;
  const int count = options.count;
  if (count < 1) throw ValidationError("iterative solver needs count >= 1");
  const Eigen::Index p = std::min<Eigen::Index>(count + options.guard, n);
  const double target = options.tol * problem.norm_estimate;

  auto apply_h = [&](const MatrixXc& x) {
    MatrixXc y;
    problem.apply(x, y);
    return y;
  };

  // Small problems: Rayleigh-Ritz on the full space is exact and cheaper.
  if (n <= 4 * p) {
    const MatrixXc full = apply_h(MatrixXc::Identity(n, n));
    const MatrixXc id = MatrixXc::Identity(n, n);
    RitzOnH r = ritz_on_h(id, full, count);
    Spectrum s;
    s.method = SolverKind::iterative;
    s.eigenvalues = r.values;
    s.vectors = r.vectors;
    s.residual_bound = *std::max_element(r.residuals.begin(), r.residuals.end());
    return s;
  }

  MatrixXc x = problem.initial.leftCols(p);
  x = (x * svqb(x)).eval();
  MatrixXc hx = apply_h(x);
  MatrixXc ax = apply_h(hx);
  MatrixXc pdir, hp, ap;

  // X, P and W are kept orthonormal and mutually orthogonal, so the stacked
  // block needs no Gram correction. P is formed in the coefficient space of
  // that block: its products are combinations with orthonormal coefficients
  // of products that were computed exactly.
  auto rayleigh_ritz = [&](const MatrixXc& q, const MatrixXc& hq, const MatrixXc& aq, Eigen::Index keep) {
    MatrixXc g = q.adjoint() * aq;
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXc> eig(g);
    const MatrixXc c = eig.eigenvectors().leftCols(keep);
    x = q * c;
    hx = hq * c;
    ax = aq * c;
    return std::make_pair(Eigen::VectorXd(eig.eigenvalues().head(keep)), c);
  };
  Eigen::VectorXd theta = rayleigh_ritz(x, hx, ax, x.cols()).first;

  Spectrum s;
  s.method = SolverKind::iterative;
  for (int it = 1; it <= options.max_iterations; ++it) {
    s.iterations = it;
    const RitzOnH ritz = ritz_on_h_extended(x, hx, ax, count);
    const double worst = *std::max_element(ritz.residuals.begin(), ritz.residuals.end());
    if (worst <= target) break;
    if (it == options.max_iterations) {
      std::ostringstream msg;
      msg << "folded LOBPCG did not converge in " << it << " iterations (residual " << worst << ", target "
          << target << ")";
      throw NumericalError(msg.str());
    }

    MatrixXc w = ax - x * theta.cast<cplx>().asDiagonal();
    for (Eigen::Index c = 0; c < w.cols(); ++c) w.col(c).array() *= problem.preconditioner.array().cast<cplx>();
    normalize_columns(w);
    for (int pass = 0; pass < 2; ++pass) {
      w -= x * (x.adjoint() * w);
      if (pdir.cols() > 0) w -= pdir * (pdir.adjoint() * w);
      w = (w * svqb(w)).eval();
    }
    if (w.cols() == 0) break;  // residual directions exhausted
    const MatrixXc hw = apply_h(w);
    const MatrixXc aw = apply_h(hw);

    const Eigen::Index nx = x.cols();
    const MatrixXc q = hstack({&x, &pdir, &w}), hq = hstack({&hx, &hp, &hw}), aq = hstack({&ax, &ap, &aw});
    const auto [values, c] = rayleigh_ritz(q, hq, aq, std::min<Eigen::Index>(p, q.cols()));
    theta = values;

    MatrixXc pc = c;
    pc.topRows(nx).setZero();
    for (int pass = 0; pass < 2; ++pass) pc -= c * (c.adjoint() * pc);
    normalize_columns(pc);
    pc = (pc * svqb(pc)).eval();
    pdir = q * pc;
    hp = hq * pc;
    ap = aq * pc;
  }

  // Final verification with fresh products.
  const MatrixXc hx_fresh = apply_h(x);
  const RitzOnH ritz = ritz_on_h_extended(x, hx_fresh, apply_h(hx_fresh), count);
  s.eigenvalues = ritz.values;
  s.vectors = ritz.vectors;
  s.residual_bound = *std::max_element(ritz.residuals.begin(), ritz.residuals.end());
  if (!(s.residual_bound <= 10 * target)) {
    std::ostringstream msg;
    msg << "folded LOBPCG stagnated after " << s.iterations << " iterations (residual " << s.residual_bound
        << ", target " << target << ")";
    throw NumericalError(msg.str());
  }
  return s;
}

MatrixXc kinetic_start_block(const FiberOperator& op, int block) {
  const Eigen::Index modes = op.basis().modes();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(modes));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return op.momentum(a).squaredNorm() < op.momentum(b).squaredNorm();
  });
  const Eigen::Index n = op.dim();
  MatrixXc x = MatrixXc::Zero(n, block);
  for (int c = 0; c < block; ++c) x(2 * order[static_cast<std::size_t>(c / 2)] + (c % 2), c) = 1.0;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1e-3);
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < n; ++r) x(r, c) += cplx(normal(rng), normal(rng));
  return x;
}

Spectrum eigenvalues_near_zero(const FiberOperator& op, const IterativeOptions& options) {
  if (options.count < 2) throw ValidationError("eigenvalues_near_zero needs count >= 2");
  FoldedProblem problem;
  problem.dim = op.dim();
  problem.apply = [&op](const MatrixXc& x, MatrixXc& y) { op.apply_matrix_free(x, y); };
  problem.preconditioner.resize(op.dim());
  for (Eigen::Index i = 0; i < op.basis().modes(); ++i) {
    const double t = 1.0 / (4.0 * kPi * kPi * op.momentum(i).squaredNorm() + 1.0);
    problem.preconditioner(2 * i) = t;
    problem.preconditioner(2 * i + 1) = t;
  }
  const int block = static_cast<int>(std::min<Eigen::Index>(options.count + options.guard, op.dim()));
  problem.initial = kinetic_start_block(op, block);
  problem.norm_estimate = op.norm_bound();
  return folded_lobpcg(problem, options);
}

}  // namespace antidot
