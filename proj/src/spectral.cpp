// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#include "conflab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace conflab {

Eigen::SparseMatrix<double> stiffness_matrix(const ConformalField& u) {
  const auto& m = u.mesh();
  const auto nv = static_cast<Eigen::Index>(m.vertex_count());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nv) * (2 * m.dim() + 1));
  std::vector<double> diag(nv, 0.0);
  for (Eigen::Index vi = 0; vi < nv; ++vi) {
    const auto v = static_cast<VertexId>(vi);
    for (int a = 0; a < m.dim(); ++a) {
      const VertexId w = m.neighbor(v, a, +1);
      if (w == kNoVertex || w == v) continue;
      const double k = m.conductance(v, a) * 0.5 * (u[v] * u[v] + u[w] * u[w]);
      trip.emplace_back(vi, w, -k);
      trip.emplace_back(w, vi, -k);
      diag[vi] += k;
      diag[w] += k;
    }
  }
  for (Eigen::Index i = 0; i < nv; ++i) trip.emplace_back(i, i, diag[i]);
  Eigen::SparseMatrix<double> k(nv, nv);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

namespace {

double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// Approximate inverse of the shifted operator: exact sparse LDLT for small
// meshes, incomplete Cholesky otherwise.
class Preconditioner {
 public:
  Preconditioner(const Eigen::SparseMatrix<double>& b, bool direct) : direct_(direct) {
    if (direct_) {
      ldlt_.compute(b);
      if (ldlt_.info() != Eigen::Success) fail(ErrorCode::solver_failure, "sparse LDLT factorization failed");
    } else {
      ic_.compute(b);
      if (ic_.info() != Eigen::Success) fail(ErrorCode::solver_failure, "incomplete Cholesky setup failed");
    }
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& r) const {
    Eigen::MatrixXd out(r.rows(), r.cols());
    for (Eigen::Index j = 0; j < r.cols(); ++j)
      out.col(j) = direct_ ? Eigen::VectorXd(ldlt_.solve(r.col(j))) : Eigen::VectorXd(ic_.solve(r.col(j)));
    return out;
  }

 private:
  bool direct_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::IncompleteCholesky<double> ic_;
};

// Orthonormal basis of the columns of y orthogonal to `against`; columns
// that vanish after projection are dropped.
Eigen::MatrixXd extend_basis(const Eigen::MatrixXd& against, Eigen::MatrixXd y) {
  if (y.cols() == 0) return y;
  for (int pass = 0; pass < 2; ++pass) y -= against * (against.transpose() * y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(y);
  const Eigen::MatrixXd r = qr.matrixR().template triangularView<Eigen::Upper>();
  const double top = r.rows() > 0 ? std::abs(r(0, 0)) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < std::min(r.rows(), r.cols()); ++i)
    if (std::abs(r(i, i)) > 1e-10 * top && top > 0.0) ++rank;
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), rank);
  for (int pass = 0; pass < 2; ++pass) q -= against * (against.transpose() * q);
  Eigen::HouseholderQR<Eigen::MatrixXd> again(q);
  return again.householderQ() * Eigen::MatrixXd::Identity(y.rows(), rank);
}

}  // namespace

SpectrumResult laplace_spectrum(const ConformalField& u, const SpectrumOptions& opts) {
  const auto& mesh = u.mesh();
  const auto nv = static_cast<Eigen::Index>(mesh.vertex_count());
  require(opts.count >= 2, "need at least two eigenvalues");
  require(opts.count <= nv, "more eigenvalues requested than vertices");
  require(opts.tol > 0, "tolerance must be positive");

  const auto dv = conformal_volumes(u);
  Eigen::VectorXd dinv(nv), z(nv);
  double vol = 0.0;
  for (Eigen::Index i = 0; i < nv; ++i) {
    require(dv[i] > 0.0, "mass weights must be positive");
    dinv[i] = 1.0 / std::sqrt(dv[i]);
    z[i] = std::sqrt(dv[i]);
    vol += dv[i];
  }
  z.normalize();

  Eigen::SparseMatrix<double> a = stiffness_matrix(u);
  a = dinv.asDiagonal() * a * dinv.asDiagonal();
  a.makeCompressed();

  double norm_a = 0.0;
  for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) s += std::abs(it.value());
    norm_a = std::max(norm_a, s);
  }
  if (norm_a == 0.0) norm_a = 1.0;

  const int want = opts.count - 1;  // nonzero modes; the constant mode is deflated
  int p = opts.block > 0 ? opts.block : std::max(2 * want, want + 8);
  p = static_cast<int>(std::min<Eigen::Index>(p, nv - 1));
  require(p >= want, "block smaller than requested eigenvalue count");

  const double shift = 1e-10 * norm_a;
  Eigen::SparseMatrix<double> b = a;
  for (Eigen::Index i = 0; i < nv; ++i) b.coeffRef(i, i) += shift;
  const Preconditioner prec(b, static_cast<std::size_t>(nv) <= opts.direct_limit);

  std::mt19937_64 gen(opts.seed);
  Eigen::MatrixXd x(nv, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < nv; ++i) x(i, j) = uniform01(gen) - 0.5;
  const Eigen::MatrixXd zm = z;
  x = extend_basis(zm, x);
  require(x.cols() == p, "random start block is rank deficient");

  // Block LOBPCG in an explicitly orthonormal basis [X, W, P], constant mode
  // projected out throughout.
  Eigen::MatrixXd ax = a * x;
  Eigen::MatrixXd pdir(nv, 0);
  Eigen::VectorXd theta;
  {
    Eigen::MatrixXd h = x.transpose() * ax;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    theta = es.eigenvalues();
    x = x * es.eigenvectors();
    ax = ax * es.eigenvectors();
  }
  std::vector<double> res(p, INFINITY);
  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iter; ++iter) {
    Eigen::MatrixXd r = ax - x * theta.asDiagonal();
    bool ok = true;
    for (int j = 0; j < p; ++j) {
      res[j] = r.col(j).norm() / norm_a;
      if (j < want && !(res[j] <= opts.tol)) ok = false;
    }
    if (ok) {
      converged = true;
      break;
    }
    Eigen::MatrixXd xz(nv, p + 1);
    xz << zm, x;
    const Eigen::MatrixXd w = extend_basis(xz, prec.apply(r));
    Eigen::MatrixXd xzw(nv, xz.cols() + w.cols());
    xzw << xz, w;
    const Eigen::MatrixXd pq = extend_basis(xzw, pdir);
    Eigen::MatrixXd q(nv, p + w.cols() + pq.cols());
    q << x, w, pq;
    const Eigen::MatrixXd aq = a * q;
    Eigen::MatrixXd h = q.transpose() * aq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    const Eigen::MatrixXd c = es.eigenvectors().leftCols(p);
    theta = es.eigenvalues().head(p);
    pdir = q.rightCols(q.cols() - p) * c.bottomRows(q.cols() - p);
    x = q * c;
    ax = aq * c;
  }
  if (!converged) {
    std::ostringstream os;
    os << "eigensolver did not converge after " << iter << " iterations; residuals:";
    for (int j = 0; j < want; ++j) os << ' ' << res[j];
    fail(ErrorCode::solver_failure, os.str());
  }

  SpectrumResult out;
  out.dim = mesh.dim();
  out.volume = vol;
  out.iterations = iter;
  const Eigen::VectorXd az = a * z;
  out.eigenvalues.push_back(z.dot(az));
  out.residuals.push_back((az - out.eigenvalues[0] * z).norm() / norm_a);
  for (int j = 0; j < want; ++j) {
    out.eigenvalues.push_back(theta[j]);
    out.residuals.push_back(res[j]);
  }
  out.lambda1 = 0.0;
  for (std::size_t i = 1; i < out.eigenvalues.size(); ++i)
    if (out.eigenvalues[i] > 1e-8) {
      out.lambda1 = out.eigenvalues[i];
      break;
    }
  if (opts.keep_vectors) {
    out.vectors.resize(nv, opts.count);
    out.vectors.col(0) = dinv.asDiagonal() * z;
    for (int j = 0; j < want; ++j) out.vectors.col(j + 1) = dinv.asDiagonal() * x.col(j);
  }
  return out;
}

double heat_trace(const SpectrumResult& s, double t, TraceCompletion completion) {
  require(t > 0.0, "heat-trace time must be positive");
  double tr = 0.0;
  for (double l : s.eigenvalues) tr += std::exp(-t * std::max(l, 0.0));
  if (completion == TraceCompletion::weyl_tail && !s.eigenvalues.empty()) {
    // N(lambda) ~ omega_n V lambda^{n/2} / (2 pi)^n, integrated against e^{-t lambda}
    // beyond the last computed eigenvalue.
    const int n = s.dim;
    const double pi = std::numbers::pi;
    const double omega = std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
    const double x = t * s.eigenvalues.back();
    double upper_gamma;
    if (n == 4) upper_gamma = (1.0 + x) * std::exp(-x);
    else upper_gamma = std::sqrt(x) * std::exp(-x) + 0.5 * std::sqrt(pi) * std::erfc(std::sqrt(x));
    tr += omega * s.volume / std::pow(2.0 * pi, n) * 0.5 * n * std::pow(t, -0.5 * n) * upper_gamma;
  }
  return tr;
}

double dirichlet_energy(const ConformalField& u, std::span<const double> f) {
  const auto& m = u.mesh();
  require(f.size() == m.vertex_count(), "field size does not match mesh");
  double e = 0.0;
  for (std::size_t vi = 0; vi < m.vertex_count(); ++vi) {
    const auto v = static_cast<VertexId>(vi);
    for (int a = 0; a < m.dim(); ++a) {
      const VertexId w = m.neighbor(v, a, +1);
      if (w == kNoVertex || w == v) continue;
      const double d = f[v] - f[w];
      e += m.conductance(v, a) * 0.5 * (u[v] * u[v] + u[w] * u[w]) * d * d;
    }
  }
  return e;
}

double rayleigh_quotient(const ConformalField& u, std::span<const double> f) {
  const auto dv = conformal_volumes(u);
  double vol = 0.0, mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < dv.size(); ++i) {
    vol += dv[i];
    mean += f[i] * dv[i];
    sq += f[i] * f[i] * dv[i];
  }
  mean /= vol;
  double var = 0.0;
  for (std::size_t i = 0; i < dv.size(); ++i) var += (f[i] - mean) * (f[i] - mean) * dv[i];
  if (!(var > 1e-14 * sq)) fail(ErrorCode::invalid_argument, "field has zero variance");
  return dirichlet_energy(u, f) / var;
}

double pinch_ramp(double s) {
  const double x = std::clamp((s - 0.5) / 1.5, 0.0, 1.0);
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

PinchResult pinch_test(const ConformalField& u, VertexId center, double t, double v1, double v2) {
  const auto& m = u.mesh();
  require(v1 > 0.0 && v1 < 1.0, "V1 must lie in (0, 1)");
  require(std::abs(v1 + v2 - 1.0) <= 1e-9, "V1 + V2 must equal 1");
  require(t > 0.0, "pinch scale must be positive");
  require(2.0 * t <= admissible_radius(m, center) + 1e-12, "pinch annulus must lie within the domain");
  const auto dv = conformal_volumes(u);
  const Point c = m.coords(center);
  PinchResult out;
  out.psi.resize(m.vertex_count());
  std::size_t in_annulus = 0;
  for (std::size_t i = 0; i < dv.size(); ++i) {
    const double d = m.base_distance(c, m.coords(static_cast<VertexId>(i)));
    const double s = d / t;
    out.psi[i] = -1.0 / v2 + (1.0 / v1 + 1.0 / v2) * pinch_ramp(s);
    if (s <= 0.5) out.vol_inner += dv[i];
    else if (s >= 2.0) out.vol_outer += dv[i];
    else {
      out.vol_annulus += dv[i];
      ++in_annulus;
    }
  }
  if (in_annulus == 0) fail(ErrorCode::invalid_argument, "pinch annulus contains no vertices");
  out.quotient = rayleigh_quotient(u, out.psi);
  return out;
}

IsospectralReport isospectral_compare(const SpectrumResult& a, const SpectrumResult& b, int m, double rel_tol) {
  require(m >= 1, "comparison length must be positive");
  require(static_cast<int>(a.eigenvalues.size()) >= m && static_cast<int>(b.eigenvalues.size()) >= m,
          "spectra shorter than comparison length");
  IsospectralReport r;
  for (int i = 0; i < m; ++i) {
    const double x = a.eigenvalues[i], y = b.eigenvalues[i];
    const double scale = std::max(std::abs(x), std::abs(y));
    const double g = scale > 1e-8 ? std::abs(x - y) / scale : std::abs(x - y);
    r.gaps.push_back(g);
    r.max_gap = std::max(r.max_gap, g);
  }
  r.pass = r.max_gap <= rel_tol;
  return r;
}

}  // namespace conflab
