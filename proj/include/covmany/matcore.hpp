#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covmany/errors.hpp"

namespace covmany {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;

// Dense real symmetric matrix. Ingestion accepts asymmetry up to
// kSymmetryTolerance (relative to the largest entry) and then symmetrizes, so
// entries are exactly symmetric afterwards.
class SymMat {
 public:
  SymMat() = default;

  explicit SymMat(Matrix m, double tol = kSymmetryTolerance) : m_(std::move(m)) {
    detail::require(m_.rows() == m_.cols(), "SymMat: matrix is not square");
    detail::require(m_.rows() >= 1, "SymMat: empty matrix");
    detail::require(m_.allFinite(), "SymMat: non-finite entry");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    detail::require(asym <= tol * scale, "SymMat: matrix is not symmetric");
    symmetrize();
  }

  static SymMat identity(Index p) { return SymMat(Matrix::Identity(p, p)); }
  static SymMat diagonal(const Vector& d) { return SymMat(Matrix(d.asDiagonal())); }
  static SymMat zero(Index p) { return SymMat(Matrix::Zero(p, p)); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  SymMat scaled(double a) const { return from_symmetric(a * m_); }

  friend SymMat operator+(const SymMat& a, const SymMat& b) {
    detail::require(a.dim() == b.dim(), "SymMat: dimension mismatch");
    return from_symmetric(a.m_ + b.m_);
  }
  friend SymMat operator-(const SymMat& a, const SymMat& b) {
    detail::require(a.dim() == b.dim(), "SymMat: dimension mismatch");
    return from_symmetric(a.m_ - b.m_);
  }
  friend SymMat operator*(double a, const SymMat& b) { return b.scaled(a); }

  // For results that are symmetric up to rounding by construction (sums,
  // congruences V D V^T). Still symmetrized, never validated.
  static SymMat from_symmetric(Matrix m) {
    SymMat s;
    s.m_ = std::move(m);
    s.symmetrize();
    return s;
  }

 private:
  void symmetrize() {
    const Index p = m_.rows();
    for (Index j = 0; j < p; ++j)
      for (Index i = j + 1; i < p; ++i) {
        const double v = 0.5 * (m_(i, j) + m_(j, i));
        m_(i, j) = v;
        m_(j, i) = v;
      }
  }

  Matrix m_;
};

// SymMat certified positive semi-definite. Keeps the eigendecomposition from
// certification so square roots and scalings do not redo it.
class PsdMat {
 public:
  PsdMat() = default;

  static PsdMat certify(const SymMat& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
    if (es.info() != Eigen::Success) throw NumericalError("PsdMat: eigendecomposition failed");
    const Vector& ev = es.eigenvalues();
    const double top = ev(ev.size() - 1);
    if (ev(0) < -kPsdTolerance * std::max(top, 0.0) || top < 0.0)
      throw InputError("PsdMat: matrix is not positive semi-definite (min eigenvalue " +
                       std::to_string(ev(0)) + ")");
    return PsdMat(s, ev, es.eigenvectors());
  }

  static PsdMat identity(Index p) {
    return PsdMat(SymMat::identity(p), Vector::Ones(p), Matrix::Identity(p, p));
  }

  // Builds V diag(d) V^T; d must be nonnegative and V orthogonal.
  static PsdMat from_eigen(const Vector& d, const Matrix& v) {
    detail::require(d.size() == v.rows() && v.rows() == v.cols(), "PsdMat: bad eigen factors");
    detail::require(d.minCoeff() >= 0.0, "PsdMat: negative eigenvalue");
    // keep the stored eigenvalues ascending like the solver output
    std::vector<Index> idx(static_cast<std::size_t>(d.size()));
    for (Index i = 0; i < d.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return d(a) < d(b); });
    Vector ds(d.size());
    Matrix vs(v.rows(), v.cols());
    for (Index k = 0; k < d.size(); ++k) {
      ds(k) = d(idx[static_cast<std::size_t>(k)]);
      vs.col(k) = v.col(idx[static_cast<std::size_t>(k)]);
    }
    Matrix m = vs * ds.asDiagonal() * vs.transpose();
    return PsdMat(SymMat::from_symmetric(std::move(m)), ds, vs);
  }

  const SymMat& sym() const { return s_; }
  const Matrix& matrix() const { return s_.matrix(); }
  Index dim() const { return s_.dim(); }
  double trace() const { return s_.trace(); }
  const Vector& eigenvalues() const { return ev_; }
  const Matrix& eigenvectors() const { return evec_; }
  bool certified() const { return s_.dim() > 0; }

  PsdMat scaled(double a) const {
    detail::require(a >= 0.0, "PsdMat: negative scale");
    return PsdMat(s_.scaled(a), a * ev_, evec_);
  }

  // true when every off-diagonal entry is exactly zero
  bool is_diagonal() const {
    const Matrix& m = s_.matrix();
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i)
        if (i != j && m(i, j) != 0.0) return false;
    return true;
  }

 private:
  PsdMat(SymMat s, Vector ev, Matrix evec) : s_(std::move(s)), ev_(std::move(ev)), evec_(std::move(evec)) {}

  SymMat s_;
  Vector ev_;
  Matrix evec_;
};

namespace detail {

inline void same_dim(const SymMat& a, const SymMat& b, const char* who) {
  if (a.dim() != b.dim()) throw InputError(std::string(who) + ": dimension mismatch");
}

// tr(AB) for symmetric A, B
inline double trace_prod(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

}  // namespace detail

inline double d_prop(const SymMat& a, const SymMat& b) {
  detail::same_dim(a, b, "d_prop");
  const double p = static_cast<double>(a.dim());
  const Matrix m = b.trace() * a.matrix() - a.trace() * b.matrix();
  return m.squaredNorm() / (p * p);
}

inline double d_zero(const SymMat& a, const SymMat& b) {
  detail::same_dim(a, b, "d_zero");
  return (a.matrix() - b.matrix()).squaredNorm();
}

inline SymMat diag_part(const SymMat& m) { return SymMat::diagonal(m.matrix().diagonal()); }

inline PsdMat psd_sqrt(const PsdMat& sigma) {
  detail::require(sigma.certified(), "psd_sqrt: matrix is not certified");
  return PsdMat::from_eigen(sigma.eigenvalues().cwiseMax(0.0).cwiseSqrt(), sigma.eigenvectors());
}

// <A, B>_Sigma = 2 p^-1 tr(Sigma A Sigma B)
//              + (nu4 - 3) p^-1 tr(D(R A R) D(R B R)),  R = Sigma^{1/2}
inline double sigma_inner(const SymMat& a, const SymMat& b, const PsdMat& sigma, double nu4) {
  detail::same_dim(a, b, "sigma_inner");
  detail::require(sigma.certified(), "sigma_inner: Sigma is not certified");
  detail::require(sigma.dim() == a.dim(), "sigma_inner: dimension mismatch");
  detail::require(nu4 >= 1.0, "sigma_inner: nu4 must be at least 1");
  const double p = static_cast<double>(a.dim());
  const Matrix& s = sigma.matrix();
  const Matrix sa = s * a.matrix();
  const Matrix sb = s * b.matrix();
  double val = 2.0 * sa.cwiseProduct(sb.transpose()).sum() / p;
  if (nu4 != 3.0) {
    const Matrix r = psd_sqrt(sigma).matrix();
    const Matrix ra = r * a.matrix() * r;
    const Matrix rb = r * b.matrix() * r;
    val += (nu4 - 3.0) * ra.diagonal().cwiseProduct(rb.diagonal()).sum() / p;
  }
  return val;
}

// Sigma0 = Sigma / (p^-1 tr Sigma), Lambda0 = Lambda / sqrt(p^-1 d_prop(Lambda, Sigma0)).
inline std::pair<PsdMat, PsdMat> normalize_prop_basis(const PsdMat& sigma, const PsdMat& lambda) {
  detail::require(sigma.dim() == lambda.dim(), "normalize_prop_basis: dimension mismatch");
  const double p = static_cast<double>(sigma.dim());
  const double tr = sigma.trace();
  detail::require(tr > 0.0, "normalize_prop_basis: tr(Sigma) must be positive");
  PsdMat sigma0 = sigma.scaled(p / tr);
  const double dp = d_prop(lambda.sym(), sigma0.sym());
  // relative floor: compare against the size of the two terms of d_prop
  const double scale = lambda.matrix().squaredNorm() +
                       lambda.trace() * lambda.trace() * sigma0.matrix().squaredNorm() / (p * p);
  detail::require(dp > 1e-12 * std::max(scale, 1e-300) && dp > 0.0,
                  "normalize_prop_basis: Lambda is proportional to Sigma");
  PsdMat lambda0 = lambda.scaled(1.0 / std::sqrt(dp / p));
  return {std::move(sigma0), std::move(lambda0)};
}

inline SymMat normalize_frob(const SymMat& m) {
  const double p = static_cast<double>(m.dim());
  const double t = m.matrix().squaredNorm();
  detail::require(t > 0.0, "normalize_frob: zero matrix");
  return m.scaled(1.0 / std::sqrt(t / p));
}

inline PsdMat normalize_frob(const PsdMat& m) {
  const double p = static_cast<double>(m.dim());
  const double t = m.matrix().squaredNorm();
  detail::require(t > 0.0, "normalize_frob: zero matrix");
  return m.scaled(1.0 / std::sqrt(t / p));
}

}  // namespace covmany
