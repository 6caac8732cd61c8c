#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covmany/errors.hpp"
#include "covmany/matcore.hpp"

namespace covmany {

// One population's data, p x n with observations in columns.
class Sample {
 public:
  Sample() = default;

  explicit Sample(Matrix x) : x_(std::move(x)) {
    detail::require(x_.rows() >= 1, "Sample: p must be at least 1");
    detail::require(x_.cols() >= 2, "Sample: n must be at least 2");
    detail::require(x_.allFinite(), "Sample: non-finite entry");
  }

  Index p() const { return x_.rows(); }
  Index n() const { return x_.cols(); }
  const Matrix& data() const { return x_; }

 private:
  Matrix x_;
};

struct RMatrices {
  SymMat r12;
  SymMat r2;
  SymMat r4;
};

struct MomentSystem {
  Eigen::Matrix3d F;
  Eigen::Matrix3d Finv;
  Index p = 0;
  Index n = 0;
};

struct NuHats {
  double nu2 = 0.0;
  double nu12 = 0.0;
  double nu4 = 0.0;
};

struct MuHats {
  double mu12_hat = 0.0;
  double mu2_hat = 0.0;
};

namespace detail {

// Full symmetric Y Y^T from one rank-k update on the lower triangle.
inline Matrix syrk(const Matrix& y, double scale) {
  const Index p = y.rows();
  Matrix out = Matrix::Zero(p, p);
  out.selfadjointView<Eigen::Lower>().rankUpdate(y, scale);
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

inline void check_n(Index n) { require(n >= 2, "sample size must be at least 2"); }

}  // namespace detail

// S = X X^T / n, no centering.
inline Matrix sample_cov(const Sample& x) {
  return detail::syrk(x.data(), 1.0 / static_cast<double>(x.n()));
}

// X D(X^T X) X^T = sum_k (x_k^T x_k) x_k x_k^T, formed as Y Y^T with
// y_k = |x_k| x_k so the n x n Gram matrix never appears.
inline Matrix weighted_gram(const Sample& x) {
  const Vector norms = x.data().colwise().norm().transpose();
  const Matrix y = x.data() * norms.asDiagonal();
  return detail::syrk(y, 1.0);
}

inline MomentSystem moment_system(Index p, Index n) {
  detail::require(p >= 1, "moment_system: p must be positive");
  detail::require(n >= 2, "moment_system: n must be at least 2");
  const double pd = static_cast<double>(p), nd = static_cast<double>(n);
  const double c = pd / nd;
  MomentSystem m;
  m.p = p;
  m.n = n;
  m.F << 1.0 + 1.0 / nd, c, 1.0 / nd,
      2.0 / (pd * nd), 1.0, 1.0 / (pd * nd),
      2.0, 0.0, 1.0;
  const double k = nd / (nd - 1.0);
  const double a = (nd - 1.0) / (nd * nd);
  m.Finv << 1.0, -c, -a,
      0.0, (nd - 1.0) / nd, -a / pd,
      -2.0, 2.0 * c, a * (nd + 2.0);
  m.Finv *= k;
  return m;
}

inline NuHats nu_hats(const Sample& x, const SymMat& a) {
  detail::require(a.dim() == x.p(), "nu_hats: dimension mismatch");
  const double p = static_cast<double>(x.p()), n = static_cast<double>(x.n());
  const Matrix s = sample_cov(x);
  const Matrix sa = s * a.matrix();
  const double tr_s = s.trace();
  const double tr_sa = sa.trace();
  NuHats out;
  out.nu2 = (s * s).cwiseProduct(a.matrix()).sum() / p;
  out.nu12 = (tr_s / p) * (tr_sa / p);
  // single-sum form: (p(n-1))^-1 sum_r [(x_r^T x_r)(x_r^T A x_r) - tr S tr(SA)]
  const Matrix& xm = x.data();
  const Vector sq = xm.colwise().squaredNorm().transpose();
  const Vector quad = (a.matrix() * xm).cwiseProduct(xm).colwise().sum().transpose();
  const double acc = sq.dot(quad) - n * tr_s * tr_sa;
  out.nu4 = acc / (p * (n - 1.0));
  return out;
}

inline RMatrices r_matrices(const Sample& x) {
  const double p = static_cast<double>(x.p()), n = static_cast<double>(x.n());
  const Matrix s = sample_cov(x);
  const Matrix w = weighted_gram(x);
  const Matrix s2 = s * s;
  const double tr_s = s.trace();
  const double d = n * (n - 1.0);
  Matrix r12 = (n / (p * (n - 1.0))) * tr_s * s - w / (p * d);
  Matrix r2 = (n / (n - 1.0)) * s2 - w / d;
  Matrix r4 = ((n + 2.0) / d) * w - (2.0 * n / (n - 1.0)) * s2 - (n / (n - 1.0)) * tr_s * s;
  return {SymMat::from_symmetric(std::move(r12)), SymMat::from_symmetric(std::move(r2)),
          SymMat::from_symmetric(std::move(r4))};
}

// Everything the two many-sample statistics need from one population,
// computed in a single pass over X.
struct SampleSummary {
  Index p = 0;
  Index n = 0;
  Matrix s;     // S
  Matrix r12;   // R_12, empty unless requested
  double tr_s = 0.0;
  double tr_s2 = 0.0;
  double mu2_hat = 0.0;
  double mu12_hat = 0.0;
  double tr_r12_sq = 0.0;

  double c() const { return static_cast<double>(p) / static_cast<double>(n); }
};

inline SampleSummary summarize(const Sample& x, bool with_r12 = true) {
  const double p = static_cast<double>(x.p()), n = static_cast<double>(x.n());
  const double d = n * (n - 1.0);
  SampleSummary out;
  out.p = x.p();
  out.n = x.n();
  out.s = sample_cov(x);
  out.tr_s = out.s.trace();
  out.tr_s2 = out.s.squaredNorm();
  // tr(X D(X^T X) X^T) = sum_k |x_k|^4
  const double tr_w = x.data().colwise().squaredNorm().squaredNorm();
  out.mu2_hat = ((n / (n - 1.0)) * out.tr_s2 - tr_w / d) / p;
  out.mu12_hat = ((n / (p * (n - 1.0))) * out.tr_s * out.tr_s - tr_w / (p * d)) / p;
  if (with_r12) {
    out.r12 = weighted_gram(x);
    out.r12 *= -1.0 / (p * d);
    out.r12 += ((n / (p * (n - 1.0))) * out.tr_s) * out.s;
    out.tr_r12_sq = out.r12.squaredNorm();
  }
  return out;
}

inline MuHats mu_hats(const Sample& x) {
  const SampleSummary s = summarize(x, false);
  return {s.mu12_hat, s.mu2_hat};
}

namespace detail {

inline void same_p(const Sample& a, const Sample& b) {
  require(a.p() == b.p(), "samples have different dimensions");
}

// Sort key that does not depend on input order, so sums over populations are
// taken in the same order for any permutation of the inputs.
inline std::vector<std::size_t> canonical_order(std::span<const SampleSummary> s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::make_tuple(s[a].n, s[a].mu2_hat, s[a].mu12_hat, s[a].tr_s, s[a].tr_s2) <
           std::make_tuple(s[b].n, s[b].mu2_hat, s[b].mu12_hat, s[b].tr_s, s[b].tr_s2);
  });
  return idx;
}

inline void check_group(std::span<const SampleSummary> s, bool need_r12) {
  require(s.size() >= 2, "at least two populations are required");
  for (const auto& x : s) {
    require(x.p == s[0].p, "populations have different dimensions");
    check_n(x.n);
    if (need_r12) require(x.r12.size() > 0, "summary was computed without R12");
  }
}

inline std::vector<SampleSummary> summarize_all(std::span<const Sample> xs, bool with_r12) {
  std::vector<SampleSummary> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(summarize(x, with_r12));
  return out;
}

}  // namespace detail

inline double gamma_hat(const SampleSummary& a, const SampleSummary& b) {
  detail::require(a.p == b.p, "gamma_hat: dimension mismatch");
  return detail::trace_prod(a.r12, b.r12) / static_cast<double>(a.p);
}

inline double h_kernel(const SampleSummary& a, const SampleSummary& b) {
  const double p = static_cast<double>(a.p);
  return p * (a.mu2_hat * b.mu12_hat + b.mu2_hat * a.mu12_hat - 2.0 * gamma_hat(a, b));
}

inline double g_kernel(const SampleSummary& a, const SampleSummary& b) {
  detail::require(a.p == b.p, "g_kernel: dimension mismatch");
  const double p = static_cast<double>(a.p);
  return p * (a.mu2_hat + b.mu2_hat) - 2.0 * detail::trace_prod(a.s, b.s);
}

inline double gamma_hat(const Sample& a, const Sample& b) {
  detail::same_p(a, b);
  return gamma_hat(summarize(a), summarize(b));
}

inline double h_kernel(const Sample& a, const Sample& b) {
  detail::same_p(a, b);
  return h_kernel(summarize(a), summarize(b));
}

inline double g_kernel(const Sample& a, const Sample& b) {
  detail::same_p(a, b);
  return g_kernel(summarize(a, false), summarize(b, false));
}

// U_p without the double sum over pairs:
//   2pq/(q-1) {mean(mu2) mean(mu12) - p^-1 tr(Rbar^2)}
//   - 2p/(q-1) {mean(mu2 mu12) - p^-1 mean(tr R^2)}
inline double u_statistic(std::span<const SampleSummary> s) {
  detail::check_group(s, true);
  const auto order = detail::canonical_order(s);
  const double p = static_cast<double>(s[0].p), q = static_cast<double>(s.size());
  Matrix rbar = Matrix::Zero(s[0].p, s[0].p);
  double m2 = 0.0, m12 = 0.0, m2x12 = 0.0, mtr = 0.0;
  for (std::size_t i : order) {
    rbar += s[i].r12;
    m2 += s[i].mu2_hat;
    m12 += s[i].mu12_hat;
    m2x12 += s[i].mu2_hat * s[i].mu12_hat;
    mtr += s[i].tr_r12_sq;
  }
  rbar /= q;
  m2 /= q;
  m12 /= q;
  m2x12 /= q;
  mtr /= q;
  return 2.0 * p * q / (q - 1.0) * (m2 * m12 - rbar.squaredNorm() / p) -
         2.0 * p / (q - 1.0) * (m2x12 - mtr / p);
}

// V_p = (2/q) sum p mu2 - 2q/(q-1) tr(Sbar^2) + 2/(q-1) mean(tr S^2)
inline double v_statistic(std::span<const SampleSummary> s) {
  detail::check_group(s, false);
  const auto order = detail::canonical_order(s);
  const double p = static_cast<double>(s[0].p), q = static_cast<double>(s.size());
  Matrix sbar = Matrix::Zero(s[0].p, s[0].p);
  double sum_mu2 = 0.0, mean_trs2 = 0.0;
  for (std::size_t i : order) {
    sbar += s[i].s;
    sum_mu2 += s[i].mu2_hat;
    mean_trs2 += s[i].tr_s2;
  }
  sbar /= q;
  mean_trs2 /= q;
  return 2.0 / q * p * sum_mu2 - 2.0 * q / (q - 1.0) * sbar.squaredNorm() +
         2.0 / (q - 1.0) * mean_trs2;
}

// 16 mean(c^2 mu2^2) mean(mu12)^2
inline double sigma_hat_sq(std::span<const SampleSummary> s) {
  detail::check_group(s, false);
  const auto order = detail::canonical_order(s);
  const double q = static_cast<double>(s.size());
  double a = 0.0, b = 0.0;
  for (std::size_t i : order) {
    const double c = s[i].c();
    a += c * c * s[i].mu2_hat * s[i].mu2_hat;
    b += s[i].mu12_hat;
  }
  a /= q;
  b /= q;
  // sigma_hat = 4 sqrt(a) b would be negative; the estimate is unusable
  if (b < 0.0) throw NumericalError("sigma_hat_sq: negative average of mu12 estimates");
  return 16.0 * a * b * b;
}

// 16 mean(c^2 mu2^2)
inline double lambda_hat_sq(std::span<const SampleSummary> s) {
  detail::check_group(s, false);
  const auto order = detail::canonical_order(s);
  const double q = static_cast<double>(s.size());
  double a = 0.0;
  for (std::size_t i : order) {
    const double c = s[i].c();
    a += c * c * s[i].mu2_hat * s[i].mu2_hat;
  }
  return 16.0 * a / q;
}

inline double u_statistic(std::span<const Sample> xs) {
  return u_statistic(detail::summarize_all(xs, true));
}
inline double v_statistic(std::span<const Sample> xs) {
  return v_statistic(detail::summarize_all(xs, false));
}
inline double sigma_hat_sq(std::span<const Sample> xs) {
  return sigma_hat_sq(detail::summarize_all(xs, false));
}
inline double lambda_hat_sq(std::span<const Sample> xs) {
  return lambda_hat_sq(detail::summarize_all(xs, false));
}

}  // namespace covmany
