#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covmany/errors.hpp"
#include "covmany/matcore.hpp"
#include "covmany/parallel.hpp"
#include "covmany/rng.hpp"
#include "covmany/simgen.hpp"

// Monte Carlo checks of the finite-n moment identities and of the leading
// terms of the quadratic-form covariances. Statistics here are computed by
// brute force from their definitions; nothing is shared with estimators.hpp.

namespace covmany {

enum class OracleCriterion { four_se, ten_pct_or_four_se };

inline const char* to_string(OracleCriterion c) {
  return c == OracleCriterion::four_se ? "4se" : "10pct_or_4se";
}

struct OracleReport {
  std::string target_name;
  double analytic = 0.0;
  double mc_mean = 0.0;
  double mc_se = 0.0;
  Index n_draws = 0;
  double z_score = 0.0;
  bool pass = false;
  OracleCriterion criterion = OracleCriterion::four_se;
};

namespace detail {

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

inline double pairwise_mean(std::span<const double> v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

inline constexpr std::size_t kOracleChunk = 4096;

// Calls draw(i, rng) for i in [0, N). Chunk c of the draws uses stream
// (seed, c), so the values do not depend on the thread count.
template <class Draw>
void fill_draws(std::size_t n_draws, std::uint64_t seed, unsigned threads, Draw draw) {
  const std::size_t chunks = (n_draws + kOracleChunk - 1) / kOracleChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_stream(seed, c);
    const std::size_t lo = c * kOracleChunk, hi = std::min(n_draws, lo + kOracleChunk);
    for (std::size_t i = lo; i < hi; ++i) draw(i, rng);
  });
}

inline OracleReport mean_report(std::string name, double analytic, std::span<const double> v,
                                OracleCriterion crit = OracleCriterion::four_se) {
  OracleReport r;
  r.target_name = std::move(name);
  r.analytic = analytic;
  r.n_draws = static_cast<Index>(v.size());
  r.mc_mean = pairwise_mean(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - r.mc_mean) * (v[i] - r.mc_mean);
  const double var = pairwise_sum(dev) / static_cast<double>(v.size() - 1);
  r.mc_se = std::sqrt(var / static_cast<double>(v.size()));
  r.criterion = crit;
  return r;
}

// Sample covariance of (x, y) with a delta-method standard error.
inline OracleReport cov_report(std::string name, double analytic, std::span<const double> x,
                               std::span<const double> y, OracleCriterion crit) {
  const std::size_t n = x.size();
  const double mx = pairwise_mean(x), my = pairwise_mean(y);
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = (x[i] - mx) * (y[i] - my);
  OracleReport r = mean_report(std::move(name), analytic, prod, crit);
  r.mc_mean *= static_cast<double>(n) / static_cast<double>(n - 1);
  return r;
}

inline void finalize(OracleReport& r) {
  const double diff = r.mc_mean - r.analytic;
  if (r.mc_se > 0.0)
    r.z_score = diff / r.mc_se;
  else
    r.z_score = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  const bool within_se = std::abs(r.z_score) <= 4.0;
  if (r.criterion == OracleCriterion::four_se)
    r.pass = within_se;
  else
    r.pass = within_se || std::abs(diff) <= 0.1 * std::abs(r.analytic);
}

// S = n^-1 sum_k x_k x_k^T as an explicit sum of outer products
inline Matrix brute_cov(const Matrix& x) {
  Matrix s = Matrix::Zero(x.rows(), x.rows());
  for (Index k = 0; k < x.cols(); ++k) s.noalias() += x.col(k) * x.col(k).transpose();
  return s / static_cast<double>(x.cols());
}

inline Matrix draw_data(const Matrix& root, NoiseKind kind, Index n, Rng& rng) {
  return root * draw_noise(kind, root.rows(), n, rng);
}

}  // namespace detail

// E[(nu2, nu12, nu4)] = F (mu2(A), mu12(A), mu4(A)) with
//   F = [[1 + 1/n, p/n, 1/n], [2/(pn), 1, 1/(pn)], [2, 0, 1]].
inline std::array<OracleReport, 3> check_lemma1(const PsdMat& sigma, Index n, const SymMat& a, NoiseKind kind,
                                                Index n_draws, std::uint64_t seed, unsigned threads = 0) {
  detail::require(sigma.dim() == a.dim(), "check_lemma1: dimension mismatch");
  detail::require(n >= 2 && n_draws >= 2, "check_lemma1: need n >= 2 and at least two draws");
  const Index pi = sigma.dim();
  const double p = static_cast<double>(pi), nd = static_cast<double>(n), nu4 = nu4_of(kind);
  const Matrix root = psd_sqrt(sigma).matrix();
  const Matrix& s = sigma.matrix();
  const Matrix& am = a.matrix();
  const double mu2 = (s * s * am).trace() / p;
  const double mu12 = (s.trace() / p) * ((s * am).trace() / p);
  const Matrix rar = root * am * root;
  const double mu4 = (nu4 - 3.0) * s.diagonal().dot(rar.diagonal()) / p;
  const std::array<double, 3> target = {(1.0 + 1.0 / nd) * mu2 + (p / nd) * mu12 + mu4 / nd,
                                        2.0 / (p * nd) * mu2 + mu12 + mu4 / (p * nd), 2.0 * mu2 + mu4};

  const auto N = static_cast<std::size_t>(n_draws);
  std::vector<std::vector<double>> v(3, std::vector<double>(N));
  detail::fill_draws(N, seed, threads, [&](std::size_t i, Rng& rng) {
    const Matrix x = detail::draw_data(root, kind, n, rng);
    const Matrix sm = detail::brute_cov(x);
    v[0][i] = (sm * sm * am).trace() / p;
    v[1][i] = (sm.trace() / p) * ((sm * am).trace() / p);
    // pair-sum definition
    double acc = 0.0;
    for (Index r = 0; r < n; ++r)
      for (Index t = r + 1; t < n; ++t) {
        const double d1 = x.col(r).squaredNorm() - x.col(t).squaredNorm();
        const double d2 = x.col(r).dot(am * x.col(r)) - x.col(t).dot(am * x.col(t));
        acc += d1 * d2;
      }
    v[2][i] = acc / (p * nd * (nd - 1.0));
  });
  const char* names[] = {"lemma1_nu2", "lemma1_nu12", "lemma1_nu4"};
  std::array<OracleReport, 3> out;
  for (int k = 0; k < 3; ++k) {
    out[k] = detail::mean_report(names[k], target[k], v[k]);
    detail::finalize(out[k]);
  }
  return out;
}

// Exact finite-n expectations of p^-1 tr(S^2) and (p^-1 tr S)(p^-1 tr(S A)).
inline std::array<OracleReport, 2> check_expectations_A1(const PsdMat& sigma, Index n, NoiseKind kind,
                                                         Index n_draws, std::uint64_t seed,
                                                         const SymMat* a_in = nullptr, unsigned threads = 0) {
  detail::require(n >= 2 && n_draws >= 2, "check_expectations_A1: need n >= 2 and at least two draws");
  const Index pi = sigma.dim();
  const SymMat a = a_in ? *a_in : SymMat::identity(pi);
  detail::require(a.dim() == pi, "check_expectations_A1: dimension mismatch");
  const double p = static_cast<double>(pi), nd = static_cast<double>(n), nu4 = nu4_of(kind);
  const Matrix& s = sigma.matrix();
  const double mu1 = s.trace() / p, mu2 = s.squaredNorm() / p;
  const double diag_sq = s.diagonal().squaredNorm() / p;
  const double t1 = mu2 + (p / nd) * mu1 * mu1 + (mu2 + (nu4 - 3.0) * diag_sq) / nd;
  const double t2 = mu1 * (s * a.matrix()).trace() / p +
                    sigma_inner(SymMat::identity(pi), a, sigma, nu4) / (p * nd);
  const Matrix root = psd_sqrt(sigma).matrix();
  const auto N = static_cast<std::size_t>(n_draws);
  std::vector<std::vector<double>> v(2, std::vector<double>(N));
  detail::fill_draws(N, seed, threads, [&](std::size_t i, Rng& rng) {
    const Matrix sm = detail::brute_cov(detail::draw_data(root, kind, n, rng));
    v[0][i] = (sm * sm).trace() / p;
    v[1][i] = (sm.trace() / p) * ((sm * a.matrix()).trace() / p);
  });
  std::array<OracleReport, 2> out = {detail::mean_report("a1_tr_s2", t1, v[0]),
                                     detail::mean_report("a2_tr_s_tr_sa", t2, v[1])};
  for (auto& r : out) detail::finalize(r);
  return out;
}

// Leading-order Var(tr S^2 - n^-1 (tr S)^2) = 4 c^2 mu2^2 + 4 c <Sigma, Sigma>_Sigma.
inline OracleReport check_variance_A5(const PsdMat& sigma, Index n, NoiseKind kind, Index n_draws,
                                      std::uint64_t seed, unsigned threads = 0) {
  detail::require(n >= 2 && n_draws >= 3, "check_variance_A5: need n >= 2 and at least three draws");
  const double p = static_cast<double>(sigma.dim()), nd = static_cast<double>(n), nu4 = nu4_of(kind);
  const double c = p / nd;
  const double mu2 = sigma.matrix().squaredNorm() / p;
  const double target = 4.0 * c * c * mu2 * mu2 + 4.0 * c * sigma_inner(sigma.sym(), sigma.sym(), sigma, nu4);
  const Matrix root = psd_sqrt(sigma).matrix();
  const auto N = static_cast<std::size_t>(n_draws);
  std::vector<std::vector<double>> v(1, std::vector<double>(N));
  detail::fill_draws(N, seed, threads, [&](std::size_t i, Rng& rng) {
    const Matrix sm = detail::brute_cov(detail::draw_data(root, kind, n, rng));
    const double tr = sm.trace();
    v[0][i] = (sm * sm).trace() - tr * tr / nd;
  });
  OracleReport r = detail::cov_report("a5_var_tr_s2", target, v[0], v[0], OracleCriterion::ten_pct_or_four_se);
  detail::finalize(r);
  return r;
}

// Leading terms of Cov((z'A1z)(z'A2z), (z'A3z)(z'A4z)) and Cov((z'A1z)(z'A2z), z'A3z).
// With C(i,j) = 2 tr(Ai Aj) + (nu4 - 3) tr(D(Ai) D(Aj)) they are
//   tr A2 tr A4 C(1,3) + tr A2 tr A3 C(1,4) + tr A1 tr A4 C(2,3) + tr A1 tr A3 C(2,4)
// and tr A2 C(1,3) + tr A1 C(2,3).
inline std::array<OracleReport, 2> check_quadform_H1(const SymMat& a1, const SymMat& a2, const SymMat& a3,
                                                     const SymMat& a4, NoiseKind kind, Index n_draws,
                                                     std::uint64_t seed, unsigned threads = 0) {
  detail::require(a1.dim() == a2.dim() && a1.dim() == a3.dim() && a1.dim() == a4.dim(),
                  "check_quadform_H1: dimension mismatch");
  detail::require(n_draws >= 3, "check_quadform_H1: need at least three draws");
  const double nu4 = nu4_of(kind);
  const std::array<const Matrix*, 4> m = {&a1.matrix(), &a2.matrix(), &a3.matrix(), &a4.matrix()};
  auto cc = [&](int i, int j) {
    return 2.0 * detail::trace_prod(*m[i], *m[j]) + (nu4 - 3.0) * m[i]->diagonal().dot(m[j]->diagonal());
  };
  auto tr = [&](int i) { return m[i]->trace(); };
  const double lead1 =
      tr(1) * tr(3) * cc(0, 2) + tr(1) * tr(2) * cc(0, 3) + tr(0) * tr(3) * cc(1, 2) + tr(0) * tr(2) * cc(1, 3);
  const double lead2 = tr(1) * cc(0, 2) + tr(0) * cc(1, 2);
  const Index p = a1.dim();
  const auto N = static_cast<std::size_t>(n_draws);
  std::vector<std::vector<double>> v(3, std::vector<double>(N));
  detail::fill_draws(N, seed, threads, [&](std::size_t i, Rng& rng) {
    const Vector z = draw_noise(kind, p, 1, rng).col(0);
    std::array<double, 4> qf;
    for (int k = 0; k < 4; ++k) qf[k] = z.dot(*m[k] * z);
    v[0][i] = qf[0] * qf[1];
    v[1][i] = qf[2] * qf[3];
    v[2][i] = qf[2];
  });
  std::array<OracleReport, 2> out = {
      detail::cov_report("h1_cov_product_product", lead1, v[0], v[1], OracleCriterion::ten_pct_or_four_se),
      detail::cov_report("h1_cov_product_linear", lead2, v[0], v[2], OracleCriterion::ten_pct_or_four_se)};
  for (auto& r : out) detail::finalize(r);
  return out;
}

}  // namespace covmany
