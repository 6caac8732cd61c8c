#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covmany/errors.hpp"
#include "covmany/estimators.hpp"
#include "covmany/normal.hpp"
#include "covmany/parallel.hpp"
#include "covmany/rng.hpp"

namespace covmany {

enum class TestKind { proportionality, equality, kronecker_spec };

inline const char* to_string(TestKind k) {
  switch (k) {
    case TestKind::proportionality: return "proportionality";
    case TestKind::equality: return "equality";
    case TestKind::kronecker_spec: return "kronecker_spec";
  }
  return "unknown";
}

struct TestReport {
  TestKind kind = TestKind::proportionality;
  Index p = 0;
  Index q = 0;
  std::vector<Index> n_list;
  double statistic = 0.0;
  double variance_hat = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;

  friend bool operator==(const TestReport&, const TestReport&) = default;
};

namespace detail {

inline TestReport finish_report(TestKind kind, std::span<const SampleSummary> s, double alpha,
                                double stat, double var) {
  const double z_alpha = normal_upper_quantile(alpha);
  if (!(var > 0.0) || !std::isfinite(var))
    throw NumericalError("variance estimate is not positive; the test statistic is undefined");
  TestReport r;
  r.kind = kind;
  r.p = s[0].p;
  r.q = static_cast<Index>(s.size());
  for (const auto& x : s) r.n_list.push_back(x.n);
  r.statistic = stat;
  r.variance_hat = var;
  r.z = std::sqrt(static_cast<double>(r.q)) * stat / std::sqrt(var);
  r.p_value = normal_cdf(-r.z);
  r.alpha = alpha;
  r.reject = r.z > z_alpha;
  return r;
}

}  // namespace detail

inline TestReport prop_test(std::span<const SampleSummary> s, double alpha) {
  detail::check_group(s, true);
  normal_upper_quantile(alpha);
  return detail::finish_report(TestKind::proportionality, s, alpha, u_statistic(s), sigma_hat_sq(s));
}

inline TestReport eq_test(std::span<const SampleSummary> s, double alpha) {
  detail::check_group(s, false);
  normal_upper_quantile(alpha);
  return detail::finish_report(TestKind::equality, s, alpha, v_statistic(s), lambda_hat_sq(s));
}

inline TestReport prop_test(std::span<const Sample> xs, double alpha) {
  detail::require(xs.size() >= 2, "prop_test: at least two populations are required");
  return prop_test(detail::summarize_all(xs, true), alpha);
}

inline TestReport eq_test(std::span<const Sample> xs, double alpha) {
  detail::require(xs.size() >= 2, "eq_test: at least two populations are required");
  return eq_test(detail::summarize_all(xs, false), alpha);
}

// n i.i.d. p x q matrix observations.
class TransposableSample {
 public:
  TransposableSample() = default;
  explicit TransposableSample(std::vector<Matrix> obs) : obs_(std::move(obs)) {
    detail::require(obs_.size() >= 2, "TransposableSample: need at least two observations");
    for (const auto& m : obs_) {
      detail::require(m.rows() == obs_[0].rows() && m.cols() == obs_[0].cols(),
                      "TransposableSample: observations differ in shape");
      detail::require(m.allFinite(), "TransposableSample: non-finite entry");
    }
    detail::require(obs_[0].rows() >= 1 && obs_[0].cols() >= 2,
                    "TransposableSample: need p >= 1 and q >= 2");
  }

  Index p() const { return obs_[0].rows(); }
  Index q() const { return obs_[0].cols(); }
  Index n() const { return static_cast<Index>(obs_.size()); }
  const std::vector<Matrix>& observations() const { return obs_; }

 private:
  std::vector<Matrix> obs_;
};

// Column i across the n observations, as a p x n Sample.
inline std::vector<Sample> column_samples(const TransposableSample& t) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(t.q()));
  for (Index i = 0; i < t.q(); ++i) {
    Matrix x(t.p(), t.n());
    for (Index k = 0; k < t.n(); ++k) x.col(k) = t.observations()[static_cast<std::size_t>(k)].col(i);
    out.emplace_back(std::move(x));
  }
  return out;
}

inline TestReport kron_spec_test(const TransposableSample& t, double alpha) {
  const auto cols = column_samples(t);
  TestReport r = prop_test(cols, alpha);
  r.kind = TestKind::kronecker_spec;
  return r;
}

// Subtracts each variable's sample mean. The covariance divisor stays n.
inline Sample center_sample(const Sample& x) {
  Matrix m = x.data();
  m.colwise() -= m.rowwise().mean();
  return Sample(std::move(m));
}

struct PairwiseReport {
  Matrix g_matrix;
  std::vector<Index> row_order;
  std::array<double, 3> quartiles{};
  Eigen::MatrixXi class_matrix;
};

// Type-7 quantile (linear interpolation between order statistics).
inline double quantile_type7(std::vector<double> v, double prob) {
  detail::require(!v.empty(), "quantile_type7: empty input");
  detail::require(prob >= 0.0 && prob <= 1.0, "quantile_type7: probability outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Classes: <= Q25 -> 1, (Q25, Q50] -> 2, (Q50, Q75] -> 3, > Q75 -> 4.
inline int quartile_class(double v, const std::array<double, 3>& q) {
  if (v <= q[0]) return 1;
  if (v <= q[1]) return 2;
  if (v <= q[2]) return 3;
  return 4;
}

inline PairwiseReport summarize_pairwise(Matrix g) {
  detail::require(g.rows() == g.cols() && g.rows() >= 2, "summarize_pairwise: need a q x q matrix, q >= 2");
  const Index q = g.rows();
  g.diagonal().setZero();
  std::vector<double> upper;
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < j; ++i) upper.push_back(g(i, j));
  PairwiseReport r;
  r.quartiles = {quantile_type7(upper, 0.25), quantile_type7(upper, 0.5), quantile_type7(upper, 0.75)};
  r.class_matrix = Eigen::MatrixXi::Zero(q, q);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < q; ++i)
      if (i != j) r.class_matrix(i, j) = quartile_class(g(i, j), r.quartiles);
  // row average over the q-1 off-diagonal entries
  const Vector avg = g.rowwise().sum() / static_cast<double>(q - 1);
  r.row_order.resize(static_cast<std::size_t>(q));
  std::iota(r.row_order.begin(), r.row_order.end(), Index{0});
  std::stable_sort(r.row_order.begin(), r.row_order.end(),
                   [&](Index a, Index b) { return avg(a) > avg(b); });
  r.g_matrix = std::move(g);
  return r;
}

// G_ij = sqrt(q) g(X_i, X_j) / lambda_hat, diagonal zero.
inline Matrix pairwise_g_matrix(std::span<const SampleSummary> s) {
  detail::check_group(s, false);
  const double lam2 = lambda_hat_sq(s);
  if (!(lam2 > 0.0)) throw NumericalError("pairwise_contributions: lambda_hat is zero");
  const Index q = static_cast<Index>(s.size());
  const double scale = std::sqrt(static_cast<double>(q)) / std::sqrt(lam2);
  Matrix g = Matrix::Zero(q, q);
  for (Index i = 0; i < q; ++i)
    for (Index j = i + 1; j < q; ++j) {
      const double v = scale * g_kernel(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

inline PairwiseReport pairwise_contributions(std::span<const Sample> xs) {
  detail::require(xs.size() >= 2, "pairwise_contributions: at least two populations are required");
  return summarize_pairwise(pairwise_g_matrix(detail::summarize_all(xs, false)));
}

struct ScanResult {
  double z_min = 0.0;
  double z_max = 0.0;
  double z_mean = 0.0;
  double reject_fraction = 0.0;
  std::vector<double> z_values;
  PairwiseReport mean_pairwise;
};

// p_sub distinct variable indices, ascending, so p_sub == p gives 0..p-1.
inline std::vector<Index> draw_subset(Index p, Index p_sub, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index k = 0; k < p_sub; ++k) {
    const auto span = static_cast<std::uint64_t>(p - k);
    const auto j = k + static_cast<Index>(rng() % span);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(p_sub));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Repeated equality tests on random variable subsets shared by all
// populations. Repetition r uses stream (seed, r).
inline ScanResult subsampled_eq_scan(std::span<const Sample> xs, Index p_sub, Index n_rep, double alpha,
                                     std::uint64_t seed, bool center = false, unsigned threads = 0) {
  detail::require(xs.size() >= 2, "subsampled_eq_scan: at least two populations are required");
  const Index p = xs[0].p();
  for (const auto& x : xs) detail::require(x.p() == p, "subsampled_eq_scan: dimension mismatch");
  detail::require(p_sub >= 1 && p_sub <= p, "subsampled_eq_scan: p_sub must lie in [1, p]");
  detail::require(n_rep >= 1, "subsampled_eq_scan: n_rep must be positive");
  normal_upper_quantile(alpha);
  const std::size_t q = xs.size();
  std::vector<TestReport> reports(static_cast<std::size_t>(n_rep));
  std::vector<Matrix> gs(static_cast<std::size_t>(n_rep));
  parallel_for(static_cast<std::size_t>(n_rep), threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    const auto idx = draw_subset(p, p_sub, rng);
    std::vector<SampleSummary> s;
    s.reserve(q);
    for (const auto& x : xs) {
      Sample sub(x.data()(idx, Eigen::all));
      s.push_back(summarize(center ? center_sample(sub) : sub, false));
    }
    reports[r] = eq_test(s, alpha);
    gs[r] = pairwise_g_matrix(s);
  });
  ScanResult out;
  Matrix gbar = Matrix::Zero(static_cast<Index>(q), static_cast<Index>(q));
  double zsum = 0.0;
  Index rejects = 0;
  out.z_min = reports[0].z;
  out.z_max = reports[0].z;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const double z = reports[r].z;
    out.z_values.push_back(z);
    out.z_min = std::min(out.z_min, z);
    out.z_max = std::max(out.z_max, z);
    zsum += z;
    rejects += reports[r].reject ? 1 : 0;
    gbar += gs[r];
  }
  out.z_mean = zsum / static_cast<double>(n_rep);
  out.reject_fraction = static_cast<double>(rejects) / static_cast<double>(n_rep);
  out.mean_pairwise = summarize_pairwise(gbar / static_cast<double>(n_rep));
  return out;
}

// n_rep == 1 with p_sub == p is the plain full-data evaluation.
inline PairwiseReport pairwise_contributions(std::span<const Sample> xs, Index n_rep, Index p_sub,
                                             std::uint64_t seed, bool center = false) {
  detail::require(!xs.empty(), "pairwise_contributions: at least two populations are required");
  if (n_rep == 1 && p_sub == xs[0].p() && !center) return pairwise_contributions(xs);
  return subsampled_eq_scan(xs, p_sub, n_rep, 0.05, seed, center).mean_pairwise;
}

}  // namespace covmany
