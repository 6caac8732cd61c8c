#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "covmany/errors.hpp"
#include "covmany/matcore.hpp"
#include "covmany/normal.hpp"

namespace covmany {

class PopulationSpec {
 public:
  PopulationSpec() = default;
  PopulationSpec(PsdMat sigma, double nu4, Index n) : sigma_(std::move(sigma)), nu4_(nu4), n_(n) {
    detail::require(sigma_.certified(), "PopulationSpec: Sigma is not certified");
    detail::require(nu4 >= 1.0, "PopulationSpec: nu4 must be at least 1");
    detail::require(n >= 2, "PopulationSpec: n must be at least 2");
  }

  const PsdMat& sigma() const { return sigma_; }
  double nu4() const { return nu4_; }
  Index n() const { return n_; }
  Index p() const { return sigma_.dim(); }
  double c() const { return static_cast<double>(p()) / static_cast<double>(n_); }

 private:
  PsdMat sigma_;
  double nu4_ = 3.0;
  Index n_ = 2;
};

struct VarianceDecomposition {
  double sigma0_sq = 0.0;
  double sigmar_sq = 0.0;
  double total_sq = 0.0;
};

struct GroupDiagnostics {
  double dprop_min = 0.0;
  double dprop_max = 0.0;
  double dzero_min = 0.0;
  double dzero_max = 0.0;
};

namespace detail {

inline void check_specs(std::span<const PopulationSpec> specs) {
  require(specs.size() >= 2, "at least two populations are required");
  for (const auto& s : specs) require(s.p() == specs[0].p(), "populations have different dimensions");
}

template <class F>
double pair_mean(std::span<const PopulationSpec> specs, F dist) {
  check_specs(specs);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j, ++count)
      acc += dist(specs[i].sigma().sym(), specs[j].sigma().sym());
  return acc / static_cast<double>(count);
}

}  // namespace detail

inline double mean_drift_prop(std::span<const PopulationSpec> specs) {
  return detail::pair_mean(specs, [](const SymMat& a, const SymMat& b) { return d_prop(a, b); });
}

inline double mean_drift_eq(std::span<const PopulationSpec> specs) {
  return detail::pair_mean(specs, [](const SymMat& a, const SymMat& b) { return d_zero(a, b); });
}

inline VarianceDecomposition prop_variance(std::span<const PopulationSpec> specs) {
  detail::check_specs(specs);
  const Index pi = specs[0].p();
  const double p = static_cast<double>(pi), q = static_cast<double>(specs.size());
  std::vector<double> mu1(specs.size()), mu2(specs.size());
  double sum_mu1_sq = 0.0, sum_mu2 = 0.0;
  Matrix weighted = Matrix::Zero(pi, pi);  // sum_j mu1_j Sigma_j
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Matrix& s = specs[i].sigma().matrix();
    mu1[i] = s.trace() / p;
    mu2[i] = s.squaredNorm() / p;
    sum_mu1_sq += mu1[i] * mu1[i];
    sum_mu2 += mu2[i];
    weighted += mu1[i] * s;
  }
  VarianceDecomposition out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Matrix& s = specs[i].sigma().matrix();
    const double c = specs[i].c();
    const double alpha = (sum_mu1_sq - mu1[i] * mu1[i]) / (q - 1.0);
    const double beta = (sum_mu2 - mu2[i]) / (q - 1.0);
    const Matrix lambda = (weighted - mu1[i] * s) / (q - 1.0);
    const double kappa = detail::trace_prod(lambda, s) / p;
    Matrix gamma = alpha * s - mu1[i] * lambda;
    gamma.diagonal().array() += mu1[i] * beta - kappa;
    const SymMat g = SymMat::from_symmetric(std::move(gamma));
    out.sigma0_sq += c * c * alpha * alpha * mu2[i] * mu2[i];
    out.sigmar_sq += c * sigma_inner(g, g, specs[i].sigma(), specs[i].nu4());
  }
  out.sigma0_sq *= 16.0 / q;
  out.sigmar_sq *= 16.0 / q;
  out.total_sq = out.sigma0_sq + out.sigmar_sq;
  return out;
}

inline VarianceDecomposition eq_variance(std::span<const PopulationSpec> specs) {
  detail::check_specs(specs);
  const Index pi = specs[0].p();
  const double p = static_cast<double>(pi), q = static_cast<double>(specs.size());
  Matrix total = Matrix::Zero(pi, pi);
  for (const auto& s : specs) total += s.sigma().matrix();
  VarianceDecomposition out;
  for (const auto& spec : specs) {
    const Matrix& s = spec.sigma().matrix();
    const double c = spec.c();
    const double mu2 = s.squaredNorm() / p;
    const SymMat g = SymMat::from_symmetric(s - (total - s) / (q - 1.0));
    out.sigma0_sq += c * c * mu2 * mu2;
    out.sigmar_sq += c * sigma_inner(g, g, spec.sigma(), spec.nu4());
  }
  out.sigma0_sq *= 16.0 / q;
  out.sigmar_sq *= 16.0 / q;
  out.total_sq = out.sigma0_sq + out.sigmar_sq;
  return out;
}

// Phi(sqrt(q) drift / sigma - (sigma0 / sigma) z_alpha)
inline double power_general(double drift, const VarianceDecomposition& v, Index q, double alpha) {
  const double z = normal_upper_quantile(alpha);
  if (!(v.total_sq > 0.0) || !std::isfinite(v.total_sq))
    throw NumericalError("power_general: degenerate variance");
  detail::require(q >= 2, "power_general: q must be at least 2");
  const double sigma = std::sqrt(v.total_sq);
  const double sigma0 = std::sqrt(std::max(v.sigma0_sq, 0.0));
  return normal_cdf(std::sqrt(static_cast<double>(q)) * drift / sigma - sigma0 / sigma * z);
}

// Single outlier among q-1 proportional populations; w2q = (q-1)^-1 sum c_i^2 mu_{i,1}^4.
inline double needle_power_prop(double beta, Index p, Index q, double mu2, double w2q, double alpha) {
  const double z = normal_upper_quantile(alpha);
  detail::require(beta >= 0.0, "needle_power_prop: beta must be nonnegative");
  detail::require(mu2 > 0.0 && w2q > 0.0, "needle_power_prop: mu2 and w2q must be positive");
  detail::require(p >= 1 && q >= 2, "needle_power_prop: bad dimensions");
  const double shift = beta * static_cast<double>(p) /
                       (2.0 * mu2 * std::sqrt(static_cast<double>(q) * w2q));
  return normal_cdf(shift - z);
}

// Single outlier among q-1 equal populations; cbar12 = (q-1)^-1 sum c_i^2.
inline double needle_power_eq(double beta, Index p, Index q, double cbar12, double alpha) {
  const double z = normal_upper_quantile(alpha);
  detail::require(beta >= 0.0, "needle_power_eq: beta must be nonnegative");
  detail::require(cbar12 > 0.0, "needle_power_eq: cbar12 must be positive");
  detail::require(p >= 1 && q >= 2, "needle_power_eq: bad dimensions");
  const double shift = beta * static_cast<double>(p) / (2.0 * std::sqrt(static_cast<double>(q) * cbar12));
  return normal_cdf(shift - z);
}

inline GroupDiagnostics group_diagnostics(std::span<const PopulationSpec> specs) {
  detail::check_specs(specs);
  GroupDiagnostics g;
  g.dprop_min = g.dzero_min = std::numeric_limits<double>::infinity();
  g.dprop_max = g.dzero_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j) {
      const double dp = d_prop(specs[i].sigma().sym(), specs[j].sigma().sym());
      const double dz = d_zero(specs[i].sigma().sym(), specs[j].sigma().sym());
      g.dprop_min = std::min(g.dprop_min, dp);
      g.dprop_max = std::max(g.dprop_max, dp);
      g.dzero_min = std::min(g.dzero_min, dz);
      g.dzero_max = std::max(g.dzero_max, dz);
    }
  return g;
}

}  // namespace covmany
