#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covmany/errors.hpp"
#include "covmany/estimators.hpp"
#include "covmany/matcore.hpp"
#include "covmany/parallel.hpp"
#include "covmany/procedures.hpp"
#include "covmany/rng.hpp"
#include "covmany/theory.hpp"

namespace covmany {

enum class NoiseKind { gaussian, gamma_4_2 };

inline double nu4_of(NoiseKind k) { return k == NoiseKind::gaussian ? 3.0 : 4.5; }

inline const char* to_string(NoiseKind k) { return k == NoiseKind::gaussian ? "gaussian" : "gamma"; }

inline NoiseKind parse_noise(const std::string& s) {
  if (s == "gaussian" || s == "normal") return NoiseKind::gaussian;
  if (s == "gamma" || s == "gamma_4_2") return NoiseKind::gamma_4_2;
  throw InputError("unknown noise kind '" + s + "' (expected gaussian or gamma)");
}

// i.i.d. mean 0, variance 1 entries filled column by column. gamma_4_2 is
// Gamma(shape 4, rate 2) - 2.
inline Matrix draw_noise(NoiseKind kind, Index rows, Index cols, Rng& rng) {
  detail::require(rows >= 0 && cols >= 0, "draw_noise: negative dimension");
  Matrix z(rows, cols);
  double* d = z.data();
  const Index total = rows * cols;
  if (kind == NoiseKind::gaussian) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Index i = 0; i < total; ++i) d[i] = nd(rng);
  } else {
    std::gamma_distribution<double> gd(4.0, 0.5);
    for (Index i = 0; i < total; ++i) d[i] = gd(rng) - 2.0;
  }
  return z;
}

// Haar orthogonal matrix: QR of a Gaussian matrix with Q's columns flipped so
// that R has a positive diagonal.
inline Matrix rand_orthogonal(Index p, Rng& rng) {
  detail::require(p >= 1, "rand_orthogonal: p must be positive");
  const Matrix g = draw_noise(NoiseKind::gaussian, p, p, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < p; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

// X = Sigma^{1/2} Z from given noise.
inline Sample apply_sqrt(const PsdMat& sqrt_sigma, const Matrix& z) {
  detail::require(sqrt_sigma.dim() == z.rows(), "sample_population: dimension mismatch");
  if (sqrt_sigma.is_diagonal()) {
    Matrix x = z;
    x.array().colwise() *= sqrt_sigma.matrix().diagonal().array();
    return Sample(std::move(x));
  }
  return Sample(sqrt_sigma.matrix() * z);
}

inline Sample sample_population(const PsdMat& sqrt_sigma, NoiseKind kind, Index n, Rng& rng) {
  detail::require(n >= 2, "sample_population: n must be at least 2");
  return apply_sqrt(sqrt_sigma, draw_noise(kind, sqrt_sigma.dim(), n, rng));
}

struct Spectrum {
  double lo;
  double hi;
};

inline const Spectrum kPropSpectrum{std::exp(-3.0), std::exp(3.0)};
inline const Spectrum kEqSpectrum{0.1, 10.1};

inline Vector draw_spectrum(Index p, const Spectrum& s, Rng& rng) {
  Vector d(p);
  for (Index i = 0; i < p; ++i) d(i) = s.lo + (s.hi - s.lo) * rng.uniform();
  return d;
}

// Sigma = I, Lambda = U diag(1,..,1,0,..,0) U^T with p/2 ones.
inline std::pair<PsdMat, PsdMat> case_a_pair(Index p, Rng& rng) {
  detail::require(p >= 2 && p % 2 == 0, "case_a_pair: p must be even");
  const Matrix u = rand_orthogonal(p, rng);
  Vector d = Vector::Zero(p);
  d.head(p / 2).setOnes();
  return {PsdMat::identity(p), PsdMat::from_eigen(d, u)};
}

// Sigma = U1 D1 U1^T, Lambda = U2 D2 U2^T, D entries uniform on the spectrum.
inline std::pair<PsdMat, PsdMat> case_b_pair(Index p, Rng& rng, const Spectrum& spectrum) {
  detail::require(p >= 1, "case_b_pair: p must be positive");
  const Matrix u1 = rand_orthogonal(p, rng);
  const Vector d1 = draw_spectrum(p, spectrum, rng);
  const Matrix u2 = rand_orthogonal(p, rng);
  const Vector d2 = draw_spectrum(p, spectrum, rng);
  return {PsdMat::from_eigen(d1, u1), PsdMat::from_eigen(d2, u2)};
}

inline Index draw_n(Index lo, Index hi, Rng& rng) {
  detail::require(lo >= 2 && hi >= lo, "sample size range must satisfy 2 <= low <= high");
  return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double draw_weight(Rng& rng) { return 0.5 + rng.uniform(); }

enum class Scenario { prop_case_a, prop_case_b, eq_case_a, eq_case_b, kron_case_I, kron_case_II };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::prop_case_a: return "prop_case_a";
    case Scenario::prop_case_b: return "prop_case_b";
    case Scenario::eq_case_a: return "eq_case_a";
    case Scenario::eq_case_b: return "eq_case_b";
    case Scenario::kron_case_I: return "kron_case_I";
    case Scenario::kron_case_II: return "kron_case_II";
  }
  return "unknown";
}

inline Scenario parse_scenario(const std::string& s) {
  for (Scenario v : {Scenario::prop_case_a, Scenario::prop_case_b, Scenario::eq_case_a, Scenario::eq_case_b,
                     Scenario::kron_case_I, Scenario::kron_case_II})
    if (s == to_string(v)) return v;
  throw InputError("unknown scenario '" + s + "'");
}

inline bool is_needle(Scenario s) { return s != Scenario::kron_case_I && s != Scenario::kron_case_II; }
inline bool is_equality(Scenario s) { return s == Scenario::eq_case_a || s == Scenario::eq_case_b; }

// The beta-independent part of a single-outlier scenario: q-1 populations
// w_i Sigma0 (w_i = 1 for equality) and one outlier Sigma0 + sqrt(beta) Lambda0.
struct NeedleDesign {
  bool equality = false;
  Index p = 0;
  Index q = 0;
  PsdMat sigma0;
  PsdMat lambda0;
  PsdMat sqrt_sigma0;
  std::vector<double> w;  // q-1 weights
  std::vector<Index> n;   // q sample sizes
  double nu4 = 3.0;

  PsdMat sigma(std::size_t i, double beta) const {
    if (i + 1 < static_cast<std::size_t>(q)) return sigma0.scaled(w[i]);
    return outlier(beta);
  }

  PsdMat outlier(double beta) const {
    detail::require(beta >= 0.0, "needle scenario: beta must be nonnegative");
    if (beta == 0.0) return sigma0;
    return PsdMat::certify(sigma0.sym() + lambda0.sym().scaled(std::sqrt(beta)));
  }

  PsdMat sqrt_sigma(std::size_t i, double beta) const {
    if (i + 1 < static_cast<std::size_t>(q)) return sqrt_sigma0.scaled(std::sqrt(w[i]));
    if (beta == 0.0) return sqrt_sigma0;
    return psd_sqrt(outlier(beta));
  }

  std::vector<PopulationSpec> specs(double beta) const {
    std::vector<PopulationSpec> out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(q); ++i) out.emplace_back(sigma(i, beta), nu4, n[i]);
    return out;
  }

  // (q-1)^-1 sum_{i<q} c_i^2 mu_{i,1}^4, with mu_{i,1} = w_i
  double w2q() const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(q); ++i) {
      const double c = static_cast<double>(p) / static_cast<double>(n[i]);
      acc += c * c * std::pow(w[i], 4);
    }
    return acc / static_cast<double>(q - 1);
  }

  // (q-1)^-1 sum_{i<q} c_i^2
  double cbar12() const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(q); ++i) {
      const double c = static_cast<double>(p) / static_cast<double>(n[i]);
      acc += c * c;
    }
    return acc / static_cast<double>(q - 1);
  }

  double mu2() const { return sigma0.matrix().squaredNorm() / static_cast<double>(p); }

  double theoretical_power(double beta, double alpha) const {
    if (equality) return needle_power_eq(beta, p, q, cbar12(), alpha);
    return needle_power_prop(beta, p, q, mu2(), w2q(), alpha);
  }
};

// Draw order: covariance pair, weights, sample sizes.
inline NeedleDesign draw_needle_design(Scenario sc, Index p, Index q, Index n_low, Index n_high, NoiseKind noise,
                                       Rng& rng) {
  detail::require(is_needle(sc), "draw_needle_design: not a needle scenario");
  detail::require(q >= 2, "needle scenario: q must be at least 2");
  NeedleDesign d;
  d.equality = is_equality(sc);
  d.p = p;
  d.q = q;
  d.nu4 = nu4_of(noise);
  const bool case_a = sc == Scenario::prop_case_a || sc == Scenario::eq_case_a;
  auto pair = case_a ? case_a_pair(p, rng) : case_b_pair(p, rng, d.equality ? kEqSpectrum : kPropSpectrum);
  if (d.equality) {
    d.sigma0 = normalize_frob(pair.first);
    d.lambda0 = normalize_frob(pair.second);
  } else {
    auto [s0, l0] = normalize_prop_basis(pair.first, pair.second);
    d.sigma0 = std::move(s0);
    d.lambda0 = std::move(l0);
  }
  d.sqrt_sigma0 = psd_sqrt(d.sigma0);
  for (Index i = 0; i + 1 < q; ++i) d.w.push_back(d.equality ? 1.0 : draw_weight(rng));
  for (Index i = 0; i < q; ++i) d.n.push_back(draw_n(n_low, n_high, rng));
  return d;
}

struct NeedleScenario {
  std::vector<PopulationSpec> specs;
  std::vector<PsdMat> sqrt_sigmas;
  NeedleDesign design;
};

inline NeedleScenario needle_scenario(Scenario sc, Index p, Index q, double beta, Index n_low, Index n_high,
                                      NoiseKind noise, Rng& rng) {
  detail::require(beta >= 0.0, "needle scenario: beta must be nonnegative");
  NeedleScenario out;
  out.design = draw_needle_design(sc, p, q, n_low, n_high, noise, rng);
  out.specs = out.design.specs(beta);
  for (std::size_t i = 0; i < static_cast<std::size_t>(q); ++i)
    out.sqrt_sigmas.push_back(out.design.sqrt_sigma(i, beta));
  return out;
}

inline NeedleScenario needle_scenario_prop(Index p, Index q, double beta, Index n_low, Index n_high,
                                           NoiseKind noise, Rng& rng, bool case_a = true) {
  return needle_scenario(case_a ? Scenario::prop_case_a : Scenario::prop_case_b, p, q, beta, n_low, n_high,
                         noise, rng);
}

inline NeedleScenario needle_scenario_eq(Index p, Index q, double beta, Index n_low, Index n_high,
                                         NoiseKind noise, Rng& rng, bool case_a = true) {
  return needle_scenario(case_a ? Scenario::eq_case_a : Scenario::eq_case_b, p, q, beta, n_low, n_high, noise,
                         rng);
}

// Matrix-valued data model. Either q independent columns with their own
// covariances (column_sqrt non-empty) or the Kronecker form R^{1/2} Z C^{1/2}.
struct TransposableDesign {
  Index p = 0;
  Index q = 0;
  std::vector<PsdMat> column_sqrt;
  PsdMat row_sqrt;
  Matrix col_sqrt;

  bool kronecker() const { return column_sqrt.empty(); }

  // z holds n noise matrices of shape p x q
  TransposableSample from_noise(const std::vector<Matrix>& z) const {
    detail::require(z.size() >= 2, "TransposableDesign: need at least two observations");
    std::vector<Matrix> obs(z.size());
    if (kronecker()) {
      for (std::size_t k = 0; k < z.size(); ++k) {
        detail::require(z[k].rows() == p && z[k].cols() == q, "TransposableDesign: noise shape mismatch");
        obs[k] = row_sqrt.matrix() * z[k] * col_sqrt;
      }
      return TransposableSample(std::move(obs));
    }
    const Index n = static_cast<Index>(z.size());
    for (auto& o : obs) o.resize(p, q);
    Matrix zi(p, n);
    for (Index i = 0; i < q; ++i) {
      for (Index k = 0; k < n; ++k) {
        detail::require(z[static_cast<std::size_t>(k)].rows() == p && z[static_cast<std::size_t>(k)].cols() == q,
                        "TransposableDesign: noise shape mismatch");
        zi.col(k) = z[static_cast<std::size_t>(k)].col(i);
      }
      const Matrix xi = column_sqrt[static_cast<std::size_t>(i)].matrix() * zi;
      for (Index k = 0; k < n; ++k) obs[static_cast<std::size_t>(k)].col(i) = xi.col(k);
    }
    return TransposableSample(std::move(obs));
  }

  TransposableSample sample(Index n, NoiseKind kind, Rng& rng) const {
    detail::require(n >= 2, "TransposableDesign: n must be at least 2");
    std::vector<Matrix> z;
    for (Index k = 0; k < n; ++k) z.push_back(draw_noise(kind, p, q, rng));
    return from_noise(z);
  }

  // Cov of column j: Sigma_j, or |col_j(C^{1/2})|^2 Sigma_R in Kronecker form
  std::vector<SymMat> column_covariances() const {
    std::vector<SymMat> out;
    if (kronecker()) {
      const Matrix sr = row_sqrt.matrix() * row_sqrt.matrix();
      for (Index j = 0; j < q; ++j) out.push_back(SymMat::from_symmetric(col_sqrt.col(j).squaredNorm() * sr));
    } else {
      for (const auto& s : column_sqrt) out.push_back(SymMat::from_symmetric(s.matrix() * s.matrix()));
    }
    return out;
  }
};

inline TransposableSample kron_sample(const PsdMat& sigma_r, const Matrix& sigma_c_sqrt, Index n, NoiseKind noise,
                                      Rng& rng) {
  detail::require(sigma_c_sqrt.rows() == sigma_c_sqrt.cols() && sigma_c_sqrt.rows() >= 2,
                  "kron_sample: Sigma_C^{1/2} must be square with q >= 2");
  TransposableDesign d;
  d.p = sigma_r.dim();
  d.q = sigma_c_sqrt.rows();
  d.row_sqrt = psd_sqrt(sigma_r);
  d.col_sqrt = sigma_c_sqrt;
  return d.sample(n, noise, rng);
}

// beta-independent draws of the two transposable comparison cases
struct KronBase {
  bool case_one = true;
  Index p = 0;
  Index q = 0;
  std::vector<PsdMat> lambdas;  // Lambda_0 .. Lambda_q (case I)
  PsdMat sigma_r;               // case II
  std::vector<double> w;
};

inline KronBase draw_kron_base(bool case_one, Index p, Index q, Rng& rng) {
  detail::require(p >= 1 && q >= 2, "transposable scenario: need p >= 1 and q >= 2");
  KronBase b;
  b.case_one = case_one;
  b.p = p;
  b.q = q;
  if (case_one) {
    for (Index j = 0; j <= q; ++j) {
      const Matrix u = rand_orthogonal(p, rng);
      const Vector d = draw_spectrum(p, kPropSpectrum, rng);
      b.lambdas.push_back(PsdMat::from_eigen(d, u.transpose()));
    }
  } else {
    const Matrix u = rand_orthogonal(p, rng);
    const Vector d = draw_spectrum(p, kPropSpectrum, rng);
    b.sigma_r = PsdMat::from_eigen(d, u);
  }
  for (Index i = 0; i < q; ++i) b.w.push_back(draw_weight(rng));
  return b;
}

inline TransposableDesign kron_design(const KronBase& b, double beta) {
  TransposableDesign d;
  d.p = b.p;
  d.q = b.q;
  if (b.case_one) {
    detail::require(beta >= 0.0 && beta <= 1.0, "case I: beta must lie in [0, 1]");
    for (Index i = 0; i < b.q; ++i) {
      const double wi = b.w[static_cast<std::size_t>(i)];
      if (beta == 0.0) {
        d.column_sqrt.push_back(psd_sqrt(b.lambdas[0].scaled(wi)));
      } else {
        const SymMat s = (b.lambdas[0].sym().scaled(1.0 - beta) +
                          b.lambdas[static_cast<std::size_t>(i) + 1].sym().scaled(beta))
                             .scaled(wi);
        d.column_sqrt.push_back(psd_sqrt(PsdMat::certify(s)));
      }
    }
  } else {
    detail::require(beta >= 0.0, "case II: beta must be nonnegative");
    d.row_sqrt = psd_sqrt(b.sigma_r);
    d.col_sqrt = Matrix::Zero(b.q, b.q);
    for (Index i = 0; i < b.q; ++i) d.col_sqrt(i, i) = b.w[static_cast<std::size_t>(i)];
    d.col_sqrt(0, 1) += beta;
    d.col_sqrt(1, 0) += beta;
  }
  return d;
}

// Independent columns, Sigma_i = w_i [(1 - beta) Lambda_0 + beta Lambda_i].
inline TransposableDesign case_I_scenario(Index p, Index q, double beta, Rng& rng) {
  detail::require(beta >= 0.0 && beta <= 1.0, "case I: beta must lie in [0, 1]");
  return kron_design(draw_kron_base(true, p, q, rng), beta);
}

// Kronecker form with Sigma_C^{1/2} = diag(w) + beta (e1 e2^T + e2 e1^T).
inline TransposableDesign case_II_scenario(Index p, Index q, double beta, Rng& rng) {
  detail::require(beta >= 0.0, "case II: beta must be nonnegative");
  return kron_design(draw_kron_base(false, p, q, rng), beta);
}

struct ExperimentConfig {
  Index p = 100;
  Index q = 50;
  Index n_low = 50;
  Index n_high = 150;
  NoiseKind noise = NoiseKind::gaussian;
  Scenario scenario = Scenario::prop_case_a;
  std::vector<double> beta_grid{0.0};
  Index n_reps = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: default_threads()
};

struct SizeResult {
  Index rejections = 0;
  Index n_reps = 0;
  double rate = 0.0;
  double se = 0.0;
};

struct PowerCurve {
  std::vector<double> beta;
  std::vector<double> empirical;
  std::vector<double> theoretical;  // NaN where no closed form exists
  Index n_reps = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_config(const ExperimentConfig& c) {
  require(c.n_reps >= 1, "experiment: n_reps must be positive");
  require(c.q >= 2 && c.p >= 1, "experiment: need p >= 1 and q >= 2");
  require(c.n_low >= 2 && c.n_high >= c.n_low, "experiment: need 2 <= n_low <= n_high");
  require(!c.beta_grid.empty() && c.beta_grid.front() == 0.0, "experiment: beta grid must start at 0");
  require(std::is_sorted(c.beta_grid.begin(), c.beta_grid.end()), "experiment: beta grid must be ascending");
  if (c.scenario == Scenario::prop_case_a || c.scenario == Scenario::eq_case_a)
    require(c.p % 2 == 0, "experiment: case (a) needs even p");
  if (c.scenario == Scenario::kron_case_I)
    require(c.beta_grid.back() <= 1.0, "experiment: case I needs beta in [0, 1]");
  normal_upper_quantile(c.alpha);
}

struct RepOutcome {
  std::vector<char> reject;
  std::vector<double> theory;
};

inline RepOutcome run_needle_rep(const ExperimentConfig& c, std::size_t r) {
  Rng rng = make_stream(c.seed, r);
  const NeedleDesign d = draw_needle_design(c.scenario, c.p, c.q, c.n_low, c.n_high, c.noise, rng);
  std::vector<Matrix> z;
  for (Index i = 0; i < c.q; ++i) z.push_back(draw_noise(c.noise, c.p, d.n[static_cast<std::size_t>(i)], rng));
  const bool need_r12 = !d.equality;
  std::vector<SampleSummary> s(static_cast<std::size_t>(c.q));
  for (std::size_t i = 0; i + 1 < s.size(); ++i) s[i] = summarize(apply_sqrt(d.sqrt_sigma(i, 0.0), z[i]), need_r12);
  RepOutcome out;
  for (double beta : c.beta_grid) {
    s.back() = summarize(apply_sqrt(d.sqrt_sigma(s.size() - 1, beta), z.back()), need_r12);
    const TestReport t = d.equality ? eq_test(s, c.alpha) : prop_test(s, c.alpha);
    out.reject.push_back(t.reject ? 1 : 0);
    out.theory.push_back(d.theoretical_power(beta, c.alpha));
  }
  return out;
}

inline RepOutcome run_kron_rep(const ExperimentConfig& c, std::size_t r) {
  Rng rng = make_stream(c.seed, r);
  const KronBase base = draw_kron_base(c.scenario == Scenario::kron_case_I, c.p, c.q, rng);
  const Index n = draw_n(c.n_low, c.n_high, rng);
  std::vector<Matrix> z;
  for (Index k = 0; k < n; ++k) z.push_back(draw_noise(c.noise, c.p, c.q, rng));
  RepOutcome out;
  for (double beta : c.beta_grid) {
    const TestReport t = kron_spec_test(kron_design(base, beta).from_noise(z), c.alpha);
    out.reject.push_back(t.reject ? 1 : 0);
    out.theory.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace detail

// Replication r draws everything from stream (seed, r): the design first,
// then the noise. The noise is reused across the beta grid, so the beta = 0
// column is identical to the size experiment with the same seed.
inline PowerCurve run_power_experiment(const ExperimentConfig& c) {
  detail::check_config(c);
  const auto reps = static_cast<std::size_t>(c.n_reps);
  std::vector<detail::RepOutcome> res(reps);
  parallel_for(reps, c.threads, [&](std::size_t r) {
    res[r] = is_needle(c.scenario) ? detail::run_needle_rep(c, r) : detail::run_kron_rep(c, r);
  });
  PowerCurve pc;
  pc.beta = c.beta_grid;
  pc.n_reps = c.n_reps;
  pc.seed = c.seed;
  for (std::size_t k = 0; k < c.beta_grid.size(); ++k) {
    Index count = 0;
    double theory = 0.0;
    for (const auto& o : res) {
      count += o.reject[k];
      theory += o.theory[k];
    }
    pc.empirical.push_back(static_cast<double>(count) / static_cast<double>(c.n_reps));
    pc.theoretical.push_back(theory / static_cast<double>(c.n_reps));
  }
  return pc;
}

inline SizeResult run_size_experiment(ExperimentConfig c) {
  c.beta_grid = {0.0};
  const PowerCurve pc = run_power_experiment(c);
  SizeResult s;
  s.n_reps = c.n_reps;
  s.rejections = static_cast<Index>(std::llround(pc.empirical[0] * static_cast<double>(c.n_reps)));
  s.rate = pc.empirical[0];
  s.se = std::sqrt(s.rate * (1.0 - s.rate) / static_cast<double>(c.n_reps));
  return s;
}

// Mean theoretical power over the replications' designs, without drawing data.
inline std::vector<double> theoretical_curve(const ExperimentConfig& c, const std::vector<double>& betas) {
  detail::require(is_needle(c.scenario), "theoretical_curve: no closed form for transposable scenarios");
  std::vector<double> out(betas.size(), 0.0);
  for (std::size_t r = 0; r < static_cast<std::size_t>(c.n_reps); ++r) {
    Rng rng = make_stream(c.seed, r);
    const NeedleDesign d = draw_needle_design(c.scenario, c.p, c.q, c.n_low, c.n_high, c.noise, rng);
    for (std::size_t k = 0; k < betas.size(); ++k) out[k] += d.theoretical_power(betas[k], c.alpha);
  }
  for (auto& v : out) v /= static_cast<double>(c.n_reps);
  return out;
}

// Smallest beta (to 1e-4 relative) at which the mean theoretical power reaches
// `target`. Transposable scenarios have no closed form and use beta = 1.
inline double default_beta_max(const ExperimentConfig& c, double target = 0.99) {
  if (!is_needle(c.scenario)) return 1.0;
  ExperimentConfig probe = c;
  probe.n_reps = std::min<Index>(c.n_reps, 200);
  std::vector<double> mu2, w2q, cbar;
  for (std::size_t r = 0; r < static_cast<std::size_t>(probe.n_reps); ++r) {
    Rng rng = make_stream(c.seed, r);
    const NeedleDesign d = draw_needle_design(c.scenario, c.p, c.q, c.n_low, c.n_high, c.noise, rng);
    mu2.push_back(d.mu2());
    w2q.push_back(d.w2q());
    cbar.push_back(d.cbar12());
  }
  const bool eq = is_equality(c.scenario);
  auto power = [&](double beta) {
    double acc = 0.0;
    for (std::size_t r = 0; r < mu2.size(); ++r)
      acc += eq ? needle_power_eq(beta, c.p, c.q, cbar[r], c.alpha)
                : needle_power_prop(beta, c.p, c.q, mu2[r], w2q[r], c.alpha);
    return acc / static_cast<double>(mu2.size());
  };
  double hi = 1.0;
  while (power(hi) < target) hi *= 2.0;
  double lo = 0.0;
  while (hi - lo > 1e-4 * hi) {
    const double mid = 0.5 * (lo + hi);
    (power(mid) < target ? lo : hi) = mid;
  }
  return hi;
}

// 0, step, 2 step, ... up to beta_max (inclusive within rounding).
inline std::vector<double> make_beta_grid(double beta_max, double beta_step) {
  detail::require(beta_max >= 0.0 && beta_step > 0.0, "beta grid: need beta_max >= 0 and beta_step > 0");
  std::vector<double> g;
  const auto steps = static_cast<Index>(std::floor(beta_max / beta_step + 1e-9));
  for (Index k = 0; k <= steps; ++k) g.push_back(static_cast<double>(k) * beta_step);
  return g;
}

}  // namespace covmany
