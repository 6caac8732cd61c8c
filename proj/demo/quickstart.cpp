// Draws five populations with proportional covariances and one outlier, then
// runs both tests and prints the z statistics.

#include <cmath>
#include <cstdio>
#include <vector>

#include "covmany/procedures.hpp"
#include "covmany/simgen.hpp"

int main() {
  using namespace covmany;
  Rng rng = make_stream(2024, 0);
  const Index p = 60;
  const auto [sigma0, lambda0] = case_b_pair(p, rng, kPropSpectrum);
  const PsdMat root = psd_sqrt(sigma0);

  std::vector<Sample> xs;
  for (int i = 0; i < 5; ++i) {
    const double w = draw_weight(rng);
    xs.push_back(sample_population(root.scaled(std::sqrt(w)), NoiseKind::gaussian, 80, rng));
  }
  const TestReport prop_null = prop_test(xs, 0.05);
  const TestReport eq_null = eq_test(xs, 0.05);
  std::printf("proportional populations: prop z = %.3f (reject %d), eq z = %.3f (reject %d)\n", prop_null.z,
              prop_null.reject, eq_null.z, eq_null.reject);

  const PsdMat outlier = PsdMat::certify(SymMat::from_symmetric(sigma0.matrix() + 2.0 * lambda0.matrix()));
  xs.push_back(sample_population(psd_sqrt(outlier), NoiseKind::gaussian, 80, rng));
  const TestReport prop_alt = prop_test(xs, 0.05);
  std::printf("with one outlier:         prop z = %.3f (reject %d), p-value %.3g\n", prop_alt.z, prop_alt.reject,
              prop_alt.p_value);
  return 0;
}
