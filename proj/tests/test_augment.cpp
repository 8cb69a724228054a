#include <doctest.h>

#include <random>

#include "lassl/augment.hpp"

using namespace lassl;

namespace {

Vector random_input(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(dim);
  for (int i = 0; i < dim; ++i) x[i] = gauss(rng);
  return x;
}

AugmentPolicy identity_policy() {
  AugmentPolicy p;
  p.jitter_sigma = 0.0;
  p.mask_fraction = 0.0;
  p.scale_low = 1.0;
  p.scale_high = 1.0;
  return p;
}

}  // namespace

TEST_CASE("identity policy returns the input bit for bit") {
  const AugmentPolicy p = identity_policy();
  CHECK(p.is_identity());
  const Vector x = random_input(64, 7);
  const Vector v = augment_view(x, p, 3, 42, 0);
  CHECK((v - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy validation") {
  AugmentPolicy p;
  CHECK_NOTHROW(p.validate());
  p.scale_low = 1.5;
  p.scale_high = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = AugmentPolicy{};
  p.mask_fraction = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = AugmentPolicy{};
  p.jitter_sigma = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("views are deterministic in (seed, epoch, index, slot)") {
  AugmentPolicy p;
  p.global_seed = 11;
  const Vector x = random_input(32, 1);
  const Vector a = augment_view(x, p, 5, 17, 1);
  const Vector b = augment_view(x, p, 5, 17, 1);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

  // changing any key coordinate changes the view
  CHECK((a - augment_view(x, p, 6, 17, 1)).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a - augment_view(x, p, 5, 18, 1)).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a - augment_view(x, p, 5, 17, 0)).cwiseAbs().maxCoeff() > 0.0);
  AugmentPolicy q = p;
  q.global_seed = 12;
  CHECK((a - augment_view(x, q, 5, 17, 1)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("two views differ with overwhelming probability") {
  AugmentPolicy p;
  p.global_seed = 3;
  const Vector x = random_input(64, 2);
  int distinct = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto [v1, v2] = two_views(x, p, 0, i);
    distinct += (v1 - v2).cwiseAbs().maxCoeff() > 0.0;
  }
  CHECK(distinct == 1000);
}

TEST_CASE("masked coordinate count matches floor(mask_fraction * dim)") {
  AugmentPolicy p;
  p.jitter_sigma = 0.0;
  p.scale_low = 1.0;
  p.scale_high = 1.0;
  p.mask_fraction = 0.2;
  // strictly nonzero input so zeros can only come from masking
  Vector x = random_input(65, 9);
  for (int i = 0; i < x.size(); ++i)
    if (x[i] == 0.0) x[i] = 1.0;
  for (int index = 0; index < 50; ++index) {
    const Vector v = augment_view(x, p, 0, index, 0);
    const auto zeros = (v.array() == 0.0).count();
    CHECK(zeros == 13);  // floor(0.2 * 65)
  }
}

TEST_CASE("jitter is uncorrelated across view slots") {
  AugmentPolicy p;
  p.mask_fraction = 0.0;
  p.scale_low = 1.0;
  p.scale_high = 1.0;
  p.jitter_sigma = 1.0;
  const Vector x = Vector::Zero(1);
  const int trials = 10000;
  double sum1 = 0, sum2 = 0, sum12 = 0, sq1 = 0, sq2 = 0;
  for (int i = 0; i < trials; ++i) {
    const auto [v1, v2] = two_views(x, p, 0, i);
    sum1 += v1[0];
    sum2 += v2[0];
    sum12 += v1[0] * v2[0];
    sq1 += v1[0] * v1[0];
    sq2 += v2[0] * v2[0];
  }
  const double m1 = sum1 / trials, m2 = sum2 / trials;
  const double cov = sum12 / trials - m1 * m2;
  const double var1 = sq1 / trials - m1 * m1;
  const double var2 = sq2 / trials - m2 * m2;
  const double corr = cov / std::sqrt(var1 * var2);
  CHECK(std::abs(corr) < 0.05);
  // and the marginals look like the configured jitter
  CHECK(std::abs(m1) < 0.05);
  CHECK(std::abs(var1 - 1.0) < 0.1);
}

TEST_CASE("scale stays inside the configured range") {
  AugmentPolicy p;
  p.jitter_sigma = 0.0;
  p.mask_fraction = 0.0;
  p.scale_low = 0.8;
  p.scale_high = 1.25;
  const Vector x = Vector::Ones(8);
  for (int i = 0; i < 500; ++i) {
    const Vector v = augment_view(x, p, 1, i, 0);
    // pure scaling: all coordinates share one factor
    const double s = v[0];
    CHECK((v.array() - s).abs().maxCoeff() == 0.0);
    CHECK(s >= 0.8);
    CHECK(s <= 1.25);
  }
}

TEST_CASE("derive_seed separates all key coordinates") {
  const auto base = derive_seed(1, 2, 3, 4);
  CHECK(base == derive_seed(1, 2, 3, 4));
  CHECK(base != derive_seed(2, 2, 3, 4));
  CHECK(base != derive_seed(1, 3, 3, 4));
  CHECK(base != derive_seed(1, 2, 4, 4));
  CHECK(base != derive_seed(1, 2, 3, 5));
  // no trivial collision between swapped coordinates
  CHECK(derive_seed(1, 2, 3, 4) != derive_seed(1, 3, 2, 4));
}
