#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lifegraph/common.hpp"
#include "lifegraph/manifold.hpp"

using namespace lifegraph;

TEST_CASE("signature inner product follows the curvature sign") {
  // Hyperbolic: last coordinate negated.
  CHECK(signature_inner({0, 0, 1}, {0, 0, 1}, -1.0) == -1.0);
  CHECK(signature_inner({3, 4, 0}, {0, 0, 2}, -1.0) == 0.0);
  // Spherical: plain dot product.
  CHECK(signature_inner({1, 0, 0}, {1, 0, 0}, 1.0) == 1.0);
  CHECK(signature_inner({1, 2, 3}, {4, 5, 6}, 2.0) == 32.0);
  CHECK_THROWS_AS(signature_inner({1, 2}, {1, 2, 3}, 1.0), DimensionError);
}

TEST_CASE("signature inner product is bilinear and symmetric") {
  Rng rng(9);
  for (double kappa : {1.0, -1.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x(4), y(4), w(4);
      for (int i = 0; i < 4; ++i) {
        x[i] = rng.uniform(-2, 2);
        y[i] = rng.uniform(-2, 2);
        w[i] = rng.uniform(-2, 2);
      }
      double a = rng.uniform(-3, 3);
      CHECK(signature_inner(x, y, kappa) == doctest::Approx(signature_inner(y, x, kappa)));
      std::vector<double> ax_plus_w(4);
      for (int i = 0; i < 4; ++i) ax_plus_w[i] = a * x[i] + w[i];
      CHECK(signature_inner(ax_plus_w, y, kappa) ==
            doctest::Approx(a * signature_inner(x, y, kappa) + signature_inner(w, y, kappa)));
    }
  }
}

TEST_CASE("membership peaks exactly on the manifold") {
  CcmSpec spec;  // kappa 1, d 5, zeta 1
  std::vector<double> unit(6, 0.0);
  unit[0] = 1.0;
  CHECK(membership(unit, spec) == 1.0);

  std::vector<double> zero(6, 0.0);
  CHECK(membership(zero, spec) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  CcmSpec wide = spec;
  wide.zeta = 1e6;
  std::vector<double> bounded{1.5, 0.5, -2.0, 0.0, 0.25, 1.0};
  CHECK(membership(bounded, wide) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("membership is strictly monotone in deviation") {
  CcmSpec spec;
  double previous = 2.0;
  for (int i = 0; i < 100; ++i) {
    // Scale a unit vector so <z,z> walks away from 1/kappa.
    double scale = 1.0 + 0.05 * (i + 1);
    std::vector<double> z(6, 0.0);
    z[2] = scale;
    double mu = membership(z, spec);
    CHECK(mu < previous);
    previous = mu;
  }
}

TEST_CASE("printed-form membership peaks at the sign-flipped quadric") {
  CcmSpec spec;
  spec.kappa = -1.0;  // 1/kappa = -1, printed form peaks at <z,z> = +1
  spec.printed_membership = true;
  std::vector<double> z{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};  // <z,z> = 1 under Minkowski
  CHECK(membership(z, spec) == doctest::Approx(1.0));
}

TEST_CASE("spherical prior sits on the sphere") {
  CcmSpec spec;
  spec.kappa = 2.0;
  spec.d = 2;
  Rng rng(77);
  auto samples = sample_prior(spec, 2000, rng);
  for (const auto& z : samples) {
    CHECK(std::fabs(signature_inner(z, z, spec.kappa) - 0.5) < 1e-12);
  }
}

TEST_CASE("hyperbolic prior satisfies the hyperboloid identity") {
  CcmSpec spec;
  spec.kappa = -1.0;
  spec.d = 4;
  Rng rng(78);
  auto samples = sample_prior(spec, 2000, rng);
  for (const auto& z : samples) {
    CHECK(std::fabs(signature_inner(z, z, spec.kappa) + 1.0) < 1e-9);
    CHECK(z.back() >= 1.0);
  }
}

TEST_CASE("spherical prior is centered (monte carlo symmetry)") {
  CcmSpec spec;
  Rng rng(79);
  auto samples = sample_prior(spec, 10000, rng);
  std::vector<double> mean(6, 0.0);
  for (const auto& z : samples) {
    for (int i = 0; i < 6; ++i) mean[i] += z[i];
  }
  double norm = 0.0;
  for (double& m : mean) {
    m /= samples.size();
    norm += m * m;
  }
  CHECK(std::sqrt(norm) < 0.05);
}

TEST_CASE("prior sampling is deterministic per seed") {
  CcmSpec spec;
  Rng a(5), b(5);
  auto s1 = sample_prior(spec, 10, a);
  auto s2 = sample_prior(spec, 10, b);
  CHECK(s1 == s2);
}

TEST_CASE("manifold deviation aggregates exactly") {
  CcmSpec spec;
  Rng rng(80);
  auto samples = sample_prior(spec, 100, rng);
  auto summary = manifold_deviation(samples, spec);
  CHECK(summary.mean < 1e-9);
  CHECK(summary.max < 1e-9);

  std::vector<std::vector<double>> zeros(3, std::vector<double>(6, 0.0));
  summary = manifold_deviation(zeros, spec);
  CHECK(summary.mean == 1.0);
  CHECK(summary.max == 1.0);

  std::vector<std::vector<double>> mixed;
  mixed.push_back(samples[0]);              // on-manifold
  mixed.push_back(std::vector<double>(6));  // deviation 1
  summary = manifold_deviation(mixed, spec);
  CHECK(summary.mean == doctest::Approx(0.5).epsilon(1e-9));

  CHECK_THROWS_AS(manifold_deviation({}, spec), UsageError);
}

TEST_CASE("projection lands on the manifold for both signs") {
  std::vector<double> z{0.3, -1.2, 0.8, 2.0, -0.5, 0.1};
  CcmSpec sphere;
  auto zp = project_to_manifold(z, sphere);
  CHECK(std::fabs(signature_inner(zp, zp, sphere.kappa) - 1.0) < 1e-12);

  CcmSpec hyper;
  hyper.kappa = -0.5;
  auto zh = project_to_manifold(z, hyper);
  CHECK(std::fabs(signature_inner(zh, zh, hyper.kappa) + 2.0) < 1e-12);
}

TEST_CASE("spec validation rejects the degenerate corners") {
  CcmSpec bad;
  bad.kappa = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = CcmSpec{};
  bad.zeta = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}
