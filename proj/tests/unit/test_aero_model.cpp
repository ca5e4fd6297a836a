#include <doctest.h>

#include <cmath>

#include "jetflight/aero_kernels.hpp"
#include "jetflight/aero_model.hpp"
#include "jetflight/cfd_fit.hpp"
#include "jetflight/errors.hpp"

using namespace jetflight;

namespace {

Vec3 random_vector(Rng& rng, double scale) {
  return {scale * rng.uniform(-1, 1), scale * rng.uniform(-1, 1), scale * rng.uniform(-1, 1)};
}

Mat3 random_rotation(Rng& rng) {
  Vec3 axis = random_vector(rng, 1.0).normalized();
  return axis_rotation(axis, rng.uniform(-kPi, kPi));
}

}  // namespace

TEST_SUITE("aero_model") {
  TEST_CASE("flow angles of axis-aligned velocities") {
    FlowAngles a = flow_angles(Vec3(0, 0, -1));
    CHECK(a.alpha == 0.0);
    CHECK(a.degenerate);
    CHECK(a.beta == 0.0);
    a = flow_angles(Vec3(1, 0, 0));
    CHECK(a.alpha == doctest::Approx(kPi / 2));
    CHECK(a.beta == doctest::Approx(0.0));
    CHECK_FALSE(a.degenerate);
    a = flow_angles(Vec3(0, 1, 0));
    CHECK(a.alpha == doctest::Approx(kPi / 2));
    CHECK(a.beta == doctest::Approx(kPi / 2));
    a = flow_angles(Vec3(0, -1, 0));
    CHECK(a.beta == doctest::Approx(3 * kPi / 2));
    CHECK(flow_angles(Vec3::Zero()).degenerate);
    CHECK(flow_angles(Vec3(0, 0, 2)).alpha == doctest::Approx(kPi));
  }

  TEST_CASE("flow direction reproduces the angles") {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const Vec3 v = random_vector(rng, 5.0);
      const FlowAngles a = flow_angles(v);
      CHECK((flow_direction(a) * v.norm() - v).norm() < 1e-12);
    }
  }

  TEST_CASE("drag coefficient at reference angles") {
    const AeroCoefficients c;
    CHECK(drag_coefficient(c, 0, 0) == doctest::Approx(0.1274).epsilon(1e-14));
    CHECK(drag_coefficient(c, kPi / 2, kPi / 2) == doctest::Approx(0.2465).epsilon(1e-14));
    CHECK(drag_coefficient(c, kPi / 2, 0) == doctest::Approx(0.1415).epsilon(1e-14));
  }

  TEST_CASE("normal coefficient at reference angles") {
    const AeroCoefficients c;
    CHECK(normal_coefficient(c, 0, 1.234) == doctest::Approx(0.0007).epsilon(1e-14));
    CHECK(normal_coefficient(c, kPi / 2, kPi / 2) == doctest::Approx(0.0007).epsilon(1e-12));
    CHECK(normal_coefficient(c, kPi / 4, kPi / 2) == doctest::Approx(0.0007 + 0.0938 * 0.5).epsilon(1e-12));
    CHECK(normal_coefficient(c, kPi / 4, kPi / 2) == doctest::Approx(0.0476).epsilon(1e-12));
  }

  TEST_CASE("coefficient symmetries") {
    const AeroCoefficients c;
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      const double a = rng.uniform(0, kPi), b = rng.uniform(0, kTwoPi);
      CHECK(drag_coefficient(c, a, b) == doctest::Approx(drag_coefficient(c, a, b + kTwoPi)).epsilon(1e-12));
      CHECK(normal_coefficient(c, a, b) == doctest::Approx(normal_coefficient(c, a, b + kTwoPi)).epsilon(1e-12));
      CHECK(drag_coefficient(c, a, b) == doctest::Approx(drag_coefficient(c, kPi - a, b)).epsilon(1e-14));
    }
  }

  TEST_CASE("aero force for 7.5 m/s along +j with aligned frames") {
    const AeroCoefficients c;
    const Vec3 v(0, 7.5, 0);
    const AeroForce f = aero_force(c, v, Mat3::Identity());
    CHECK(f.drag.norm() == doctest::Approx(7.5 * 7.5 * 0.2465).epsilon(1e-12));
    CHECK(f.drag.norm() == doctest::Approx(13.866).epsilon(1e-4));
    CHECK(f.drag.dot(v) < 0.0);
    CHECK(f.lift.norm() == doctest::Approx(7.5 * 7.5 * 0.0007).epsilon(1e-9));
    CHECK(f.lift.z() < 0.0);
    CHECK(std::abs(f.lift.x()) < 1e-12);
    CHECK((f.total - f.drag - f.lift).norm() < 1e-15);
  }

  TEST_CASE("zero and degenerate relative velocities") {
    const AeroCoefficients c;
    CHECK(aero_force(c, Vec3::Zero(), Mat3::Identity()).total.isZero(0.0));
    const Vec3 v(0, 0, -4);
    const AeroForce f = aero_force(c, v, Mat3::Identity());
    CHECK(f.lift.isZero(0.0));
    CHECK((f.drag + v.norm() * drag_coefficient(c, 0, 0) * v).norm() < 1e-14);
  }

  TEST_CASE("non-orthonormal body rotation is rejected") {
    CHECK_THROWS_AS(aero_force(AeroCoefficients{}, Vec3(1, 0, 0), 1.1 * Mat3::Identity()), ValidationError);
  }

  TEST_CASE("force properties over random inputs") {
    const AeroCoefficients c;
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const Vec3 v = random_vector(rng, 20.0);
      const Mat3 r = random_rotation(rng);
      const AeroForce f = aero_force(c, v, r);
      CHECK(f.drag.dot(v) <= 0.0);
      CHECK(std::abs(f.lift.dot(v)) < 1e-9);
      const FlowAngles a = flow_angles(r.transpose() * v);
      const double bound =
          v.squaredNorm() * (drag_coefficient(c, a.alpha, a.beta) + std::abs(lift_coefficient(c, a.alpha, a.beta)));
      CHECK(f.total.norm() <= bound * (1 + 1e-12));
      const double lambda = 2.0;
      const AeroForce g = aero_force(c, lambda * v, r);
      CHECK((g.drag - lambda * lambda * f.drag).norm() <= 1e-12 * (1 + g.drag.norm()));
      CHECK((g.lift - lambda * lambda * f.lift).norm() <= 1e-12 * (1 + g.lift.norm()));
      const AeroForce h = aero_force_from_angles(c, v.norm(), a, r);
      CHECK((h.total - f.total).norm() < 1e-10 * (1 + f.total.norm()));
    }
  }

  TEST_CASE("measurement corruption") {
    const FlowAngles a{1.0, 2.0, false};
    SUBCASE("zero corruption is the identity") {
      auto [out, rng] = corrupt_flow_measurement(5.0, a, MeasurementCorruption{}, Rng(1));
      CHECK(out.speed == 5.0);
      CHECK(out.angles.alpha == 1.0);
      CHECK(out.angles.beta == 2.0);
    }
    SUBCASE("fixed seed reproduces bitwise") {
      const MeasurementCorruption mc{0.05, 0.10, 9};
      auto [o1, r1] = corrupt_flow_measurement(5.0, a, mc, Rng(9));
      auto [o2, r2] = corrupt_flow_measurement(5.0, a, mc, Rng(9));
      CHECK(o1.speed == o2.speed);
      CHECK(r1.state == r2.state);
      CHECK(o1.angles.alpha == doctest::Approx(1.1));
      CHECK(o1.angles.beta == doctest::Approx(2.2));
      CHECK(std::abs(o1.speed / 5.0 - 1.0) <= 0.05);
    }
    SUBCASE("noise has zero mean") {
      const MeasurementCorruption mc{0.05, 0.0, 0};
      Rng rng(77);
      double sum = 0.0;
      const int n = 100000;
      for (int i = 0; i < n; ++i) {
        auto [o, next] = corrupt_flow_measurement(1.0, a, mc, rng);
        rng = next;
        sum += o.speed - 1.0;
      }
      CHECK(std::abs(sum / n) < 0.001);
    }
    SUBCASE("angles stay inside their ranges") {
      auto [o, r] = corrupt_flow_measurement(1.0, FlowAngles{3.0, 6.0, false}, MeasurementCorruption{0, 0.1, 0}, Rng());
      CHECK(o.angles.alpha <= kPi);
      CHECK(o.angles.beta <= kTwoPi);
    }
    SUBCASE("negative amplitudes are rejected") {
      CHECK_THROWS_AS(corrupt_flow_measurement(1.0, a, MeasurementCorruption{-0.1, 0, 0}, Rng()), ValidationError);
    }
  }

  TEST_CASE("coefficient files round trip") {
    AeroCoefficients c{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const std::string text = serialize_coefficients(c, {"2026-01-01T00:00:00Z", "abc", "unit"});
    CHECK(load_coefficients(text) == c);
    CHECK_THROWS_AS(load_coefficients("{"), IoError);
    CHECK_THROWS_AS(load_coefficients(R"({"c0": 1})"), ValidationError);
  }
}

TEST_SUITE("aero_kernels") {
  TEST_CASE("scalar and AVX2 drag rows agree bitwise with the reference coefficient") {
    const AeroCoefficients c{0.1274, 0.0903, 0.0141, 0.0147, 0.0007, 0.0938};
    Rng rng(4);
    for (int len : {0, 1, 3, 4, 5, 8, 13, 361}) {
      std::vector<double> sb2(len), out_s(len), out_v(len);
      for (auto& x : sb2) x = rng.uniform01();
      const double sa2 = rng.uniform01();
      kernels::scalar::drag_row(c, sa2, sb2, out_s);
      kernels::avx2::drag_row(c, sa2, sb2, out_v);
      for (int i = 0; i < len; ++i) CHECK(out_s[i] == out_v[i]);
      for (int i = 0; i < len; ++i) {
        const double a = std::asin(std::sqrt(sa2)), b = std::asin(std::sqrt(sb2[i]));
        CHECK(out_s[i] == doctest::Approx(drag_coefficient(c, a, b)).epsilon(1e-13));
      }
      const auto ms = kernels::scalar::row_min(out_s);
      const auto mv = kernels::avx2::row_min(out_v);
      CHECK(ms.index == mv.index);
      CHECK(ms.value == mv.value);
    }
  }

  TEST_CASE("row_min returns the first minimum") {
    std::vector<double> v{3, 1, 2, 1, 1, 5, 1, 0.5, 0.5};
    CHECK(kernels::scalar::row_min(v).index == 7);
    CHECK(kernels::avx2::row_min(v).index == 7);
  }

  TEST_CASE("positivity scan is identical under both instruction sets") {
    const AeroCoefficients c{0.05, -0.2, 0.1, 0.03, 0, 0};
    kernels::set_isa_override(kernels::Isa::kScalar);
    const PositivityScan s = positivity_scan(c, 1.0);
    kernels::set_isa_override(kernels::Isa::kAvx2);
    const PositivityScan v = positivity_scan(c, 1.0);
    kernels::clear_isa_override();
    CHECK(s.min_value == v.min_value);
    CHECK(s.alpha_deg == v.alpha_deg);
    CHECK(s.beta_deg == v.beta_deg);
  }
}
