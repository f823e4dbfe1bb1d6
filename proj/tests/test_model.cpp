#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fpl/bessel.hpp"
#include "fpl/drive.hpp"
#include "fpl/errors.hpp"
#include "fpl/model.hpp"

using namespace fpl;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no fpl::Error thrown");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("bessel_j matches the standard library") {
  for (int m = 0; m <= 12; ++m) {
    for (double x = 0.0; x <= 20.0; x += 0.37) {
      CHECK(bessel_j(m, x) == doctest::Approx(std::cyl_bessel_j(m, x)).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("bessel_j symmetries and sum rule") {
  for (double x : {0.3, 1.26, 2.405, 7.9}) {
    CHECK(bessel_j(-3, x) == doctest::Approx(-bessel_j(3, x)));
    CHECK(bessel_j(2, -x) == doctest::Approx(bessel_j(2, x)));
    CHECK(bessel_j(1, -x) == doctest::Approx(-bessel_j(1, x)));
    double sum = 0.0;
    for (int m = -40; m <= 40; ++m) sum += bessel_j(m, x) * bessel_j(m, x);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(bessel_j(0, 0.0) == 1.0);
  CHECK(bessel_j(4, 0.0) == 0.0);
  CHECK(std::fabs(bessel_j(0, 2.404825557695773)) < 1e-12);
}

TEST_CASE("network invariants") {
  const double w = kTwoPi * 4e6;
  CHECK(kind_of([&] { OscillatorNetwork({Site{0, -1.0}}, {}); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { OscillatorNetwork({Site{0, w}}, {{{0, 0}, 1.0}}); }) == ErrorKind::Config);
  CHECK(kind_of([&] { OscillatorNetwork({Site{0, w}}, {{{0, 3}, 1.0}}); }) == ErrorKind::Config);
  CHECK(kind_of([&] { OscillatorNetwork({Site{0, w}, Site{1, w}}, {{{0, 1}, -2.0}}); }) ==
        ErrorKind::Domain);

  OscillatorNetwork net({Site{0, w}, Site{1, 3 * w}}, {{{1, 0}, 5.0}});
  CHECK(net.coupling(0, 1) == 5.0);
  CHECK(net.coupling(1, 0) == 5.0);
  CHECK(net.reference_omega() == doctest::Approx(2 * w));
}

TEST_CASE("geometry coupling scales as 1/d^3") {
  const double w = kTwoPi * 4e6;
  auto rate = [&](double d) {
    return build_network_from_geometry({{0, 0}, {d, 0}}, {w, w}, phys::kMassMg24,
                                       phys::kElementaryCharge)
        .coupling(0, 1);
  };
  CHECK(rate(20e-6) / rate(40e-6) == doctest::Approx(8.0).epsilon(1e-12));
  // q^2 / (4 pi eps0 m w d^3) for equal frequencies
  const double d = 40e-6;
  const double expect = phys::kElementaryCharge * phys::kElementaryCharge /
                        (4.0 * kPi * phys::kEpsilon0 * phys::kMassMg24 * w * d * d * d);
  CHECK(rate(d) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("geometry is permutation equivariant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-60e-6, 60e-6), f(3.5e6, 4.5e6);
  std::vector<Vec2> p;
  std::vector<double> w;
  for (int i = 0; i < 4; ++i) {
    p.push_back({pos(rng), pos(rng)});
    w.push_back(kTwoPi * f(rng));
  }
  const std::vector<int> perm{2, 0, 3, 1};
  std::vector<Vec2> pp(4);
  std::vector<double> wp(4);
  for (int i = 0; i < 4; ++i) {
    pp[i] = p[perm[i]];
    wp[i] = w[perm[i]];
  }
  const auto a = build_network_from_geometry(p, w, phys::kMassMg24, phys::kElementaryCharge);
  const auto b = build_network_from_geometry(pp, wp, phys::kMassMg24, phys::kElementaryCharge);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      CHECK(b.coupling(i, j) == doctest::Approx(a.coupling(perm[i], perm[j])).epsilon(1e-14));
    }
  }
}

TEST_CASE("geometry rejects coincident sites and bad input") {
  const double w = kTwoPi * 4e6;
  CHECK(kind_of([&] {
          build_network_from_geometry({{0, 0}, {0, 0}}, {w, w}, phys::kMassMg24,
                                      phys::kElementaryCharge);
        }) == ErrorKind::Geometry);
  CHECK(kind_of([&] {
          build_network_from_geometry({{0, 0}}, {w, w}, phys::kMassMg24, phys::kElementaryCharge);
        }) == ErrorKind::Config);
  CHECK(kind_of([&] {
          build_network_from_geometry({{0, 0}, {1e-5, 0}}, {w, w}, 0.0, phys::kElementaryCharge);
        }) == ErrorKind::Domain);
}

TEST_CASE("orientation factor multiplies the pair rate") {
  const double w = kTwoPi * 4e6;
  const auto plain = build_network_from_geometry({{0, 0}, {4e-5, 0}}, {w, w}, phys::kMassMg24,
                                                 phys::kElementaryCharge);
  const auto half = build_network_from_geometry({{0, 0}, {4e-5, 0}}, {w, w}, phys::kMassMg24,
                                                phys::kElementaryCharge, {{{0, 1}, 0.5}});
  CHECK(half.coupling(0, 1) == doctest::Approx(0.5 * plain.coupling(0, 1)));
  CHECK(kind_of([&] {
          build_network_from_geometry({{0, 0}, {4e-5, 0}}, {w, w}, phys::kMassMg24,
                                      phys::kElementaryCharge, {{{0, 1}, -0.5}});
        }) == ErrorKind::Domain);
}

TEST_CASE("calibration interpolates and scales with 1/Omega_M") {
  IndexCalibration cal{{{0.0, 0.0}, {0.1, 0.63}, {0.2, 1.26}, {0.4, 2.57}}, kTwoPi * 1e5};
  CHECK(index_from_voltage(cal, 0.2, kTwoPi * 1e5) == doctest::Approx(1.26));
  CHECK(index_from_voltage(cal, 0.3, kTwoPi * 1e5) == doctest::Approx(1.915));
  CHECK(index_from_voltage(cal, 0.2, kTwoPi * 2e5) == doctest::Approx(0.63));
  CHECK(kind_of([&] { index_from_voltage(cal, 0.5, kTwoPi * 1e5); }) == ErrorKind::Range);
  CHECK(kind_of([&] { index_from_voltage(cal, 0.1, 0.0); }) == ErrorKind::Domain);
}

TEST_CASE("schedule validation collects every finding") {
  const double w = kTwoPi * 4e6;
  OscillatorNetwork net({Site{0, w}, Site{1, w + kTwoPi * 1e5}}, {{{0, 1}, 1e4}});
  CHECK(validate_schedule(net, DriveSchedule{}).size() == 1);

  DriveSchedule good;
  good.segments.push_back({1e-4, {{1, kTwoPi * 1e5, 1.8, 0.0}}, {}, {}});
  CHECK(validate_schedule(net, good).empty());

  DriveSchedule bad;
  bad.segments.push_back({1e-4, {{1, kTwoPi * 1e5, 1.8, 0.0}}, {}, {}});
  bad.segments.push_back({0.0, {{1, kTwoPi * 1e5, 1.0, 0.0}, {1, kTwoPi * 1e5, 1.0, 0.0}}, {}, {}});
  bad.segments.push_back({1e-4, {{0, kTwoPi * 1e5, 50.0, 0.0}}, {}, {Ramp{RampKind::Phase, 1, 1e-5}}});
  const auto d = validate_schedule(net, bad);
  REQUIRE(d.size() == 4);
  CHECK(d[0].segment == 1);  // zero duration
  CHECK(d[1].segment == 1);  // duplicate tone
  CHECK(d[2].segment == 2);  // excursion through zero
  CHECK(d[3].segment == 2);  // ramp without tone
}

TEST_CASE("drive evaluator applies ramps and segments") {
  const double w = kTwoPi * 4e6, Om = kTwoPi * 1e5;
  OscillatorNetwork net({Site{0, w}, Site{1, w + Om}}, {{{0, 1}, 1e4}});
  DriveSchedule s;
  s.segments.push_back({1e-4, {{1, Om, 1.8, 0.0}}, {}, {}});
  s.segments.push_back({1e-4, {{1, Om, 1.8, kPi}}, {}, {Ramp{RampKind::Phase, 1, 2e-5}}});
  DriveEvaluator ev(net, s);
  CHECK(ev.segment_at(0.5e-4) == 0);
  CHECK(ev.segment_at(1e-4) == 1);
  CHECK(ev.segment_at(2e-4) == 1);
  CHECK(ev.modulation(1, 1, 1e-4).phi == doctest::Approx(0.0));
  CHECK(ev.modulation(1, 1, 1.1e-4).phi == doctest::Approx(kPi / 2));
  CHECK(ev.modulation(1, 1, 1.5e-4).phi == doctest::Approx(kPi));
  CHECK(ev.modulation(0, 0, 0.0).Omega_M == 0.0);
  CHECK(ev.instantaneous_omega(0, 1, 0.0) == doctest::Approx(w + Om + 1.8 * Om));
  CHECK(ev.instantaneous_omega(0, 0, 3e-5) == doctest::Approx(w));
}

TEST_CASE("calibration is monotone in voltage") {
  IndexCalibration cal{{{0.0, 0.0}, {0.15, 1.26}, {0.25, 2.57}, {0.6, 3.9}}, kTwoPi * 1e5};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.6);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    CHECK(index_from_voltage(cal, a, kTwoPi * 1e5) <= index_from_voltage(cal, b, kTwoPi * 1e5));
    const double om = kTwoPi * (5e4 + 2e5 * u(rng) / 0.6);
    CHECK(index_from_voltage(cal, a, om) * om ==
          doctest::Approx(index_from_voltage(cal, a, kTwoPi * 1e5) * kTwoPi * 1e5).epsilon(1e-14));
  }
}
