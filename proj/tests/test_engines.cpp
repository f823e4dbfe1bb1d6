#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "fpl/envelope.hpp"
#include "fpl/errors.hpp"
#include "fpl/floquet.hpp"
#include "fpl/position.hpp"

using namespace fpl;

namespace {

const double kW0 = kTwoPi * 4e6;
const double kOm = kTwoPi * 1e5;
const double kOC = kTwoPi * 2.156e3;

OscillatorNetwork pair_network(double coupling = kOC) {
  return OscillatorNetwork({Site{0, kW0}, Site{1, kW0 + kOm}}, {{{0, 1}, coupling}});
}

DriveSchedule steady(double duration, std::vector<ModulationTone> tones = {}) {
  DriveSchedule s;
  s.segments.push_back({duration, std::move(tones), {}, {}});
  return s;
}

AmplitudeState state(std::vector<cplx> a) {
  AmplitudeState s;
  s.alphas = std::move(a);
  return s;
}

double max_distance(const AmplitudeState& a, const AmplitudeState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.alphas.size(); ++i) d = std::max(d, std::abs(a.alphas[i] - b.alphas[i]));
  return d;
}

}  // namespace

TEST_CASE("envelope: static coupled pair matches the matrix exponential") {
  const double detune = kTwoPi * 3e3;
  OscillatorNetwork net({Site{0, kW0}, Site{1, kW0 + detune}}, {{{0, 1}, kOC}});
  const auto init = state({cplx(3.0, 1.0), cplx(-1.0, 0.5)});
  const double t = 700e-6;
  const auto tr = integrate_envelope(net, steady(t), init, std::nullopt, 0.0, {t});

  Eigen::Matrix2d h;
  const double ref = net.reference_omega();
  h << kW0 - ref, kOC, kOC, kW0 + detune - ref;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
  Eigen::Vector2cd a0(init.alphas[0], init.alphas[1]);
  Eigen::Vector2cd phases;
  for (int i = 0; i < 2; ++i) phases(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
  const Eigen::Matrix2cd v = es.eigenvectors().cast<cplx>();
  const Eigen::Vector2cd expect = v * phases.asDiagonal() * v.adjoint() * a0;
  // Default step: 200 per fastest period, about 1e-7 relative over 700 us.
  CHECK(std::abs(tr.samples[0].alphas[0] - expect(0)) < 1e-6);
  CHECK(std::abs(tr.samples[0].alphas[1] - expect(1)) < 1e-6);
  const auto fine = integrate_envelope(net, steady(t), init, std::nullopt, 2e-8, {t});
  CHECK(std::abs(fine.samples[0].alphas[0] - expect(0)) < 1e-10);
}

TEST_CASE("envelope: modulated isolated site follows the FM phase") {
  OscillatorNetwork net({Site{0, kW0}, Site{1, kW0 + kOm}}, {});
  const double eta = 1.8, phi = 0.3, t = 123e-6;
  const auto init = state({cplx(2.0, 0.0), cplx(0.0, 1.0)});
  const auto tr = integrate_envelope(net, steady(t, {{1, kOm, eta, phi}}), init, std::nullopt, 0.0, {t});
  const double ref = net.reference_omega();
  const double arg = (kW0 + kOm - ref) * t + eta * (std::sin(kOm * t + phi) - std::sin(phi));
  CHECK(std::abs(tr.samples[0].alphas[1] - cplx(0.0, 1.0) * std::polar(1.0, -arg)) < 1e-6);
  const double arg0 = (kW0 - ref) * t;
  CHECK(std::abs(tr.samples[0].alphas[0] - 2.0 * std::polar(1.0, -arg0)) < 1e-6);
}

TEST_CASE("envelope: Kerr shift and resonant drive") {
  const double K = kTwoPi * 10.0, t = 50e-6;
  OscillatorNetwork kerr({Site{0, kW0, K, {}}}, {});
  const auto tr = integrate_envelope(kerr, steady(t), state({cplx(5.0, 0.0)}), std::nullopt, 0.0, {t});
  CHECK(std::abs(tr.samples[0].alphas[0] - 5.0 * std::polar(1.0, -K * 25.0 * t)) < 1e-7);

  OscillatorNetwork lin({Site{0, kW0}}, {});
  DriveSchedule drive;
  drive.segments.push_back({t, {}, {ExcitationTone{0, kW0, 0.0, 4e5}}, {}});
  const auto d = integrate_envelope(lin, drive, state({cplx(0.0, 0.0)}), std::nullopt, 0.0, {t});
  CHECK(std::abs(d.samples[0].alphas[0]) == doctest::Approx(4e5 * t / 2.0).epsilon(1e-9));
}

TEST_CASE("envelope: conservation, reversal and fourth-order convergence") {
  const auto net = pair_network();
  const auto sched = steady(400e-6, {{1, kOm, 1.8, 0.2}});
  const auto init = state({cplx(10.0, 0.0), cplx(0.0, 0.0)});

  EnvelopePropagator prop(net, sched);
  AmplitudeState s = init;
  prop.propagate(s, 400e-6);
  CHECK(s.total_quanta() == doctest::Approx(100.0).epsilon(1e-8));
  prop.propagate(s, 0.0);
  CHECK(max_distance(s, init) < 1e-7);

  // Errors against a fine reference at two coarse steps.
  const double period = kTwoPi / DriveEvaluator(net, sched).fastest_envelope_frequency();
  const double t = 40e-6;
  auto run = [&](double dt) {
    return integrate_envelope(net, sched, init, std::nullopt, dt, {t}).samples[0];
  };
  const auto ref = run(period / 640.0);
  const double e1 = max_distance(run(period / 20.0), ref);
  const double e2 = max_distance(run(period / 40.0), ref);
  const double order = std::log2(e1 / e2);
  CHECK(order > 3.6);
  CHECK(order < 4.4);
}

TEST_CASE("envelope: step bounds and misuse") {
  const auto net = pair_network();
  const auto sched = steady(1e-4, {{1, kOm, 1.8, 0.0}});
  CHECK_THROWS_AS(EnvelopePropagator(net, sched, std::nullopt, 1e-5), Error);
  EnvelopePropagator noisy(net, sched, NoiseModel{1e-4, 0.0, 1});
  AmplitudeState s = state({1.0, 0.0});
  noisy.propagate(s, 1e-5);
  try {
    noisy.propagate(s, 0.0);
    FAIL("expected misuse");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Misuse);
  }
}

TEST_CASE("envelope: noise is seeded and reproduces the configured rates") {
  OscillatorNetwork net({Site{0, kW0}}, {});
  const double tau = 200e-6;
  const auto sched = steady(tau);
  const auto init = state({cplx(1.0, 0.0)});

  const auto a = integrate_envelope(net, sched, init, NoiseModel{tau, 0.0, 42}, 0.0, {tau});
  const auto b = integrate_envelope(net, sched, init, NoiseModel{tau, 0.0, 42}, 0.0, {tau});
  const auto c = integrate_envelope(net, sched, init, NoiseModel{tau, 0.0, 43}, 0.0, {tau});
  CHECK(a.samples[0].alphas[0] == b.samples[0].alphas[0]);
  CHECK(a.samples[0].alphas[0] != c.samples[0].alphas[0]);
  CHECK(a.metadata.noise);
  CHECK(a.metadata.rng_seed == 42);

  // Dephasing: <alpha(tau)> = e^-1 alpha(0); |alpha| stays 1.
  const int shots = 400;
  cplx mean = 0.0;
  for (int k = 0; k < shots; ++k) {
    const auto tr = integrate_envelope(net, sched, init, NoiseModel{tau, 0.0, 1000u + k}, 0.0, {tau});
    mean += tr.samples[0].alphas[0];
    CHECK(std::abs(tr.samples[0].alphas[0]) == doctest::Approx(1.0).epsilon(1e-9));
  }
  mean /= shots;
  CHECK(mean.real() == doctest::Approx(std::exp(-1.0)).epsilon(0.15));

  // Heating from vacuum: <|alpha|^2> = rate * t.
  double nbar = 0.0;
  for (int k = 0; k < shots; ++k) {
    const auto tr = integrate_envelope(net, sched, state({0.0}), NoiseModel{std::nullopt, 5e4, 7000u + k}, 0.0, {tau});
    nbar += tr.samples[0].nbar(0);
  }
  CHECK(nbar / shots == doctest::Approx(5e4 * tau).epsilon(0.15));
}

TEST_CASE("position: free oscillation keeps the amplitude") {
  OscillatorNetwork net({Site{0, kW0}}, {});
  const auto init = state({cplx(3.0, -4.0)});
  const auto tr = integrate_position(net, steady(20e-6), init, 0.0, {10e-6, 20e-6});
  for (const auto& s : tr.samples) {
    CHECK(std::abs(s.alphas[0]) == doctest::Approx(5.0).epsilon(1e-9));
    // Phase error of the default step, per oscillation period.
    const double periods = s.time * kW0 / kTwoPi;
    CHECK(std::fabs(std::arg(s.alphas[0] / init.alphas[0])) / periods < 1e-6);
  }
}

TEST_CASE("position: amplitude round trip and energy") {
  const auto net = pair_network();
  const auto sched = steady(1e-4, {{1, kOm, 1.0, 0.0}});
  PositionPropagator prop(net, sched);
  const OscillatorNetwork single({Site{0, kW0}}, {});
  const auto idle = steady(1e-4);
  const auto a = state({cplx(1.0, 2.0), cplx(-0.5, 0.25)});
  const PhaseSpaceState ps = prop.from_amplitudes(a);
  CHECK(max_distance(prop.to_amplitudes(ps), a) < 1e-12);

  PositionPropagator free(single, idle);
  PhaseSpaceState s = free.from_amplitudes(state({cplx(3.0, 0.0)}));
  const double e0 = free.energy(s);
  free.propagate(s, 50e-6);
  CHECK(free.energy(s) == doctest::Approx(e0).epsilon(1e-10));
}

TEST_CASE("position: fourth-order convergence") {
  const auto net = pair_network(kTwoPi * 20e3);
  const auto sched = steady(5e-6, {{1, kOm, 1.8, 0.0}});
  const auto init = state({cplx(10.0, 0.0), cplx(0.0, 0.0)});
  const double w_max = kW0 + kOm + 1.8 * kOm;
  const double dt0 = kTwoPi / (50.0 * w_max);
  const double t = 5e-6;
  auto run = [&](double dt) { return integrate_position(net, sched, init, dt, {t}).samples[0]; };
  const auto ref = run(dt0 / 16.0);
  const double e1 = max_distance(run(dt0), ref);
  const double e2 = max_distance(run(dt0 / 2.0), ref);
  const double order = std::log2(e1 / e2);
  CHECK(order > 3.6);
  CHECK(order < 4.4);
  CHECK_THROWS_AS(PositionPropagator(net, sched, 2.0 * dt0), Error);
}

TEST_CASE("floquet: folding and periods") {
  const double f = kOm;
  CHECK(fold_quasi_energy(0.3 * f, f) == doctest::Approx(0.3 * f));
  CHECK(fold_quasi_energy(0.7 * f, f) == doctest::Approx(-0.3 * f));
  CHECK(fold_quasi_energy(0.5 * f, f) == doctest::Approx(0.5 * f));
  CHECK(fold_quasi_energy(-0.5 * f, f) == doctest::Approx(0.5 * f));
  CHECK(circular_distance(0.45 * f, -0.45 * f, f) == doctest::Approx(0.1 * f));

  CHECK(common_period(steady(1e-3, {{0, kOm, 1.0, 0.0}, {1, 2.0 * kOm, 1.0, 0.0}})) ==
        doctest::Approx(1e-5));
  try {
    common_period(steady(1e-3, {{0, kOm, 1.0, 0.0}, {1, std::sqrt(2.0) * kOm, 1.0, 0.0}}));
    FAIL("expected NotPeriodic");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPeriodic);
  }
}

TEST_CASE("floquet: monodromy properties on both engines") {
  const auto net = pair_network();
  const auto sched = steady(1e-3, {{1, kOm, 1.8, 0.0}});
  const auto env = monodromy(net, sched, FloquetEngine::Envelope);
  const auto pos = monodromy(net, sched, FloquetEngine::Position);
  CHECK(env.unitarity_defect() < 1e-9);
  CHECK(std::fabs(pos.determinant() - 1.0) < 1e-8);
  REQUIRE(env.quasi_energies.size() == 2);
  REQUIRE(pos.quasi_energies.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(circular_distance(env.quasi_energies[i], pos.quasi_energies[i], env.fundamental) < 0.01 * kOC);
  }

  // Uncoupled, unmodulated partner: quasi-energies are the folded bare frequencies.
  const auto bare = monodromy(pair_network(0.0), sched, FloquetEngine::Envelope);
  for (double q : bare.quasi_energies) {
    CHECK(circular_distance(q, fold_quasi_energy(kW0, kOm), kOm) < 1e-6 * kOm);
  }

  DriveSchedule with_drive = sched;
  with_drive.segments[0].excitations.push_back({0, kW0, 0.0, 1.0});
  CHECK_THROWS_AS(monodromy(net, with_drive, FloquetEngine::Envelope), Error);
}
