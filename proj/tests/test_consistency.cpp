#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "fpl/bessel.hpp"
#include "fpl/experiments.hpp"
#include "fpl/floquet.hpp"
#include "fpl/rwa.hpp"

using namespace fpl;

// Cross-engine checks in the regime omega / Omega_M >= 20 and
// Omega_M / Omega_C >= 10, where the effective model is expected to hold.

namespace {

const double kW0 = kTwoPi * 4e6;
const double kOm = kTwoPi * 1e5;
const double kOC = kTwoPi * 2.156e3;

template <class Run>
void engines_agree(Run run, double tolerance = 0.05) {
  const ProtocolResult eff = run(Engine::Effective);
  const ProtocolResult env = run(Engine::Envelope);
  const ProtocolResult pos = run(Engine::Position);
  REQUIRE(eff.values.size() == env.values.size());
  REQUIRE(pos.values.size() == env.values.size());
  const double peak = *std::max_element(env.values.begin(), env.values.end());
  double d_eff = 0.0, d_pos = 0.0;
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    d_eff = std::max(d_eff, std::fabs(eff.values[i] - env.values[i]));
    d_pos = std::max(d_pos, std::fabs(pos.values[i] - env.values[i]));
  }
  CHECK(d_eff <= tolerance * peak);
  CHECK(d_pos <= tolerance * peak);
}

}  // namespace

TEST_CASE("engine agreement: spectroscopy") {
  SpectroscopySpec s;
  s.network = OscillatorNetwork({Site{0, kTwoPi * 5e6}}, {});
  s.t_probe = 50e-6;
  s.strength = 2.0 * 10.0 / s.t_probe;
  s.modulation = ModulationTone{0, kOm, 1.26, 0.0};
  for (int i = -30; i <= 30; ++i) s.probe_omegas.push_back(kTwoPi * (5e6 + 1e4 * i));
  engines_agree([&](Engine e) {
    RunOptions o;
    o.engine = e;
    return run_spectroscopy(s, o);
  });
}

TEST_CASE("engine agreement: exchange") {
  ExchangeSpec s;
  s.network = OscillatorNetwork({Site{0, kW0}, Site{1, kW0 + kOm}}, {{{0, 1}, kOC}});
  s.schedule.segments.push_back({400e-6, {{1, kOm, 1.8, 0.5}}, {}, {}});
  s.initial.alphas = {10.0, 0.0};
  s.times = linspace(0.0, 400e-6, 41);
  engines_agree([&](Engine e) {
    RunOptions o;
    o.engine = e;
    return run_exchange(s, o);
  });
}

TEST_CASE("engine agreement: phase-ramp map") {
  PhaseRampSpec s;
  s.network = OscillatorNetwork({Site{0, kW0}, Site{1, kW0 + kOm}}, {{{0, 1}, kOC}});
  s.modulations = {{1, kOm, 1.8, 0.0}};
  s.t_prep = 100e-6;
  s.t_ramp = 25e-6;
  s.t_max = 300e-6;
  s.times = linspace(0.0, 300e-6, 31);
  s.dphis = {0.0, kPi / 2, kPi, 4.0};
  s.initial.alphas = {10.0, 0.0};
  engines_agree([&](Engine e) {
    RunOptions o;
    o.engine = e;
    return run_phase_ramp_map(s, o);
  });
}

TEST_CASE("engine agreement: dual-modulation scan") {
  DualScanSpec s;
  s.network = OscillatorNetwork({Site{0, kW0 + kOm}, Site{1, kW0}}, {{{0, 1}, kOC}});
  s.modulations = {{0, kOm, 1.7, 0.0}, {1, kOm, 1.7, 0.0}};
  s.initial.alphas = {10.0, 0.0};
  for (int i = 0; i <= 12; ++i) s.dphis.push_back(kTwoPi * i / 12);
  engines_agree([&](Engine e) {
    RunOptions o;
    o.engine = e;
    return run_dual_phase_scan(s, o);
  });
}

TEST_CASE("engine agreement: two-path fringe") {
  TwoPathSpec s;
  s.network = OscillatorNetwork({Site{0, kTwoPi * 4.9e6}, Site{1, kTwoPi * 5e6}, Site{2, kTwoPi * 5.1e6}},
                                {{{0, 1}, kOC}, {{1, 2}, kOC}, {{0, 2}, kOC / 8.0}});
  s.modulations = {{1, kOm, 1.8, 0.0}};
  s.nbar_a = s.nbar_b = 100.0;
  for (int i = 0; i < 8; ++i) s.dphis.push_back(kTwoPi * i / 8);
  engines_agree([&](Engine e) {
    RunOptions o;
    o.engine = e;
    return run_two_path_fringe(s, o);
  });
}

TEST_CASE("one-site phase shift is a gauge transformation") {
  // Sites 0 and 2 share a frequency; site 1 sits one modulation quantum above
  // and is the only modulated site, so its phase enters as a local gauge.
  OscillatorNetwork net({Site{0, kW0}, Site{1, kW0 + kOm}, Site{2, kW0}},
                        {{{0, 1}, kOC}, {{1, 2}, kOC}, {{0, 2}, 0.3 * kOC}});
  auto model_at = [&](double phi) {
    return build_effective_model(net, ScheduleSegment{1e-3, {{1, kOm, 1.8, phi}}, {}, {}});
  };
  const auto a = model_at(0.2);
  const double c = 1.1;
  const auto b = model_at(0.2 + c);
  // Incident hops pick up exp(-i c) (sideband s = -1 into site 1).
  CHECK(std::abs(b.hop(1, 0) - a.hop(1, 0) * std::polar(1.0, -c)) < 1e-9 * kOC);
  CHECK(std::abs(b.hop(1, 2) - a.hop(1, 2) * std::polar(1.0, -c)) < 1e-9 * kOC);
  CHECK(std::abs(b.hop(0, 2) - a.hop(0, 2)) < 1e-9 * kOC);
  CHECK(std::fabs(std::remainder(plaquette_flux(a, {0, 1, 2}) - plaquette_flux(b, {0, 1, 2}), kTwoPi)) < 1e-9);

  AmplitudeState init;
  init.alphas = {cplx(3.0, 0.0), cplx(1.0, 2.0), cplx(0.0, -1.0)};
  AmplitudeState gauged = init;
  gauged.alphas[1] *= std::polar(1.0, -c);
  for (double t : {50e-6, 170e-6, 400e-6}) {
    const auto x = evolve_effective(a, init, t);
    const auto y = evolve_effective(b, gauged, t);
    for (int j = 0; j < 3; ++j) CHECK(y.nbar(j) == doctest::Approx(x.nbar(j)).epsilon(1e-10));
  }
}

// The Floquet modes of the exact envelope monodromy, moved into the
// effective frame, must carry the relative phase arg(H_eff[1][0]).
TEST_CASE("sign conventions agree with the monodromy") {
  const double weak = kTwoPi * 50.0;
  struct Case {
    double w0, w1;
    std::vector<ModulationTone> tones;
    cplx expect;
  };
  std::vector<Case> cases;
  for (double phi : {0.0, 0.9, -2.3}) {
    // Modulated site 1 above site 0: s = -1.
    cases.push_back({kW0, kW0 + kOm, {{1, kOm, 1.8, phi}}, effective_coupling_single(weak, 1.8, phi, -1)});
    // Modulated site 1 below site 0: s = +1.
    cases.push_back({kW0 + kOm, kW0, {{1, kOm, 1.3, phi}}, effective_coupling_single(weak, 1.3, phi, 1)});
    // Both modulated, omega_1 + Omega_M = omega_0.
    cases.push_back({kW0 + kOm, kW0, {{0, kOm, 1.7, 0.4}, {1, kOm, 1.7, phi}},
                     effective_coupling_dual(weak, 1.7, 1.7, 0.4, phi, 1)});
  }
  for (const auto& c : cases) {
    OscillatorNetwork net({Site{0, c.w0}, Site{1, c.w1}}, {{{0, 1}, weak}});
    DriveSchedule sched;
    sched.segments.push_back({1e-3, c.tones, {}, {}});
    const EffectiveModel model = build_effective_model(net, sched);
    CHECK(std::abs(model.hop(1, 0) - c.expect) < 1e-9 * weak);

    const FloquetResult f = monodromy(net, sched, FloquetEngine::Envelope);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(f.envelope);
    // The +|t| mode advances slower: its eigenvalue trails the other by 2|t|T.
    const cplx ratio = es.eigenvalues()(0) / es.eigenvalues()(1);
    const int upper = std::arg(ratio) < 0.0 ? 0 : 1;
    AmplitudeState mode;
    mode.alphas = {es.eigenvectors()(0, upper), es.eigenvectors()(1, upper)};
    const AmplitudeState beta = model.to_frame(mode);
    const double measured = std::arg(beta.alphas[1] / beta.alphas[0]);
    CHECK(std::fabs(std::remainder(measured - std::arg(c.expect), kTwoPi)) < 1e-3);
  }
}
