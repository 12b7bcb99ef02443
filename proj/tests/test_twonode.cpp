#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "pathweave/oracle.hpp"
#include "pathweave/twonode.hpp"

using namespace pathweave;

namespace {

oracle::Kind oracle_kind(NoiseKind k) {
  switch (k) {
    case NoiseKind::dephasing: return oracle::Kind::dephasing;
    case NoiseKind::depolarizing: return oracle::Kind::depolarizing;
    case NoiseKind::amplitude_damping: return oracle::Kind::amplitude_damping;
  }
  throw std::logic_error("kind");
}

TwoNodeEvaluation balanced_eval(const TwoNodeSetup& setup) {
  const int d = static_cast<int>(setup.channels.size());
  const auto [u1, u2] = unpack_two_node_params(d, balanced_two_node_start(d));
  return evaluate_two_node(setup, u1, u2);
}

CMat random_two_qubit_density(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMat a(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = Cx(u(gen), u(gen));
  CMat rho = a * dagger(a);
  return Cx(1.0 / trace(rho).real()) * rho;
}

}  // namespace

TEST_CASE("balanced combs reproduce the identical-channel closed forms", "[twonode]") {
  for (NoiseKind k : {NoiseKind::dephasing, NoiseKind::depolarizing,
                      NoiseKind::amplitude_damping})
    for (int d : {2, 3, 4})
      for (double f0 : {0.8, 0.9})
        for (double a0 : {0.7, 1.0}) {
          const oracle::Kind ok = oracle_kind(k);
          TwoNodeSetup s;
          s.channels.assign(
              static_cast<size_t>(d),
              make_channel(k, oracle::p0_from_f0(ok, f0), VacuumSpec::scalar(a0)));
          const TwoNodeEvaluation ev = balanced_eval(s);

          const oracle::Result det = oracle::det_identical({ok, d, f0, a0, 0.0});
          const oracle::Result prob = oracle::prob_identical({ok, d, f0, a0, 0.0});
          INFO(noise_kind_name(k) << " d=" << d << " f0=" << f0 << " a0=" << a0);
          CHECK(ev.det_fidelity == Catch::Approx(det.f).margin(1e-9));
          CHECK(ev.det_ratio.value == Catch::Approx(det.r).margin(1e-9));
          CHECK(ev.det_p_succ == Catch::Approx(1.0).margin(1e-12));
          CHECK(ev.prob_fidelity == Catch::Approx(prob.f).margin(1e-9));
          CHECK(ev.prob_p_succ == Catch::Approx(prob.p_succ).margin(1e-9));
          CHECK(ev.prob_ratio.value == Catch::Approx(prob.r).margin(1e-9));
        }
}

TEST_CASE("mixed dephasing + depolarizing pair scores 3/2 at unit vacuum amplitude",
          "[twonode]") {
  for (double f0 : {0.9, 0.99}) {
    TwoNodeSetup s;
    s.channels = {make_channel(NoiseKind::dephasing, 1.0 - f0, VacuumSpec::scalar(1.0)),
                  make_channel(NoiseKind::depolarizing, 1.0 - f0, VacuumSpec::scalar(1.0))};
    const TwoNodeEvaluation ev = balanced_eval(s);
    CHECK(ev.det_fidelity == Catch::Approx(f0 + (1.0 - f0) / 3.0).margin(1e-12));
    CHECK(ev.det_ratio.value == Catch::Approx(1.5).margin(1e-9));
  }
}

TEST_CASE("microscopic vacuum, two identical dephasing links", "[twonode]") {
  // vio = (1 - 2 p0)^{1/4} I makes the effective amplitude^2 sqrt(1-2p0)/(1-p0),
  // and the balanced deterministic ratio lands exactly on 1 + sqrt(1 - 2 p0).
  TwoNodeSetup s;
  s.channels = {make_channel(NoiseKind::dephasing, 0.1),
                make_channel(NoiseKind::dephasing, 0.1)};
  const TwoNodeEvaluation ev = balanced_eval(s);
  CHECK(ev.det_ratio.value == Catch::Approx(1.0 + std::sqrt(0.8)).margin(1e-9));
  CHECK(ev.prob_outcome == 1);
}

TEST_CASE("transmission rule on a single grid", "[twonode]") {
  const KrausChannel a = make_channel(NoiseKind::dephasing, 0.1, VacuumSpec::scalar(0.8));
  const KrausChannel b = make_channel(NoiseKind::amplitude_damping, 0.2);

  BlockState st = prepare_input(2);
  apply_path_unitary(st, PathUnitarySpec::minimal(2, equal_superposition_params(2)));
  const std::vector<CMat> before = st.blocks;
  transmit(st, {a, b});

  const CMat i2 = identity(2);
  // diagonal blocks: full Kraus action of that slot's channel
  CMat want00(4, 4);
  for (const CMat& k : a.kraus) {
    const CMat k4 = kron(i2, k);
    want00 = want00 + k4 * before[0] * dagger(k4);
  }
  CHECK(max_abs_diff(st.blocks[0], want00) < 1e-12);

  // cross block: vacuum-interference operators on both sides
  const CMat f0 = kron(i2, a.vio), f1 = kron(i2, b.vio);
  CHECK(max_abs_diff(st.blocks[1], f0 * before[1] * dagger(f1)) < 1e-12);

  // channel count must match the path dimension
  CHECK_THROWS_AS(transmit(st, {a}), std::invalid_argument);
}

TEST_CASE("path measurement probabilities", "[twonode]") {
  TwoNodeSetup s;
  s.channels.assign(3, make_channel(NoiseKind::depolarizing, 0.1, VacuumSpec::scalar(1.0)));
  const TwoNodeEvaluation ev = balanced_eval(s);

  // diagonal blocks are trace preserving, so outcome probabilities sum to 1
  double total = 0.0;
  for (double p : ev.probs) total += p;
  CHECK(total == Catch::Approx(1.0).margin(1e-12));

  // the balanced recombiner concentrates weight on the last slot
  CHECK(ev.prob_outcome == 2);
  CHECK(ev.probs[2] > ev.probs[0]);
  CHECK(ev.probs[2] > ev.probs[1]);
  CHECK(ev.probs[2] == Catch::Approx(14.0 / 15.0).margin(1e-12));
}

TEST_CASE("analytic correction maximizes the Bell fidelity", "[twonode]") {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 3; ++trial) {
    const CMat rho = random_two_qubit_density(gen);
    const Correction c = best_correction(rho);

    // consistency: the reported fidelity is achieved by the reported unitary
    CHECK(max_abs_diff(dagger(c.v) * c.v, identity(2)) < 1e-10);
    CHECK(corrected_fidelity(rho, c.v) == Catch::Approx(c.fidelity).margin(1e-10));

    // never below the uncorrected fidelity
    CHECK(c.fidelity >= corrected_fidelity(rho, identity(2)) - 1e-12);

    // beats a dense Euler-angle grid
    const double pi = 3.14159265358979323846;
    double grid_best = 0.0;
    for (int ib = 0; ib < 30; ++ib)
      for (int ig = 0; ig < 30; ++ig)
        for (int id = 0; id < 30; ++id) {
          const double beta = pi * ib / 29.0;
          const double gam = 2.0 * pi * ig / 30.0;
          const double del = 2.0 * pi * id / 30.0;
          const double cb = std::cos(0.5 * beta), sb = std::sin(0.5 * beta);
          CMat v(2, 2);
          v(0, 0) = cb;
          v(0, 1) = -sb * std::polar(1.0, del);
          v(1, 0) = sb * std::polar(1.0, gam);
          v(1, 1) = cb * std::polar(1.0, gam + del);
          grid_best = std::max(grid_best, corrected_fidelity(rho, v));
        }
    CHECK(c.fidelity >= grid_best - 1e-9);

    // the Euler parameters rebuild a unitary with the same fidelity
    const double cb = std::cos(0.5 * c.beta), sb = std::sin(0.5 * c.beta);
    CMat w(2, 2);
    w(0, 0) = cb;
    w(0, 1) = -sb * std::polar(1.0, c.delta);
    w(1, 0) = sb * std::polar(1.0, c.gamma);
    w(1, 1) = cb * std::polar(1.0, c.gamma + c.delta);
    CHECK(corrected_fidelity(rho, w) == Catch::Approx(c.fidelity).margin(1e-9));
  }
}

TEST_CASE("variant scoring", "[twonode]") {
  MeasureReport rep;
  rep.probs = {0.3, 0.7};
  OutcomeReport o0, o1;
  o0.index = 0;
  o0.prob = 0.3;
  o0.fidelity = 0.6;
  o1.index = 1;
  o1.prob = 0.7;
  o1.fidelity = 0.9;
  rep.outcomes = {o0, o1};

  const VariantScores det = det_scores(rep);
  CHECK(det.fidelity == Catch::Approx(0.3 * 0.6 + 0.7 * 0.9).margin(1e-15));
  CHECK(det.p_succ == Catch::Approx(1.0).margin(1e-15));

  int which = -1;
  const VariantScores prob = prob_scores(rep, &which);
  CHECK(which == 1);
  CHECK(prob.fidelity == Catch::Approx(0.9).margin(1e-15));
  CHECK(prob.p_succ == Catch::Approx(0.7).margin(1e-15));

  // ties resolve to the lowest index
  rep.outcomes[0].prob = rep.outcomes[1].prob = 0.5;
  prob_scores(rep, &which);
  CHECK(which == 0);

  CHECK(protocol_cost(0.9, 0.8, 0.01) ==
        Catch::Approx(0.01 + 0.01 * 0.04).margin(1e-15));

  const Ratio sat = infidelity_ratio(0.9, 1.0);
  CHECK(sat.saturated);
  CHECK(std::isinf(sat.value));
  const Ratio reg = infidelity_ratio(0.9, 0.95);
  CHECK_FALSE(reg.saturated);
  CHECK(reg.value == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("parameter packing", "[twonode]") {
  CHECK(two_node_param_count(2) == 2);
  CHECK(two_node_param_count(3) == 5);
  CHECK(two_node_param_count(4) == 9);

  CHECK_THROWS_AS(unpack_two_node_params(3, {0.1, 0.2}), std::invalid_argument);

  // the unpacked balanced start realizes the equal split on the sender comb
  for (int d : {2, 3, 4}) {
    const auto [u1, u2] = unpack_two_node_params(d, balanced_two_node_start(d));
    const CMat m1 = build_unitary(u1);
    for (int i = 0; i < d; ++i)
      CHECK(std::abs(m1(i, 0) - Cx(1.0 / std::sqrt(static_cast<double>(d)))) < 1e-12);
    // and the receiver comb undoes it onto slot d - 1
    CMat v(d, 1);
    for (int i = 0; i < d; ++i) v(i, 0) = 1.0 / std::sqrt(static_cast<double>(d));
    const CMat w = build_unitary(u2) * v;
    CHECK(std::abs(std::abs(w(d - 1, 0)) - 1.0) < 1e-12);
  }
}

TEST_CASE("single-path setup degenerates to the bare channel", "[twonode]") {
  TwoNodeSetup s;
  s.channels = {make_channel(NoiseKind::dephasing, 0.1, VacuumSpec::scalar(1.0))};
  vqo::OptimizerConfig cfg;
  const TwoNodeOptimum opt = optimize_two_node(s, Variant::deterministic, cfg);
  CHECK(opt.eval.det_fidelity == Catch::Approx(0.9).margin(1e-12));
  CHECK(opt.eval.det_ratio.value == Catch::Approx(1.0).margin(1e-12));
  CHECK(opt.eval.prob_p_succ == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("evaluation state is physical", "[twonode][invariant]") {
  std::mt19937_64 gen(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 2 + static_cast<int>(gen() % 3);
    TwoNodeSetup s;
    for (int i = 0; i < d; ++i) {
      const NoiseKind k = static_cast<NoiseKind>(gen() % 3);
      const double p0 = 0.3 * u(gen);
      s.channels.push_back(make_channel(k, p0, VacuumSpec::scalar(u(gen))));
    }
    std::vector<double> x(static_cast<size_t>(two_node_param_count(d)));
    for (double& v : x) v = 6.0 * u(gen) - 3.0;
    const auto [u1, u2] = unpack_two_node_params(d, x);
    const TwoNodeEvaluation ev = evaluate_two_node(s, u1, u2);

    double total = 0.0;
    for (double p : ev.probs) {
      CHECK(p > -1e-12);
      total += p;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-10));
    for (const OutcomeReport& o : ev.outcomes) {
      CHECK(o.fidelity >= -1e-12);
      CHECK(o.fidelity <= 1.0 + 1e-10);
    }
    CHECK(ev.det_fidelity <= 1.0 + 1e-10);
    CHECK(ev.prob_fidelity <= 1.0 + 1e-10);
    CHECK(ev.det_p_succ == Catch::Approx(1.0).margin(1e-10));
  }
}
