#include "catch_amalgamated.hpp"

#include <cmath>
#include <functional>

#include "pathweave/netgraph.hpp"
#include "pathweave/topology_io.hpp"

using namespace pathweave;

namespace {

// Full route enumeration: every classical slot sequence from the source to a
// retained slot, composing the segment maps in travel order.
double brute_force_best(const NetworkTopology& t) {
  const int nstages = static_cast<int>(t.stages.size());
  double best = -1.0;
  std::function<void(int, int, const Ptm&)> go = [&](int l, int slot, const Ptm& m) {
    const Ptm cur = ptm_multiply(ptm(build_channel(t.stages[static_cast<size_t>(l)]
                                                           [static_cast<size_t>(slot)])),
                                 m);
    if (l == nstages - 1) {
      for (int s : t.bob_retained)
        if (s == slot) best = std::max(best, ptm_cj_fidelity(cur));
      return;
    }
    for (const BoundaryNode& n : t.boundaries[static_cast<size_t>(l)]) {
      switch (n.kind) {
        case NodeKind::transit:
          if (n.in[0] == slot) go(l + 1, n.out[0], cur);
          break;
        case NodeKind::divide:
          if (n.in[0] == slot) {
            go(l + 1, n.out[0], cur);
            go(l + 1, n.out[1], cur);
          }
          break;
        case NodeKind::recombine:
          for (int a = 0; a < 2; ++a)
            if (n.in[a] == slot)
              for (int p = 0; p < 2; ++p)
                if (!n.discard[p]) go(l + 1, n.out[p], cur);
          break;
      }
    }
  };
  go(0, 0, ptm_identity());
  return best;
}

double fidelity_along(const NetworkTopology& t, const std::vector<int>& slots) {
  Ptm m = ptm_identity();
  for (size_t l = 0; l < slots.size(); ++l)
    m = ptm_multiply(ptm(build_channel(t.stages[l][static_cast<size_t>(slots[l])])), m);
  return ptm_cj_fidelity(m);
}

bool has_code(const std::vector<Finding>& fs, const std::string& code) {
  for (const Finding& f : fs)
    if (f.code == code) return true;
  return false;
}

// Width-2 sandwich: divide, one noisy stage per slot, recombine keeping both.
NetworkTopology two_link_topology(const SegmentSpec& a, const SegmentSpec& b) {
  NetworkTopology t;
  t.stages = {{SegmentSpec{}}, {a, b}, {SegmentSpec{}, SegmentSpec{}}};
  t.boundaries = {{BoundaryNode::divide(0, 0, 1)},
                  {BoundaryNode::recombine({0, 1}, {0, 1})}};
  t.bob_retained = {0, 1};
  return t;
}

}  // namespace

TEST_CASE("width-2 network reproduces the two-node protocol", "[netgraph]") {
  const SegmentSpec sa = SegmentSpec::noisy(NoiseKind::dephasing, 0.1, VacuumSpec::scalar(0.9));
  const SegmentSpec sb = SegmentSpec::noisy(NoiseKind::amplitude_damping, 0.2);

  const double theta1 = 0.9, theta2 = -1.3;
  NetworkSetup setup;
  setup.topology = two_link_topology(sa, sb);
  // boundary nodes use full-angle factors; the two-node combs are half-angle
  for (Variant variant : {Variant::deterministic, Variant::probabilistic}) {
    const NetworkEvaluation net =
        evaluate_network(setup, {-0.5 * theta1, -0.5 * theta2}, ParamScheme::minimal, variant);

    TwoNodeSetup tn;
    tn.channels = {build_channel(sa), build_channel(sb)};
    const TwoNodeEvaluation ev = evaluate_two_node(
        tn, PathUnitarySpec::minimal(2, {theta1}), PathUnitarySpec::minimal(2, {theta2}));

    CHECK(net.f0 == Catch::Approx(ev.f0).margin(1e-12));
    if (variant == Variant::deterministic) {
      CHECK(net.report.fidelity == Catch::Approx(ev.det_fidelity).margin(1e-12));
      CHECK(net.report.p_succ == Catch::Approx(ev.det_p_succ).margin(1e-12));
      CHECK(net.ratio.value == Catch::Approx(ev.det_ratio.value).margin(1e-10));
    } else {
      CHECK(net.report.fidelity == Catch::Approx(ev.prob_fidelity).margin(1e-12));
      CHECK(net.report.p_succ == Catch::Approx(ev.prob_p_succ).margin(1e-12));
      CHECK(net.report.chosen == ev.prob_outcome);
    }
  }
}

TEST_CASE("best single path matches exhaustive route search", "[netgraph]") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const NetworkTopology t = random_layered_topology(seed, 6 + static_cast<int>(seed % 4), 4);
    const BestPath dp = best_single_path(t);
    INFO("seed " << seed);
    CHECK(dp.fidelity == Catch::Approx(brute_force_best(t)).margin(1e-12));
    // the reported route really achieves the reported fidelity
    REQUIRE(dp.slots.size() == t.stages.size());
    CHECK(fidelity_along(t, dp.slots) == Catch::Approx(dp.fidelity).margin(1e-12));
  }
}

TEST_CASE("route search without the Pareto shortcut", "[netgraph]") {
  // dephasing beyond p0 = 1/2 leaves the diagonal-positive family, forcing
  // the enumeration fallback
  NetworkTopology t = two_link_topology(
      SegmentSpec::noisy(NoiseKind::dephasing, 0.8, VacuumSpec::scalar(1.0)),
      SegmentSpec::noisy(NoiseKind::amplitude_damping, 0.3));
  const BestPath dp = best_single_path(t);
  CHECK(dp.fidelity == Catch::Approx(brute_force_best(t)).margin(1e-12));
}

TEST_CASE("topology JSON round trip", "[netgraph]") {
  NetworkTopology t;
  t.stages = {{SegmentSpec{}},
              {SegmentSpec::noisy(NoiseKind::dephasing, 0.1),
               SegmentSpec::noisy(NoiseKind::depolarizing, 0.2, VacuumSpec::scalar(0.8))},
              {SegmentSpec::noisy(NoiseKind::amplitude_damping, 0.3), SegmentSpec{}}};
  t.boundaries = {{BoundaryNode::divide(0, 0, 1)},
                  {BoundaryNode::transit(0, 0),
                   BoundaryNode::divide(1, 1, 0)}};  // deliberately shuffled outs
  t.boundaries[1] = {BoundaryNode::recombine({0, 1}, {1, -1}, {false, true}),
                     BoundaryNode::transit(0, 0)};
  t.boundaries[1] = {BoundaryNode::recombine({0, 1}, {0, 1})};
  t.bob_retained = {0, 1};
  REQUIRE(validate_topology(t).empty());

  const json j = topology_to_json(t);
  const NetworkTopology back = topology_from_json(j);
  CHECK(back == t);

  // discarding recombiners and channel lists survive the trip too
  NetworkTopology t2 = t;
  t2.boundaries[1] = {BoundaryNode::recombine({0, 1}, {0, -1}, {false, true})};
  t2.stages[2] = {SegmentSpec{}};
  t2.bob_retained = {0};
  REQUIRE(validate_topology(t2).empty());
  CHECK(topology_from_json(topology_to_json(t2)) == t2);

  const std::vector<SegmentSpec> chs = {SegmentSpec{},
                                        SegmentSpec::noisy(NoiseKind::dephasing, 0.25,
                                                           VacuumSpec::scalar(0.5))};
  CHECK(channels_from_json(channels_to_json(chs)) == chs);
}

TEST_CASE("strict JSON grammar", "[netgraph]") {
  json j = topology_to_json(two_link_topology(
      SegmentSpec::noisy(NoiseKind::dephasing, 0.1), SegmentSpec{}));
  j["extra"] = 1;
  CHECK_THROWS_AS(topology_from_json(j), std::invalid_argument);
  j.erase("extra");
  j["schema"] = 2;
  CHECK_THROWS_AS(topology_from_json(j), std::invalid_argument);
  j["schema"] = 1;
  j["stages"][1][0]["kind"] = "thermal";
  CHECK_THROWS_AS(topology_from_json(j), std::invalid_argument);
  j["stages"][1][0] = "perfect";
  CHECK_THROWS_AS(topology_from_json(j), std::invalid_argument);
  j["stages"][1][0] = "ideal";
  j["boundaries"][0][0]["kind"] = "merge";
  CHECK_THROWS_AS(topology_from_json(j), std::invalid_argument);

  // explicit amplitude vacua have no file form
  CHECK_THROWS_AS(vacuum_to_json(VacuumSpec::explicit_amps({Cx(1), Cx(0)})),
                  std::invalid_argument);
  CHECK_THROWS_AS(channels_from_json(json{{"schema", 1}, {"channels", json::array()}}),
                  std::invalid_argument);
}

TEST_CASE("validation reports located findings", "[netgraph]") {
  CHECK(has_code(validate_topology(NetworkTopology{}), "empty"));

  NetworkTopology t = two_link_topology(SegmentSpec::noisy(NoiseKind::dephasing, 0.1),
                                        SegmentSpec{});
  REQUIRE(validate_topology(t).empty());

  NetworkTopology bad = t;
  bad.stages[0] = {SegmentSpec{}, SegmentSpec{}};
  CHECK(has_code(validate_topology(bad), "source-width"));

  bad = t;
  bad.stages[1][0].p0 = 1.5;
  CHECK(has_code(validate_topology(bad), "p0-range"));

  bad = t;
  bad.stages[1][0].p0 = 0.6;  // micro dephasing domain ends at 1/2
  CHECK(has_code(validate_topology(bad), "micro-domain"));

  bad = t;
  bad.stages[1][0].vacuum = VacuumSpec::scalar(1.2);
  CHECK(has_code(validate_topology(bad), "alpha0-range"));

  bad = t;
  bad.boundaries.pop_back();
  CHECK(has_code(validate_topology(bad), "boundary-count"));

  bad = t;
  bad.boundaries[1] = {BoundaryNode::recombine({0, 3}, {0, 1})};
  CHECK(has_code(validate_topology(bad), "in-range"));

  bad = t;
  bad.boundaries[1] = {BoundaryNode::recombine({0, 0}, {0, 1})};
  CHECK(has_code(validate_topology(bad), "in-dup"));

  bad = t;
  bad.boundaries[0][0].discard = {true, false};
  CHECK(has_code(validate_topology(bad), "discard-kind"));

  bad = t;
  bad.boundaries[1] = {BoundaryNode::recombine({0, 1}, {0, 5}, {false, true})};
  CHECK(has_code(validate_topology(bad), "discard-out"));

  bad = t;
  bad.boundaries[0] = {BoundaryNode::transit(0, 0), BoundaryNode::divide(0, 0, 1)};
  CHECK(has_code(validate_topology(bad), "in-coverage"));
  CHECK(has_code(validate_topology(bad), "out-coverage"));

  bad = t;
  bad.bob_retained = {};
  CHECK(has_code(validate_topology(bad), "retained-empty"));
  bad.bob_retained = {0, 7};
  CHECK(has_code(validate_topology(bad), "retained-range"));
  bad.bob_retained = {1, 0};
  CHECK(has_code(validate_topology(bad), "retained-order"));

  CHECK_THROWS_AS(require_valid(bad), std::invalid_argument);
}

TEST_CASE("parameter schemes agree where they overlap", "[netgraph]") {
  NetworkSetup setup;
  setup.topology = random_layered_topology(3, 7, 4);
  const int n = parameterized_node_count(setup.topology);
  REQUIRE(n > 0);
  std::vector<double> x(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) x[static_cast<size_t>(k)] = 0.1 * (k + 1);

  const NetworkEvaluation a = evaluate_network(setup, x, ParamScheme::minimal,
                                               Variant::deterministic);
  const NetworkEvaluation b = evaluate_network(setup, embed_minimal_params(x),
                                               ParamScheme::full, Variant::deterministic);
  CHECK(a.report.fidelity == Catch::Approx(b.report.fidelity).margin(1e-13));
  CHECK(a.report.p_succ == Catch::Approx(b.report.p_succ).margin(1e-13));

  CHECK_THROWS_AS(evaluate_network(setup, {0.1}, ParamScheme::minimal, Variant::deterministic),
                  std::invalid_argument);
}

TEST_CASE("straight line degenerates to the composed channel", "[netgraph]") {
  NetworkTopology t;
  t.stages = {{SegmentSpec{}},
              {SegmentSpec::noisy(NoiseKind::dephasing, 0.1)},
              {SegmentSpec::noisy(NoiseKind::dephasing, 0.2)}};
  t.boundaries = {{BoundaryNode::transit(0, 0)}, {BoundaryNode::transit(0, 0)}};
  t.bob_retained = {0};
  NetworkSetup setup;
  setup.topology = t;

  CHECK(param_count(t, ParamScheme::minimal) == 0);
  vqo::OptimizerConfig cfg;
  const NetworkOptimum opt = optimize_network(setup, ParamScheme::minimal,
                                              Variant::deterministic, cfg);
  // composed dephasing: p = 0.1 + 0.2 - 2 * 0.1 * 0.2 = 0.26
  CHECK(opt.eval.f0 == Catch::Approx(0.74).margin(1e-12));
  CHECK(opt.eval.report.fidelity == Catch::Approx(0.74).margin(1e-12));
  CHECK(opt.eval.ratio.value == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("measurement requires weight on a retained slot", "[netgraph]") {
  NetworkTopology t;
  t.stages = {{SegmentSpec{}}, {SegmentSpec{}, SegmentSpec{}}};
  t.boundaries = {{BoundaryNode::divide(0, 0, 1)}};
  t.bob_retained = {1};  // vacuum output only
  NetworkSetup setup;
  setup.topology = t;
  CHECK_THROWS_AS(evaluate_network(setup, {0.0}, ParamScheme::minimal, Variant::deterministic),
                  std::runtime_error);
}

TEST_CASE("weak-noise diagnostic", "[netgraph]") {
  const NetworkTopology t = two_link_topology(
      SegmentSpec::noisy(NoiseKind::dephasing, 0.1),
      SegmentSpec::noisy(NoiseKind::depolarizing, 0.2));
  const WeakNoiseDiagnostic d = weak_noise_infidelity_product(t, {0, 1, 0});
  CHECK(d.infidelity_product == Catch::Approx(0.2).margin(1e-12));  // ideal, depol, ideal
  CHECK(d.heuristic_only);
  CHECK_THROWS_AS(weak_noise_infidelity_product(t, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(weak_noise_infidelity_product(t, {0, 5, 0}), std::invalid_argument);
}

TEST_CASE("seeded generator draws valid, reproducible layered networks",
          "[netgraph][invariant]") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const NetworkTopology t = random_layered_topology(seed);
    INFO("seed " << seed);
    CHECK(validate_topology(t).empty());
    CHECK(t.stages.size() == 12);
    // every noisy stage sits on a parallel section
    for (size_t l = 1; l < t.stages.size(); ++l) CHECK(t.stages[l].size() >= 2);
    for (const auto& stage : t.stages)
      for (const SegmentSpec& s : stage)
        if (!s.ideal) {
          CHECK(s.p0 >= 0.0);
          CHECK(cj_fidelity(build_channel(s)) >= 0.99 - 1e-12);
        }
    CHECK(random_layered_topology(seed) == t);
  }
  CHECK_THROWS_AS(random_layered_topology(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_layered_topology(0, 12, 1), std::invalid_argument);
}

TEST_CASE("evolution bookkeeping across stages", "[netgraph][invariant]") {
  for (std::uint64_t seed : {0ull, 5ull, 9ull}) {
    NetworkSetup setup;
    setup.topology = random_layered_topology(seed, 9, 4);
    const int dim = param_count(setup.topology, ParamScheme::minimal);
    vqo::Rng rng(seed + 1);
    std::vector<double> x(static_cast<size_t>(dim));
    for (double& v : x) v = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

    const EvolveResult ev = evolve(setup.topology, x, ParamScheme::minimal, {}, true);
    REQUIRE(ev.snapshots.size() == 2 * setup.topology.stages.size());
    double prev_trace = 1.0;
    for (size_t k = 0; k < ev.snapshots.size(); k += 2) {
      const Snapshot& pre = ev.snapshots[k];
      const Snapshot& post = ev.snapshots[k + 1];
      CHECK(pre.stage == post.stage);
      // transmission preserves weight; only discards remove it
      CHECK(post.trace == Catch::Approx(pre.trace).margin(1e-12));
      CHECK(pre.trace <= prev_trace + 1e-12);
      prev_trace = post.trace;
      // relative entropy of coherence obeys its dimension bound
      const double dl = static_cast<double>(
          setup.topology.stages[static_cast<size_t>(pre.stage)].size());
      for (const Snapshot* s : {&pre, &post}) {
        CHECK(s->coherence >= -1e-10);
        CHECK(s->coherence <= std::log(dl) + 1e-10);
        CHECK(s->purity <= 1.0 + 1e-12);
        CHECK(s->purity >= 1.0 / dl - 1e-12);
      }
    }

    // identity-proportional vacuum operators shrink every path off-diagonal,
    // so noisy stages cannot raise the path purity
    NetworkTopology uni = setup.topology;
    for (auto& stage : uni.stages)
      for (SegmentSpec& s : stage)
        if (!s.ideal) s = SegmentSpec::noisy(NoiseKind::dephasing, s.p0);
    const EvolveResult evu = evolve(uni, x, ParamScheme::minimal, {}, true);
    for (size_t k = 0; k < evu.snapshots.size(); k += 2)
      CHECK(evu.snapshots[k + 1].purity <= evu.snapshots[k].purity + 1e-10);
  }
}
