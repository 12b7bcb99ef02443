#pragma once

// Two-node protocol: half of a Bell pair rides a coherent superposition of d
// noisy links. The joint state is kept as a d x d grid of 4x4 blocks over the
// qubit pair (Alice (x) transmitted), basis |ab> at index 2a+b. The sender
// comb spreads the path amplitude, each link's channel acts on its slot, the
// receiver comb interferes the paths, and the path measurement picks an
// outcome; a per-outcome local unitary on the transmitted qubit is then
// chosen analytically to maximize the Bell fidelity.
//
// Transmission rule per block pair (i, j): the diagonal block evolves under
// the full Kraus action of link i's channel, while cross blocks pick up the
// two links' vacuum-interference operators,
//   B_ii -> sum_s (1 (x) K_s) B_ii (1 (x) K_s)^dag,
//   B_ij -> (1 (x) F_i) B_ij (1 (x) F_j)^dag   (i != j).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pathweave/channels.hpp"
#include "pathweave/pathspace.hpp"
#include "pathweave/qmat.hpp"
#include "pathweave/vqo.hpp"

namespace pathweave {

enum class Variant { deterministic, probabilistic };

struct BlockState {
  int d = 1;
  std::vector<CMat> blocks;  // d*d blocks, each 4x4
};

inline BlockState prepare_input(int d) {
  if (d < 1) throw std::invalid_argument("prepare_input: d >= 1");
  BlockState st;
  st.d = d;
  st.blocks.assign(static_cast<size_t>(d) * d, CMat(4, 4));
  st.blocks[0] = bell_phi_plus();
  return st;
}

inline void apply_path_unitary(BlockState& st, const PathUnitarySpec& spec,
                               const PathNoiseSpec& noise = {}) {
  grid_apply_unitary(st.blocks, st.d, spec, noise);
}

// One channel per path slot, acting on the transmitted qubit factor.
inline void transmit(BlockState& st, const std::vector<KrausChannel>& chs) {
  if (static_cast<int>(chs.size()) != st.d)
    throw std::invalid_argument("transmit: one channel per path slot required");
  const CMat i2 = identity(2);
  std::vector<CMat> vio4(chs.size());
  for (size_t i = 0; i < chs.size(); ++i) vio4[i] = kron(i2, chs[i].vio);
  for (int i = 0; i < st.d; ++i)
    for (int j = 0; j < st.d; ++j) {
      CMat& b = st.blocks[i * st.d + j];
      if (i == j) {
        CMat out(4, 4);
        for (const CMat& k : chs[static_cast<size_t>(i)].kraus) {
          const CMat k4 = kron(i2, k);
          out = out + k4 * b * dagger(k4);
        }
        b = std::move(out);
      } else {
        b = vio4[static_cast<size_t>(i)] * b * dagger(vio4[static_cast<size_t>(j)]);
      }
    }
}

inline std::vector<double> measure_path_probs(const BlockState& st) {
  std::vector<double> p(static_cast<size_t>(st.d));
  for (int j = 0; j < st.d; ++j) p[j] = trace(st.blocks[j * st.d + j]).real();
  return p;
}

inline double total_trace(const BlockState& st) {
  double t = 0.0;
  for (double p : measure_path_probs(st)) t += p;
  return t;
}

// ---- analytic correction ----------------------------------------------------

struct Correction {
  CMat v = identity(2);  // unitary on the transmitted qubit
  double fidelity = 0.0;
  double beta = 0.0, gamma = 0.0, delta = 0.0;  // v ~ [[c, -s e^{i delta}],
                                                //      [s e^{i gamma}, c e^{i(gamma+delta)}]]
};

inline double corrected_fidelity(const CMat& rho4, const CMat& v) {
  const CMat op = kron(identity(2), v);
  const CMat phi = bell_phi_plus_vector();
  return (dagger(phi) * op * rho4 * dagger(op) * phi)(0, 0).real();
}

namespace detail {

inline CMat magic_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  const Cx i(0.0, 1.0);
  CMat m(4, 4);
  m(0, 0) = r;          m(3, 0) = r;
  m(0, 1) = i * r;      m(3, 1) = -i * r;
  m(1, 2) = i * r;      m(2, 2) = i * r;
  m(1, 3) = r;          m(2, 3) = -r;
  return m;
}

inline void euler_params(const CMat& v, Correction& c) {
  // strip the global phase using the larger left-column entry
  const bool top = std::abs(v(0, 0)) >= std::abs(v(1, 0));
  const Cx pivot = top ? v(0, 0) : v(1, 0);
  const Cx phase = std::abs(pivot) > 1e-14 ? pivot / std::abs(pivot) : Cx(1.0);
  CMat w = std::conj(phase) * v;
  const double cth = std::abs(w(0, 0)), sth = std::abs(w(1, 0));
  c.beta = 2.0 * std::atan2(sth, cth);
  if (sth > 1e-14 && cth > 1e-14) {
    c.gamma = std::arg(w(1, 0));
    c.delta = std::arg(-w(0, 1));
  } else if (sth <= 1e-14) {
    c.gamma = std::arg(w(1, 1));
    c.delta = 0.0;
  } else {
    c.gamma = top ? std::arg(w(1, 0)) : 0.0;
    c.delta = std::arg(-w(0, 1));
  }
}

}  // namespace detail

// Exact maximizer of <Phi+| (1 (x) V) rho (1 (x) V)^dag |Phi+> over unitary V:
// the optimum equals the largest eigenvalue of the real part of rho in the
// magic basis, and the top eigenvector rebuilds V in closed form.
inline Correction best_correction(const CMat& rho4) {
  static const CMat m = detail::magic_basis();
  const CMat rt = dagger(m) * rho4 * m;
  std::vector<std::vector<double>> re(4, std::vector<double>(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) re[i][j] = 0.5 * (rt(i, j).real() + rt(j, i).real());
  const EighReal e = eigh_real(re);

  CMat r(4, 1);
  for (int i = 0; i < 4; ++i) r(i, 0) = e.vectors[3][i];  // top eigenvector
  const CMat psi = m * r;                                 // optimal entangled state
  CMat v(2, 2);
  const double s2 = std::sqrt(2.0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) v(a, b) = s2 * std::conj(psi(2 * a + b, 0));

  Correction c;
  c.v = std::move(v);
  c.fidelity = e.values[3];
  detail::euler_params(c.v, c);
  return c;
}

// ---- outcome scoring ---------------------------------------------------------

struct OutcomeReport {
  int index = 0;
  double prob = 0.0;
  double fidelity = 0.0;  // corrected fidelity of the normalized outcome state
  Correction correction;
};

struct MeasureReport {
  std::vector<double> probs;
  std::vector<OutcomeReport> outcomes;  // outcomes with non-negligible weight
};

inline constexpr double kProbCutoff = 1e-15;

inline MeasureReport measure_and_correct(const BlockState& st) {
  MeasureReport rep;
  rep.probs = measure_path_probs(st);
  for (int j = 0; j < st.d; ++j) {
    const double p = rep.probs[static_cast<size_t>(j)];
    if (p < kProbCutoff) continue;
    const CMat rho = hermitize(Cx(1.0 / p) * st.blocks[j * st.d + j]);
    OutcomeReport o;
    o.index = j;
    o.prob = p;
    o.correction = best_correction(rho);
    o.fidelity = o.correction.fidelity;
    rep.outcomes.push_back(std::move(o));
  }
  return rep;
}

struct VariantScores {
  double fidelity = 0.0;
  double p_succ = 0.0;
};

// Keep every outcome: fidelity is the probability-weighted average.
inline VariantScores det_scores(const MeasureReport& rep) {
  double num = 0.0, den = 0.0;
  for (const OutcomeReport& o : rep.outcomes) {
    num += o.prob * o.fidelity;
    den += o.prob;
  }
  if (den < kProbCutoff) throw std::runtime_error("det_scores: no outcome has weight");
  return {num / den, den};
}

// Keep only the most likely outcome; ties resolve to the lowest index.
inline VariantScores prob_scores(const MeasureReport& rep, int* which = nullptr) {
  if (rep.outcomes.empty()) throw std::runtime_error("prob_scores: no outcome has weight");
  const OutcomeReport* best = &rep.outcomes.front();
  for (const OutcomeReport& o : rep.outcomes)
    if (o.prob > best->prob) best = &o;
  if (which) *which = best->index;
  return {best->fidelity, best->prob};
}

inline double protocol_cost(double fidelity, double p_succ, double weight) {
  return (1.0 - fidelity) * (1.0 - fidelity) + weight * (1.0 - p_succ) * (1.0 - p_succ);
}

struct Ratio {
  double value = 1.0;
  bool saturated = false;  // fidelity within 1e-15 of 1: ratio reported as +inf
};

inline Ratio infidelity_ratio(double f0, double f) {
  if (f >= 1.0 - 1e-15) return {std::numeric_limits<double>::infinity(), true};
  return {(1.0 - f0) / (1.0 - f), false};
}

// ---- protocol driver ---------------------------------------------------------

struct TwoNodeSetup {
  std::vector<KrausChannel> channels;  // one per path; d = size
  PathNoiseSpec noise;                 // angle jitter on both combs
  double weight = 0.01;                // cost weight on (1 - p_succ)^2
};

struct TwoNodeEvaluation {
  double f0 = 0.0;  // best single-link fidelity, the baseline to beat
  std::vector<double> probs;
  std::vector<OutcomeReport> outcomes;
  double det_fidelity = 0.0, det_p_succ = 0.0, det_cost = 0.0;
  Ratio det_ratio;
  double prob_fidelity = 0.0, prob_p_succ = 0.0, prob_cost = 0.0;
  Ratio prob_ratio;
  int prob_outcome = 0;
};

inline double baseline_fidelity(const std::vector<KrausChannel>& chs) {
  double f0 = 0.0;
  for (const KrausChannel& c : chs) f0 = std::max(f0, cj_fidelity(c));
  return f0;
}

inline TwoNodeEvaluation evaluate_two_node(const TwoNodeSetup& setup, const PathUnitarySpec& uc1,
                                           const PathUnitarySpec& uc2) {
  const int d = static_cast<int>(setup.channels.size());
  if (d < 1) throw std::invalid_argument("evaluate_two_node: at least one channel");
  BlockState st = prepare_input(d);
  apply_path_unitary(st, uc1, setup.noise);
  transmit(st, setup.channels);
  apply_path_unitary(st, uc2, setup.noise);
  const MeasureReport rep = measure_and_correct(st);

  TwoNodeEvaluation ev;
  ev.f0 = baseline_fidelity(setup.channels);
  ev.probs = rep.probs;
  ev.outcomes = rep.outcomes;
  const VariantScores det = det_scores(rep);
  ev.det_fidelity = det.fidelity;
  ev.det_p_succ = det.p_succ;
  ev.det_cost = protocol_cost(det.fidelity, det.p_succ, setup.weight);
  ev.det_ratio = infidelity_ratio(ev.f0, det.fidelity);
  const VariantScores prob = prob_scores(rep, &ev.prob_outcome);
  ev.prob_fidelity = prob.fidelity;
  ev.prob_p_succ = prob.p_succ;
  ev.prob_cost = protocol_cost(prob.fidelity, prob.p_succ, setup.weight);
  ev.prob_ratio = infidelity_ratio(ev.f0, prob.fidelity);
  return ev;
}

// Parameter packing for the search,
// x = [theta_c1 (d-1 chain angles), theta_c2 (readout angles)].
// The preparation comb only contributes its first column (the input sits in
// slot 0), so the minimal chain already spans it. The readout side needs more
// freedom once d > 2: an adjacent chain cannot reach every rotation, and the
// best readout basis for unequal channels generally lies outside it, so
// theta_c2 uses the rotation ladder (d(d-1)/2 angles). Sign flips the ladder
// cannot express commute out to the measured diagonal, where they cancel.
// At d = 2 both sides stay on the single half-angle chain rotation so that
// angle jitter enters with the chain convention.
inline int two_node_param_count(int d) {
  return (d - 1) + (d > 2 ? rotation_ladder_param_count(d) : d - 1);
}

inline std::pair<PathUnitarySpec, PathUnitarySpec> unpack_two_node_params(
    int d, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != two_node_param_count(d))
    throw std::invalid_argument("unpack_two_node_params: wrong parameter count");
  std::vector<double> t1(x.begin(), x.begin() + (d - 1));
  std::vector<double> t2(x.begin() + (d - 1), x.end());
  PathUnitarySpec uc1 = PathUnitarySpec::minimal(d, std::move(t1));
  if (d > 2) return {std::move(uc1), rotation_ladder_spec(d, t2)};
  return {std::move(uc1), PathUnitarySpec::minimal(d, std::move(t2))};
}

// Start point whose combs realize the equal split and the matched balanced
// readout (enhanced outcome on slot d - 1). Ladder angles are full-angle and
// transposed relative to chain angles, hence the -theta/2.
inline std::vector<double> balanced_two_node_start(int d) {
  std::vector<double> x = equal_superposition_params(d);
  const std::vector<double> rec = equal_recombination_params(d);
  if (d <= 2) {
    x.insert(x.end(), rec.begin(), rec.end());
    return x;
  }
  std::vector<double> ladder(static_cast<size_t>(rotation_ladder_param_count(d)), 0.0);
  for (int k = 0; k < d - 1; ++k)
    ladder[ladder.size() - (d - 1) + k] = -0.5 * rec[static_cast<size_t>(k)];
  x.insert(x.end(), ladder.begin(), ladder.end());
  return x;
}

inline vqo::Objective make_cost_function(const TwoNodeSetup& setup, Variant variant) {
  const int d = static_cast<int>(setup.channels.size());
  if (d < 2) throw std::invalid_argument("make_cost_function: needs d >= 2 paths");
  return [setup, variant, d](const std::vector<double>& x) {
    const auto [uc1, uc2] = unpack_two_node_params(d, x);
    const TwoNodeEvaluation ev = evaluate_two_node(setup, uc1, uc2);
    return variant == Variant::deterministic ? ev.det_cost : ev.prob_cost;
  };
}

struct TwoNodeOptimum {
  vqo::MultiStartResult search;
  TwoNodeEvaluation eval;  // at the best parameters found
  std::vector<double> uc1_params, uc2_params;
};

// Multi-start search over both combs. The balanced comb pair (equal split,
// matched recombiner) is always tried as the first start; the remaining
// restarts are random.
inline TwoNodeOptimum optimize_two_node(const TwoNodeSetup& setup, Variant variant,
                                        const vqo::OptimizerConfig& cfg) {
  const int d = static_cast<int>(setup.channels.size());
  TwoNodeOptimum out;
  if (d == 1) {
    const PathUnitarySpec trivial = PathUnitarySpec::minimal(1, {});
    out.eval = evaluate_two_node(setup, trivial, trivial);
    return out;
  }
  out.search = vqo::multi_start(make_cost_function(setup, variant), two_node_param_count(d), cfg,
                                {balanced_two_node_start(d)});
  const std::vector<double>& x = out.search.best.x;
  out.uc1_params.assign(x.begin(), x.begin() + (d - 1));
  out.uc2_params.assign(x.begin() + (d - 1), x.end());
  const auto [uc1, uc2] = unpack_two_node_params(d, x);
  out.eval = evaluate_two_node(setup, uc1, uc2);
  return out;
}

}  // namespace pathweave
