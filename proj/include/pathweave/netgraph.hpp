#pragma once

// Layered networks: stages of parallel noisy segments separated by boundaries
// of routing nodes. A boundary node is one of
//   transit     pass a slot through unchanged,
//   divide      split a slot against a fresh vacuum line (adds one slot),
//   recombine   interfere two slots; either output port may be discarded.
// Stage 0 must have width 1 (the source). Between stages the path grid is
// embedded into width + #divides lines, every node applies its 2x2 on its
// line pair, lines are reindexed onto the next stage's slots, and discarded
// lines are dropped (the only trace loss in the pipeline).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathweave/channels.hpp"
#include "pathweave/pathspace.hpp"
#include "pathweave/qmat.hpp"
#include "pathweave/twonode.hpp"
#include "pathweave/vqo.hpp"

namespace pathweave {

struct SegmentSpec {
  bool ideal = true;
  NoiseKind kind = NoiseKind::dephasing;
  double p0 = 0.0;
  VacuumSpec vacuum;

  static SegmentSpec noisy(NoiseKind k, double p0, VacuumSpec v = {}) {
    SegmentSpec s;
    s.ideal = false;
    s.kind = k;
    s.p0 = p0;
    s.vacuum = std::move(v);
    return s;
  }
};

inline bool operator==(const VacuumSpec& a, const VacuumSpec& b) {
  if (a.mode != b.mode) return false;
  if (a.mode == VacuumSpec::Mode::scalar_alpha0 && a.alpha0 != b.alpha0) return false;
  if (a.mode == VacuumSpec::Mode::explicit_amplitudes && a.amplitudes != b.amplitudes) return false;
  return true;
}

inline bool operator==(const SegmentSpec& a, const SegmentSpec& b) {
  if (a.ideal != b.ideal) return false;
  if (a.ideal) return true;
  return a.kind == b.kind && a.p0 == b.p0 && a.vacuum == b.vacuum;
}

enum class NodeKind { transit, divide, recombine };

struct BoundaryNode {
  NodeKind kind = NodeKind::transit;
  std::array<int, 2> in{0, 0};    // transit/divide read in[0]; recombine both
  std::array<int, 2> out{0, 0};   // discarded recombine ports carry out = -1
  std::array<bool, 2> discard{false, false};

  static BoundaryNode transit(int in, int out) {
    BoundaryNode n;
    n.in = {in, 0};
    n.out = {out, 0};
    return n;
  }
  static BoundaryNode divide(int in, int out_kept, int out_new) {
    BoundaryNode n;
    n.kind = NodeKind::divide;
    n.in = {in, 0};
    n.out = {out_kept, out_new};
    return n;
  }
  static BoundaryNode recombine(std::array<int, 2> ins, std::array<int, 2> outs,
                                std::array<bool, 2> discard = {false, false}) {
    BoundaryNode n;
    n.kind = NodeKind::recombine;
    n.in = ins;
    n.out = outs;
    n.discard = discard;
    return n;
  }
};

inline bool operator==(const BoundaryNode& a, const BoundaryNode& b) {
  return a.kind == b.kind && a.in == b.in && a.out == b.out && a.discard == b.discard;
}

struct NetworkTopology {
  std::vector<std::vector<SegmentSpec>> stages;       // stages[l][slot]
  std::vector<std::vector<BoundaryNode>> boundaries;  // one list per stage gap
  std::vector<int> bob_retained;                      // final-stage slots Bob keeps
};

inline bool operator==(const NetworkTopology& a, const NetworkTopology& b) {
  return a.stages == b.stages && a.boundaries == b.boundaries &&
         a.bob_retained == b.bob_retained;
}

inline int stage_width(const NetworkTopology& t, int l) {
  return static_cast<int>(t.stages[static_cast<size_t>(l)].size());
}

inline KrausChannel build_channel(const SegmentSpec& s) {
  return s.ideal ? ideal_channel() : make_channel(s.kind, s.p0, s.vacuum);
}

// ---- validation --------------------------------------------------------------

struct Finding {
  std::string code;
  int boundary = -1;  // -1 where not applicable
  int stage = -1;
  int slot = -1;
  std::string message;
};

inline std::vector<Finding> validate_topology(const NetworkTopology& t) {
  std::vector<Finding> fs;
  auto add = [&fs](std::string code, int boundary, int stage, int slot, std::string msg) {
    fs.push_back({std::move(code), boundary, stage, slot, std::move(msg)});
  };

  if (t.stages.empty()) {
    add("empty", -1, -1, -1, "topology has no stages");
    return fs;
  }
  if (stage_width(t, 0) != 1)
    add("source-width", -1, 0, -1, "stage 0 must have exactly one slot");
  for (size_t l = 0; l < t.stages.size(); ++l) {
    if (t.stages[l].empty()) add("empty-stage", -1, static_cast<int>(l), -1, "stage has no slots");
    for (size_t s = 0; s < t.stages[l].size(); ++s) {
      const SegmentSpec& seg = t.stages[l][s];
      if (seg.ideal) continue;
      const int li = static_cast<int>(l), si = static_cast<int>(s);
      if (seg.p0 < 0.0 || seg.p0 > 1.0)
        add("p0-range", -1, li, si, "p0 must lie in [0, 1]");
      else if (seg.vacuum.mode == VacuumSpec::Mode::micro) {
        if (seg.kind == NoiseKind::dephasing && seg.p0 > 0.5 + 1e-12)
          add("micro-domain", -1, li, si, "microscopic dephasing model needs p0 <= 1/2");
        if (seg.kind == NoiseKind::depolarizing && seg.p0 > 0.75 + 1e-12)
          add("micro-domain", -1, li, si, "microscopic depolarizing model needs p0 <= 3/4");
      }
      if (seg.vacuum.mode == VacuumSpec::Mode::scalar_alpha0 &&
          std::abs(seg.vacuum.alpha0) > 1.0 + 1e-12)
        add("alpha0-range", -1, li, si, "|alpha0| must not exceed 1");
    }
  }
  if (t.boundaries.size() + 1 != t.stages.size()) {
    add("boundary-count", -1, -1, -1, "need exactly one boundary list per stage gap");
    return fs;  // index math below is unsafe otherwise
  }

  for (size_t l = 0; l < t.boundaries.size(); ++l) {
    const int li = static_cast<int>(l);
    const int w = stage_width(t, li), wn = stage_width(t, li + 1);
    std::vector<int> in_used(static_cast<size_t>(w), 0);
    std::vector<int> out_used(static_cast<size_t>(wn), 0);
    auto use_in = [&](int s, int node) {
      if (s < 0 || s >= w)
        add("in-range", li, -1, node, "input slot out of range");
      else
        ++in_used[static_cast<size_t>(s)];
    };
    auto use_out = [&](int s, int node) {
      if (s < 0 || s >= wn)
        add("out-range", li, -1, node, "output slot out of range");
      else
        ++out_used[static_cast<size_t>(s)];
    };
    for (size_t n = 0; n < t.boundaries[l].size(); ++n) {
      const BoundaryNode& node = t.boundaries[l][n];
      const int ni = static_cast<int>(n);
      switch (node.kind) {
        case NodeKind::transit:
          use_in(node.in[0], ni);
          use_out(node.out[0], ni);
          if (node.discard[0] || node.discard[1])
            add("discard-kind", li, -1, ni, "only recombining nodes may discard");
          break;
        case NodeKind::divide:
          use_in(node.in[0], ni);
          use_out(node.out[0], ni);
          use_out(node.out[1], ni);
          if (node.discard[0] || node.discard[1])
            add("discard-kind", li, -1, ni, "only recombining nodes may discard");
          break;
        case NodeKind::recombine:
          use_in(node.in[0], ni);
          use_in(node.in[1], ni);
          if (node.in[0] == node.in[1]) add("in-dup", li, -1, ni, "recombine inputs must differ");
          for (int p = 0; p < 2; ++p) {
            if (node.discard[p]) {
              if (node.out[p] != -1)
                add("discard-out", li, -1, ni, "discarded port must carry out = -1");
            } else {
              use_out(node.out[p], ni);
            }
          }
          break;
      }
    }
    for (int s = 0; s < w; ++s)
      if (in_used[static_cast<size_t>(s)] != 1)
        add("in-coverage", li, li, s, "each stage slot must feed exactly one node input");
    for (int s = 0; s < wn; ++s)
      if (out_used[static_cast<size_t>(s)] != 1)
        add("out-coverage", li, li + 1, s, "each next-stage slot must receive exactly one output");
  }

  const int wl = stage_width(t, static_cast<int>(t.stages.size()) - 1);
  if (t.bob_retained.empty())
    add("retained-empty", -1, -1, -1, "bob_retained must name at least one slot");
  for (size_t i = 0; i < t.bob_retained.size(); ++i) {
    if (t.bob_retained[i] < 0 || t.bob_retained[i] >= wl)
      add("retained-range", -1, static_cast<int>(t.stages.size()) - 1, t.bob_retained[i],
          "retained slot out of range");
    if (i > 0 && t.bob_retained[i] <= t.bob_retained[i - 1])
      add("retained-order", -1, -1, -1, "bob_retained must be strictly increasing");
  }
  return fs;
}

inline void require_valid(const NetworkTopology& t) {
  const std::vector<Finding> fs = validate_topology(t);
  if (!fs.empty()) throw std::invalid_argument("invalid topology: " + fs.front().message);
}

// ---- parameterization ----------------------------------------------------------

enum class ParamScheme { minimal, full };

struct NodeParams {
  double alpha = 0.0, beta = 0.0, gamma = 0.0, theta = 0.0;
};

// Divide and recombine nodes carry parameters, in boundary order then listed
// node order; minimal exposes theta only, full exposes (alpha, beta, gamma,
// theta) per node.
inline int parameterized_node_count(const NetworkTopology& t) {
  int n = 0;
  for (const std::vector<BoundaryNode>& b : t.boundaries)
    for (const BoundaryNode& node : b)
      if (node.kind != NodeKind::transit) ++n;
  return n;
}

inline int param_count(const NetworkTopology& t, ParamScheme scheme) {
  return parameterized_node_count(t) * (scheme == ParamScheme::minimal ? 1 : 4);
}

inline std::vector<NodeParams> unpack_node_params(const NetworkTopology& t, ParamScheme scheme,
                                                  const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != param_count(t, scheme))
    throw std::invalid_argument("unpack_node_params: wrong parameter count");
  std::vector<NodeParams> ps(static_cast<size_t>(parameterized_node_count(t)));
  for (size_t k = 0; k < ps.size(); ++k) {
    if (scheme == ParamScheme::minimal) {
      ps[k].theta = x[k];
    } else {
      ps[k].alpha = x[4 * k];
      ps[k].beta = x[4 * k + 1];
      ps[k].gamma = x[4 * k + 2];
      ps[k].theta = x[4 * k + 3];
    }
  }
  return ps;
}

// ---- evolution -----------------------------------------------------------------

// Apply boundary l. `params` holds one entry per divide/recombine node of
// this boundary, in listed order.
inline void apply_boundary(BlockState& st, const NetworkTopology& t, int l,
                           const std::vector<NodeParams>& params,
                           const PathNoiseSpec& noise = {}) {
  const std::vector<BoundaryNode>& nodes = t.boundaries[static_cast<size_t>(l)];
  const int w = stage_width(t, l), wn = stage_width(t, l + 1);
  if (st.d != w) throw std::invalid_argument("apply_boundary: state width mismatch");

  int ndiv = 0;
  for (const BoundaryNode& n : nodes)
    if (n.kind == NodeKind::divide) ++ndiv;
  const int dd = w + ndiv;

  // embed current grid; fresh vacuum lines sit past the stage slots
  std::vector<CMat> grid(static_cast<size_t>(dd) * dd, CMat(4, 4));
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < w; ++j) grid[i * dd + j] = st.blocks[i * st.d + j];

  std::vector<int> line_to_next(static_cast<size_t>(dd), -1);
  int next_vac = w;
  size_t pk = 0;
  for (const BoundaryNode& node : nodes) {
    if (node.kind == NodeKind::transit) {
      line_to_next[static_cast<size_t>(node.in[0])] = node.out[0];
      continue;
    }
    if (pk >= params.size()) throw std::invalid_argument("apply_boundary: too few node params");
    const NodeParams& p = params[pk++];
    PathFactor f;
    f.alpha = p.alpha;
    f.beta = p.beta;
    f.gamma = p.gamma;
    f.theta = p.theta;
    if (node.kind == NodeKind::divide) {
      const int vac = next_vac++;
      f.i = node.in[0];
      f.j = vac;
      grid_apply_factor(grid, dd, f, noise);
      line_to_next[static_cast<size_t>(node.in[0])] = node.out[0];
      line_to_next[static_cast<size_t>(vac)] = node.out[1];
    } else {
      f.i = node.in[0];
      f.j = node.in[1];
      grid_apply_factor(grid, dd, f, noise);
      for (int port = 0; port < 2; ++port)
        line_to_next[static_cast<size_t>(node.in[port])] = node.discard[port] ? -1 : node.out[port];
    }
  }
  if (pk != params.size()) throw std::invalid_argument("apply_boundary: too many node params");

  // reindex onto next-stage slots; discarded lines are dropped
  std::vector<CMat> next(static_cast<size_t>(wn) * wn, CMat(4, 4));
  for (int a = 0; a < dd; ++a) {
    const int an = line_to_next[static_cast<size_t>(a)];
    if (an < 0) continue;
    for (int b = 0; b < dd; ++b) {
      const int bn = line_to_next[static_cast<size_t>(b)];
      if (bn < 0) continue;
      next[an * wn + bn] = grid[a * dd + b];
    }
  }
  st.d = wn;
  st.blocks = std::move(next);
}

inline CMat reduced_path_matrix(const BlockState& st) {
  CMat r(st.d, st.d);
  for (int i = 0; i < st.d; ++i)
    for (int j = 0; j < st.d; ++j) r(i, j) = trace(st.blocks[i * st.d + j]);
  return r;
}

// Relative entropy of coherence of the trace-normalized path matrix, nats.
inline double coherence_rel(const BlockState& st) {
  CMat r = reduced_path_matrix(st);
  const double tr = trace(r).real();
  if (tr < 1e-12) throw std::runtime_error("coherence_rel: vanishing path trace");
  r = Cx(1.0 / tr) * r;
  CMat diag(st.d, st.d);
  for (int i = 0; i < st.d; ++i) diag(i, i) = r(i, i);
  return vn_entropy(diag) - vn_entropy(hermitize(r));
}

inline double path_purity(const BlockState& st) {
  CMat r = reduced_path_matrix(st);
  const double tr = trace(r).real();
  if (tr < 1e-12) throw std::runtime_error("path_purity: vanishing path trace");
  return purity(hermitize(Cx(1.0 / tr) * r));
}

struct Snapshot {
  int stage = 0;
  bool post_transmit = false;  // false: state entering the stage's segments
  double trace = 0.0;
  double coherence = 0.0;
  double purity = 0.0;
};

struct EvolveResult {
  BlockState state;
  std::vector<Snapshot> snapshots;
};

inline EvolveResult evolve(const NetworkTopology& t, const std::vector<double>& params,
                           ParamScheme scheme, const PathNoiseSpec& noise = {},
                           bool want_snapshots = false) {
  require_valid(t);
  const std::vector<NodeParams> all = unpack_node_params(t, scheme, params);

  EvolveResult out;
  out.state = prepare_input(1);
  size_t off = 0;
  for (size_t l = 0; l < t.stages.size(); ++l) {
    std::vector<KrausChannel> chs;
    chs.reserve(t.stages[l].size());
    for (const SegmentSpec& s : t.stages[l]) chs.push_back(build_channel(s));

    auto snap = [&](bool post) {
      Snapshot s;
      s.stage = static_cast<int>(l);
      s.post_transmit = post;
      s.trace = total_trace(out.state);
      s.coherence = coherence_rel(out.state);
      s.purity = path_purity(out.state);
      out.snapshots.push_back(s);
    };
    if (want_snapshots) snap(false);
    transmit(out.state, chs);
    if (want_snapshots) snap(true);

    if (l + 1 < t.stages.size()) {
      int k = 0;
      for (const BoundaryNode& n : t.boundaries[l])
        if (n.kind != NodeKind::transit) ++k;
      const std::vector<NodeParams> bp(all.begin() + off, all.begin() + off + k);
      off += static_cast<size_t>(k);
      apply_boundary(out.state, t, static_cast<int>(l), bp, noise);
    }
  }
  return out;
}

// ---- measurement at Bob ---------------------------------------------------------

struct NetOutcome {
  int slot = 0;
  double prob = 0.0;
  double fidelity = 0.0;
  Correction correction;
  bool retained = false;
};

struct NetReport {
  std::vector<double> probs;  // every final slot
  std::vector<NetOutcome> outcomes;
  double fidelity = 0.0;
  double p_succ = 0.0;
  int chosen = -1;  // probabilistic variant's slot
};

inline NetReport measure_at_bob(const BlockState& st, const NetworkTopology& t, Variant variant) {
  NetReport rep;
  rep.probs = measure_path_probs(st);
  std::vector<bool> retained(static_cast<size_t>(st.d), false);
  for (int s : t.bob_retained) retained[static_cast<size_t>(s)] = true;

  for (int j = 0; j < st.d; ++j) {
    const double p = rep.probs[static_cast<size_t>(j)];
    if (p < kProbCutoff) continue;
    NetOutcome o;
    o.slot = j;
    o.prob = p;
    o.retained = retained[static_cast<size_t>(j)];
    if (o.retained) {
      const CMat rho = hermitize(Cx(1.0 / p) * st.blocks[j * st.d + j]);
      o.correction = best_correction(rho);
      o.fidelity = o.correction.fidelity;
    }
    rep.outcomes.push_back(std::move(o));
  }

  double num = 0.0, den = 0.0;
  const NetOutcome* best = nullptr;
  for (const NetOutcome& o : rep.outcomes) {
    if (!o.retained) continue;
    num += o.prob * o.fidelity;
    den += o.prob;
    if (!best || o.prob > best->prob) best = &o;
  }
  if (den < 1e-12 || !best)
    throw std::runtime_error("measure_at_bob: no retained outcome has weight");
  if (variant == Variant::deterministic) {
    rep.fidelity = num / den;
    rep.p_succ = den;
  } else {
    rep.fidelity = best->fidelity;
    rep.p_succ = best->prob;
    rep.chosen = best->slot;
  }
  return rep;
}

// ---- best single path -------------------------------------------------------------

struct BestPath {
  double fidelity = 0.0;
  std::vector<int> slots;  // one slot per stage
};

namespace detail {

struct PathDpState {
  Ptm m{};
  int prev_state = -1;  // index into the previous stage's slot list
  int prev_slot = -1;
};

inline bool gform_nonneg(const Ptm& r) {
  const double tol = 1e-12;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const bool structural = (i == j) || (i == 3 && j == 0);
      if (!structural && std::abs(r[i][j]) > tol) return false;
    }
  return std::abs(r[0][0] - 1.0) < tol && std::abs(r[1][1] - r[2][2]) < tol &&
         r[1][1] >= 0.0 && r[3][3] >= 0.0;
}

// Keep only (x, z) Pareto-optimal states; the CJ fidelity and every further
// in-family composition are monotone in both coordinates, so the discarded
// states can never win.
inline void pareto_prune(std::vector<PathDpState>& v) {
  std::vector<size_t> idx(v.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (v[a].m[1][1] != v[b].m[1][1]) return v[a].m[1][1] > v[b].m[1][1];
    return v[a].m[3][3] > v[b].m[3][3];
  });
  std::vector<PathDpState> kept;
  double best_z = -std::numeric_limits<double>::infinity();
  for (size_t i : idx) {
    if (v[i].m[3][3] > best_z) {
      best_z = v[i].m[3][3];
      kept.push_back(v[i]);
    }
  }
  v = std::move(kept);
}

}  // namespace detail

// Exact optimum over classical single-slot routes: compose each route's
// segment maps in travel order and take the best CJ fidelity over Bob's
// retained slots. States per slot are pruned to the (x, z) Pareto frontier
// when every segment map has the diagonal pauli-transfer shape with
// non-negative x and z; otherwise all distinct states are kept.
inline BestPath best_single_path(const NetworkTopology& t) {
  require_valid(t);
  const int nstages = static_cast<int>(t.stages.size());

  std::vector<std::vector<Ptm>> seg(static_cast<size_t>(nstages));
  bool prunable = true;
  for (int l = 0; l < nstages; ++l) {
    for (const SegmentSpec& s : t.stages[static_cast<size_t>(l)]) {
      seg[static_cast<size_t>(l)].push_back(ptm(build_channel(s)));
      if (!detail::gform_nonneg(seg[static_cast<size_t>(l)].back())) prunable = false;
    }
  }

  // states[l][slot] -> reachable composed maps after stage l's segment
  std::vector<std::vector<std::vector<detail::PathDpState>>> states(
      static_cast<size_t>(nstages));
  for (int l = 0; l < nstages; ++l)
    states[static_cast<size_t>(l)].resize(t.stages[static_cast<size_t>(l)].size());
  states[0][0].push_back({seg[0][0], -1, -1});

  constexpr size_t kStateCap = 200000;
  for (int l = 0; l + 1 < nstages; ++l) {
    std::vector<std::pair<int, int>> edges;  // (from slot, to slot)
    for (const BoundaryNode& n : t.boundaries[static_cast<size_t>(l)]) {
      switch (n.kind) {
        case NodeKind::transit:
          edges.emplace_back(n.in[0], n.out[0]);
          break;
        case NodeKind::divide:
          edges.emplace_back(n.in[0], n.out[0]);
          edges.emplace_back(n.in[0], n.out[1]);
          break;
        case NodeKind::recombine:
          for (int a = 0; a < 2; ++a)
            for (int p = 0; p < 2; ++p)
              if (!n.discard[p]) edges.emplace_back(n.in[a], n.out[p]);
          break;
      }
    }
    for (const auto& [from, to] : edges) {
      const std::vector<detail::PathDpState>& src = states[static_cast<size_t>(l)][static_cast<size_t>(from)];
      std::vector<detail::PathDpState>& dst = states[static_cast<size_t>(l + 1)][static_cast<size_t>(to)];
      for (size_t i = 0; i < src.size(); ++i) {
        detail::PathDpState ns;
        ns.m = ptm_multiply(seg[static_cast<size_t>(l + 1)][static_cast<size_t>(to)], src[i].m);
        ns.prev_state = static_cast<int>(i);
        ns.prev_slot = from;
        dst.push_back(ns);
      }
    }
    for (std::vector<detail::PathDpState>& v : states[static_cast<size_t>(l + 1)]) {
      if (prunable)
        detail::pareto_prune(v);
      else if (v.size() > kStateCap)
        throw std::runtime_error("best_single_path: route enumeration too large");
    }
  }

  BestPath best;
  best.fidelity = -1.0;
  int best_slot = -1, best_idx = -1;
  for (int s : t.bob_retained) {
    const std::vector<detail::PathDpState>& v =
        states[static_cast<size_t>(nstages - 1)][static_cast<size_t>(s)];
    for (size_t i = 0; i < v.size(); ++i) {
      const double f = ptm_cj_fidelity(v[i].m);
      if (f > best.fidelity) {
        best.fidelity = f;
        best_slot = s;
        best_idx = static_cast<int>(i);
      }
    }
  }
  if (best_slot < 0) throw std::runtime_error("best_single_path: no route reaches Bob");

  best.slots.assign(static_cast<size_t>(nstages), 0);
  int slot = best_slot, idx = best_idx;
  for (int l = nstages - 1; l >= 0; --l) {
    best.slots[static_cast<size_t>(l)] = slot;
    const detail::PathDpState& st = states[static_cast<size_t>(l)][static_cast<size_t>(slot)][static_cast<size_t>(idx)];
    slot = st.prev_slot;
    idx = st.prev_state;
  }
  return best;
}

// Product of noisy-segment infidelities along a route; ideal segments are
// not channels and do not contribute. This mirrors a printed weak-noise
// shorthand whose units do not compose like an infidelity; it is exposed
// for diagnostics only and must not feed any decision.
struct WeakNoiseDiagnostic {
  double infidelity_product = 1.0;
  bool heuristic_only = true;
};

inline WeakNoiseDiagnostic weak_noise_infidelity_product(const NetworkTopology& t,
                                                         const std::vector<int>& slots) {
  if (slots.size() != t.stages.size())
    throw std::invalid_argument("weak_noise_infidelity_product: one slot per stage");
  WeakNoiseDiagnostic d;
  for (size_t l = 0; l < slots.size(); ++l) {
    if (slots[l] < 0 || slots[l] >= static_cast<int>(t.stages[l].size()))
      throw std::invalid_argument("weak_noise_infidelity_product: slot out of range");
    const SegmentSpec& s = t.stages[l][static_cast<size_t>(slots[l])];
    if (s.ideal) continue;
    d.infidelity_product *= 1.0 - cj_fidelity(build_channel(s));
  }
  return d;
}

// ---- drivers ------------------------------------------------------------------------

struct NetworkSetup {
  NetworkTopology topology;
  PathNoiseSpec noise;
  double weight = 0.01;
};

struct NetworkEvaluation {
  double f0 = 0.0;  // best single-route fidelity
  std::vector<int> best_path;
  NetReport report;
  double cost = 0.0;
  Ratio ratio;
  std::vector<Snapshot> snapshots;
};

inline NetworkEvaluation evaluate_network(const NetworkSetup& setup,
                                          const std::vector<double>& params, ParamScheme scheme,
                                          Variant variant, bool want_snapshots = false) {
  const BestPath bp = best_single_path(setup.topology);
  EvolveResult ev = evolve(setup.topology, params, scheme, setup.noise, want_snapshots);

  NetworkEvaluation out;
  out.f0 = bp.fidelity;
  out.best_path = bp.slots;
  out.report = measure_at_bob(ev.state, setup.topology, variant);
  out.cost = protocol_cost(out.report.fidelity, out.report.p_succ, setup.weight);
  out.ratio = infidelity_ratio(out.f0, out.report.fidelity);
  out.snapshots = std::move(ev.snapshots);
  return out;
}

inline vqo::Objective make_network_cost(const NetworkSetup& setup, ParamScheme scheme,
                                        Variant variant) {
  return [setup, scheme, variant](const std::vector<double>& x) {
    EvolveResult ev = evolve(setup.topology, x, scheme, setup.noise, false);
    const NetReport rep = measure_at_bob(ev.state, setup.topology, variant);
    return protocol_cost(rep.fidelity, rep.p_succ, setup.weight);
  };
}

struct NetworkOptimum {
  vqo::MultiStartResult search;
  NetworkEvaluation eval;
};

// Lifts a minimal-scheme parameter vector into the full scheme: each node's
// mixing angle lands in the theta slot, the three phases are zero.
inline std::vector<double> embed_minimal_params(const std::vector<double>& x_minimal) {
  std::vector<double> full(4 * x_minimal.size(), 0.0);
  for (size_t k = 0; k < x_minimal.size(); ++k) full[4 * k + 3] = x_minimal[k];
  return full;
}

// Multi-start search over all node parameters. The balanced configuration
// (every node at theta = pi/4, phases zero) is always the first start;
// `extra_starts` are appended after it.
inline NetworkOptimum optimize_network(const NetworkSetup& setup, ParamScheme scheme,
                                       Variant variant, const vqo::OptimizerConfig& cfg,
                                       bool want_snapshots = false,
                                       const std::vector<std::vector<double>>& extra_starts = {}) {
  require_valid(setup.topology);
  const int dim = param_count(setup.topology, scheme);
  NetworkOptimum out;
  if (dim == 0) {
    out.eval = evaluate_network(setup, {}, scheme, variant, want_snapshots);
    return out;
  }
  std::vector<double> balanced(static_cast<size_t>(dim), 0.0);
  const int nodes = parameterized_node_count(setup.topology);
  for (int k = 0; k < nodes; ++k) {
    if (scheme == ParamScheme::minimal)
      balanced[static_cast<size_t>(k)] = 0.25 * 3.14159265358979323846;
    else
      balanced[static_cast<size_t>(4 * k + 3)] = 0.25 * 3.14159265358979323846;
  }
  std::vector<std::vector<double>> starts = {std::move(balanced)};
  starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());
  out.search = vqo::multi_start(make_network_cost(setup, scheme, variant), dim, cfg, starts);
  out.eval = evaluate_network(setup, out.search.best.x, scheme, variant, want_snapshots);
  return out;
}

// ---- builders -----------------------------------------------------------------------

// Ladder with a straight branch and a branch that splits once more in the
// middle before rejoining (one port of the inner join is discarded). `f_outer`
// and `f_inner` are the CJ fidelities of the outer- and middle-stage segments.
inline NetworkTopology nested_interference_topology(double f_outer, double f_inner) {
  auto unital_p0 = [](double f) { return 1.0 - f; };
  auto ad_p0 = [](double f) {
    const double u = 2.0 * std::sqrt(f) - 1.0;
    return 1.0 - u * u;
  };
  NetworkTopology t;
  t.stages = {
      {SegmentSpec{}},
      {SegmentSpec::noisy(NoiseKind::depolarizing, unital_p0(f_outer)),
       SegmentSpec::noisy(NoiseKind::dephasing, unital_p0(f_outer))},
      {SegmentSpec::noisy(NoiseKind::depolarizing, unital_p0(f_inner)),
       SegmentSpec::noisy(NoiseKind::dephasing, unital_p0(f_inner)),
       SegmentSpec::noisy(NoiseKind::amplitude_damping, ad_p0(f_inner))},
      {SegmentSpec::noisy(NoiseKind::depolarizing, unital_p0(f_outer)),
       SegmentSpec::noisy(NoiseKind::dephasing, unital_p0(f_outer))},
      {SegmentSpec{}, SegmentSpec{}},
  };
  t.boundaries = {
      {BoundaryNode::divide(0, 0, 1)},
      {BoundaryNode::transit(0, 0), BoundaryNode::divide(1, 1, 2)},
      {BoundaryNode::transit(0, 0),
       BoundaryNode::recombine({1, 2}, {1, -1}, {false, true})},
      {BoundaryNode::recombine({0, 1}, {0, 1})},
  };
  t.bob_retained = {0, 1};
  return t;
}

// Seeded layered topology: widths drift up then down, one routing action per
// boundary, segment fidelities drawn from [fid_lo, fid_hi). Width never drops
// below two between the source and Bob, so every noisy stage sits on a
// parallel section rather than a shared line.
inline NetworkTopology random_layered_topology(std::uint64_t seed, int n_stages = 12,
                                               int max_width = 5, double fid_lo = 0.99,
                                               double fid_hi = 1.0) {
  if (n_stages < 2) throw std::invalid_argument("random_layered_topology: n_stages >= 2");
  if (max_width < 2) throw std::invalid_argument("random_layered_topology: max_width >= 2");
  vqo::Rng rng(vqo::stream_seed(seed, 0x746f706fULL));

  auto random_segment = [&](void) -> SegmentSpec {
    const double f = rng.uniform(fid_lo, fid_hi);
    const int kind = static_cast<int>(rng.uniform() * 3.0);
    switch (kind) {
      case 0: return SegmentSpec::noisy(NoiseKind::dephasing, 1.0 - f);
      case 1: return SegmentSpec::noisy(NoiseKind::depolarizing, 1.0 - f);
      default: {
        const double u = 2.0 * std::sqrt(f) - 1.0;
        return SegmentSpec::noisy(NoiseKind::amplitude_damping, 1.0 - u * u);
      }
    }
  };

  NetworkTopology t;
  t.stages.push_back({SegmentSpec{}});
  int w = 1;
  for (int l = 0; l + 1 < n_stages; ++l) {
    enum { grow, join_keep, shrink, hold } action = hold;
    const double u = rng.uniform();
    const bool early = l < n_stages / 3;
    const bool late = l >= 2 * n_stages / 3;
    if (w < 2) {
      action = grow;
    } else if (early) {
      action = (w < max_width && u < 0.8) ? grow : (u < 0.9 ? join_keep : hold);
    } else if (late) {
      if (w >= 3 && u < 0.55)
        action = shrink;
      else if (u < 0.8)
        action = join_keep;
      else
        action = hold;
    } else {
      if (w < max_width && u < 0.4)
        action = grow;
      else if (w >= 3 && u < 0.55)
        action = shrink;
      else if (u < 0.75)
        action = join_keep;
      else
        action = hold;
    }

    std::vector<BoundaryNode> nodes;
    int wn = w;
    auto pick = [&](int lim) { return static_cast<int>(rng.uniform() * lim); };
    if (action == grow) {
      const int s = pick(w);
      wn = w + 1;
      // slots after s shift up by one; the new line lands at s + 1
      for (int i = 0; i < w; ++i) {
        if (i == s)
          nodes.push_back(BoundaryNode::divide(i, i, i + 1));
        else
          nodes.push_back(BoundaryNode::transit(i, i < s ? i : i + 1));
      }
    } else if (action == shrink || action == join_keep) {
      int a = pick(w), b = pick(w - 1);
      if (b >= a) ++b;
      if (a > b) std::swap(a, b);
      if (action == shrink) {
        wn = w - 1;
        const bool drop_second = rng.uniform() < 0.5;
        for (int i = 0; i < w; ++i) {
          if (i == a) {
            // kept line lands on slot a; slots above b shift down by one
            nodes.push_back(BoundaryNode::recombine(
                {a, b}, drop_second ? std::array<int, 2>{a, -1} : std::array<int, 2>{-1, a},
                drop_second ? std::array<bool, 2>{false, true} : std::array<bool, 2>{true, false}));
          } else if (i != b) {
            nodes.push_back(BoundaryNode::transit(i, i < b ? i : i - 1));
          }
        }
      } else {
        for (int i = 0; i < w; ++i) {
          if (i == a)
            nodes.push_back(BoundaryNode::recombine({a, b}, {a, b}));
          else if (i != b)
            nodes.push_back(BoundaryNode::transit(i, i));
        }
      }
    } else {
      for (int i = 0; i < w; ++i) nodes.push_back(BoundaryNode::transit(i, i));
    }
    t.boundaries.push_back(std::move(nodes));

    std::vector<SegmentSpec> stage;
    for (int i = 0; i < wn; ++i) stage.push_back(random_segment());
    t.stages.push_back(std::move(stage));
    w = wn;
  }
  t.bob_retained.resize(static_cast<size_t>(w));
  for (int i = 0; i < w; ++i) t.bob_retained[static_cast<size_t>(i)] = i;
  return t;
}

}  // namespace pathweave
