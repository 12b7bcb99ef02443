#pragma once

// Unitaries on the path degree of freedom and their Gaussian-jittered
// averages. Two parameterizations are supported:
//   minimal    chain of adjacent half-angle rotations
//              T_k = exp(-i theta_k/2 Y) on slots (k-1, k), applied k = 1
//              upward, so U|0> sweeps amplitude down the slot ladder;
//   two-mode   ordered list of beam-splitter entries
//              [[e^{i(a+g)} cos t, e^{i(b+g)} sin t ],
//               [-e^{i(-b+g)} sin t, e^{i(-a+g)} cos t]]
//              embedded on an arbitrary slot pair, applied in list order.
// Under angle noise each rotation angle acquires an independent Gaussian
// jitter of standard deviation sigma (phases a, b, g stay fixed; extension
// point if phase noise is ever needed). Because every angle appears in
// exactly one factor, the average over the joint Gaussian factorizes exactly
// into a composition of per-factor averages; no tensor quadrature grid is
// ever materialized.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pathweave/qmat.hpp"

namespace pathweave {

struct TwoModeEntry {
  int m = 0, n = 1;  // slot pair the entry acts on (ordered, m != n)
  double alpha = 0.0, beta = 0.0, gamma = 0.0, theta = 0.0;
};

struct PathUnitarySpec {
  enum class Scheme { minimal, two_mode_sequence };
  int d = 2;
  Scheme scheme = Scheme::minimal;
  std::vector<double> thetas;          // minimal: d-1 angles
  std::vector<TwoModeEntry> entries;   // two_mode_sequence

  static PathUnitarySpec minimal(int d, std::vector<double> th) {
    PathUnitarySpec s;
    s.d = d;
    s.scheme = Scheme::minimal;
    s.thetas = std::move(th);
    return s;
  }
  static PathUnitarySpec two_mode(int d, std::vector<TwoModeEntry> es) {
    PathUnitarySpec s;
    s.d = d;
    s.scheme = Scheme::two_mode_sequence;
    s.entries = std::move(es);
    return s;
  }
};

struct PathNoiseSpec {
  double sigma = 0.0;
  int points_per_dim = 21;  // odd, >= 3
};

// Budget guard for quadrature work: fluctuating-angle count x points.
inline constexpr int kQuadratureBudget = 21 * 21 * 21;

// One embedded 2x2 factor of a path unitary. `half_angle` marks the minimal
// scheme's convention (rotation by theta/2).
struct PathFactor {
  int i = 0, j = 1;
  double alpha = 0.0, beta = 0.0, gamma = 0.0, theta = 0.0;
  bool half_angle = false;
};

inline std::array<Cx, 4> factor_matrix(const PathFactor& f, double theta) {
  if (f.half_angle) {
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    return {Cx(c), Cx(-s), Cx(s), Cx(c)};
  }
  const double c = std::cos(theta), s = std::sin(theta);
  const Cx eg = std::polar(1.0, f.gamma);
  return {eg * std::polar(c, f.alpha), eg * std::polar(s, f.beta),
          eg * std::polar(-s, -f.beta), eg * std::polar(c, -f.alpha)};
}

inline void check_unitary_spec(const PathUnitarySpec& spec) {
  if (spec.d < 1) throw std::invalid_argument("path unitary: d >= 1 required");
  if (spec.scheme == PathUnitarySpec::Scheme::minimal) {
    if (static_cast<int>(spec.thetas.size()) != spec.d - 1)
      throw std::invalid_argument("path unitary: minimal scheme needs d-1 angles");
  } else {
    for (const TwoModeEntry& e : spec.entries) {
      if (e.m == e.n || e.m < 0 || e.n < 0 || e.m >= spec.d || e.n >= spec.d)
        throw std::invalid_argument("path unitary: two-mode entry slots out of range");
    }
  }
}

// Factors in application order (first applied first).
inline std::vector<PathFactor> unitary_factors(const PathUnitarySpec& spec) {
  check_unitary_spec(spec);
  std::vector<PathFactor> fs;
  if (spec.scheme == PathUnitarySpec::Scheme::minimal) {
    for (int k = 0; k < spec.d - 1; ++k) {
      PathFactor f;
      f.i = k;
      f.j = k + 1;
      f.theta = spec.thetas[k];
      f.half_angle = true;
      fs.push_back(f);
    }
  } else {
    for (const TwoModeEntry& e : spec.entries) {
      PathFactor f;
      f.i = e.m;
      f.j = e.n;
      f.alpha = e.alpha;
      f.beta = e.beta;
      f.gamma = e.gamma;
      f.theta = e.theta;
      fs.push_back(f);
    }
  }
  return fs;
}

inline CMat build_unitary(const PathUnitarySpec& spec) {
  CMat u = identity(spec.d);
  for (const PathFactor& f : unitary_factors(spec)) {
    const std::array<Cx, 4> m = factor_matrix(f, f.theta);
    CMat e = identity(spec.d);
    e(f.i, f.i) = m[0];
    e(f.i, f.j) = m[1];
    e(f.j, f.i) = m[2];
    e(f.j, f.j) = m[3];
    u = e * u;  // applied after everything accumulated so far
  }
  return u;
}

// Minimal-scheme angles sending |0> to the equal superposition of d slots.
inline std::vector<double> equal_superposition_params(int d) {
  if (d < 1) throw std::invalid_argument("equal_superposition_params: d >= 1");
  std::vector<double> th(static_cast<size_t>(d - 1));
  for (int k = 1; k <= d - 1; ++k)
    th[k - 1] = 2.0 * std::acos(std::sqrt(1.0 / (d - k + 1.0)));
  return th;
}

// Minimal-scheme angles whose unitary has an all-positive equal LAST row:
// the matching recombiner, with the balanced readout landing on slot d - 1.
// (The chain applies low slot pairs first, so only the last row can spread
// across every slot; it is the reversed equal-superposition sequence.)
inline std::vector<double> equal_recombination_params(int d) {
  std::vector<double> th = equal_superposition_params(d);
  std::reverse(th.begin(), th.end());
  return th;
}

// Adjacent-pair sequence whose theta-only factors reach any real rotation up
// to per-slot sign flips (the Givens elimination order of a QR sweep, played
// back in reverse). Its last d - 1 entries are the ascending chain
// (0,1),(1,2),...,(d-2,d-1), so chain-only configurations embed by zeroing
// the leading angles.
inline std::vector<std::pair<int, int>> rotation_ladder_pairs(int d) {
  if (d < 1) throw std::invalid_argument("rotation_ladder_pairs: d >= 1");
  std::vector<std::pair<int, int>> pairs;
  for (int c = 0; c + 1 < d; ++c)
    for (int r = d - 1; r > c; --r) pairs.emplace_back(r - 1, r);
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

inline int rotation_ladder_param_count(int d) { return d * (d - 1) / 2; }

// Zero-phase two-mode sequence over rotation_ladder_pairs. Note the angle
// convention: each factor is [[cos t, sin t], [-sin t, cos t]] (full angle),
// not the half-angle chain rotation.
inline PathUnitarySpec rotation_ladder_spec(int d, const std::vector<double>& thetas) {
  const auto pairs = rotation_ladder_pairs(d);
  if (thetas.size() != pairs.size())
    throw std::invalid_argument("rotation_ladder_spec: wrong angle count");
  std::vector<TwoModeEntry> entries(pairs.size());
  for (size_t k = 0; k < pairs.size(); ++k)
    entries[k] = {pairs[k].first, pairs[k].second, 0.0, 0.0, 0.0, thetas[k]};
  return PathUnitarySpec::two_mode(d, std::move(entries));
}

struct GaussHermite {
  std::vector<double> nodes;    // ascending; sample = mean + sqrt(2)*sigma*node
  std::vector<double> weights;  // sum to 1
};

// Golub-Welsch nodes for the weight exp(-x^2), returned with probabilist
// normalization so that E[f] = sum_q w_q f(mu + sqrt(2) sigma x_q).
inline GaussHermite gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1");
  std::vector<std::vector<double>> jac(n, std::vector<double>(n, 0.0));
  for (int k = 0; k + 1 < n; ++k) {
    const double b = std::sqrt(0.5 * (k + 1));
    jac[k][k + 1] = b;
    jac[k + 1][k] = b;
  }
  const EighReal e = eigh_real(jac);
  GaussHermite gh;
  gh.nodes.resize(n);
  gh.weights.resize(n);
  for (int q = 0; q < n; ++q) {
    gh.nodes[q] = e.values[q];
    const double v0 = e.vectors[q][0];
    gh.weights[q] = v0 * v0;  // sqrt(pi) v0^2 normalized by sqrt(pi)
  }
  double s = 0.0;
  for (double w : gh.weights) s += w;
  for (double& w : gh.weights) w /= s;  // guard the tail of the normalization
  return gh;
}

inline void check_noise_spec(const PathNoiseSpec& noise) {
  if (noise.sigma < 0.0) throw std::invalid_argument("path noise: sigma >= 0");
  if (noise.points_per_dim < 3 || noise.points_per_dim % 2 == 0)
    throw std::invalid_argument("path noise: points_per_dim must be odd and >= 3");
}

// ---- block-grid transforms -------------------------------------------------
//
// A block grid is the path-indexed matrix of operator blocks: blocks[i*d + j]
// carries the (path i, path j) block. Path unitaries act by congruence on the
// grid indices and never touch the inner blocks, so the same helpers serve
// plain path matrices (1x1 blocks) and joint path (x) qubit-pair states
// (4x4 blocks).

inline void check_grid(const std::vector<CMat>& blocks, int d) {
  if (static_cast<int>(blocks.size()) != d * d)
    throw std::invalid_argument("block grid: expected d*d blocks");
}

// Exact congruence by one embedded 2x2 factor.
inline void grid_apply_two_slot(std::vector<CMat>& blocks, int d, int i, int j,
                                const std::array<Cx, 4>& u) {
  check_grid(blocks, d);
  // rows: (B[i][c], B[j][c]) <- u . (B[i][c], B[j][c])
  for (int c = 0; c < d; ++c) {
    CMat bi = blocks[i * d + c], bj = blocks[j * d + c];
    blocks[i * d + c] = u[0] * bi + u[1] * bj;
    blocks[j * d + c] = u[2] * bi + u[3] * bj;
  }
  // cols: (B[r][i], B[r][j]) <- (B[r][i], B[r][j]) . u^dag
  for (int r = 0; r < d; ++r) {
    CMat bi = blocks[r * d + i], bj = blocks[r * d + j];
    blocks[r * d + i] = std::conj(u[0]) * bi + std::conj(u[1]) * bj;
    blocks[r * d + j] = std::conj(u[2]) * bi + std::conj(u[3]) * bj;
  }
}

// Gaussian-averaged congruence by one factor; exact for sigma = 0.
inline void grid_apply_factor(std::vector<CMat>& blocks, int d, const PathFactor& f,
                              const PathNoiseSpec& noise) {
  check_grid(blocks, d);
  if (noise.sigma == 0.0) {
    grid_apply_two_slot(blocks, d, f.i, f.j, factor_matrix(f, f.theta));
    return;
  }
  check_noise_spec(noise);
  const GaussHermite gh = gauss_hermite(noise.points_per_dim);
  const int b = blocks.empty() ? 0 : blocks.front().rows();
  std::vector<CMat> acc(blocks.size(), CMat(b, b));
  for (int q = 0; q < noise.points_per_dim; ++q) {
    std::vector<CMat> work = blocks;
    const double theta_q = f.theta + std::sqrt(2.0) * noise.sigma * gh.nodes[q];
    grid_apply_two_slot(work, d, f.i, f.j, factor_matrix(f, theta_q));
    const Cx w = gh.weights[q];
    for (size_t t = 0; t < acc.size(); ++t) acc[t] = acc[t] + w * work[t];
  }
  blocks = std::move(acc);
}

inline void grid_apply_unitary(std::vector<CMat>& blocks, int d, const PathUnitarySpec& spec,
                               const PathNoiseSpec& noise = {}) {
  if (spec.d != d) throw std::invalid_argument("grid_apply_unitary: dimension mismatch");
  const std::vector<PathFactor> fs = unitary_factors(spec);
  if (noise.sigma > 0.0) {
    check_noise_spec(noise);
    const long budget = static_cast<long>(fs.size()) * noise.points_per_dim;
    if (budget > kQuadratureBudget)
      throw std::invalid_argument("grid_apply_unitary: quadrature budget exceeded");
  }
  for (const PathFactor& f : fs) grid_apply_factor(blocks, d, f, noise);
}

// Column-stacked d^2 x d^2 superoperator of the (averaged) path unitary:
// vec(rho') = S vec(rho) with vec index j*d + i for entry (i, j).
inline CMat noisy_path_channel(const PathUnitarySpec& spec, const PathNoiseSpec& noise) {
  check_unitary_spec(spec);
  const int d = spec.d;
  if (noise.sigma == 0.0) {
    const CMat u = build_unitary(spec);
    CMat uc(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) uc(i, j) = std::conj(u(i, j));
    return kron(uc, u);
  }
  CMat s(d * d, d * d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      std::vector<CMat> blocks(static_cast<size_t>(d) * d, CMat(1, 1));
      blocks[k * d + l](0, 0) = 1.0;
      grid_apply_unitary(blocks, d, spec, noise);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s(j * d + i, l * d + k) = blocks[i * d + j](0, 0);
    }
  return s;
}

// Exact d = 2 closed form of the angle-averaged minimal rotation: in the
// rotated frame the channel is (1-q) rho + q Y rho Y with
// q = (1 - exp(-sigma^2/2)) / 2.
inline double closed_form_y_error(double sigma) {
  return 0.5 * (1.0 - std::exp(-0.5 * sigma * sigma));
}

}  // namespace pathweave
