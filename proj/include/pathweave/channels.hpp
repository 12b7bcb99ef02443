#pragma once

// Single-qubit noise channels with an attached vacuum-interference operator
// (vio). The vio is what multiplies a path's amplitude when that path is
// taken in superposition with others; for a channel with Kraus set {K_s} and
// vacuum amplitudes alpha_s it is F = sum_s conj(alpha_s) K_s, and the
// effective amplitude vector in the channel's canonical orthogonal Kraus
// basis can never exceed unit length for a physical model.

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathweave/qmat.hpp"

namespace pathweave {

enum class NoiseKind { dephasing, depolarizing, amplitude_damping };

inline const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::dephasing: return "dephasing";
    case NoiseKind::depolarizing: return "depolarizing";
    case NoiseKind::amplitude_damping: return "amplitude_damping";
  }
  return "?";
}

inline std::optional<NoiseKind> parse_noise_kind(const std::string& s) {
  if (s == "dephasing") return NoiseKind::dephasing;
  if (s == "depolarizing") return NoiseKind::depolarizing;
  if (s == "amplitude_damping") return NoiseKind::amplitude_damping;
  return std::nullopt;
}

inline CMat pauli(int i) {
  switch (i) {
    case 0: return identity(2);
    case 1: return CMat(2, 2, {0, 1, 1, 0});
    case 2: return CMat(2, 2, {0, Cx(0, -1), Cx(0, 1), 0});
    case 3: return CMat(2, 2, {1, 0, 0, -1});
  }
  throw std::invalid_argument("pauli: index");
}

struct VacuumSpec {
  enum class Mode { micro, scalar_alpha0, explicit_amplitudes };
  Mode mode = Mode::micro;
  double alpha0 = 1.0;             // scalar_alpha0: F = alpha0 * K_0
  std::vector<Cx> amplitudes;      // explicit_amplitudes: one entry per Kraus op

  static VacuumSpec micro() { return {}; }
  static VacuumSpec scalar(double a0) { return {Mode::scalar_alpha0, a0, {}}; }
  static VacuumSpec explicit_amps(std::vector<Cx> a) {
    return {Mode::explicit_amplitudes, 1.0, std::move(a)};
  }
};

struct KrausChannel {
  std::vector<CMat> kraus;          // index 0 is the identity-like operator
  CMat vio;                         // vacuum-interference operator, 2x2
  std::string label;
  double p0 = 0.0;                  // NaN for cross-kind compositions
  std::optional<NoiseKind> kind;    // nullopt: ideal or cross-kind composition
};

// Closed-form vio of the collisional microscopic model realizing each kind.
inline CMat micro_vio(NoiseKind kind, double p0) {
  switch (kind) {
    case NoiseKind::dephasing: {
      if (p0 > 0.5 + 1e-12)
        throw std::invalid_argument("micro_vio: dephasing microscopic model needs p0 <= 1/2");
      return Cx(std::pow(std::max(0.0, 1.0 - 2.0 * p0), 0.25)) * identity(2);
    }
    case NoiseKind::depolarizing: {
      if (p0 > 0.75 + 1e-12)
        throw std::invalid_argument("micro_vio: depolarizing microscopic model needs p0 <= 3/4");
      return Cx(std::pow(std::max(0.0, 1.0 - 4.0 * p0 / 3.0), 0.375)) * identity(2);
    }
    case NoiseKind::amplitude_damping:
      return CMat(2, 2, {1, 0, 0, std::sqrt(1.0 - p0)});
  }
  throw std::invalid_argument("micro_vio: kind");
}

inline std::vector<CMat> kraus_set(NoiseKind kind, double p0) {
  std::vector<CMat> ks;
  switch (kind) {
    case NoiseKind::dephasing:
      ks.push_back(Cx(std::sqrt(1.0 - p0)) * identity(2));
      ks.push_back(Cx(std::sqrt(p0)) * pauli(3));
      break;
    case NoiseKind::depolarizing:
      ks.push_back(Cx(std::sqrt(1.0 - p0)) * identity(2));
      for (int i = 1; i <= 3; ++i) ks.push_back(Cx(std::sqrt(p0 / 3.0)) * pauli(i));
      break;
    case NoiseKind::amplitude_damping:
      ks.push_back(CMat(2, 2, {1, 0, 0, std::sqrt(1.0 - p0)}));
      ks.push_back(CMat(2, 2, {0, std::sqrt(p0), 0, 0}));
      break;
  }
  return ks;
}

inline KrausChannel ideal_channel() {
  KrausChannel c;
  c.kraus = {identity(2)};
  c.vio = identity(2);
  c.label = "ideal";
  c.p0 = 0.0;
  return c;
}

// Canonical orthogonal Kraus decomposition and the vio's coordinates in it.
struct EffectiveVacuum {
  std::vector<CMat> basis;       // tr(B_r B_r'^dag) = t_r delta_rr'
  std::vector<Cx> amplitudes;    // F = sum_r conj(amplitudes[r]) basis[r]
  double norm = 0.0;             // l2 length of amplitudes
};

inline EffectiveVacuum effective_vacuum_amplitudes(const KrausChannel& ch) {
  // M = sum_s vec(K_s) vec(K_s)^dag determines the channel; its eigenpairs
  // give the canonical Kraus set.
  CMat m(4, 4);
  for (const CMat& k : ch.kraus) {
    std::array<Cx, 4> v{k(0, 0), k(1, 0), k(0, 1), k(1, 1)};  // column-stacked
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) += v[i] * std::conj(v[j]);
  }
  const Eigh e = eigh(m);

  EffectiveVacuum out;
  CMat recon(2, 2);
  for (int r = 3; r >= 0; --r) {  // descending eigenvalues
    const double lam = e.values[r];
    if (lam <= kEigFloor) continue;
    std::array<Cx, 4> v{e.vectors(0, r), e.vectors(1, r), e.vectors(2, r), e.vectors(3, r)};
    // fix the eigenvector phase: first maximal-magnitude entry real positive
    int pivot = 0;
    for (int i = 1; i < 4; ++i)
      if (std::abs(v[i]) > std::abs(v[pivot]) + 1e-14) pivot = i;
    const Cx phase = std::abs(v[pivot]) > 0 ? std::conj(v[pivot]) / std::abs(v[pivot]) : Cx(1);
    CMat b(2, 2);
    b(0, 0) = std::sqrt(lam) * phase * v[0];
    b(1, 0) = std::sqrt(lam) * phase * v[1];
    b(0, 1) = std::sqrt(lam) * phase * v[2];
    b(1, 1) = std::sqrt(lam) * phase * v[3];
    // amplitude: conj(tr(F B^dag)) / tr(B B^dag), with tr(B B^dag) = lam
    const Cx overlap = trace(ch.vio * dagger(b));
    const Cx amp = std::conj(overlap) / lam;
    recon = recon + std::conj(amp) * b;
    out.basis.push_back(std::move(b));
    out.amplitudes.push_back(amp);
  }
  if (max_abs_diff(recon, ch.vio) > 1e-10)
    throw std::invalid_argument(
        "effective_vacuum_amplitudes: vio not expressible in the channel's Kraus span");
  double n2 = 0.0;
  for (const Cx& a : out.amplitudes) n2 += std::norm(a);
  out.norm = std::sqrt(n2);
  return out;
}

inline KrausChannel make_channel(NoiseKind kind, double p0, const VacuumSpec& vac = {}) {
  if (p0 < -1e-12 || p0 > 1.0 + 1e-12) throw std::invalid_argument("make_channel: p0 in [0, 1]");
  if (kind == NoiseKind::dephasing && vac.mode == VacuumSpec::Mode::micro && p0 > 0.5 + 1e-12)
    throw std::invalid_argument("make_channel: dephasing microscopic model needs p0 <= 1/2");
  if (kind == NoiseKind::depolarizing && vac.mode == VacuumSpec::Mode::micro && p0 > 0.75 + 1e-12)
    throw std::invalid_argument("make_channel: depolarizing microscopic model needs p0 <= 3/4");

  KrausChannel c;
  c.kind = kind;
  c.p0 = p0;
  c.kraus = kraus_set(kind, p0);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s(p0=%g)", noise_kind_name(kind), p0);
  c.label = buf;

  switch (vac.mode) {
    case VacuumSpec::Mode::micro:
      c.vio = micro_vio(kind, p0);
      break;
    case VacuumSpec::Mode::scalar_alpha0:
      if (std::abs(vac.alpha0) > 1.0 + 1e-12)
        throw std::invalid_argument("make_channel: |alpha0| must not exceed 1");
      c.vio = Cx(vac.alpha0) * c.kraus[0];
      break;
    case VacuumSpec::Mode::explicit_amplitudes: {
      if (vac.amplitudes.size() != c.kraus.size())
        throw std::invalid_argument("make_channel: one amplitude per Kraus operator required");
      c.vio = CMat(2, 2);
      for (size_t s = 0; s < c.kraus.size(); ++s)
        c.vio = c.vio + std::conj(vac.amplitudes[s]) * c.kraus[s];
      const EffectiveVacuum ev = effective_vacuum_amplitudes(c);
      if (ev.norm > 1.0 + 1e-12)
        throw std::invalid_argument("make_channel: effective vacuum amplitude exceeds 1");
      break;
    }
  }
  return c;
}

// Apply the channel to tensor factor `target` of a density matrix over
// factors `dims` (row-major order).
inline CMat apply_channel(const CMat& rho, const KrausChannel& ch, int target,
                          const std::vector<int>& dims) {
  if (target < 0 || target >= static_cast<int>(dims.size()))
    throw std::invalid_argument("apply_channel: target out of range");
  if (dims[target] != 2) throw std::invalid_argument("apply_channel: target must be a qubit");
  int left = 1, right = 1;
  for (int i = 0; i < target; ++i) left *= dims[i];
  for (size_t i = target + 1; i < dims.size(); ++i) right *= dims[i];
  CMat out(rho.rows(), rho.cols());
  for (const CMat& k : ch.kraus) {
    const CMat op = kron(kron(identity(left), k), identity(right));
    out = out + op * rho * dagger(op);
  }
  return out;
}

inline CMat bell_phi_plus_vector() {
  CMat v(4, 1);
  v(0, 0) = 1.0 / std::sqrt(2.0);
  v(3, 0) = 1.0 / std::sqrt(2.0);
  return v;
}

inline CMat bell_phi_plus() {
  const CMat v = bell_phi_plus_vector();
  return v * dagger(v);
}

// <Phi+| (1 (x) C)(Phi+) |Phi+>, the channel's Choi-Jamiolkowski fidelity.
inline double cj_fidelity(const KrausChannel& ch) {
  const CMat out = apply_channel(bell_phi_plus(), ch, 1, {2, 2});
  const CMat v = bell_phi_plus_vector();
  return (dagger(v) * out * v)(0, 0).real();
}

// Second applied after first: Kraus products {K2 K1}, vio product, and when
// both operands share a kind the composed p0 (the composition stays in-kind).
inline KrausChannel compose(const KrausChannel& second, const KrausChannel& first) {
  KrausChannel c;
  c.kraus.reserve(second.kraus.size() * first.kraus.size());
  for (const CMat& k2 : second.kraus)
    for (const CMat& k1 : first.kraus) c.kraus.push_back(k2 * k1);
  c.vio = second.vio * first.vio;
  c.label = second.label + " after " + first.label;
  if (second.kind && first.kind && *second.kind == *first.kind) {
    c.kind = second.kind;
    const double f = cj_fidelity(c);
    if (*c.kind == NoiseKind::amplitude_damping) {
      const double u = 2.0 * std::sqrt(f) - 1.0;
      c.p0 = 1.0 - u * u;
    } else {
      c.p0 = 1.0 - f;
    }
  } else {
    c.kind = std::nullopt;
    c.p0 = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

// Column-stacked superoperator: vec(C(rho)) = S vec(rho), S = sum conj(K) (x) K.
inline CMat to_superoperator(const KrausChannel& ch) {
  CMat s(4, 4);
  for (const CMat& k : ch.kraus) {
    CMat kc(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) kc(i, j) = std::conj(k(i, j));
    s = s + kron(kc, k);
  }
  return s;
}

// Pauli transfer matrix R[p][q] = tr(P_p C(P_q)) / 2; the CJ fidelity of any
// trace-preserving map is (1 + R[1][1] + R[2][2] + R[3][3]) / 4.
using Ptm = std::array<std::array<double, 4>, 4>;

inline Ptm ptm(const KrausChannel& ch) {
  Ptm r{};
  for (int q = 0; q < 4; ++q) {
    CMat img(2, 2);
    for (const CMat& k : ch.kraus) img = img + k * pauli(q) * dagger(k);
    for (int p = 0; p < 4; ++p) r[p][q] = 0.5 * trace(pauli(p) * img).real();
  }
  return r;
}

inline Ptm ptm_multiply(const Ptm& a, const Ptm& b) {
  Ptm r{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      if (a[i][k] == 0.0) continue;
      for (int j = 0; j < 4; ++j) r[i][j] += a[i][k] * b[k][j];
    }
  return r;
}

inline Ptm ptm_identity() {
  Ptm r{};
  for (int i = 0; i < 4; ++i) r[i][i] = 1.0;
  return r;
}

inline double ptm_cj_fidelity(const Ptm& r) {
  return 0.25 * (1.0 + r[1][1] + r[2][2] + r[3][3]);
}

}  // namespace pathweave
