#pragma once

// Closed-form reference results for sending one half of a Bell pair through a
// coherent d-path superposition of equally noisy single-qubit channels, with a
// scalar vacuum amplitude alpha0 per path and an equal-amplitude splitter on
// both ends. Everything here is elementary arithmetic on the printed formulas;
// none of it touches the simulator, so the two sides can be compared as
// independent implementations.
//
// Conventions:
//   f0     single-channel Choi-Jamiolkowski fidelity (the no-superposition
//          baseline; also the best-single-path fidelity for identical links).
//   alpha0 magnitude of the scalar vacuum amplitude, 0 <= alpha0 <= 1.
//   r      infidelity ratio (1 - f0) / (1 - F) of a protocol variant.
// All entropies/ratios are plain doubles; domain violations throw.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pathweave::oracle {

enum class Kind {
  dephasing,
  depolarizing,
  amplitude_damping,
  mixed_dephasing_depolarizing,  // one dephasing + one depolarizing link, d = 2
};

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::dephasing: return "dephasing";
    case Kind::depolarizing: return "depolarizing";
    case Kind::amplitude_damping: return "amplitude_damping";
    case Kind::mixed_dephasing_depolarizing: return "mixed_dephasing_depolarizing";
  }
  return "?";
}

struct Query {
  Kind kind = Kind::dephasing;
  int d = 2;
  double f0 = 0.9;
  double alpha0 = 1.0;
  double sigma = 0.0;  // only the d = 2 small-noise forms below use this
};

struct Result {
  double p_succ = 1.0;  // success probability of the variant
  double f = 0.0;       // output fidelity of the variant
  double r = 1.0;       // (1 - f0) / (1 - f); +inf when f == 1
};

// Lowest admissible f0 per kind: dephasing p0 <= 1/2, depolarizing p0 <= 3/4,
// amplitude damping needs 2*sqrt(f0) >= 1 for the p0 inversion.
inline double min_f0(Kind k) {
  switch (k) {
    case Kind::dephasing: return 0.5;
    case Kind::depolarizing: return 0.25;
    case Kind::amplitude_damping: return 0.25;
    case Kind::mixed_dephasing_depolarizing: return 0.5;
  }
  return 0.5;
}

inline void check_query(const Query& q) {
  if (q.d < 1) throw std::invalid_argument("oracle: d must be >= 1");
  if (q.f0 > 1.0 + 1e-12 || q.f0 < min_f0(q.kind) - 1e-12)
    throw std::invalid_argument("oracle: f0 out of range for " + std::string(kind_name(q.kind)));
  if (q.alpha0 < -1e-12 || q.alpha0 > 1.0 + 1e-12)
    throw std::invalid_argument("oracle: alpha0 must lie in [0, 1]");
  if (q.kind == Kind::mixed_dephasing_depolarizing && q.d != 2)
    throw std::invalid_argument("oracle: mixed kind is defined for d = 2 only");
}

inline double p0_from_f0(Kind k, double f0) {
  switch (k) {
    case Kind::dephasing:
    case Kind::depolarizing:
    case Kind::mixed_dephasing_depolarizing:
      return 1.0 - f0;
    case Kind::amplitude_damping: {
      const double u = 2.0 * std::sqrt(f0) - 1.0;
      if (u < -1e-12) throw std::invalid_argument("oracle: amplitude damping needs f0 >= 1/4");
      return 1.0 - u * u;
    }
  }
  throw std::invalid_argument("oracle: unknown kind");
}

inline double f0_from_p0(Kind k, double p0) {
  if (p0 < -1e-12 || p0 > 1.0 + 1e-12) throw std::invalid_argument("oracle: p0 out of [0, 1]");
  switch (k) {
    case Kind::dephasing:
      if (p0 > 0.5 + 1e-12) throw std::invalid_argument("oracle: dephasing needs p0 <= 1/2");
      return 1.0 - p0;
    case Kind::depolarizing:
      if (p0 > 0.75 + 1e-12) throw std::invalid_argument("oracle: depolarizing needs p0 <= 3/4");
      return 1.0 - p0;
    case Kind::mixed_dephasing_depolarizing:
      return 1.0 - p0;
    case Kind::amplitude_damping: {
      const double s = std::sqrt(1.0 - p0);
      return 0.25 * (1.0 + s) * (1.0 + s);
    }
  }
  throw std::invalid_argument("oracle: unknown kind");
}

inline double ratio_from_fidelity(double f0, double f) {
  if (f >= 1.0 - 1e-15) return std::numeric_limits<double>::infinity();
  return (1.0 - f0) / (1.0 - f);
}

// Postselected variant: keep the most likely outcome (index 0 at these
// parameters). p_succ = P0, f = Bell fidelity of the kept branch.
inline Result prob_identical(const Query& q) {
  check_query(q);
  const double a2 = q.alpha0 * q.alpha0;
  const double d = static_cast<double>(q.d);
  const double p0 = p0_from_f0(q.kind, q.f0);
  Result res;
  switch (q.kind) {
    case Kind::dephasing:
    case Kind::depolarizing:
      res.p_succ = (1.0 + q.f0 * (d - 1.0) * a2) / d;
      break;
    case Kind::amplitude_damping:
      res.p_succ = ((1.0 + (d - 1.0) * a2) * (2.0 - p0) + p0) / (2.0 * d);
      break;
    case Kind::mixed_dephasing_depolarizing:
      // Both links unital with equal f0 and alpha0 = 1: same P0 as identical.
      res.p_succ = (1.0 + q.f0 * a2) / 2.0;
      break;
  }
  res.f = q.f0 * (1.0 + (d - 1.0) * a2) / (d * res.p_succ);
  res.r = ratio_from_fidelity(q.f0, res.f);
  return res;
}

// Deterministic variant: every outcome is kept and locally corrected; the
// correction per failure outcome is the better of "leave as is" (keeps
// f0 * (1 - a2)) and "rotate onto the dominant error branch" (keeps e_k).
inline Result det_identical(const Query& q) {
  check_query(q);
  const double a2 = q.alpha0 * q.alpha0;
  const double d = static_cast<double>(q.d);
  const double p0 = p0_from_f0(q.kind, q.f0);
  double e_k = 0.0;
  switch (q.kind) {
    case Kind::dephasing: e_k = p0; break;
    case Kind::depolarizing: e_k = p0 / 3.0; break;
    case Kind::amplitude_damping: e_k = p0 / 4.0; break;
    case Kind::mixed_dephasing_depolarizing: {
      // d = 2, alpha0 = 1: the failure branch holds the error weight p0/3 on
      // the better of its Bell components; the interference term removes the
      // Bell-diagonal f0 part entirely.
      Result res;
      res.p_succ = 1.0;
      res.f = q.f0 + (1.0 - q.f0) / 3.0;
      res.r = ratio_from_fidelity(q.f0, res.f);
      return res;
    }
  }
  Result res;
  res.p_succ = 1.0;
  res.f = (q.f0 * (1.0 + (d - 1.0) * a2) + (d - 1.0) * std::max(e_k, q.f0 * (1.0 - a2))) / d;
  res.r = ratio_from_fidelity(q.f0, res.f);
  return res;
}

struct Threshold {
  bool possible = false;  // false: no alpha0 gives a deterministic advantage
  double alpha0 = 1.0;    // smallest alpha0 with r_det > 1 when possible
};

// Vacuum amplitude above which the deterministic variant beats one channel.
inline Threshold alpha_threshold(Kind k, double f0) {
  Query q{k, 2, f0, 1.0, 0.0};
  check_query(q);
  double radicand = 0.0;
  switch (k) {
    case Kind::dephasing: radicand = 2.0 - 1.0 / f0; break;
    case Kind::depolarizing: radicand = 4.0 / 3.0 - 1.0 / (3.0 * f0); break;
    case Kind::amplitude_damping: radicand = 2.0 - 1.0 / std::sqrt(f0); break;
    case Kind::mixed_dephasing_depolarizing:
      throw std::invalid_argument("oracle: no threshold form for the mixed kind");
  }
  Threshold t;
  if (radicand <= 0.0) return t;  // deterministic advantage impossible at any alpha0
  t.possible = true;
  t.alpha0 = std::sqrt(radicand);
  return t;
}

struct SigmaForms {
  double r_det = 1.0;
  double r_prob = 2.0;        // leading-order value for d = 2
  double f_threshold = 1.0;   // f0 above which r_det stays at 1
  bool valid = true;          // false outside the small-p0 / small-sigma regime
};

// Leading-order d = 2 results with Gaussian recombination-angle noise of
// standard deviation sigma (equal superposition, microscopic vacuum model).
inline SigmaForms sigma_forms_d2(Kind k, double p0, double sigma) {
  if (p0 < 0.0 || p0 > 1.0) throw std::invalid_argument("oracle: p0 out of [0, 1]");
  if (sigma < 0.0) throw std::invalid_argument("oracle: sigma must be >= 0");
  const double s2 = sigma * sigma;
  SigmaForms out;
  out.valid = (p0 <= 0.1 && s2 <= 0.1);
  switch (k) {
    case Kind::dephasing:
      out.r_det = (p0 <= s2) ? 1.0 : 2.0 * p0 / (p0 + s2);
      out.f_threshold = 1.0 - s2;
      break;
    case Kind::depolarizing:
      out.r_det = (p0 <= 3.0 * s2) ? 1.0 : 6.0 * p0 / (5.0 * p0 + 3.0 * s2);
      out.f_threshold = 1.0 - 3.0 * s2;
      break;
    case Kind::amplitude_damping:
      out.r_det = (p0 <= 4.0 * s2) ? 1.0 : 4.0 * p0 / (3.0 * p0 + 4.0 * s2);
      out.f_threshold = 1.0 - 2.0 * s2;
      break;
    case Kind::mixed_dephasing_depolarizing:
      throw std::invalid_argument("oracle: no sigma form for the mixed kind");
  }
  return out;
}

// Weak-noise, alpha0 = 1 limits of r_det; r_prob tends to d for every kind.
inline double det_limit(Kind k, int d) {
  const double dd = static_cast<double>(d);
  switch (k) {
    case Kind::dephasing: return dd;
    case Kind::depolarizing: return 3.0 * dd / (2.0 * dd + 1.0);
    case Kind::amplitude_damping: return 2.0 * dd / (dd + 1.0);
    case Kind::mixed_dephasing_depolarizing: return 1.5;
  }
  throw std::invalid_argument("oracle: unknown kind");
}

}  // namespace pathweave::oracle
