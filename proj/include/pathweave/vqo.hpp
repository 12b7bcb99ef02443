#pragma once

// Derivative-free minimization for the variational protocol parameters.
// Two in-repo methods behind one interface:
//   cobyla_like   linear-interpolation trust region: keep an n+1 point
//                 simplex, fit the linear model through it, step the best
//                 point against the model gradient, shrink the radius when
//                 the step stops paying;
//   nelder_mead   the classic reflect/expand/contract/shrink simplex.
// The protocol cost surfaces contain exactly flat regions (readouts that
// leave every branch uncorrectably equal), where any simplex method sees
// zero spread at full width and would stall. Both methods therefore kick on
// a plateau: when the value spread collapses while the simplex is still
// wide, the simplex is re-spanned around the best vertex with random offsets
// and the search continues until the evaluation budget runs out. Kicks draw
// from a stream fixed by (seed, start point), so runs stay fully
// deterministic for a fixed config and start, count work in objective
// evaluations, and report the best point ever evaluated (never worse than
// the start).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace pathweave::vqo {

using Objective = std::function<double(const std::vector<double>&)>;

struct OptimizerConfig {
  enum class Method { cobyla_like, nelder_mead };
  Method method = Method::cobyla_like;
  int max_iterations = 1000;  // objective-evaluation budget
  double initial_step = 0.5;
  double convergence_tol = 1e-8;
  std::uint64_t seed = 0;
  int restarts = 1;
};

struct MinimizeResult {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
  bool budget_exhausted = false;
  std::vector<double> trace;  // best value seen after each evaluation
};

inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent deterministic stream r of a master seed.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = seed ^ (0x5851f42d4c957f2dULL * (stream + 1));
  std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

namespace detail {

struct BudgetExhausted {};

struct Tracker {
  const Objective& f;
  int budget;
  std::function<void(const std::vector<double>&, double)>* on_best = nullptr;
  int evals = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> bestx;
  std::vector<double> trace;
  bool exhausted = false;

  double eval(const std::vector<double>& x) {
    if (evals >= budget) {
      exhausted = true;
      throw BudgetExhausted{};
    }
    const double v = f(x);
    ++evals;
    if (v < best) {
      best = v;
      bestx = x;
      if (on_best) (*on_best)(x, v);
    }
    trace.push_back(best);
    return v;
  }
};

inline std::vector<std::vector<double>> spanning_simplex(const std::vector<double>& base,
                                                         double step) {
  const size_t n = base.size();
  std::vector<std::vector<double>> pts(n + 1, base);
  for (size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  return pts;
}

// A stall with the simplex still wider than this is treated as a plateau.
inline constexpr double kPlateauWidth = 1e-5;

inline double simplex_width(const std::vector<std::vector<double>>& pts, size_t ib) {
  double w = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t k = 0; k < pts[i].size(); ++k)
      w = std::max(w, std::abs(pts[i][k] - pts[ib][k]));
  return w;
}

// Re-span around the best vertex with uniform angle offsets; the best value
// is kept as a vertex so the kick can never lose ground.
inline void plateau_kick(Tracker& trk, Rng& rng, std::vector<std::vector<double>>& pts,
                         std::vector<double>& fv, size_t ib) {
  const std::vector<double> base = pts[ib];
  const double fb = fv[ib];
  constexpr double pi = 3.14159265358979323846;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i == ib) continue;
    pts[i] = base;
    for (double& v : pts[i]) v += rng.uniform(-pi, pi);
  }
  fv.assign(pts.size(), fb);
  for (size_t i = 0; i < pts.size(); ++i)
    if (i != ib) fv[i] = trk.eval(pts[i]);
}

inline bool cobyla_like(Tracker& trk, Rng& rng, const std::vector<double>& x0, double step,
                        double tol) {
  const int n = static_cast<int>(x0.size());
  std::vector<std::vector<double>> pts = spanning_simplex(x0, step);
  std::vector<double> fv(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) fv[i] = trk.eval(pts[i]);

  double rho = step;
  const double rho_end = std::max(tol, 1e-13);
  while (true) {
    int ib = 0, iw = 0;
    for (size_t i = 1; i < pts.size(); ++i) {
      if (fv[i] < fv[ib]) ib = static_cast<int>(i);
      if (fv[i] > fv[iw]) iw = static_cast<int>(i);
    }
    double spread = 0.0;
    for (const double v : fv) spread = std::max(spread, std::abs(v - fv[ib]));
    if (spread <= tol * (std::abs(fv[ib]) + tol) &&
        simplex_width(pts, static_cast<size_t>(ib)) > kPlateauWidth) {
      plateau_kick(trk, rng, pts, fv, static_cast<size_t>(ib));
      rho = step;
      continue;
    }

    Eigen::MatrixXd s(n, n);
    Eigen::VectorXd df(n);
    int row = 0;
    for (int i = 0; i <= n; ++i) {
      if (i == ib) continue;
      for (int c = 0; c < n; ++c) s(row, c) = pts[i][c] - pts[ib][c];
      df(row) = fv[i] - fv[ib];
      ++row;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(s);
    Eigen::VectorXd g = lu.solve(df);
    const bool solvable = (s * g - df).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + df.cwiseAbs().maxCoeff());
    const double gn = solvable ? g.norm() : 0.0;

    bool improved = false;
    if (gn > 1e-14) {
      std::vector<double> xp = pts[ib];
      for (int c = 0; c < n; ++c) xp[c] -= rho * g(c) / gn;
      const double fp = trk.eval(xp);
      if (fp < fv[ib] - 1e-15 * (1.0 + std::abs(fv[ib]))) {
        pts[iw] = std::move(xp);
        fv[iw] = fp;
        improved = true;
      }
    }
    if (!improved) {
      rho *= 0.35;
      if (rho < rho_end) return true;
      const std::vector<double> base = pts[ib];
      const double fb = fv[ib];
      pts = spanning_simplex(base, rho);
      fv.assign(pts.size(), fb);
      for (size_t i = 1; i < pts.size(); ++i) fv[i] = trk.eval(pts[i]);
    }
  }
}

inline bool nelder_mead(Tracker& trk, Rng& rng, const std::vector<double>& x0, double step,
                        double tol) {
  const int n = static_cast<int>(x0.size());
  std::vector<std::vector<double>> pts = spanning_simplex(x0, step);
  std::vector<double> fv(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) fv[i] = trk.eval(pts[i]);

  std::vector<size_t> ord(pts.size());
  auto resort = [&] {
    for (size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::stable_sort(ord.begin(), ord.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
  };
  auto blend = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> x(c.size());
    for (size_t k = 0; k < c.size(); ++k) x[k] = c[k] + t * (c[k] - w[k]);
    return x;
  };

  while (true) {
    resort();
    const size_t ib = ord.front(), iw = ord.back();
    double spread = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) spread = std::max(spread, std::abs(fv[i] - fv[ib]));
    if (spread <= tol * (std::abs(fv[ib]) + tol)) {
      if (simplex_width(pts, ib) <= kPlateauWidth) return true;
      plateau_kick(trk, rng, pts, fv, ib);
      continue;
    }

    std::vector<double> c(static_cast<size_t>(n), 0.0);
    for (size_t i = 0; i < pts.size(); ++i) {
      if (i == iw) continue;
      for (int k = 0; k < n; ++k) c[k] += pts[i][k] / n;
    }

    const std::vector<double> xr = blend(c, pts[iw], 1.0);
    const double fr = trk.eval(xr);
    if (fr < fv[ord[0]]) {
      const std::vector<double> xe = blend(c, pts[iw], 2.0);
      const double fe = trk.eval(xe);
      if (fe < fr) {
        pts[iw] = xe;
        fv[iw] = fe;
      } else {
        pts[iw] = xr;
        fv[iw] = fr;
      }
      continue;
    }
    if (fr < fv[ord[ord.size() - 2]]) {
      pts[iw] = xr;
      fv[iw] = fr;
      continue;
    }
    const bool outside = fr < fv[iw];
    const std::vector<double> xc = blend(c, pts[iw], outside ? 0.5 : -0.5);
    const double fc = trk.eval(xc);
    if (fc < (outside ? fr : fv[iw])) {
      pts[iw] = xc;
      fv[iw] = fc;
      continue;
    }
    for (size_t i = 0; i < pts.size(); ++i) {  // shrink toward best
      if (i == ib) continue;
      for (int k = 0; k < n; ++k) pts[i][k] = pts[ib][k] + 0.5 * (pts[i][k] - pts[ib][k]);
      fv[i] = trk.eval(pts[i]);
    }
  }
}

}  // namespace detail

inline MinimizeResult minimize(const Objective& f, const std::vector<double>& x0,
                               const OptimizerConfig& cfg,
                               std::function<void(const std::vector<double>&, double)> on_best = {}) {
  if (x0.empty()) throw std::invalid_argument("minimize: empty start point");
  if (cfg.max_iterations < 1) throw std::invalid_argument("minimize: max_iterations >= 1");
  if (!(cfg.initial_step > 0.0)) throw std::invalid_argument("minimize: initial_step > 0");

  detail::Tracker trk{f, cfg.max_iterations, nullptr, 0, std::numeric_limits<double>::infinity(),
                      {}, {}, false};
  if (on_best) trk.on_best = &on_best;

  // Plateau-kick stream: pinned by the seed and the start point's bits.
  std::uint64_t h = cfg.seed;
  for (const double v : x0) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = splitmix64(h) ^ bits;
  }
  Rng rng(stream_seed(h, 0x706c6174ULL));

  bool converged = false;
  try {
    trk.eval(x0);  // the start always counts; result can never be worse
    converged = cfg.method == OptimizerConfig::Method::cobyla_like
                    ? detail::cobyla_like(trk, rng, x0, cfg.initial_step, cfg.convergence_tol)
                    : detail::nelder_mead(trk, rng, x0, cfg.initial_step, cfg.convergence_tol);
  } catch (const detail::BudgetExhausted&) {
  }

  MinimizeResult r;
  r.x = trk.bestx;
  r.fx = trk.best;
  r.evaluations = trk.evals;
  r.converged = converged;
  r.budget_exhausted = trk.exhausted;
  r.trace = std::move(trk.trace);
  return r;
}

// Two-level runs: the objective's evaluation embeds the analytic inner
// problem; `on_best` observes every strict improvement of the outer search.
inline MinimizeResult nested_optimize(
    const Objective& outer, const std::vector<double>& x0, const OptimizerConfig& cfg,
    std::function<void(const std::vector<double>&, double)> on_best) {
  return minimize(outer, x0, cfg, std::move(on_best));
}

struct MultiStartResult {
  MinimizeResult best;
  std::vector<MinimizeResult> runs;
  std::vector<double> mean_trace;  // best-so-far averaged across runs
  std::vector<double> std_trace;   // sample standard deviation (n-1)
};

// `restarts` runs with per-run deterministic streams of `seed`. Entries of
// `seeded_starts` are used first; remaining starts are drawn uniformly from
// [0, 2 pi)^dim. Each run gets the full evaluation budget.
inline MultiStartResult multi_start(const Objective& f, int dim, const OptimizerConfig& cfg,
                                    const std::vector<std::vector<double>>& seeded_starts = {}) {
  if (dim < 1) throw std::invalid_argument("multi_start: dim >= 1");
  const int runs = std::max({cfg.restarts, static_cast<int>(seeded_starts.size()), 1});

  MultiStartResult out;
  out.runs.reserve(static_cast<size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    std::vector<double> x0;
    if (r < static_cast<int>(seeded_starts.size())) {
      x0 = seeded_starts[static_cast<size_t>(r)];
      if (static_cast<int>(x0.size()) != dim)
        throw std::invalid_argument("multi_start: seeded start has wrong dimension");
    } else {
      Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(r)));
      x0.resize(static_cast<size_t>(dim));
      for (double& v : x0) v = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    }
    out.runs.push_back(minimize(f, x0, cfg));
  }

  size_t best = 0, longest = 0;
  for (size_t r = 0; r < out.runs.size(); ++r) {
    if (out.runs[r].fx < out.runs[best].fx) best = r;
    longest = std::max(longest, out.runs[r].trace.size());
  }
  out.best = out.runs[best];

  out.mean_trace.assign(longest, 0.0);
  out.std_trace.assign(longest, 0.0);
  for (size_t t = 0; t < longest; ++t) {
    double m = 0.0;
    for (const MinimizeResult& run : out.runs)
      m += t < run.trace.size() ? run.trace[t] : run.trace.back();
    m /= static_cast<double>(out.runs.size());
    double v = 0.0;
    for (const MinimizeResult& run : out.runs) {
      const double x = (t < run.trace.size() ? run.trace[t] : run.trace.back()) - m;
      v += x * x;
    }
    out.mean_trace[t] = m;
    out.std_trace[t] = out.runs.size() > 1 ? std::sqrt(v / (out.runs.size() - 1.0)) : 0.0;
  }
  return out;
}

}  // namespace pathweave::vqo
