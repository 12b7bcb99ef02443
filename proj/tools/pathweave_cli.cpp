// Command-line front end: runs the coherent-multipath protocols, parameter
// sweeps, closed-form reference grids, and topology validation, emitting
// deterministic CSV or JSON for plotting.
//
// Exit codes: 0 success, 2 validation findings (bad files, bad grids,
// topology findings), 3 numeric failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pathweave/netgraph.hpp"
#include "pathweave/oracle.hpp"
#include "pathweave/topology_io.hpp"

using namespace pathweave;

namespace {

// ---- formatting -------------------------------------------------------------

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\r\n";
}

json ratio_json(const Ratio& r) {
  if (r.saturated) return json("inf");
  return json(r.value);
}

// ---- output -----------------------------------------------------------------

// Atomic write: stage the bytes next to the target, then rename over it.
void write_bytes(const std::string& out_path, const std::string& bytes) {
  if (out_path.empty()) {
    std::cout << bytes;
    return;
  }
  const std::filesystem::path target(out_path);
  const std::filesystem::path tmp(out_path + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << bytes;
    if (!f.good()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---- small parsers ----------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

// "lo:hi:step", inclusive of hi up to a half-step slack; lo > hi gives an
// empty grid (header-only output).
std::vector<double> parse_grid(const std::string& spec) {
  const std::vector<std::string> parts = split(spec, ':');
  if (parts.size() != 3) throw std::invalid_argument("grid must be lo:hi:step, got '" + spec + "'");
  const double lo = parse_double(parts[0]);
  const double hi = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
  std::vector<double> g;
  for (int k = 0;; ++k) {
    const double v = lo + step * k;
    if (v > hi + 0.5 * step) break;
    g.push_back(std::min(v, hi));
  }
  return g;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& p : split(s, ',')) out.push_back(parse_double(p));
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const std::string& p : split(s, ',')) {
    const double v = parse_double(p);
    out.push_back(static_cast<int>(v));
    if (v != out.back()) throw std::invalid_argument("not an integer: '" + p + "'");
  }
  return out;
}

Variant parse_variant_one(const std::string& s) {
  if (s == "deterministic" || s == "det") return Variant::deterministic;
  if (s == "probabilistic" || s == "prob") return Variant::probabilistic;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

std::vector<Variant> parse_variants(const std::string& s) {
  if (s == "both") return {Variant::deterministic, Variant::probabilistic};
  return {parse_variant_one(s)};
}

const char* variant_name(Variant v) {
  return v == Variant::deterministic ? "deterministic" : "probabilistic";
}

// ---- optimizer options --------------------------------------------------------

struct OptFlags {
  int max_iter = 400;
  int restarts = 3;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string method = "nelder-mead";
  double step = 0.5;
  double tol = 1e-8;

  vqo::OptimizerConfig config() const {
    vqo::OptimizerConfig cfg;
    cfg.max_iterations = max_iter;
    cfg.restarts = restarts;
    cfg.seed = seed;
    cfg.initial_step = step;
    cfg.convergence_tol = tol;
    if (method == "nelder-mead" || method == "nm")
      cfg.method = vqo::OptimizerConfig::Method::nelder_mead;
    else if (method == "cobyla" || method == "cobyla-like")
      cfg.method = vqo::OptimizerConfig::Method::cobyla_like;
    else
      throw std::invalid_argument("unknown method '" + method + "'");
    return cfg;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--max-iter", max_iter, "cost evaluations per optimizer run");
    cmd->add_option("--restarts", restarts, "random restarts after the balanced start");
    cmd->add_option("--seed", seed, "random-restart seed");
    cmd->add_option("--method", method, "nelder-mead | cobyla");
    cmd->add_option("--step", step, "initial simplex / trust-region step");
    cmd->add_option("--tol", tol, "convergence tolerance");
  }

  // Randomized commands without an explicit seed run at seed 0 and say so.
  void announce_seed(const CLI::App* cmd) const {
    if (cmd->count("--seed") == 0) std::cerr << "seed: 0 (default)\n";
  }
};

// ---- worker pool ---------------------------------------------------------------

int thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("PATHWEAVE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return static_cast<int>(hw);
}

// Runs f(i) for i in [0, n) on up to thread_cap() workers. Tasks must not
// touch shared mutable state; results land in caller-owned slots.
template <class F>
void parallel_for(int n, F f) {
  const int workers = std::min(n, thread_cap());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    });
  for (std::thread& t : pool) t.join();
}

// ---- oracle grids ----------------------------------------------------------------

int run_oracle(const std::string& kinds_arg, const std::string& d_arg, const std::string& f0_arg,
               const std::string& alpha0_arg, const std::string& out, const std::string& format) {
  std::vector<oracle::Kind> kinds;
  for (const std::string& name : split(kinds_arg, ',')) {
    if (name == "dephasing") kinds.push_back(oracle::Kind::dephasing);
    else if (name == "depolarizing") kinds.push_back(oracle::Kind::depolarizing);
    else if (name == "amplitude_damping") kinds.push_back(oracle::Kind::amplitude_damping);
    else throw std::invalid_argument("unknown kind '" + name + "'");
  }
  const std::vector<int> ds = parse_int_list(d_arg);
  const std::vector<double> f0s = parse_grid(f0_arg);
  const std::vector<double> a0s = parse_grid(alpha0_arg);

  std::string csv = csv_line({"kind", "d", "f0", "alpha0", "p_succ", "r_prob", "r_det"});
  json rows = json::array();
  for (oracle::Kind kind : kinds)
    for (int d : ds)
      for (double f0 : f0s)
        for (double a0 : a0s) {
          const oracle::Query q{kind, d, f0, a0, 0.0};
          const oracle::Result det = oracle::det_identical(q);
          const oracle::Result prob = oracle::prob_identical(q);
          csv += csv_line({oracle::kind_name(kind), std::to_string(d), num(f0), num(a0),
                           num(prob.p_succ), num(prob.r), num(det.r)});
          rows.push_back({{"kind", oracle::kind_name(kind)},
                          {"d", d},
                          {"f0", f0},
                          {"alpha0", a0},
                          {"p_succ", prob.p_succ},
                          {"r_prob", prob.r},
                          {"r_det", det.r}});
        }
  if (format == "csv") {
    write_bytes(out, csv);
  } else {
    json j;
    j["schema"] = 1;
    j["command"] = "oracle";
    j["rows"] = std::move(rows);
    write_bytes(out, dump_json(j));
  }
  return 0;
}

// ---- two-node runs ------------------------------------------------------------------

struct VariantRun {
  Variant variant = Variant::deterministic;
  double fidelity = 0.0, p_succ = 0.0, cost = 0.0;
  Ratio ratio;
  int evaluations = 0;
  std::vector<double> uc1_params, uc2_params;
  std::vector<double> trace;
};

VariantRun pick_scores(const TwoNodeEvaluation& ev, Variant v) {
  VariantRun r;
  r.variant = v;
  if (v == Variant::deterministic) {
    r.fidelity = ev.det_fidelity;
    r.p_succ = ev.det_p_succ;
    r.cost = ev.det_cost;
    r.ratio = ev.det_ratio;
  } else {
    r.fidelity = ev.prob_fidelity;
    r.p_succ = ev.prob_p_succ;
    r.cost = ev.prob_cost;
    r.ratio = ev.prob_ratio;
  }
  return r;
}

json variant_run_json(const VariantRun& r, bool optimized) {
  json j;
  j["fidelity"] = r.fidelity;
  j["p_succ"] = r.p_succ;
  j["ratio"] = ratio_json(r.ratio);
  j["cost"] = r.cost;
  j["evaluations"] = r.evaluations;
  j["uc1_params"] = r.uc1_params;
  j["uc2_params"] = r.uc2_params;
  if (optimized) j["trace"] = r.trace;
  return j;
}

TwoNodeSetup setup_from_specs(const std::vector<SegmentSpec>& specs, double sigma, int points,
                              double weight) {
  TwoNodeSetup setup;
  for (const SegmentSpec& s : specs) setup.channels.push_back(build_channel(s));
  setup.noise.sigma = sigma;
  setup.noise.points_per_dim = points;
  setup.weight = weight;
  return setup;
}

int run_two_node(const std::vector<SegmentSpec>& specs, const std::string& variant_arg,
                 double sigma, int points, double weight, const OptFlags& opt,
                 const std::optional<std::vector<double>>& params, const std::string& out,
                 const std::string& format) {
  const TwoNodeSetup setup = setup_from_specs(specs, sigma, points, weight);
  const int d = static_cast<int>(setup.channels.size());
  const double f0 = baseline_fidelity(setup.channels);

  std::vector<VariantRun> runs;
  if (params) {
    const auto [uc1, uc2] = unpack_two_node_params(d, *params);
    const TwoNodeEvaluation ev = evaluate_two_node(setup, uc1, uc2);
    for (Variant v : parse_variants(variant_arg)) {
      VariantRun r = pick_scores(ev, v);
      r.uc1_params.assign(params->begin(), params->begin() + (d - 1));
      r.uc2_params.assign(params->begin() + (d - 1), params->end());
      runs.push_back(std::move(r));
    }
  } else {
    const vqo::OptimizerConfig cfg = opt.config();
    for (Variant v : parse_variants(variant_arg)) {
      const TwoNodeOptimum best = optimize_two_node(setup, v, cfg);
      VariantRun r = pick_scores(best.eval, v);
      r.evaluations = best.search.best.evaluations;
      r.uc1_params = best.uc1_params;
      r.uc2_params = best.uc2_params;
      r.trace = best.search.best.trace;
      runs.push_back(std::move(r));
    }
  }

  if (format == "csv") {
    std::string csv = csv_line(
        {"variant", "d", "f0", "sigma", "fidelity", "p_succ", "ratio", "cost", "evaluations"});
    for (const VariantRun& r : runs)
      csv += csv_line({variant_name(r.variant), std::to_string(d), num(f0), num(sigma),
                       num(r.fidelity), num(r.p_succ), num(r.ratio.value), num(r.cost),
                       std::to_string(r.evaluations)});
    write_bytes(out, csv);
  } else {
    json j;
    j["schema"] = 1;
    j["command"] = "two-node";
    j["d"] = d;
    j["f0"] = f0;
    j["sigma"] = sigma;
    j["weight"] = weight;
    j["results"] = json::object();
    for (const VariantRun& r : runs)
      j["results"][variant_name(r.variant)] = variant_run_json(r, !params.has_value());
    write_bytes(out, dump_json(j));
  }
  return 0;
}

// ---- sweeps --------------------------------------------------------------------------

struct SweepPoint {
  std::vector<double> coords;  // axis values, one per column
  double f0 = 0.0;
  std::optional<VariantRun> det, prob;
};

// Rebuild a channel list with every noisy segment moved to the CJ fidelity
// `f0` appropriate for its kind (vacuum specs are kept).
std::vector<SegmentSpec> specs_at_fidelities(const std::vector<SegmentSpec>& base,
                                             const std::vector<double>& f0s) {
  std::vector<SegmentSpec> out = base;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i].ideal) continue;
    oracle::Kind k;
    switch (out[i].kind) {
      case NoiseKind::dephasing: k = oracle::Kind::dephasing; break;
      case NoiseKind::depolarizing: k = oracle::Kind::depolarizing; break;
      default: k = oracle::Kind::amplitude_damping; break;
    }
    out[i].p0 = oracle::p0_from_f0(k, f0s[i]);
  }
  return out;
}

int run_sweep(const std::vector<SegmentSpec>& specs, const std::string& axis,
              const std::string& grid_arg, const std::string& variant_arg, double sigma,
              int points, double weight, const OptFlags& opt, const std::string& out,
              const std::string& format) {
  const std::vector<Variant> variants = parse_variants(variant_arg);
  const bool want_det = std::count(variants.begin(), variants.end(), Variant::deterministic) > 0;
  const bool want_prob = std::count(variants.begin(), variants.end(), Variant::probabilistic) > 0;
  const vqo::OptimizerConfig cfg = opt.config();
  const int d = static_cast<int>(specs.size());

  std::vector<std::string> coord_names;
  std::vector<std::vector<double>> coord_grid;  // one coordinate tuple per row
  if (axis == "f0") {
    const std::vector<double> g =
        parse_grid(grid_arg.empty() ? std::string("0.8:0.95:0.05") : grid_arg);
    int noisy = 0;
    for (const SegmentSpec& s : specs)
      if (!s.ideal) ++noisy;
    if (noisy == 0) throw std::invalid_argument("f0 sweep needs at least one noisy channel");
    for (int i = 0; i < d; ++i)
      if (!specs[static_cast<size_t>(i)].ideal) coord_names.push_back("f0_" + std::to_string(i));
    // row-major cartesian product, first noisy channel outermost
    std::vector<std::vector<double>> grid = {{}};
    for (int k = 0; k < noisy; ++k) {
      std::vector<std::vector<double>> nextg;
      for (const std::vector<double>& row : grid)
        for (double v : g) {
          std::vector<double> r = row;
          r.push_back(v);
          nextg.push_back(std::move(r));
        }
      grid = std::move(nextg);
    }
    coord_grid = std::move(grid);
  } else if (axis == "sigma") {
    coord_names = {"sigma"};
    for (double v : parse_grid(grid_arg.empty() ? std::string("0:0.2:0.05") : grid_arg))
      coord_grid.push_back({v});
  } else {
    throw std::invalid_argument("unknown sweep axis '" + axis + "' (want f0 or sigma)");
  }

  const int n = static_cast<int>(coord_grid.size());
  std::vector<SweepPoint> results(static_cast<size_t>(n));
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mu;

  parallel_for(n, [&](int i) {
    if (failed.load()) return;
    try {
      const std::vector<double>& coords = coord_grid[static_cast<size_t>(i)];
      SweepPoint pt;
      pt.coords = coords;
      std::vector<SegmentSpec> cur = specs;
      double sg = sigma;
      if (axis == "f0") {
        std::vector<double> per_channel(static_cast<size_t>(d), 1.0);
        size_t kk = 0;
        for (int c = 0; c < d; ++c)
          if (!specs[static_cast<size_t>(c)].ideal) per_channel[static_cast<size_t>(c)] = coords[kk++];
        cur = specs_at_fidelities(specs, per_channel);
      } else {
        sg = coords[0];
      }
      const TwoNodeSetup setup = setup_from_specs(cur, sg, points, weight);
      pt.f0 = baseline_fidelity(setup.channels);
      if (want_det) {
        const TwoNodeOptimum best = optimize_two_node(setup, Variant::deterministic, cfg);
        pt.det = pick_scores(best.eval, Variant::deterministic);
        pt.det->evaluations = best.search.best.evaluations;
      }
      if (want_prob) {
        const TwoNodeOptimum best = optimize_two_node(setup, Variant::probabilistic, cfg);
        pt.prob = pick_scores(best.eval, Variant::probabilistic);
        pt.prob->evaluations = best.search.best.evaluations;
      }
      results[static_cast<size_t>(i)] = std::move(pt);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!failed.exchange(true)) first_error = e.what();
    }
  });
  if (failed.load()) throw std::runtime_error("sweep point failed: " + first_error);

  std::vector<std::string> header = coord_names;
  header.push_back("f0_best");
  if (want_det) {
    header.insert(header.end(), {"det_fidelity", "det_p_succ", "r_det"});
  }
  if (want_prob) {
    header.insert(header.end(), {"prob_fidelity", "prob_p_succ", "r_prob"});
  }

  std::string csv = csv_line(header);
  json rows = json::array();
  for (const SweepPoint& pt : results) {
    std::vector<std::string> fields;
    json row;
    for (size_t k = 0; k < coord_names.size(); ++k) {
      fields.push_back(num(pt.coords[k]));
      row[coord_names[k]] = pt.coords[k];
    }
    fields.push_back(num(pt.f0));
    row["f0_best"] = pt.f0;
    if (want_det) {
      fields.insert(fields.end(),
                    {num(pt.det->fidelity), num(pt.det->p_succ), num(pt.det->ratio.value)});
      row["det_fidelity"] = pt.det->fidelity;
      row["det_p_succ"] = pt.det->p_succ;
      row["r_det"] = ratio_json(pt.det->ratio);
    }
    if (want_prob) {
      fields.insert(fields.end(),
                    {num(pt.prob->fidelity), num(pt.prob->p_succ), num(pt.prob->ratio.value)});
      row["prob_fidelity"] = pt.prob->fidelity;
      row["prob_p_succ"] = pt.prob->p_succ;
      row["r_prob"] = ratio_json(pt.prob->ratio);
    }
    csv += csv_line(fields);
    rows.push_back(std::move(row));
  }

  if (format == "csv") {
    write_bytes(out, csv);
  } else {
    json j;
    j["schema"] = 1;
    j["command"] = "sweep";
    j["axis"] = axis;
    j["rows"] = std::move(rows);
    write_bytes(out, dump_json(j));
  }
  return 0;
}

// ---- multi-node ------------------------------------------------------------------------

int report_findings(const std::vector<Finding>& fs) {
  for (const Finding& f : fs) {
    std::cerr << "finding " << f.code;
    if (f.boundary >= 0) std::cerr << " boundary=" << f.boundary;
    if (f.stage >= 0) std::cerr << " stage=" << f.stage;
    if (f.slot >= 0) std::cerr << " slot=" << f.slot;
    std::cerr << ": " << f.message << "\n";
  }
  return 2;
}

json snapshots_json(const std::vector<Snapshot>& snaps) {
  json arr = json::array();
  for (const Snapshot& s : snaps)
    arr.push_back({{"stage", s.stage},
                   {"post_transmit", s.post_transmit},
                   {"trace", s.trace},
                   {"coherence", s.coherence},
                   {"purity", s.purity}});
  return arr;
}

int run_multi_node(const std::string& topology_path, const std::string& variant_arg,
                   const std::string& scheme_arg, double sigma, int points, double weight,
                   const OptFlags& opt, const std::optional<std::vector<double>>& params,
                   bool want_snapshots, const std::string& out, const std::string& format) {
  if (want_snapshots && format == "csv")
    throw std::invalid_argument("--snapshots requires --format json");
  NetworkSetup setup;
  setup.topology = load_topology(topology_path);
  setup.noise.sigma = sigma;
  setup.noise.points_per_dim = points;
  setup.weight = weight;
  const std::vector<Finding> fs = validate_topology(setup.topology);
  if (!fs.empty()) return report_findings(fs);

  ParamScheme scheme;
  if (scheme_arg == "minimal") scheme = ParamScheme::minimal;
  else if (scheme_arg == "full") scheme = ParamScheme::full;
  else throw std::invalid_argument("unknown scheme '" + scheme_arg + "'");

  struct Row {
    Variant variant;
    NetworkEvaluation eval;
    std::vector<double> params;
    int evaluations = 0;
    std::vector<double> trace;
  };
  std::vector<Row> rows;
  for (Variant v : parse_variants(variant_arg)) {
    Row row;
    row.variant = v;
    if (params) {
      row.eval = evaluate_network(setup, *params, scheme, v, want_snapshots);
      row.params = *params;
    } else {
      const NetworkOptimum best =
          optimize_network(setup, scheme, v, opt.config(), want_snapshots);
      row.eval = best.eval;
      row.params = best.search.best.x;
      row.evaluations = best.search.best.evaluations;
      row.trace = best.search.best.trace;
    }
    rows.push_back(std::move(row));
  }

  if (format == "csv") {
    std::string csv = csv_line({"variant", "scheme", "f0", "fidelity", "p_succ", "ratio", "cost",
                                "evaluations"});
    for (const Row& r : rows)
      csv += csv_line({variant_name(r.variant), scheme_arg, num(r.eval.f0),
                       num(r.eval.report.fidelity), num(r.eval.report.p_succ),
                       num(r.eval.ratio.value), num(r.eval.cost), std::to_string(r.evaluations)});
    write_bytes(out, csv);
  } else {
    json j;
    j["schema"] = 1;
    j["command"] = "multi-node";
    j["scheme"] = scheme_arg;
    j["f0"] = rows.front().eval.f0;
    j["best_path"] = rows.front().eval.best_path;
    j["results"] = json::object();
    for (const Row& r : rows) {
      json jr;
      jr["fidelity"] = r.eval.report.fidelity;
      jr["p_succ"] = r.eval.report.p_succ;
      jr["ratio"] = ratio_json(r.eval.ratio);
      jr["cost"] = r.eval.cost;
      jr["evaluations"] = r.evaluations;
      jr["params"] = r.params;
      if (!params) jr["trace"] = r.trace;
      if (want_snapshots) jr["snapshots"] = snapshots_json(r.eval.snapshots);
      j["results"][variant_name(r.variant)] = std::move(jr);
    }
    write_bytes(out, dump_json(j));
  }
  return 0;
}

int run_validate(const std::string& topology_path) {
  const NetworkTopology t = load_topology(topology_path);
  const std::vector<Finding> fs = validate_topology(t);
  if (!fs.empty()) return report_findings(fs);
  std::cout << "ok: " << t.stages.size() << " stages\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coherent multipath transmission: protocols, sweeps, reference grids"};
  app.require_subcommand(1);

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "closed-form reference grid");
  std::string o_kinds = "dephasing,depolarizing,amplitude_damping";
  std::string o_d = "2,3,4";
  std::string o_f0 = "0.8:0.95:0.05";
  std::string o_a0 = "0:1:0.25";
  std::string o_out, o_format = "csv";
  oracle_cmd->add_option("--kind", o_kinds, "comma list of channel kinds");
  oracle_cmd->add_option("--d", o_d, "comma list of path counts");
  oracle_cmd->add_option("--f0", o_f0, "grid lo:hi:step of single-link fidelities");
  oracle_cmd->add_option("--alpha0", o_a0, "grid lo:hi:step of vacuum amplitudes");
  oracle_cmd->add_option("--out", o_out, "output path (default stdout)");
  oracle_cmd->add_option("--format", o_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  // two-node
  auto* two_cmd = app.add_subcommand("two-node", "optimize or evaluate the two-node protocol");
  std::string t_channels, t_variant = "both", t_params, t_sweep, t_grid, t_out, t_format = "csv";
  double t_sigma = 0.0, t_weight = 0.01;
  int t_points = 21;
  OptFlags t_opt;
  two_cmd->add_option("--channels", t_channels, "channel list JSON file")->required();
  two_cmd->add_option("--variant", t_variant, "deterministic | probabilistic | both");
  two_cmd->add_option("--sigma", t_sigma, "path-angle jitter width");
  two_cmd->add_option("--points", t_points, "quadrature points per fluctuating angle");
  two_cmd->add_option("--weight", t_weight, "cost weight on (1 - p_succ)^2");
  two_cmd->add_option("--params", t_params, "comma list: evaluate at fixed parameters");
  two_cmd->add_option("--sweep", t_sweep, "sweep axis (f0 | sigma) instead of a single run");
  two_cmd->add_option("--grid", t_grid, "sweep grid lo:hi:step");
  two_cmd->add_option("--out", t_out, "output path (default stdout)");
  two_cmd->add_option("--format", t_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  t_opt.add_to(two_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "two-node protocol over a parameter grid");
  std::string s_channels, s_axis = "f0", s_grid, s_variant = "both", s_out, s_format = "csv";
  double s_sigma = 0.0, s_weight = 0.01;
  int s_points = 21;
  OptFlags s_opt;
  sweep_cmd->add_option("--channels", s_channels, "channel list JSON file")->required();
  sweep_cmd->add_option("--axis", s_axis, "f0 | sigma");
  sweep_cmd->add_option("--grid", s_grid, "grid lo:hi:step");
  sweep_cmd->add_option("--variant", s_variant, "deterministic | probabilistic | both");
  sweep_cmd->add_option("--sigma", s_sigma, "jitter width (fixed, for axis f0)");
  sweep_cmd->add_option("--points", s_points, "quadrature points per fluctuating angle");
  sweep_cmd->add_option("--weight", s_weight, "cost weight on (1 - p_succ)^2");
  sweep_cmd->add_option("--out", s_out, "output path (default stdout)");
  sweep_cmd->add_option("--format", s_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  s_opt.add_to(sweep_cmd);

  // multi-node
  auto* multi_cmd = app.add_subcommand("multi-node", "optimize or evaluate a layered network");
  std::string m_topology, m_variant = "deterministic", m_scheme = "minimal", m_params, m_out,
              m_format = "json";
  double m_sigma = 0.0, m_weight = 0.01;
  int m_points = 21;
  bool m_snapshots = false;
  OptFlags m_opt;
  multi_cmd->add_option("--topology", m_topology, "topology JSON file")->required();
  multi_cmd->add_option("--variant", m_variant, "deterministic | probabilistic | both");
  multi_cmd->add_option("--scheme", m_scheme, "minimal | full node parameterization");
  multi_cmd->add_option("--sigma", m_sigma, "path-angle jitter width");
  multi_cmd->add_option("--points", m_points, "quadrature points per fluctuating angle");
  multi_cmd->add_option("--weight", m_weight, "cost weight on (1 - p_succ)^2");
  multi_cmd->add_option("--params", m_params, "comma list: evaluate at fixed parameters");
  multi_cmd->add_flag("--snapshots", m_snapshots, "include per-stage path diagnostics (json)");
  multi_cmd->add_option("--out", m_out, "output path (default stdout)");
  multi_cmd->add_option("--format", m_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  m_opt.add_to(multi_cmd);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check a topology file");
  std::string v_topology;
  validate_cmd->add_option("--topology", v_topology, "topology JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (oracle_cmd->parsed()) return run_oracle(o_kinds, o_d, o_f0, o_a0, o_out, o_format);
    if (two_cmd->parsed()) {
      const std::vector<SegmentSpec> specs = load_channels(t_channels);
      std::optional<std::vector<double>> params;
      if (!t_params.empty()) params = parse_double_list(t_params);
      if (!t_sweep.empty()) {
        t_opt.announce_seed(two_cmd);
        return run_sweep(specs, t_sweep, t_grid, t_variant, t_sigma, t_points, t_weight, t_opt,
                         t_out, t_format);
      }
      if (!params) t_opt.announce_seed(two_cmd);
      return run_two_node(specs, t_variant, t_sigma, t_points, t_weight, t_opt, params, t_out,
                          t_format);
    }
    if (sweep_cmd->parsed()) {
      const std::vector<SegmentSpec> specs = load_channels(s_channels);
      s_opt.announce_seed(sweep_cmd);
      return run_sweep(specs, s_axis, s_grid, s_variant, s_sigma, s_points, s_weight, s_opt,
                       s_out, s_format);
    }
    if (multi_cmd->parsed()) {
      std::optional<std::vector<double>> params;
      if (!m_params.empty()) params = parse_double_list(m_params);
      if (!params) m_opt.announce_seed(multi_cmd);
      return run_multi_node(m_topology, m_variant, m_scheme, m_sigma, m_points, m_weight, m_opt,
                            params, m_snapshots, m_out, m_format);
    }
    if (validate_cmd->parsed()) return run_validate(v_topology);
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
