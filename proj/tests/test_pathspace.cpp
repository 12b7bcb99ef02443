#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "pathweave/pathspace.hpp"

using namespace pathweave;

namespace {

CMat conj_mat(const CMat& m) {
  CMat r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = std::conj(m(i, j));
  return r;
}

CMat apply_superop(const CMat& s, const CMat& rho) {
  const int d = rho.rows();
  CMat v(d * d, 1);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) v(j * d + i, 0) = rho(i, j);
  const CMat w = s * v;
  CMat out(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) out(i, j) = w(j * d + i, 0);
  return out;
}

CMat random_density(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Cx(u(gen), u(gen));
  CMat rho = a * dagger(a);
  return Cx(1.0 / trace(rho).real()) * rho;
}

}  // namespace

TEST_CASE("minimal chain spreads slot 0 into the equal superposition", "[pathspace]") {
  // d = 2: a single theta = pi/2 half-angle rotation
  const auto th2 = equal_superposition_params(2);
  REQUIRE(th2.size() == 1);
  CHECK(th2[0] == Catch::Approx(0.5 * 3.14159265358979323846).margin(1e-12));

  for (int d : {2, 3, 4, 5}) {
    const CMat u = build_unitary(PathUnitarySpec::minimal(d, equal_superposition_params(d)));
    for (int i = 0; i < d; ++i)
      CHECK(std::abs(u(i, 0) - Cx(1.0 / std::sqrt(static_cast<double>(d)))) < 1e-12);
    CHECK(max_abs_diff(dagger(u) * u, identity(d)) < 1e-12);
  }
}

TEST_CASE("recombination chain collects the equal superposition on the last slot",
          "[pathspace]") {
  for (int d : {2, 3, 4, 5}) {
    const CMat u = build_unitary(PathUnitarySpec::minimal(d, equal_recombination_params(d)));
    // all-positive equal last row ...
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(u(d - 1, j) - Cx(1.0 / std::sqrt(static_cast<double>(d)))) < 1e-12);
    // ... so the equal superposition lands on slot d - 1
    CMat v(d, 1);
    for (int i = 0; i < d; ++i) v(i, 0) = 1.0 / std::sqrt(static_cast<double>(d));
    const CMat w = u * v;
    CHECK(std::abs(w(d - 1, 0) - Cx(1.0)) < 1e-12);
  }
}

TEST_CASE("two-mode entries compose in list order and stay unitary", "[pathspace]") {
  // the half-angle chain factor equals a zero-phase two-mode factor at -theta/2
  const double theta = 0.7;
  const CMat chain = build_unitary(PathUnitarySpec::minimal(2, {theta}));
  const CMat two = build_unitary(
      PathUnitarySpec::two_mode(2, {{0, 1, 0.0, 0.0, 0.0, -0.5 * theta}}));
  CHECK(max_abs_diff(chain, two) < 1e-12);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<TwoModeEntry> entries;
  for (int k = 0; k < 6; ++k)
    entries.push_back({static_cast<int>(gen() % 4), 0, u(gen), u(gen), u(gen), u(gen)});
  for (auto& e : entries) e.n = (e.m + 1 + static_cast<int>(gen() % 3)) % 4;
  const PathUnitarySpec spec = PathUnitarySpec::two_mode(4, entries);
  const CMat w = build_unitary(spec);
  CHECK(max_abs_diff(dagger(w) * w, identity(4)) < 1e-12);

  // list order: applying the first entry's factor first
  const CMat head = build_unitary(PathUnitarySpec::two_mode(4, {entries[0]}));
  const CMat tail = build_unitary(
      PathUnitarySpec::two_mode(4, {entries.begin() + 1, entries.end()}));
  CHECK(max_abs_diff(w, tail * head) < 1e-12);
}

TEST_CASE("rotation ladder structure", "[pathspace]") {
  for (int d : {2, 3, 4, 5}) {
    const auto pairs = rotation_ladder_pairs(d);
    CHECK(static_cast<int>(pairs.size()) == rotation_ladder_param_count(d));
    CHECK(static_cast<int>(pairs.size()) == d * (d - 1) / 2);
    // trailing d - 1 pairs are the ascending chain
    for (int k = 0; k < d - 1; ++k) {
      const auto& p = pairs[pairs.size() - (d - 1) + k];
      CHECK(p.first == k);
      CHECK(p.second == k + 1);
    }
  }

  // zeroed leading angles reduce the ladder to the chain (angle halved and
  // negated to bridge the two conventions)
  const int d = 4;
  const std::vector<double> chain_angles = {0.3, -0.8, 1.1};
  std::vector<double> ladder(static_cast<size_t>(rotation_ladder_param_count(d)), 0.0);
  for (int k = 0; k < d - 1; ++k)
    ladder[ladder.size() - (d - 1) + k] = -0.5 * chain_angles[static_cast<size_t>(k)];
  CHECK(max_abs_diff(build_unitary(rotation_ladder_spec(d, ladder)),
                     build_unitary(PathUnitarySpec::minimal(d, chain_angles))) < 1e-12);

  // random angles give a real orthogonal matrix
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> th(static_cast<size_t>(rotation_ladder_param_count(5)));
  for (double& v : th) v = u(gen);
  const CMat q = build_unitary(rotation_ladder_spec(5, th));
  CHECK(max_abs_diff(dagger(q) * q, identity(5)) < 1e-12);
  for (const Cx& v : q.data()) CHECK(std::abs(v.imag()) < 1e-15);

  CHECK_THROWS_AS(rotation_ladder_spec(3, {0.1}), std::invalid_argument);
}

TEST_CASE("noiseless path channel is conj(U) kron U", "[pathspace]") {
  for (int d : {2, 3, 4}) {
    const PathUnitarySpec spec = PathUnitarySpec::minimal(d, equal_superposition_params(d));
    const CMat u = build_unitary(spec);
    const CMat s = noisy_path_channel(spec, {});
    CHECK(max_abs_diff(s, kron(conj_mat(u), u)) < 1e-12);

    // and acts as rho -> U rho U^dag
    std::mt19937_64 gen(29);
    const CMat rho = random_density(gen, d);
    CHECK(max_abs_diff(apply_superop(s, rho), u * rho * dagger(u)) < 1e-12);
  }
}

TEST_CASE("angle jitter averages to the rotated-frame Y-error channel", "[pathspace]") {
  // exact closed form at d = 2: U0^dag E[U rho U^dag] U0 = (1-q) rho + q Y rho Y
  const CMat y = CMat(2, 2, {0, Cx(0, -1), Cx(0, 1), 0});
  std::mt19937_64 gen(31);
  for (double sigma : {0.05, 0.1, 0.15}) {
    const double q = closed_form_y_error(sigma);
    CHECK(q == Catch::Approx(0.5 * (1.0 - std::exp(-0.5 * sigma * sigma))).margin(1e-16));

    const PathUnitarySpec spec = PathUnitarySpec::minimal(2, {0.7});
    const CMat s = noisy_path_channel(spec, {sigma, 21});
    const CMat u0 = build_unitary(spec);
    const CMat rho = random_density(gen, 2);
    const CMat rotated = dagger(u0) * apply_superop(s, rho) * u0;
    const CMat want = Cx(1.0 - q) * rho + Cx(q) * (y * rho * y);
    CHECK(max_abs_diff(rotated, want) < 1e-12);
  }

  // frozen number: q(0.1) to full precision
  CHECK(closed_form_y_error(0.1) == Catch::Approx(0.0024937604036588).margin(1e-14));

  // the balanced rotation under jitter leaves slot populations (1-q, q) in the
  // rotated frame when fed |0><0|
  const CMat s = noisy_path_channel(PathUnitarySpec::minimal(2, {0.5 * 3.14159265358979323846}),
                                    {0.1, 21});
  const CMat u0 =
      build_unitary(PathUnitarySpec::minimal(2, {0.5 * 3.14159265358979323846}));
  const CMat rho0(2, 2, {1, 0, 0, 0});
  const CMat rot = dagger(u0) * apply_superop(s, rho0) * u0;
  CHECK(rot(0, 0).real() == Catch::Approx(0.997506239596341).margin(1e-12));
  CHECK(rot(1, 1).real() == Catch::Approx(0.002493760403659).margin(1e-12));
}

TEST_CASE("averaged path channel stays completely positive and trace preserving",
          "[pathspace][invariant]") {
  std::mt19937_64 gen(37);
  const PathUnitarySpec spec = PathUnitarySpec::minimal(3, equal_superposition_params(3));
  const CMat s = noisy_path_channel(spec, {0.12, 21});
  for (int trial = 0; trial < 10; ++trial) {
    const CMat rho = random_density(gen, 3);
    const CMat out = apply_superop(s, rho);
    CHECK(std::abs(trace(out) - Cx(1.0)) < 1e-12);
    CHECK(is_hermitian(out, 1e-10));
    for (double lam : eigh(out).values) CHECK(lam > -1e-10);
  }
}

TEST_CASE("grid congruence matches dense conjugation", "[pathspace]") {
  std::mt19937_64 gen(41);
  const int d = 4;
  const CMat rho = random_density(gen, d);
  std::vector<CMat> blocks(static_cast<size_t>(d) * d, CMat(1, 1));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) blocks[static_cast<size_t>(i) * d + j](0, 0) = rho(i, j);

  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> th(3);
  for (double& v : th) v = u(gen);
  const PathUnitarySpec spec = PathUnitarySpec::minimal(d, th);
  grid_apply_unitary(blocks, d, spec);

  const CMat dense = build_unitary(spec) * rho * dagger(build_unitary(spec));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(blocks[static_cast<size_t>(i) * d + j](0, 0) - dense(i, j)) < 1e-12);

  CHECK_THROWS_AS(check_grid(blocks, 3), std::invalid_argument);
}

TEST_CASE("Gauss-Hermite rule", "[pathspace]") {
  const GaussHermite gh = gauss_hermite(21);
  REQUIRE(gh.nodes.size() == 21);
  double wsum = 0.0, m2 = 0.0, m4 = 0.0;
  for (size_t q = 0; q < gh.nodes.size(); ++q) {
    wsum += gh.weights[q];
    m2 += gh.weights[q] * gh.nodes[q] * gh.nodes[q];
    m4 += gh.weights[q] * std::pow(gh.nodes[q], 4);
    if (q > 0) CHECK(gh.nodes[q] > gh.nodes[q - 1]);
  }
  CHECK(wsum == Catch::Approx(1.0).margin(1e-13));
  // moments of exp(-x^2)/sqrt(pi): E[x^2] = 1/2, E[x^4] = 3/4
  CHECK(m2 == Catch::Approx(0.5).margin(1e-12));
  CHECK(m4 == Catch::Approx(0.75).margin(1e-12));

  CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
}

TEST_CASE("specification validation", "[pathspace]") {
  CHECK_THROWS_AS(build_unitary(PathUnitarySpec::minimal(3, {0.1})), std::invalid_argument);
  CHECK_THROWS_AS(build_unitary(PathUnitarySpec::two_mode(2, {{0, 2, 0, 0, 0, 0.1}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_unitary(PathUnitarySpec::two_mode(2, {{1, 1, 0, 0, 0, 0.1}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(equal_superposition_params(0), std::invalid_argument);

  std::vector<CMat> blocks(4, CMat(1, 1));
  const PathUnitarySpec spec = PathUnitarySpec::minimal(2, {0.3});
  CHECK_THROWS_AS(grid_apply_unitary(blocks, 2, spec, {-0.1, 21}), std::invalid_argument);
  CHECK_THROWS_AS(grid_apply_unitary(blocks, 2, spec, {0.1, 20}), std::invalid_argument);
  CHECK_THROWS_AS(grid_apply_unitary(blocks, 3, spec), std::invalid_argument);

  // quadrature budget guard: factor count x points is capped
  std::vector<TwoModeEntry> many(500, TwoModeEntry{0, 1, 0, 0, 0, 0.01});
  CHECK_THROWS_AS(
      grid_apply_unitary(blocks, 2, PathUnitarySpec::two_mode(2, many), {0.1, 21}),
      std::invalid_argument);
}
