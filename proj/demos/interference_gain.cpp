// Sweeps the single-link fidelity of two identical dephasing links and prints
// the deterministic infidelity ratio of the equal-split protocol, at several
// comb-jitter levels. Ratios above 1 mean the coherent two-path protocol
// delivers a better half of the entangled pair than the best single link.

#include <cstdio>
#include <vector>

#include "pathweave/oracle.hpp"
#include "pathweave/twonode.hpp"

using namespace pathweave;

int main() {
  const std::vector<double> sigmas = {0.0, 0.05, 0.10, 0.15};
  const std::vector<double> f0s = {0.90, 0.93, 0.96, 0.97, 0.98, 0.99, 0.995};

  std::printf("two identical dephasing links, equal split, deterministic correction\n");
  std::printf("entries: (1 - f0) / (1 - f); > 1 favors the superposed paths\n\n");
  std::printf("%8s", "f0");
  for (double s : sigmas) std::printf("  sigma=%.2f", s);
  std::printf("\n");

  for (double f0 : f0s) {
    const double p0 = oracle::p0_from_f0(oracle::Kind::dephasing, f0);
    std::printf("%8.3f", f0);
    for (double s : sigmas) {
      TwoNodeSetup setup;
      setup.channels = {make_channel(NoiseKind::dephasing, p0, VacuumSpec::scalar(1.0)),
                        make_channel(NoiseKind::dephasing, p0, VacuumSpec::scalar(1.0))};
      setup.noise.sigma = s;
      const auto [uc1, uc2] = unpack_two_node_params(2, balanced_two_node_start(2));
      const TwoNodeEvaluation ev = evaluate_two_node(setup, uc1, uc2);
      std::printf("  %10.4f", ev.det_ratio.value);
    }
    std::printf("\n");
  }

  std::printf("\nperfect combs double the ratio at any f0; jitter caps the gain,\n");
  std::printf("so weaker links tolerate more jitter before the advantage is lost.\n");
  return 0;
}
