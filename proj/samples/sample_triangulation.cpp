// Triangulation of one point seen by three cameras on a line segment.

#include <cstdio>
#include <random>

#include "stls/stls.hpp"

int main() {
  auto spec = stls::default_spec("triangulation");
  spec.layout = "line";
  std::mt19937_64 rng(7);
  const auto instance = stls::sample_instance(spec, {4, 3}, 0.1, rng);

  const auto sol = stls::solve_stls(instance);
  std::printf("observed  :");
  for (Eigen::Index i = 0; i < instance.theta.size(); ++i) std::printf(" % .4f", instance.theta(i));
  std::printf("\ncorrected :");
  for (Eigen::Index i = 0; i < sol.u_star.size(); ++i) std::printf(" % .4f", sol.u_star(i));
  std::printf("\nobjective %.6e, certified %s, rank-one ratio %.2e\n", sol.objective, sol.certified ? "yes" : "no",
              sol.rank_one_ratio);
  return sol.certified ? 0 : 2;
}
