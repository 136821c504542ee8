// Runs the full pipeline for a small ball count and prints the report.

#include <cstdio>

#include "hardball/simulator.hpp"

using namespace hardball;

int main() {
  const VerifyReport rep = verify_exponential<double>(4);
  std::printf("n = %d  predicted = %lld  observed = %lld  bound = %lld  match = %s\n", rep.n,
              rep.n_predicted, rep.observed, rep.bound, rep.match ? "yes" : "no");
  std::printf("lambda_scale = %g  lambda_ratio = %g  attempts = %d  %.3f s\n", rep.lambda_scale,
              rep.lambda_ratio, rep.attempts, rep.wall_seconds);
  if (!rep.failure.empty()) std::printf("failure: %s\n", rep.failure.c_str());
  return rep.match ? 0 : 1;
}
