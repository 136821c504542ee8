// Builds the doubling cone for a few face counts and lets the event-driven
// simulator count the collisions.

#include <cstdio>

#include "hardball/cone_billiard.hpp"

using namespace hardball;

int main() {
  for (int m = 1; m <= 8; ++m) {
    const auto ex = build_right_angle_example<double>(m, 0.1);
    const auto traj = simulate_cone(ex.cone, ex.x0, ex.v0, (1LL << m) + 8, ex.t0);
    std::printf("m = %2d  faces = %2d  collisions = %4zu  expected = %4lld\n", m, ex.cone.faces(),
                traj.events.size(), (1LL << m) - 1);
  }
  return 0;
}
