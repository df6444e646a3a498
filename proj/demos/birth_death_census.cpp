// Critical points of the deformed birth-death model across the unfolding.
#include <torsion_lab/birth_death.hpp>

#include <cstdio>

int main() {
  using namespace tlab;
  ModelParams base;
  const double d2 = base.delta * base.delta;
  for (double y : {-0.5 * d2, 0.0, 0.5 * d2}) {
    ModelParams p = base;
    p.y = y;
    Census c = find_critical_points(build_profiles(p));
    std::printf("y = %+.3e: %zu critical points\n", y, c.points.size());
    for (const auto& q : c.points)
      std::printf("   index %d  |u| = %.6f  f = %+.6e%s\n", q.morse_index, q.location.norm(), q.value,
                  q.birth_death ? "  (birth-death)" : "");
  }
}
