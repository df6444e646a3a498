// Tunnelling eigenvalue of the Witten Laplacian for cos 2s on the circle.
// log(lambda) should fall with slope -2 x (Agmon barrier) in T.
#include <torsion_lab/witten1d.hpp>

#include <cmath>
#include <cstdio>

int main() {
  using namespace tlab;
  const Potential f = cosine_potential(2.0);
  std::vector<double> Ts{10, 20, 30, 40};
  DecayFit fit = small_eigenvalue_scan(f, Ts);
  std::printf("barrier %.6f, predicted slope %.6f\n", fit.barrier, fit.predicted);
  for (std::size_t i = 0; i < Ts.size(); ++i)
    if (!fit.branches[i].empty())
      std::printf("T = %5.1f  lambda = %.6e  log = %.4f\n", Ts[i], fit.branches[i][0], std::log(fit.branches[i][0]));
  if (!fit.slope.empty()) std::printf("fitted slope %.6f\n", fit.slope[0]);
}
