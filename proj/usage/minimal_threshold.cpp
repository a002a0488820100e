// Minimal analytical-threshold walkthrough: one component code, three methods.
//
//   weight-pulling  - closed-form upper bound v * sum_i rho_i a_i / n_i
//   potential       - asymptotic (L, w -> infinity) threshold via the
//                     single-system potential function
//   recursion       - finite-(L, w) coupled vector recursion
//
// The three land in the order recursion <= potential <= weight-pulling.

#include <cstdio>

#include <scsc/potential.hpp>
#include <scsc/recursion.hpp>

int main() {
  using namespace scsc;

  // Shortened BCH-like code (n=510, k=490, d=11), degree-2 variables.
  EnsembleSpec spec;
  spec.components.push_back({ComponentCodeSpec{510, 490, 11}, 1});
  spec.v = 2;
  spec.w = 2;

  const double rate = design_rate_asymptotic(spec);
  std::printf("code           : (%d, %d, %d)\n", 510, 490, 11);
  std::printf("design rate    : %.6f\n", rate);

  const TailSpec tail = analysis_tail(spec, Channel::BEC);

  const double wp = weight_pulling(tail, spec.v);
  std::printf("weight-pulling : %.10f\n", wp);

  const ThresholdResult pot = potential_threshold(PotentialSpec{tail, spec.v});
  std::printf("potential      : %.10f\n", pot.p_star);

  // Finite coupling: w = 2, L = 50 spatial positions.
  const ThresholdResult rec = recursion_threshold(tail, spec.v, /*L=*/50, /*w=*/2,
                                                  /*tol_p=*/1e-4);
  std::printf("recursion      : %.10f  (L=50, w=2, +/- %.1e)\n", rec.p_star,
              rec.tolerance);

  // Multiplicative gap to BEC capacity C = 1 - p at the recursion threshold.
  std::printf("gap to capacity: %.6f\n", 1.0 - rate / (1.0 - rec.p_star));
  return 0;
}
