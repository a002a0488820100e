#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

// Independent reference implementations used only by the test suite.  Each is
// deliberately naive: correctness over speed, no code shared with the library
// paths under test.

namespace oracles {

// Adaptive Simpson quadrature.
inline double simpson_slice(const std::function<double(double)>& f, double a, double b, double fa,
                            double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_slice(f, a, m, fa, flm, fm);
  const double right = simpson_slice(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson_slice(f, a, b, fa, fm, fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Exact sigma(n,k,i) = 2^{k-n} sum_{j<=i} C(n,j) for n <= 30: the binomial sum
// fits in 53 bits, so ldexp of the integer sum is the exact dyadic rational.
inline double exact_sigma(int n, int k, int i) {
  unsigned long long sum = 0;
  for (int j = 0; j <= i; ++j) {
    unsigned long long c = 1;
    for (int t = 0; t < j; ++t) c = c * static_cast<unsigned long long>(n - t) /
                                    static_cast<unsigned long long>(t + 1);
    sum += c;
  }
  return std::ldexp(static_cast<double>(sum), k - n);
}

inline unsigned long long factorial_u64(int n) {
  unsigned long long f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<unsigned long long>(i);
  return f;
}

// Exhaustively counts decoupling matchings: all (vN)! bijections between
// variable half-edges and constraint half-edges, bundles of size v (the
// finest split, where the closed-form count is exact).  Feasible for vN <= 8.
struct MatchingCount {
  unsigned long long decoupling = 0;
  unsigned long long total = 0;
};

inline MatchingCount enumerate_decoupling(int N, int v) {
  const int m = v * N;
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  MatchingCount out;
  do {
    ++out.total;
    bool ok = true;
    for (int var = 0; var < N && ok; ++var) {
      const int bundle = perm[static_cast<std::size_t>(var * v)] / v;
      for (int j = 1; j < v; ++j)
        if (perm[static_cast<std::size_t>(var * v + j)] / v != bundle) {
          ok = false;
          break;
        }
    }
    if (ok) ++out.decoupling;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace oracles
