#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scsc/numerics.hpp"

// Coupled vector recursion y^q = A^T f(A g(y^{q-1}), p) over a spatial window
// of L variable indices and L+w-1 constraint indices, with f(x,p) = p x^{v-1}
// and g the tail function selected by a TailSpec.  Provides the banded
// coupling matrix, single steps, full runs with stall classification, the
// threshold bisection, and the uncoupled single-system fixed point.

namespace scsc {

struct RecursionSpec {
  TailSpec tail;
  int v = 2;
  int L = 200;
  int w = 2;
  double p = 0.0;

  void validate_or_throw() const {
    tail.validate();
    if (L < 1) throw std::invalid_argument("RecursionSpec: require L >= 1");
    if (w < 1) throw std::invalid_argument("RecursionSpec: require w >= 1");
    if (v < 2) throw std::invalid_argument("RecursionSpec: require v >= 2");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("RecursionSpec: p must be in [0,1]");
  }
};

struct RecursionState {
  std::vector<double> y;  // length L + w - 1
  long long q = 0;        // iteration count
};

// Banded averaging matrix A (L rows, L+w-1 columns), A_{k,j} = 1/w for
// j - k in [0, w).  Rows sum to one; transpose columns near the boundary sum
// to less than one, which seeds the decoding wave.
struct CouplingMatrix {
  int L = 0;
  int w = 0;

  // x = A u for u of length L+w-1
  void apply(const std::vector<double>& u, std::vector<double>& x) const {
    x.assign(static_cast<std::size_t>(L), 0.0);
    const double inv = 1.0 / static_cast<double>(w);
    for (int k = 0; k < L; ++k) {
      double s = 0;
      for (int tau = 0; tau < w; ++tau) s += u[static_cast<std::size_t>(k + tau)];
      x[static_cast<std::size_t>(k)] = s * inv;
    }
  }

  // y = A^T t for t of length L
  void apply_transpose(const std::vector<double>& t, std::vector<double>& y) const {
    y.assign(static_cast<std::size_t>(L + w - 1), 0.0);
    const double inv = 1.0 / static_cast<double>(w);
    for (int j = 0; j < L + w - 1; ++j) {
      double s = 0;
      const int k_lo = std::max(0, j - w + 1);
      const int k_hi = std::min(L - 1, j);
      for (int k = k_lo; k <= k_hi; ++k) s += t[static_cast<std::size_t>(k)];
      y[static_cast<std::size_t>(j)] = s * inv;
    }
  }

  std::vector<double> row(int i) const {
    std::vector<double> r(static_cast<std::size_t>(L + w - 1), 0.0);
    for (int tau = 0; tau < w; ++tau) r[static_cast<std::size_t>(i + tau)] = 1.0 / w;
    return r;
  }
};

inline CouplingMatrix coupling_matrix(int L, int w) {
  if (L < 1 || w < 1) throw std::invalid_argument("coupling_matrix: require L >= 1, w >= 1");
  return {L, w};
}

namespace detail {

inline double f_edge(double x, double p, int v) {
  if (v == 2) return p * x;
  if (v == 3) return p * x * x;
  return p * std::pow(x, v - 1);
}

}  // namespace detail

inline RecursionState step(const RecursionState& state, const RecursionSpec& spec) {
  spec.validate_or_throw();
  const CouplingMatrix A{spec.L, spec.w};
  if (state.y.size() != static_cast<std::size_t>(spec.L + spec.w - 1))
    throw std::invalid_argument("step: state size must be L + w - 1");
  std::vector<double> gy(state.y.size());
  for (std::size_t j = 0; j < state.y.size(); ++j) gy[j] = g_eval(spec.tail, state.y[j]);
  std::vector<double> x, fy;
  A.apply(gy, x);
  for (auto& xe : x) xe = detail::f_edge(xe, spec.p, spec.v);
  RecursionState next;
  A.apply_transpose(x, next.y);
  next.q = state.q + 1;
  return next;
}

inline RecursionState initial_state(const RecursionSpec& spec) {
  RecursionState s;
  s.y.assign(static_cast<std::size_t>(spec.L + spec.w - 1), 1.0);
  s.q = 0;
  return s;
}

enum class RecursionStatus { converged_zero, converged_nonzero, stalled_nonzero, indeterminate };

inline const char* recursion_status_name(RecursionStatus s) {
  switch (s) {
    case RecursionStatus::converged_zero: return "converged-zero";
    case RecursionStatus::converged_nonzero: return "converged-nonzero";
    case RecursionStatus::stalled_nonzero: return "stalled-nonzero";
    case RecursionStatus::indeterminate: return "indeterminate";
  }
  return "?";
}

struct RecursionRunResult {
  RecursionStatus status = RecursionStatus::indeterminate;
  std::vector<double> y;
  long long iterations = 0;

  bool zero() const { return status == RecursionStatus::converged_zero; }
  bool decided() const { return status != RecursionStatus::indeterminate; }
};

// Iterates from the all-ones state.  The sequence is entrywise nonincreasing
// (f and g are nondecreasing); sub-ulp jitter from the tail evaluation is
// clamped, anything larger is a logic error.  Near the threshold convergence
// slows critically, so a run is classified nonzero early once the relative
// per-iteration decrement stays below tol for 100 consecutive iterations
// while the iterate is still macroscopic (above sqrt(tol)).
inline RecursionRunResult run(const RecursionSpec& spec, double tol = 1e-10,
                              long long max_iter = 100000) {
  spec.validate_or_throw();
  if (!(tol > 0)) throw std::invalid_argument("run: tol must be positive");
  const CouplingMatrix A{spec.L, spec.w};
  const std::size_t n = static_cast<std::size_t>(spec.L + spec.w - 1);
  std::vector<double> y(n, 1.0), gy(n), x, ynext;
  RecursionRunResult result;
  const double ambiguous_hi = std::sqrt(tol);
  int slow_streak = 0;
  for (long long q = 1; q <= max_iter; ++q) {
    for (std::size_t j = 0; j < n; ++j) gy[j] = g_eval(spec.tail, y[j]);
    A.apply(gy, x);
    for (auto& xe : x) xe = detail::f_edge(xe, spec.p, spec.v);
    A.apply_transpose(x, ynext);
    double delta = 0, ymax = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (ynext[j] > y[j]) {
        if (ynext[j] > y[j] + 1e-13)
          throw std::logic_error("run: iterate increased from the all-ones start");
        ynext[j] = y[j];
      }
      delta = std::max(delta, y[j] - ynext[j]);
      ymax = std::max(ymax, ynext[j]);
    }
    y.swap(ynext);
    result.iterations = q;
    if (ymax < tol) {
      result.status = RecursionStatus::converged_zero;
      break;
    }
    if (delta < tol && ymax >= ambiguous_hi) {
      result.status = RecursionStatus::converged_nonzero;
      break;
    }
    // inside (tol, sqrt(tol)) keep iterating; a genuine nonzero fixed point
    // this small is indistinguishable from slow decay to zero at tol accuracy
    if (delta < tol * ymax && ymax >= ambiguous_hi) {
      if (++slow_streak >= 100) {
        result.status = RecursionStatus::stalled_nonzero;
        break;
      }
    } else {
      slow_streak = 0;
    }
  }
  result.y = std::move(y);
  return result;
}

// Largest fixed point of the uncoupled system x = p g(x)^{v-1}, reached by
// monotone iteration from x = p.
inline double single_system_fixed_point(const TailSpec& tail, int v, double p,
                                        double tol = 1e-10, long long max_iter = 100000) {
  tail.validate();
  if (v < 2) throw std::invalid_argument("single_system_fixed_point: require v >= 2");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("single_system_fixed_point: p must be in [0,1]");
  double x = p;
  for (long long q = 0; q < max_iter; ++q) {
    double xn = detail::f_edge(g_eval(tail, x), p, v);
    if (xn > x) xn = x;
    if (x - xn < tol) return xn < tol ? 0.0 : xn;
    x = xn;
  }
  return x;
}

// Same recursion with the exact binomial tail instead of its Poisson limit;
// used to gauge the approximation, not in threshold work.
inline double single_system_fixed_point_binomial(int a, int n, int v, double p,
                                                 double tol = 1e-10,
                                                 long long max_iter = 100000) {
  if (v < 2) throw std::invalid_argument("single_system_fixed_point_binomial: require v >= 2");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("single_system_fixed_point_binomial: p must be in [0,1]");
  double x = p;
  for (long long q = 0; q < max_iter; ++q) {
    double xn = detail::f_edge(binomial_tail(a, n, x), p, v);
    if (xn > x) xn = x;
    if (x - xn < tol) return xn < tol ? 0.0 : xn;
    x = xn;
  }
  return x;
}

// Bisection on p for the converge-to-zero predicate of run().  An
// indeterminate run counts as non-converged, which can only bias the
// reported threshold downward.
inline ThresholdResult recursion_threshold(const TailSpec& tail, int v, int L, int w,
                                           double tol_p = 1e-7, double tol_fix = 1e-10,
                                           long long max_iter = 100000) {
  RecursionSpec spec{tail, v, L, w, 0.0};
  spec.validate_or_throw();
  ThresholdResult result;
  result.method = ThresholdMethod::recursion;
  result.tolerance = tol_p;
  result.upper_bound = tail.kind == TailKind::profile;

  long long total_iters = 0;
  int indeterminate = 0;
  auto decodes = [&](double p) {
    RecursionSpec at = spec;
    at.p = p;
    const auto r = run(at, tol_fix, max_iter);
    total_iters += r.iterations;
    if (!r.decided()) ++indeterminate;
    return r.zero();
  };

  // p = 0 maps everything to zero in one step; grow the upper end until the
  // recursion stops converging (the weight-pulling load bound is the natural
  // scale for the first guess)
  double wp = 0;
  if (tail.kind == TailKind::mixture) {
    for (const auto& c : tail.mixture) wp += c.rho * static_cast<double>(c.a) / c.n;
    wp *= v;
  } else {
    wp = static_cast<double>(v) * tail.a / static_cast<double>(tail.n);
  }
  double hi = std::min(1.0, wp + 0.02);
  double lo = 0.0;
  while (decodes(hi)) {
    lo = hi;
    if (hi >= 1.0) {
      result.p_star = 1.0;
      result.saturated = true;
      result.diag.note = "recursion converges to zero at p = 1";
      result.diag.iterations = total_iters;
      result.diag.indeterminate_evals = indeterminate;
      return result;
    }
    hi = std::min(1.0, hi * 1.5 + 0.01);
  }
  while (hi - lo > tol_p) {
    const double mid = 0.5 * (lo + hi);
    if (decodes(mid))
      lo = mid;
    else
      hi = mid;
  }
  result.p_star = 0.5 * (lo + hi);
  result.diag.bracket_lo = lo;
  result.diag.bracket_hi = hi;
  result.diag.iterations = total_iters;
  result.diag.indeterminate_evals = indeterminate;
  if (result.upper_bound)
    result.diag.note = "profile recursion bounds the threshold from above for large w";
  return result;
}

}  // namespace scsc
