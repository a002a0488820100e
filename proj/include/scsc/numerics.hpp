#pragma once
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Scalar special functions and root finders shared by all analysis layers:
// Poisson/binomial mass functions, Poisson tails pi(a,n,x) and their
// closed-form integrals, sigma packing bounds, channel capacities, bisection.
// Everything here is pure and reentrant.

namespace scsc {

inline constexpr double kLogDomainAlpha = 700.0;  // Po[alpha] switches to log domain
inline constexpr int kLogDomainCount = 170;       // i! overflows past this
inline constexpr int kLogDomainBinomialN = 1000;  // Bi[n,p] switches to log domain

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Channel { BEC, BSC };

inline const char* channel_name(Channel c) { return c == Channel::BEC ? "bec" : "bsc"; }

// ---------------------------------------------------------------------------
// Mass functions
// ---------------------------------------------------------------------------

inline double log_poisson_pmf(std::int64_t i, double alpha) {
  if (i < 0 || alpha < 0 || std::isnan(alpha))
    throw std::domain_error("poisson_pmf: require i >= 0 and alpha >= 0");
  if (alpha == 0) return i == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(i) * std::log(alpha) - alpha - std::lgamma(static_cast<double>(i) + 1);
}

// Po[alpha](i) = e^{-alpha} alpha^i / i!
inline double poisson_pmf(std::int64_t i, double alpha) {
  if (i < 0 || alpha < 0 || std::isnan(alpha))
    throw std::domain_error("poisson_pmf: require i >= 0 and alpha >= 0");
  if (alpha == 0) return i == 0 ? 1.0 : 0.0;
  if (i == 0) return std::exp(-alpha);
  // Direct evaluation overflows alpha^i long before the log-domain switch
  // points, so the log route is used throughout; the switch constants above
  // mark where direct evaluation would stop being representable at all.
  return std::exp(log_poisson_pmf(i, alpha));
}

inline double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) throw std::domain_error("log_choose: require 0 <= k <= n");
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

inline double log_binomial_pmf(std::int64_t i, std::int64_t n, double p) {
  if (i < 0 || n < 0 || i > n) throw std::domain_error("binomial_pmf: require 0 <= i <= n");
  if (p < 0 || p > 1 || std::isnan(p)) throw std::domain_error("binomial_pmf: require p in [0,1]");
  const double inf = std::numeric_limits<double>::infinity();
  if (p == 0) return i == 0 ? 0.0 : -inf;
  if (p == 1) return i == n ? 0.0 : -inf;
  return log_choose(n, i) + static_cast<double>(i) * std::log(p) +
         static_cast<double>(n - i) * std::log1p(-p);
}

// Bi[n,p](i) = C(n,i) p^i (1-p)^{n-i}
inline double binomial_pmf(std::int64_t i, std::int64_t n, double p) {
  if (i < 0 || n < 0 || i > n) throw std::domain_error("binomial_pmf: require 0 <= i <= n");
  if (p < 0 || p > 1 || std::isnan(p)) throw std::domain_error("binomial_pmf: require p in [0,1]");
  if (p == 0) return i == 0 ? 1.0 : 0.0;
  if (p == 1) return i == n ? 1.0 : 0.0;
  return std::exp(log_binomial_pmf(i, n, p));
}

// ---------------------------------------------------------------------------
// Poisson tail pi(a,n,x) = P(Poisson(nx) >= a), via the regularized lower
// incomplete gamma function P(a, nx).  Series / continued-fraction split at
// the mean keeps full relative precision for tails near 0 (the bisection
// probes tails at the 1e-12 scale where naive 1-sum loses everything).
// ---------------------------------------------------------------------------

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int it = 0; it < 1000; ++it) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NonConvergenceError("incomplete gamma series failed to converge");
}

inline double gamma_q_contfrac(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NonConvergenceError("incomplete gamma continued fraction failed to converge");
}

// Regularized lower incomplete gamma P(a,x), a > 0.
inline double gamma_p(double a, double x) {
  if (x <= 0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

}  // namespace detail

// pi(a,n,x) = sum_{i >= a} Po[nx](i)
inline double poisson_tail(std::int64_t a, double n, double x) {
  if (a < 0 || n < 1 || x < 0 || std::isnan(x))
    throw std::domain_error("poisson_tail: require a >= 0, n >= 1, x >= 0");
  if (a == 0) return 1.0;
  return detail::gamma_p(static_cast<double>(a), n * x);
}

// P(Bi(n,x) >= a); exact-form companion used to quantify the Poisson
// approximation gap of the recursion's g.  Summed outward from the mode so
// the leading term never underflows while the tail is non-negligible.
inline double binomial_tail(std::int64_t a, std::int64_t n, double x) {
  if (n < 1 || a < 0) throw std::domain_error("binomial_tail: require n >= 1, a >= 0");
  if (x < 0 || x > 1 || std::isnan(x)) throw std::domain_error("binomial_tail: require x in [0,1]");
  if (a == 0) return 1.0;
  if (a > n) return 0.0;
  if (x == 0) return 0.0;
  if (x == 1) return 1.0;
  const std::int64_t mode = std::max<std::int64_t>(a, static_cast<std::int64_t>(n * x));
  const std::int64_t start = std::min<std::int64_t>(mode, n);
  const double r = x / (1.0 - x);
  double sum = 0.0;
  double t = std::exp(log_binomial_pmf(start, n, x));
  for (std::int64_t i = start; i <= n; ++i) {  // upward from the mode
    sum += t;
    if (t < sum * 1e-17 && i > mode) break;
    if (i < n) t *= r * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  t = std::exp(log_binomial_pmf(start, n, x));
  for (std::int64_t i = start; i > a; --i) {  // downward to a (exclusive of start)
    t *= static_cast<double>(i) / (r * static_cast<double>(n - i + 1));
    sum += t;
    if (t < sum * 1e-17) break;
  }
  return std::min(sum, 1.0);
}

// ---------------------------------------------------------------------------
// Decoding profiles (beta_i = fraction of weight-i patterns the component
// decoder cannot correct) and the tail-function dispatch used by the
// recursion/potential layers.
// ---------------------------------------------------------------------------

struct DecodingProfile {
  int t_c = 0;               // unique decoding radius
  int t_m = 0;               // max partially-correctable weight
  std::vector<double> beta;  // beta[i - t_c - 1] = beta_i for t_c+1 <= i <= t_m

  // Implied values outside the stored window: 0 through t_c, 1 past t_m.
  double beta_at(int i) const {
    if (i <= t_c) return 0.0;
    if (i > t_m) return 1.0;
    return beta[static_cast<std::size_t>(i - t_c - 1)];
  }

  void validate() const {
    if (t_c < 0 || t_m < t_c) throw std::invalid_argument("profile: require 0 <= t_c <= t_m");
    if (beta.size() != static_cast<std::size_t>(t_m - t_c))
      throw std::invalid_argument("profile: beta must have t_m - t_c entries");
    for (double b : beta)
      if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("profile: beta_i must lie in [0,1]");
  }
};

enum class TailKind { bdd_erasure, bdd_error, profile, mixture };

struct MixtureComponent {
  double rho = 0;  // mixture weight
  int a = 0;       // tail start (d_c - 1 or t_c)
  int n = 1;       // code length scale
};

// Selects the g-function of the recursion: pi(d_c-1,n_c,x), pi(t_c,n_c,x),
// pi_beta(t_c,n_c,x), or the mixture pi_rho(x).
struct TailSpec {
  TailKind kind = TailKind::bdd_erasure;
  int a = 0;
  int n = 1;
  std::optional<DecodingProfile> profile;
  std::vector<MixtureComponent> mixture;

  static TailSpec bdd_erasure(int n_c, int d_c) {
    TailSpec t;
    t.kind = TailKind::bdd_erasure;
    t.a = d_c - 1;
    t.n = n_c;
    t.validate();
    return t;
  }

  static TailSpec bdd_error(int n_c, int t_c) {
    TailSpec t;
    t.kind = TailKind::bdd_error;
    t.a = t_c;
    t.n = n_c;
    t.validate();
    return t;
  }

  static TailSpec with_profile(int n_c, DecodingProfile pr) {
    TailSpec t;
    t.kind = TailKind::profile;
    t.a = pr.t_c;
    t.n = n_c;
    t.profile = std::move(pr);
    t.validate();
    return t;
  }

  static TailSpec mix(std::vector<MixtureComponent> comps) {
    TailSpec t;
    t.kind = TailKind::mixture;
    t.mixture = std::move(comps);
    if (!t.mixture.empty()) {
      t.a = t.mixture.front().a;
      t.n = t.mixture.front().n;
    }
    t.validate();
    return t;
  }

  void validate() const {
    if (kind == TailKind::mixture) {
      if (mixture.empty()) throw std::invalid_argument("tail: mixture needs components");
      double wsum = 0;
      for (const auto& c : mixture) {
        if (c.rho < 0) throw std::invalid_argument("tail: mixture weights must be >= 0");
        if (c.a < 0 || c.n < 1) throw std::invalid_argument("tail: require a >= 0, n >= 1");
        wsum += c.rho;
      }
      if (std::fabs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("tail: mixture weights must sum to 1 within 1e-12");
      return;
    }
    if (a < 0 || n < 1) throw std::invalid_argument("tail: require a >= 0, n >= 1");
    if (kind == TailKind::profile) {
      if (!profile) throw std::invalid_argument("tail: profile kind requires a profile");
      profile->validate();
      if (profile->t_c != a) throw std::invalid_argument("tail: a must equal profile t_c");
    }
  }
};

// pi_beta(a,n,x) = sum_{i >= a} beta_{i+1} Po[nx](i); beyond t_m the implied
// beta of 1 collapses the remainder into a plain Poisson tail.
inline double pi_beta(const DecodingProfile& pr, int n, double x) {
  if (x < 0 || std::isnan(x)) throw std::domain_error("pi_beta: require x >= 0");
  const double lambda = static_cast<double>(n) * x;
  double acc = poisson_tail(pr.t_m, n, x);
  if (lambda == 0) {
    if (pr.t_c == 0) acc += pr.beta_at(1);
    return acc;
  }
  double pmf = std::exp(log_poisson_pmf(pr.t_c, lambda));
  for (int i = pr.t_c; i < pr.t_m; ++i) {
    acc += pr.beta_at(i + 1) * pmf;
    pmf *= lambda / static_cast<double>(i + 1);
  }
  return std::min(acc, 1.0);
}

inline double g_eval(const TailSpec& spec, double x) {
  switch (spec.kind) {
    case TailKind::bdd_erasure:
    case TailKind::bdd_error:
      return poisson_tail(spec.a, spec.n, x);
    case TailKind::profile:
      if (!spec.profile) throw std::invalid_argument("g_eval: profile kind requires a profile");
      return pi_beta(*spec.profile, spec.n, x);
    case TailKind::mixture: {
      double acc = 0;
      for (const auto& c : spec.mixture) acc += c.rho * poisson_tail(c.a, c.n, x);
      return acc;
    }
  }
  throw std::logic_error("g_eval: unreachable");
}

// int_0^x pi(a,n,z) dz = x - (1/n) sum_{j=0}^{a-1} pi(j+1,n,x), per component.
inline double g_integral(const TailSpec& spec, double x) {
  if (x < 0 || std::isnan(x)) throw std::domain_error("g_integral: require x >= 0");
  auto component = [x](int a, int n) {
    double s = 0;
    for (int j = 0; j < a; ++j) s += poisson_tail(j + 1, n, x);
    return x - s / static_cast<double>(n);
  };
  switch (spec.kind) {
    case TailKind::bdd_erasure:
    case TailKind::bdd_error:
      return component(spec.a, spec.n);
    case TailKind::mixture: {
      double acc = 0;
      for (const auto& c : spec.mixture) acc += c.rho * component(c.a, c.n);
      return acc;
    }
    case TailKind::profile:
      throw std::invalid_argument("g_integral: no closed form for profile tails");
  }
  throw std::logic_error("g_integral: unreachable");
}

// ---------------------------------------------------------------------------
// sigma(n,k,i) = 2^{k-n} sum_{j<=i} C(n,j): sphere-packing scale factor for
// beyond-bounded-distance profiles.  Log-sum-exp keeps n up to 4096 finite in
// the log; the linear value may round to +inf for enormous sigma, which the
// min/max clamps downstream absorb.
// ---------------------------------------------------------------------------

inline double log_sigma_bound(int n, int k, int i) {
  if (k < 0 || k > n || i < 0 || i > n)
    throw std::domain_error("sigma_bound: require 0 <= k <= n and 0 <= i <= n");
  double lmax = -std::numeric_limits<double>::infinity();
  std::vector<double> lc(static_cast<std::size_t>(i) + 1);
  for (int j = 0; j <= i; ++j) {
    lc[static_cast<std::size_t>(j)] = log_choose(n, j);
    lmax = std::max(lmax, lc[static_cast<std::size_t>(j)]);
  }
  double s = 0;
  for (double v : lc) s += std::exp(v - lmax);
  return static_cast<double>(k - n) * std::log(2.0) + lmax + std::log(s);
}

inline double sigma_bound(int n, int k, int i) { return std::exp(log_sigma_bound(n, k, i)); }

// ---------------------------------------------------------------------------
// Channel capacity
// ---------------------------------------------------------------------------

inline double binary_entropy(double p) {
  if (p < 0 || p > 1) throw std::domain_error("binary_entropy: require p in [0,1]");
  double h = 0;
  if (p > 0) h -= p * std::log2(p);
  if (p < 1) h -= (1 - p) * std::log2(1 - p);
  return h;
}

inline double capacity(Channel channel, double p) {
  switch (channel) {
    case Channel::BEC:
      if (p < 0 || p > 1) throw std::domain_error("capacity: BEC requires p in [0,1]");
      return 1.0 - p;
    case Channel::BSC:
      if (p < 0 || p > 0.5) throw std::domain_error("capacity: BSC requires p in [0,0.5]");
      return 1.0 - binary_entropy(p);
  }
  throw std::logic_error("capacity: unreachable");
}

// ---------------------------------------------------------------------------
// Bisection: function mode (sign change) and predicate mode (true->false
// boundary).  Both refuse brackets that do not actually bracket.
// ---------------------------------------------------------------------------

inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi) || !(tol > 0)) throw std::invalid_argument("bisect: require lo < hi, tol > 0");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo < 0) == (fhi < 0)) throw BracketError("bisect: no sign change on bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // tol below representable spacing
    const double fm = f(mid);
    if (fm == 0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct PredicateBracket {
  double lo = 0;   // last point where the predicate held
  double hi = 0;   // first point where it failed
  double mid = 0;  // reported boundary estimate
};

// Requires pred(lo) == true and pred(hi) == false.
inline PredicateBracket bisect_predicate(const std::function<bool(double)>& pred, double lo,
                                         double hi, double tol) {
  if (!(lo < hi) || !(tol > 0))
    throw std::invalid_argument("bisect_predicate: require lo < hi, tol > 0");
  if (!pred(lo)) throw BracketError("bisect_predicate: predicate false at lo");
  if (pred(hi)) throw BracketError("bisect_predicate: predicate true at hi");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid))
      lo = mid;
    else
      hi = mid;
  }
  return {lo, hi, 0.5 * (lo + hi)};
}

// ---------------------------------------------------------------------------
// Shared threshold vocabulary
// ---------------------------------------------------------------------------

enum class ThresholdMethod { recursion, potential, weight_pulling, simulation };

inline const char* method_name(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::recursion: return "recursion";
    case ThresholdMethod::potential: return "potential";
    case ThresholdMethod::weight_pulling: return "weight-pulling";
    case ThresholdMethod::simulation: return "simulation";
  }
  return "?";
}

struct ThresholdDiagnostics {
  std::vector<double> roots;         // potential: Q-roots examined
  std::vector<double> root_lambdas;  // lambda~ at each root
  long long iterations = 0;          // total inner iterations or trials
  int indeterminate_evals = 0;       // bisection evals that hit max_iter
  bool stability_ok = true;          // potential: unconditional-stability probe
  double bracket_lo = 0;
  double bracket_hi = 0;
  std::string note;
};

struct ThresholdResult {
  double p_star = 0;
  ThresholdMethod method = ThresholdMethod::recursion;
  double tolerance = 0;
  bool saturated = false;    // boundary of the admissible parameter range reached
  bool upper_bound = false;  // profile-tail recursion results hold only for w >= w0
  std::optional<double> gap;  // multiplicative gap to capacity, when rate is known
  ThresholdDiagnostics diag;
};

}  // namespace scsc
