// Acceptance gate for the library: ten end-to-end criteria, each printed as a
// single [PASS]/[FAIL] line with its pinned tolerance and runtime budget.  The
// binary exits nonzero if any criterion fails, so `ctest` treats the gate as
// one test.  Heavy Monte-Carlo settings are sized for a single desk-class
// core; every criterion runs from fixed seeds and is fully reproducible.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "scsc/ensemble.hpp"
#include "scsc/peeling.hpp"
#include "scsc/potential.hpp"
#include "scsc/recursion.hpp"

namespace {

using namespace scsc;
using oracles::adaptive_simpson;
using oracles::enumerate_decoupling;

constexpr std::uint64_t kSeed = 0x5eed5ca1ab1e0001ULL;

struct Check {
  bool ok = true;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared spec pools
// ---------------------------------------------------------------------------

EnsembleSpec single_spec(int n, int k, int d, int mult, int v, int w) {
  EnsembleSpec spec;
  spec.components = {{{n, k, d}, mult}};
  spec.v = v;
  spec.w = w;
  return spec;
}

// 20 bounded-distance specs shared by criteria 5 and 9 (k tracks an m*t
// redundancy estimate; only n and d enter the analysis).
struct DominanceEntry {
  int n, d;
  double rec_bec = 0, rec_bsc = 0, pot_bec = 0, pot_bsc = 0;
};

std::vector<DominanceEntry>& dominance_table() {
  static std::vector<DominanceEntry> table = [] {
    std::vector<DominanceEntry> t;
    for (const int n : {126, 254, 510, 1022})
      for (const int d : {5, 7, 9, 11, 13}) t.push_back({n, d});
    return t;
  }();
  return table;
}

// ---------------------------------------------------------------------------
// 1. batch and incremental peeling leave identical residuals
// ---------------------------------------------------------------------------

Check c1_decoder_equivalence() {
  struct Inst {
    EnsembleSpec spec;
    DecodingModel model;
    Channel channel;
    double p_scale;  // weight-pulling scale for the p range
  };
  std::vector<Inst> pool;
  pool.push_back({staircase_spec({16, 10, 5}), DecodingModel::bec_bdd(), Channel::BEC,
                  2.0 * 4 / 16});
  pool.push_back({single_spec(20, 12, 5, 5, 2, 2), DecodingModel::bsc_mf(), Channel::BSC,
                  2.0 * 2 / 20});
  {
    EnsembleSpec mix;
    mix.components = {{{12, 8, 3}, 2}, {{8, 5, 3}, 3}};
    mix.v = 2;
    mix.w = 2;
    pool.push_back({mix, DecodingModel::bec_bdd(), Channel::BEC, 5.0 / 12});
  }
  pool.push_back({single_spec(12, 9, 3, 3, 3, 2), DecodingModel::bec_bdd(), Channel::BEC,
                  3.0 * 2 / 12});
  // The batch/incremental identity is a statement about the deterministic
  // recovery rules; the stochastic beyond-BD model has no incremental variant.
  pool.push_back({staircase_spec({16, 10, 5}), DecodingModel::bsc_mf(), Channel::BSC,
                  2.0 * 2 / 16});

  Xoshiro256 rng(derive_seed(kSeed, 1));
  int mismatches = 0;
  const int instances = 1000;
  for (int i = 0; i < instances; ++i) {
    const auto& inst = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    const int L = 2 + static_cast<int>(rng.below(4));
    const double p = inst.p_scale * (0.5 + rng.uniform01());
    const std::uint64_t gs = derive_seed(kSeed, 2, static_cast<std::uint64_t>(i));
    const auto graph = sample_graph(inst.spec, L, derive_seed(gs, 1));
    const ResidualGraph start =
        apply_channel(graph, ChannelSpec{inst.channel, std::min(p, 1.0)}, derive_seed(gs, 2));
    ResidualGraph batch = start;
    ResidualGraph incremental = start;
    const auto out_b = peel_batch(batch, inst.model, derive_seed(gs, 3));
    const auto out_i = peel_incremental(incremental, inst.model, derive_seed(gs, 3));
    if (batch.edge_list() != incremental.edge_list() || out_b.success != out_i.success)
      ++mismatches;
  }
  Check c;
  c.ok = mismatches == 0;
  c.detail = "batch == incremental residual sets on " + std::to_string(instances) +
             " randomized instances, " + std::to_string(mismatches) + " mismatches";
  return c;
}

// ---------------------------------------------------------------------------
// 2. one-step expected-drift predictions match re-pairing Monte Carlo
// ---------------------------------------------------------------------------

Check c2_trend_equation() {
  struct State {
    EnsembleSpec spec;
    Channel channel;
    double p;
    DecodingModel model;
  };
  // The drift equation is the large-graph limit of the exact re-pairing
  // expectation (stub placement uses 1/F rather than 1/(F-1), and multi-hit
  // terms are dropped), so its error is O(1/F).  States are sized so F is in
  // the thousands, keeping that model error well under the 4-SE band that
  // 1e5 trials can resolve.
  const std::vector<State> states = {
      {single_spec(64, 40, 9, 128, 2, 2), Channel::BEC, 0.40, DecodingModel::bec_bdd()},
      {single_spec(64, 40, 9, 128, 2, 2), Channel::BSC, 0.15, DecodingModel::bsc_mf()},
      {single_spec(12, 9, 3, 512, 3, 2), Channel::BEC, 0.35, DecodingModel::bec_bdd()},
  };
  const long long trials = 100000;
  int rows = 0, violations = 0;
  double worst_z = 0;
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto& st = states[s];
    const std::uint64_t ss = derive_seed(kSeed, 3, s);
    const auto graph = sample_graph(st.spec, 1, derive_seed(ss, 1));
    const auto residual =
        apply_channel(graph, ChannelSpec{st.channel, st.p}, derive_seed(ss, 2));
    const auto report = trend_check(residual, st.model, trials, derive_seed(ss, 3));
    for (const auto& row : report.rows) {
      ++rows;
      const double dev = std::fabs(row.empirical - row.predicted);
      if (row.std_error > 0) {
        worst_z = std::max(worst_z, dev / row.std_error);
        if (dev > 4.0 * row.std_error) ++violations;
      } else if (dev > 1e-9) {
        ++violations;
      }
    }
  }
  Check c;
  c.ok = violations == 0 && rows > 0;
  c.detail = "3 states x 1e5 one-step trials, " + std::to_string(rows) +
             " tracked rows within 4 SE (worst |z| = " + fmt(worst_z) + ")";
  return c;
}

// ---------------------------------------------------------------------------
// 3. decoupling probability: exact small cases and the large-N decay rate
// ---------------------------------------------------------------------------

Check c3_decoupling() {
  Check c;
  double worst = 0;
  // Exact enumeration at the finest split (bundle size v), where the closed
  // form counts matchings exactly.
  const struct {
    int N, v;
    double expect;
  } exact_cases[] = {{2, 2, 1.0 / 3.0}, {3, 2, 1.0 / 15.0}, {4, 2, 1.0 / 105.0}, {2, 3, 0.1}};
  for (const auto& e : exact_cases) {
    const double closed = decoupling_probability(e.N, e.v);
    const auto enumerated = enumerate_decoupling(e.N, e.v);
    const double brute =
        static_cast<double>(enumerated.decoupling) / static_cast<double>(enumerated.total);
    worst = std::max({worst, std::fabs(closed - e.expect), std::fabs(brute - e.expect)});
    if (std::fabs(closed - e.expect) > 1e-12 || std::fabs(brute - e.expect) > 1e-12) c.ok = false;
  }
  // Decay trend: c(N) = (ln p + (v-1) N ln N)/N must rise monotonically to
  // ln v! - v ln v + (v-1) (= 1 - ln 2 for v = 2), confirming p = N^{-(v-1)N + o(N)}.
  const double limit = 1.0 - std::log(2.0);
  double prev = -1e9;
  bool monotone = true;
  double c8 = 0;
  for (int N = 2; N <= 8; ++N) {
    const double cn = (decoupling_log_probability(N, 2) + N * std::log(static_cast<double>(N))) /
                      static_cast<double>(N);
    if (cn <= prev) monotone = false;
    prev = cn;
    if (N == 8) c8 = cn;
  }
  if (!monotone || !(limit - c8 > 0 && limit - c8 < 0.05)) c.ok = false;
  c.detail = "closed form == enumeration for (N,v) in {(2,2),(3,2),(4,2),(2,3)} (err <= 1e-12, worst " +
             fmt(worst) + "); N^{-(v-1)N} decay rate approached monotonically (gap at N=8: " +
             fmt(limit - c8) + ")";
  return c;
}

// ---------------------------------------------------------------------------
// 4. analytic identities across the potential machinery
// ---------------------------------------------------------------------------

Check c4_identities() {
  const std::vector<PotentialSpec> specs = {
      {TailSpec::bdd_erasure(510, 11), 2},
      {TailSpec::bdd_error(64, 9), 2},
      {TailSpec::mix({{0.4, 10, 510}, {0.6, 4, 254}}), 2},
  };

  // (a) the closed-form fixed-point potential equals its defining expression.
  double worst_q = 0;
  for (const auto& spec : specs)
    for (int i = 1; i <= 1000; ++i) {
      const double x = static_cast<double>(i) / 1000.0;
      worst_q = std::max(worst_q, std::fabs(fixed_point_potential_Q(x, spec) -
                                            fixed_point_potential_Q_defining(x, spec)));
    }

  // (b) the single-system potential equals its line-integral form.
  auto g_fn = [](const PotentialSpec& spec, double z) {
    if (spec.tail.kind == TailKind::mixture) {
      double s = 0;
      for (const auto& m : spec.tail.mixture) s += m.rho * poisson_tail(m.a, m.n, z);
      return s;
    }
    return poisson_tail(spec.tail.a, spec.tail.n, z);
  };
  auto gprime_fn = [](const PotentialSpec& spec, double z) {
    if (spec.tail.kind == TailKind::mixture) {
      double s = 0;
      for (const auto& m : spec.tail.mixture)
        s += m.rho * m.n * poisson_pmf(m.a - 1, m.n * z);
      return s;
    }
    return spec.tail.n * poisson_pmf(spec.tail.a - 1, spec.tail.n * z);
  };
  double worst_u = 0;
  Xoshiro256 rng(derive_seed(kSeed, 4));
  for (const auto& spec : specs) {
    // The integrand is supported near z = a/n (g' is a Poisson bump there),
    // so sample x on that scale; far beyond it both forms are flat.
    double x_scale = 0;
    if (spec.tail.kind == TailKind::mixture) {
      for (const auto& m : spec.tail.mixture)
        x_scale = std::max(x_scale, static_cast<double>(m.a) / m.n);
    } else {
      x_scale = static_cast<double>(spec.tail.a) / spec.tail.n;
    }
    for (int i = 0; i < 6; ++i) {
      const double x = std::min(0.95, x_scale * (0.5 + 2.5 * rng.uniform01()));
      const double lam = 0.5 * rng.uniform01();
      const auto integrand = [&](double z) {
        const double g = g_fn(spec, z);
        return (z - lam * detail::pow_i(g, spec.v - 1)) * gprime_fn(spec, z);
      };
      const double quad = adaptive_simpson(integrand, 0.0, x, 1e-11);
      worst_u = std::max(worst_u, std::fabs(potential_U(x, lam, spec) - quad));
    }
  }

  // (c) integral of the regularized tail: int_0^x pi(a,n,t) dt
  //     = x - (1/n) sum_{j=0}^{a-1} pi(j+1,n,x).
  double worst_pi = 0;
  const struct {
    int a, n;
  } pis[] = {{4, 64}, {10, 510}, {40, 1022}};
  for (const auto& pr : pis)
    for (const double x : {0.05, 0.3, 0.9}) {
      const double quad = adaptive_simpson(
          [&](double t) { return poisson_tail(pr.a, pr.n, t); }, 0.0, x, 1e-12);
      double sum = 0;
      for (int j = 0; j < pr.a; ++j) sum += poisson_tail(j + 1, pr.n, x);
      worst_pi = std::max(worst_pi, std::fabs(quad - (x - sum / pr.n)));
    }

  // (d) the matched channel parameter reproduces its own fixed point.
  double worst_h = 0;
  for (const auto& spec : specs)
    for (int i = 0; i < 70; ++i) {
      const double x = 1e-4 + (1.0 - 2e-4) * rng.uniform01();
      const double lam = lambda_tilde(x, spec);
      if (!std::isfinite(lam)) continue;
      worst_h = std::max(worst_h, std::fabs(scalar_update(x, lam, spec) - x));
    }

  Check c;
  c.ok = worst_q <= 1e-10 && worst_u <= 1e-7 && worst_pi <= 1e-8 && worst_h <= 1e-12;
  c.detail = "two-form potential <= 1e-10 (worst " + fmt(worst_q) +
             "), closed form vs quadrature <= 1e-7 (worst " + fmt(worst_u) +
             "), tail-integral identity <= 1e-8 (worst " + fmt(worst_pi) +
             "), h(x, lambda~(x)) = x <= 1e-12 (worst " + fmt(worst_h) + ")";
  return c;
}

// ---------------------------------------------------------------------------
// 5. recursion and potential thresholds never beat weight pulling
// ---------------------------------------------------------------------------

Check c5_weight_pulling_dominance() {
  Check c;
  double worst_excess = -1e9;
  for (auto& e : dominance_table()) {
    const int t = (e.d - 1) / 2;
    const double wp_bec = 2.0 * (e.d - 1) / e.n;
    const double wp_bsc = 2.0 * t / e.n;
    e.rec_bec = recursion_threshold(TailSpec::bdd_erasure(e.n, e.d), 2, 200, 2, 1e-6).p_star;
    e.rec_bsc = recursion_threshold(TailSpec::bdd_error(e.n, t), 2, 200, 2, 1e-6).p_star;
    e.pot_bec = potential_threshold({TailSpec::bdd_erasure(e.n, e.d), 2}, 1.0).p_star;
    e.pot_bsc = potential_threshold({TailSpec::bdd_error(e.n, t), 2}, 0.5).p_star;
    for (const double excess : {e.rec_bec - wp_bec, e.pot_bec - wp_bec, e.rec_bsc - wp_bsc,
                                e.pot_bsc - wp_bsc}) {
      worst_excess = std::max(worst_excess, excess);
      if (excess > 1e-6) c.ok = false;
    }
  }
  c.detail = "recursion (w=2, L=200) and potential <= v(d_c-1)/n_c resp. v t_c/n_c + 1e-6 on 20 "
             "specs x 2 channels (worst excess " +
             fmt(worst_excess) + ")";
  return c;
}

// ---------------------------------------------------------------------------
// 6. threshold/weight-pulling ratio saturates as the radius grows
// ---------------------------------------------------------------------------

Check c6_saturation() {
  Check c;
  auto ratio_path = [&](const std::function<std::pair<double, double>(int)>& at) {
    std::vector<double> ratios;
    for (int d = 5; d <= 41; d += 4) {
      const auto [p_star, wp] = at(d);
      ratios.push_back(p_star / wp);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < ratios.size(); ++i)
      if (ratios[i] < ratios[i - 1] - 1e-9) monotone = false;
    return std::make_tuple(monotone, ratios.front(), ratios.back());
  };

  const auto [mono_single, first_single, last_single] = ratio_path([](int d) {
    const PotentialSpec spec{TailSpec::bdd_erasure(1022, d), 2};
    return std::make_pair(potential_threshold(spec, 1.0).p_star,
                          weight_pulling(spec.tail, 2));
  });
  const auto [mono_mix, first_mix, last_mix] = ratio_path([](int d) {
    const PotentialSpec spec{TailSpec::mix({{0.5, d - 1, 510}, {0.5, d - 1, 1022}}), 2};
    return std::make_pair(potential_threshold(spec, 1.0).p_star,
                          weight_pulling(spec.tail, 2));
  });

  c.ok = mono_single && mono_mix && last_single >= 0.95 && last_mix >= 0.95;
  c.detail = "lambda*/p_wp nondecreasing over d_c in {5,9,...,41}: single n_c=1022 " +
             fmt(first_single) + " -> " + fmt(last_single) + ", 510/1022 mixture " +
             fmt(first_mix) + " -> " + fmt(last_mix) + " (both >= 0.95 at d_c=41)";
  return c;
}

// ---------------------------------------------------------------------------
// 7. wide-coupling recursion agrees with the potential threshold
// ---------------------------------------------------------------------------

Check c7_cross_method() {
  Check c;
  double worst_rel = 0;
  for (const auto& [n, d] : std::vector<std::pair<int, int>>{{254, 5}, {510, 11}}) {
    const double rec =
        recursion_threshold(TailSpec::bdd_erasure(n, d), 2, 400, 8, 1e-5).p_star;
    const double pot = potential_threshold({TailSpec::bdd_erasure(n, d), 2}, 1.0).p_star;
    worst_rel = std::max(worst_rel, std::fabs(rec - pot) / pot);
  }
  c.ok = worst_rel <= 0.01;
  c.detail = "recursion (w=8, L=400) within 1% of potential for (254,5) and (510,11) (worst " +
             fmt(100 * worst_rel) + "%)";
  return c;
}

// ---------------------------------------------------------------------------
// 8. desk-scale simulated thresholds track the matched recursion
// ---------------------------------------------------------------------------

Check c8_simulation_vs_analysis() {
  const auto spec = single_spec(64, 40, 9, 512, 2, 2);  // N = 16384 per index
  const int L = 40;
  const long long trials_per_point = 64;
  const double tol_p = 2.5e-3;

  const double rec_bec = recursion_threshold(TailSpec::bdd_erasure(64, 9), 2, L, 2, 1e-6).p_star;
  const double sim_bec = simulated_threshold(spec, L, Channel::BEC, DecodingModel::bec_bdd(),
                                             1e-3, trials_per_point, derive_seed(kSeed, 8, 1),
                                             tol_p)
                             .p_star;
  const double rel_bec = std::fabs(sim_bec - rec_bec) / rec_bec;

  const double rec_bsc = recursion_threshold(TailSpec::bdd_error(64, 4), 2, L, 2, 1e-6).p_star;
  const double sim_bsc = simulated_threshold(spec, L, Channel::BSC, DecodingModel::bsc_mf(),
                                             1e-3, trials_per_point, derive_seed(kSeed, 8, 2),
                                             tol_p)
                             .p_star;
  const double rel_bsc = std::fabs(sim_bsc - rec_bsc) / rec_bsc;

  Check c;
  c.ok = rel_bec <= 0.05 && rel_bsc <= 0.07;
  c.detail = "(64,40,9) M=512 L=40 @ 1e-3: BEC sim " + fmt(sim_bec) + " vs recursion " +
             fmt(rec_bec) + " (" + fmt(100 * rel_bec) + "%, <= 5%); BSC sim " + fmt(sim_bsc) +
             " vs " + fmt(rec_bsc) + " (" + fmt(100 * rel_bsc) + "%, <= 7%)";
  return c;
}

// ---------------------------------------------------------------------------
// 9. channel/model orderings
// ---------------------------------------------------------------------------

Check c9_orderings() {
  Check c;
  double min_gap = 1e9;
  for (const auto& e : dominance_table()) {
    min_gap = std::min(min_gap, e.rec_bec - e.rec_bsc);
    if (!(e.rec_bsc < e.rec_bec)) c.ok = false;
  }
  double min_bbd_gain = 1e9;
  for (int t = 2; t <= 6; ++t) {
    const ComponentCodeSpec code{511, 511 - 9 * t, 2 * t + 1};
    const double bdd = recursion_threshold(TailSpec::bdd_error(511, t), 2, 100, 4, 1e-4).p_star;
    const auto profs = bbd_profiles(code);
    const double bbd =
        recursion_threshold(TailSpec::with_profile(511, profs.existence), 2, 100, 4, 1e-4)
            .p_star;
    min_bbd_gain = std::min(min_bbd_gain, bbd - bdd);
    if (bbd < bdd - 1e-12) c.ok = false;
  }
  c.detail = "BSC-MF < BEC recursion threshold on all 20 specs (min gap " + fmt(min_gap) +
             "); existence-profile >= bounded-distance for BCH(511, 511-9t, 2t+1), t in {2..6} "
             "(min gain " +
             fmt(min_bbd_gain) + ")";
  return c;
}

// ---------------------------------------------------------------------------
// 10. mixtures: degeneracy at rho in {0,1} and monotone interpolation
// ---------------------------------------------------------------------------

Check c10_mixture_interpolation() {
  Check c;
  const int d = 11, n_lo = 510, n_hi = 2046;

  auto mix_pot = [&](double rho) {
    return potential_threshold(
               {TailSpec::mix({{rho, d - 1, n_lo}, {1.0 - rho, d - 1, n_hi}}), 2}, 1.0)
        .p_star;
  };
  const double single_lo = potential_threshold({TailSpec::bdd_erasure(n_lo, d), 2}, 1.0).p_star;
  const double single_hi = potential_threshold({TailSpec::bdd_erasure(n_hi, d), 2}, 1.0).p_star;
  const double degen = std::max(std::fabs(mix_pot(1.0) - single_lo),
                                std::fabs(mix_pot(0.0) - single_hi));
  if (degen > 1e-9) c.ok = false;

  // Recursion degenerates the same way (cheaper settings: the tails coincide).
  const double rec_mix =
      recursion_threshold(TailSpec::mix({{1.0, d - 1, n_lo}, {0.0, d - 1, n_hi}}), 2, 100, 2,
                          1e-5)
          .p_star;
  const double rec_single =
      recursion_threshold(TailSpec::bdd_erasure(n_lo, d), 2, 100, 2, 1e-5).p_star;
  const double rec_degen = std::fabs(rec_mix - rec_single);
  if (rec_degen > 1e-9) c.ok = false;

  std::vector<double> path;
  for (const double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) path.push_back(mix_pot(rho));
  bool monotone = true;
  for (std::size_t i = 1; i < path.size(); ++i)
    if (path[i] <= path[i - 1]) monotone = false;
  if (!monotone) c.ok = false;

  c.detail = "rho in {1,0} reproduces the single-code thresholds to 1e-9 (potential " +
             fmt(degen) + ", recursion " + fmt(rec_degen) +
             "); 5-point rho grid strictly monotone " + fmt(path.front()) + " -> " +
             fmt(path.back());
  return c;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* title;
    double budget_s;
    Check (*fn)();
  };
  const Entry entries[] = {
      {1, "decoder equivalence", 60, c1_decoder_equivalence},
      {2, "trend-equation check", 120, c2_trend_equation},
      {3, "decoupling combinatorics", 60, c3_decoupling},
      {4, "analytic identities", 60, c4_identities},
      {5, "weight-pulling dominance", 300, c5_weight_pulling_dominance},
      {6, "threshold saturation", 120, c6_saturation},
      {7, "cross-method agreement", 300, c7_cross_method},
      {8, "simulation vs analysis", 900, c8_simulation_vs_analysis},
      {9, "ordering properties", 600, c9_orderings},
      {10, "mixture degeneracy and interpolation", 300, c10_mixture_interpolation},
  };

  bool all_ok = true;
  for (const auto& entry : entries) {
    const auto start = std::chrono::steady_clock::now();
    Check result;
    try {
      result = entry.fn();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = elapsed < entry.budget_s;
    const bool ok = result.ok && in_budget;
    all_ok = all_ok && ok;
    std::printf("[%s] %2d. %s: %s [%.1fs / budget %.0fs]\n", ok ? "PASS" : "FAIL", entry.id,
                entry.title, result.detail.c_str(), elapsed, entry.budget_s);
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
