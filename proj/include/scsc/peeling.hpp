#pragma once
#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <vector>

#include "scsc/ensemble.hpp"
#include "scsc/numerics.hpp"
#include "scsc/rng.hpp"

// Generalized peeling decoder: batch (strip every recoverable constraint per
// iteration) and incremental (one uniformly chosen recoverable edge per step)
// variants, channel application, single-step trend statistics, and a
// deterministic parallel Monte-Carlo harness.

namespace scsc {

enum class DecodingKind { bec_bdd, bsc_mf, beyond_bdd };

inline const char* decoding_kind_name(DecodingKind k) {
  switch (k) {
    case DecodingKind::bec_bdd: return "bec-bdd";
    case DecodingKind::bsc_mf: return "bsc-mf";
    case DecodingKind::beyond_bdd: return "beyond-bdd";
  }
  return "?";
}

struct DecodingModel {
  DecodingKind kind = DecodingKind::bec_bdd;
  std::optional<DecodingProfile> profile;  // beyond-bdd only
  // Non-default: freeze the accept/reject draw per (constraint, degree) instead
  // of resampling it every iteration.
  bool sticky_draws = false;

  static DecodingModel bec_bdd() { return {DecodingKind::bec_bdd, std::nullopt, false}; }
  static DecodingModel bsc_mf() { return {DecodingKind::bsc_mf, std::nullopt, false}; }
  static DecodingModel beyond_bdd(DecodingProfile pr, bool sticky = false) {
    return {DecodingKind::beyond_bdd, std::move(pr), sticky};
  }

  bool deterministic() const { return kind != DecodingKind::beyond_bdd; }

  void validate_or_throw() const {
    if (kind == DecodingKind::beyond_bdd) {
      if (!profile) throw std::invalid_argument("beyond-bdd decoding requires a profile");
      profile->validate();
    } else if (profile) {
      throw std::invalid_argument("profile is only meaningful for beyond-bdd decoding");
    }
  }
};

struct ChannelSpec {
  Channel kind = Channel::BEC;
  double p = 0.0;
};

// Residual graph after channel application: only edges incident on erased
// (BEC) or errored (BSC, mis-correction-free) variables survive.  Constraints
// keep typed edge counters; adjacency uses flat per-constraint arrays with
// swap-remove deletion.  Borrows the CodeGraph, which must outlive it.
class ResidualGraph {
 public:
  ResidualGraph(const CodeGraph& graph, const std::vector<std::uint8_t>& erased)
      : graph_(&graph), alive_(erased) {
    if (erased.size() != static_cast<std::size_t>(graph.num_variables()))
      throw std::invalid_argument("ResidualGraph: mask must cover all variables");
    if (graph.num_variables() * graph.v() > 0xFFFFFFFFLL)
      throw std::domain_error("ResidualGraph: graph too large for 32-bit ids");
    const long long C = graph.num_constraints();
    const int w = graph.w();
    cons_typed_.assign(static_cast<std::size_t>(C) * static_cast<std::size_t>(w), 0);
    cons_deg_.assign(static_cast<std::size_t>(C), 0);
    // first pass: count residual degree per constraint
    const long long nvars = graph.num_variables();
    for (long long u = 0; u < nvars; ++u) {
      if (!alive_[static_cast<std::size_t>(u)]) continue;
      ++alive_count_;
      for_each_stub(static_cast<std::uint32_t>(u), [&](CodeGraph::StubTarget t) {
        ++cons_deg_[t.constraint];
        ++cons_typed_[static_cast<std::size_t>(t.constraint) * w + t.type];
      });
    }
    cons_ptr_.assign(static_cast<std::size_t>(C) + 1, 0);
    for (long long c = 0; c < C; ++c)
      cons_ptr_[static_cast<std::size_t>(c) + 1] =
          cons_ptr_[static_cast<std::size_t>(c)] + cons_deg_[static_cast<std::size_t>(c)];
    edges_ = cons_ptr_.back();
    adj_var_.resize(static_cast<std::size_t>(edges_));
    adj_type_.resize(static_cast<std::size_t>(edges_));
    cons_len_.assign(static_cast<std::size_t>(C), 0);
    for (long long u = 0; u < nvars; ++u) {
      if (!alive_[static_cast<std::size_t>(u)]) continue;
      for_each_stub(static_cast<std::uint32_t>(u), [&](CodeGraph::StubTarget t) {
        const std::size_t pos = static_cast<std::size_t>(
            cons_ptr_[t.constraint] + cons_len_[t.constraint]++);
        adj_var_[pos] = static_cast<std::uint32_t>(u);
        adj_type_[pos] = t.type;
      });
    }
  }

  const CodeGraph& graph() const { return *graph_; }
  long long residual_edges() const { return edges_; }
  long long alive_variables() const { return alive_count_; }
  bool variable_alive(std::uint32_t u) const { return alive_[u] != 0; }
  int total_degree(std::uint32_t c) const { return cons_deg_[c]; }
  int typed_degree(std::uint32_t c, int tau) const {
    return cons_typed_[static_cast<std::size_t>(c) * graph_->w() + tau];
  }

  // residual edges of constraint c, as (variable, type) pairs
  template <typename Fn>
  void for_each_edge(std::uint32_t c, Fn&& fn) const {
    const long long base = cons_ptr_[c];
    for (int j = 0; j < cons_len_[c]; ++j)
      fn(adj_var_[static_cast<std::size_t>(base + j)],
         adj_type_[static_cast<std::size_t>(base + j)]);
  }

  // Removes an alive variable and its v residual edges.
  void remove_variable(std::uint32_t u) {
    assert(alive_[u]);
    alive_[u] = 0;
    --alive_count_;
    const int w = graph_->w();
    for_each_stub(u, [&](CodeGraph::StubTarget t) {
      const std::uint32_t c = t.constraint;
      const long long base = cons_ptr_[c];
      int j = 0;
      while (adj_var_[static_cast<std::size_t>(base + j)] != u ||
             adj_type_[static_cast<std::size_t>(base + j)] != t.type)
        ++j;
      const int last = cons_len_[c] - 1;
      adj_var_[static_cast<std::size_t>(base + j)] = adj_var_[static_cast<std::size_t>(base + last)];
      adj_type_[static_cast<std::size_t>(base + j)] =
          adj_type_[static_cast<std::size_t>(base + last)];
      cons_len_[c] = last;
      --cons_deg_[c];
      --cons_typed_[static_cast<std::size_t>(c) * w + t.type];
      --edges_;
    });
    assert(edges_ == alive_count_ * graph_->v());
  }

  // Full edge-balance audit (tests; remove_variable keeps the cheap invariant).
  bool check_edge_balance() const {
    long long sum = 0;
    for (auto len : cons_len_) sum += len;
    if (sum != edges_) return false;
    if (edges_ != alive_count_ * graph_->v()) return false;
    for (std::size_t c = 0; c < cons_deg_.size(); ++c) {
      int typed = 0;
      for (int tau = 0; tau < graph_->w(); ++tau)
        typed += cons_typed_[c * graph_->w() + tau];
      if (typed != cons_deg_[c]) return false;
    }
    return true;
  }

  // Sorted (constraint, variable, type) multiset of residual edges.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint8_t>> edge_list() const {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint8_t>> out;
    out.reserve(static_cast<std::size_t>(edges_));
    for (std::uint32_t c = 0; c < cons_deg_.size(); ++c)
      for_each_edge(c, [&](std::uint32_t u, std::uint8_t tau) { out.emplace_back(c, u, tau); });
    std::sort(out.begin(), out.end());
    return out;
  }

  // Degree-type histogram at one constraint index (zero-degree nodes included).
  std::map<std::vector<int>, long long> degree_type_histogram(int index) const {
    const int w = graph_->w();
    const int m = graph_->constraints_per_index();
    std::map<std::vector<int>, long long> hist;
    std::vector<int> key(static_cast<std::size_t>(w));
    for (int node = 0; node < m; ++node) {
      const std::uint32_t c =
          static_cast<std::uint32_t>(index) * static_cast<std::uint32_t>(m) + node;
      for (int tau = 0; tau < w; ++tau) key[static_cast<std::size_t>(tau)] = typed_degree(c, tau);
      ++hist[key];
    }
    return hist;
  }

  std::vector<long long> unrecovered_by_index() const {
    std::vector<long long> out(static_cast<std::size_t>(graph_->L()), 0);
    const long long N = graph_->N();
    for (std::size_t u = 0; u < alive_.size(); ++u)
      if (alive_[u]) ++out[static_cast<std::size_t>(static_cast<long long>(u) / N)];
    return out;
  }

 private:
  template <typename Fn>
  void for_each_stub(std::uint32_t u, Fn&& fn) const {
    const long long N = graph_->N();
    const int v = graph_->v();
    const int k = static_cast<int>(u / N);
    const std::uint32_t first =
        static_cast<std::uint32_t>((static_cast<long long>(u) % N) * v);
    for (int e = 0; e < v; ++e) fn(graph_->stub_target(k, first + e));
  }

  const CodeGraph* graph_;
  std::vector<std::uint8_t> alive_;
  long long alive_count_ = 0;
  long long edges_ = 0;
  std::vector<int> cons_deg_;
  std::vector<int> cons_typed_;
  std::vector<long long> cons_ptr_;
  std::vector<int> cons_len_;
  std::vector<std::uint32_t> adj_var_;
  std::vector<std::uint8_t> adj_type_;
};

inline ResidualGraph apply_erasures(const CodeGraph& graph,
                                    const std::vector<std::uint8_t>& erased) {
  return ResidualGraph(graph, erased);
}

// Marks each variable independently with probability p (erasure on the BEC,
// error on the BSC; the mis-correction-free decoder sees both as "unknown").
inline ResidualGraph apply_channel(const CodeGraph& graph, ChannelSpec channel,
                                   std::uint64_t seed) {
  if (!(channel.p >= 0.0 && channel.p <= 1.0))
    throw std::domain_error("apply_channel: p must be in [0,1]");
  Xoshiro256 rng(seed);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(graph.num_variables()));
  for (auto& m : mask) m = rng.bernoulli(channel.p) ? 1 : 0;
  return ResidualGraph(graph, mask);
}

struct DecodeOutcome {
  bool success = false;
  long long iterations = 0;  // batch iterations / incremental steps
  long long residual_edges = 0;
  bool hit_iteration_cap = false;
  std::vector<long long> unrecovered_by_index;            // per variable index
  std::map<std::vector<int>, long long> residual_dd;      // nonzero degree-types, all indices
};

namespace detail {

// Bounded-distance recovery limit for a deterministic model: a constraint is
// recoverable iff 1 <= total degree <= limit.
inline int recover_limit(const DecodingModel& model, const ComponentCodeSpec& code) {
  return model.kind == DecodingKind::bec_bdd ? code.d_c - 1 : code.t_c();
}

inline double unit_uniform(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

inline DecodeOutcome finish_outcome(const ResidualGraph& residual, long long iterations,
                                    bool hit_cap) {
  DecodeOutcome out;
  out.iterations = iterations;
  out.residual_edges = residual.residual_edges();
  out.success = out.residual_edges == 0;
  out.hit_iteration_cap = hit_cap;
  out.unrecovered_by_index = residual.unrecovered_by_index();
  const auto& g = residual.graph();
  const int m = g.constraints_per_index();
  std::vector<int> key(static_cast<std::size_t>(g.w()));
  for (int j = 0; j < g.constraint_indices(); ++j) {
    for (int node = 0; node < m; ++node) {
      const std::uint32_t c = static_cast<std::uint32_t>(j) * static_cast<std::uint32_t>(m) + node;
      if (residual.total_degree(c) == 0) continue;
      for (int tau = 0; tau < g.w(); ++tau) key[static_cast<std::size_t>(tau)] = residual.typed_degree(c, tau);
      ++out.residual_dd[key];
    }
  }
  return out;
}

}  // namespace detail

// Algorithm: per iteration, snapshot the recoverable constraint set, then
// remove every variable with a residual edge into that set (and all its
// edges).  Stops when an iteration removes nothing.
inline DecodeOutcome peel_batch(ResidualGraph& residual, const DecodingModel& model,
                                std::uint64_t seed) {
  model.validate_or_throw();
  const auto& g = residual.graph();
  if (model.kind == DecodingKind::beyond_bdd && g.spec().components.size() != 1)
    throw std::invalid_argument("peel_batch: beyond-bdd profiles apply to one component code");
  int max_nc = 0;
  for (const auto& c : g.spec().components) max_nc = std::max(max_nc, c.code.n_c);
  const long long cap = 10LL * g.L() * max_nc;
  const std::uint32_t C = static_cast<std::uint32_t>(g.num_constraints());
  Xoshiro256 rng(derive_seed(seed, 0x9e3779b97f4a7c15ULL));

  std::vector<int> limit(g.spec().components.size());
  for (std::size_t i = 0; i < limit.size(); ++i) {
    const auto& code = g.spec().components[i].code;
    limit[i] = model.kind == DecodingKind::beyond_bdd ? model.profile->t_c
                                                      : detail::recover_limit(model, code);
  }
  const DecodingProfile* pr = model.profile ? &*model.profile : nullptr;

  long long iterations = 0;
  bool hit_cap = false;
  std::vector<std::uint32_t> recoverable;
  std::vector<std::uint32_t> recovered;
  while (true) {
    recoverable.clear();
    for (std::uint32_t c = 0; c < C; ++c) {
      const int d = residual.total_degree(c);
      if (d < 1) continue;
      const int a = limit[static_cast<std::size_t>(g.component_of_constraint(c))];
      if (d <= a) {
        recoverable.push_back(c);
      } else if (pr && d <= pr->t_m) {
        const double reject = pr->beta_at(d);
        double u;
        if (model.sticky_draws)
          u = detail::unit_uniform(derive_seed(seed, c, static_cast<std::uint64_t>(d)));
        else
          u = rng.uniform01();
        if (u >= reject) recoverable.push_back(c);
      }
    }
    if (recoverable.empty()) break;
    // processing order inside an iteration must not matter; shuffle to make
    // any accidental dependence visible to the property tests
    shuffle(recoverable.data(), recoverable.size(), rng);
    recovered.clear();
    for (auto c : recoverable)
      residual.for_each_edge(c,
                             [&](std::uint32_t u, std::uint8_t) { recovered.push_back(u); });
    // a variable appears once per edge into the recoverable set; dedupe
    std::sort(recovered.begin(), recovered.end());
    recovered.erase(std::unique(recovered.begin(), recovered.end()), recovered.end());
    for (auto u : recovered) residual.remove_variable(u);
    ++iterations;
    if (iterations >= cap) {
      hit_cap = residual.residual_edges() > 0;
      break;
    }
  }
  return detail::finish_outcome(residual, iterations, hit_cap);
}

// Incremental variant: one uniformly chosen recoverable edge per step; the
// variable on that edge is recovered and all its edges removed.  Defined only
// for the deterministic models.
inline DecodeOutcome peel_incremental(ResidualGraph& residual, const DecodingModel& model,
                                      std::uint64_t seed) {
  model.validate_or_throw();
  if (!model.deterministic())
    throw std::invalid_argument("peel_incremental: beyond-bdd has no incremental variant");
  const auto& g = residual.graph();
  const std::uint32_t C = static_cast<std::uint32_t>(g.num_constraints());
  std::vector<int> limit(g.spec().components.size());
  for (std::size_t i = 0; i < limit.size(); ++i)
    limit[i] = detail::recover_limit(model, g.spec().components[i].code);

  Xoshiro256 rng(derive_seed(seed, 0x6a09e667f3bcc909ULL));
  long long steps = 0;
  while (true) {
    long long K = 0;
    for (std::uint32_t c = 0; c < C; ++c) {
      const int d = residual.total_degree(c);
      if (d >= 1 && d <= limit[static_cast<std::size_t>(g.component_of_constraint(c))]) K += d;
    }
    if (K == 0) break;
    long long r = static_cast<long long>(rng.below(static_cast<std::uint64_t>(K)));
    std::uint32_t var = 0;
    for (std::uint32_t c = 0; c < C; ++c) {
      const int d = residual.total_degree(c);
      if (d < 1 || d > limit[static_cast<std::size_t>(g.component_of_constraint(c))]) continue;
      if (r < d) {
        int j = 0;
        residual.for_each_edge(c, [&](std::uint32_t u, std::uint8_t) {
          if (j++ == r) var = u;
        });
        break;
      }
      r -= d;
    }
    residual.remove_variable(var);
    ++steps;
  }
  return detail::finish_outcome(residual, steps, false);
}

// ---------------------------------------------------------------------------
// Single-step trend statistics.
//
// For a fixed degree-type state of one sub-ensemble (L = 1, a single
// interleaver), the expected one-step change in the count of degree-type-i
// constraints at index tau is
//
//   E[dR_tau(i)] = [ -i R_tau(i) + (i+1) R_tau(i+1) ] (v-1) / F,
//
// for un-recoverable types (total degree > recovery limit), with F the total
// residual edge count.  The expectation is over graphs drawn uniformly given
// the degree-type state, so each trial re-pairs variable stubs with
// constraint slots (preserving every constraint's typed counts) before taking
// one incremental step.
// ---------------------------------------------------------------------------

struct TrendRow {
  int constraint_index = 0;
  std::vector<int> type;  // degree-type vector at that index
  double predicted = 0;
  double empirical = 0;
  double std_error = 0;
};

struct TrendReport {
  long long trials = 0;
  long long residual_edges = 0;  // F
  std::vector<TrendRow> rows;
};

inline TrendReport trend_check(const ResidualGraph& residual, const DecodingModel& model,
                               long long trials, std::uint64_t seed) {
  model.validate_or_throw();
  if (!model.deterministic())
    throw std::invalid_argument("trend_check: requires a deterministic recovery rule");
  const auto& g = residual.graph();
  if (g.L() != 1)
    throw std::invalid_argument("trend_check: residual must cover a single variable index");
  if (g.spec().components.size() != 1)
    throw std::invalid_argument("trend_check: single-component ensembles only");
  if (trials < 1) throw std::invalid_argument("trend_check: trials must be >= 1");
  const int w = g.w();
  const int v = g.v();
  if (v > 8) throw std::invalid_argument("trend_check: v > 8 not supported");
  const std::uint32_t C = static_cast<std::uint32_t>(g.num_constraints());
  const long long F = residual.residual_edges();

  // With L = 1 every constraint at spatial index tau holds only type-tau
  // edges, so a degree-type is (index, total degree).
  std::vector<int> deg0(static_cast<std::size_t>(C));
  std::vector<int> lim(static_cast<std::size_t>(C));
  long long rec_slots = 0;
  for (std::uint32_t c = 0; c < C; ++c) {
    deg0[c] = residual.total_degree(c);
    lim[c] = detail::recover_limit(model, g.spec().components[static_cast<std::size_t>(
                                              g.component_of_constraint(c))].code);
    if (deg0[c] >= 1 && deg0[c] <= lim[c]) rec_slots += deg0[c];
  }
  if (rec_slots == 0) throw std::invalid_argument("trend_check: no recoverable edge");

  // R[tau][i] from the input state; tracked keys are un-recoverable (tau, i)
  // with mass in R(i) or R(i+1).
  std::map<std::pair<int, int>, long long> R;
  for (std::uint32_t c = 0; c < C; ++c)
    if (deg0[c] > 0) ++R[{g.constraint_spatial_index(c), deg0[c]}];
  std::map<std::pair<int, int>, std::size_t> tracked;  // key -> row slot
  std::vector<TrendRow> rows;
  auto track = [&](int tau, int i) {
    if (i <= lim[0]) return;
    const auto key = std::make_pair(tau, i);
    if (tracked.count(key)) return;
    tracked[key] = rows.size();
    TrendRow row;
    row.constraint_index = tau;
    row.type.assign(static_cast<std::size_t>(w), 0);
    row.type[static_cast<std::size_t>(tau)] = i;
    const long long Ri = R.count({tau, i}) ? R[{tau, i}] : 0;
    const long long Rn = R.count({tau, i + 1}) ? R[{tau, i + 1}] : 0;
    row.predicted = (-static_cast<double>(i) * Ri + static_cast<double>(i + 1) * Rn) *
                    (v - 1) / static_cast<double>(F);
    rows.push_back(std::move(row));
  };
  for (const auto& [key, count] : R) {
    (void)count;
    track(key.first, key.second);
    track(key.first, key.second - 1);
  }

  // Flatten the state once: a slot per residual edge, its constraint id, plus
  // the recoverable slots (the set is the same in every trial because typed
  // counts are preserved by the re-pairing).
  std::vector<std::uint32_t> slot_cons;
  slot_cons.reserve(static_cast<std::size_t>(F));
  std::vector<std::uint32_t> rec_slot_ids;
  rec_slot_ids.reserve(static_cast<std::size_t>(rec_slots));
  for (std::uint32_t c = 0; c < C; ++c) {
    const bool rec = deg0[c] >= 1 && deg0[c] <= lim[c];
    for (int j = 0; j < deg0[c]; ++j) {
      if (rec) rec_slot_ids.push_back(static_cast<std::uint32_t>(slot_cons.size()));
      slot_cons.push_back(c);
    }
  }
  std::vector<std::uint32_t> owners;  // dense alive-variable id per stub
  owners.reserve(static_cast<std::size_t>(F));
  long long alive = residual.alive_variables();
  for (long long u = 0, dense = 0; u < g.num_variables(); ++u) {
    if (!residual.variable_alive(static_cast<std::uint32_t>(u))) continue;
    for (int e = 0; e < v; ++e) owners.push_back(static_cast<std::uint32_t>(dense));
    ++dense;
  }

  Xoshiro256 rng(derive_seed(seed, 0xbb67ae8584caa73bULL));
  std::vector<double> sum(rows.size(), 0), sumsq(rows.size(), 0);
  std::vector<std::uint32_t> var_slots(static_cast<std::size_t>(alive) * v);
  std::vector<int> var_fill(static_cast<std::size_t>(alive));
  std::vector<double> delta(rows.size());
  for (long long t = 0; t < trials; ++t) {
    shuffle(owners.data(), owners.size(), rng);
    std::fill(var_fill.begin(), var_fill.end(), 0);
    for (std::uint32_t s = 0; s < owners.size(); ++s) {
      const std::uint32_t u = owners[s];
      var_slots[static_cast<std::size_t>(u) * v + var_fill[u]++] = s;
    }
    const std::uint32_t pick =
        rec_slot_ids[rng.below(static_cast<std::uint64_t>(rec_slot_ids.size()))];
    const std::uint32_t u = owners[pick];
    std::fill(delta.begin(), delta.end(), 0.0);
    // hits per affected constraint (v slots, possibly repeated constraints)
    std::uint32_t cs[8];
    int hits[8];
    int ncs = 0;
    for (int e = 0; e < v; ++e) {
      const std::uint32_t c = slot_cons[var_slots[static_cast<std::size_t>(u) * v + e]];
      int j = 0;
      while (j < ncs && cs[j] != c) ++j;
      if (j == ncs) {
        cs[ncs] = c;
        hits[ncs++] = 1;
      } else {
        ++hits[j];
      }
    }
    for (int j = 0; j < ncs; ++j) {
      const int tau = g.constraint_spatial_index(cs[j]);
      const int od = deg0[cs[j]];
      const int nd = od - hits[j];
      auto it = tracked.find({tau, od});
      if (it != tracked.end()) delta[it->second] -= 1.0;
      it = tracked.find({tau, nd});
      if (it != tracked.end()) delta[it->second] += 1.0;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      sum[r] += delta[r];
      sumsq[r] += delta[r] * delta[r];
    }
  }
  TrendReport report;
  report.trials = trials;
  report.residual_edges = F;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].empirical = sum[r] / static_cast<double>(trials);
    const double var_est =
        trials > 1
            ? std::max(0.0, (sumsq[r] - sum[r] * sum[r] / static_cast<double>(trials)) /
                                static_cast<double>(trials - 1))
            : 0.0;
    rows[r].std_error = std::sqrt(var_est / static_cast<double>(trials));
  }
  report.rows = std::move(rows);
  return report;
}

// ---------------------------------------------------------------------------
// Monte-Carlo harness.
// ---------------------------------------------------------------------------

struct TrialRecord {
  std::uint64_t seed = 0;
  std::uint8_t success = 0;
  std::uint8_t capped = 0;
  long long iterations = 0;
  long long residual_edges = 0;
  long long unrecovered = 0;
};

struct SimulationStats {
  long long trials = 0;
  Channel channel = Channel::BEC;
  double p = 0;
  long long variables_per_trial = 0;
  long long unrecovered_total = 0;
  double output_prob = 0;     // unrecovered variables / (trials * L * N)
  double output_prob_se = 0;  // standard error of the per-trial fraction mean
  long long failed_trials = 0;
  double failure_rate = 0;
  double mean_iterations = 0;
  long long capped_trials = 0;
  std::vector<double> index_profile;  // mean unrecovered fraction per variable index
};

// Each trial samples a fresh graph and noise realization from per-trial
// derived seeds, so results are bit-identical for any worker count.
inline SimulationStats monte_carlo(const EnsembleSpec& spec, int L, ChannelSpec channel,
                                   const DecodingModel& model, long long trials,
                                   std::uint64_t seed, int parallelism = 1,
                                   std::ostream* trial_log = nullptr) {
  validate_or_throw(spec);
  model.validate_or_throw();
  if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
  if (!(channel.p >= 0.0 && channel.p <= 1.0))
    throw std::domain_error("monte_carlo: p must be in [0,1]");
  const int workers = std::max(
      1, std::min<int>(parallelism, static_cast<int>(std::min<long long>(trials, 256))));

  std::vector<TrialRecord> records(static_cast<std::size_t>(trials));
  std::vector<std::vector<long long>> profile_parts(
      static_cast<std::size_t>(workers), std::vector<long long>(static_cast<std::size_t>(L), 0));
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_range = [&](int wi, long long lo, long long hi) {
    try {
      auto& profile = profile_parts[static_cast<std::size_t>(wi)];
      for (long long t = lo; t < hi; ++t) {
        const std::uint64_t ts = derive_seed(seed, static_cast<std::uint64_t>(t));
        const CodeGraph graph(spec, L, derive_seed(ts, 1));
        ResidualGraph residual = apply_channel(graph, channel, derive_seed(ts, 2));
        const DecodeOutcome out = peel_batch(residual, model, derive_seed(ts, 3));
        auto& rec = records[static_cast<std::size_t>(t)];
        rec.seed = ts;
        rec.success = out.success ? 1 : 0;
        rec.capped = out.hit_iteration_cap ? 1 : 0;
        rec.iterations = out.iterations;
        rec.residual_edges = out.residual_edges;
        long long unrec = 0;
        for (std::size_t k = 0; k < out.unrecovered_by_index.size(); ++k) {
          unrec += out.unrecovered_by_index[k];
          profile[k] += out.unrecovered_by_index[k];
        }
        rec.unrecovered = unrec;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (workers == 1) {
    run_range(0, 0, trials);
  } else {
    std::vector<std::thread> pool;
    const long long chunk = (trials + workers - 1) / workers;
    for (int wi = 0; wi < workers; ++wi) {
      const long long lo = wi * chunk;
      const long long hi = std::min<long long>(trials, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, wi, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SimulationStats stats;
  stats.trials = trials;
  stats.channel = channel.kind;
  stats.p = channel.p;
  stats.variables_per_trial = static_cast<long long>(L) * spec.N();
  long long iter_total = 0;
  double frac_sum = 0, frac_sumsq = 0;
  for (const auto& rec : records) {
    stats.unrecovered_total += rec.unrecovered;
    stats.failed_trials += rec.success ? 0 : 1;
    stats.capped_trials += rec.capped;
    iter_total += rec.iterations;
    const double f =
        static_cast<double>(rec.unrecovered) / static_cast<double>(stats.variables_per_trial);
    frac_sum += f;
    frac_sumsq += f * f;
  }
  stats.output_prob = frac_sum / static_cast<double>(trials);
  if (trials > 1) {
    const double var_est = std::max(
        0.0, (frac_sumsq - frac_sum * frac_sum / static_cast<double>(trials)) /
                 static_cast<double>(trials - 1));
    stats.output_prob_se = std::sqrt(var_est / static_cast<double>(trials));
  }
  stats.failure_rate = static_cast<double>(stats.failed_trials) / static_cast<double>(trials);
  stats.mean_iterations = static_cast<double>(iter_total) / static_cast<double>(trials);
  stats.index_profile.assign(static_cast<std::size_t>(L), 0.0);
  const double denom = static_cast<double>(trials) * static_cast<double>(spec.N());
  for (const auto& part : profile_parts)
    for (std::size_t k = 0; k < part.size(); ++k)
      stats.index_profile[k] += static_cast<double>(part[k]);
  for (auto& x : stats.index_profile) x /= denom;

  if (trial_log) {
    for (long long t = 0; t < trials; ++t) {
      const auto& rec = records[static_cast<std::size_t>(t)];
      *trial_log << "{\"trial\":" << t << ",\"seed\":" << rec.seed << ",\"p\":" << channel.p
                 << ",\"success\":" << (rec.success ? "true" : "false")
                 << ",\"iterations\":" << rec.iterations
                 << ",\"residual_edges\":" << rec.residual_edges << "}\n";
    }
  }
  return stats;
}

// Bisection on the channel parameter until the Monte-Carlo output probability
// estimate crosses target_prob.
inline ThresholdResult simulated_threshold(const EnsembleSpec& spec, int L, Channel channel,
                                           const DecodingModel& model, double target_prob,
                                           long long trials_per_point, std::uint64_t seed,
                                           double tol_p = 1e-3, int parallelism = 1) {
  validate_or_throw(spec);
  if (!(target_prob > 0.0 && target_prob < 1.0))
    throw std::domain_error("simulated_threshold: target_prob must be in (0,1)");
  // p = 0 yields an empty residual, so the lower bracket is exact; p = 1
  // erases everything and no valid spec recovers from a full lattice
  double lo = 0.0, hi = 1.0;
  ThresholdResult result;
  result.method = ThresholdMethod::simulation;
  int point = 0;
  while (hi - lo > tol_p) {
    const double mid = 0.5 * (lo + hi);
    const auto stats =
        monte_carlo(spec, L, ChannelSpec{channel, mid}, model, trials_per_point,
                    derive_seed(seed, static_cast<std::uint64_t>(point++)), parallelism);
    if (stats.output_prob > target_prob)
      hi = mid;
    else
      lo = mid;
  }
  result.p_star = 0.5 * (lo + hi);
  result.tolerance = 0.5 * (hi - lo);
  result.diag.bracket_lo = lo;
  result.diag.bracket_hi = hi;
  result.diag.iterations = point;
  result.diag.note = "midpoint of the last Monte-Carlo bisection bracket";
  return result;
}

}  // namespace scsc
