#pragma once
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scsc/numerics.hpp"
#include "scsc/rng.hpp"

// Spatially-coupled split-component ensembles E(C, v, M, w): component code
// specs, ensemble validation, design rates, staircase instantiation, graph
// sampling with per-index interleavers, and decoupling-interleaver counting.

namespace scsc {

struct ComponentCodeSpec {
  int n_c = 0;  // block length
  int k_c = 0;  // dimension
  int d_c = 0;  // minimum distance

  int t_c() const { return (d_c - 1) / 2; }
  double rate() const { return static_cast<double>(k_c) / static_cast<double>(n_c); }

  std::string id() const {
    std::ostringstream os;
    os << "c" << n_c << "_" << k_c << "_" << d_c;
    return os.str();
  }
};

struct EnsembleComponent {
  ComponentCodeSpec code;
  int multiplicity = 1;  // M_i constraint nodes per spatial index
};

struct EnsembleSpec {
  std::vector<EnsembleComponent> components;
  int v = 2;  // variable degree
  int w = 2;  // coupling width

  // Sum_i M_i n_{i,c} = N v: constraint half-edges per spatial index.
  long long total_slots() const {
    long long s = 0;
    for (const auto& c : components)
      s += static_cast<long long>(c.multiplicity) * c.code.n_c;
    return s;
  }

  long long N() const { return total_slots() / v; }

  int total_multiplicity() const {
    int m = 0;
    for (const auto& c : components) m += c.multiplicity;
    return m;
  }

  double rho(std::size_t i) const {
    return static_cast<double>(static_cast<long long>(components[i].multiplicity) *
                               components[i].code.n_c) /
           static_cast<double>(total_slots());
  }

  double mixture_rate() const {  // sum_i rho_i R_{i,c}
    double r = 0;
    for (std::size_t i = 0; i < components.size(); ++i) r += rho(i) * components[i].code.rate();
    return r;
  }
};

struct EnsembleValidationError : std::invalid_argument {
  std::vector<std::string> errors;
  explicit EnsembleValidationError(std::vector<std::string> errs)
      : std::invalid_argument(join(errs)), errors(std::move(errs)) {}

 private:
  static std::string join(const std::vector<std::string>& errs) {
    std::string s = "invalid ensemble:";
    for (const auto& e : errs) s += "\n  - " + e;
    return s;
  }
};

// Returns every violated constraint, named; empty means valid.
inline std::vector<std::string> validate(const EnsembleSpec& spec) {
  std::vector<std::string> errors;
  if (spec.components.empty()) {
    errors.push_back("ensemble needs at least one component code");
    return errors;
  }
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    const auto& comp = spec.components[i];
    const auto& c = comp.code;
    std::ostringstream tag;
    tag << " (component " << i << ": n_c=" << c.n_c << ", k_c=" << c.k_c << ", d_c=" << c.d_c
        << ")";
    if (c.n_c < 1 || c.k_c < 1 || c.k_c > c.n_c)
      errors.push_back("k_c must satisfy 1 <= k_c <= n_c" + tag.str());
    if (c.d_c < 2 || c.d_c > c.n_c)
      errors.push_back("d_c must satisfy 2 <= d_c <= n_c" + tag.str());
    if (comp.multiplicity < 1) errors.push_back("multiplicity must be >= 1" + tag.str());
    if (spec.w >= 1 && c.n_c >= 1 && c.n_c % spec.w != 0)
      errors.push_back("w must divide n_c" + tag.str());
  }
  if (spec.v < 2) errors.push_back("v must be >= 2");
  if (spec.w < 2) errors.push_back("w must be >= 2");
  if (spec.v >= 2 && spec.total_slots() % spec.v != 0)
    errors.push_back("N = sum_i M_i n_c / v must be an integer");
  if (spec.v >= 2 && !spec.components.empty()) {
    const double asym = spec.mixture_rate();
    if (!(asym > 1.0 - 1.0 / static_cast<double>(spec.v)))
      errors.push_back("nonpositive design rate (requires sum_i rho_i R_c > 1 - 1/v)");
  }
  return errors;
}

inline void validate_or_throw(const EnsembleSpec& spec) {
  auto errs = validate(spec);
  if (!errs.empty()) throw EnsembleValidationError(std::move(errs));
}

// Density-evolution analysis works from the component tails alone, so the
// interleaver constraints (w | n_c, integral N) do not apply; only the codes,
// the degree, and the rate condition have to make sense.
inline std::vector<std::string> validate_analysis(const EnsembleSpec& spec) {
  std::vector<std::string> errors;
  if (spec.components.empty()) {
    errors.push_back("ensemble needs at least one component code");
    return errors;
  }
  for (const auto& comp : spec.components) {
    const auto& c = comp.code;
    if (c.n_c < 1 || c.k_c < 1 || c.k_c > c.n_c)
      errors.push_back("k_c must satisfy 1 <= k_c <= n_c (" + c.id() + ")");
    if (c.d_c < 2 || c.d_c > c.n_c)
      errors.push_back("d_c must satisfy 2 <= d_c <= n_c (" + c.id() + ")");
    if (comp.multiplicity < 1) errors.push_back("multiplicity must be >= 1 (" + c.id() + ")");
  }
  if (spec.v < 2) errors.push_back("v must be >= 2");
  if (spec.v >= 2 && !(spec.mixture_rate() > 1.0 - 1.0 / static_cast<double>(spec.v)))
    errors.push_back("nonpositive design rate (requires sum_i rho_i R_c > 1 - 1/v)");
  return errors;
}

inline void validate_analysis_or_throw(const EnsembleSpec& spec) {
  auto errs = validate_analysis(spec);
  if (!errs.empty()) throw EnsembleValidationError(std::move(errs));
}

// Staircase instantiation: M = n_c/2, w = 2, v = 2, hence N = (n_c/2)^2.
inline EnsembleSpec staircase_spec(const ComponentCodeSpec& code) {
  if (code.n_c % 2 != 0) throw std::domain_error("staircase_spec: n_c must be even");
  EnsembleSpec spec;
  spec.components = {{code, code.n_c / 2}};
  spec.v = 2;
  spec.w = 2;
  return spec;
}

// R(L) = 1 - (L+w-1) sum_i M_i(n_i - k_i) / (L N)
inline double design_rate(const EnsembleSpec& spec, long long L) {
  if (L < 1) throw std::domain_error("design_rate: require L >= 1");
  long long parity = 0;
  for (const auto& c : spec.components)
    parity += static_cast<long long>(c.multiplicity) * (c.code.n_c - c.code.k_c);
  return 1.0 - static_cast<double>(L + spec.w - 1) * static_cast<double>(parity) /
                   (static_cast<double>(L) * static_cast<double>(spec.N()));
}

// R = 1 - v(1 - sum_i rho_i R_{i,c})
inline double design_rate_asymptotic(const EnsembleSpec& spec) {
  return 1.0 - static_cast<double>(spec.v) * (1.0 - spec.mixture_rate());
}

// ---------------------------------------------------------------------------
// Sampled code graph.
//
// Constraint half-edge slots at one spatial index are laid out positionally:
// type segments first (tau = 0..w-1), inside a segment the components in
// declaration order, inside a component its M_i nodes, each contributing
// n_i/w contiguous slots.  The interleaver at variable index k is a single
// permutation of that layout; the type-tau segment belongs to constraint
// index k+tau, which makes the "bundle of type tau connects to index k-tau"
// rule positional.  Bundles whose partner index falls outside [L] are
// suppressed: no interleaver ever references them.
// ---------------------------------------------------------------------------

class CodeGraph {
 public:
  struct StubTarget {
    std::uint32_t constraint;  // global constraint node id
    std::uint8_t type;         // tau
  };

  CodeGraph(EnsembleSpec spec, int L, std::uint64_t seed)
      : spec_(std::move(spec)), L_(L), seed_(seed) {
    validate_or_throw(spec_);
    if (L < 1) throw std::domain_error("CodeGraph: require L >= 1");
    build_layout();
    interleavers_.resize(static_cast<std::size_t>(L_));
    const std::size_t nv = static_cast<std::size_t>(slots_per_index_);
    for (int k = 0; k < L_; ++k) {
      auto& perm = interleavers_[static_cast<std::size_t>(k)];
      perm.resize(nv);
      std::iota(perm.begin(), perm.end(), 0u);
      Xoshiro256 rng(derive_seed(seed_, static_cast<std::uint64_t>(k)));
      shuffle(perm.data(), perm.size(), rng);
    }
  }

  // Deserialization path: adopt explicit interleavers (validated for shape).
  CodeGraph(EnsembleSpec spec, int L, std::uint64_t seed,
            std::vector<std::vector<std::uint32_t>> interleavers)
      : spec_(std::move(spec)), L_(L), seed_(seed), interleavers_(std::move(interleavers)) {
    validate_or_throw(spec_);
    if (L < 1) throw std::domain_error("CodeGraph: require L >= 1");
    build_layout();
    if (interleavers_.size() != static_cast<std::size_t>(L_))
      throw std::invalid_argument("CodeGraph: need one interleaver per spatial index");
    for (const auto& perm : interleavers_) {
      if (perm.size() != static_cast<std::size_t>(slots_per_index_))
        throw std::invalid_argument("CodeGraph: interleaver size must be N*v");
      std::vector<bool> seen(perm.size(), false);
      for (auto s : perm) {
        if (s >= perm.size() || seen[s])
          throw std::invalid_argument("CodeGraph: interleaver is not a permutation");
        seen[s] = true;
      }
    }
  }

  const EnsembleSpec& spec() const { return spec_; }
  int L() const { return L_; }
  std::uint64_t seed() const { return seed_; }
  int w() const { return spec_.w; }
  int v() const { return spec_.v; }
  long long N() const { return spec_.N(); }

  int constraint_indices() const { return L_ + spec_.w - 1; }
  int constraints_per_index() const { return m_total_; }
  long long num_constraints() const {
    return static_cast<long long>(constraint_indices()) * m_total_;
  }
  long long num_variables() const { return static_cast<long long>(L_) * N(); }
  long long total_edges() const { return num_variables() * spec_.v; }
  long long slots_per_index() const { return slots_per_index_; }

  const std::vector<std::uint32_t>& interleaver(int k) const {
    return interleavers_[static_cast<std::size_t>(k)];
  }

  // Variable u at index k owns stubs [u*v, (u+1)*v) of that index's interleaver.
  StubTarget stub_target(int k, std::uint32_t s) const {
    const std::uint32_t q = interleavers_[static_cast<std::size_t>(k)][s];
    const std::uint32_t seg = static_cast<std::uint32_t>(slots_per_type_);
    const std::uint32_t tau = q / seg;
    std::uint32_t r = q - tau * seg;
    std::size_t comp = 0;
    while (r >= type_comp_end_[comp]) ++comp;
    if (comp > 0) r -= type_comp_end_[comp - 1];
    const int slots_per_node = spec_.components[comp].code.n_c / spec_.w;
    const std::uint32_t node =
        comp_node_base_[comp] + r / static_cast<std::uint32_t>(slots_per_node);
    const std::uint32_t cid =
        (static_cast<std::uint32_t>(k) + tau) * static_cast<std::uint32_t>(m_total_) + node;
    return {cid, static_cast<std::uint8_t>(tau)};
  }

  int component_of_constraint(std::uint32_t cid) const {
    const std::uint32_t node = cid % static_cast<std::uint32_t>(m_total_);
    std::size_t comp = 0;
    while (comp + 1 < comp_node_base_.size() && node >= comp_node_base_[comp + 1]) ++comp;
    return static_cast<int>(comp);
  }

  int constraint_spatial_index(std::uint32_t cid) const {
    return static_cast<int>(cid / static_cast<std::uint32_t>(m_total_));
  }

  bool bundle_suppressed(int j, int tau) const { return j - tau < 0 || j - tau >= L_; }

 private:
  void build_layout() {
    m_total_ = spec_.total_multiplicity();
    slots_per_index_ = spec_.total_slots();
    slots_per_type_ = slots_per_index_ / spec_.w;
    type_comp_end_.clear();
    comp_node_base_.clear();
    std::uint32_t acc = 0, nodes = 0;
    for (const auto& c : spec_.components) {
      comp_node_base_.push_back(nodes);
      nodes += static_cast<std::uint32_t>(c.multiplicity);
      acc += static_cast<std::uint32_t>(c.multiplicity * (c.code.n_c / spec_.w));
      type_comp_end_.push_back(acc);
    }
  }

  EnsembleSpec spec_;
  int L_;
  std::uint64_t seed_;
  int m_total_ = 0;
  long long slots_per_index_ = 0;
  long long slots_per_type_ = 0;
  std::vector<std::uint32_t> type_comp_end_;   // per component, end offset inside a type segment
  std::vector<std::uint32_t> comp_node_base_;  // per component, first node id at an index
  std::vector<std::vector<std::uint32_t>> interleavers_;
};

inline CodeGraph sample_graph(const EnsembleSpec& spec, int L, std::uint64_t seed) {
  return CodeGraph(spec, L, seed);
}

// Probability that a uniformly sampled interleaver of size Nv decouples:
// N!(v!)^N / (vN)!, via log-factorials.
inline double decoupling_log_probability(long long N, int v) {
  if (N < 1 || v < 2) throw std::domain_error("decoupling_probability: require N >= 1, v >= 2");
  const double dN = static_cast<double>(N);
  const double dv = static_cast<double>(v);
  return std::lgamma(dN + 1) + dN * std::lgamma(dv + 1) - std::lgamma(dv * dN + 1);
}

inline double decoupling_probability(long long N, int v) {
  return std::exp(decoupling_log_probability(N, v));
}

// Per-index degree-type histogram of the residual implied by an erasure mask:
// counts of constraint nodes at spatial index k per (i_0,...,i_{w-1}).
inline std::map<std::vector<int>, long long> empirical_initial_dd(
    const CodeGraph& graph, const std::vector<std::uint8_t>& erased, int k) {
  if (k < 0 || k >= graph.constraint_indices())
    throw std::domain_error("empirical_initial_dd: k out of range");
  if (erased.size() != static_cast<std::size_t>(graph.num_variables()))
    throw std::invalid_argument("empirical_initial_dd: mask must cover all variables");
  const int w = graph.w();
  const int m = graph.constraints_per_index();
  const long long nv = graph.slots_per_index();
  std::vector<int> counts(static_cast<std::size_t>(m) * static_cast<std::size_t>(w), 0);
  for (int tau = 0; tau < w; ++tau) {
    const int kv = k - tau;
    if (kv < 0 || kv >= graph.L()) continue;
    for (long long s = 0; s < nv; ++s) {
      const long long var = static_cast<long long>(kv) * graph.N() + s / graph.v();
      if (!erased[static_cast<std::size_t>(var)]) continue;
      const auto t = graph.stub_target(kv, static_cast<std::uint32_t>(s));
      if (t.type != tau) continue;  // this stub lands at a different constraint index
      const int node = static_cast<int>(t.constraint % static_cast<std::uint32_t>(m));
      ++counts[static_cast<std::size_t>(node) * static_cast<std::size_t>(w) +
               static_cast<std::size_t>(tau)];
    }
  }
  std::map<std::vector<int>, long long> hist;
  std::vector<int> key(static_cast<std::size_t>(w));
  for (int node = 0; node < m; ++node) {
    for (int tau = 0; tau < w; ++tau)
      key[static_cast<std::size_t>(tau)] =
          counts[static_cast<std::size_t>(node) * static_cast<std::size_t>(w) +
                 static_cast<std::size_t>(tau)];
    ++hist[key];
  }
  return hist;
}

}  // namespace scsc
