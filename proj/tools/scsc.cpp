// scsc: command-line front end for spatially-coupled split-component code
// ensembles.  Subcommands cover design rates, graph sampling, peeling-decoder
// Monte Carlo, analytical thresholds (coupled recursion, potential, weight
// pulling, simulation), figure-style threshold sweeps, decoupling
// probabilities, and single-step trend checks.
//
// Conventions shared by every subcommand:
//   - one JSON run record on stdout embedding the resolved config and tool
//     version, so any run can be reproduced from its own output;
//   - optional --config FILE with the same keys as the flags (flags win);
//   - exit code 0 on success, 2 on validation/usage errors, 3 on numerical
//     non-convergence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scsc/ensemble.hpp"
#include "scsc/io.hpp"
#include "scsc/peeling.hpp"
#include "scsc/potential.hpp"
#include "scsc/recursion.hpp"
#include "scsc/version.hpp"

namespace {

using nlohmann::ordered_json;
using namespace scsc;

// ---------------------------------------------------------------------------
// Options and config merging
// ---------------------------------------------------------------------------

struct Options {
  std::string config_path;
  std::vector<std::string> codes;  // "n,k,d[,mult]" per component
  bool staircase = false;
  int v = 2;
  int w = 2;
  int L = 0;  // 0 = unset
  std::string channel = "bec";
  double p = -1.0;  // < 0 = unset
  std::string model;  // empty = follow the channel
  std::string profile = "existence";
  int t_m = 0;  // 0 = default horizon
  bool sticky = false;
  long long trials = 1000;
  int parallelism = 1;
  std::optional<std::uint64_t> seed;
  std::string method = "recursion";
  double target_prob = 1e-3;
  long long trials_per_point = 400;
  double tol_p = 1e-7;
  bool tol_p_given = false;
  double tol_fix = 1e-10;
  long long max_iter = 100000;
  int analysis_w = 2;
  bool analysis_w_given = false;
  int analysis_L = 200;
  bool analysis_L_given = false;
  std::vector<double> rho_grid;
  std::string figure = "bec";
  bool full = false;
  bool with_mixtures = false;
  long long N = 2;
  bool enumerate_matchings = false;
  std::string csv_path;
  std::string out_path;
  std::string trial_log_path;

  std::vector<EnsembleComponent> components;  // resolved from codes/config
};

EnsembleComponent parse_code(const std::string& text) {
  EnsembleComponent comp;
  char extra = 0;
  const int got = std::sscanf(text.c_str(), "%d,%d,%d,%d%c", &comp.code.n_c, &comp.code.k_c,
                              &comp.code.d_c, &comp.multiplicity, &extra);
  if (got == 4) return comp;
  comp.multiplicity = 1;
  if (std::sscanf(text.c_str(), "%d,%d,%d%c", &comp.code.n_c, &comp.code.k_c, &comp.code.d_c,
                  &extra) == 3)
    return comp;
  throw std::invalid_argument("--code expects n,k,d or n,k,d,multiplicity; got '" + text + "'");
}

// Fill every option the command line left untouched from the config file.
void apply_config(Options& o, const CLI::App& cmd, const nlohmann::json& j) {
  auto unset = [&](const std::string& flag) {
    const auto* opt = cmd.get_option_no_throw(flag);
    return opt == nullptr || opt->count() == 0;
  };
  if (j.contains("ensemble")) {
    const auto es = ensemble_from_json(j.at("ensemble"));
    if (unset("--code")) o.components = es.components;
    if (unset("--v")) o.v = es.v;
    if (unset("--w")) o.w = es.w;
  }
  auto scalar = [&](const char* key, const char* flag, auto& dst) {
    if (j.contains(key) && unset(flag)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  scalar("L", "--L", o.L);
  scalar("channel", "--channel", o.channel);
  scalar("p", "--p", o.p);
  if (j.contains("model") && unset("--model")) {
    const auto& m = j.at("model");
    if (m.is_string()) {
      o.model = m.get<std::string>();
    } else {  // run records embed the model as {kind, profile?, t_m?, sticky?}
      o.model = m.at("kind").get<std::string>();
      if (m.contains("profile") && unset("--profile"))
        o.profile = m.at("profile").get<std::string>();
      if (m.contains("t_m") && unset("--t-m")) o.t_m = m.at("t_m").get<int>();
      if (m.contains("sticky") && unset("--sticky")) o.sticky = m.at("sticky").get<bool>();
    }
  }
  scalar("profile", "--profile", o.profile);
  scalar("t_m", "--t-m", o.t_m);
  scalar("sticky", "--sticky", o.sticky);
  scalar("trials", "--trials", o.trials);
  scalar("parallelism", "--parallelism", o.parallelism);
  scalar("method", "--method", o.method);
  scalar("target_prob", "--target-prob", o.target_prob);
  scalar("trials_per_point", "--trials-per-point", o.trials_per_point);
  scalar("tol_fix", "--tol-fix", o.tol_fix);
  scalar("max_iter", "--max-iter", o.max_iter);
  scalar("rho_grid", "--rho-grid", o.rho_grid);
  scalar("figure", "--figure", o.figure);
  scalar("full", "--full", o.full);
  scalar("with_mixtures", "--with-mixtures", o.with_mixtures);
  scalar("N", "--N", o.N);
  scalar("enumerate", "--enumerate", o.enumerate_matchings);
  scalar("staircase", "--staircase", o.staircase);
  scalar("csv", "--csv", o.csv_path);
  scalar("out", "--out", o.out_path);
  scalar("trial_log", "--trial-log", o.trial_log_path);
  if (j.contains("tol_p") && unset("--tol-p")) {
    o.tol_p = j.at("tol_p").get<double>();
    o.tol_p_given = true;
  }
  if (j.contains("analysis_w") && unset("--analysis-w")) {
    o.analysis_w = j.at("analysis_w").get<int>();
    o.analysis_w_given = true;
  }
  if (j.contains("analysis_L") && unset("--analysis-L")) {
    o.analysis_L = j.at("analysis_L").get<int>();
    o.analysis_L_given = true;
  }
  if (j.contains("seed") && unset("--seed")) o.seed = j.at("seed").get<std::uint64_t>();
}

// Resolve flags + config into final options; parse code strings last so
// command-line codes win over config components.
void finalize(Options& o, const CLI::App& cmd) {
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + o.config_path);
    nlohmann::json j;
    in >> j;
    apply_config(o, cmd, j);
  }
  const auto* tol = cmd.get_option_no_throw("--tol-p");
  if (tol && tol->count() > 0) o.tol_p_given = true;
  const auto* aw = cmd.get_option_no_throw("--analysis-w");
  if (aw && aw->count() > 0) o.analysis_w_given = true;
  const auto* aL = cmd.get_option_no_throw("--analysis-L");
  if (aL && aL->count() > 0) o.analysis_L_given = true;
  if (!o.codes.empty()) {
    o.components.clear();
    for (const auto& c : o.codes) o.components.push_back(parse_code(c));
  }
}

EnsembleSpec build_ensemble(const Options& o, bool for_graph = true) {
  if (o.components.empty())
    throw std::invalid_argument("no component codes given (use --code n,k,d or a config file)");
  if (o.staircase) {
    if (o.components.size() != 1)
      throw std::invalid_argument("--staircase takes exactly one component code");
    const auto spec = staircase_spec(o.components.front().code);
    validate_or_throw(spec);
    return spec;
  }
  EnsembleSpec spec;
  spec.components = o.components;
  spec.v = o.v;
  spec.w = o.w;
  if (for_graph)
    validate_or_throw(spec);
  else
    validate_analysis_or_throw(spec);
  return spec;
}

Channel parse_channel(const std::string& name) {
  if (name == "bec") return Channel::BEC;
  if (name == "bsc") return Channel::BSC;
  throw std::invalid_argument("unknown channel '" + name + "' (expected bec or bsc)");
}

DecodingModel build_model(const Options& o, const EnsembleSpec& spec, Channel channel) {
  const std::string name =
      o.model.empty() ? (channel == Channel::BEC ? "bec-bdd" : "bsc-mf") : o.model;
  if (name == "bec-bdd") return DecodingModel::bec_bdd();
  if (name == "bsc-mf") return DecodingModel::bsc_mf();
  if (name == "beyond-bdd") {
    if (spec.components.size() != 1)
      throw std::invalid_argument("beyond-bdd decoding supports single-component ensembles only");
    const auto& code = spec.components.front().code;
    const auto profs = o.t_m > 0 ? bbd_profiles(code, o.t_m) : bbd_profiles(code);
    if (o.profile == "existence") return DecodingModel::beyond_bdd(profs.existence, o.sticky);
    if (o.profile == "fundamental")
      return DecodingModel::beyond_bdd(profs.fundamental_limit, o.sticky);
    throw std::invalid_argument("unknown profile '" + o.profile +
                                "' (expected existence or fundamental)");
  }
  throw std::invalid_argument("unknown model '" + name +
                              "' (expected bec-bdd, bsc-mf, or beyond-bdd)");
}

std::uint64_t resolve_seed(Options& o, const char** source) {
  if (o.seed) {
    *source = "given";
    return *o.seed;
  }
  std::random_device rd;
  const std::uint64_t s =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  o.seed = s;
  *source = "random";
  return s;
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

void emit_record(const std::string& command, ordered_json config, ordered_json results) {
  ordered_json rec;
  rec["schema_version"] = kSchemaVersion;
  rec["tool_version"] = kVersion;
  rec["command"] = command;
  rec["config"] = std::move(config);
  rec["results"] = std::move(results);
  std::cout << rec.dump(2) << '\n';
}

ordered_json model_json(const Options& o, Channel channel) {
  const std::string name =
      o.model.empty() ? (channel == Channel::BEC ? "bec-bdd" : "bsc-mf") : o.model;
  ordered_json m;
  m["kind"] = name;
  if (name == "beyond-bdd") {
    m["profile"] = o.profile;
    if (o.t_m > 0) m["t_m"] = o.t_m;
    m["sticky"] = o.sticky;
  }
  return m;
}

struct ThresholdRow {
  std::string code_id;
  int n_c = 0, k_c = 0, d_c = 0, v = 0, w = 0;
  double rate = 0;
  std::string method;
  double p_star = 0;
  std::optional<double> cap;
  std::optional<double> gap;
  bool upper_bound = false;
  bool saturated = false;
  bool stability_ok = true;
  double tolerance = 0;
  long long iterations = 0;
  std::string note;
};

ThresholdRow make_row(const ComponentCodeSpec& code, int v, int w, double rate, Channel channel,
                      const ThresholdResult& res, const std::string& id_suffix = "") {
  ThresholdRow row;
  row.code_id = code.id() + id_suffix;
  row.n_c = code.n_c;
  row.k_c = code.k_c;
  row.d_c = code.d_c;
  row.v = v;
  row.w = w;
  row.rate = rate;
  row.method = method_name(res.method);
  row.p_star = res.p_star;
  row.upper_bound = res.upper_bound;
  row.saturated = res.saturated;
  row.stability_ok = res.diag.stability_ok;
  row.tolerance = res.tolerance;
  row.iterations = res.diag.iterations;
  row.note = res.diag.note;
  const bool cap_ok = channel == Channel::BEC ? (res.p_star >= 0 && res.p_star <= 1)
                                              : (res.p_star >= 0 && res.p_star < 0.5);
  if (cap_ok) {
    row.cap = capacity(channel, res.p_star);
    if (*row.cap > 0) row.gap = gap_to_capacity(res.p_star, rate, channel);
  }
  return row;
}

ordered_json row_json(const ThresholdRow& r) {
  ordered_json j;
  j["code_id"] = r.code_id;
  j["n_c"] = r.n_c;
  j["k_c"] = r.k_c;
  j["d_c"] = r.d_c;
  j["v"] = r.v;
  j["w"] = r.w;
  j["rate"] = r.rate;
  j["method"] = r.method;
  j["p_star"] = r.p_star;
  if (r.cap) j["capacity"] = *r.cap;
  if (r.gap) j["gap_epsilon"] = *r.gap;
  j["upper_bound"] = r.upper_bound;
  j["saturated"] = r.saturated;
  j["stability_ok"] = r.stability_ok;
  j["tolerance"] = r.tolerance;
  j["iterations"] = r.iterations;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

void write_rows_csv(std::ostream& os, const std::vector<ThresholdRow>& rows) {
  CsvWriter csv(os, {"schema_version", "code_id", "n_c", "k_c", "d_c", "v", "w", "rate", "method",
                     "p_star", "capacity", "gap_epsilon"});
  for (const auto& r : rows)
    csv.write_row({std::to_string(kSchemaVersion), r.code_id, std::to_string(r.n_c),
                   std::to_string(r.k_c), std::to_string(r.d_c), std::to_string(r.v),
                   std::to_string(r.w), csv_number(r.rate), r.method, csv_number(r.p_star),
                   r.cap ? csv_number(*r.cap) : "", r.gap ? csv_number(*r.gap) : ""});
}

void maybe_write_csv(const Options& o, const std::vector<ThresholdRow>& rows) {
  if (o.csv_path.empty()) return;
  std::ofstream out(o.csv_path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open csv output: " + o.csv_path);
  write_rows_csv(out, rows);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_rate(Options& o, const CLI::App& cmd) {
  finalize(o, cmd);
  const auto spec = build_ensemble(o);
  ordered_json results;
  results["mixture_rate"] = spec.mixture_rate();
  results["design_rate_asymptotic"] = design_rate_asymptotic(spec);
  if (o.L > 0) {
    results["L"] = o.L;
    results["design_rate"] = design_rate(spec, o.L);
  }
  ordered_json config;
  config["ensemble"] = ensemble_to_json(spec);
  if (o.L > 0) config["L"] = o.L;
  if (o.staircase) config["staircase"] = true;
  emit_record("rate", std::move(config), std::move(results));
  return 0;
}

int cmd_sample(Options& o, const CLI::App& cmd) {
  finalize(o, cmd);
  const auto spec = build_ensemble(o);
  if (o.L < 1) throw std::invalid_argument("sample requires --L >= 1");
  const char* seed_source = nullptr;
  const auto seed = resolve_seed(o, &seed_source);
  const auto graph = sample_graph(spec, o.L, seed);

  ordered_json results;
  results["constraints"] = graph.num_constraints();
  results["variables"] = graph.num_variables();
  results["edges"] = graph.total_edges();
  results["variables_per_index"] = graph.N();
  if (!o.out_path.empty()) {
    std::ofstream out(o.out_path);
    if (!out) throw std::invalid_argument("cannot open output file: " + o.out_path);
    out << graph_to_json(graph).dump(2) << '\n';
    results["graph_file"] = o.out_path;
  } else {
    results["graph"] = graph_to_json(graph);
  }

  ordered_json config;
  config["ensemble"] = ensemble_to_json(spec);
  config["L"] = o.L;
  config["seed"] = seed;
  config["seed_source"] = seed_source;
  if (!o.out_path.empty()) config["out"] = o.out_path;
  emit_record("sample", std::move(config), std::move(results));
  return 0;
}

int cmd_simulate(Options& o, const CLI::App& cmd) {
  finalize(o, cmd);
  const auto spec = build_ensemble(o);
  if (o.L < 1) throw std::invalid_argument("simulate requires --L >= 1");
  if (o.p < 0) throw std::invalid_argument("simulate requires --p");
  const Channel channel = parse_channel(o.channel);
  const auto model = build_model(o, spec, channel);
  const char* seed_source = nullptr;
  const auto seed = resolve_seed(o, &seed_source);

  std::ofstream log_stream;
  std::ostream* log = nullptr;
  if (!o.trial_log_path.empty()) {
    log_stream.open(o.trial_log_path);
    if (!log_stream) throw std::invalid_argument("cannot open trial log: " + o.trial_log_path);
    log = &log_stream;
  }

  const auto stats =
      monte_carlo(spec, o.L, ChannelSpec{channel, o.p}, model, o.trials, seed, o.parallelism, log);

  ordered_json results;
  results["trials"] = stats.trials;
  results["channel"] = channel_name(stats.channel);
  results["p"] = stats.p;
  results["variables_per_trial"] = stats.variables_per_trial;
  results["unrecovered_total"] = stats.unrecovered_total;
  results["output_prob"] = stats.output_prob;
  results["output_prob_se"] = stats.output_prob_se;
  results["failed_trials"] = stats.failed_trials;
  results["failure_rate"] = stats.failure_rate;
  results["mean_iterations"] = stats.mean_iterations;
  results["capped_trials"] = stats.capped_trials;
  results["index_profile"] = stats.index_profile;

  ordered_json config;
  config["ensemble"] = ensemble_to_json(spec);
  config["L"] = o.L;
  config["channel"] = o.channel;
  config["p"] = o.p;
  config["model"] = model_json(o, channel);
  config["trials"] = o.trials;
  config["parallelism"] = o.parallelism;
  config["seed"] = seed;
  config["seed_source"] = seed_source;
  if (!o.trial_log_path.empty()) config["trial_log"] = o.trial_log_path;
  emit_record("simulate", std::move(config), std::move(results));
  return 0;
}

ThresholdResult run_analysis_method(const std::string& method, const TailSpec& tail, int v,
                                    Channel channel, const Options& o) {
  if (method == "recursion")
    return recursion_threshold(tail, v, o.analysis_L, o.analysis_w, o.tol_p, o.tol_fix,
                               o.max_iter);
  if (method == "potential") {
    if (tail.kind == TailKind::profile)
      throw std::invalid_argument(
          "potential analysis does not apply to beyond-bdd profiles; use --method recursion");
    return potential_threshold(PotentialSpec{tail, v}, channel == Channel::BEC ? 1.0 : 0.5);
  }
  if (method == "weight-pulling") {
    if (tail.kind == TailKind::profile)
      throw std::invalid_argument(
          "weight pulling has no closed form for beyond-bdd profiles; use --method recursion");
    ThresholdResult r;
    r.method = ThresholdMethod::weight_pulling;
    r.p_star = weight_pulling(tail, v);
    r.tolerance = 0;
    return r;
  }
  throw std::invalid_argument("unknown method '" + method +
                              "' (expected recursion, potential, weight-pulling, or simulation)");
}

int cmd_threshold(Options& o, const CLI::App& cmd) {
  finalize(o, cmd);
  const auto spec = build_ensemble(o, /*for_graph=*/o.method == "simulation");
  const Channel channel = parse_channel(o.channel);
  const std::string model_name =
      o.model.empty() ? (channel == Channel::BEC ? "bec-bdd" : "bsc-mf") : o.model;
  std::vector<ThresholdRow> rows;

  ordered_json config;
  config["ensemble"] = ensemble_to_json(spec);
  config["channel"] = o.channel;
  config["method"] = o.method;

  if (o.method == "simulation") {
    if (!o.rho_grid.empty())
      throw std::invalid_argument("rho sweeps need fractional weights; simulation runs on "
                                  "integral multiplicities only");
    if (o.L < 1) throw std::invalid_argument("threshold --method simulation requires --L >= 1");
    const auto model = build_model(o, spec, channel);
    const char* seed_source = nullptr;
    const auto seed = resolve_seed(o, &seed_source);
    const double tol = o.tol_p_given ? o.tol_p : 1e-3;
    const auto res = simulated_threshold(spec, o.L, channel, model, o.target_prob,
                                         o.trials_per_point, seed, tol, o.parallelism);
    rows.push_back(make_row(spec.components.front().code, spec.v, spec.w,
                            design_rate_asymptotic(spec), channel, res));
    config["L"] = o.L;
    config["model"] = model_json(o, channel);
    config["target_prob"] = o.target_prob;
    config["trials_per_point"] = o.trials_per_point;
    config["tol_p"] = tol;
    config["parallelism"] = o.parallelism;
    config["seed"] = seed;
    config["seed_source"] = seed_source;
  } else if (!o.rho_grid.empty()) {
    if (spec.components.size() != 2)
      throw std::invalid_argument("--rho-grid needs exactly two component codes");
    if (model_name == "beyond-bdd")
      throw std::invalid_argument("rho sweeps support bounded-distance models only");
    const auto& c0 = spec.components[0].code;
    const auto& c1 = spec.components[1].code;
    auto radius = [&](const ComponentCodeSpec& c) {
      return channel == Channel::BEC ? c.d_c - 1 : c.t_c();
    };
    for (const double rho : o.rho_grid) {
      if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("--rho-grid entries must lie in [0,1]");
      const auto tail = TailSpec::mix({{rho, radius(c0), c0.n_c}, {1.0 - rho, radius(c1), c1.n_c}});
      const auto res = run_analysis_method(o.method, tail, spec.v, channel, o);
      const double rate = 1.0 - spec.v * (1.0 - (rho * c0.rate() + (1.0 - rho) * c1.rate()));
      const auto& dominant = rho >= 0.5 ? c0 : c1;
      std::ostringstream suffix;
      suffix << "@rho=" << csv_number(rho);
      rows.push_back(make_row(dominant, spec.v, spec.w, rate, channel, res, suffix.str()));
    }
    config["rho_grid"] = o.rho_grid;
  } else {
    TailSpec tail = analysis_tail(spec, channel);
    std::string suffix;
    if (model_name == "beyond-bdd") {
      const auto model = build_model(o, spec, channel);  // validates single component
      tail = TailSpec::with_profile(spec.components.front().code.n_c, *model.profile);
      suffix = "-bbd-" + o.profile;
      config["model"] = model_json(o, channel);
    }
    const auto res = run_analysis_method(o.method, tail, spec.v, channel, o);
    rows.push_back(make_row(spec.components.front().code, spec.v, spec.w,
                            design_rate_asymptotic(spec), channel, res, suffix));
  }

  if (o.method == "recursion") {
    config["analysis_w"] = o.analysis_w;
    config["analysis_L"] = o.analysis_L;
    config["tol_p"] = o.tol_p;
    config["tol_fix"] = o.tol_fix;
    config["max_iter"] = o.max_iter;
  }
  if (!o.csv_path.empty()) config["csv"] = o.csv_path;

  maybe_write_csv(o, rows);
  ordered_json results;
  results["rows"] = ordered_json::array();
  for (const auto& r : rows) results["rows"].push_back(row_json(r));
  emit_record("threshold", std::move(config), std::move(results));
  return 0;
}

int cmd_sweep_figure(Options& o, const CLI::App& cmd) {
  finalize(o, cmd);
  if (o.full)
    std::cerr << "warning: --full sweeps paper-scale parameters; expect minutes of runtime\n";
  std::vector<ThresholdRow> rows;

  ordered_json config;
  config["figure"] = o.figure;
  config["full"] = o.full;

  if (o.figure == "bec" || o.figure == "bsc") {
    const Channel channel = o.figure == "bec" ? Channel::BEC : Channel::BSC;
    const std::vector<int> ms = o.full ? std::vector<int>{7, 8, 9, 10, 11}
                                       : std::vector<int>{7, 9, 11};
    config["with_mixtures"] = o.with_mixtures;
    std::vector<std::vector<ComponentCodeSpec>> valid_by_d(22);
    for (const int m : ms) {
      const int n = (1 << m) - 2;  // shortened length keeps w = 2 | n
      for (int d = 5; d <= 21; d += 2) {
        const int t = (d - 1) / 2;
        const int k = n - m * t;
        if (k <= 0) continue;
        EnsembleSpec spec;
        spec.components = {{{n, k, d}, 1}};
        spec.v = 2;
        spec.w = 2;
        if (!validate_analysis(spec).empty()) continue;  // only positive-rate points
        const auto tail = analysis_tail(spec, channel);
        const auto res = potential_threshold(PotentialSpec{tail, 2},
                                             channel == Channel::BEC ? 1.0 : 0.5);
        rows.push_back(make_row(spec.components.front().code, 2, 2,
                                design_rate_asymptotic(spec), channel, res));
        valid_by_d[static_cast<std::size_t>(d)].push_back(spec.components.front().code);
      }
    }
    if (o.with_mixtures) {
      auto radius = [&](const ComponentCodeSpec& c) {
        return channel == Channel::BEC ? c.d_c - 1 : c.t_c();
      };
      for (int d = 5; d <= 21; d += 2) {
        const auto& codes = valid_by_d[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i + 1 < codes.size(); ++i) {
          const auto& c0 = codes[i];
          const auto& c1 = codes[i + 1];
          for (const double rho : {0.25, 0.5, 0.75}) {
            const auto tail =
                TailSpec::mix({{rho, radius(c0), c0.n_c}, {1.0 - rho, radius(c1), c1.n_c}});
            const double rate = 1.0 - 2.0 * (1.0 - (rho * c0.rate() + (1.0 - rho) * c1.rate()));
            if (rate <= 0) continue;
            const auto res =
                potential_threshold(PotentialSpec{tail, 2}, channel == Channel::BEC ? 1.0 : 0.5);
            const auto& dominant = rho >= 0.5 ? c0 : c1;
            std::ostringstream suffix;
            suffix << "@rho=" << csv_number(rho);
            rows.push_back(make_row(dominant, 2, 2, rate, channel, res, suffix.str()));
          }
        }
      }
    }
  } else if (o.figure == "bbd") {
    // Bounded-distance vs beyond-bounded-distance curves for one code family.
    const int m = 9;
    const int n = (1 << m) - 1;
    const int aw = o.analysis_w_given ? o.analysis_w : (o.full ? 8 : 4);
    const int aL = o.analysis_L_given ? o.analysis_L : (o.full ? 400 : 100);
    const double tol = o.tol_p_given ? o.tol_p : 1e-4;
    config["analysis_w"] = aw;
    config["analysis_L"] = aL;
    config["tol_p"] = tol;
    for (int t = 2; t <= 6; ++t) {
      const ComponentCodeSpec code{n, n - m * t, 2 * t + 1};
      const double rate = 1.0 - 2.0 * (1.0 - code.rate());
      const auto bdd = recursion_threshold(TailSpec::bdd_error(n, t), 2, aL, aw, tol);
      rows.push_back(make_row(code, 2, aw, rate, Channel::BSC, bdd, "-bdd"));
      const auto profs = bbd_profiles(code);
      const auto exist = recursion_threshold(TailSpec::with_profile(n, profs.existence), 2, aL,
                                             aw, tol);
      rows.push_back(make_row(code, 2, aw, rate, Channel::BSC, exist, "-bbd-existence"));
      const auto fund = recursion_threshold(TailSpec::with_profile(n, profs.fundamental_limit), 2,
                                            aL, aw, tol);
      rows.push_back(make_row(code, 2, aw, rate, Channel::BSC, fund, "-bbd-fundamental"));
    }
  } else {
    throw std::invalid_argument("unknown figure '" + o.figure + "' (expected bec, bsc, or bbd)");
  }

  if (!o.csv_path.empty()) config["csv"] = o.csv_path;
  maybe_write_csv(o, rows);
  ordered_json results;
  results["rows"] = ordered_json::array();
  for (const auto& r : rows) results["rows"].push_back(row_json(r));
  emit_record("sweep-figure", std::move(config), std::move(results));
  return 0;
}

int cmd_decoupling(Options& o, const CLI::App& cmd) {
  finalize(o, cmd);
  if (o.N < 1) throw std::invalid_argument("decoupling-prob requires --N >= 1");
  if (o.v < 2) throw std::invalid_argument("decoupling-prob requires --v >= 2");
  const double logp = decoupling_log_probability(o.N, o.v);
  const double prob = decoupling_probability(o.N, o.v);
  // Stirling upper bound sqrt(1/v) N^{-(v-1)N} exp((v-1)N + (v-1)/(12vN+1)).
  const double vN = static_cast<double>(o.N);
  const double log_bound = -0.5 * std::log(static_cast<double>(o.v)) -
                           (o.v - 1) * vN * std::log(vN) + (o.v - 1) * vN +
                           (o.v - 1) / (12.0 * o.v * vN + 1.0);

  ordered_json results;
  results["N"] = o.N;
  results["v"] = o.v;
  results["probability"] = prob;
  results["log_probability"] = logp;
  results["stirling_upper_bound"] = std::exp(log_bound);
  results["log_stirling_upper_bound"] = log_bound;

  if (o.enumerate_matchings) {
    const long long stubs = o.N * o.v;
    if (stubs > 8)
      throw std::invalid_argument("--enumerate needs v*N <= 8 (factorial enumeration)");
    std::vector<int> perm(static_cast<std::size_t>(stubs));
    std::iota(perm.begin(), perm.end(), 0);
    unsigned long long total = 0, decoupled = 0;
    do {
      ++total;
      bool ok = true;
      for (long long var = 0; var < o.N && ok; ++var) {
        const int bundle = perm[static_cast<std::size_t>(var * o.v)] / o.v;
        for (int j = 1; j < o.v; ++j)
          if (perm[static_cast<std::size_t>(var * o.v + j)] / o.v != bundle) {
            ok = false;
            break;
          }
      }
      if (ok) ++decoupled;
    } while (std::next_permutation(perm.begin(), perm.end()));
    results["enumeration"] = ordered_json{{"decoupled", decoupled},
                                          {"total", total},
                                          {"probability", static_cast<double>(decoupled) /
                                                              static_cast<double>(total)}};
  }

  ordered_json config;
  config["N"] = o.N;
  config["v"] = o.v;
  config["enumerate"] = o.enumerate_matchings;
  emit_record("decoupling-prob", std::move(config), std::move(results));
  return 0;
}

int cmd_trend_check(Options& o, const CLI::App& cmd) {
  finalize(o, cmd);
  const auto spec = build_ensemble(o);
  if (o.L > 1) throw std::invalid_argument("trend-check runs on a single spatial index (L = 1)");
  if (o.p < 0) throw std::invalid_argument("trend-check requires --p");
  const Channel channel = parse_channel(o.channel);
  const auto model = build_model(o, spec, channel);
  const char* seed_source = nullptr;
  const auto seed = resolve_seed(o, &seed_source);

  const auto graph = sample_graph(spec, 1, derive_seed(seed, 1));
  auto residual = apply_channel(graph, ChannelSpec{channel, o.p}, derive_seed(seed, 2));
  const auto report = trend_check(residual, model, o.trials, derive_seed(seed, 3));

  double max_z = 0;
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    const double z =
        row.std_error > 0 ? (row.empirical - row.predicted) / row.std_error : 0.0;
    max_z = std::max(max_z, std::fabs(z));
    rows.push_back(ordered_json{{"constraint", row.constraint_index},
                                {"type", row.type},
                                {"predicted", row.predicted},
                                {"empirical", row.empirical},
                                {"std_error", row.std_error},
                                {"z", z}});
  }

  ordered_json results;
  results["trials"] = report.trials;
  results["residual_edges"] = report.residual_edges;
  results["tracked_rows"] = rows.size();
  results["max_abs_z"] = max_z;
  results["rows"] = std::move(rows);

  ordered_json config;
  config["ensemble"] = ensemble_to_json(spec);
  config["channel"] = o.channel;
  config["p"] = o.p;
  config["model"] = model_json(o, channel);
  config["trials"] = o.trials;
  config["seed"] = seed;
  config["seed_source"] = seed_source;
  emit_record("trend-check", std::move(config), std::move(results));
  return 0;
}

// ---------------------------------------------------------------------------
// Flag registration
// ---------------------------------------------------------------------------

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; explicit flags win");
  cmd->add_option("--code", o.codes, "component code n,k,d or n,k,d,multiplicity (repeatable)");
  cmd->add_flag("--staircase", o.staircase, "staircase ensemble from one code (v=2, w=2, M=n/2)");
  cmd->add_option("--v", o.v, "variable degree");
  cmd->add_option("--w", o.w, "coupling width");
  cmd->add_option("--seed", o.seed, "master seed (omitted: random, logged in the run record)");
}

void add_model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "bec-bdd | bsc-mf | beyond-bdd (default follows channel)");
  cmd->add_option("--profile", o.profile, "beyond-bdd curve: existence | fundamental");
  cmd->add_option("--t-m", o.t_m, "beyond-bdd horizon (default: sphere-packing saturation)");
  cmd->add_flag("--sticky", o.sticky, "freeze beyond-bdd draws per (constraint, degree)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatially-coupled split-component code ensembles: rates, sampling, peeling "
               "simulation, and decoding thresholds"};
  app.require_subcommand(1);
  Options o;

  auto* rate = app.add_subcommand("rate", "design rate R(L) and its L -> infinity limit");
  add_common(rate, o);
  rate->add_option("--L", o.L, "spatial length (omit for the asymptotic rate only)");

  auto* sample = app.add_subcommand("sample", "sample a code graph and dump it as JSON");
  add_common(sample, o);
  sample->add_option("--L", o.L, "spatial length");
  sample->add_option("--out", o.out_path, "graph JSON path (omitted: embedded in the record)");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo peeling at a fixed channel p");
  add_common(simulate, o);
  simulate->add_option("--L", o.L, "spatial length");
  simulate->add_option("--channel", o.channel, "bec | bsc");
  simulate->add_option("--p", o.p, "channel parameter");
  add_model_flags(simulate, o);
  simulate->add_option("--trials", o.trials, "number of trials");
  simulate->add_option("--parallelism", o.parallelism, "worker threads (deterministic)");
  simulate->add_option("--trial-log", o.trial_log_path, "NDJSON per-trial log path");

  auto* threshold = app.add_subcommand("threshold", "decoding threshold by the chosen method");
  add_common(threshold, o);
  threshold->add_option("--channel", o.channel, "bec | bsc");
  threshold->add_option("--method", o.method,
                        "recursion | potential | weight-pulling | simulation");
  add_model_flags(threshold, o);
  threshold->add_option("--analysis-w", o.analysis_w, "recursion coupling width");
  threshold->add_option("--analysis-L", o.analysis_L, "recursion spatial length");
  threshold->add_option("--tol-p", o.tol_p, "threshold bisection tolerance");
  threshold->add_option("--tol-fix", o.tol_fix, "recursion fixed-point tolerance");
  threshold->add_option("--max-iter", o.max_iter, "recursion iteration cap");
  threshold->add_option("--rho-grid", o.rho_grid,
                        "mixture weights of the first of two codes (one row per value)");
  threshold->add_option("--L", o.L, "graph spatial length (simulation method)");
  threshold->add_option("--trials-per-point", o.trials_per_point,
                        "simulation trials per bisection point");
  threshold->add_option("--target-prob", o.target_prob, "simulation target output probability");
  threshold->add_option("--parallelism", o.parallelism, "worker threads (simulation method)");
  threshold->add_option("--csv", o.csv_path, "write threshold rows as CSV");

  auto* sweep = app.add_subcommand("sweep-figure", "threshold sweep over a code family");
  sweep->add_option("--config", o.config_path, "JSON config file; explicit flags win");
  sweep->add_option("--figure", o.figure, "bec | bsc | bbd");
  sweep->add_flag("--full", o.full, "paper-scale parameters (slow)");
  sweep->add_flag("--with-mixtures", o.with_mixtures, "add rho-interpolation rows (bec/bsc)");
  sweep->add_option("--analysis-w", o.analysis_w, "recursion coupling width (bbd)");
  sweep->add_option("--analysis-L", o.analysis_L, "recursion spatial length (bbd)");
  sweep->add_option("--tol-p", o.tol_p, "threshold bisection tolerance (bbd)");
  sweep->add_option("--csv", o.csv_path, "write sweep rows as CSV");

  auto* dec = app.add_subcommand("decoupling-prob",
                                 "probability that a uniform interleaver decouples");
  dec->add_option("--config", o.config_path, "JSON config file; explicit flags win");
  dec->add_option("--N", o.N, "variables per spatial index");
  dec->add_option("--v", o.v, "variable degree");
  dec->add_flag("--enumerate", o.enumerate_matchings,
                "cross-check by exhaustive enumeration (v*N <= 8)");

  auto* trend = app.add_subcommand("trend-check",
                                   "single-step degree-drift check on one spatial index");
  add_common(trend, o);
  trend->add_option("--L", o.L, "must be 1 (single spatial index)");
  trend->add_option("--channel", o.channel, "bec | bsc");
  trend->add_option("--p", o.p, "channel parameter");
  add_model_flags(trend, o);
  trend->add_option("--trials", o.trials, "re-pairing trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rate->parsed()) return cmd_rate(o, *rate);
    if (sample->parsed()) return cmd_sample(o, *sample);
    if (simulate->parsed()) return cmd_simulate(o, *simulate);
    if (threshold->parsed()) return cmd_threshold(o, *threshold);
    if (sweep->parsed()) return cmd_sweep_figure(o, *sweep);
    if (dec->parsed()) return cmd_decoupling(o, *dec);
    if (trend->parsed()) return cmd_trend_check(o, *trend);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const BracketError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
