#pragma once
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scsc/ensemble.hpp"
#include "scsc/version.hpp"

// Serialization: versioned CodeGraph/EnsembleSpec JSON dumps and an
// RFC-4180 CSV writer.  The JSON layout is stable across releases; the
// schema_version field guards readers.

namespace scsc {

inline nlohmann::json ensemble_to_json(const EnsembleSpec& spec) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : spec.components)
    comps.push_back({{"n_c", c.code.n_c},
                     {"k_c", c.code.k_c},
                     {"d_c", c.code.d_c},
                     {"M", c.multiplicity}});
  return {{"components", comps}, {"v", spec.v}, {"w", spec.w}};
}

inline EnsembleSpec ensemble_from_json(const nlohmann::json& j) {
  EnsembleSpec spec;
  if (!j.contains("components") || !j["components"].is_array())
    throw std::invalid_argument("ensemble json: missing components array");
  for (const auto& c : j["components"]) {
    EnsembleComponent comp;
    comp.code.n_c = c.at("n_c").get<int>();
    comp.code.k_c = c.at("k_c").get<int>();
    comp.code.d_c = c.at("d_c").get<int>();
    comp.multiplicity = c.value("M", 1);
    spec.components.push_back(comp);
  }
  spec.v = j.value("v", 2);
  spec.w = j.value("w", 2);
  return spec;
}

inline nlohmann::json graph_to_json(const CodeGraph& graph) {
  nlohmann::json perms = nlohmann::json::array();
  for (int k = 0; k < graph.L(); ++k) perms.push_back(graph.interleaver(k));
  return {{"schema_version", kSchemaVersion},
          {"tool_version", kVersion},
          {"type", "code_graph"},
          {"ensemble", ensemble_to_json(graph.spec())},
          {"L", graph.L()},
          {"seed", graph.seed()},
          {"interleavers", perms}};
}

inline CodeGraph graph_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "code_graph")
    throw std::invalid_argument("graph json: not a code_graph document");
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw std::invalid_argument("graph json: unsupported schema_version");
  auto spec = ensemble_from_json(j.at("ensemble"));
  const int L = j.at("L").get<int>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  auto perms = j.at("interleavers").get<std::vector<std::vector<std::uint32_t>>>();
  return CodeGraph(std::move(spec), L, seed, std::move(perms));
}

// ---------------------------------------------------------------------------
// RFC-4180 CSV
// ---------------------------------------------------------------------------

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os) {
    write_row(header);
  }

  void write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_escape(fields[i]);
    }
    os_ << "\r\n";  // RFC-4180 line ending
  }

 private:
  std::ostream& os_;
};

}  // namespace scsc
