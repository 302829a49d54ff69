#pragma once

// Model files.
//
//   "FPRM"  u32 version (=1)  u64 L  L bytes of UTF-8 JSON manifest
//   then little-endian IEEE-754 float64 payload:
//     mean (D), basis (D x d, row-major), directions (G x D, row-major),
//     then the sample list of each group in manifest order
//
// The manifest records dimension, rank, strategy, attributes, schema, the fit
// configuration, group labels with their sample counts, sequential stages,
// dropped composites and fit diagnostics. Encoding is deterministic, so
// save -> load -> save reproduces the same bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fairproj/errors.hpp"
#include "fairproj/fairpca.hpp"
#include "fairproj/io.hpp"

namespace fairproj {

inline nlohmann::json config_to_json(const FairPcaConfig& c) {
  nlohmann::json j;
  j["dim"] = c.dim ? nlohmann::json(*c.dim) : nlohmann::json(nullptr);
  j["lambda"] = c.lambda;
  j["mode"] = to_string(c.mode);
  j["center"] = c.center;
  j["group_matrix_form"] = to_string(c.form);
  return j;
}

inline FairPcaConfig config_from_json(const nlohmann::json& j) {
  FairPcaConfig c;
  if (!j.at("dim").is_null()) c.dim = j.at("dim").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.mode = parse_projection_mode(j.at("mode").get<std::string>());
  c.center = j.at("center").get<bool>();
  c.form = parse_group_matrix_form(j.at("group_matrix_form").get<std::string>());
  return c;
}

inline nlohmann::json model_manifest(const FairProjectionModel& m) {
  nlohmann::json j;
  j["format"] = "fairproj-model";
  j["version"] = 1;
  j["dimension"] = m.dimension;
  j["rank"] = m.rank();
  j["strategy"] = to_string(m.strategy);
  j["attributes"] = m.attributes;
  j["schema"] = detail::schema_to_json(m.schema);
  j["config"] = config_to_json(m.config);
  j["groups"] = m.groups;
  std::vector<std::size_t> counts;
  for (const auto& d : m.distributions) counts.push_back(d.size());
  j["sample_counts"] = counts;
  auto stages = nlohmann::json::array();
  for (const auto& s : m.stages) stages.push_back({{"attribute", s.attribute}, {"dim", s.dim}});
  j["stages"] = stages;
  j["dropped_groups"] = m.dropped_groups;
  j["diagnostics"] = {{"explained_variance", m.diagnostics.explained_variance},
                      {"constraint_residual", m.diagnostics.constraint_residual},
                      {"constraint_norm", m.diagnostics.constraint_norm},
                      {"objective", m.diagnostics.objective},
                      {"available_dim", m.diagnostics.available_dim}};
  return j;
}

inline std::string encode_model(const FairProjectionModel& m) {
  std::string out = "FPRM";
  detail::put_le<std::uint32_t>(out, 1);
  const std::string manifest = model_manifest(m).dump();
  detail::put_le<std::uint64_t>(out, manifest.size());
  out += manifest;
  for (double v : m.mean) detail::put_le<double>(out, v);
  for (double v : m.basis.matrix().data()) detail::put_le<double>(out, v);
  for (double v : m.directions.data()) detail::put_le<double>(out, v);
  for (const auto& d : m.distributions)
    for (double v : d) detail::put_le<double>(out, v);
  return out;
}

inline FairProjectionModel decode_model(std::string_view bytes) {
  detail::ByteReader in(bytes, "model file");
  if (in.take(4) != "FPRM") throw DataError("model file: bad magic");
  const auto version = in.get_le<std::uint32_t>();
  if (version != 1) throw DataError("model file: unsupported version " + std::to_string(version));
  const auto len = in.get_le<std::uint64_t>();
  if (len > in.remaining()) throw DataError("model file: truncated manifest");
  try {
    const auto j = nlohmann::json::parse(in.take(len));
    if (j.at("format") != "fairproj-model") throw DataError("model file: not a fairproj model");
    FairProjectionModel m;
    m.dimension = j.at("dimension").get<std::size_t>();
    const auto rank = j.at("rank").get<std::size_t>();
    m.strategy = parse_strategy(j.at("strategy").get<std::string>());
    m.attributes = j.at("attributes").get<std::vector<std::string>>();
    m.schema = detail::schema_from_json(j.at("schema"));
    m.config = config_from_json(j.at("config"));
    m.groups = j.at("groups").get<std::vector<std::string>>();
    const auto counts = j.at("sample_counts").get<std::vector<std::size_t>>();
    if (counts.size() != m.groups.size()) throw DataError("model file: sample counts do not match groups");
    for (const auto& s : j.at("stages")) m.stages.push_back({s.at("attribute").get<std::string>(), s.at("dim").get<std::size_t>()});
    m.dropped_groups = j.at("dropped_groups").get<std::vector<std::string>>();
    const auto& dj = j.at("diagnostics");
    m.diagnostics.explained_variance = dj.at("explained_variance").get<double>();
    m.diagnostics.constraint_residual = dj.at("constraint_residual").get<double>();
    m.diagnostics.constraint_norm = dj.at("constraint_norm").get<double>();
    m.diagnostics.objective = dj.at("objective").get<double>();
    m.diagnostics.available_dim = dj.at("available_dim").get<std::size_t>();

    if (m.dimension == 0 || rank > m.dimension) throw DataError("model file: bad shape");
    std::size_t expected = m.dimension * (1 + rank + m.groups.size());
    for (auto c : counts) expected += c;
    if (in.remaining() != expected * 8) throw DataError("model file: payload size does not match manifest");

    m.mean.resize(m.dimension);
    for (auto& v : m.mean) v = in.get_le<double>();
    Matrix p(m.dimension, rank);
    for (auto& v : p.data()) v = in.get_le<double>();
    m.basis = OrthonormalBasis(std::move(p));
    m.directions = Matrix(m.groups.size(), m.dimension);
    for (auto& v : m.directions.data()) v = in.get_le<double>();
    for (auto c : counts) {
      if (c == 0) throw DataError("model file: empty empirical distribution");
      Vector d(c);
      for (auto& v : d) v = in.get_le<double>();
      m.distributions.push_back(std::move(d));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: bad manifest: ") + e.what());
  }
}

inline void save_model(const FairProjectionModel& m, const std::filesystem::path& path) {
  detail::write_file(path, encode_model(m));
}

inline FairProjectionModel load_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path));
}

}  // namespace fairproj
