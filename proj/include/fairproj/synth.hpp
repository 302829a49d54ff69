#pragma once

// Deterministic synthetic labeled embeddings with known group structure.
//
// Each record is  offset(composite) + U z + sigma * e,  where U is a random
// D x k orthonormal "semantic" basis, z ~ N(0, semantic_variance I_k) and
// e ~ N(0, I_D). Coordinates are rounded to float32 so files round-trip
// exactly.
//
// Random draw order from Rng(seed):
//   1. auto offsets: random_orthonormal(D, K) scaled by offset_norm (only when
//      no explicit offsets are given)
//   2. semantic basis: random_orthonormal(D, k)
//   3. composites in lexicographic order, per_composite records each; per
//      record k semantic normals, then D noise normals, then (if tokens are
//      requested) T * D token normals.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "fairproj/dataset.hpp"
#include "fairproj/errors.hpp"
#include "fairproj/linalg.hpp"
#include "fairproj/rng.hpp"

namespace fairproj {

struct SynthConfig {
  std::size_t dimension = 16;
  std::size_t per_composite = 100;
  std::vector<Attribute> attributes;
  std::map<std::string, Vector> offsets;  // composite label -> offset; empty: auto-orthogonal
  double offset_norm = 3.0;
  std::size_t semantic_dim = 4;
  double semantic_variance = 4.0;
  double sigma = 1.0;
  std::size_t tokens_per_record = 0;
  std::uint64_t seed = 1;
};

inline EmbeddingDataset generate(const SynthConfig& cfg) {
  if (cfg.dimension == 0) throw ConfigError("synth: dimension must be positive");
  if (!(cfg.sigma > 0.0)) throw ConfigError("synth: sigma must be positive");
  if (cfg.semantic_dim > cfg.dimension) throw ConfigError("synth: semantic subspace larger than dimension");
  if (cfg.per_composite == 0) throw ConfigError("synth: per_composite must be positive");
  if (cfg.attributes.empty()) throw ConfigError("synth: no attributes");
  GroupSchema schema(cfg.attributes);
  std::vector<std::string> names;
  for (const auto& a : cfg.attributes) names.push_back(a.name);
  const JointGroupSchema joint = joint_schema(schema, names);
  const std::size_t dim = cfg.dimension;

  Rng rng(cfg.seed);
  std::vector<Vector> offsets(joint.size(), Vector(dim, 0.0));
  if (cfg.offsets.empty()) {
    if (joint.size() > dim)
      throw ConfigError("synth: " + std::to_string(joint.size()) + " orthogonal offsets do not fit in dimension " +
                        std::to_string(dim));
    const Matrix q = random_orthonormal(dim, joint.size(), rng);
    for (std::size_t c = 0; c < joint.size(); ++c)
      for (std::size_t j = 0; j < dim; ++j) offsets[c][j] = cfg.offset_norm * q(j, c);
  } else {
    for (std::size_t c = 0; c < joint.size(); ++c) {
      auto it = cfg.offsets.find(joint.label(c));
      if (it == cfg.offsets.end()) throw ConfigError("synth: no offset for composite '" + joint.label(c) + "'");
      if (it->second.size() != dim) throw ConfigError("synth: offset dimension mismatch for '" + joint.label(c) + "'");
      offsets[c] = it->second;
    }
  }
  const Matrix basis = random_orthonormal(dim, cfg.semantic_dim, rng);
  const double sem_sd = std::sqrt(cfg.semantic_variance);

  std::vector<EmbeddingRecord> records;
  records.reserve(joint.size() * cfg.per_composite);
  Vector z(cfg.semantic_dim);
  for (std::size_t c = 0; c < joint.size(); ++c) {
    for (std::size_t r = 0; r < cfg.per_composite; ++r) {
      EmbeddingRecord rec;
      char id[32];
      std::snprintf(id, sizeof id, "s%06zu", records.size());
      rec.id = id;
      for (std::size_t k = 0; k < names.size(); ++k) rec.attributes[names[k]] = joint.composites[c][k];
      for (double& v : z) v = sem_sd * rng.normal();
      rec.vector.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        double v = offsets[c][j] + cfg.sigma * rng.normal();
        for (std::size_t k = 0; k < cfg.semantic_dim; ++k) v += basis(j, k) * z[k];
        rec.vector[j] = static_cast<float>(v);
      }
      if (cfg.tokens_per_record > 0) {
        Matrix t(cfg.tokens_per_record, dim);
        for (std::size_t i = 0; i < t.rows(); ++i)
          for (std::size_t j = 0; j < dim; ++j)
            t(i, j) = static_cast<float>(rec.vector[j] + cfg.sigma * rng.normal());
        rec.tokens = std::move(t);
      }
      records.push_back(std::move(rec));
    }
  }
  return EmbeddingDataset(std::move(records), dim, std::move(schema));
}

inline Attribute gender_attribute() { return {"gender", {"male", "female"}}; }
inline Attribute race_attribute() { return {"race", {"white", "asian", "black"}}; }

// Named fixtures used by the CLI and the test suites.
//   gender2x        D=16, 2 groups x 1000, means at -/+3 sigma along e0 (6 sigma apart)
//   race3x          D=16, 3 groups x 400, auto-orthogonal offsets
//   gender_race2x3  D=16, 6 composites x 200, auto-orthogonal offsets
inline SynthConfig synth_preset(const std::string& name, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  if (name == "gender2x") {
    cfg.attributes = {gender_attribute()};
    cfg.per_composite = 1000;
    Vector male(cfg.dimension, 0.0), female(cfg.dimension, 0.0);
    male[0] = -3.0 * cfg.sigma;
    female[0] = 3.0 * cfg.sigma;
    cfg.offsets = {{"male", male}, {"female", female}};
  } else if (name == "race3x") {
    cfg.attributes = {race_attribute()};
    cfg.per_composite = 400;
  } else if (name == "gender_race2x3") {
    cfg.attributes = {gender_attribute(), race_attribute()};
    cfg.per_composite = 200;
  } else {
    throw ConfigError("unknown synth preset '" + name + "'");
  }
  return cfg;
}

}  // namespace fairproj
