#pragma once

// Dataset-level application of a fitted model with optional noise: tokens
// are projected, pooled vectors are projected and then perturbed. Record i
// uses noise draw index i.

#include <optional>
#include <string>
#include <vector>

#include "fairproj/dataset.hpp"
#include "fairproj/fairpca.hpp"
#include "fairproj/metrics.hpp"
#include "fairproj/noise.hpp"

namespace fairproj {

struct NoiseLogEntry {
  std::size_t index = 0;
  std::string id;
  std::optional<std::string> group;
  std::optional<double> delta;
};

struct TransformResult {
  EmbeddingDataset data;
  std::vector<NoiseLogEntry> log;  // empty without noise
};

inline TransformResult transform_dataset(const FairProjectionModel& model, const EmbeddingDataset& data,
                                         const std::optional<NoiseConfig>& noise = std::nullopt) {
  if (data.dimension() != model.dimension) throw DataError("transform: dataset dimension does not match model");
  std::optional<NoiseInjector> injector;
  if (noise) injector.emplace(model, *noise);
  std::vector<EmbeddingRecord> out;
  std::vector<NoiseLogEntry> log;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const EmbeddingRecord& src = data[i];
    if (injector && injector->config().variant == NoiseVariant::bypass) {
      out.push_back(src);
      log.push_back({i, src.id, std::nullopt, std::nullopt});
      continue;
    }
    EmbeddingRecord rec = transform(model, src);
    if (injector) {
      Injection inj = injector->inject(rec.vector, i, std::span<const double>(src.vector));
      rec.vector = std::move(inj.vector);
      log.push_back({i, src.id, inj.group ? std::optional<std::string>(model.groups[*inj.group]) : std::nullopt,
                     inj.delta});
    }
    out.push_back(std::move(rec));
  }
  return {EmbeddingDataset(std::move(out), data.dimension(), data.schema()), std::move(log)};
}

inline std::string noise_log_csv(const std::vector<NoiseLogEntry>& log) {
  std::string out = "index,id,group,delta\n";
  for (const auto& e : log)
    out += std::to_string(e.index) + "," + e.id + "," + e.group.value_or("") + "," +
           (e.delta ? format_g17(*e.delta) : std::string()) + "\n";
  return out;
}

}  // namespace fairproj
