#pragma once

// Experiment sweeps: for each grid point, (re)fit when the axis affects the
// fit, transform with optional noise, evaluate, and emit one row per
// evaluated attribute. Rows come back in grid order whatever the number of
// worker threads.
//
// Axes: dim, lambda, strategy (refit per point); eps, magnitude, seed (reuse
// one base model). Point i draws noise from seed splitmix(base_seed, i),
// except on the seed axis where the grid value is the seed. Magnitude points
// also report the share of records that a probe trained on the untouched data
// assigns to the target group.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairproj/dataset.hpp"
#include "fairproj/errors.hpp"
#include "fairproj/fairpca.hpp"
#include "fairproj/io.hpp"
#include "fairproj/metrics.hpp"
#include "fairproj/model_io.hpp"
#include "fairproj/multi_attr.hpp"
#include "fairproj/noise.hpp"
#include "fairproj/pipeline.hpp"

namespace fairproj {

enum class SweepAxis { dim, eps, magnitude, seed, lambda, strategy };

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::dim: return "dim";
    case SweepAxis::eps: return "eps";
    case SweepAxis::magnitude: return "magnitude";
    case SweepAxis::seed: return "seed";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::strategy: return "strategy";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(const std::string& s) {
  for (auto a : {SweepAxis::dim, SweepAxis::eps, SweepAxis::magnitude, SweepAxis::seed, SweepAxis::lambda,
                 SweepAxis::strategy})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

struct SweepSpec {
  std::vector<std::string> attributes;
  Strategy strategy = Strategy::single;
  FairPcaConfig fit;
  CrossOptions cross;
  std::optional<NoiseConfig> noise;
  ProbeConfig probe;
  std::uint64_t base_seed = 0;
  SweepAxis axis = SweepAxis::dim;
  std::vector<std::string> grid;
  std::string target_group;  // magnitude axis
  unsigned jobs = 1;
};

struct SweepRow {
  std::size_t point = 0;
  std::string value;
  std::string status;  // ok, error, std
  std::string strategy;
  std::size_t rank = 0;
  ReportRow report;
  double constraint_residual = NAN;
  double constraint_norm = NAN;
  double steer_fraction = NAN;
  std::string message;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::dim;
  nlohmann::json config;
  std::vector<SweepRow> rows;
};

inline nlohmann::json sweep_spec_json(const SweepSpec& s) {
  nlohmann::json j;
  j["attributes"] = s.attributes;
  j["strategy"] = to_string(s.strategy);
  j["fit"] = config_to_json(s.fit);
  j["drop_empty_composites"] = s.cross.drop_empty_composites;
  if (s.noise) {
    j["noise"] = {{"variant", to_string(s.noise->variant)},
                  {"epsilon", s.noise->epsilon},
                  {"sign_bias", s.noise->sign_bias},
                  {"group_policy", to_string(s.noise->policy)}};
    if (s.noise->magnitude_override) j["noise"]["magnitude"] = *s.noise->magnitude_override;
  } else {
    j["noise"] = nullptr;
  }
  j["probe"] = {{"iterations", s.probe.iterations}, {"learning_rate", s.probe.learning_rate}};
  j["base_seed"] = s.base_seed;
  j["axis"] = to_string(s.axis);
  j["grid"] = s.grid;
  j["target_group"] = s.target_group;
  return j;
}

namespace detail {

inline double parse_grid_double(const std::string& v) { return parse_double(v, "sweep grid"); }

inline std::uint64_t parse_grid_u64(const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("sweep grid: bad integer '" + v + "'");
  return out;
}

inline std::vector<SweepRow> run_point(const EmbeddingDataset& data, const SweepSpec& spec,
                                       const FairProjectionModel* base_model, std::size_t index) {
  const std::string& value = spec.grid[index];
  SweepSpec local = spec;
  std::uint64_t point_seed;
  {
    std::uint64_t a = spec.base_seed, b = index;
    point_seed = Rng::splitmix64(a) ^ Rng::splitmix64(b);
  }
  switch (spec.axis) {
    case SweepAxis::dim: local.fit.dim = parse_grid_u64(value); break;
    case SweepAxis::lambda: local.fit.lambda = parse_grid_double(value); break;
    case SweepAxis::strategy: local.strategy = parse_strategy(value); break;
    case SweepAxis::eps: local.noise->epsilon = parse_grid_double(value); break;
    case SweepAxis::magnitude:
      local.noise->magnitude_override = parse_grid_double(value);
      local.noise->policy = GroupPolicy::fixed(spec.target_group);
      break;
    case SweepAxis::seed: point_seed = parse_grid_u64(value); break;
  }
  if (local.noise) local.noise->seed = point_seed;

  std::optional<FairProjectionModel> fitted;
  const bool refit = spec.axis == SweepAxis::dim || spec.axis == SweepAxis::lambda || spec.axis == SweepAxis::strategy;
  if (refit) fitted = fit_strategy(data, local.strategy, local.attributes, local.fit, local.cross);
  const FairProjectionModel& model = refit ? *fitted : *base_model;

  const TransformResult tr = transform_dataset(model, data, local.noise);
  EvaluateOptions eo;
  eo.probe = local.probe;
  eo.seed = point_seed;
  eo.config = sweep_spec_json(local);
  eo.config["point"] = index;
  eo.config["value"] = value;
  const EvaluationReport report = evaluate(data, tr.data, model, eo);

  double steer = NAN;
  if (spec.axis == SweepAxis::magnitude) {
    const std::string& attr = local.attributes.front();
    const auto& groups = data.schema().attribute(attr).groups;
    auto it = std::find(groups.begin(), groups.end(), spec.target_group);
    if (it != groups.end()) {
      const auto z = build_indicator(data, attr);
      const auto frozen = train_probe(data.matrix(), z, local.probe);
      const auto counts = predicted_counts(frozen, tr.data.matrix());
      steer = static_cast<double>(counts[static_cast<std::size_t>(it - groups.begin())]) /
              static_cast<double>(tr.data.size());
    }
  }

  std::vector<SweepRow> rows;
  for (const auto& r : report.rows) {
    SweepRow row;
    row.point = index;
    row.value = value;
    row.status = "ok";
    row.strategy = to_string(model.strategy);
    row.rank = model.rank();
    row.report = r;
    row.constraint_residual = model.diagnostics.constraint_residual;
    row.constraint_norm = model.diagnostics.constraint_norm;
    row.steer_fraction = steer;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  // Shifted by v[0] so constant input gives exactly zero.
  double mean = 0.0;
  for (double x : v) mean += x - v[0];
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - v[0] - mean) * (x - v[0] - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

inline SweepTable run_sweep(const EmbeddingDataset& data, const SweepSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("sweep: empty grid");
  if (spec.attributes.empty()) throw ConfigError("sweep: no attributes");
  const bool noise_axis = spec.axis == SweepAxis::eps || spec.axis == SweepAxis::magnitude || spec.axis == SweepAxis::seed;
  if (noise_axis && !spec.noise) throw ConfigError("sweep: axis '" + to_string(spec.axis) + "' needs a noise variant");
  if (spec.axis == SweepAxis::magnitude && spec.target_group.empty())
    throw ConfigError("sweep: magnitude axis needs a target group");

  std::optional<FairProjectionModel> base;
  if (noise_axis) base = fit_strategy(data, spec.strategy, spec.attributes, spec.fit, spec.cross);

  const std::size_t n = spec.grid.size();
  std::vector<std::vector<SweepRow>> results(n);
  auto work = [&](std::size_t i) {
    try {
      results[i] = detail::run_point(data, spec, base ? &*base : nullptr, i);
    } catch (const Error& e) {
      SweepRow row;
      row.point = i;
      row.value = spec.grid[i];
      row.status = "error";
      row.message = e.what();
      results[i] = {row};
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    for (auto& th : pool) th.join();
  }

  SweepTable table;
  table.axis = spec.axis;
  table.config = sweep_spec_json(spec);
  for (auto& r : results)
    for (auto& row : r) table.rows.push_back(std::move(row));

  if (spec.axis == SweepAxis::seed) {
    std::vector<std::string> attrs;
    for (const auto& row : table.rows)
      if (row.status == "ok" && std::find(attrs.begin(), attrs.end(), row.report.attribute) == attrs.end())
        attrs.push_back(row.report.attribute);
    for (const auto& a : attrs) {
      std::vector<double> acc_b, acc_a, fair, recon, ev, res;
      for (const auto& row : table.rows)
        if (row.status == "ok" && row.report.attribute == a) {
          acc_b.push_back(row.report.probe_acc_before);
          acc_a.push_back(row.report.probe_acc_after);
          fair.push_back(row.report.fairness_after);
          recon.push_back(row.report.recon_error);
          ev.push_back(row.report.explained_var);
          res.push_back(row.constraint_residual);
        }
      SweepRow s;
      s.point = n;
      s.value = "std";
      s.status = "std";
      s.strategy = to_string(spec.strategy);
      s.report.attribute = a;
      s.report.probe_acc_before = detail::sample_std(acc_b);
      s.report.probe_acc_after = detail::sample_std(acc_a);
      s.report.fairness_after = detail::sample_std(fair);
      s.report.recon_error = detail::sample_std(recon);
      s.report.explained_var = detail::sample_std(ev);
      s.constraint_residual = detail::sample_std(res);
      table.rows.push_back(std::move(s));
    }
  }
  return table;
}

inline constexpr const char* kSweepColumns =
    "point,axis,value,status,strategy,rank,config_id,attribute,probe_acc_before,probe_acc_after,fairness_after,"
    "recon_error,explained_var,constraint_residual,constraint_norm,steer_fraction,seed,message";

inline std::string sweep_to_csv(const SweepTable& t) {
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_g17(v); };
  std::string out = std::string("# ") + kReportHeader + "\n# config: " + t.config.dump() + "\n" + kSweepColumns + "\n";
  for (const auto& r : t.rows) {
    std::string msg = r.message;
    for (char& c : msg)
      if (c == ',' || c == '\n') c = ';';
    const bool ok = r.status != "error";
    out += std::to_string(r.point) + "," + to_string(t.axis) + "," + r.value + "," + r.status + "," + r.strategy + "," +
           (ok ? std::to_string(r.rank) : "") + "," + r.report.config_id + "," + r.report.attribute + "," +
           (ok ? format_g17(r.report.probe_acc_before) + "," + format_g17(r.report.probe_acc_after) + "," +
                     format_g17(r.report.fairness_after) + "," + format_g17(r.report.recon_error) + "," +
                     format_g17(r.report.explained_var)
               : std::string(",,,,")) +
           "," + num(r.constraint_residual) + "," + num(r.constraint_norm) + "," + num(r.steer_fraction) + "," +
           (r.status == "ok" ? std::to_string(r.report.seed) : "") + "," + msg + "\n";
  }
  return out;
}

inline nlohmann::json sweep_to_json(const SweepTable& t) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json j = {{"point", r.point}, {"axis", to_string(t.axis)}, {"value", r.value}, {"status", r.status}};
    if (r.status == "error") {
      j["message"] = r.message;
    } else {
      j["strategy"] = r.strategy;
      j["rank"] = r.rank;
      j["config_id"] = r.report.config_id;
      j["attribute"] = r.report.attribute;
      j["probe_acc_before"] = r.report.probe_acc_before;
      j["probe_acc_after"] = r.report.probe_acc_after;
      j["fairness_after"] = r.report.fairness_after;
      j["recon_error"] = r.report.recon_error;
      j["explained_var"] = r.report.explained_var;
      j["constraint_residual"] = num(r.constraint_residual);
      j["constraint_norm"] = num(r.constraint_norm);
      j["steer_fraction"] = num(r.steer_fraction);
      j["seed"] = r.report.seed;
    }
    rows.push_back(std::move(j));
  }
  return {{"header", kReportHeader}, {"config", t.config}, {"rows", rows}};
}

}  // namespace fairproj
