#pragma once

// Fairness and fidelity measurements on embeddings.
//
// Image-level measurements (face attribute classifiers, CLIP-based alignment,
// perceptual quality) are out of reach for embedding-only data. They are
// replaced here by a linear probe for residual group separability and by
// reconstruction error / explained variance for fidelity. Every report states
// this in its header.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairproj/bias.hpp"
#include "fairproj/dataset.hpp"
#include "fairproj/errors.hpp"
#include "fairproj/fairpca.hpp"
#include "fairproj/io.hpp"

namespace fairproj {

inline constexpr const char* kReportHeader =
    "metrics are embedding-space proxies: linear-probe group separability and projection reconstruction; "
    "no image-generation measurements";

// 1 - sum_i |p_i - 1/k| / (2 (1 - 1/k)). 1 when all groups appear at the same
// rate, 0 when a single group takes everything.
inline double fairness_score_from_proportions(std::span<const double> p) {
  const std::size_t k = p.size();
  if (k < 2) throw ConfigError("fairness_score: need at least 2 groups");
  const double uniform = 1.0 / static_cast<double>(k);
  double dev = 0.0;
  for (double v : p) dev += std::abs(v - uniform);
  return 1.0 - dev / (2.0 * (1.0 - uniform));
}

inline double fairness_score(std::span<const std::size_t> counts) {
  if (counts.size() < 2) throw ConfigError("fairness_score: need at least 2 groups");
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw DataError("fairness_score: total count is zero");
  std::vector<double> p;
  for (auto c : counts) p.push_back(static_cast<double>(c) / static_cast<double>(total));
  return fairness_score_from_proportions(p);
}

struct ProbeConfig {
  int iterations = 500;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;  // recorded; training is fully deterministic with zero init
};

// Multinomial logistic classifier over standardized inputs
// (x - center) / scale, where scale^2 is the mean squared centered norm of
// the training rows.
struct LinearProbe {
  Matrix weights;  // G x D
  Vector bias;     // G
  Vector center;   // D
  double scale = 1.0;
  ProbeConfig config;
  Vector losses;  // training loss before each update, then the final loss

  std::size_t predict(std::span<const double> x) const {
    std::size_t best = 0;
    double best_score = -INFINITY;
    Vector xs(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) xs[j] = (x[j] - center[j]) / scale;
    for (std::size_t g = 0; g < weights.rows(); ++g) {
      const double s = dot(weights.row(g), xs) + bias[g];
      if (s > best_score) {
        best_score = s;
        best = g;
      }
    }
    return best;
  }
};

inline LinearProbe train_probe(const Matrix& x, const GroupIndicatorMatrix& z, const ProbeConfig& config = {}) {
  const std::size_t n = x.rows(), dim = x.cols(), k = z.group_count();
  if (z.rows() != n) throw DataError("train_probe: indicator rows do not match data rows");
  if (k < 2) throw DataError("train_probe: need at least 2 groups");
  for (auto c : z.counts())
    if (c < 2) throw DataError("train_probe: every group needs at least 2 samples");
  if (config.iterations < 0 || !(config.learning_rate > 0.0)) throw ConfigError("train_probe: bad training config");

  LinearProbe probe;
  probe.config = config;
  probe.center = column_mean(x);
  Matrix xs(n, dim);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      xs(i, j) = x(i, j) - probe.center[j];
      sq += xs(i, j) * xs(i, j);
    }
  probe.scale = std::sqrt(sq / static_cast<double>(n));
  if (!(probe.scale > 0.0)) probe.scale = 1.0;
  for (double& v : xs.data()) v /= probe.scale;

  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = z.group_of(i);

  probe.weights = Matrix(k, dim);
  probe.bias.assign(k, 0.0);
  Matrix grad_w(k, dim);
  Vector grad_b(k), logits(k);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int it = 0; it <= config.iterations; ++it) {
    std::fill(grad_w.data().begin(), grad_w.data().end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto row = xs.row(i);
      double top = -INFINITY;
      for (std::size_t g = 0; g < k; ++g) {
        logits[g] = dot(probe.weights.row(g), row) + probe.bias[g];
        top = std::max(top, logits[g]);
      }
      double sum = 0.0;
      for (std::size_t g = 0; g < k; ++g) sum += std::exp(logits[g] - top);
      loss += top + std::log(sum) - logits[label[i]];
      for (std::size_t g = 0; g < k; ++g) {
        const double resid = std::exp(logits[g] - top) / sum - (g == label[i] ? 1.0 : 0.0);
        grad_b[g] += resid;
        auto gw = grad_w.row(g);
        for (std::size_t j = 0; j < dim; ++j) gw[j] += resid * row[j];
      }
    }
    probe.losses.push_back(loss * inv_n);
    if (it == config.iterations) break;
    const double step = config.learning_rate * inv_n;
    for (std::size_t g = 0; g < k; ++g) {
      probe.bias[g] -= step * grad_b[g];
      auto w = probe.weights.row(g);
      auto gw = grad_w.row(g);
      for (std::size_t j = 0; j < dim; ++j) w[j] -= step * gw[j];
    }
  }
  return probe;
}

inline std::vector<std::size_t> predicted_counts(const LinearProbe& probe, const Matrix& x) {
  std::vector<std::size_t> counts(probe.weights.rows(), 0);
  for (std::size_t i = 0; i < x.rows(); ++i) ++counts[probe.predict(x.row(i))];
  return counts;
}

inline double probe_accuracy(const LinearProbe& probe, const Matrix& x, const GroupIndicatorMatrix& z) {
  if (x.cols() != probe.weights.cols()) throw DataError("probe_accuracy: dimension mismatch");
  if (z.rows() != x.rows()) throw DataError("probe_accuracy: indicator rows do not match data rows");
  if (x.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (probe.predict(x.row(i)) == z.group_of(i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

// Majority-class rate, the accuracy of always predicting the largest group.
inline double chance_level(const GroupIndicatorMatrix& z) {
  const auto c = z.counts();
  std::size_t total = 0, top = 0;
  for (auto v : c) {
    total += v;
    top = std::max(top, v);
  }
  return total ? static_cast<double>(top) / static_cast<double>(total) : 0.0;
}

struct Reconstruction {
  double error = 0.0;               // sum_i ||xc_i - P P^T xc_i||^2
  double explained_variance = 0.0;  // Tr(P^T Sigma P) / Tr(Sigma)
  double retained = 0.0;            // n Tr(P^T Sigma P)
  double total = 0.0;               // sum_i ||xc_i||^2
};

// xc = x - mu with the model's centering vector (zero when uncentered).
inline Reconstruction reconstruction_error(const Matrix& x, const FairProjectionModel& model) {
  if (x.cols() != model.dimension) throw DataError("reconstruction_error: dimension mismatch");
  const Matrix& p = model.basis.matrix();
  Reconstruction r;
  Vector xc(x.cols()), coeff(p.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) xc[j] = x(i, j) - model.mean[j];
    std::fill(coeff.begin(), coeff.end(), 0.0);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      auto prow = p.row(j);
      for (std::size_t c = 0; c < p.cols(); ++c) coeff[c] += prow[c] * xc[j];
    }
    double kept = 0.0;
    for (double c : coeff) kept += c * c;
    double resid = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double e = xc[j] - dot(p.row(j), coeff);
      resid += e * e;
    }
    r.error += resid;
    r.retained += kept;
    r.total += dot(xc, xc);
  }
  r.explained_variance = r.total > 0.0 ? r.retained / r.total : 0.0;
  return r;
}

struct ReportRow {
  std::string config_id;
  std::string attribute;
  double probe_acc_before = 0.0;
  double probe_acc_after = 0.0;
  double fairness_after = 0.0;
  double recon_error = 0.0;
  double explained_var = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();  // chance levels, predicted counts
};

inline constexpr const char* kReportColumns =
    "config_id,attribute,probe_acc_before,probe_acc_after,fairness_after,recon_error,explained_var,seed";

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string report_row_csv(const ReportRow& r) {
  return r.config_id + "," + r.attribute + "," + format_g17(r.probe_acc_before) + "," +
         format_g17(r.probe_acc_after) + "," + format_g17(r.fairness_after) + "," + format_g17(r.recon_error) + "," +
         format_g17(r.explained_var) + "," + std::to_string(r.seed);
}

inline std::string report_to_csv(const EvaluationReport& report) {
  std::string out = std::string("# ") + kReportHeader + "\n" + kReportColumns + "\n";
  for (const auto& r : report.rows) out += report_row_csv(r) + "\n";
  return out;
}

inline std::vector<ReportRow> report_rows_from_csv(std::string_view text) {
  std::vector<ReportRow> rows;
  bool header = false;
  for (auto line : detail::split(text, '\n')) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kReportColumns) throw DataError("report CSV: unexpected header");
      header = true;
      continue;
    }
    const auto c = detail::split(line, ',');
    if (c.size() != 8) throw DataError("report CSV: expected 8 fields");
    ReportRow r;
    r.config_id = std::string(c[0]);
    r.attribute = std::string(c[1]);
    r.probe_acc_before = detail::parse_double(c[2], "report CSV");
    r.probe_acc_after = detail::parse_double(c[3], "report CSV");
    r.fairness_after = detail::parse_double(c[4], "report CSV");
    r.recon_error = detail::parse_double(c[5], "report CSV");
    r.explained_var = detail::parse_double(c[6], "report CSV");
    r.seed = std::stoull(std::string(c[7]));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"config_id", r.config_id},
                    {"attribute", r.attribute},
                    {"probe_acc_before", r.probe_acc_before},
                    {"probe_acc_after", r.probe_acc_after},
                    {"fairness_after", r.fairness_after},
                    {"recon_error", r.recon_error},
                    {"explained_var", r.explained_var},
                    {"seed", r.seed}});
  return {{"header", kReportHeader}, {"config", report.config}, {"rows", rows}, {"extra", report.extra}};
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport report;
  report.config = j.at("config");
  report.extra = j.value("extra", nlohmann::json::object());
  for (const auto& r : j.at("rows"))
    report.rows.push_back({r.at("config_id").get<std::string>(), r.at("attribute").get<std::string>(),
                           r.at("probe_acc_before").get<double>(), r.at("probe_acc_after").get<double>(),
                           r.at("fairness_after").get<double>(), r.at("recon_error").get<double>(),
                           r.at("explained_var").get<double>(), r.at("seed").get<std::uint64_t>()});
  return report;
}

// 64-bit FNV-1a, used for config ids and fixture checksums.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct EvaluateOptions {
  ProbeConfig probe;
  std::vector<std::string> attributes;  // empty: the model's attributes, else every schema attribute
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();  // echoed into the report; hashed into config_id
};

// Per attribute: a probe trained and scored on `before`, a second probe
// trained and scored on `after`, and the fairness score of the second probe's
// predicted group counts on `after`. Reconstruction numbers use `before`.
inline EvaluationReport evaluate(const EmbeddingDataset& before, const EmbeddingDataset& after,
                                 const FairProjectionModel& model, const EvaluateOptions& options = {}) {
  if (!(before.schema() == after.schema())) throw DataError("evaluate: dataset schemas differ");
  if (before.size() != after.size() || before.dimension() != after.dimension())
    throw DataError("evaluate: datasets are not paired");
  for (std::size_t i = 0; i < before.size(); ++i)
    if (before[i].id != after[i].id) throw DataError("evaluate: record ids differ at row " + std::to_string(i));

  std::vector<std::string> attributes = options.attributes;
  if (attributes.empty()) attributes = model.attributes;
  if (attributes.empty())
    for (const auto& a : before.schema().attributes()) attributes.push_back(a.name);

  EvaluationReport report;
  report.config = options.config;
  const std::string config_id = hex64(fnv1a64(options.config.dump()));
  const Matrix xb = before.matrix();
  const Matrix xa = after.matrix();
  const Reconstruction recon = reconstruction_error(xb, model);

  for (const auto& a : attributes) {
    const auto zb = build_indicator(before, a);
    const auto za = build_indicator(after, a);
    const auto pb = train_probe(xb, zb, options.probe);
    const auto pa = train_probe(xa, za, options.probe);
    const auto counts = predicted_counts(pa, xa);
    ReportRow row;
    row.config_id = config_id;
    row.attribute = a;
    row.probe_acc_before = probe_accuracy(pb, xb, zb);
    row.probe_acc_after = probe_accuracy(pa, xa, za);
    row.fairness_after = fairness_score(counts);
    row.recon_error = recon.error;
    row.explained_var = recon.explained_variance;
    row.seed = options.seed;
    report.rows.push_back(row);
    report.extra[a] = {{"chance_before", chance_level(zb)},
                       {"chance_after", chance_level(za)},
                       {"predicted_counts_after", counts},
                       {"groups", za.columns()}};
  }
  return report;
}

}  // namespace fairproj
