#pragma once

// Noise injection on projected pooled embeddings.
//
// Every variant perturbs v = P P^T x (plus centering) as v + eps * delta * nu_g
// or a Gaussian analogue:
//   empirical              g by policy, delta drawn uniformly from D_g
//   mean_empirical         delta = mean(D_g)
//   fixed_directional      delta = +1 with probability (1 + b) / 2, else -1
//   random_gaussian        v + eps * (sum_g w_g nu_g + xi), w ~ Dirichlet(1..1), xi ~ N(0, I)
//   fixed_random_gaussian  same, with (w, xi) drawn once per injector
//   constant_shift         delta = 1, no draw beyond the group choice
//   bypass                 returns the original un-projected vector
// A magnitude override replaces delta for the delta-based variants.
//
// Draw i uses the stream Rng::stream(seed, i), so results depend only on
// (vector, config, seed, i) and parallel callers need no shared state.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairproj/errors.hpp"
#include "fairproj/fairpca.hpp"
#include "fairproj/rng.hpp"

namespace fairproj {

enum class NoiseVariant {
  empirical,
  mean_empirical,
  fixed_directional,
  random_gaussian,
  fixed_random_gaussian,
  constant_shift,
  bypass,
};

inline std::string to_string(NoiseVariant v) {
  switch (v) {
    case NoiseVariant::empirical: return "empirical";
    case NoiseVariant::mean_empirical: return "mean_empirical";
    case NoiseVariant::fixed_directional: return "fixed_directional";
    case NoiseVariant::random_gaussian: return "random_gaussian";
    case NoiseVariant::fixed_random_gaussian: return "fixed_random_gaussian";
    case NoiseVariant::constant_shift: return "constant_shift";
    case NoiseVariant::bypass: return "bypass";
  }
  return "?";
}

inline NoiseVariant parse_noise_variant(const std::string& s) {
  for (auto v : {NoiseVariant::empirical, NoiseVariant::mean_empirical, NoiseVariant::fixed_directional,
                 NoiseVariant::random_gaussian, NoiseVariant::fixed_random_gaussian, NoiseVariant::constant_shift,
                 NoiseVariant::bypass})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown noise variant '" + s + "'");
}

struct GroupPolicy {
  enum class Kind { uniform_random, fixed, cycle };
  Kind kind = Kind::uniform_random;
  std::string group;  // fixed only

  static GroupPolicy uniform() { return {}; }
  static GroupPolicy fixed(std::string g) { return {Kind::fixed, std::move(g)}; }
  static GroupPolicy cycle() { return {Kind::cycle, {}}; }
};

inline std::string to_string(const GroupPolicy& p) {
  switch (p.kind) {
    case GroupPolicy::Kind::uniform_random: return "uniform_random";
    case GroupPolicy::Kind::fixed: return "fixed:" + p.group;
    case GroupPolicy::Kind::cycle: return "cycle";
  }
  return "?";
}

struct NoiseConfig {
  NoiseVariant variant = NoiseVariant::empirical;
  double epsilon = 1.0;
  double sign_bias = 0.0;
  std::optional<double> magnitude_override;
  GroupPolicy policy;
  std::optional<std::uint64_t> seed;

  bool stochastic() const {
    if (variant == NoiseVariant::bypass) return false;
    if (variant == NoiseVariant::constant_shift || variant == NoiseVariant::mean_empirical ||
        (magnitude_override && variant != NoiseVariant::random_gaussian &&
         variant != NoiseVariant::fixed_random_gaussian))
      return policy.kind == GroupPolicy::Kind::uniform_random;
    return true;
  }

  void validate() const {
    if (!std::isfinite(epsilon)) throw ConfigError("noise: epsilon must be finite");
    if (!(sign_bias >= -1.0 && sign_bias <= 1.0)) throw ConfigError("noise: sign bias must lie in [-1, 1]");
    if (magnitude_override && !std::isfinite(*magnitude_override))
      throw ConfigError("noise: magnitude override must be finite");
    if (stochastic() && !seed) throw ConfigError("noise: variant '" + to_string(variant) + "' needs a seed");
  }
};

struct Injection {
  Vector vector;
  std::optional<std::size_t> group;
  std::optional<double> delta;
};

class NoiseInjector {
 public:
  NoiseInjector(const FairProjectionModel& model, NoiseConfig config)
      : config_(std::move(config)),
        groups_(model.groups),
        directions_(model.directions),
        distributions_(model.distributions),
        dimension_(model.dimension) {
    config_.validate();
    if (groups_.empty() || directions_.rows() != groups_.size() || distributions_.size() != groups_.size())
      throw DataError("noise: model carries no bias directions");
    for (const auto& d : distributions_)
      if (d.empty()) throw DataError("noise: model has an empty empirical distribution");
    means_.reserve(distributions_.size());
    for (const auto& d : distributions_) {
      double s = 0.0;
      for (double v : d) s += v;
      means_.push_back(s / static_cast<double>(d.size()));
    }
    if (config_.policy.kind == GroupPolicy::Kind::fixed) fixed_group_ = model.group_index(config_.policy.group);
    if (config_.variant == NoiseVariant::fixed_random_gaussian) {
      Rng rng = Rng::stream(config_.seed.value_or(0), std::numeric_limits<std::uint64_t>::max());
      fixed_gaussian_ = gaussian_displacement(rng);
    }
  }

  const NoiseConfig& config() const { return config_; }

  Injection inject(std::span<const double> projected, std::uint64_t draw_index,
                   std::optional<std::span<const double>> original = std::nullopt) const {
    Rng rng = Rng::stream(config_.seed.value_or(0), draw_index);
    return inject_with(projected, rng, draw_index, original);
  }

  Injection inject_with(std::span<const double> projected, Rng& rng, std::uint64_t draw_index,
                        std::optional<std::span<const double>> original = std::nullopt) const {
    if (projected.size() != dimension_) throw DataError("noise: vector dimension does not match model");
    Injection out;
    if (config_.variant == NoiseVariant::bypass) {
      if (!original) throw DataError("noise: bypass needs the original embedding");
      if (original->size() != dimension_) throw DataError("noise: original dimension does not match model");
      out.vector.assign(original->begin(), original->end());
      return out;
    }

    Vector displacement;
    if (config_.variant == NoiseVariant::random_gaussian) {
      displacement = gaussian_displacement(rng);
    } else if (config_.variant == NoiseVariant::fixed_random_gaussian) {
      displacement = fixed_gaussian_;
    } else {
      const std::size_t g = choose_group(rng, draw_index);
      const double delta = config_.magnitude_override ? *config_.magnitude_override : draw_delta(g, rng);
      out.group = g;
      out.delta = delta;
      auto nu = directions_.row(g);
      displacement.resize(dimension_);
      for (std::size_t j = 0; j < dimension_; ++j) displacement[j] = delta * nu[j];
    }

    out.vector.assign(projected.begin(), projected.end());
    if (config_.epsilon != 0.0)
      for (std::size_t j = 0; j < dimension_; ++j) out.vector[j] += config_.epsilon * displacement[j];
    return out;
  }

  const std::vector<std::string>& groups() const { return groups_; }

 private:
  std::size_t choose_group(Rng& rng, std::uint64_t draw_index) const {
    switch (config_.policy.kind) {
      case GroupPolicy::Kind::fixed: return fixed_group_;
      case GroupPolicy::Kind::cycle: return static_cast<std::size_t>(draw_index % groups_.size());
      case GroupPolicy::Kind::uniform_random: break;
    }
    return static_cast<std::size_t>(rng.index(groups_.size()));
  }

  double draw_delta(std::size_t g, Rng& rng) const {
    switch (config_.variant) {
      case NoiseVariant::empirical: return distributions_[g][rng.index(distributions_[g].size())];
      case NoiseVariant::mean_empirical: return means_[g];
      case NoiseVariant::fixed_directional: return rng.uniform() < 0.5 * (1.0 + config_.sign_bias) ? 1.0 : -1.0;
      default: return 1.0;
    }
  }

  Vector gaussian_displacement(Rng& rng) const {
    Vector w(groups_.size());
    double total = 0.0;
    for (double& v : w) total += (v = rng.exponential());
    Vector out(dimension_, 0.0);
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      auto nu = directions_.row(g);
      for (std::size_t j = 0; j < dimension_; ++j) out[j] += (w[g] / total) * nu[j];
    }
    for (double& v : out) v += rng.normal();
    return out;
  }

  NoiseConfig config_;
  std::vector<std::string> groups_;
  Matrix directions_;
  std::vector<Vector> distributions_;
  Vector means_;
  std::size_t dimension_;
  std::size_t fixed_group_ = 0;
  Vector fixed_gaussian_;
};

}  // namespace fairproj
