// fairproj command-line tool: synth, fit, transform, eval, sweep.
//
// Exit codes: 0 success, 1 usage/configuration, 2 data/format, 3 numeric.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "fairproj/fairproj.hpp"

namespace fs = std::filesystem;
using namespace fairproj;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool quiet = false;
  std::string format = "csv";
};

struct FitFlags {
  std::vector<std::string> attributes;
  std::string strategy;
  std::string mode = "penalized";
  std::optional<std::size_t> dim;
  double lambda = 1.0;
  bool no_center = false;
  std::string group_form = "centered_group_means";
  bool drop_empty = false;

  void add_to(CLI::App* cmd, bool attr_required) {
    auto* attr = cmd->add_option("--attr", attributes, "Protected attribute (repeat for several)");
    if (attr_required) attr->required();
    cmd->add_option("--strategy", strategy, "single, cross, stack or sequential (default: single for one attribute, else cross)")
        ->check(CLI::IsMember({"single", "cross", "stack", "sequential"}));
    cmd->add_option("--mode", mode, "penalized or nullspace")->check(CLI::IsMember({"penalized", "nullspace"}));
    cmd->add_option("--dim", dim, "Target dimension d (default min(D, 512))");
    cmd->add_option("--lambda", lambda, "Fairness penalty weight (penalized mode)");
    cmd->add_flag("--no-center", no_center, "Fit on uncentered data");
    cmd->add_option("--group-form", group_form, "Group matrix form: centered_group_means or group_sums")
        ->check(CLI::IsMember({"centered_group_means", "group_sums", "means", "sums"}));
    cmd->add_flag("--drop-empty-composites", drop_empty, "Cross strategy: drop empty composite groups with a warning");
  }

  FairPcaConfig config() const {
    FairPcaConfig c;
    c.dim = dim;
    c.lambda = lambda;
    c.mode = parse_projection_mode(mode);
    c.center = !no_center;
    c.form = parse_group_matrix_form(group_form);
    return c;
  }

  Strategy resolved_strategy() const {
    if (!strategy.empty()) return parse_strategy(strategy);
    return attributes.size() == 1 ? Strategy::single : Strategy::cross;
  }
};

struct NoiseFlags {
  std::string variant = "none";
  double eps = 1.0;
  double sign_bias = 0.0;
  std::optional<double> magnitude;
  std::string policy = "uniform_random";
  std::string group;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--noise", variant, "none or a noise variant")
        ->check(CLI::IsMember({"none", "empirical", "mean_empirical", "fixed_directional", "random_gaussian",
                               "fixed_random_gaussian", "constant_shift", "bypass"}));
    cmd->add_option("--eps", eps, "Noise scale epsilon");
    cmd->add_option("--sign-bias", sign_bias, "fixed_directional sign bias b in [-1, 1]");
    cmd->add_option("--magnitude", magnitude, "Override the sampled magnitude delta (signed)");
    cmd->add_option("--group-policy", policy, "uniform_random, fixed or cycle")
        ->check(CLI::IsMember({"uniform_random", "fixed", "cycle"}));
    cmd->add_option("--group", group, "Group for the fixed policy");
  }

  std::optional<NoiseConfig> config(std::uint64_t seed) const {
    if (variant == "none") return std::nullopt;
    NoiseConfig c;
    c.variant = parse_noise_variant(variant);
    c.epsilon = eps;
    c.sign_bias = sign_bias;
    c.magnitude_override = magnitude;
    if (policy == "fixed") {
      if (group.empty()) throw ConfigError("--group-policy fixed needs --group");
      c.policy = GroupPolicy::fixed(group);
    } else if (policy == "cycle") {
      c.policy = GroupPolicy::cycle();
    }
    c.seed = seed;
    return c;
  }
};

void emit(const GlobalOptions& g, const std::string& text) {
  if (!g.quiet) std::cout << text << (text.empty() || text.back() == '\n' ? "" : "\n");
}

void write_text(const fs::path& path, const std::string& text) { detail::write_file(path, text); }

std::vector<std::string> split_grid(const std::string& s) {
  std::vector<std::string> out;
  for (auto part : detail::split(s, ',')) {
    std::string v(part);
    v.erase(0, v.find_first_not_of(' '));
    v.erase(v.find_last_not_of(' ') + 1);
    if (!v.empty()) out.push_back(v);
  }
  return out;
}

// "start:stop:step", inclusive of stop when it lands on the grid.
std::vector<std::string> range_grid(const std::string& s) {
  const auto parts = detail::split(s, ':');
  if (parts.size() != 3) throw ConfigError("--grid-range expects start:stop:step");
  const double start = detail::parse_double(parts[0], "--grid-range");
  const double stop = detail::parse_double(parts[1], "--grid-range");
  const double step = detail::parse_double(parts[2], "--grid-range");
  if (!(step > 0.0) || stop < start) throw ConfigError("--grid-range needs step > 0 and stop >= start");
  std::vector<std::string> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(detail::format_double(start + static_cast<double>(i) * step));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware embedding projection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read option defaults from a TOML/INI file (flags take precedence)");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Base random seed");
  app.add_flag("--quiet", global.quiet, "Suppress standard output");
  app.add_option("--format", global.format, "Report format on standard output")->check(CLI::IsMember({"csv", "json"}));

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled embedding dataset");
  std::string preset, synth_out;
  std::vector<std::string> attr_specs;
  SynthConfig custom;
  synth->add_option("--preset", preset, "gender2x, race3x or gender_race2x3");
  synth->add_option("--attr-spec", attr_specs, "Custom attribute NAME=g1|g2|... (repeatable)");
  synth->add_option("--dim", custom.dimension, "Custom: embedding dimension");
  synth->add_option("--per-group", custom.per_composite, "Custom: records per composite group");
  synth->add_option("--offset-norm", custom.offset_norm, "Custom: norm of auto-orthogonal group offsets");
  synth->add_option("--semantic-dim", custom.semantic_dim, "Custom: shared semantic subspace dimension");
  synth->add_option("--semantic-var", custom.semantic_variance, "Custom: semantic variance");
  synth->add_option("--sigma", custom.sigma, "Custom: isotropic noise standard deviation");
  std::size_t tokens = 0;
  synth->add_option("--tokens", tokens, "Token rows per record (binary output only)");
  synth->add_option("--out", synth_out, "Output dataset (.csv or binary)")->required();

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit a fair projection model");
  std::string fit_data, fit_out;
  FitFlags fit_flags;
  fitc->add_option("--data", fit_data, "Training dataset")->required();
  fit_flags.add_to(fitc, true);
  fitc->add_option("--out", fit_out, "Output model file")->required();

  // transform
  auto* trc = app.add_subcommand("transform", "Project a dataset and optionally inject noise");
  std::string tr_model, tr_data, tr_out, tr_log;
  NoiseFlags tr_noise;
  trc->add_option("--model", tr_model, "Model file")->required();
  trc->add_option("--data", tr_data, "Input dataset")->required();
  trc->add_option("--out", tr_out, "Output dataset")->required();
  tr_noise.add_to(trc);
  trc->add_option("--noise-log", tr_log, "Per-record group/delta log (default: <out>.noise.csv)");

  // eval
  auto* evc = app.add_subcommand("eval", "Evaluate fairness and fidelity of a transformed dataset");
  std::string ev_before, ev_after, ev_model, ev_out;
  std::vector<std::string> ev_attrs;
  ProbeConfig probe;
  evc->add_option("--before", ev_before, "Dataset before transformation")->required();
  evc->add_option("--after", ev_after, "Dataset after transformation")->required();
  evc->add_option("--model", ev_model, "Model file")->required();
  evc->add_option("--attr", ev_attrs, "Attributes to evaluate (default: the model's)");
  evc->add_option("--out", ev_out, "Write <out>.csv and <out>.json");
  for (auto* cmd : {evc}) {
    cmd->add_option("--probe-iters", probe.iterations, "Probe gradient-descent iterations");
    cmd->add_option("--probe-lr", probe.learning_rate, "Probe step size");
  }

  // sweep
  auto* swc = app.add_subcommand("sweep", "Run a parameter sweep and report one row per point and attribute");
  std::string sw_data, sw_axis, sw_grid, sw_range, sw_out, sw_target;
  unsigned sw_jobs = 1;
  FitFlags sw_fit;
  NoiseFlags sw_noise;
  swc->add_option("--data", sw_data, "Dataset")->required();
  sw_fit.add_to(swc, true);
  sw_noise.add_to(swc);
  swc->add_option("--axis", sw_axis, "dim, eps, magnitude, seed, lambda or strategy")
      ->required()
      ->check(CLI::IsMember({"dim", "eps", "magnitude", "seed", "lambda", "strategy"}));
  swc->add_option("--grid", sw_grid, "Comma-separated grid values");
  swc->add_option("--grid-range", sw_range, "Numeric grid start:stop:step");
  swc->add_option("--target", sw_target, "Target group for the magnitude axis");
  swc->add_option("--jobs", sw_jobs, "Worker threads");
  swc->add_option("--probe-iters", probe.iterations, "Probe gradient-descent iterations");
  swc->add_option("--probe-lr", probe.learning_rate, "Probe step size");
  swc->add_option("--out", sw_out, "Report file (.json for JSON, CSV otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (synth->parsed()) {
      SynthConfig cfg;
      if (!preset.empty()) {
        if (!attr_specs.empty()) throw ConfigError("synth: --preset and --attr-spec are exclusive");
        cfg = synth_preset(preset, global.seed);
      } else {
        if (attr_specs.empty()) throw ConfigError("synth: give --preset or at least one --attr-spec");
        cfg = custom;
        cfg.seed = global.seed;
        for (const auto& spec : attr_specs) {
          auto eq = spec.find('=');
          if (eq == std::string::npos) throw ConfigError("--attr-spec expects NAME=g1|g2");
          Attribute a{spec.substr(0, eq), {}};
          for (auto g : detail::split(std::string_view(spec).substr(eq + 1), '|')) a.groups.emplace_back(g);
          cfg.attributes.push_back(std::move(a));
        }
      }
      cfg.tokens_per_record = tokens;
      const auto data = generate(cfg);
      save_dataset(data, synth_out);
      emit(global, nlohmann::json{{"out", synth_out}, {"n", data.size()}, {"dimension", data.dimension()}, {"seed", global.seed}}.dump());
    } else if (fitc->parsed()) {
      const auto data = load_dataset(fit_data);
      CrossOptions cross{fit_flags.drop_empty};
      const auto model = fit_strategy(data, fit_flags.resolved_strategy(), fit_flags.attributes, fit_flags.config(), cross);
      for (const auto& g : model.dropped_groups) std::cerr << "warning: dropped empty composite group '" << g << "'\n";
      save_model(model, fit_out);
      nlohmann::json out = model_manifest(model);
      out["model"] = fit_out;
      emit(global, out.dump());
    } else if (trc->parsed()) {
      const auto model = load_model(tr_model);
      const auto data = load_dataset(tr_data);
      const auto noise = tr_noise.config(global.seed);
      const auto result = transform_dataset(model, data, noise);
      save_dataset(result.data, tr_out);
      nlohmann::json out = {{"out", tr_out}, {"n", result.data.size()}, {"noise", tr_noise.variant}, {"seed", global.seed}};
      if (noise) {
        const std::string log_path = tr_log.empty() ? tr_out + ".noise.csv" : tr_log;
        write_text(log_path, noise_log_csv(result.log));
        out["noise_log"] = log_path;
      }
      emit(global, out.dump());
    } else if (evc->parsed()) {
      const auto model = load_model(ev_model);
      const auto before = load_dataset(ev_before);
      const auto after = load_dataset(ev_after);
      EvaluateOptions eo;
      eo.probe = probe;
      eo.probe.seed = global.seed;
      eo.attributes = ev_attrs;
      eo.seed = global.seed;
      eo.config = {{"command", "eval"},
                   {"model", model_manifest(model)},
                   {"probe", {{"iterations", probe.iterations}, {"learning_rate", probe.learning_rate}}},
                   {"seed", global.seed}};
      const auto report = evaluate(before, after, model, eo);
      const std::string csv = report_to_csv(report);
      const std::string json = report_to_json(report).dump(2) + "\n";
      if (!ev_out.empty()) {
        write_text(ev_out + ".csv", csv);
        write_text(ev_out + ".json", json);
      }
      emit(global, global.format == "json" ? json : csv);
    } else if (swc->parsed()) {
      const auto data = load_dataset(sw_data);
      SweepSpec spec;
      spec.attributes = sw_fit.attributes;
      spec.strategy = sw_fit.resolved_strategy();
      spec.fit = sw_fit.config();
      spec.cross.drop_empty_composites = sw_fit.drop_empty;
      spec.noise = sw_noise.config(global.seed);
      spec.probe = probe;
      spec.base_seed = global.seed;
      spec.axis = parse_sweep_axis(sw_axis);
      if (sw_grid.empty() == sw_range.empty()) throw ConfigError("sweep: give exactly one of --grid and --grid-range");
      spec.grid = sw_grid.empty() ? range_grid(sw_range) : split_grid(sw_grid);
      spec.target_group = sw_target;
      spec.jobs = sw_jobs;
      const auto table = run_sweep(data, spec);
      const bool json_out = global.format == "json" || fs::path(sw_out).extension() == ".json";
      const std::string text = json_out ? sweep_to_json(table).dump(2) + "\n" : sweep_to_csv(table);
      if (!sw_out.empty()) write_text(sw_out, text);
      emit(global, global.format == "json" ? sweep_to_json(table).dump(2) : sweep_to_csv(table));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
