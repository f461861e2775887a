// ponly: fit presence-only models, simulate data, run the mixture sweep and
// the equivalence checks from the command line.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ponly/data.hpp"
#include "ponly/equivalence.hpp"
#include "ponly/errors.hpp"
#include "ponly/io.hpp"
#include "ponly/likelihoods.hpp"
#include "ponly/rng.hpp"
#include "ponly/simstudy.hpp"
#include "ponly/solvers.hpp"

using nlohmann::json;
using namespace ponly;

namespace {

enum ExitCode { kOk = 0, kInput = 1, kNumerical = 2, kCheckFailed = 3 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

// A config file is either a plain JSON config or a previous artifact: a
// JSON document with a "config" member, a JSON-lines report whose first
// record carries "config", or a CSV with a `# config: {...}` comment.
json load_config(const std::string& path, const std::string& command) {
  const std::string text = read_file(path);
  json cfg;
  bool found = false;
  try {
    json j = json::parse(text);
    cfg = (j.is_object() && j.contains("tool") && j.contains("config")) ? j.at("config") : j;
    found = true;
  } catch (const json::parse_error&) {
    std::istringstream lines(text);
    std::string line;
    while (!found && std::getline(lines, line)) {
      static const std::string tag = "# config: ";
      try {
        if (line.rfind(tag, 0) == 0) {
          cfg = json::parse(line.substr(tag.size()));
          found = true;
        } else if (!line.empty() && line.front() == '{') {
          cfg = json::parse(line).at("config");
          found = true;
        }
      } catch (const json::exception& ex) {
        throw InvalidArgument("config in '" + path + "': " + ex.what());
      }
    }
  }
  if (!found || !cfg.is_object()) {
    throw InvalidArgument("no JSON config found in '" + path + "'");
  }
  if (cfg.contains("command") && cfg.at("command") != command) {
    throw InvalidArgument("config in '" + path + "' is for '" +
                          cfg.at("command").get<std::string>() + "', not '" + command + "'");
  }
  cfg["command"] = command;
  return cfg;
}

json artifact_header(const json& cfg) {
  return json{{"tool", "ponly"}, {"version", tool_version()}, {"config", cfg}};
}

std::vector<std::string> csv_header(const json& cfg) {
  return {std::string("tool: ponly ") + tool_version(), "config: " + cfg.dump(),
          "seed: " + std::to_string(cfg.value("seed", std::uint64_t{0}))};
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json error_json(const std::exception& ex) {
  json e{{"message", ex.what()}};
  if (const auto* nc = dynamic_cast<const NonConvergence*>(&ex)) {
    e["type"] = "non_convergence";
    e["iterations"] = nc->iterations();
    e["grad_norm"] = nc->grad_norm();
    e["last_iterate"] = vector_json(nc->last_iterate());
    if (nc->direction().size()) e["direction"] = vector_json(nc->direction());
  } else if (const auto* rd = dynamic_cast<const RankDeficiency*>(&ex)) {
    e["type"] = "rank_deficiency";
    e["null_direction"] = vector_json(rd->direction());
  } else if (const auto* ip = dynamic_cast<const InfeasiblePoint*>(&ex)) {
    e["type"] = "infeasible_point";
    e["row"] = ip->row();
    e["linear_predictor"] = ip->linear_predictor();
  } else {
    e["type"] = "numerical";
  }
  return e;
}

bool is_numerical(const std::exception& ex) {
  return dynamic_cast<const NonConvergence*>(&ex) || dynamic_cast<const RankDeficiency*>(&ex) ||
         dynamic_cast<const InfeasiblePoint*>(&ex);
}

unsigned thread_cap() {
  const char* env = std::getenv("PONLY_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw InvalidArgument("PONLY_THREADS must be a positive integer");
  return static_cast<unsigned>(n);
}

// Seed recorded by `simulate` in a dataset file, 0 when absent.
std::uint64_t seed_from_dataset(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  static const std::string tag = "# seed: ";
  while (std::getline(in, line) && !line.empty() && line.front() == '#') {
    if (line.rfind(tag, 0) == 0) return std::stoull(line.substr(tag.size()));
  }
  return 0;
}

struct PenaltyFlags {
  std::string kind;
  double lambda = 0.0;
  double mix = 1.0;
  CLI::Option* kind_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* mix_opt = nullptr;

  void add(CLI::App* app) {
    kind_opt = app->add_option("--penalty", kind, "none, l1, l2 or elastic")
                   ->check(CLI::IsMember({"none", "l1", "l2", "elastic"}));
    lambda_opt = app->add_option("--lambda", lambda, "penalty strength")->check(CLI::NonNegativeNumber);
    mix_opt = app->add_option("--mix", mix, "elastic-net l1 share")->check(CLI::Range(0.0, 1.0));
  }

  json resolve(const json& base) const {
    Penalty p = base.is_object() ? penalty_from_json(base) : Penalty{};
    if (kind_opt->count()) {
      p.kind = penalty_kind_from_string(kind);
      if (!mix_opt->count()) p.mix = p.kind == Penalty::Kind::l2 ? 0.0 : 1.0;
    }
    if (lambda_opt->count()) p.lambda = lambda;
    if (mix_opt->count()) p.mix = mix;
    return to_json(p);
  }
};

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string config, data, model, out;
  double area = 0.0, W = 0.0;
  std::uint64_t seed = 0;
  PenaltyFlags penalty;
  CLI::Option *data_opt, *area_opt, *model_opt, *W_opt, *seed_opt;
};

json resolve_fit(const FitArgs& a) {
  json cfg = a.config.empty() ? json{{"command", "fit"}} : load_config(a.config, "fit");
  if (a.data_opt->count()) cfg["data"] = a.data;
  if (a.area_opt->count()) cfg["area"] = a.area;
  if (a.model_opt->count()) cfg["model"] = a.model;
  if (a.W_opt->count()) cfg["W"] = a.W;
  if (!cfg.contains("data")) throw CLI::RequiredError("--data");
  if (!cfg.contains("area")) throw CLI::RequiredError("--area");
  if (!cfg.contains("model")) cfg["model"] = "ipp";
  if (!cfg.contains("W")) cfg["W"] = nullptr;
  cfg["penalty"] = a.penalty.resolve(cfg.value("penalty", json()));
  if (a.seed_opt->count()) {
    cfg["seed"] = a.seed;
  } else if (!cfg.contains("seed")) {
    cfg["seed"] = seed_from_dataset(cfg.at("data").get<std::string>());
  }
  return cfg;
}

int run_fit(const json& cfg, const std::string& out) {
  const std::string model = cfg.at("model");
  const Dataset data = read_dataset_csv_file(cfg.at("data"), cfg.at("area").get<double>());
  const Penalty pen = penalty_from_json(cfg.at("penalty"));
  const std::optional<double> W =
      cfg.at("W").is_null() ? std::nullopt : std::optional<double>(cfg.at("W").get<double>());
  json doc = artifact_header(cfg);
  try {
    ModelFit fit;
    json meta = json::object();
    if (model == "ipp") {
      fit = fit_ipp(data, pen);
    } else if (model == "maxent") {
      fit = fit_maxent(data, pen);
    } else if (model == "lr") {
      fit = fit_logistic(data, W.value_or(1.0), pen);
    } else if (model == "iwlr") {
      if (W) {
        fit = fit_logistic(data, *W, pen);
        fit.model = ModelKind::iwlr;
        const ModelFit ref = fit_ipp(data, pen);
        const double gap = std::max((fit.beta - ref.beta).cwiseAbs().maxCoeff(),
                                    std::abs(*fit.alpha - *ref.alpha));
        meta = {{"W_forced", true},
                {"reference_model", "ipp"},
                {"reference_alpha", *ref.alpha},
                {"reference_beta", vector_json(ref.beta)},
                {"max_abs_diff_vs_ipp", gap},
                {"limit_tolerance", kLimitTolerance},
                {"within_limit_tolerance", gap <= kLimitTolerance}};
      } else {
        fit = fit_iwlr(data, pen);
        meta = {{"W_forced", false}};
      }
    } else if (model == "berman-turner") {
      const BinnedCounts binned = bin_presence_by_features(data);
      fit = fit_poisson_llm(binned, data.background(), pen);
    } else {
      throw InvalidArgument("unknown model '" + model + "'");
    }
    fit.seed = cfg.at("seed").get<std::uint64_t>();
    doc["fit"] = to_json(fit);
    doc["metadata"] = meta;
  } catch (const std::exception& ex) {
    if (!is_numerical(ex)) throw;
    doc["error"] = error_json(ex);
    write_output(out, doc.dump(2) + "\n");
    std::cerr << "ponly fit: " << ex.what() << "\n";
    return kNumerical;
  }
  write_output(out, doc.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config, preset, mode, variant, out;
  std::size_t n1 = 0, n0 = 0;
  std::uint64_t seed = 0;
  CLI::Option *preset_opt, *mode_opt, *variant_opt, *n1_opt, *n0_opt, *seed_opt;
};

json resolve_simulate(const SimulateArgs& a) {
  json cfg = a.config.empty() ? json{{"command", "simulate"}} : load_config(a.config, "simulate");
  if (a.preset_opt->count()) cfg["preset"] = a.preset;
  if (a.seed_opt->count()) cfg["seed"] = a.seed;
  if (!cfg.contains("seed")) cfg["seed"] = 1;
  const bool preset = cfg.contains("preset") && !cfg.at("preset").is_null();
  if (preset) {
    if (cfg.at("preset") != "mixture45") {
      throw InvalidArgument("unknown preset '" + cfg.at("preset").get<std::string>() + "'");
    }
    if (a.n1_opt->count()) cfg["n1"] = a.n1;
    if (a.n0_opt->count()) cfg["n0"] = a.n0;
    if (a.variant_opt->count()) cfg["spec_variant"] = a.variant;
    if (!cfg.contains("n1")) cfg["n1"] = 3000;
    if (!cfg.contains("n0")) cfg["n0"] = 10000;
    if (!cfg.contains("spec_variant")) cfg["spec_variant"] = "population_proportion";
    return cfg;
  }
  cfg["preset"] = nullptr;
  if (!cfg.contains("intensity") && !cfg.contains("thinning")) {
    throw InvalidArgument("simulate needs --preset or a config with an intensity or thinning model");
  }
  if (!cfg.contains("domain")) throw InvalidArgument("simulate config needs a domain");
  if (!cfg.contains("features")) cfg["features"] = json{{"type", "identity"}};
  json bg = cfg.value("background", json::object());
  if (a.n0_opt->count()) bg["n0"] = a.n0;
  if (a.mode_opt->count()) bg["mode"] = a.mode;
  if (!bg.contains("n0")) bg["n0"] = 10000;
  if (!bg.contains("mode")) bg["mode"] = "uniform";
  cfg["background"] = bg;
  if (!cfg.contains("intensity")) cfg["intensity"] = nullptr;
  if (!cfg.contains("thinning")) cfg["thinning"] = nullptr;
  return cfg;
}

int run_simulate(const json& cfg, const std::string& out) {
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  std::vector<std::string> comments = csv_header(cfg);
  std::ostringstream csv;
  if (!cfg.at("preset").is_null()) {
    MixtureSpec1D spec;
    spec.variant = variant_from_string(cfg.at("spec_variant"));
    const Dataset data = draw_study_data(spec, cfg.at("n1").get<std::size_t>(),
                                         cfg.at("n0").get<std::size_t>(), seed);
    comments.push_back("domain_area: 1");
    write_dataset_csv(csv, data, comments);
  } else {
    const Domain domain = domain_from_json(cfg.at("domain"));
    const FeatureMap features = feature_map_from_json(cfg.at("features"));
    const json& bg = cfg.at("background");
    const std::string mode = bg.at("mode");
    if (mode != "uniform" && mode != "grid") throw InvalidArgument("unknown background mode '" + mode + "'");
    Locations presence;
    if (!cfg.at("thinning").is_null()) {
      const ThinningModel thin = thinning_from_json(cfg.at("thinning"));
      const Eigen::VectorXd probe = features(Eigen::VectorXd::Zero(domain.dim()));
      const IntensityModel occ = cfg.at("intensity").is_null()
                                     ? thin.occurrence_on(static_cast<int>(probe.size()))
                                     : intensity_from_json(cfg.at("intensity"));
      presence = thin_process(simulate_ipp(occ, domain, features, derive_seed(seed, 0)), thin,
                              features, derive_seed(seed, 2));
    } else {
      presence = simulate_ipp(intensity_from_json(cfg.at("intensity")), domain, features,
                              derive_seed(seed, 0));
    }
    const Locations background =
        sample_background(domain, bg.at("n0").get<std::size_t>(),
                          mode == "grid" ? BackgroundMode::grid : BackgroundMode::uniform,
                          derive_seed(seed, 1));
    const Dataset data = assemble_dataset(presence, background, features, domain.area());
    comments.push_back("domain_area: " + format_double(domain.area()));
    write_dataset_csv(csv, data, comments);
  }
  write_output(out, csv.str());
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string config, variant, out;
  std::size_t n1 = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> n0;
  std::vector<std::string> estimators;
  bool extended = false;
  CLI::Option *n1_opt, *replicates_opt, *seed_opt, *n0_opt, *estimators_opt, *variant_opt;
};

json resolve_sweep(const SweepArgs& a) {
  json raw = a.config.empty() ? json::object() : load_config(a.config, "sweep");
  raw.erase("command");
  if (a.n1_opt->count()) raw["n1"] = a.n1;
  if (a.replicates_opt->count()) raw["replicates"] = a.replicates;
  if (a.seed_opt->count()) raw["seed"] = a.seed;
  if (a.n0_opt->count()) raw["n0_grid"] = a.n0;
  if (a.estimators_opt->count()) raw["estimators"] = a.estimators;
  if (a.variant_opt->count()) {
    raw["spec_variant"] = a.variant;
    if (raw.contains("spec")) raw["spec"].erase("variant");
  }
  SweepConfig c = sweep_config_from_json(raw);
  if (a.extended) c.n0_grid.push_back(1000000);
  json cfg = to_json(c);
  cfg["command"] = "sweep";
  return cfg;
}

int run_sweep_cmd(const json& cfg, const std::string& out) {
  SweepConfig c = sweep_config_from_json(cfg);
  c.threads = thread_cap();
  const SweepResult result = run_sweep(c);
  std::size_t failed = 0;
  for (const auto& cell : result.cells) failed += cell.beta_hat ? 0 : 1;
  if (failed) std::cerr << "ponly sweep: " << failed << " cell fit(s) failed, marked NA\n";
  write_output(out, emit_figure_data(result, csv_header(cfg)));
  return kOk;
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string config, data, out;
  double area = 0.0, W = 0.0, tol = 0.0;
  int datasets = 0;
  std::uint64_t seed = 0;
  PenaltyFlags penalty;
  CLI::Option *data_opt, *area_opt, *W_opt, *tol_opt, *datasets_opt, *seed_opt;
};

json resolve_check(const CheckArgs& a) {
  json cfg = a.config.empty() ? json{{"command", "check"}} : load_config(a.config, "check");
  if (a.data_opt->count()) cfg["data"] = a.data;
  if (a.area_opt->count()) cfg["area"] = a.area;
  const bool dataset = cfg.contains("data") && !cfg.at("data").is_null();
  cfg["mode"] = dataset ? "dataset" : "sweep";
  if (a.tol_opt->count()) {
    cfg["prop1_tolerance"] = a.tol;
    cfg["prop2_tolerance"] = a.tol;
    if (dataset) cfg["scores_tolerance"] = a.tol;
  }
  if (!cfg.contains("prop1_tolerance")) cfg["prop1_tolerance"] = kExactTolerance;
  if (!cfg.contains("prop2_tolerance")) cfg["prop2_tolerance"] = kLimitTolerance;
  if (dataset) {
    if (!cfg.contains("area")) throw CLI::RequiredError("--area");
    if (a.W_opt->count()) cfg["W"] = a.W;
    if (!cfg.contains("W")) cfg["W"] = nullptr;
    if (!cfg.contains("scores_tolerance")) cfg["scores_tolerance"] = kExactTolerance;
    cfg["penalty"] = a.penalty.resolve(cfg.value("penalty", json()));
    if (a.seed_opt->count()) {
      cfg["seed"] = a.seed;
    } else if (!cfg.contains("seed")) {
      cfg["seed"] = seed_from_dataset(cfg.at("data").get<std::string>());
    }
  } else {
    const SweepCheckConfig defaults;
    if (a.datasets_opt->count()) cfg["datasets"] = a.datasets;
    if (a.seed_opt->count()) cfg["seed"] = a.seed;
    if (!cfg.contains("datasets")) cfg["datasets"] = defaults.datasets;
    if (!cfg.contains("seed")) cfg["seed"] = defaults.seed;
    if (!cfg.contains("penalties")) {
      json pens = json::array();
      for (const auto& p : defaults.penalties) pens.push_back(to_json(p));
      cfg["penalties"] = pens;
    }
  }
  return cfg;
}

int run_check(const json& cfg, const std::string& out) {
  std::ostringstream lines;
  lines << artifact_header(cfg).dump() << '\n';
  std::vector<EquivalenceReport> reports;
  try {
    if (cfg.at("mode") == "sweep") {
      SweepCheckConfig c;
      c.datasets = cfg.at("datasets").get<int>();
      if (c.datasets < 1) throw InvalidArgument("check: datasets must be >= 1");
      c.seed = cfg.at("seed").get<std::uint64_t>();
      c.penalties.clear();
      for (const auto& p : cfg.at("penalties")) c.penalties.push_back(penalty_from_json(p));
      c.prop1_tolerance = cfg.at("prop1_tolerance").get<double>();
      c.prop2_tolerance = cfg.at("prop2_tolerance").get<double>();
      reports = run_equivalence_sweep(c);
    } else {
      const Dataset data = read_dataset_csv_file(cfg.at("data"), cfg.at("area").get<double>());
      const Penalty pen = penalty_from_json(cfg.at("penalty"));
      const std::optional<double> W =
          cfg.at("W").is_null() ? std::nullopt : std::optional<double>(cfg.at("W").get<double>());
      const auto seed = cfg.at("seed").get<std::uint64_t>();
      reports.push_back(check_prop1(data, pen, {}, cfg.at("prop1_tolerance").get<double>()));
      reports.push_back(check_prop2(data, pen, {}, cfg.at("prop2_tolerance").get<double>(), W));
      reports.push_back(
          check_scores(fit_ipp(data, pen), data, cfg.at("scores_tolerance").get<double>()));
      for (auto& r : reports) r.dataset_seed = seed;
    }
  } catch (const std::exception& ex) {
    if (!is_numerical(ex)) throw;
    for (const auto& r : reports) lines << to_json(r).dump() << '\n';
    lines << json{{"error", error_json(ex)}}.dump() << '\n';
    write_output(out, lines.str());
    std::cerr << "ponly check: " << ex.what() << "\n";
    return kNumerical;
  }
  bool all_pass = true;
  for (const auto& r : reports) {
    lines << to_json(r).dump() << '\n';
    all_pass = all_pass && r.pass;
  }
  write_output(out, lines.str());
  if (!all_pass) {
    std::cerr << "ponly check: at least one check failed\n";
    return kCheckFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Presence-only species distribution models: fit, simulate, sweep, check"};
  app.set_version_flag("--version", std::string("ponly ") + tool_version());
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a model to a dataset CSV");
  fit->add_option("--config", fa.config, "JSON config or previous fit artifact")->check(CLI::ExistingFile);
  fa.data_opt = fit->add_option("--data", fa.data, "dataset CSV (y,[w,]x1..xp)")->check(CLI::ExistingFile);
  fa.area_opt = fit->add_option("--area", fa.area, "domain area |D|")->check(CLI::PositiveNumber);
  fa.model_opt = fit->add_option("--model", fa.model, "ipp, maxent, lr, iwlr or berman-turner")
                     ->check(CLI::IsMember({"ipp", "maxent", "lr", "iwlr", "berman-turner"}));
  fa.W_opt = fit->add_option("--W", fa.W, "background weight (lr; forces W for iwlr)")->check(CLI::Range(1.0, 1e300));
  fa.seed_opt = fit->add_option("--seed", fa.seed, "seed recorded in the output");
  fa.penalty.add(fit);
  fit->add_option("--out", fa.out, "output file (default stdout)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Simulate a presence-only dataset CSV");
  sim->add_option("--config", sa.config, "JSON simulation config or previous artifact")->check(CLI::ExistingFile);
  sa.preset_opt = sim->add_option("--preset", sa.preset, "named study design (mixture45)");
  sa.n1_opt = sim->add_option("--n1", sa.n1, "presence count (preset only)");
  sa.n0_opt = sim->add_option("--n0", sa.n0, "background count")->check(CLI::PositiveNumber);
  sa.mode_opt = sim->add_option("--mode", sa.mode, "background sampling: uniform or grid")
                    ->check(CLI::IsMember({"uniform", "grid"}));
  sa.variant_opt = sim->add_option("--spec-variant", sa.variant, "population_proportion or intensity_weighted");
  sa.seed_opt = sim->add_option("--seed", sa.seed, "random seed");
  sim->add_option("--out", sa.out, "output file (default stdout)");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "Run the misspecified-mixture sweep");
  sweep->add_option("--config", wa.config, "JSON sweep config or previous artifact")->check(CLI::ExistingFile);
  wa.n1_opt = sweep->add_option("--n1", wa.n1, "presence sample size");
  wa.n0_opt = sweep->add_option("--n0", wa.n0, "background sizes")->delimiter(',');
  wa.replicates_opt = sweep->add_option("--replicates", wa.replicates, "backgrounds per n0");
  wa.estimators_opt = sweep->add_option("--estimators", wa.estimators, "iwlr and/or lr")->delimiter(',');
  wa.variant_opt = sweep->add_option("--spec-variant", wa.variant, "population_proportion or intensity_weighted");
  wa.seed_opt = sweep->add_option("--seed", wa.seed, "random seed");
  sweep->add_flag("--extended", wa.extended, "append n0 = 1e6 to the grid");
  sweep->add_option("--out", wa.out, "output CSV (default stdout)");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Run the equivalence checks");
  check->add_option("--config", ca.config, "JSON check config or previous report")->check(CLI::ExistingFile);
  ca.data_opt = check->add_option("--data", ca.data, "check a user dataset instead of the sweep")->check(CLI::ExistingFile);
  ca.area_opt = check->add_option("--area", ca.area, "domain area |D|")->check(CLI::PositiveNumber);
  ca.W_opt = check->add_option("--W", ca.W, "force the IWLR weight")->check(CLI::Range(1.0, 1e300));
  ca.tol_opt = check->add_option("--tol", ca.tol, "override every tolerance")->check(CLI::PositiveNumber);
  ca.datasets_opt = check->add_option("--datasets", ca.datasets, "random datasets in the sweep");
  ca.seed_opt = check->add_option("--seed", ca.seed, "sweep seed");
  ca.penalty.add(check);
  check->add_option("--out", ca.out, "output JSON lines (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == fit) return run_fit(resolve_fit(fa), fa.out);
    if (active == sim) return run_simulate(resolve_simulate(sa), sa.out);
    if (active == sweep) return run_sweep_cmd(resolve_sweep(wa), wa.out);
    return run_check(resolve_check(ca), ca.out);
  } catch (const CLI::RequiredError& e) {
    std::cerr << "ponly " << active->get_name() << ": " << e.what() << "\n\n" << active->help();
    return kInput;
  } catch (const json::exception& ex) {
    std::cerr << "ponly " << active->get_name() << ": malformed config: " << ex.what() << "\n";
    return kInput;
  } catch (const std::exception& ex) {
    if (is_numerical(ex)) {
      std::cerr << "ponly " << active->get_name() << ": " << ex.what() << "\n";
      return kNumerical;
    }
    std::cerr << "ponly " << active->get_name() << ": " << ex.what() << "\n";
    return kInput;
  }
}
