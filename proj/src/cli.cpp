#include "tclkit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "tclkit/criteria.hpp"
#include "tclkit/estimators.hpp"
#include "tclkit/ingest.hpp"
#include "tclkit/parallel.hpp"
#include "tclkit/sim.hpp"
#include "tclkit/tcl.hpp"
#include "tclkit/uq.hpp"

#ifndef TCLKIT_VERSION
#define TCLKIT_VERSION "0.0.0"
#endif

namespace tclkit::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

nlohmann::ordered_json RunManifest::to_json() const {
  return json{{"command", command},
              {"config_echo", config_echo},
              {"seed", seed},
              {"artifact_version", artifact_version},
              {"timestamp", timestamp}};
}

std::string artifact_version() { return TCLKIT_VERSION; }

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long value = std::strtoll(epoch, &end, 10);
    if (*end != '\0') throw Error(ErrorKind::Usage, "SOURCE_DATE_EPOCH must be an integer");
    now = static_cast<std::time_t>(value);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct OptimizerFlags {
  std::string optimizer = "schedule";
  std::optional<std::size_t> max_iterations;
  std::optional<double> step_size;
  double clip = 0.01;

  void add(CLI::App& app) {
    app.add_option("--optimizer", optimizer, "schedule (fixed decaying learning rate) or line-search")
        ->check(CLI::IsMember({"schedule", "line-search"}))
        ->capture_default_str();
    app.add_option("--max-iterations", max_iterations, "Iteration cap per fit");
    app.add_option("--step-size", step_size, "Learning rate (schedule) or first trial step (line-search)");
    app.add_option("--clip", clip, "Propensity clip epsilon")->capture_default_str();
  }

  GlmFitConfig config() const {
    GlmFitConfig c = optimizer == "schedule" ? GlmFitConfig::reference_schedule() : GlmFitConfig{};
    if (max_iterations) c.max_iterations = *max_iterations;
    if (step_size) c.step_size = *step_size;
    c.clip_epsilon = clip;
    c.validate();
    return c;
  }

  json echo(const GlmFitConfig& c) const {
    return json{{"optimizer", optimizer},
                {"max_iterations", c.max_iterations},
                {"step_size", c.step_size},
                {"decay_factor", c.decay_factor},
                {"decay_interval", c.decay_interval},
                {"gradient_tolerance", c.gradient_tolerance},
                {"clip", c.clip_epsilon}};
  }
};

struct InputFlags {
  std::string source;
  std::string target;
  std::string cities;
  std::string events;
  std::string protected_attribute;
  double percentile = 0.8;
  SaidiFilter filter;

  void add(CLI::App& app) {
    app.add_option("--source", source, "Source-domain observations CSV");
    app.add_option("--target", target, "Target observations CSV, or severe|normal with --cities/--events")
        ->required();
    app.add_option("--cities", cities, "cities.csv (weather-class targets)");
    app.add_option("--events", events, "events.csv (weather-class targets)");
    app.add_option("--protected", protected_attribute, "Protected attribute column in cities.csv");
    app.add_option("--percentile", percentile, "Binarization percentile of the protected attribute")
        ->capture_default_str();
    app.add_option("--min-outage-rate", filter.min_outage_rate)->capture_default_str();
    app.add_option("--min-duration", filter.min_duration_hours)->capture_default_str();
  }

  bool weather_mode() const { return target == "severe" || target == "normal"; }

  json echo() const {
    json j{{"target", target}};
    if (weather_mode()) {
      j["cities"] = cities;
      j["events"] = events;
      j["protected"] = protected_attribute;
      j["percentile"] = percentile;
      j["min_outage_rate"] = filter.min_outage_rate;
      j["min_duration"] = filter.min_duration_hours;
    } else {
      j["source"] = source;
    }
    return j;
  }

  struct Loaded {
    DomainPair pair;
    std::string label;
    std::vector<std::string> warnings;
  };

  Loaded load(bool need_source) const {
    Loaded loaded;
    if (weather_mode()) {
      if (cities.empty() || events.empty() || protected_attribute.empty()) {
        throw Error(ErrorKind::Usage, "--target " + target + " needs --cities, --events and --protected");
      }
      const auto table = read_cities_csv(cities);
      const auto event_list = read_events_csv(events);
      const auto data =
          assemble_observations(table, saidi_by_city(table, event_list, filter), protected_attribute, percentile);
      loaded.pair = weather_domains(data, parse_weather(target));
      loaded.label = target;
      loaded.warnings = data.warnings;
      return loaded;
    }
    loaded.pair.target = read_observations_csv(target);
    loaded.label = "target";
    if (need_source) {
      if (source.empty()) throw Error(ErrorKind::Usage, "--source is required for this method");
      loaded.pair.source = read_observations_csv(source);
      validate(loaded.pair);
    } else {
      validate(loaded.pair.target);
    }
    return loaded;
  }
};

struct GridFlags {
  double min = 0.0;
  double max = 0.1;
  double step = 1e-3;
  std::size_t max_expansions = 3;

  void add(CLI::App& app, std::size_t default_expansions) {
    max_expansions = default_expansions;
    app.add_option("--grid-min", min)->capture_default_str();
    app.add_option("--grid-max", max)->capture_default_str();
    app.add_option("--grid-step", step)->capture_default_str();
    app.add_option("--max-expansions", max_expansions, "Grid doublings when a selection hits an endpoint")
        ->capture_default_str();
  }

  GridSpec spec() const { return GridSpec{min, max, step, max_expansions}; }

  json echo() const {
    return json{{"grid_min", min}, {"grid_max", max}, {"grid_step", step}, {"max_expansions", max_expansions}};
  }
};

struct Common {
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
  std::string preset;
  std::string out;

  void add(CLI::App& app, bool out_required, const std::string& out_help) {
    app.add_option("--seed", seed, "Master random seed")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (default: TCLKIT_THREADS, else all cores)");
    app.add_option("--preset", preset, "Pin the reference simulation constants")->check(CLI::IsMember({"paper"}));
    auto* opt = app.add_option("--out", out, out_help);
    if (out_required) opt->required();
  }

  std::size_t resolved_threads() const { return resolve_threads(threads); }
};

RunManifest make_manifest(const std::string& command, json config, std::uint64_t seed) {
  return RunManifest{command, std::move(config), seed, artifact_version(), utc_timestamp()};
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void emit(const std::string& path, const std::string& text, std::ostream& stdout_stream) {
  if (path.empty() || path == "-") {
    stdout_stream << text;
    return;
  }
  auto file = open_output(path);
  file << text;
  if (!file) throw Error(ErrorKind::Io, "failed writing " + path);
}

EstimateMethod method_from_flag(const std::string& name) { return parse_method(name); }

// ---- simulate ------------------------------------------------------------

struct SimulateCommand {
  Common common;
  SimConfig sim;
  std::string true_link = "exponential";

  void add(CLI::App& app) {
    common.add(app, true, "Output directory");
    app.add_option("--d", sim.dimension)->capture_default_str();
    app.add_option("--s", sim.sparsity)->capture_default_str();
    app.add_option("--n-target", sim.n_target)->capture_default_str();
    app.add_option("--n-source", sim.n_source)->capture_default_str();
    app.add_option("--magnitude", sim.difference_magnitude)->capture_default_str();
    app.add_option("--tau-source", sim.tau_source)->capture_default_str();
    app.add_option("--tau-target", sim.tau_target)->capture_default_str();
    app.add_option("--true-link", true_link)
        ->check(CLI::IsMember({"linear", "sigmoid", "exponential"}))
        ->capture_default_str();
    app.add_option("--covariate-scale", sim.covariate_scale)->capture_default_str();
    app.add_option("--coefficient-scale", sim.coefficient_scale)->capture_default_str();
    app.add_option("--noise-scale", sim.noise_scale)->capture_default_str();
    app.add_option("--confounding-scale", sim.confounding_scale)->capture_default_str();
  }

  int run(std::ostream&, std::ostream&) {
    sim.true_link = parse_link(true_link);
    sim.seed = common.seed;
    const auto [pair, truth] = generate(sim);

    json config{{"preset", common.preset.empty() ? json(nullptr) : json(common.preset)},
                {"d", sim.dimension},
                {"s", sim.sparsity},
                {"n_target", sim.n_target},
                {"n_source", sim.n_source},
                {"magnitude", sim.difference_magnitude},
                {"tau_source", sim.tau_source},
                {"tau_target", sim.tau_target},
                {"true_link", true_link},
                {"covariate_scale", sim.covariate_scale},
                {"coefficient_scale", sim.coefficient_scale},
                {"noise_scale", sim.noise_scale},
                {"confounding_scale", sim.confounding_scale},
                {"out", common.out}};
    const auto manifest = make_manifest("simulate", config, common.seed).to_json();
    const fs::path dir(common.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

    for (const auto& [name, obs] : {std::pair{"observations_source.csv", &pair.source},
                                    std::pair{"observations_target.csv", &pair.target}}) {
      auto file = open_output(dir / name);
      write_observations_csv(file, *obs, manifest.dump());
      if (!file) throw Error(ErrorKind::Io, "failed writing " + (dir / name).string());
    }
    json truth_json{{"beta_source", truth.beta_source},
                    {"beta_target", truth.beta_target},
                    {"difference_support", truth.difference_support},
                    {"tau_source", truth.tau_source},
                    {"tau_target", truth.tau_target},
                    {"manifest", manifest}};
    emit((dir / "truth.json").string(), truth_json.dump(2) + "\n", std::cout);
    return 0;
  }
};

// ---- estimate ------------------------------------------------------------

struct SelectionFlags {
  std::string criterion = "mmd";
  std::size_t folds = 5;
  std::optional<double> bandwidth;
  std::string link = "sigmoid";

  void add(CLI::App& app) {
    app.add_option("--criterion", criterion, "mmd, smd, l2, ce or auc")
        ->check(CLI::IsMember({"mmd", "smd", "l2", "ce", "auc"}))
        ->capture_default_str();
    app.add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
    app.add_option("--bandwidth", bandwidth, "RBF bandwidth (default: median heuristic)");
    app.add_option("--link", link, "Fitted propensity link")
        ->check(CLI::IsMember({"linear", "sigmoid", "exponential"}))
        ->capture_default_str();
  }

  KernelConfig kernel() const {
    return bandwidth ? KernelConfig::fixed(*bandwidth) : KernelConfig::median_heuristic();
  }

  json echo() const {
    return json{{"criterion", criterion},
                {"folds", folds},
                {"bandwidth", bandwidth ? json(*bandwidth) : json("median_heuristic")},
                {"link", link}};
  }
};

struct EstimateCommand {
  Common common;
  InputFlags inputs;
  OptimizerFlags optimizer;
  SelectionFlags selection;
  GridFlags grid;
  std::string method;
  std::string lambda = "auto";

  void add(CLI::App& app) {
    common.add(app, false, "Output JSON path (default: stdout)");
    inputs.add(app);
    optimizer.add(app);
    selection.add(app);
    grid.add(app, 3);
    app.add_option("--method", method, "correlation, ols, ipw or tcl")
        ->required()
        ->check(CLI::IsMember({"correlation", "ols", "ipw", "tcl"}));
    app.add_option("--lambda", lambda, "Penalty for tcl, or auto")->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) {
    const auto kind = method_from_flag(method);
    const auto config = optimizer.config();
    const auto link = parse_link(selection.link);
    auto loaded = inputs.load(kind == EstimateMethod::TCL);
    for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
    const auto& target = loaded.pair.target;

    json config_echo{{"method", method}, {"inputs", inputs.echo()}, {"glm", optimizer.echo(config)}};
    json result{{"command", "estimate"}, {"method", method}, {"domain", loaded.label}};
    double tau = 0.0;
    switch (kind) {
      case EstimateMethod::Correlation:
        tau = pearson_correlation(target.treatment, target.outcome);
        break;
      case EstimateMethod::OLS: {
        const auto ols = ols_treatment_coefficient(target);
        tau = ols.coefficient;
        result["t_statistic"] = number_or_null(ols.t_statistic);
        result["p_value"] = ols.p_value;
        break;
      }
      case EstimateMethod::IPW:
        config_echo["link"] = selection.link;
        tau = single_domain_ipw(target, link, config, loaded.label).value;
        break;
      case EstimateMethod::TCL: {
        config_echo["selection"] = selection.echo();
        config_echo["lambda"] = lambda;
        const auto rough = rough_estimate(loaded.pair.source, link, config);
        double chosen = 0.0;
        if (lambda == "auto") {
          config_echo["grid"] = grid.echo();
          SelectionOptions options;
          options.criteria = {parse_criterion(selection.criterion)};
          options.folds = selection.folds;
          options.kernel = selection.kernel();
          options.seed = common.seed;
          options.threads = common.resolved_threads();
          const auto report = select_lambda_auto(target, rough.model, grid.spec(), config, options);
          chosen = report.selected_lambda(options.criteria.front());
          result["lambda_boundary"] = report.boundary_flag();
          if (report.boundary_flag()) err << "warning: selected lambda lies on the grid boundary\n";
        } else {
          try {
            std::size_t used = 0;
            chosen = std::stod(lambda, &used);
            if (used != lambda.size()) throw std::invalid_argument(lambda);
          } catch (const std::exception&) {
            throw Error(ErrorKind::Usage, "--lambda must be a number or auto");
          }
        }
        const auto [estimate, fit] = tcl_ace_from_rough(target, rough.model, chosen, config);
        tau = estimate.value;
        result["lambda_selected"] = chosen;
        result["nonzero_delta"] = fit.sparsity();
        break;
      }
    }
    result["tau"] = tau;
    result["quantized"] = std::string(quantize_ace(tau));
    if (!loaded.warnings.empty()) result["warnings"] = loaded.warnings;
    result["manifest"] = make_manifest("estimate", config_echo, common.seed).to_json();
    emit(common.out, result.dump(2) + "\n", out);
    return 0;
  }
};

// ---- select-lambda -------------------------------------------------------

struct SelectLambdaCommand {
  Common common;
  InputFlags inputs;
  OptimizerFlags optimizer;
  SelectionFlags selection;
  GridFlags grid;
  std::vector<std::string> criteria{"mmd", "smd", "l2", "ce", "auc"};

  void add(CLI::App& app) {
    common.add(app, false, "Output CSV path (default: stdout)");
    inputs.add(app);
    optimizer.add(app);
    selection.add(app);
    grid.add(app, 0);
    app.add_option("--criteria", criteria, "Criteria to evaluate")
        ->delimiter(',')
        ->check(CLI::IsMember({"mmd", "smd", "l2", "ce", "auc"}));
  }

  int run(std::ostream& out, std::ostream& err) {
    const auto config = optimizer.config();
    auto loaded = inputs.load(true);
    for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
    SelectionOptions options;
    options.criteria.clear();
    for (const auto& c : criteria) options.criteria.push_back(parse_criterion(c));
    options.folds = selection.folds;
    options.kernel = selection.kernel();
    options.seed = common.seed;
    options.threads = common.resolved_threads();

    const auto rough = rough_estimate(loaded.pair.source, parse_link(selection.link), config);
    const auto report = select_lambda_auto(loaded.pair.target, rough.model, grid.spec(), config, options);

    json config_echo{{"inputs", inputs.echo()},
                     {"glm", optimizer.echo(config)},
                     {"selection", selection.echo()},
                     {"criteria", criteria},
                     {"grid", grid.echo()}};
    std::ostringstream csv;
    csv << "# " << make_manifest("select-lambda", config_echo, common.seed).to_json().dump() << '\n';
    csv << "lambda,estimate,nonzero_delta";
    for (const auto& c : criteria) csv << ',' << c << ',' << c << "_selected";
    csv << ",boundary\n";
    const bool boundary = report.boundary_flag();
    for (std::size_t g = 0; g < report.lambda_grid.size(); ++g) {
      const double lam = report.lambda_grid[g];
      csv << format_double(lam) << ',' << format_double(report.estimates[g]) << ',' << report.sparsity[g];
      for (std::size_t c = 0; c < report.criteria.size(); ++c) {
        const double v = report.values[g][c];
        csv << ',' << (std::isfinite(v) ? format_double(v) : std::string("nan"));
        csv << ',' << (report.selected[c] && *report.selected[c] == lam ? 1 : 0);
      }
      csv << ',' << (boundary ? "true" : "false") << '\n';
    }
    for (std::size_t c = 0; c < report.criteria.size(); ++c) {
      const auto name = std::string(to_string(report.criteria[c]));
      if (!report.selected[c]) {
        err << "warning: criterion " << name << " undefined on the whole grid: " << report.notes[c] << '\n';
      } else if (report.boundary[c]) {
        err << "warning: criterion " << name << " selected boundary lambda " << format_double(*report.selected[c])
            << '\n';
      }
    }
    emit(common.out, csv.str(), out);
    return 0;
  }
};

// ---- bootstrap -----------------------------------------------------------

struct BootstrapCommand {
  Common common;
  InputFlags inputs;
  OptimizerFlags optimizer;
  SelectionFlags selection;
  GridFlags grid;
  std::string method;
  std::size_t trials = 100;

  void add(CLI::App& app) {
    common.add(app, false, "Output JSON path (default: stdout)");
    inputs.add(app);
    optimizer.add(app);
    selection.add(app);
    grid.add(app, 3);
    app.add_option("--method", method, "correlation, ols, ipw or tcl")
        ->required()
        ->check(CLI::IsMember({"correlation", "ols", "ipw", "tcl"}));
    app.add_option("--trials", trials, "Bootstrap trials")->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) {
    const auto kind = method_from_flag(method);
    const auto config = optimizer.config();
    auto loaded = inputs.load(kind == EstimateMethod::TCL);
    for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';

    BootstrapOptions options;
    options.trials = trials;
    options.criterion = parse_criterion(selection.criterion);
    options.grid = grid.spec();
    options.link = parse_link(selection.link);
    options.folds = selection.folds;
    options.kernel = selection.kernel();
    options.seed = common.seed;
    options.threads = common.resolved_threads();
    const auto summary = bootstrap_ace(loaded.pair, kind, options, config);

    // Thread count is excluded from the echo: it never changes the payload.
    json config_echo{{"method", method},
                     {"trials", trials},
                     {"inputs", inputs.echo()},
                     {"glm", optimizer.echo(config)},
                     {"selection", selection.echo()},
                     {"grid", grid.echo()}};
    json result{{"command", "bootstrap"},
                {"method", method},
                {"domain", loaded.label},
                {"trials", trials},
                {"estimates", summary.estimates},
                {"median", summary.median},
                {"quantile_05", summary.quantile_05},
                {"quantile_95", summary.quantile_95},
                {"verdict", std::string(to_string(summary.verdict))}};
    if (kind == EstimateMethod::TCL) {
      result["criterion"] = selection.criterion;
      result["lambdas"] = summary.lambdas;
      result["boundary_flag_count"] = summary.boundary_flag_count;
    }
    result["manifest"] = make_manifest("bootstrap", config_echo, common.seed).to_json();
    emit(common.out, result.dump(2) + "\n", out);
    return 0;
  }
};

// ---- saidi ---------------------------------------------------------------

struct SaidiCommand {
  Common common;
  std::string cities;
  std::string events;
  SaidiFilter filter;

  void add(CLI::App& app) {
    common.add(app, false, "Output CSV path (default: stdout)");
    app.add_option("--cities", cities, "cities.csv")->required();
    app.add_option("--events", events, "events.csv")->required();
    app.add_option("--min-outage-rate", filter.min_outage_rate)->capture_default_str();
    app.add_option("--min-duration", filter.min_duration_hours)->capture_default_str();
  }

  int run(std::ostream& out, std::ostream&) {
    const auto table = read_cities_csv(cities);
    const auto event_list = read_events_csv(events);
    const auto values = saidi_by_city(table, event_list, filter);
    json config_echo{{"cities", cities},
                     {"events", events},
                     {"min_outage_rate", filter.min_outage_rate},
                     {"min_duration", filter.min_duration_hours}};
    std::ostringstream csv;
    csv << "# " << make_manifest("saidi", config_echo, common.seed).to_json().dump() << '\n';
    csv << "city_id,weather_class,saidi_minutes\n";
    for (const auto& city : table.cities) {
      for (auto weather : {WeatherClass::Severe, WeatherClass::Normal}) {
        csv << city.city_id << ',' << to_string(weather) << ','
            << format_double(values.at({city.city_id, weather})) << '\n';
      }
    }
    emit(common.out, csv.str(), out);
    return 0;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transfer counterfactual learning toolkit", "tclkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", artifact_version());

  SimulateCommand simulate;
  EstimateCommand estimate;
  SelectLambdaCommand select;
  BootstrapCommand bootstrap;
  SaidiCommand saidi_cmd;
  auto* simulate_app = app.add_subcommand("simulate", "Generate a synthetic source/target pair");
  auto* estimate_app = app.add_subcommand("estimate", "Point estimate of the average causal effect");
  auto* select_app = app.add_subcommand("select-lambda", "Evaluate selection criteria over a lambda grid");
  auto* bootstrap_app = app.add_subcommand("bootstrap", "Bootstrap distribution of the estimate");
  auto* saidi_app = app.add_subcommand("saidi", "SAIDI per city and weather class");
  simulate.add(*simulate_app);
  estimate.add(*estimate_app);
  select.add(*select_app);
  bootstrap.add(*bootstrap_app);
  saidi_cmd.add(*saidi_app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    err << to_string(ErrorKind::Usage) << ": " << message << '\n';
    return 2;
  }

  try {
    if (simulate_app->parsed()) return simulate.run(out, err);
    if (estimate_app->parsed()) return estimate.run(out, err);
    if (select_app->parsed()) return select.run(out, err);
    if (bootstrap_app->parsed()) return bootstrap.run(out, err);
    if (saidi_app->parsed()) return saidi_cmd.run(out, err);
  } catch (const Error& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    err << to_string(e.kind()) << ": " << message << '\n';
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "internal_error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace tclkit::cli
