#include "cli.hpp"

#include <csignal>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "common.hpp"
#include "qsurr/annealer.hpp"
#include "qsurr/augmentation.hpp"
#include "qsurr/campaign.hpp"
#include "qsurr/error.hpp"
#include "qsurr/fitting.hpp"
#include "qsurr/oracle.hpp"
#include "service.hpp"

namespace qsurr::tools {

namespace {

const std::map<std::string, CostKind> kCosts{{"mse", CostKind::mse},
                                             {"contour_aware", CostKind::contour_aware}};
const std::map<std::string, FitStrategy> kStrategies{{"one_stage", FitStrategy::one_stage},
                                                     {"coarse_fine", FitStrategy::coarse_fine}};
const std::map<std::string, OptimizerKind> kOptimizers{
    {"cg", OptimizerKind::conjugate_gradient}, {"gd", OptimizerKind::gradient_descent}};
const std::map<std::string, OracleKind> kOracles{{"hidden_qubo", OracleKind::hidden_qubo},
                                                 {"qubo_plus_cubic", OracleKind::qubo_plus_cubic},
                                                 {"noisy", OracleKind::noisy}};

std::string fmt(double v, int digits = 6) {
  std::ostringstream ss;
  ss << std::setprecision(digits) << v;
  return ss.str();
}

CampaignConfig load_config(const std::string& path) {
  return path.empty() ? CampaignConfig{} : config_from_json(read_file(path));
}

void save(const std::string& path, const Campaign& c) { write_file_atomic(path, c.to_json()); }

struct FitOptions {
  std::string cost = "contour_aware";
  std::string strategy = "coarse_fine";
  std::string optimizer = "cg";
  double tau = 100.0;
  double ridge = 1e-6;
  std::size_t max_iterations = 5000;

  void add(CLI::App* cmd) {
    cmd->add_option("--cost", cost, "mse or contour_aware")->check(CLI::IsMember(kCosts))->capture_default_str();
    cmd->add_option("--strategy", strategy, "one_stage or coarse_fine")
        ->check(CLI::IsMember(kStrategies))
        ->capture_default_str();
    cmd->add_option("--optimizer", optimizer, "cg or gd")->check(CLI::IsMember(kOptimizers))->capture_default_str();
    cmd->add_option("--tau", tau, "contour-aware weight scale")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--ridge", ridge, "ridge penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--max-iterations", max_iterations)->capture_default_str();
  }

  FitConfig config(std::uint64_t seed) const {
    FitConfig f;
    f.cost = kCosts.at(cost);
    f.strategy = kStrategies.at(strategy);
    f.optimizer.kind = kOptimizers.at(optimizer);
    f.optimizer.max_iterations = max_iterations;
    f.tau = tau;
    f.ridge = ridge;
    f.seed = seed;
    return f;
  }
};

void print_suggestion(std::ostream& out, const Suggestion& s) {
  out << "suggestion " << s.bits.to_string() << " estimate " << fmt(s.estimated_ain, 10)
      << " source " << source_name(s.source) << "\n";
}

void print_campaign(std::ostream& out, const Campaign& c) {
  out << "campaign " << c.id << " state " << state_name(c.state) << " iteration " << c.iteration
      << " experiments " << c.dataset.real_count() << " best " << c.best_bits.to_string() << " "
      << fmt(c.best_ain, 10) << "\n";
}

std::string best_table(const Campaign& c) {
  std::string s = "experiment_count,real_ain,best_so_far\n";
  for (const auto& b : best_trajectory(c))
    s += std::to_string(b.experiment_count) + "," + fmt(b.real_ain, 17) + "," + fmt(b.best_so_far, 17) + "\n";
  return s;
}

std::string metrics_table(const Campaign& c) {
  std::string s = "iteration,experiment_count,mse_pct,cae_pct\n";
  for (const auto& m : metric_series(c))
    s += std::to_string(m.iteration) + "," + std::to_string(m.experiment_count) + "," + fmt(m.mse_pct) +
         "," + fmt(m.cae_pct) + "\n";
  return s;
}

int serve(ServiceConfig flags, const CLI::App& cmd, std::ostream& out) {
  // Environment overrides defaults; flags given on the command line win.
  auto cfg = apply_env(ServiceConfig{});
  if (cmd.count("--bind")) cfg.bind = flags.bind;
  if (cmd.count("--port")) cfg.port = flags.port;
  if (cmd.count("--data-dir")) cfg.data_dir = flags.data_dir;
  if (cmd.count("--max-fits")) cfg.max_fits = flags.max_fits;
  if (cmd.count("--token")) cfg.token = flags.token;
  if (cmd.count("--static-dir")) cfg.static_dir = flags.static_dir;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(cfg);
  const int port = service.start();
  out << "listening on " << cfg.bind << ":" << port << " data " << cfg.data_dir.string() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  service.stop();
  service.drain();
  service.wait();
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"QUBO surrogate campaign tool", args.empty() ? "qsurr" : args.front()};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qsurr 0.1.0");

  // init
  auto* init = app.add_subcommand("init", "create a campaign file from a schema and seed measurements");
  std::string schema_path, seeds_path, config_path, out_path, id = "campaign", oracle_name = "hidden_qubo";
  std::size_t raw_bits = 0, random_count = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> oracle_seed;
  auto* schema_opt = init->add_option("--schema", schema_path, "factor schema JSON");
  init->add_option("--bits", raw_bits, "raw bit count when no schema is given")->excludes(schema_opt);
  auto* seeds_opt = init->add_option("--seeds", seeds_path, "seed measurements CSV (bits,ain)");
  init->add_option("--random", random_count, "draw this many random seeds from a synthetic oracle")
      ->excludes(seeds_opt);
  init->add_option("--oracle", oracle_name, "oracle kind for --random")->check(CLI::IsMember(kOracles));
  init->add_option("--oracle-seed", oracle_seed, "oracle seed (defaults to --seed)");
  init->add_option("--config", config_path, "campaign config JSON (partial)");
  init->add_option("--id", id, "campaign id")->capture_default_str();
  init->add_option("--seed", seed, "campaign RNG seed")->capture_default_str();
  init->add_option("--out", out_path, "campaign file to write")->required();

  // suggest / record
  auto* suggest = app.add_subcommand("suggest", "fit, solve and store the next suggestion");
  std::string campaign_path;
  suggest->add_option("--campaign", campaign_path, "campaign file")->required();
  auto* record = app.add_subcommand("record", "store a measured result");
  std::string bits_text;
  double ain = 0.0;
  bool out_of_band = false;
  record->add_option("--campaign", campaign_path, "campaign file")->required();
  record->add_option("--bits", bits_text, "measured recipe")->required();
  record->add_option("--ain", ain, "measured value")->required();
  record->add_flag("--out-of-band", out_of_band, "accept a recipe that was not suggested");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a dataset CSV");
  std::string data_path, model_out;
  FitOptions fit_opts;
  bool with_augment = false;
  std::size_t radius = 3;
  std::optional<std::size_t> aug_count;
  double fraction = 0.05;
  fit_cmd->add_option("--data", data_path, "dataset CSV (id,bits,ain[,kind])")->required();
  fit_opts.add(fit_cmd);
  fit_cmd->add_flag("--augment", with_augment, "augment and eliminate before fitting");
  fit_cmd->add_option("--radius", radius, "elimination radius")->capture_default_str();
  fit_cmd->add_option("--count", aug_count, "augmented rows (default n*n)");
  fit_cmd->add_option("--seed", seed)->capture_default_str();
  fit_cmd->add_option("--model-out", model_out, "write the model JSON here");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "anneal a model JSON");
  std::string model_path;
  SaConfig sa;
  bool exhaustive = false;
  solve_cmd->add_option("--model", model_path, "model JSON")->required();
  solve_cmd->add_option("--sweeps", sa.sweeps)->capture_default_str();
  solve_cmd->add_option("--restarts", sa.restarts)->capture_default_str();
  solve_cmd->add_option("--top-k", sa.top_k)->capture_default_str();
  solve_cmd->add_option("--threads", sa.threads)->capture_default_str();
  solve_cmd->add_option("--seed", seed)->capture_default_str();
  solve_cmd->add_flag("--exhaustive", exhaustive, "enumerate every state instead (n <= 24)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "draw budget for a target optimization depth");
  std::vector<double> depths;
  double epsilon = 0.01;
  int digits = kDefaultRateDigits;
  analyze->add_option("--depth", depths, "depth m in standard deviations (repeatable)")->required();
  analyze->add_option("--epsilon", epsilon, "acceptable probability of missing the depth")
      ->capture_default_str();
  analyze->add_option("--digits", digits, "significant digits of the tail probability, 0 for exact")
      ->capture_default_str();

  // augment
  auto* augment_cmd = app.add_subcommand("augment", "add below-mean synthetic rows and eliminate");
  bool no_eliminate = false;
  augment_cmd->add_option("--data", data_path, "dataset CSV")->required();
  augment_cmd->add_option("--count", aug_count, "augmented rows (default n*n)");
  augment_cmd->add_option("--fraction", fraction, "values drawn from [mean*(1-f), mean)")->capture_default_str();
  augment_cmd->add_option("--radius", radius, "elimination radius")->capture_default_str();
  augment_cmd->add_flag("--no-eliminate", no_eliminate);
  augment_cmd->add_option("--seed", seed)->capture_default_str();
  augment_cmd->add_option("--out", out_path, "output CSV (default stdout)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "closed loop against a synthetic oracle");
  std::size_t n = 22, budget = 200, initial = 18;
  double noise = 50.0;
  std::string log_path;
  std::string sim_cost = "contour_aware";
  simulate->add_option("--oracle", oracle_name, "hidden_qubo, qubo_plus_cubic or noisy")
      ->check(CLI::IsMember(kOracles))
      ->capture_default_str();
  simulate->add_option("--n", n, "bit count")->capture_default_str();
  simulate->add_option("--budget", budget, "experiments after the seeds")->capture_default_str();
  simulate->add_option("--initial", initial, "random seed experiments")->capture_default_str();
  simulate->add_option("--seed", seed)->capture_default_str();
  simulate->add_option("--oracle-seed", oracle_seed, "oracle seed (defaults to --seed)");
  simulate->add_option("--noise", noise, "noise std for the noisy oracle")->capture_default_str();
  simulate->add_option("--cost", sim_cost, "mse or contour_aware")->check(CLI::IsMember(kCosts))->capture_default_str();
  simulate->add_option("--config", config_path, "campaign config JSON (partial)");
  simulate->add_option("--out", out_path, "also write the campaign file");

  // report
  auto* report = app.add_subcommand("report", "log, best-so-far and error tables of a campaign");
  std::string section = "all";
  report->add_option("--campaign", campaign_path, "campaign file")->required();
  report->add_option("--section", section)->check(CLI::IsMember({"all", "log", "best", "metrics"}))->capture_default_str();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service over a data directory");
  ServiceConfig svc;
  std::string data_dir = svc.data_dir.string(), static_dir;
  serve_cmd->add_option("--bind", svc.bind, "address (env QSURR_BIND)")->capture_default_str();
  serve_cmd->add_option("--port", svc.port, "port, 0 for any (env QSURR_PORT)")->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "campaign storage (env QSURR_DATA_DIR)")->capture_default_str();
  serve_cmd->add_option("--max-fits", svc.max_fits, "concurrent fits (env QSURR_MAX_FITS)")->capture_default_str();
  serve_cmd->add_option("--token", svc.token, "bearer token (env QSURR_TOKEN)");
  serve_cmd->add_option("--static-dir", static_dir, "static files served at / (env QSURR_STATIC_DIR)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("qsurr");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "qsurr 0.1.0\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }

  try {
    if (init->parsed()) {
      FactorSchema schema;
      if (!schema_path.empty())
        schema = FactorSchema::from_json(read_file(schema_path));
      else if (raw_bits > 0)
        schema = FactorSchema::raw_bits(raw_bits);
      else
        throw Error(Errc::bad_params, "init needs --schema or --bits");
      const auto cfg = load_config(config_path);
      Campaign c;
      if (random_count > 0) {
        const auto oracle = make_oracle(kOracles.at(oracle_name), schema.bit_count(), oracle_seed.value_or(seed));
        c = init_campaign(id, schema, cfg, random_count, oracle, seed);
      } else {
        if (seeds_path.empty()) throw Error(Errc::no_seed_data, "init needs --seeds or --random");
        c = init_campaign(id, schema, cfg, parse_seed_csv(read_file(seeds_path)), seed);
      }
      save(out_path, c);
      print_campaign(out, c);
    } else if (suggest->parsed()) {
      auto c = Campaign::from_json(read_file(campaign_path));
      try {
        const auto s = suggest_next(c);
        save(campaign_path, c);
        print_suggestion(out, s);
      } catch (const Error& e) {
        if (e.code() != Errc::terminated) throw;
        save(campaign_path, c);
        out << "terminated " << c.best_bits.to_string() << " " << fmt(c.best_ain, 10) << "\n";
      }
    } else if (record->parsed()) {
      auto c = Campaign::from_json(read_file(campaign_path));
      record_result(c, BitVector::from_string(bits_text), ain, out_of_band);
      save(campaign_path, c);
      print_campaign(out, c);
    } else if (fit_cmd->parsed()) {
      auto data = Dataset::from_csv(read_file(data_path));
      if (with_augment) {
        AugmentConfig aug;
        aug.count = aug_count;
        aug.seed = seed;
        aug.elimination_radius = radius;
        data = eliminate(augment(data, data.bit_count(), aug), radius);
      }
      const auto rep = fit_with_strategy(data, fit_opts.config(seed));
      if (!model_out.empty()) write_file_atomic(model_out, rep.model.to_json());
      out << rep.to_json();
    } else if (solve_cmd->parsed()) {
      const auto model = QuboModel::from_json(read_file(model_path));
      if (exhaustive) {
        const auto [bits, e] = exhaustive_solve(model);
        out << "rank,bits,energy\n1," << bits.to_string() << "," << fmt(e, 17) << "\n";
      } else {
        sa.seed = seed;
        const auto r = solve(model, sa);
        out << "rank,bits,energy\n";
        for (std::size_t i = 0; i < r.candidates.size(); ++i)
          out << i + 1 << "," << r.candidates[i].bits.to_string() << "," << fmt(r.candidates[i].predicted, 17)
              << "\n";
        if (r.stats.stddev > 0.0)
          out << "# random-state mean " << fmt(r.stats.mean) << " std " << fmt(r.stats.stddev) << " depth "
              << fmt((r.stats.best - r.stats.mean) / r.stats.stddev, 4) << "\n";
      }
    } else if (analyze->parsed()) {
      out << "m,per_draw_failure,required_draws\n";
      for (double m : depths) {
        const auto b = depth_budget(m, epsilon, digits);
        out << fmt(m) << "," << fmt(b.per_draw_failure, 6) << "," << b.required_draws << "\n";
      }
    } else if (augment_cmd->parsed()) {
      const auto data = Dataset::from_csv(read_file(data_path));
      AugmentConfig aug;
      aug.count = aug_count;
      aug.below_mean_fraction = fraction;
      aug.elimination_radius = radius;
      aug.seed = seed;
      auto result = augment(data, data.bit_count(), aug);
      if (!no_eliminate) result = eliminate(result, radius);
      if (out_path.empty())
        out << result.to_csv();
      else
        write_file_atomic(out_path, result.to_csv());
    } else if (simulate->parsed()) {
      OracleParams params;
      params.noise_std = noise;
      const auto oracle = make_oracle(kOracles.at(oracle_name), n, oracle_seed.value_or(seed), params);
      auto cfg = load_config(config_path);
      if (!simulate->count("--config") || simulate->count("--cost")) cfg.fit.cost = kCosts.at(sim_cost);
      auto c = init_campaign("simulation", FactorSchema::raw_bits(n), cfg, initial, oracle, seed);
      run_simulated(c, oracle, budget);
      if (!out_path.empty()) save(out_path, c);
      out << export_log_csv(c);
    } else if (report->parsed()) {
      const auto c = Campaign::from_json(read_file(campaign_path));
      if (section == "log") {
        out << export_log_csv(c);
      } else if (section == "best") {
        out << best_table(c);
      } else if (section == "metrics") {
        out << metrics_table(c);
      } else {
        out << "# log\n" << export_log_csv(c) << "\n# best\n" << best_table(c) << "\n# metrics\n"
            << metrics_table(c);
      }
    } else if (serve_cmd->parsed()) {
      svc.data_dir = data_dir;
      svc.static_dir = static_dir;
      return serve(svc, *serve_cmd, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace qsurr::tools
