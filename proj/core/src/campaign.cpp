#include "qsurr/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <random>

#include "detail.hpp"
#include "qsurr/error.hpp"

namespace qsurr {

using nlohmann::json;

namespace {

constexpr std::uint64_t kAugmentStream = 1;
constexpr std::uint64_t kSolveStream = 2;
constexpr std::uint64_t kSeedStream = 0x5eedull;

json opt_json(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return detail::get_field<double>(j, key);
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.is_object() && j.contains(key) && !j.at(key).is_null())
    out = detail::get_field<T>(j, key);
}

std::string_view cost_name(CostKind c) { return c == CostKind::mse ? "mse" : "contour_aware"; }
std::string_view strategy_name(FitStrategy s) {
  return s == FitStrategy::one_stage ? "one_stage" : "coarse_fine";
}
std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::gradient_descent ? "gradient_descent" : "conjugate_gradient";
}

CostKind parse_cost(const std::string& s) {
  if (s == "mse") return CostKind::mse;
  if (s == "contour_aware") return CostKind::contour_aware;
  throw Error(Errc::parse_error, "unknown cost '" + s + "'");
}
FitStrategy parse_strategy(const std::string& s) {
  if (s == "one_stage") return FitStrategy::one_stage;
  if (s == "coarse_fine") return FitStrategy::coarse_fine;
  throw Error(Errc::parse_error, "unknown strategy '" + s + "'");
}
OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "conjugate_gradient") return OptimizerKind::conjugate_gradient;
  if (s == "gradient_descent") return OptimizerKind::gradient_descent;
  throw Error(Errc::parse_error, "unknown optimizer '" + s + "'");
}
SuggestionSource parse_source(const std::string& s) {
  if (s == "qubo") return SuggestionSource::qubo;
  if (s == "neighbor") return SuggestionSource::neighbor;
  throw Error(Errc::parse_error, "unknown source '" + s + "'");
}

json config_json(const CampaignConfig& c) {
  const auto& f = c.fit;
  const auto& s = c.sa;
  const auto& a = c.augment;
  return {
      {"fit",
       {{"cost", cost_name(f.cost)},
        {"tau", f.tau},
        {"strategy", strategy_name(f.strategy)},
        {"ridge", f.ridge},
        {"optimizer",
         {{"kind", optimizer_name(f.optimizer.kind)},
          {"max_iterations", f.optimizer.max_iterations},
          {"step_size", f.optimizer.step_size},
          {"gradient_tolerance", f.optimizer.gradient_tolerance}}},
        {"seed", f.seed}}},
      {"sa",
       {{"sweeps", s.sweeps},
        {"restarts", s.restarts},
        {"temp_initial", opt_json(s.temp_initial)},
        {"temp_final", opt_json(s.temp_final)},
        {"top_k", s.top_k},
        {"calibration_samples", s.calibration_samples},
        {"threads", s.threads}}},
      {"augment",
       {{"count", a.count ? json(*a.count) : json(nullptr)},
        {"below_mean_fraction", a.below_mean_fraction},
        {"elimination_radius", a.elimination_radius}}},
      {"refit_every", c.refit_every}};
}

CampaignConfig config_parse(const json& j) {
  CampaignConfig c;
  if (!j.is_object()) throw Error(Errc::parse_error, "configs must be an object");
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    std::string name;
    if (f.contains("cost")) c.fit.cost = parse_cost(detail::get_field<std::string>(f, "cost"));
    if (f.contains("strategy"))
      c.fit.strategy = parse_strategy(detail::get_field<std::string>(f, "strategy"));
    read_if(f, "tau", c.fit.tau);
    read_if(f, "ridge", c.fit.ridge);
    read_if(f, "seed", c.fit.seed);
    if (f.contains("optimizer")) {
      const auto& o = f.at("optimizer");
      if (o.contains("kind"))
        c.fit.optimizer.kind = parse_optimizer(detail::get_field<std::string>(o, "kind"));
      read_if(o, "max_iterations", c.fit.optimizer.max_iterations);
      read_if(o, "step_size", c.fit.optimizer.step_size);
      read_if(o, "gradient_tolerance", c.fit.optimizer.gradient_tolerance);
    }
  }
  if (j.contains("sa")) {
    const auto& s = j.at("sa");
    read_if(s, "sweeps", c.sa.sweeps);
    read_if(s, "restarts", c.sa.restarts);
    c.sa.temp_initial = opt_double(s, "temp_initial");
    c.sa.temp_final = opt_double(s, "temp_final");
    read_if(s, "top_k", c.sa.top_k);
    read_if(s, "calibration_samples", c.sa.calibration_samples);
    read_if(s, "threads", c.sa.threads);
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    if (a.contains("count") && !a.at("count").is_null())
      c.augment.count = detail::get_field<std::size_t>(a, "count");
    read_if(a, "below_mean_fraction", c.augment.below_mean_fraction);
    read_if(a, "elimination_radius", c.augment.elimination_radius);
  }
  read_if(j, "refit_every", c.refit_every);
  if (c.refit_every == 0) throw Error(Errc::bad_params, "refit_every must be positive");
  return c;
}

void require_single_schema(const Campaign& c, const BitVector& bits) {
  if (bits.size() != c.bit_count())
    throw Error(Errc::length_mismatch, "expected " + std::to_string(c.bit_count()) +
                                           " bits, got " + std::to_string(bits.size()));
}

}  // namespace

std::string_view source_name(SuggestionSource source) noexcept {
  return source == SuggestionSource::qubo ? "qubo" : "neighbor";
}

std::string_view state_name(CampaignState state) noexcept {
  switch (state) {
    case CampaignState::ready: return "ready";
    case CampaignState::awaiting_result: return "awaiting_result";
    case CampaignState::terminated: return "terminated";
  }
  return "unknown";
}

std::string config_to_json(const CampaignConfig& config) {
  return config_json(config).dump(2);
}

CampaignConfig config_from_json(std::string_view text) {
  return config_parse(detail::parse_json(text, "configs"));
}

std::string current_timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

BitSet Campaign::tested() const {
  BitSet out;
  for (const auto& o : dataset.observations()) out.insert(o.bits);
  return out;
}

bool operator==(const Campaign& a, const Campaign& b) { return a.to_json() == b.to_json(); }

Campaign init_campaign(std::string id, FactorSchema schema, CampaignConfig config,
                       const std::vector<std::pair<BitVector, double>>& seeds,
                       std::uint64_t rng_seed) {
  if (seeds.empty()) throw Error(Errc::no_seed_data, "campaign needs at least one observation");
  if (config.refit_every == 0) throw Error(Errc::bad_params, "refit_every must be positive");
  Campaign c;
  c.id = std::move(id);
  c.schema = std::move(schema);
  c.config = std::move(config);
  c.rng_seed = rng_seed;
  BitSet seen;
  std::int64_t next = 1;
  for (const auto& [bits, ain] : seeds) {
    require_single_schema(c, bits);
    if (!std::isfinite(ain)) throw Error(Errc::non_finite_ain, bits.to_string());
    if (!seen.insert(bits).second)
      std::clog << "qsurr: campaign " << c.id << ": repeated measurement of "
                << bits.to_string() << "\n";
    c.dataset.add({next++, bits, ain, ObservationKind::real});
    if (c.dataset.size() == 1 || ain > c.best_ain) {
      c.best_bits = bits;
      c.best_ain = ain;
    }
  }
  return c;
}

Campaign init_campaign(std::string id, FactorSchema schema, CampaignConfig config,
                       std::size_t random_count, const Oracle& oracle,
                       std::uint64_t rng_seed) {
  if (random_count == 0) throw Error(Errc::no_seed_data, "random_count must be positive");
  const std::size_t n = schema.bit_count();
  if (oracle.size() != n)
    throw Error(Errc::length_mismatch, "oracle and schema bit counts differ");
  if (n < 64 && random_count > (std::uint64_t{1} << n))
    throw Error(Errc::bad_params, "more random seeds than states");
  std::mt19937_64 rng(detail::derive_seed(rng_seed, kSeedStream));
  BitSet drawn;
  std::vector<std::pair<BitVector, double>> seeds;
  while (seeds.size() < random_count) {
    BitVector x(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) word = rng();
      x.set(i, (word >> (i % 64)) & 1u);
    }
    if (!drawn.insert(x).second) continue;
    const double ain = oracle(x);
    seeds.emplace_back(std::move(x), ain);
  }
  return init_campaign(std::move(id), std::move(schema), std::move(config), seeds, rng_seed);
}

FitReport fit_campaign_model(const Campaign& campaign, std::uint64_t seed) {
  const std::size_t n = campaign.bit_count();
  AugmentConfig aug = campaign.config.augment;
  aug.seed = detail::derive_seed(seed, kAugmentStream);
  // Small spaces cannot hold n^2 fresh states; take what is free.
  std::size_t count = aug.resolved_count(n);
  if (n < 64) {
    const std::uint64_t space = std::uint64_t{1} << n;
    const std::uint64_t used = campaign.tested().size();
    count = static_cast<std::size_t>(std::min<std::uint64_t>(count, space - used));
  }
  Dataset data = campaign.dataset;
  if (count > 0 && aug.below_mean_fraction > 0.0 && data.real_mean() > 0.0) {
    aug.count = count;
    data = eliminate(augment(data, n, aug), aug.elimination_radius);
  }
  return fit_with_strategy(data, campaign.config.fit);
}

Suggestion suggest_next(Campaign& c) {
  if (c.state == CampaignState::terminated)
    throw Error(Errc::terminated, "campaign " + c.id + " has terminated");
  if (c.state != CampaignState::ready)
    throw Error(Errc::wrong_state, "campaign " + c.id + " is awaiting a result");

  const std::uint64_t round_seed = detail::derive_seed(c.rng_seed, c.rng_counter);
  std::optional<QuboModel> model = c.model;
  std::size_t since = c.suggestions_since_fit;
  if (!model || since >= c.config.refit_every) {
    model = fit_campaign_model(c, round_seed).model;
    since = 0;
  }

  const BitSet tested = c.tested();
  SaConfig sa = c.config.sa;
  sa.seed = detail::derive_seed(round_seed, kSolveStream);
  sa.exclude = tested;

  std::optional<Suggestion> suggestion;
  try {
    const auto result = solve(*model, sa);
    const auto& top = result.candidates.front();
    suggestion = Suggestion{top.bits, top.predicted, SuggestionSource::qubo};
  } catch (const Error& e) {
    if (e.code() != Errc::exhausted) throw;
    for (auto& nb : neighbors(c.best_bits, 1)) {
      if (tested.count(nb)) continue;
      const double est = model->evaluate(nb);
      suggestion = Suggestion{std::move(nb), est, SuggestionSource::neighbor};
      break;
    }
  }

  c.model = std::move(model);
  c.suggestions_since_fit = since + 1;
  ++c.rng_counter;
  ++c.revision;
  if (!suggestion) {
    // Solver found nothing new and every neighbor of the best recipe has been
    // measured without beating it.
    c.state = CampaignState::terminated;
    throw Error(Errc::terminated, "no untested neighbor of " + c.best_bits.to_string() +
                                      " remains and the model has no new candidate");
  }
  c.pending = *suggestion;
  c.state = CampaignState::awaiting_result;
  return *suggestion;
}

void record_result(Campaign& c, const BitVector& bits, double ain, bool out_of_band) {
  if (!std::isfinite(ain)) throw Error(Errc::non_finite_ain, "measured AIN is not finite");
  if (ain < 0.0) throw Error(Errc::bad_params, "measured AIN must be non-negative");
  require_single_schema(c, bits);
  if (c.state == CampaignState::terminated)
    throw Error(Errc::wrong_state, "campaign " + c.id + " has terminated");
  const bool matches_pending = c.pending && c.pending->bits == bits;
  if (!out_of_band) {
    if (c.state != CampaignState::awaiting_result)
      throw Error(Errc::wrong_state, "campaign " + c.id + " has no pending suggestion");
    if (!matches_pending)
      throw Error(Errc::bits_mismatch, "pending suggestion is " + c.pending->bits.to_string() +
                                           ", got " + bits.to_string());
  }

  LogEntry entry;
  entry.suggested_bits = bits;
  entry.real_ain = ain;
  entry.out_of_band = out_of_band && !matches_pending;
  if (matches_pending) {
    entry.source = c.pending->source;
    entry.estimated_ain = c.pending->estimated_ain;
  } else if (c.model) {
    entry.estimated_ain = c.model->evaluate(bits);
  }

  Dataset data = c.dataset;
  data.add({data.next_id(), bits, ain, ObservationKind::real});
  if (c.model && data.real_max() > 0.0) {
    const auto err = error_report(*c.model, data, c.config.fit.tau);
    entry.mse_pct = err.mse_pct;
    entry.cae_pct = err.cae_pct;
  }
  entry.improved = ain > c.best_ain;

  c.dataset = std::move(data);
  if (entry.improved) {
    c.best_bits = bits;
    c.best_ain = ain;
    ++c.iteration;
  }
  entry.iteration = c.iteration;
  entry.experiment_count = c.dataset.real_count();
  entry.timestamp = current_timestamp();
  c.log.push_back(std::move(entry));
  if (matches_pending) {
    c.pending.reset();
    c.state = CampaignState::ready;
  }
  ++c.revision;
}

void run_simulated(Campaign& c, const Oracle& oracle, std::optional<std::size_t> budget) {
  if (oracle.size() != c.bit_count())
    throw Error(Errc::length_mismatch, "oracle and campaign bit counts differ");
  std::size_t done = 0;
  while (!budget || done < *budget) {
    if (c.state == CampaignState::terminated) break;
    if (c.state == CampaignState::ready) {
      try {
        suggest_next(c);
      } catch (const Error& e) {
        if (e.code() == Errc::terminated) break;
        throw;
      }
    }
    const BitVector bits = c.pending->bits;
    record_result(c, bits, oracle(bits));
    ++done;
  }
}

std::string export_log_csv(const Campaign& c) {
  std::string out =
      "Iteration,Number of Experiments,Best_solution,Real AIN,Estimate AIN,MSE(%),"
      "Contour-Aware MSE(%)\n";
  auto opt = [](const std::optional<double>& v, bool fixed) {
    if (!v || !std::isfinite(*v)) return std::string();
    return fixed ? detail::format_fixed(*v, 2) : detail::format_double(*v);
  };
  for (const auto& e : c.log) {
    out += std::to_string(e.iteration) + ',' + std::to_string(e.experiment_count) + ',' +
           e.suggested_bits.to_string() + ',' + opt(e.real_ain, false) + ',' +
           opt(e.estimated_ain, false) + ',' + opt(e.mse_pct, true) + ',' +
           opt(e.cae_pct, true) + '\n';
  }
  return out;
}

std::vector<BestPoint> best_trajectory(const Campaign& c) {
  std::vector<BestPoint> out;
  const auto& obs = c.dataset.observations();
  const std::size_t seeds = obs.size() >= c.log.size() ? obs.size() - c.log.size() : 0;
  double best = 0.0;
  for (std::size_t i = 0; i < seeds; ++i) best = i == 0 ? obs[i].ain : std::max(best, obs[i].ain);
  for (const auto& e : c.log) {
    const double ain = e.real_ain.value_or(0.0);
    best = seeds == 0 && out.empty() ? ain : std::max(best, ain);
    out.push_back({e.experiment_count, ain, best});
  }
  return out;
}

std::vector<MetricPoint> metric_series(const Campaign& c) {
  std::vector<MetricPoint> out;
  for (const auto& e : c.log)
    if (e.improved && e.mse_pct && e.cae_pct)
      out.push_back({e.iteration, e.experiment_count, *e.mse_pct, *e.cae_pct});
  return out;
}

std::string Campaign::to_json() const {
  json obs = json::array();
  for (const auto& o : dataset.observations())
    obs.push_back({{"id", o.id}, {"bits", o.bits.to_string()}, {"ain", o.ain}});
  json entries = json::array();
  for (const auto& e : log)
    entries.push_back({{"iteration", e.iteration},
                       {"experiment_count", e.experiment_count},
                       {"suggested_bits", e.suggested_bits.to_string()},
                       {"source", source_name(e.source)},
                       {"real_ain", opt_json(e.real_ain)},
                       {"estimated_ain", opt_json(e.estimated_ain)},
                       {"mse_pct", opt_json(e.mse_pct)},
                       {"cae_pct", opt_json(e.cae_pct)},
                       {"improved", e.improved},
                       {"out_of_band", e.out_of_band},
                       {"timestamp", e.timestamp}});
  json st = {{"kind", state_name(state)}};
  if (pending) {
    st["bits"] = pending->bits.to_string();
    st["estimated_ain"] = pending->estimated_ain;
    st["source"] = source_name(pending->source);
  }
  json j = {{"version", kCampaignFormatVersion},
            {"id", id},
            {"schema", detail::schema_to_json(schema)},
            {"configs", config_json(config)},
            {"observations", obs},
            {"log", entries},
            {"iteration", iteration},
            {"best", {{"bits", best_bits.to_string()}, {"ain", best_ain}}},
            {"state", st},
            {"rng", {{"seed", rng_seed}, {"counter", rng_counter}}},
            {"model", model ? json::parse(model->to_json()) : json(nullptr)},
            {"suggestions_since_fit", suggestions_since_fit},
            {"revision", revision}};
  return j.dump(2) + "\n";
}

Campaign Campaign::from_json(std::string_view text) {
  const json j = detail::parse_json(text, "campaign");
  const int version = detail::get_field<int>(j, "version");
  if (version != kCampaignFormatVersion)
    throw Error(Errc::version_mismatch, "campaign version " + std::to_string(version));
  Campaign c;
  c.id = detail::get_field<std::string>(j, "id");
  c.schema = detail::schema_from_json(detail::get_field<json>(j, "schema"));
  c.config = config_parse(detail::get_field<json>(j, "configs"));
  auto bits_of = [&](const json& o, const char* key) {
    auto b = BitVector::from_string(detail::get_field<std::string>(o, key));
    require_single_schema(c, b);
    return b;
  };
  std::vector<Observation> obs;
  for (const auto& o : detail::get_field<json>(j, "observations"))
    obs.push_back({detail::get_field<std::int64_t>(o, "id"), bits_of(o, "bits"),
                   detail::get_field<double>(o, "ain"), ObservationKind::real});
  c.dataset = Dataset(std::move(obs));
  for (const auto& e : detail::get_field<json>(j, "log")) {
    LogEntry entry;
    entry.iteration = detail::get_field<std::size_t>(e, "iteration");
    entry.experiment_count = detail::get_field<std::size_t>(e, "experiment_count");
    entry.suggested_bits = bits_of(e, "suggested_bits");
    entry.source = parse_source(detail::get_field<std::string>(e, "source"));
    entry.real_ain = opt_double(e, "real_ain");
    entry.estimated_ain = opt_double(e, "estimated_ain");
    entry.mse_pct = opt_double(e, "mse_pct");
    entry.cae_pct = opt_double(e, "cae_pct");
    entry.improved = detail::get_field<bool>(e, "improved");
    entry.out_of_band = detail::get_field<bool>(e, "out_of_band");
    entry.timestamp = detail::get_field<std::string>(e, "timestamp");
    c.log.push_back(std::move(entry));
  }
  c.iteration = detail::get_field<std::size_t>(j, "iteration");
  const auto best = detail::get_field<json>(j, "best");
  c.best_bits = bits_of(best, "bits");
  c.best_ain = detail::get_field<double>(best, "ain");
  const auto st = detail::get_field<json>(j, "state");
  const auto kind = detail::get_field<std::string>(st, "kind");
  if (kind == "ready") {
    c.state = CampaignState::ready;
  } else if (kind == "awaiting_result") {
    c.state = CampaignState::awaiting_result;
    c.pending = Suggestion{bits_of(st, "bits"), detail::get_field<double>(st, "estimated_ain"),
                           parse_source(detail::get_field<std::string>(st, "source"))};
  } else if (kind == "terminated") {
    c.state = CampaignState::terminated;
  } else {
    throw Error(Errc::parse_error, "unknown campaign state '" + kind + "'");
  }
  const auto rng = detail::get_field<json>(j, "rng");
  c.rng_seed = detail::get_field<std::uint64_t>(rng, "seed");
  c.rng_counter = detail::get_field<std::uint64_t>(rng, "counter");
  if (j.contains("model") && !j.at("model").is_null())
    c.model = QuboModel::from_json(j.at("model").dump());
  read_if(j, "suggestions_since_fit", c.suggestions_since_fit);
  read_if(j, "revision", c.revision);
  return c;
}

}  // namespace qsurr
