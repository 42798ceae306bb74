#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsurr/annealer.hpp"
#include "qsurr/augmentation.hpp"
#include "qsurr/dataset.hpp"
#include "qsurr/encoding.hpp"
#include "qsurr/fitting.hpp"
#include "qsurr/oracle.hpp"
#include "qsurr/qubo.hpp"

namespace qsurr {

enum class SuggestionSource { qubo, neighbor };
enum class CampaignState { ready, awaiting_result, terminated };

std::string_view source_name(SuggestionSource source) noexcept;
std::string_view state_name(CampaignState state) noexcept;

struct Suggestion {
  BitVector bits;
  double estimated_ain = 0.0;
  SuggestionSource source = SuggestionSource::qubo;

  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

// One row per recorded experiment, mirroring the columns of the published
// results table.
struct LogEntry {
  std::size_t iteration = 1;
  std::size_t experiment_count = 0;
  BitVector suggested_bits;
  SuggestionSource source = SuggestionSource::qubo;
  std::optional<double> real_ain;
  std::optional<double> estimated_ain;
  std::optional<double> mse_pct;
  std::optional<double> cae_pct;
  bool improved = false;
  bool out_of_band = false;
  std::string timestamp;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct CampaignConfig {
  FitConfig fit;
  // `exclude` and `seed` are filled per suggestion.
  SaConfig sa;
  AugmentConfig augment;
  // Suggestions served per model fit.
  std::size_t refit_every = 1;
};

// JSON object with `fit`, `sa`, `augment` and `refit_every`. Parsing starts
// from defaults, so any subset of fields may be given.
std::string config_to_json(const CampaignConfig& config);
CampaignConfig config_from_json(std::string_view text);

struct Campaign {
  std::string id;
  FactorSchema schema;
  CampaignConfig config;
  // Real observations only; augmented rows live for one fit.
  Dataset dataset;
  std::vector<LogEntry> log;
  std::size_t iteration = 1;
  BitVector best_bits;
  double best_ain = 0.0;
  CampaignState state = CampaignState::ready;
  std::optional<Suggestion> pending;
  std::uint64_t rng_seed = 0;
  // Number of suggestion rounds drawn from rng_seed so far.
  std::uint64_t rng_counter = 0;
  // Model that produced the latest suggestion.
  std::optional<QuboModel> model;
  std::size_t suggestions_since_fit = 0;
  // Bumped by every successful mutation.
  std::uint64_t revision = 0;

  std::size_t bit_count() const noexcept { return schema.bit_count(); }
  BitSet tested() const;

  std::string to_json() const;
  static Campaign from_json(std::string_view text);

  friend bool operator==(const Campaign&, const Campaign&);
};

inline constexpr int kCampaignFormatVersion = 1;

Campaign init_campaign(std::string id, FactorSchema schema,
                       CampaignConfig config,
                       const std::vector<std::pair<BitVector, double>>& seeds,
                       std::uint64_t rng_seed);
// Evaluates `random_count` distinct random recipes with the oracle.
Campaign init_campaign(std::string id, FactorSchema schema,
                       CampaignConfig config, std::size_t random_count,
                       const Oracle& oracle, std::uint64_t rng_seed);

// fit -> solve -> (neighbor fallback). Moves the campaign to
// awaiting_result, or to terminated and throws Errc::terminated.
Suggestion suggest_next(Campaign& campaign);

// Stores a measurement. Without `out_of_band` the bits must match the
// pending suggestion.
void record_result(Campaign& campaign, const BitVector& bits, double ain,
                   bool out_of_band = false);

// Closed loop with the oracle in place of the experiment; stops after
// `budget` recorded experiments or at termination.
void run_simulated(Campaign& campaign, const Oracle& oracle,
                   std::optional<std::size_t> budget);

// The augment -> eliminate -> fit pipeline over the campaign's current
// data, seeded with `seed`.
FitReport fit_campaign_model(const Campaign& campaign, std::uint64_t seed);

// CSV with the published table header:
// Iteration,Number of Experiments,Best_solution,Real AIN,Estimate AIN,MSE(%),Contour-Aware MSE(%)
std::string export_log_csv(const Campaign& campaign);

struct BestPoint {
  std::size_t experiment_count = 0;
  double real_ain = 0.0;
  double best_so_far = 0.0;
};
// Best AIN versus experiment count over the log.
std::vector<BestPoint> best_trajectory(const Campaign& campaign);

struct MetricPoint {
  std::size_t iteration = 0;
  std::size_t experiment_count = 0;
  double mse_pct = 0.0;
  double cae_pct = 0.0;
};
// Prediction error at each improving experiment.
std::vector<MetricPoint> metric_series(const Campaign& campaign);

// UTC ISO-8601. Honors SOURCE_DATE_EPOCH for reproducible files.
std::string current_timestamp();

}  // namespace qsurr
