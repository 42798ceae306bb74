#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsurr/dataset.hpp"
#include "qsurr/qubo.hpp"

namespace qsurr {

enum class CostKind { mse, contour_aware };
enum class FitStrategy { one_stage, coarse_fine };
enum class OptimizerKind { conjugate_gradient, gradient_descent };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::conjugate_gradient;
  std::size_t max_iterations = 5000;
  // First trial step of the backtracking line search (gradient descent only).
  double step_size = 1.0;
  // Stop when the gradient norm falls below this fraction of its value at the
  // starting point.
  double gradient_tolerance = 1e-12;
};

struct FitConfig {
  CostKind cost = CostKind::contour_aware;
  // Weight scale of the contour-aware cost, in AIN units.
  double tau = 100.0;
  FitStrategy strategy = FitStrategy::coarse_fine;
  // Ridge penalty on couplings and linear terms; the constant is unpenalized.
  double ridge = 1e-6;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
};

struct FitReport {
  QuboModel model;
  // Configured data cost plus the ridge penalty, at the returned model.
  double training_cost = 0.0;
  // Configured data cost alone.
  double data_cost = 0.0;
  double mse_pct = 0.0;
  double cae_pct = 0.0;
  std::size_t iterations_used = 0;
  // Objective after each optimizer iteration, starting with the initial
  // point. For coarse-fine fits this is the second stage only.
  std::vector<double> objective_trace;
  // Stage-one objective of a coarse-fine fit.
  std::optional<double> stage_one_cost;

  std::string to_json() const;
};

// Mean squared error over all observations.
double cost_mse(const QuboModel& model, const Dataset& data);
// Mean of (E - H)^2 * exp(-(Max - H) / tau), Max being the best real AIN.
double cost_contour_aware(const QuboModel& model, const Dataset& data,
                          double tau);
double data_cost(const QuboModel& model, const Dataset& data,
                 const FitConfig& config);
// Data cost plus ridge penalty.
double objective(const QuboModel& model, const Dataset& data,
                 const FitConfig& config);

// Gradient of the data cost (no ridge) with respect to
// QuboModel::parameters().
std::vector<double> cost_gradient(const QuboModel& model, const Dataset& data,
                                  CostKind cost, double tau);

// Observation weights used by the configured cost.
std::vector<double> cost_weights(const Dataset& data, CostKind cost,
                                 double tau);

FitReport fit(const Dataset& data, const FitConfig& config,
              const std::optional<QuboModel>& initial = std::nullopt);

// Stage one fits linear terms and constant with couplings held at zero;
// stage two frees everything, starting from stage one.
FitReport coarse_fine_fit(const Dataset& data, const FitConfig& config);

// Dispatches on config.strategy.
FitReport fit_with_strategy(const Dataset& data, const FitConfig& config);

struct ErrorReport {
  double mse_pct = 0.0;
  double cae_pct = 0.0;
};

// RMSE over real observations as a percentage of Max, plain and
// contour-weighted.
ErrorReport error_report(const QuboModel& model, const Dataset& data,
                         double tau = 100.0);

}  // namespace qsurr
