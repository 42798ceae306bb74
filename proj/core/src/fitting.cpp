#include "qsurr/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detail.hpp"
#include "qsurr/error.hpp"

namespace qsurr {

namespace {

// Sparse binary design matrix: row r lists the parameters whose feature is 1
// for observation r (pairs of set bits, set bits, constant).
struct Design {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> active;
  std::vector<double> target;
  std::vector<double> weight;
  double inv_rows = 0.0;

  std::size_t rows() const { return target.size(); }

  double dot(std::size_t r, const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) s += v[active[k]];
    return s;
  }
};

Design build_design(const Dataset& data, CostKind cost, double tau) {
  Design d;
  d.n = data.bit_count();
  d.p = QuboModel::parameter_count(d.n);
  d.weight = cost_weights(data, cost, tau);
  d.offsets.reserve(data.size() + 1);
  d.offsets.push_back(0);
  const std::size_t pairs = d.n * (d.n - 1) / 2;
  std::vector<std::uint32_t> ones;
  for (const auto& obs : data.observations()) {
    ones.clear();
    for (std::size_t i = 0; i < d.n; ++i)
      if (obs.bits.test(i)) ones.push_back(static_cast<std::uint32_t>(i));
    for (std::size_t a = 0; a < ones.size(); ++a)
      for (std::size_t b = a + 1; b < ones.size(); ++b)
        d.active.push_back(
            static_cast<std::uint32_t>(QuboModel::pair_index(d.n, ones[a], ones[b])));
    for (auto i : ones) d.active.push_back(static_cast<std::uint32_t>(pairs + i));
    d.active.push_back(static_cast<std::uint32_t>(d.p - 1));
    d.offsets.push_back(d.active.size());
    d.target.push_back(obs.ain);
  }
  d.inv_rows = 1.0 / static_cast<double>(data.size());
  return d;
}

class Objective {
 public:
  Objective(const Design& design, double ridge, std::vector<char> free)
      : d_(design), ridge_(ridge), free_(std::move(free)) {}

  std::vector<double> residuals(const std::vector<double>& theta) const {
    std::vector<double> r(d_.rows());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = d_.dot(i, theta) - d_.target[i];
    return r;
  }

  double data_cost(const std::vector<double>& r) const {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += d_.weight[i] * r[i] * r[i];
    return s * d_.inv_rows;
  }

  double penalty(const std::vector<double>& theta) const {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < theta.size(); ++k) s += theta[k] * theta[k];
    return ridge_ * s;
  }

  double value(const std::vector<double>& theta, const std::vector<double>& r) const {
    return data_cost(r) + penalty(theta);
  }

  // Gradient restricted to the free parameters.
  std::vector<double> gradient(const std::vector<double>& theta,
                               const std::vector<double>& r) const {
    std::vector<double> g(d_.p, 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double c = 2.0 * d_.inv_rows * d_.weight[i] * r[i];
      for (std::size_t k = d_.offsets[i]; k < d_.offsets[i + 1]; ++k) g[d_.active[k]] += c;
    }
    for (std::size_t k = 0; k + 1 < d_.p; ++k) g[k] += 2.0 * ridge_ * theta[k];
    for (std::size_t k = 0; k < d_.p; ++k)
      if (!free_[k]) g[k] = 0.0;
    return g;
  }

  // Design times direction.
  std::vector<double> apply(const std::vector<double>& dir) const {
    std::vector<double> q(d_.rows());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = d_.dot(i, dir);
    return q;
  }

  // Curvature of the objective along `dir`, given q = design * dir.
  double curvature(const std::vector<double>& dir, const std::vector<double>& q) const {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += d_.weight[i] * q[i] * q[i];
    s *= 2.0 * d_.inv_rows;
    double pen = 0.0;
    for (std::size_t k = 0; k + 1 < dir.size(); ++k) pen += dir[k] * dir[k];
    return s + 2.0 * ridge_ * pen;
  }

 private:
  const Design& d_;
  double ridge_;
  std::vector<char> free_;
};

double norm2(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

void require_finite(double v) {
  if (!std::isfinite(v))
    throw Error(Errc::non_finite, "training cost diverged; reduce the step size");
}

struct Minimized {
  std::vector<double> theta;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

// Nonlinear conjugate gradient (Polak-Ribiere+) with exact line search, which
// on this quadratic objective reduces to linear CG.
Minimized conjugate_gradient(const Objective& f, std::vector<double> theta,
                             const OptimizerConfig& opt) {
  Minimized out;
  auto r = f.residuals(theta);
  auto g = f.gradient(theta, r);
  out.trace.push_back(f.value(theta, r));
  require_finite(out.trace.back());
  const double g0 = std::sqrt(norm2(g));
  double gg = norm2(g);
  std::vector<double> dir(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) dir[k] = -g[k];
  while (out.iterations < opt.max_iterations) {
    if (g0 == 0.0 || std::sqrt(gg) <= opt.gradient_tolerance * g0) break;
    const auto q = f.apply(dir);
    const double curv = f.curvature(dir, q);
    const double slope = std::inner_product(g.begin(), g.end(), dir.begin(), 0.0);
    if (!(curv > 0.0) || slope >= 0.0) break;
    const double alpha = -slope / curv;
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += alpha * dir[k];
    ++out.iterations;
    if (out.iterations % 50 == 0) {
      r = f.residuals(theta);
    } else {
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += alpha * q[i];
    }
    const double value = f.value(theta, r);
    require_finite(value);
    // Guard against rounding-level increases once converged.
    if (value > out.trace.back()) {
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= alpha * dir[k];
      --out.iterations;
      break;
    }
    out.trace.push_back(value);
    auto g_next = f.gradient(theta, r);
    const double gg_next = norm2(g_next);
    double cross = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) cross += g_next[k] * g[k];
    const double beta = std::max(0.0, (gg_next - cross) / gg);
    for (std::size_t k = 0; k < dir.size(); ++k) dir[k] = -g_next[k] + beta * dir[k];
    g = std::move(g_next);
    gg = gg_next;
  }
  out.theta = std::move(theta);
  return out;
}

// Steepest descent with Armijo backtracking.
Minimized gradient_descent(const Objective& f, std::vector<double> theta,
                           const OptimizerConfig& opt) {
  Minimized out;
  auto r = f.residuals(theta);
  double value = f.value(theta, r);
  require_finite(value);
  out.trace.push_back(value);
  auto g = f.gradient(theta, r);
  const double g0 = std::sqrt(norm2(g));
  double step = opt.step_size;
  std::vector<double> trial(theta.size());
  while (out.iterations < opt.max_iterations) {
    const double gg = norm2(g);
    if (g0 == 0.0 || std::sqrt(gg) <= opt.gradient_tolerance * g0) break;
    bool accepted = false;
    for (int halvings = 0; halvings < 200; ++halvings) {
      for (std::size_t k = 0; k < theta.size(); ++k) trial[k] = theta[k] - step * g[k];
      auto rt = f.residuals(trial);
      const double vt = f.value(trial, rt);
      if (std::isfinite(vt) && vt <= value - 1e-4 * step * gg) {
        theta.swap(trial);
        r = std::move(rt);
        value = vt;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++out.iterations;
    out.trace.push_back(value);
    g = f.gradient(theta, r);
    step *= 2.0;
  }
  out.theta = std::move(theta);
  return out;
}

void check_config(const FitConfig& config) {
  if (!(config.tau > 0.0)) throw Error(Errc::bad_params, "tau must be positive");
  if (!(config.ridge >= 0.0)) throw Error(Errc::bad_params, "ridge must be non-negative");
  if (!(config.optimizer.step_size > 0.0))
    throw Error(Errc::bad_params, "step size must be positive");
}

FitReport run_fit(const Dataset& data, const FitConfig& config,
                  std::vector<double> start, std::vector<char> free) {
  const Design design = build_design(data, config.cost, config.tau);
  const Objective f(design, config.ridge, std::move(free));
  Minimized m = config.optimizer.kind == OptimizerKind::gradient_descent
                    ? gradient_descent(f, std::move(start), config.optimizer)
                    : conjugate_gradient(f, std::move(start), config.optimizer);
  FitReport report;
  report.model = QuboModel::from_parameters(design.n, m.theta);
  const auto r = f.residuals(m.theta);
  report.data_cost = f.data_cost(r);
  report.training_cost = f.value(m.theta, r);
  report.iterations_used = m.iterations;
  report.objective_trace = std::move(m.trace);
  if (data.real_count() > 0 && data.real_max() > 0.0) {
    const auto err = error_report(report.model, data, config.tau);
    report.mse_pct = err.mse_pct;
    report.cae_pct = err.cae_pct;
  } else {
    report.mse_pct = report.cae_pct = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

void require_data(const Dataset& data) {
  if (data.empty()) throw Error(Errc::empty_dataset, "dataset has no observations");
}

}  // namespace

std::vector<double> cost_weights(const Dataset& data, CostKind cost, double tau) {
  std::vector<double> w(data.size(), 1.0);
  if (cost == CostKind::mse) return w;
  if (!(tau > 0.0)) throw Error(Errc::bad_params, "tau must be positive");
  if (data.real_count() == 0)
    throw Error(Errc::no_real_data, "contour-aware cost needs a real maximum");
  const double max = data.real_max();
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::exp(-(max - data.observations()[i].ain) / tau);
  return w;
}

double cost_mse(const QuboModel& model, const Dataset& data) {
  require_data(data);
  double s = 0.0;
  for (const auto& o : data.observations()) {
    const double r = model.evaluate(o.bits) - o.ain;
    s += r * r;
  }
  return s / static_cast<double>(data.size());
}

double cost_contour_aware(const QuboModel& model, const Dataset& data, double tau) {
  require_data(data);
  const auto w = cost_weights(data, CostKind::contour_aware, tau);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& o = data.observations()[i];
    const double r = model.evaluate(o.bits) - o.ain;
    s += w[i] * r * r;
  }
  return s / static_cast<double>(data.size());
}

double data_cost(const QuboModel& model, const Dataset& data, const FitConfig& config) {
  return config.cost == CostKind::mse ? cost_mse(model, data)
                                      : cost_contour_aware(model, data, config.tau);
}

double objective(const QuboModel& model, const Dataset& data, const FitConfig& config) {
  const auto params = model.parameters();
  double pen = 0.0;
  for (std::size_t k = 0; k + 1 < params.size(); ++k) pen += params[k] * params[k];
  return data_cost(model, data, config) + config.ridge * pen;
}

std::vector<double> cost_gradient(const QuboModel& model, const Dataset& data,
                                  CostKind cost, double tau) {
  require_data(data);
  if (model.size() != data.bit_count())
    throw Error(Errc::dimension_mismatch, "model and dataset bit counts differ");
  const Design design = build_design(data, cost, tau);
  const Objective f(design, 0.0, std::vector<char>(design.p, 1));
  const auto theta = model.parameters();
  return f.gradient(theta, f.residuals(theta));
}

FitReport fit(const Dataset& data, const FitConfig& config,
              const std::optional<QuboModel>& initial) {
  require_data(data);
  check_config(config);
  const std::size_t n = data.bit_count();
  if (initial && initial->size() != n)
    throw Error(Errc::dimension_mismatch, "initial model has " +
                                              std::to_string(initial->size()) + " bits, data has " +
                                              std::to_string(n));
  auto start = initial ? initial->parameters()
                       : std::vector<double>(QuboModel::parameter_count(n), 0.0);
  return run_fit(data, config, std::move(start),
                 std::vector<char>(QuboModel::parameter_count(n), 1));
}

FitReport coarse_fine_fit(const Dataset& data, const FitConfig& config) {
  require_data(data);
  check_config(config);
  const std::size_t n = data.bit_count();
  const std::size_t p = QuboModel::parameter_count(n);
  std::vector<char> coarse(p, 0);
  for (std::size_t k = n * (n - 1) / 2; k < p; ++k) coarse[k] = 1;
  const FitReport stage_one =
      run_fit(data, config, std::vector<double>(p, 0.0), std::move(coarse));
  FitReport report = fit(data, config, stage_one.model);
  report.stage_one_cost = stage_one.training_cost;
  report.iterations_used += stage_one.iterations_used;
  return report;
}

FitReport fit_with_strategy(const Dataset& data, const FitConfig& config) {
  return config.strategy == FitStrategy::coarse_fine ? coarse_fine_fit(data, config)
                                                     : fit(data, config);
}

ErrorReport error_report(const QuboModel& model, const Dataset& data, double tau) {
  if (data.real_count() == 0)
    throw Error(Errc::empty_dataset, "error report needs real observations");
  if (!(tau > 0.0)) throw Error(Errc::bad_params, "tau must be positive");
  const double max = data.real_max();
  if (!(max > 0.0)) throw Error(Errc::bad_params, "maximum real AIN must be positive");
  double sq = 0.0, wsq = 0.0, wsum = 0.0;
  for (const auto& o : data.observations()) {
    if (o.kind != ObservationKind::real) continue;
    const double r = model.evaluate(o.bits) - o.ain;
    const double w = std::exp(-(max - o.ain) / tau);
    sq += r * r;
    wsq += w * r * r;
    wsum += w;
  }
  ErrorReport out;
  out.mse_pct = 100.0 * std::sqrt(sq / static_cast<double>(data.real_count())) / max;
  out.cae_pct = 100.0 * std::sqrt(wsq / wsum) / max;
  return out;
}

std::string FitReport::to_json() const {
  auto nan_to_null = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j = {{"model", nlohmann::json::parse(model.to_json())},
                      {"training_cost", nan_to_null(training_cost)},
                      {"data_cost", nan_to_null(data_cost)},
                      {"mse_pct", nan_to_null(mse_pct)},
                      {"cae_pct", nan_to_null(cae_pct)},
                      {"iterations_used", iterations_used}};
  if (stage_one_cost) j["stage_one_cost"] = *stage_one_cost;
  return j.dump(2);
}

}  // namespace qsurr
