#include "qsurr/qubo.hpp"

#include <cmath>

#include "detail.hpp"
#include "qsurr/error.hpp"

namespace qsurr {

namespace {

void require_finite(double value, const char* what) {
  if (!std::isfinite(value))
    throw Error(Errc::non_finite, std::string("non-finite ") + what);
}

}  // namespace

QuboModel::QuboModel(std::size_t n)
    : n_(n), sym_(n * n, 0.0), linear_(n, 0.0) {}

QuboModel QuboModel::from_full_matrix(std::size_t n,
                                      std::span<const double> full,
                                      std::span<const double> linear,
                                      double constant) {
  if (full.size() != n * n || linear.size() != n)
    throw Error(Errc::dimension_mismatch, "full matrix must be n*n with n linear terms");
  QuboModel model(n);
  for (std::size_t i = 0; i < n; ++i) {
    model.set_linear(i, linear[i] + full[i * n + i]);
    for (std::size_t j = i + 1; j < n; ++j)
      model.set_coupling(i, j, full[i * n + j] + full[j * n + i]);
  }
  model.set_constant(constant);
  return model;
}

QuboModel QuboModel::from_parameters(std::size_t n,
                                     std::span<const double> params) {
  if (params.size() != parameter_count(n))
    throw Error(Errc::dimension_mismatch,
                "expected " + std::to_string(parameter_count(n)) + " parameters, got " +
                    std::to_string(params.size()));
  QuboModel model(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) model.set_coupling(i, j, params[k++]);
  for (std::size_t i = 0; i < n; ++i) model.set_linear(i, params[k++]);
  model.set_constant(params[k]);
  return model;
}

std::vector<double> QuboModel::parameters() const {
  std::vector<double> params;
  params.reserve(parameter_count(n_));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) params.push_back(coupling(i, j));
  params.insert(params.end(), linear_.begin(), linear_.end());
  params.push_back(constant_);
  return params;
}

void QuboModel::set_coupling(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_ || i == j)
    throw Error(Errc::index_out_of_range,
                "coupling (" + std::to_string(i) + "," + std::to_string(j) + ")");
  require_finite(value, "coupling");
  sym_[i * n_ + j] = value;
  sym_[j * n_ + i] = value;
}

void QuboModel::set_linear(std::size_t i, double value) {
  if (i >= n_) throw Error(Errc::index_out_of_range, "linear " + std::to_string(i));
  require_finite(value, "linear term");
  linear_[i] = value;
}

void QuboModel::set_constant(double value) {
  require_finite(value, "constant");
  constant_ = value;
}

double QuboModel::evaluate(const BitVector& x) const {
  if (x.size() != n_)
    throw Error(Errc::length_mismatch, "model has " + std::to_string(n_) +
                                           " bits, state has " + std::to_string(x.size()));
  double e = constant_;
  for (std::size_t i = 0; i < n_; ++i) {
    if (!x.test(i)) continue;
    e += linear_[i];
    const double* r = sym_.data() + i * n_;
    for (std::size_t j = i + 1; j < n_; ++j)
      if (x.test(j)) e += r[j];
  }
  return e;
}

double QuboModel::delta_evaluate(const BitVector& x, std::size_t flip,
                                 double current) const {
  if (x.size() != n_)
    throw Error(Errc::length_mismatch, "model has " + std::to_string(n_) +
                                           " bits, state has " + std::to_string(x.size()));
  if (flip >= n_) throw Error(Errc::index_out_of_range, "flip " + std::to_string(flip));
  double field = linear_[flip];
  const double* r = sym_.data() + flip * n_;
  for (std::size_t j = 0; j < n_; ++j)
    if (j != flip && x.test(j)) field += r[j];
  return x.test(flip) ? current - field : current + field;
}

std::string QuboModel::to_json() const {
  nlohmann::json quad = nlohmann::json::array();
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (coupling(i, j) != 0.0) quad.push_back(nlohmann::json::array({i, j, coupling(i, j)}));
  nlohmann::json j = {{"version", 1},
                      {"n", n_},
                      {"quad", quad},
                      {"linear", linear_},
                      {"constant", constant_}};
  return j.dump(2);
}

QuboModel QuboModel::from_json(std::string_view text) {
  const auto j = detail::parse_json(text, "model");
  const int version = detail::get_field<int>(j, "version");
  if (version != 1)
    throw Error(Errc::version_mismatch, "model version " + std::to_string(version));
  const auto n = detail::get_field<std::size_t>(j, "n");
  const auto linear = detail::get_field<std::vector<double>>(j, "linear");
  if (linear.size() != n)
    throw Error(Errc::parse_error, "linear has " + std::to_string(linear.size()) +
                                       " entries for n = " + std::to_string(n));
  QuboModel model(n);
  for (std::size_t i = 0; i < n; ++i) model.set_linear(i, linear[i]);
  model.set_constant(detail::get_field<double>(j, "constant"));
  const auto quad = j.contains("quad") ? j.at("quad") : nlohmann::json::array();
  if (!quad.is_array()) throw Error(Errc::parse_error, "'quad' must be an array");
  for (const auto& t : quad) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_unsigned() ||
        !t[1].is_number_unsigned() || !t[2].is_number())
      throw Error(Errc::parse_error, "quad entries must be [i, j, value]");
    const auto i = t[0].get<std::size_t>();
    const auto k = t[1].get<std::size_t>();
    if (!(i < k && k < n))
      throw Error(Errc::parse_error, "quad entry needs i < j < n");
    model.set_coupling(i, k, t[2].get<double>());
  }
  return model;
}

}  // namespace qsurr
