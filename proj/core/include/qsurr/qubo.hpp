#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsurr/encoding.hpp"

namespace qsurr {

// Quadratic surrogate over n binary variables:
//
//   E(x) = sum_{i<j} q_ij x_i x_j + sum_i b_i x_i + c
//
// Stored canonically: one coupling per unordered pair, with any diagonal
// quadratic term folded into b (x_i^2 == x_i). Larger E is better.
class QuboModel {
 public:
  QuboModel() = default;
  explicit QuboModel(std::size_t n);

  // Folds a full (possibly asymmetric) n*n row-major matrix: q_ij gets
  // Q[i][j] + Q[j][i] and b_i gets Q[i][i] on top of `linear`.
  static QuboModel from_full_matrix(std::size_t n, std::span<const double> full,
                                    std::span<const double> linear,
                                    double constant);

  // Parameter vector layout: couplings for (0,1),(0,2),...,(n-2,n-1), then the
  // n linear terms, then the constant.
  static std::size_t parameter_count(std::size_t n) noexcept {
    return n * (n - 1) / 2 + n + 1;
  }
  static std::size_t pair_index(std::size_t n, std::size_t i,
                                std::size_t j) noexcept {
    return i * (2 * n - i - 1) / 2 + (j - i - 1);
  }
  static QuboModel from_parameters(std::size_t n,
                                   std::span<const double> params);
  std::vector<double> parameters() const;

  std::size_t size() const noexcept { return n_; }

  // Symmetric access; coupling(i, i) is zero.
  double coupling(std::size_t i, std::size_t j) const noexcept {
    return sym_[i * n_ + j];
  }
  void set_coupling(std::size_t i, std::size_t j, double value);
  double linear(std::size_t i) const noexcept { return linear_[i]; }
  void set_linear(std::size_t i, double value);
  double constant() const noexcept { return constant_; }
  void set_constant(double value);

  // Row i of the symmetric coupling matrix.
  std::span<const double> row(std::size_t i) const noexcept {
    return {sym_.data() + i * n_, n_};
  }
  std::span<const double> linear_terms() const noexcept { return linear_; }

  double evaluate(const BitVector& x) const;
  // E after toggling bit `flip`, given current == evaluate(x). O(n).
  double delta_evaluate(const BitVector& x, std::size_t flip,
                        double current) const;

  std::string to_json() const;
  static QuboModel from_json(std::string_view text);

  friend bool operator==(const QuboModel&, const QuboModel&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> sym_;
  std::vector<double> linear_;
  double constant_ = 0.0;
};

}  // namespace qsurr
