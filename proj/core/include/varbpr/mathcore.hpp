#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace varbpr::math {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

/// Non-negative weights summing to one (within kSimplexTolerance).
///
/// Houses variational posteriors and normalized priors. Construction
/// validates the invariant and throws std::domain_error on violation.
class SimplexVector {
 public:
  explicit SimplexVector(std::vector<double> weights);

  /// Normalizes non-negative weights with a positive sum.
  static SimplexVector normalized(std::span<const double> weights);
  static SimplexVector uniform(std::size_t size);
  static SimplexVector one_hot(std::size_t size, std::size_t index);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t k) const { return weights_[k]; }
  std::span<const double> weights() const noexcept { return weights_; }
  auto begin() const noexcept { return weights_.begin(); }
  auto end() const noexcept { return weights_.end(); }

 private:
  std::vector<double> weights_;
};

double sigmoid(double x);

/// ln(1 + e^x) without overflow.
double softplus(double x);

/// ln sigma(x), evaluated as -softplus(-x). Throws on non-finite input.
double log_sigmoid(double x);

/// Remainder of the first-order expansion ln sigma(x) = -ln 2 + x/2 + r(x).
/// |r(x)| <= x^2/8.
double maclaurin_remainder(double x);

/// softmax(logits / temperature) with max subtraction.
SimplexVector stable_softmax(std::span<const double> logits, double temperature = 1.0);

/// KL(p || q) with 0 ln 0 = 0. Throws when p puts mass outside q's support.
double kl_divergence(const SimplexVector& p, const SimplexVector& q);

/// Shannon entropy in nats.
double entropy(const SimplexVector& p);

/// H(p, q) = -sum p ln q. Infinite when supports mismatch.
double cross_entropy(const SimplexVector& p, const SimplexVector& q);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace varbpr::math
