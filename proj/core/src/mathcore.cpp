#include "varbpr/mathcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace varbpr::math {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite input");
}

}  // namespace

SimplexVector::SimplexVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::domain_error("SimplexVector: empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error("SimplexVector: negative or non-finite entry");
    total += w;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw std::domain_error("SimplexVector: entries sum to " + std::to_string(total));
  }
}

SimplexVector SimplexVector::normalized(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error("normalize: negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::domain_error("normalize: weights sum to zero");
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= total;
  return SimplexVector(std::move(out));
}

SimplexVector SimplexVector::uniform(std::size_t size) {
  if (size == 0) throw std::domain_error("SimplexVector::uniform: empty");
  return SimplexVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

SimplexVector SimplexVector::one_hot(std::size_t size, std::size_t index) {
  if (index >= size) throw std::domain_error("SimplexVector::one_hot: index out of range");
  std::vector<double> w(size, 0.0);
  w[index] = 1.0;
  return SimplexVector(std::move(w));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_sigmoid(double x) {
  require_finite(x, "log_sigmoid");
  return -softplus(-x);
}

double maclaurin_remainder(double x) {
  require_finite(x, "maclaurin_remainder");
  return log_sigmoid(x) + kLn2 - 0.5 * x;
}

SimplexVector stable_softmax(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw std::domain_error("stable_softmax: empty logits");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::domain_error("stable_softmax: temperature must be positive");
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    require_finite(z, "stable_softmax");
    peak = std::max(peak, z);
  }
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp((logits[k] - peak) / temperature);
    total += out[k];
  }
  for (double& w : out) w /= total;
  return SimplexVector(std::move(out));
}

double kl_divergence(const SimplexVector& p, const SimplexVector& q) {
  if (p.size() != q.size()) throw std::domain_error("kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) throw std::domain_error("kl_divergence: p not absolutely continuous w.r.t. q");
    kl += p[k] * std::log(p[k] / q[k]);
  }
  // Rounding can leave a tiny negative value when p == q.
  return std::max(kl, 0.0);
}

double entropy(const SimplexVector& p) {
  double h = 0.0;
  for (double w : p) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

double cross_entropy(const SimplexVector& p, const SimplexVector& q) {
  if (p.size() != q.size()) throw std::domain_error("cross_entropy: length mismatch");
  double h = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) return std::numeric_limits<double>::infinity();
    h -= p[k] * std::log(q[k]);
  }
  return h;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::domain_error("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace varbpr::math
