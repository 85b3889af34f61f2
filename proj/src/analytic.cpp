#include "retinal/analytic.hpp"

#include "retinal/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace retinal {
namespace {

void check_delta(double delta) {
  if (!(delta >= 0.0)) fail(ErrorKind::invalid_argument, fmt::format("delta = {} < 0", delta));
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorKind::invalid_argument, fmt::format("{} = {} is not a probability", name, p));
}

}  // namespace

double diabatic_prob(double delta) {
  check_delta(delta);
  return std::exp(-2.0 * std::numbers::pi * delta);
}

DephasedLimits dephased_limit_prob(double delta) {
  check_delta(delta);
  const double e = std::exp(-4.0 * std::numbers::pi * delta);
  return {0.5 * (1.0 - e), 0.5 * (1.0 + e)};
}

double sequential_yield(int n, double delta) {
  if (n < 1 || n % 2 == 0)
    fail(ErrorKind::invalid_n, fmt::format("transit count must be odd and positive, got {}", n));
  const double q = diabatic_prob(delta);
  const double p2 = (1.0 - q) * (1.0 - q);
  double sum = 0.0;
  double term = 1.0;
  for (int i = 0; i <= (n - 1) / 2; ++i) {
    sum += term;
    term *= p2;
  }
  return q * sum;
}

double sequential_yield_limit(double delta) {
  const double q = diabatic_prob(delta);
  if (q == 0.0) return 0.5;  // q / (2q - q^2) -> 1/2
  return q / (1.0 - (1.0 - q) * (1.0 - q));
}

TransitModel coherent_transit() {
  return [](double gamma, double delta) {
    if (!(gamma >= 0.0)) fail(ErrorKind::invalid_argument, "gamma must be non-negative");
    return diabatic_prob(delta);
  };
}

TransitModel logistic_placeholder(double gamma_mid, double steepness) {
  if (!(gamma_mid > 0.0) || !(steepness > 0.0))
    fail(ErrorKind::invalid_argument, "logistic placeholder needs positive midpoint and slope");
  return [gamma_mid, steepness](double gamma, double delta) {
    if (!(gamma >= 0.0)) fail(ErrorKind::invalid_argument, "gamma must be non-negative");
    const double low = diabatic_prob(delta);
    const double high = dephased_limit_prob(delta).passage_threshold;
    if (gamma == 0.0) return low;
    const double w = 1.0 / (1.0 + std::pow(gamma_mid / gamma, steepness));
    return low + (high - low) * w;
  };
}

double controlled_yield(double measured, double coherent, int n_windows) {
  check_probability(measured, "measured");
  check_probability(coherent, "coherent");
  if (n_windows < 1) fail(ErrorKind::invalid_n, "need at least one window");
  const double r = (1.0 - measured) * (1.0 - coherent);
  double sum = 0.0;
  double term = 1.0;
  for (int i = 0; i < n_windows; ++i) {
    sum += term;
    term *= r;
  }
  return measured * sum;
}

}  // namespace retinal
