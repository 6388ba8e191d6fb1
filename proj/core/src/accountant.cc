// Copyright 2026 The dp_toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dptk/accountant.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "dptk/error.h"

namespace dptk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Negative results this close to zero are quadrature noise.
constexpr double kNegativeClamp = 1e-12;

// The integrand at both ends of the interval must sit this many nats below
// its peak, otherwise the interval truncates real mass.
constexpr double kTruncationMargin = 30.0;

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

void check_order(int order) {
  if (order < 1) {
    fail(ErrorCode::kInvalidOrder,
         "moment order must be >= 1, got " + std::to_string(order));
  }
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    fail(ErrorCode::kDomainError,
         "delta must lie in (0, 1), got " + std::to_string(delta));
  }
}

}  // namespace

void SampledGaussianStep::validate() const {
  if (!(q >= 0.0 && q <= 1.0)) {
    fail(ErrorCode::kDomainError,
         "sampling probability q must lie in [0, 1], got " + std::to_string(q));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorCode::kDomainError,
         "noise multiplier sigma must be positive, got " +
             std::to_string(sigma));
  }
}

void IntegrationConfig::validate() const {
  if (grid_points < 3 || grid_points % 2 == 0) {
    fail(ErrorCode::kDomainError,
         "grid_points must be odd and >= 3, got " +
             std::to_string(grid_points));
  }
  if (!(half_width_sigmas >= 10.0)) {
    fail(ErrorCode::kDomainError, "half_width_sigmas must be >= 10, got " +
                                      std::to_string(half_width_sigmas));
  }
}

std::vector<int> default_orders(int max_order) {
  check_order(max_order);
  std::vector<int> orders(static_cast<std::size_t>(max_order));
  for (int i = 0; i < max_order; ++i) orders[i] = i + 1;
  return orders;
}

double unsampled_gaussian_log_moment(double sigma, int order) {
  if (!(sigma > 0.0)) {
    fail(ErrorCode::kDomainError, "sigma must be positive");
  }
  check_order(order);
  const double lambda = order;
  return lambda * (lambda + 1.0) / (2.0 * sigma * sigma);
}

std::vector<double> compute_log_moments(const SampledGaussianStep& step,
                                        std::span<const int> orders,
                                        const IntegrationConfig& config) {
  step.validate();
  config.validate();
  for (int order : orders) check_order(order);
  std::vector<double> result(orders.size(), 0.0);
  if (orders.empty() || step.q == 0.0) return result;

  const double sigma = step.sigma;
  const double q = step.q;
  const std::int64_t n = config.grid_points;
  const double lo = -config.half_width_sigmas * sigma;
  const double hi = 1.0 + config.half_width_sigmas * sigma;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  const double log_norm = std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  const double log_q = std::log(q);
  const double log_1mq = q < 1.0 ? std::log1p(-q) : -kInf;
  const double log_h3 = std::log(h / 3.0);
  const double log4 = std::log(4.0);
  const double log2 = std::log(2.0);

  // Per node: log Simpson weight, log mu0, log mu.
  std::vector<double> log_weight(n), log_mu0(n), log_mu(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double z = lo + h * static_cast<double>(i);
    const double l0 = -z * z * inv_two_var - log_norm;
    const double l1 = -(z - 1.0) * (z - 1.0) * inv_two_var - log_norm;
    log_mu0[i] = l0;
    log_mu[i] = log_add_exp(log_1mq + l0, log_q + l1);
    double w = log_h3;
    if (i != 0 && i != n - 1) w += (i % 2 == 1) ? log4 : log2;
    log_weight[i] = w;
  }

  auto log_integral = [&](auto&& log_integrand, int order, const char* which) {
    double peak = -kInf;
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = log_integrand(i);
      if (std::isnan(v) || v == kInf) {
        fail(ErrorCode::kNonFiniteIntegrand,
             std::string(which) + " integrand non-finite at order " +
                 std::to_string(order) + " (sigma=" + std::to_string(sigma) +
                 " too small for the grid)");
      }
      peak = std::max(peak, v);
    }
    const double ends = std::max(log_integrand(0), log_integrand(n - 1));
    if (ends > peak - kTruncationMargin) {
      fail(ErrorCode::kNonFiniteIntegrand,
           std::string(which) + " integrand not negligible at the interval "
           "ends at order " + std::to_string(order) + " (sigma=" +
               std::to_string(sigma) + " too small for the grid)");
    }
    // Neumaier-compensated sum of exp(v - peak).
    double sum = 0.0, compensation = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double term = std::exp(log_integrand(i) - peak);
      const double t = sum + term;
      if (std::abs(sum) >= std::abs(term)) {
        compensation += (sum - t) + term;
      } else {
        compensation += (term - t) + sum;
      }
      sum = t;
    }
    return peak + std::log(sum + compensation);
  };

  for (std::size_t k = 0; k < orders.size(); ++k) {
    const double lambda = orders[k];
    const double log_e1 = log_integral(
        [&](std::int64_t i) {
          return log_weight[i] + log_mu0[i] +
                 lambda * (log_mu0[i] - log_mu[i]);
        },
        orders[k], "E1");
    const double log_e2 = log_integral(
        [&](std::int64_t i) {
          return log_weight[i] + log_mu[i] + lambda * (log_mu[i] - log_mu0[i]);
        },
        orders[k], "E2");
    double alpha = std::max(log_e1, log_e2);
    if (alpha < 0.0) {
      if (alpha < -kNegativeClamp) {
        fail(ErrorCode::kQuadratureFailure,
             "log-moment " + std::to_string(alpha) + " < 0 at order " +
                 std::to_string(orders[k]));
      }
      alpha = 0.0;
    }
    result[k] = alpha;
  }
  return result;
}

double compute_log_moment(const SampledGaussianStep& step, int order,
                          const IntegrationConfig& config) {
  const int orders[] = {order};
  return compute_log_moments(step, orders, config).front();
}

const std::vector<double>& cached_log_moments(
    const SampledGaussianStep& step, std::span<const int> orders,
    const IntegrationConfig& config) {
  using Key = std::tuple<std::uint64_t, std::uint64_t, std::uint64_t,
                         std::int64_t, std::vector<int>>;
  static std::mutex mutex;
  static std::map<Key, std::unique_ptr<const std::vector<double>>> cache;

  Key key{std::bit_cast<std::uint64_t>(step.q),
          std::bit_cast<std::uint64_t>(step.sigma),
          std::bit_cast<std::uint64_t>(config.half_width_sigmas),
          config.grid_points, std::vector<int>(orders.begin(), orders.end())};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return *it->second;
  }
  auto values = std::make_unique<const std::vector<double>>(
      compute_log_moments(step, orders, config));
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.emplace(std::move(key), std::move(values));
  return *it->second;
}

LogMomentLedger::LogMomentLedger(int max_order)
    : LogMomentLedger(default_orders(max_order)) {}

LogMomentLedger::LogMomentLedger(std::vector<int> orders)
    : orders_(std::move(orders)), log_moments_(orders_.size(), 0.0) {
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    check_order(orders_[i]);
    if (i > 0 && orders_[i] <= orders_[i - 1]) {
      fail(ErrorCode::kInvalidOrder, "orders must be strictly increasing");
    }
  }
}

void LogMomentLedger::add_step(std::span<const double> per_step) {
  if (per_step.size() != log_moments_.size()) {
    fail(ErrorCode::kShapeMismatch, "per-step log-moments do not match the "
                                    "ledger's order grid");
  }
  for (std::size_t i = 0; i < per_step.size(); ++i) {
    if (!(per_step[i] >= 0.0) || !std::isfinite(per_step[i])) {
      fail(ErrorCode::kDomainError, "per-step log-moment must be finite and "
                                    "non-negative");
    }
  }
  for (std::size_t i = 0; i < per_step.size(); ++i) {
    log_moments_[i] += per_step[i];
  }
  ++steps_recorded_;
}

LogMomentLedger accumulate(const LogMomentLedger& ledger,
                           const SampledGaussianStep& step,
                           const IntegrationConfig& config) {
  return accumulate_repeated(ledger, step, 1, config);
}

LogMomentLedger accumulate_repeated(const LogMomentLedger& ledger,
                                    const SampledGaussianStep& step,
                                    std::uint64_t count,
                                    const IntegrationConfig& config) {
  LogMomentLedger next = ledger;
  if (count == 0) return next;
  const auto& per_step = cached_log_moments(step, ledger.orders(), config);
  for (std::uint64_t i = 0; i < count; ++i) next.add_step(per_step);
  return next;
}

PrivacySpend get_epsilon(const LogMomentLedger& ledger, double delta) {
  if (ledger.empty()) fail(ErrorCode::kEmptyLedger, "ledger has no orders");
  check_delta(delta);
  const double log_inv_delta = -std::log(delta);
  PrivacySpend spend{kInf, delta, 0};
  const auto orders = ledger.orders();
  const auto alphas = ledger.log_moments();
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double eps = (alphas[i] + log_inv_delta) / orders[i];
    if (eps < spend.epsilon) {
      spend.epsilon = eps;
      spend.optimal_order = orders[i];
    }
  }
  return spend;
}

PrivacySpend get_delta(const LogMomentLedger& ledger, double epsilon) {
  if (ledger.empty()) fail(ErrorCode::kEmptyLedger, "ledger has no orders");
  if (!(epsilon >= 0.0)) {
    fail(ErrorCode::kDomainError, "epsilon must be non-negative");
  }
  double best_log = kInf;
  int best_order = 0;
  const auto orders = ledger.orders();
  const auto alphas = ledger.log_moments();
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double log_delta = alphas[i] - orders[i] * epsilon;
    if (log_delta < best_log) {
      best_log = log_delta;
      best_order = orders[i];
    }
  }
  return {epsilon, std::min(1.0, std::exp(best_log)), best_order};
}

StrongCompositionResult strong_composition(double q, double sigma,
                                           double delta, std::uint64_t steps,
                                           AmplificationBound amplification) {
  if (!(q > 0.0 && q <= 1.0) || !(sigma > 0.0) || !(delta > 0.0 && delta < 1.0) ||
      steps == 0) {
    fail(ErrorCode::kDomainError,
         "strong composition needs q in (0,1], sigma > 0, delta in (0,1), "
         "T > 0");
  }
  const double t = static_cast<double>(steps);
  StrongCompositionResult r;
  r.slack_delta = delta / 2.0;
  r.per_step_delta = delta / (2.0 * t * q);
  r.per_step_epsilon = std::sqrt(2.0 * std::log(1.25 / r.per_step_delta)) / sigma;
  r.per_step_epsilon_exceeds_one = r.per_step_epsilon >= 1.0;
  r.amplified_epsilon =
      amplification == AmplificationBound::kLinear
          ? q * r.per_step_epsilon
          : std::log1p(q * std::expm1(r.per_step_epsilon));
  const double e1 = r.amplified_epsilon;
  const double advanced = e1 * std::sqrt(2.0 * t * std::log(1.0 / r.slack_delta)) +
                          t * e1 * std::expm1(e1);
  // Basic composition at the same per-step delta is also valid and wins for
  // very small T.
  r.epsilon = std::min(advanced, t * e1);
  return r;
}

double strong_composition_epsilon(double q, double sigma, double delta,
                                  std::uint64_t steps,
                                  AmplificationBound amplification) {
  return strong_composition(q, sigma, delta, steps, amplification).epsilon;
}

double pure_dp_log_moment(double epsilon, int order) {
  if (!(epsilon >= 0.0)) {
    fail(ErrorCode::kDomainError, "epsilon must be non-negative");
  }
  check_order(order);
  const double lambda = order;
  return lambda * epsilon * std::expm1(epsilon) +
         lambda * lambda * epsilon * epsilon * std::exp(2.0 * epsilon) / 2.0;
}

AsymptoticBound asymptotic_log_moment_bound(double q, double sigma,
                                            int order) {
  if (!(q >= 0.0 && q < 1.0)) {
    fail(ErrorCode::kDomainError, "q must lie in [0, 1)");
  }
  if (!(sigma > 0.0)) fail(ErrorCode::kDomainError, "sigma must be positive");
  check_order(order);
  const double lambda = order;
  AsymptoticBound bound;
  bound.value = q * q * lambda * (lambda + 1.0) / ((1.0 - q) * sigma * sigma);
  bound.preconditions_hold =
      q > 0.0 && sigma >= 1.0 && q < 1.0 / (16.0 * sigma) &&
      lambda <= sigma * sigma * std::log(1.0 / (q * sigma));
  return bound;
}

double noise_for_target(double q, std::uint64_t steps, double epsilon,
                        double delta, const IntegrationConfig& config,
                        int max_order) {
  constexpr double kLow = 0.5;
  constexpr double kHigh = 64.0;
  constexpr double kTolerance = 1e-3;
  if (!(q > 0.0 && q <= 1.0) || steps == 0 || !(epsilon > 0.0)) {
    fail(ErrorCode::kDomainError,
         "noise_for_target needs q in (0,1], T > 0, epsilon > 0");
  }
  check_delta(delta);
  const LogMomentLedger empty(max_order);

  auto epsilon_at = [&](double sigma) {
    try {
      const LogMomentLedger ledger =
          accumulate_repeated(empty, {q, sigma}, steps, config);
      return get_epsilon(ledger, delta).epsilon;
    } catch (const Error& e) {
      // A grid too coarse for this sigma means we cannot certify it.
      if (e.code() == ErrorCode::kNonFiniteIntegrand) return kInf;
      throw;
    }
  };

  double lo = kLow, hi = kHigh;
  double eps_lo = epsilon_at(lo);
  double eps_hi = epsilon_at(hi);
  if (eps_hi > epsilon) {
    fail(ErrorCode::kUnachievable,
         "even sigma=64 gives epsilon=" + std::to_string(eps_hi) +
             " > target " + std::to_string(epsilon));
  }
  if (eps_lo < eps_hi) {
    fail(ErrorCode::kMonotonicityViolation,
         "epsilon not non-increasing across the sigma bracket");
  }
  if (eps_lo <= epsilon) return lo;
  while (hi - lo > kTolerance) {
    const double mid = 0.5 * (lo + hi);
    const double eps_mid = epsilon_at(mid);
    if (eps_mid > eps_lo || eps_mid < eps_hi) {
      fail(ErrorCode::kMonotonicityViolation,
           "epsilon(sigma) not monotone at sigma=" + std::to_string(mid));
    }
    if (eps_mid <= epsilon) {
      hi = mid;
      eps_hi = eps_mid;
    } else {
      lo = mid;
      eps_lo = eps_mid;
    }
  }
  return hi;
}

HyperparamBudget hyperparam_search_budget(double epsilon, double epsilon_prime,
                                          double delta, double p) {
  if (!(epsilon >= 0.0)) fail(ErrorCode::kDomainError, "epsilon must be >= 0");
  // The closed end at 1/2 admits the eps' = 0.5 worked setting.
  if (!(epsilon_prime > 0.0 && epsilon_prime <= 0.5)) {
    fail(ErrorCode::kDomainError, "epsilon' must lie in (0, 1/2]");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    fail(ErrorCode::kDomainError, "delta must lie in (0, 1)");
  }
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::kDomainError, "p must lie in (0, 1)");
  const double inv = 1.0 / (epsilon_prime * delta * p);
  const double log_inv = std::log(inv);
  const double calls = std::ceil(inv * inv * log_inv);
  if (!(calls < 0x1.0p64)) {
    fail(ErrorCode::kDomainError, "max_calls overflows 64 bits");
  }
  HyperparamBudget budget;
  budget.total_epsilon = epsilon + 8.0 * epsilon_prime;
  budget.refined_epsilon = std::max(epsilon, 8.0 * epsilon_prime);
  budget.max_calls = static_cast<std::uint64_t>(calls);
  budget.accuracy_slack = 4.0 / epsilon_prime * log_inv;
  return budget;
}

}  // namespace dptk
