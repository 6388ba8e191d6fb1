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

// Moments accountant for the sampled Gaussian mechanism.
//
// The accountant tracks the log moment generating function of the privacy
// loss, alpha(lambda), over a fixed grid of integer orders. Log-moments of
// independent (or adaptively chosen) steps add; an (epsilon, delta) guarantee
// is read off with the Markov tail bound
//
//   delta = min_lambda exp(alpha(lambda) - lambda * epsilon).
//
// For one sampled Gaussian step with sampling rate q and noise multiplier
// sigma, alpha(lambda) = log max(E1, E2) with mu0 = N(0, sigma^2),
// mu1 = N(1, sigma^2), mu = (1 - q) mu0 + q mu1 and
//
//   E1 = E_{z ~ mu0}[(mu0(z) / mu(z))^lambda],
//   E2 = E_{z ~ mu }[(mu(z) / mu0(z))^lambda],
//
// both evaluated by composite Simpson quadrature in log space.

#ifndef DPTK_ACCOUNTANT_H_
#define DPTK_ACCOUNTANT_H_

#include <cstdint>
#include <span>
#include <vector>

namespace dptk {

// Privacy parameters of one sampled Gaussian release. q == 0 is accepted as
// the degenerate "no data touched" step.
struct SampledGaussianStep {
  double q = 0.0;
  double sigma = 1.0;

  void validate() const;
  friend bool operator==(const SampledGaussianStep&,
                         const SampledGaussianStep&) = default;
};

struct PrivacySpend {
  double epsilon = 0.0;
  double delta = 0.0;
  // Moment order that attained the minimum (diagnostic; 0 if unknown).
  int optimal_order = 0;
};

// Fixed composite Simpson rule over
// z in [-half_width_sigmas * sigma, 1 + half_width_sigmas * sigma].
struct IntegrationConfig {
  double half_width_sigmas = 40.0;
  std::int64_t grid_points = 200001;

  void validate() const;
  friend bool operator==(const IntegrationConfig&,
                         const IntegrationConfig&) = default;
};

inline constexpr int kDefaultMaxOrder = 32;

std::vector<int> default_orders(int max_order = kDefaultMaxOrder);

// Closed form lambda (lambda + 1) / (2 sigma^2) for N(0, sigma^2) vs
// N(1, sigma^2). Used as an oracle for the q = 1 quadrature.
double unsampled_gaussian_log_moment(double sigma, int order);

double compute_log_moment(const SampledGaussianStep& step, int order,
                          const IntegrationConfig& config = {});

// Evaluates every order on one pass over the quadrature nodes.
std::vector<double> compute_log_moments(const SampledGaussianStep& step,
                                        std::span<const int> orders,
                                        const IntegrationConfig& config = {});

// Same values as compute_log_moments, memoized per (step, orders, config).
// Thread-safe. The returned reference stays valid for the process lifetime.
const std::vector<double>& cached_log_moments(
    const SampledGaussianStep& step, std::span<const int> orders,
    const IntegrationConfig& config = {});

class LogMomentLedger {
 public:
  LogMomentLedger() : LogMomentLedger(kDefaultMaxOrder) {}
  explicit LogMomentLedger(int max_order);
  explicit LogMomentLedger(std::vector<int> orders);

  std::span<const int> orders() const noexcept { return orders_; }
  std::span<const double> log_moments() const noexcept { return log_moments_; }
  std::uint64_t steps_recorded() const noexcept { return steps_recorded_; }
  bool empty() const noexcept { return orders_.empty(); }

  // Adds one step's per-order log-moments. Used by the free accumulate
  // functions; exposed for mechanisms other than the sampled Gaussian.
  void add_step(std::span<const double> per_step);

  friend bool operator==(const LogMomentLedger&,
                         const LogMomentLedger&) = default;

 private:
  std::vector<int> orders_;
  std::vector<double> log_moments_;
  std::uint64_t steps_recorded_ = 0;
};

LogMomentLedger accumulate(const LogMomentLedger& ledger,
                           const SampledGaussianStep& step,
                           const IntegrationConfig& config = {});

// `count` successive accumulate() calls. Entries are summed one step at a
// time, so the result is bitwise equal to the step-by-step replay.
LogMomentLedger accumulate_repeated(const LogMomentLedger& ledger,
                                    const SampledGaussianStep& step,
                                    std::uint64_t count,
                                    const IntegrationConfig& config = {});

PrivacySpend get_epsilon(const LogMomentLedger& ledger, double delta);
PrivacySpend get_delta(const LogMomentLedger& ledger, double epsilon);

// Strong composition baseline: per-step Gaussian (eps0, delta0), privacy
// amplification by sampling, then advanced composition over T steps with the
// overall delta split as delta' = delta / 2 and T * q * delta0 = delta / 2.
enum class AmplificationBound {
  // (q * eps0, q * delta0): the O(q eps) amplification with unit constant.
  kLinear,
  // (log(1 + q (e^eps0 - 1)), q * delta0).
  kLogarithmic,
};

struct StrongCompositionResult {
  double epsilon = 0.0;
  double per_step_epsilon = 0.0;  // eps0
  double per_step_delta = 0.0;    // delta0
  double amplified_epsilon = 0.0; // eps1
  double slack_delta = 0.0;       // delta'
  // eps0 >= 1: outside the regime where amplification bounds are usually
  // quoted.
  bool per_step_epsilon_exceeds_one = false;
};

StrongCompositionResult strong_composition(
    double q, double sigma, double delta, std::uint64_t steps,
    AmplificationBound amplification = AmplificationBound::kLinear);

double strong_composition_epsilon(
    double q, double sigma, double delta, std::uint64_t steps,
    AmplificationBound amplification = AmplificationBound::kLinear);

// lambda eps (e^eps - 1) + lambda^2 eps^2 e^{2 eps} / 2: log-moment bound of
// any eps-DP mechanism.
double pure_dp_log_moment(double epsilon, int order);

struct AsymptoticBound {
  // Leading term q^2 lambda (lambda + 1) / ((1 - q) sigma^2).
  double value = 0.0;
  // False when sigma < 1, q >= 1 / (16 sigma) or
  // lambda > sigma^2 ln(1 / (q sigma)).
  bool preconditions_hold = true;
};

AsymptoticBound asymptotic_log_moment_bound(double q, double sigma, int order);

// Smallest sigma in [0.5, 64] (to 1e-3) for which T sampled Gaussian steps
// at rate q stay within (epsilon, delta).
double noise_for_target(double q, std::uint64_t steps, double epsilon,
                        double delta, const IntegrationConfig& config = {},
                        int max_order = kDefaultMaxOrder);

struct HyperparamBudget {
  double total_epsilon = 0.0;    // eps + 8 eps'
  double refined_epsilon = 0.0;  // max(eps, 8 eps')
  std::uint64_t max_calls = 0;   // ceil((1/(eps' delta p))^2 ln(1/(eps' delta p)))
  double accuracy_slack = 0.0;   // (4 / eps') ln(1/(eps' delta p))
};

HyperparamBudget hyperparam_search_budget(double epsilon, double epsilon_prime,
                                          double delta, double p);

}  // namespace dptk

#endif  // DPTK_ACCOUNTANT_H_
