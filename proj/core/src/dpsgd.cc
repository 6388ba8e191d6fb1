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

#include "dptk/dpsgd.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dptk/error.h"

namespace dptk {
namespace {

constexpr std::uint64_t kLotStream = 0x4C4F5453;  // "LOTS"
constexpr std::uint64_t kNoiseSeedMix = 0xD1B54A32D192ED03;

// Number of completed epochs after `step` steps, i.e. floor(step * L / N).
std::uint64_t epochs_completed(std::uint64_t step, const TrainingConfig& config) {
  return static_cast<std::uint64_t>(
      (static_cast<long double>(step) * config.lot_size) / config.dataset_size);
}

}  // namespace

double LearningRateSchedule::at_epoch(double epoch) const {
  if (decay_epochs <= 0.0 || epoch >= decay_epochs) return final_rate;
  return initial + (final_rate - initial) * (epoch / decay_epochs);
}

double TrainingConfig::sampling_rate() const {
  return static_cast<double>(lot_size) / static_cast<double>(dataset_size);
}

double TrainingConfig::steps_per_epoch() const {
  return static_cast<double>(dataset_size) / static_cast<double>(lot_size);
}

double TrainingConfig::accounting_delta() const {
  return target_budget ? target_budget->delta : report_delta;
}

void TrainingConfig::validate() const {
  if (lot_size == 0 || dataset_size == 0 || lot_size > dataset_size) {
    fail(ErrorCode::kConfigError, "need 0 < L <= N (L=" + std::to_string(lot_size) +
                                      ", N=" + std::to_string(dataset_size) + ")");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    fail(ErrorCode::kConfigError, "noise sigma must be finite and >= 0");
  }
  if (clip.empty()) fail(ErrorCode::kConfigError, "no clipping threshold");
  for (double c : clip) {
    if (!(c > 0.0)) fail(ErrorCode::kConfigError, "clipping thresholds must be > 0");
    if (std::isinf(c) && noise_sigma > 0.0) {
      fail(ErrorCode::kConfigError, "noise needs a finite clipping threshold");
    }
  }
  if (clip_mode == ClipMode::kWholeVector && clip.size() != 1) {
    fail(ErrorCode::kConfigError, "whole-vector clipping takes one threshold");
  }
  if (!(learning_rate.final_rate > 0.0) ||
      !(learning_rate.initial >= learning_rate.final_rate)) {
    fail(ErrorCode::kConfigError, "learning rates need initial >= final > 0");
  }
  if (!(max_epochs >= 0.0) || !std::isfinite(max_epochs)) {
    fail(ErrorCode::kConfigError, "max_epochs must be finite and >= 0");
  }
  if (target_budget) {
    if (!(target_budget->epsilon > 0.0) ||
        !(target_budget->delta > 0.0 && target_budget->delta < 1.0)) {
      fail(ErrorCode::kConfigError, "target budget needs epsilon > 0, delta in (0,1)");
    }
    if (noise_sigma == 0.0) {
      fail(ErrorCode::kConfigError, "a privacy budget needs noise sigma > 0");
    }
  }
  if (!(report_delta > 0.0 && report_delta < 1.0)) {
    fail(ErrorCode::kConfigError, "report delta must lie in (0, 1)");
  }
  if (eval_every_epochs <= 0) {
    fail(ErrorCode::kConfigError, "eval_every_epochs must be positive");
  }
  integration.validate();
}

std::vector<std::size_t> sample_lot(std::size_t n, double q, CounterRng& rng) {
  if (!(q >= 0.0 && q <= 1.0)) {
    fail(ErrorCode::kDomainError, "sampling probability must lie in [0, 1]");
  }
  std::vector<std::size_t> lot;
  if (q == 0.0) return lot;
  if (q == 1.0) {
    lot.resize(n);
    std::iota(lot.begin(), lot.end(), std::size_t{0});
    return lot;
  }
  lot.reserve(static_cast<std::size_t>(q * static_cast<double>(n) * 1.2) + 16);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < q) lot.push_back(i);
  }
  return lot;
}

ClipConfig make_clip_config(const MlpParams& params, const TrainingConfig& config) {
  if (config.clip_mode == ClipMode::kWholeVector) {
    return ClipConfig::whole(config.clip.front());
  }
  const auto counts = params.layer_parameter_counts();
  std::vector<double> thresholds;
  if (config.clip.size() == 1) {
    thresholds.assign(counts.size(), config.clip.front());
  } else if (config.clip.size() == counts.size()) {
    thresholds = config.clip;
  } else {
    fail(ErrorCode::kConfigError, "got " + std::to_string(config.clip.size()) +
                                      " clipping thresholds for " +
                                      std::to_string(counts.size()) + " layers");
  }
  return ClipConfig::per_segment(counts, std::move(thresholds));
}

StepResult dp_sgd_step(const MlpParams& params, const Dataset& data,
                       std::span<const std::size_t> lot,
                       const TrainingConfig& base_config, double learning_rate,
                       NoiseSource& noise, const LogMomentLedger& ledger) {
  TrainingConfig config = base_config;
  if (config.dataset_size == 0) config.dataset_size = data.size();
  StepResult result{params, ledger};
  if (config.noise_sigma > 0.0) {
    result.ledger = accumulate(ledger, {config.sampling_rate(), config.noise_sigma},
                               config.integration);
  }
  RowMatrix inputs(static_cast<Eigen::Index>(lot.size()),
                   static_cast<Eigen::Index>(data.feature_dim()));
  std::vector<int> labels(lot.size());
  for (std::size_t i = 0; i < lot.size(); ++i) {
    inputs.row(static_cast<Eigen::Index>(i)) =
        data.features().row(static_cast<Eigen::Index>(lot[i]));
    labels[i] = data.labels()[lot[i]];
  }
  const ClipConfig clip = make_clip_config(params, config);
  std::vector<double> update = clipped_gradient_sum(params, inputs, labels, clip);
  perturb_and_average(update, clip, config.noise_sigma, config.lot_size, noise);
  result.params.add_scaled(update, -learning_rate);
  return result;
}

TrainingResult train(const Dataset& train_set, const Dataset* test_set,
                     const TrainingConfig& base_config, MlpParams initial,
                     std::optional<LogMomentLedger> initial_ledger) {
  TrainingConfig config = base_config;
  if (config.dataset_size == 0) config.dataset_size = train_set.size();
  if (config.dataset_size != train_set.size()) {
    fail(ErrorCode::kConfigError, "configured N=" + std::to_string(config.dataset_size) +
                                      " but the dataset holds " +
                                      std::to_string(train_set.size()));
  }
  config.validate();
  initial.validate();
  if (initial.input_dim() != train_set.feature_dim() ||
      initial.output_dim() != static_cast<std::size_t>(train_set.num_classes())) {
    fail(ErrorCode::kShapeMismatch, "network shape does not fit the dataset");
  }
  make_clip_config(initial, config);  // validates the per-layer thresholds

  TrainingResult result{std::move(initial), TrainingReport{}};
  TrainingReport& report = result.report;
  report.ledger = initial_ledger ? std::move(*initial_ledger)
                                 : LogMomentLedger(config.max_order);
  if (!std::ranges::equal(report.ledger.orders(), default_orders(config.max_order))) {
    fail(ErrorCode::kConfigError, "initial ledger uses a different order grid");
  }

  const double delta = config.accounting_delta();
  const SampledGaussianStep step{config.sampling_rate(), config.noise_sigma};
  const auto total_steps = static_cast<std::uint64_t>(
      std::floor(config.max_epochs * config.steps_per_epoch() + 1e-9));
  CounterRng lot_rng(config.seed, kLotStream);
  NoiseSource noise(config.seed ^ kNoiseSeedMix);

  auto record = [&](std::uint64_t steps_done) {
    EpochRecord r;
    r.step = steps_done;
    r.epoch = static_cast<double>(steps_done) / config.steps_per_epoch();
    r.train_accuracy = evaluate(result.params, train_set);
    r.test_accuracy = test_set ? evaluate(result.params, *test_set)
                               : std::numeric_limits<double>::quiet_NaN();
    r.epsilon = config.noise_sigma > 0.0
                    ? get_epsilon(report.ledger, delta).epsilon
                    : std::numeric_limits<double>::infinity();
    r.delta = delta;
    report.records.push_back(r);
  };

  report.stop_reason = StopReason::kEpochs;
  std::uint64_t steps_done = 0;
  while (steps_done < total_steps) {
    if (config.target_budget && config.noise_sigma > 0.0) {
      const LogMomentLedger next = accumulate(report.ledger, step, config.integration);
      if (get_epsilon(next, delta).epsilon > config.target_budget->epsilon) {
        report.stop_reason = StopReason::kBudget;
        break;
      }
    }
    const std::vector<std::size_t> lot =
        sample_lot(train_set.size(), config.sampling_rate(), lot_rng);
    const double epoch = static_cast<double>(steps_done) / config.steps_per_epoch();
    StepResult next = dp_sgd_step(result.params, train_set, lot, config,
                                  config.learning_rate.at_epoch(epoch), noise,
                                  report.ledger);
    result.params = std::move(next.params);
    report.ledger = std::move(next.ledger);
    ++steps_done;

    const std::uint64_t epochs = epochs_completed(steps_done, config);
    if (epochs > epochs_completed(steps_done - 1, config) &&
        epochs % static_cast<std::uint64_t>(config.eval_every_epochs) == 0) {
      record(steps_done);
    }
  }
  if (steps_done > 0 && (report.records.empty() || report.records.back().step != steps_done)) {
    record(steps_done);
  }
  report.steps = steps_done;
  report.final_spend = get_epsilon(report.ledger, delta);
  if (config.noise_sigma == 0.0) {
    report.final_spend.epsilon = std::numeric_limits<double>::infinity();
  }
  return result;
}

double clip_norm_diagnostic(const MlpParams& params, const Dataset& data,
                            std::size_t sample_size, CounterRng& rng) {
  if (sample_size == 0 || data.empty()) {
    fail(ErrorCode::kEmptySample, "clip-norm diagnostic needs a non-empty sample");
  }
  const std::size_t n = std::min(sample_size, data.size());
  std::vector<std::size_t> indices(data.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(indices[i], indices[i + rng.below(data.size() - i)]);
  }
  indices.resize(n);
  const Dataset sample = data.subset(indices);
  std::vector<double> norms =
      per_example_gradient_norms(params, sample.features(), sample.labels());
  std::sort(norms.begin(), norms.end());
  return n % 2 == 1 ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
}

}  // namespace dptk
