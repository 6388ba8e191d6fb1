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

// Differentially private SGD: Poisson-sampled lots, per-example clipping,
// Gaussian noise on the summed clipped gradients, descent, and moments
// accounting with a budget-based stop.

#ifndef DPTK_DPSGD_H_
#define DPTK_DPSGD_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dptk/accountant.h"
#include "dptk/data.h"
#include "dptk/mechanisms.h"
#include "dptk/nn.h"
#include "dptk/random.h"

namespace dptk {

// Linear decay from `initial` to `final_rate` over `decay_epochs`, constant
// afterwards.
struct LearningRateSchedule {
  double initial = 0.1;
  double final_rate = 0.052;
  double decay_epochs = 10.0;

  double at_epoch(double epoch) const;
};

enum class ClipMode { kPerLayer, kWholeVector };

struct TrainingConfig {
  std::size_t lot_size = 600;     // L
  std::size_t dataset_size = 0;   // N; 0 means "take it from the dataset"
  double noise_sigma = 4.0;
  // Per-layer thresholds (one value is broadcast); +inf disables clipping.
  std::vector<double> clip = {4.0};
  ClipMode clip_mode = ClipMode::kPerLayer;
  LearningRateSchedule learning_rate;
  double max_epochs = 100.0;
  std::optional<PrivacySpend> target_budget;
  // delta used for the epsilon column when no target budget is set.
  double report_delta = 1e-5;
  std::uint64_t seed = 0;
  IntegrationConfig integration;
  int max_order = kDefaultMaxOrder;
  // Evaluate every this many epochs (the final state is always evaluated).
  int eval_every_epochs = 1;

  double sampling_rate() const;
  double steps_per_epoch() const;
  double accounting_delta() const;
  void validate() const;
};

struct EpochRecord {
  double epoch = 0.0;
  std::uint64_t step = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;  // NaN without a test set
  double epsilon = 0.0;  // +inf when sigma = 0
  double delta = 0.0;
};

enum class StopReason { kEpochs, kBudget };

struct TrainingReport {
  std::vector<EpochRecord> records;
  StopReason stop_reason = StopReason::kEpochs;
  std::uint64_t steps = 0;
  LogMomentLedger ledger;
  PrivacySpend final_spend;
};

struct TrainingResult {
  MlpParams params;
  TrainingReport report;
};

// Each index in [0, N) is kept independently with probability q.
std::vector<std::size_t> sample_lot(std::size_t n, double q, CounterRng& rng);

ClipConfig make_clip_config(const MlpParams& params, const TrainingConfig& config);

struct StepResult {
  MlpParams params;
  LogMomentLedger ledger;
};

// One iteration: the ledger is charged for the step first, then the lot's
// clipped gradient sum is perturbed, averaged over L and applied. With
// sigma = 0 nothing is private and the ledger is left untouched. A zero
// dataset_size in `config` means data.size().
StepResult dp_sgd_step(const MlpParams& params, const Dataset& data,
                       std::span<const std::size_t> lot,
                       const TrainingConfig& config, double learning_rate,
                       NoiseSource& noise, const LogMomentLedger& ledger);

// Runs DP-SGD from `initial` until max_epochs or until one more step would
// exceed the target budget. `initial_ledger` carries earlier releases (e.g.
// DP-PCA) and must use the configured order grid.
TrainingResult train(const Dataset& train_set, const Dataset* test_set,
                     const TrainingConfig& config, MlpParams initial,
                     std::optional<LogMomentLedger> initial_ledger = std::nullopt);

// Median full-gradient norm over `sample_size` examples drawn without
// replacement; a heuristic for picking the clipping threshold.
double clip_norm_diagnostic(const MlpParams& params, const Dataset& data,
                            std::size_t sample_size, CounterRng& rng);

}  // namespace dptk

#endif  // DPTK_DPSGD_H_
