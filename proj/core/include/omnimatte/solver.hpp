#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "omnimatte/model.hpp"
#include "omnimatte/objective.hpp"

namespace omnimatte {

// Adam moments, one flat buffer per parameter tensor in enumeration order.
struct OptimState {
  std::vector<std::vector<double>> m, v;
  long step = 0;

  static OptimState zeros_like(ParameterSet& params);
};

// Bias-corrected Adam update. Aborts with NumericalError on a NaN gradient.
// The brightness grid is floored at 0.01 after the step to keep it positive.
void adam_step(ParameterSet& params, ParamAdjoints& grads, OptimState& state,
               const Config& config);

struct HistoryEntry {
  int epoch = 0;
  LossReport report;
};

// Complete optimization state; everything needed to resume a run bit-exactly.
struct TrainState {
  ParameterSet params;
  OptimState optim;
  int epoch = 0;
  bool bootstrap_active = true;
  std::vector<HistoryEntry> history;
};

struct TrainOptions {
  std::filesystem::path checkpoint_dir;  // empty = no periodic checkpoints
  std::function<void(int epoch, const LossReport&)> on_epoch;
};

// Full-batch optimization of every parameter for config.epochs epochs. The
// mask bootstrap weight drops to zero permanently the first time the mask
// term falls below the gate. Deterministic for fixed seed/config/inputs,
// independent of config.threads. Aborts with NumericalError on NaN or when
// the total exceeds divergence_factor times the initial total.
TrainState train(const TrainingInputs& inputs, const Config& config,
                 TrainState* resume = nullptr, const TrainOptions& opts = {});

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

// Validates a loaded checkpoint against the dataset it is about to drive.
void check_checkpoint_compatible(const TrainState& state, const TrainingInputs& inputs);

std::string history_to_json(const std::vector<HistoryEntry>& history);

}  // namespace omnimatte
