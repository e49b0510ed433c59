#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scbnet/arch.hpp"
#include "scbnet/data.hpp"
#include "scbnet/network.hpp"

namespace scbnet {

enum class Optimizer { adam, sgd };

Optimizer optimizer_from_name(const std::string& name);
const char* optimizer_name(Optimizer opt);

struct TrainConfig {
  int batch_size = 15;
  int epochs = 60;
  uint64_t seed = 0;
  float learning_rate = 1e-3f;
  Optimizer optimizer = Optimizer::adam;
  bool augment = false;

  // learning_rate 0 is allowed: a zero step leaves params unchanged, which
  // the optimizer contract relies on.
  void validate() const;
};

struct EpochStats {
  float mean_loss = 0.0f;  // mean over batch means
  double train_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

struct EvalResult {
  double accuracy = 0.0;  // in [0,1]
  int tp = 0, tn = 0, fp = 0, fn = 0;
  int n = 0;
};

// Adam moment buffers, one pair per trainable array in parameter order.
struct AdamState {
  std::vector<std::vector<float>> m, v;
  int64_t t = 0;
};

// Standard Adam step with bias correction; beta1 0.9, beta2 0.999, eps 1e-8.
// t is the 1-based step count (shared across arrays of one step).
void adam_update(std::vector<float>& param, const std::vector<float>& grad,
                 std::vector<float>& m, std::vector<float>& v, int64_t t,
                 float lr);

void sgd_update(std::vector<float>& param, const std::vector<float>& grad,
                float lr);

struct TrainResult {
  NetworkParams params;
  TrainHistory history;
};

// Invoked after each epoch with the 1-based epoch number.
using EpochCallback = std::function<void(int, const EpochStats&)>;

// Checked after each epoch's stats are recorded; returning true ends the run
// early with the history collected so far.
using StopPredicate = std::function<bool(const EpochStats&)>;

// Trains from a fresh cfg.seed initialization. Augmentation is applied up
// front when cfg.augment. Single-threaded and fully deterministic given
// (spec, data, cfg). A non-finite batch loss raises DivergenceError naming
// the epoch and batch.
TrainResult train(const NetworkSpec& spec, const LabeledDataset& data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {},
                  const StopPredicate& stop = {});

// Infer-phase pass over the whole set; predicted label 1 iff logit > 0
// (sigmoid > 0.5).
EvalResult evaluate(const NetworkSpec& spec, const NetworkParams& params,
                    const LabeledDataset& data, int eval_batch_size = 32);

}  // namespace scbnet
