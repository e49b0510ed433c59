#include "scbnet/train.hpp"

#include <chrono>
#include <cmath>

#include "scbnet/errors.hpp"
#include "scbnet/layers.hpp"

namespace scbnet {

Optimizer optimizer_from_name(const std::string& name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd") return Optimizer::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

const char* optimizer_name(Optimizer opt) {
  return opt == Optimizer::adam ? "adam" : "sgd";
}

void TrainConfig::validate() const {
  if (batch_size < 1) {
    throw ConfigError("batch_size must be >= 1, got " +
                      std::to_string(batch_size));
  }
  if (epochs < 1) {
    throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
  }
  if (!(learning_rate >= 0.0f) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
}

void adam_update(std::vector<float>& param, const std::vector<float>& grad,
                 std::vector<float>& m, std::vector<float>& v, int64_t t,
                 float lr) {
  constexpr float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
  if (param.size() != grad.size() || m.size() != param.size() ||
      v.size() != param.size()) {
    throw ShapeError("adam update: array length mismatch");
  }
  const float bc1 = 1.0f - std::pow(beta1, static_cast<float>(t));
  const float bc2 = 1.0f - std::pow(beta2, static_cast<float>(t));
  for (size_t i = 0; i < param.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * grad[i] * grad[i];
    const float mhat = m[i] / bc1;
    const float vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void sgd_update(std::vector<float>& param, const std::vector<float>& grad,
                float lr) {
  if (param.size() != grad.size()) {
    throw ShapeError("sgd update: array length mismatch");
  }
  for (size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
}

namespace {

// Trainable arrays of params and grads share the visit order, so the two
// pointer lists line up index for index.
std::vector<std::vector<float>*> trainable_arrays(NetworkParams& params) {
  std::vector<std::vector<float>*> out;
  for_each_array(params,
                 [&out](const ParamArrayInfo& info, std::vector<float>& v) {
                   if (info.trainable) out.push_back(&v);
                 });
  return out;
}

double dataset_accuracy(const NetworkSpec& spec, const NetworkParams& params,
                        const LabeledDataset& data, int eval_batch_size) {
  return evaluate(spec, params, data, eval_batch_size).accuracy;
}

}  // namespace

TrainResult train(const NetworkSpec& spec, const LabeledDataset& data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch,
                  const StopPredicate& stop) {
  cfg.validate();
  spec.validate();
  if (data.samples.empty()) {
    throw ConfigError("training dataset is empty");
  }
  LabeledDataset augmented;
  if (cfg.augment) augmented = augment(data);
  const LabeledDataset& used = cfg.augment ? augmented : data;

  TrainResult result;
  result.params = init_params<float>(spec, cfg.seed);
  NetworkParams& params = result.params;

  auto arrays = trainable_arrays(params);
  AdamState adam;
  if (cfg.optimizer == Optimizer::adam) {
    adam.m.resize(arrays.size());
    adam.v.resize(arrays.size());
    for (size_t i = 0; i < arrays.size(); ++i) {
      adam.m[i].assign(arrays[i]->size(), 0.0f);
      adam.v[i].assign(arrays[i]->size(), 0.0f);
    }
  }

  BatchIterator batches(used, cfg.batch_size, cfg.seed);
  GradientTape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    batches.start_epoch(epoch);
    Batch batch;
    double loss_sum = 0.0;
    int batch_count = 0;
    while (batches.next(batch)) {
      const Tensor4 logits =
          network_train_forward(spec, params, batch.pixels, tape);
      const auto bce = sigmoid_bce_batch(logits, batch.labels);
      if (!std::isfinite(bce.mean_loss)) {
        throw DivergenceError("non-finite loss at epoch " +
                              std::to_string(epoch + 1) + ", batch " +
                              std::to_string(batch_count + 1));
      }
      loss_sum += bce.mean_loss;
      batch_count += 1;
      auto back = network_backward(spec, params, tape, bce.dlogits);
      auto grad_arrays = trainable_arrays(back.grads);
      if (cfg.optimizer == Optimizer::adam) {
        adam.t += 1;
        for (size_t i = 0; i < arrays.size(); ++i) {
          adam_update(*arrays[i], *grad_arrays[i], adam.m[i], adam.v[i],
                      adam.t, cfg.learning_rate);
        }
      } else {
        for (size_t i = 0; i < arrays.size(); ++i) {
          sgd_update(*arrays[i], *grad_arrays[i], cfg.learning_rate);
        }
      }
    }
    EpochStats stats;
    stats.mean_loss = static_cast<float>(loss_sum / batch_count);
    stats.train_accuracy = dataset_accuracy(spec, params, used, cfg.batch_size);
    stats.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    result.history.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch + 1, stats);
    if (stop && stop(stats)) break;
  }
  return result;
}

EvalResult evaluate(const NetworkSpec& spec, const NetworkParams& params,
                    const LabeledDataset& data, int eval_batch_size) {
  if (data.samples.empty()) {
    throw ConfigError("evaluation dataset is empty");
  }
  if (eval_batch_size < 1) {
    throw ConfigError("evaluation batch size must be >= 1");
  }
  EvalResult r;
  r.n = static_cast<int>(data.size());
  std::vector<size_t> indices;
  for (size_t start = 0; start < data.size(); start += eval_batch_size) {
    const size_t end = std::min(start + eval_batch_size, data.size());
    indices.resize(end - start);
    for (size_t i = start; i < end; ++i) indices[i - start] = i;
    const Batch batch = gather_batch(data, indices);
    const Tensor4 logits = network_infer(spec, params, batch.pixels);
    for (int i = 0; i < logits.n; ++i) {
      const int pred = logits.data[i] > 0.0f ? 1 : 0;
      const int truth = batch.labels[i];
      if (truth == 1) {
        (pred == 1 ? r.tp : r.fn) += 1;
      } else {
        (pred == 0 ? r.tn : r.fp) += 1;
      }
    }
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / r.n;
  return r;
}

}  // namespace scbnet
