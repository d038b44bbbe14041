#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rfsep/mixtures.hpp"
#include "rfsep/neural/models.hpp"

namespace rfsep::nn {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  std::uint64_t step = 0;

  static AdamState zeros(const ParameterSet<T>& params);
};

/// One bias-corrected Adam update. Throws NumericalError on a non-finite gradient before touching
/// any parameter.
template <class T>
void adam_step(ParameterSet<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const AdamHyper& hyper);

/// b' = circular_shift(b, tau) e^{j theta}, y' = s + b'; s and bits untouched.
MixtureExample augment(const MixtureExample& example, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t max_steps = 2000;
  std::size_t eval_every = 100;  ///< steps per epoch; validation runs at each epoch end
  std::size_t patience = 5;      ///< epochs without >= min_improvement relative gain
  double min_improvement = 0.01;
  std::size_t validation_examples = 16;
  std::uint64_t seed = 1;
  bool augment = true;
  /// Cosine decay of the learning rate to lr*final_lr_fraction over max_steps; 1 disables it.
  double final_lr_fraction = 1.0;
  unsigned threads = 1;
};

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  ///< optimizer steps completed
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  std::vector<LossRecord> history;
  std::size_t steps = 0;
  double best_validation = 0.0;
  bool early_stopped = false;
};

/// Produces a training example (s and b kept separate so augmentation can act on b) from a seed.
using ExampleGenerator = std::function<MixtureExample(std::uint64_t seed)>;

/// Mean MSE of the model over a fixed list of examples (2-channel real loss).
template <class T>
double validation_mse(const SeparatorNet<T>& model, const std::vector<MixtureExample>& examples, unsigned threads = 1);

/// Minibatch Adam on the MSE loss. Per-example gradients are summed in batch order, so any thread
/// count gives bit-identical results. Training examples come from seeds derived from (cfg.seed, step,
/// index); validation examples from a disjoint derived stream. The best-validation weights are kept.
template <class T>
TrainResult train(SeparatorNet<T>& model, const ExampleGenerator& train_examples, const ExampleGenerator& validation,
                  const TrainConfig& cfg, const std::function<void(const LossRecord&)>& on_epoch = {});

}  // namespace rfsep::nn
