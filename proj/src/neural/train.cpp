#include "rfsep/neural/train.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rfsep/parallel.hpp"

namespace rfsep::nn {

template <class T>
AdamState<T> AdamState<T>::zeros(const ParameterSet<T>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.shape);
    s.v.emplace_back(p.value.shape);
  }
  return s;
}

template <class T>
void adam_step(ParameterSet<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const AdamHyper& hyper) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw ParameterError("Adam: gradient/state count does not match parameter count");
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (const T g : grads[i].data)
      if (!std::isfinite(static_cast<double>(g)))
        throw NumericalError("non-finite gradient in parameter '" + params[i].name + "'");
  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<T>(hyper.beta1);
  const auto b2 = static_cast<T>(hyper.beta2);
  const auto step_size = static_cast<T>(hyper.learning_rate / bc1);
  const auto inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const auto eps = static_cast<T>(hyper.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].value.data;
    auto& m = state.m[i].data;
    auto& v = state.v[i].data;
    const auto& g = grads[i].data;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      w[k] -= step_size * m[k] / (std::sqrt(v[k]) * inv_sqrt_bc2 + eps);
    }
  }
}

MixtureExample augment(const MixtureExample& example, std::uint64_t seed) {
  MixtureExample out = example;
  const std::size_t N = example.b.size();
  if (N == 0) return out;
  Rng rng(seed);
  const std::size_t tau = rng() % N;
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  const cdouble rot = std::polar(1.0, uni(rng));
  out.b = circular_shift(example.b, tau);
  for (std::size_t n = 0; n < N; ++n) {
    out.b[n] *= rot;
    out.y[n] = out.s[n] + out.b[n];
  }
  return out;
}

namespace {

template <class T>
struct ExampleGrad {
  double loss = 0.0;
  std::vector<Tensor<T>> grads;
};

template <class T>
ExampleGrad<T> example_gradient(const SeparatorNet<T>& model, const MixtureExample& ex) {
  Tape<T> tape(&model.params());
  const auto x = tape.input(to_channels<T>(ex.y));
  const auto target = to_channels<T>(ex.s);
  const auto loss = mse(tape, model.forward(tape, x), target);
  ExampleGrad<T> r;
  r.loss = static_cast<double>(tape.value(loss).data[0]);
  tape.backward(loss);
  r.grads = tape.take_param_grads();
  return r;
}

}  // namespace

template <class T>
double validation_mse(const SeparatorNet<T>& model, const std::vector<MixtureExample>& examples, unsigned threads) {
  if (examples.empty()) throw ParameterError("validation set is empty");
  std::vector<double> losses(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    const auto pred = model.run(to_channels<T>(examples[i].y));
    losses[i] = mse_loss(pred, to_channels<T>(examples[i].s)).loss;
  });
  double acc = 0.0;
  for (double l : losses) acc += l;
  return acc / static_cast<double>(losses.size());
}

template <class T>
TrainResult train(SeparatorNet<T>& model, const ExampleGenerator& train_examples, const ExampleGenerator& validation,
                  const TrainConfig& cfg, const std::function<void(const LossRecord&)>& on_epoch) {
  if (cfg.batch_size == 0 || cfg.max_steps == 0 || cfg.eval_every == 0 || cfg.validation_examples == 0 ||
      !(cfg.learning_rate > 0.0))
    throw ParameterError("training config values must all be positive");

  std::vector<MixtureExample> val_set;
  for (std::size_t i = 0; i < cfg.validation_examples; ++i)
    val_set.push_back(validation(derive_seed(cfg.seed, 0x7a11d, i)));

  auto state = AdamState<T>::zeros(model.params());
  AdamHyper hyper;
  TrainResult result;
  result.best_validation = validation_mse(model, val_set, cfg.threads);
  auto best_params = model.params();
  std::size_t stale = 0;
  double epoch_loss = 0.0;
  std::size_t epoch_steps = 0;

  std::vector<ExampleGrad<T>> per_example(cfg.batch_size);
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    parallel_for(cfg.batch_size, cfg.threads, [&](std::size_t j) {
      const auto seed = derive_seed(cfg.seed, 0x7a1, step, j);
      auto ex = train_examples(seed);
      if (cfg.augment) ex = augment(ex, derive_seed(seed, 0xa6));
      per_example[j] = example_gradient(model, ex);
    });
    double batch_loss = 0.0;
    auto grads = std::move(per_example[0].grads);
    batch_loss += per_example[0].loss;
    for (std::size_t j = 1; j < cfg.batch_size; ++j) {
      batch_loss += per_example[j].loss;
      for (std::size_t p = 0; p < grads.size(); ++p)
        for (std::size_t k = 0; k < grads[p].size(); ++k) grads[p].data[k] += per_example[j].grads[p].data[k];
    }
    const T inv_b = T(1) / static_cast<T>(cfg.batch_size);
    for (auto& g : grads)
      for (auto& v : g.data) v *= inv_b;
    batch_loss /= static_cast<double>(cfg.batch_size);
    if (!std::isfinite(batch_loss)) {
      std::ostringstream os;
      os << "training diverged at step " << step << ": loss is " << batch_loss;
      throw NumericalError(os.str());
    }

    const double progress = static_cast<double>(step) / static_cast<double>(cfg.max_steps);
    hyper.learning_rate = cfg.learning_rate * (cfg.final_lr_fraction + (1.0 - cfg.final_lr_fraction) * 0.5 *
                                                                           (1.0 + std::cos(std::numbers::pi * progress)));
    adam_step(model.params(), grads, state, hyper);
    epoch_loss += batch_loss;
    ++epoch_steps;
    result.steps = step + 1;

    if (epoch_steps == cfg.eval_every || step + 1 == cfg.max_steps) {
      LossRecord rec;
      rec.epoch = result.history.size();
      rec.step = step + 1;
      rec.train_loss = epoch_loss / static_cast<double>(epoch_steps);
      rec.validation_loss = validation_mse(model, val_set, cfg.threads);
      if (!std::isfinite(rec.validation_loss))
        throw NumericalError("validation loss became non-finite at step " + std::to_string(step + 1));
      result.history.push_back(rec);
      if (on_epoch) on_epoch(rec);
      epoch_loss = 0.0;
      epoch_steps = 0;
      if (rec.validation_loss < result.best_validation * (1.0 - cfg.min_improvement)) {
        result.best_validation = rec.validation_loss;
        best_params = model.params();
        stale = 0;
      } else {
        if (rec.validation_loss < result.best_validation) {
          result.best_validation = rec.validation_loss;
          best_params = model.params();
        }
        if (++stale >= cfg.patience) {
          result.early_stopped = true;
          break;
        }
      }
    }
  }
  model.params() = best_params;
  return result;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(ParameterSet<float>&, const std::vector<Tensor<float>>&, AdamState<float>&, const AdamHyper&);
template void adam_step(ParameterSet<double>&, const std::vector<Tensor<double>>&, AdamState<double>&,
                        const AdamHyper&);
template double validation_mse(const SeparatorNet<float>&, const std::vector<MixtureExample>&, unsigned);
template double validation_mse(const SeparatorNet<double>&, const std::vector<MixtureExample>&, unsigned);
template TrainResult train(SeparatorNet<float>&, const ExampleGenerator&, const ExampleGenerator&, const TrainConfig&,
                           const std::function<void(const LossRecord&)>&);
template TrainResult train(SeparatorNet<double>&, const ExampleGenerator&, const ExampleGenerator&,
                           const TrainConfig&, const std::function<void(const LossRecord&)>&);

}  // namespace rfsep::nn
