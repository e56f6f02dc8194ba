#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dspg/cli/container.hpp"
#include "dspg/cli/run_config.hpp"
#include "dspg/decoder/model.hpp"

namespace dspg::decoder {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t total_steps = 1;
  std::size_t batch = 16;
  double warmup_frac = 0.05;
  double clip = 1.0;
  std::uint64_t seed = 0;
  Branch branch = Branch::full;
  std::size_t threads = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// steps > 0 wins; otherwise epochs * ceil(dataset / batch).
TrainConfig train_config(const io::RunConfig& cfg, std::size_t dataset_size);

// Linear warm-up from 0 to peak over the first warmup_frac of the run, then
// cosine decay to 0 at total_steps.
double learning_rate(std::size_t step, std::size_t total_steps, double peak, double warmup_frac);

// Teacher-forced cross-entropy over the token positions; prefix rows are
// masked out of the loss. Returns a [1] mean over T targets.
numerics::Var sequence_loss(numerics::Tape& tape, DsProGen& model, const PreparedProtein& protein, Branch branch,
                            numerics::Rng* dropout_rng = nullptr);
// Row targets and mask matching sequence_loss, for an L-row prefix.
void loss_targets(const PreparedProtein& protein, std::vector<int>& targets, std::vector<std::uint8_t>& mask);

struct StepResult {
  std::size_t step = 0;  // zero-based index of the step just taken
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

// Adam with global-norm clipping over shuffled mini-batches. Every source of
// randomness is seeded from TrainConfig::seed, and gradient accumulation runs
// in protein order, so results do not depend on the thread count.
class Trainer {
 public:
  Trainer(DsProGen& model, const std::vector<PreparedProtein>& data, const TrainConfig& cfg);

  // Throws DivergenceError, leaving parameters and optimizer state untouched,
  // when the loss or gradient is not finite.
  StepResult step();
  std::size_t steps_done() const { return step_; }
  bool finished() const { return step_ >= cfg_.total_steps; }
  const TrainConfig& config() const { return cfg_; }

  void save_state(io::Container& out) const;
  void load_state(const io::Container& in);

 private:
  std::vector<std::size_t> next_batch();

  DsProGen& model_;
  const std::vector<PreparedProtein>& data_;
  TrainConfig cfg_;
  numerics::ParamList params_;  // trainable only
  std::vector<std::vector<float>> m_, v_;
  std::size_t step_ = 0;
  numerics::Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace dspg::decoder
