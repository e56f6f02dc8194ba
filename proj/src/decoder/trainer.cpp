#include "dspg/decoder/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <thread>

#include "dspg/error.hpp"
#include "dspg/structure_io/vocab.hpp"

namespace dspg::decoder {

using numerics::Tape;
using numerics::Var;

TrainConfig train_config(const io::RunConfig& c, std::size_t dataset_size) {
  TrainConfig t;
  t.lr = c.lr;
  t.batch = c.batch;
  t.warmup_frac = c.warmup_frac;
  t.clip = c.clip;
  t.seed = c.seed;
  t.branch = parse_branch(c.branch);
  t.threads = c.threads;
  const std::size_t per_epoch = (dataset_size + c.batch - 1) / c.batch;
  t.total_steps = c.steps > 0 ? c.steps : std::max<std::size_t>(1, c.epochs * per_epoch);
  return t;
}

double learning_rate(std::size_t step, std::size_t total_steps, double peak, double warmup_frac) {
  if (total_steps == 0) return 0.0;
  const double warmup = std::round(warmup_frac * static_cast<double>(total_steps));
  const double s = static_cast<double>(step);
  if (s < warmup) return peak * s / warmup;
  const double span = static_cast<double>(total_steps) - warmup;
  if (span <= 0.0) return peak;
  const double progress = std::min(1.0, (s - warmup) / span);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void loss_targets(const PreparedProtein& protein, std::vector<int>& targets, std::vector<std::uint8_t>& mask) {
  const std::size_t l = protein.length(), t = protein.tokens.size() - 1;
  targets.assign(l + t, 0);
  mask.assign(l + t, 0);
  for (std::size_t i = 0; i < t; ++i) {
    targets[l + i] = protein.tokens[i + 1];
    mask[l + i] = 1;
  }
}

Var sequence_loss(Tape& tape, DsProGen& model, const PreparedProtein& protein, Branch branch,
                  numerics::Rng* dropout_rng) {
  std::vector<int> targets;
  std::vector<std::uint8_t> mask;
  loss_targets(protein, targets, mask);
  return numerics::cross_entropy(model.forward(tape, protein, branch, dropout_rng), targets, mask);
}

Trainer::Trainer(DsProGen& model, const std::vector<PreparedProtein>& data, const TrainConfig& cfg)
    : model_(model), data_(data), cfg_(cfg), rng_(numerics::derive_seed(cfg.seed, "train.order")) {
  if (data_.empty()) throw ArgumentError("training needs at least one protein");
  for (auto& p : model_.parameters()) {
    if (p.tensor->requires_grad()) params_.push_back(p);
  }
  for (auto& p : params_) {
    m_.emplace_back(p.tensor->numel(), 0.0f);
    v_.emplace_back(p.tensor->numel(), 0.0f);
  }
}

std::vector<std::size_t> Trainer::next_batch() {
  const std::size_t n = data_.size(), b = std::min(cfg_.batch, n);
  std::vector<std::size_t> out;
  while (out.size() < b) {
    if (cursor_ >= order_.size()) {
      order_.resize(n);
      for (std::size_t i = 0; i < n; ++i) order_[i] = i;
      for (std::size_t i = n; i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
      cursor_ = 0;
    }
    out.push_back(order_[cursor_++]);
  }
  return out;
}

StepResult Trainer::step() {
  if (finished()) {
    throw ArgumentError("training already ran all " + std::to_string(cfg_.total_steps) + " steps");
  }
  // Batch selection advances the order stream; keep a copy so a divergent
  // step can be rolled back completely.
  const auto saved_rng = rng_.serialize();
  const auto saved_order = order_;
  const std::size_t saved_cursor = cursor_;
  const std::vector<std::size_t> batch = next_batch();

  std::size_t tokens = 0;
  for (std::size_t i : batch) tokens += data_[i].tokens.size() - 1;

  for (auto& p : params_) p.tensor->zero_grad();
  std::vector<double> losses(batch.size());
  std::vector<std::unique_ptr<Tape>> tapes(batch.size());
  auto run = [&](std::size_t j) {
    const PreparedProtein& protein = data_[batch[j]];
    numerics::Rng dropout(numerics::derive_seed(numerics::derive_seed(cfg_.seed, step_), j));
    tapes[j] = std::make_unique<Tape>(numerics::Precision::f32, true);
    Tape& tape = *tapes[j];
    Var loss = sequence_loss(tape, model_, protein, cfg_.branch, &dropout);
    losses[j] = tape.item(loss);
    const double weight = static_cast<double>(protein.tokens.size() - 1) / static_cast<double>(tokens);
    tape.backward(numerics::scale(loss, weight));
  };
  const std::size_t workers = std::min(cfg_.threads, batch.size());
  double loss = 0.0;
  for (std::size_t start = 0; start < batch.size(); start += workers) {
    const std::size_t end = std::min(batch.size(), start + workers);
    if (end - start == 1) {
      run(start);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t j = start; j < end; ++j) pool.emplace_back(run, j);
      for (auto& t : pool) t.join();
    }
    for (std::size_t j = start; j < end; ++j) {
      tapes[j]->accumulate_param_grads();
      tapes[j].reset();
      loss += losses[j] * static_cast<double>(data_[batch[j]].tokens.size() - 1) / static_cast<double>(tokens);
    }
  }

  double norm2 = 0.0;
  for (auto& p : params_) {
    for (float g : p.tensor->grad()) norm2 += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(norm2);
  if (!std::isfinite(loss) || !std::isfinite(norm)) {
    for (auto& p : params_) p.tensor->zero_grad();
    rng_.deserialize(saved_rng);
    order_ = saved_order;
    cursor_ = saved_cursor;
    throw DivergenceError("non-finite loss at step " + std::to_string(step_));
  }
  const double clip = norm > cfg_.clip ? cfg_.clip / norm : 1.0;
  const double lr = learning_rate(step_, cfg_.total_steps, cfg_.lr, cfg_.warmup_frac);
  const double t = static_cast<double>(step_ + 1);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t), c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto data = params_[k].tensor->data();
    auto grad = params_[k].tensor->grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = static_cast<double>(grad[i]) * clip;
      const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      data[i] = static_cast<float>(data[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + cfg_.eps));
    }
    params_[k].tensor->zero_grad();
  }
  StepResult r{step_, lr, loss, norm};
  ++step_;
  return r;
}

void Trainer::save_state(io::Container& out) const {
  const std::uint64_t step = step_, cursor = cursor_;
  out.put_u64("train.step", {1}, std::span(&step, 1));
  out.put_u64("train.cursor", {1}, std::span(&cursor, 1));
  std::vector<std::uint64_t> order(order_.begin(), order_.end());
  out.put_u64("train.order", {order.size()}, order);
  out.put_string("train.rng", rng_.serialize());
  for (std::size_t k = 0; k < params_.size(); ++k) {
    out.put_f32("adam.m." + params_[k].name, params_[k].tensor->shape(), m_[k]);
    out.put_f32("adam.v." + params_[k].name, params_[k].tensor->shape(), v_[k]);
  }
}

void Trainer::load_state(const io::Container& in) {
  step_ = static_cast<std::size_t>(in.get_u64("train.step").at(0));
  cursor_ = static_cast<std::size_t>(in.get_u64("train.cursor").at(0));
  const auto order = in.get_u64("train.order");
  order_.assign(order.begin(), order.end());
  if (!order_.empty() && order_.size() != data_.size()) {
    throw ConfigError("checkpoint was trained on " + std::to_string(order_.size()) + " proteins, dataset has " +
                      std::to_string(data_.size()));
  }
  rng_.deserialize(in.get_string("train.rng"));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto m = in.get_f32("adam.m." + params_[k].name);
    const auto v = in.get_f32("adam.v." + params_[k].name);
    if (m.numel() != m_[k].size() || v.numel() != v_[k].size()) {
      throw ConfigError("optimizer state for " + params_[k].name + " has the wrong size");
    }
    m_[k].assign(m.data().begin(), m.data().end());
    v_[k].assign(v.data().begin(), v.data().end());
  }
}

}  // namespace dspg::decoder
