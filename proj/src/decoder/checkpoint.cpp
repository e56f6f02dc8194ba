#include "dspg/decoder/checkpoint.hpp"

#include "dspg/error.hpp"

namespace dspg::decoder {

io::Container checkpoint_container(DsProGen& model, const io::RunConfig& cfg, std::uint64_t init_seed,
                                   const Trainer* trainer) {
  io::Container c;
  c.put_string("config", cfg.to_text());
  c.put_u64("init_seed", {1}, std::span(&init_seed, 1));
  for (const auto& p : model.parameters()) c.put_f32("param." + p.name, *p.tensor);
  if (trainer) trainer->save_state(c);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, DsProGen& model, const io::RunConfig& cfg,
                     std::uint64_t init_seed, const Trainer* trainer) {
  checkpoint_container(model, cfg, init_seed, trainer).write(path);
}

void load_parameters(const io::Container& c, DsProGen& model) {
  for (auto& p : model.parameters()) {
    const std::string key = "param." + p.name;
    const numerics::Tensor t = c.get_f32(key);
    if (t.shape() != p.tensor->shape()) {
      throw ConfigError("checkpoint parameter " + p.name + " has shape " + numerics::shape_string(t.shape()) +
                        ", model expects " + numerics::shape_string(p.tensor->shape()));
    }
    std::copy(t.data().begin(), t.data().end(), p.tensor->data().begin());
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  LoadedCheckpoint out;
  out.container = io::Container::read(path);
  out.config = io::RunConfig::parse(out.container.get_string("config"));
  const std::uint64_t seed = out.container.get_u64("init_seed").at(0);
  out.model = std::make_unique<DsProGen>(model_config(out.config), seed);
  load_parameters(out.container, *out.model);
  return out;
}

void require_compatible(const io::RunConfig& saved, const io::RunConfig& requested) {
  std::string diff;
  for (const auto& k : io::RunConfig::model_keys()) {
    if (saved.get(k) != requested.get(k)) {
      diff += (diff.empty() ? "" : ", ") + k + " (checkpoint " + saved.get(k) + ", requested " + requested.get(k) + ")";
    }
  }
  if (!diff.empty()) throw ConfigError("config does not match checkpoint: " + diff);
}

}  // namespace dspg::decoder
