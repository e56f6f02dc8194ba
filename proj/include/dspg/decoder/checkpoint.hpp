#pragma once

#include <filesystem>
#include <memory>

#include "dspg/cli/container.hpp"
#include "dspg/cli/run_config.hpp"
#include "dspg/decoder/model.hpp"
#include "dspg/decoder/trainer.hpp"

namespace dspg::decoder {

// Container chunks: "config" (full RunConfig echo), "init_seed",
// "param.<name>" for every parameter and, when a trainer is given, its
// optimizer moments, step counter, batch order and RNG state.
io::Container checkpoint_container(DsProGen& model, const io::RunConfig& cfg, std::uint64_t init_seed,
                                   const Trainer* trainer = nullptr);
void save_checkpoint(const std::filesystem::path& path, DsProGen& model, const io::RunConfig& cfg,
                     std::uint64_t init_seed, const Trainer* trainer = nullptr);

struct LoadedCheckpoint {
  io::RunConfig config;
  std::unique_ptr<DsProGen> model;
  io::Container container;  // kept so a trainer can restore its state
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
// Copies parameters from a container into an existing model; every name and
// shape must match.
void load_parameters(const io::Container& c, DsProGen& model);

// ConfigError listing every model-shaping key on which the two differ.
void require_compatible(const io::RunConfig& saved, const io::RunConfig& requested);

}  // namespace dspg::decoder
