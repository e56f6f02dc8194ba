#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dspg::io {

// Flat run configuration. Text form is `key = value` per line with `#`
// comments; unknown keys are rejected so typos never pass silently.
struct RunConfig {
  // model
  std::size_t h_s = 256;
  std::size_t d_s = 128;
  std::size_t d_v = 16;
  std::size_t h_v = 16;
  std::size_t gvp_layers = 4;
  std::size_t enc_layers = 2;
  std::size_t enc_heads = 8;
  std::size_t dec_layers = 4;
  std::size_t dec_heads = 8;
  std::size_t ffn_mult = 4;
  std::size_t max_len = 1024;
  double dropout = 0.0;
  bool prefix_lm = false;
  bool freeze_backbone = false;
  // surface encoder
  std::size_t g = 32;
  std::size_t K = 16;
  std::size_t d_surf = 64;
  std::size_t h_g = 512;
  std::size_t surf_layers = 2;
  std::size_t surf_heads = 4;
  std::size_t fuse_blocks = 2;
  // surface builder
  double tau = 0.3;
  std::size_t point_budget = 8192;
  double radius_C = 1.70;
  double radius_N = 1.55;
  double radius_O = 1.52;
  double radius_S = 1.80;
  double radius_Se = 1.90;
  double radius_H = 1.10;
  // training
  double lr = 1e-4;
  std::size_t epochs = 1;
  std::size_t steps = 0;  // when > 0, overrides epochs
  std::size_t batch = 16;
  double warmup_frac = 0.05;
  double clip = 1.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string branch = "full";  // full | backbone | surface
  // sampling
  double temperature = 0.1;
  std::size_t top_k = 10;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  // Canonical `key = value` dump of every key, in declaration order.
  std::string to_text() const;
  // Checks ranges and cross-field constraints; throws ConfigError.
  void validate() const;

  static const std::vector<std::string>& keys();
  // Keys that fix parameter shapes or model semantics; checkpoints refuse to
  // load under a config that differs in any of them.
  static const std::vector<std::string>& model_keys();
  static const std::vector<std::string>& surface_keys();
};

}  // namespace dspg::io
