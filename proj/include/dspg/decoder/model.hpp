#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dspg/backbone/encoder.hpp"
#include "dspg/cli/run_config.hpp"
#include "dspg/numerics/layers.hpp"
#include "dspg/surface_encoder/encoder.hpp"

namespace dspg::decoder {

struct DecoderConfig {
  std::size_t hidden = 256;
  std::size_t layers = 4;
  std::size_t heads = 8;
  std::size_t ffn_mult = 4;
  std::size_t max_len = 1024;
  std::size_t vocab = 23;
  double dropout = 0.0;
  bool prefix_lm = false;  // prefix rows attend to each other bidirectionally
};

// Which structural branches feed the prefix. Ablations drop a branch's
// contribution but keep its parameters, so checkpoints stay compatible.
enum class Branch { full, backbone, surface };
Branch parse_branch(const std::string& name);
const char* branch_name(Branch b);

struct ModelConfig {
  backbone::BackboneConfig backbone;
  surface_encoder::SurfaceEncoderConfig surface;
  DecoderConfig decoder;
  bool freeze_backbone = false;
};

ModelConfig model_config(const io::RunConfig& cfg);

// R = B + S. Shapes must match exactly.
numerics::Var fuse(numerics::Var b, numerics::Var s);
numerics::Tensor fuse(const numerics::Tensor& b, const numerics::Tensor& s);

// Causal Transformer over [R ; token embeddings] with one learned position
// table spanning prefix and tokens, projected to vocabulary logits.
class Decoder {
 public:
  Decoder() = default;
  Decoder(const DecoderConfig& cfg, numerics::Rng& rng);

  // prefix [L, h], tokens T ids -> logits [(L+T), V]
  numerics::Var forward(numerics::Tape& tape, numerics::Var prefix, std::span<const int> tokens,
                        numerics::Rng* dropout_rng = nullptr);
  void collect(const std::string& prefix, numerics::ParamList& out);
  const DecoderConfig& config() const { return cfg_; }

 private:
  DecoderConfig cfg_;
  numerics::Tensor token_embedding_;  // [V, h]
  numerics::Tensor positions_;        // [max_len, h]
  numerics::Transformer transformer_;
  numerics::Linear out_;
};

// Per-protein model inputs, computed once from a cache.
struct PreparedProtein {
  std::string id;
  std::string sequence;
  backbone::ResidueGeometry geometry;
  surface_encoder::SurfaceInputs surface;
  std::vector<int> tokens;  // BOS, residues..., EOS
  std::size_t length() const { return sequence.size(); }
};

class DsProGen {
 public:
  DsProGen(const ModelConfig& cfg, std::uint64_t seed);

  numerics::Var prefix(numerics::Tape& tape, const PreparedProtein& protein, Branch branch,
                       numerics::Rng* dropout_rng = nullptr);
  // Teacher-forced logits for decoder inputs BOS, a_1 .. a_T.
  numerics::Var forward(numerics::Tape& tape, const PreparedProtein& protein, Branch branch,
                        numerics::Rng* dropout_rng = nullptr);

  numerics::ParamList parameters();
  const ModelConfig& config() const { return cfg_; }
  backbone::BackboneEncoder& backbone() { return backbone_; }
  surface_encoder::SurfaceEncoder& surface() { return surface_; }
  Decoder& decoder() { return decoder_; }

 private:
  ModelConfig cfg_;
  backbone::BackboneEncoder backbone_;
  surface_encoder::SurfaceEncoder surface_;
  Decoder decoder_;
};

}  // namespace dspg::decoder
