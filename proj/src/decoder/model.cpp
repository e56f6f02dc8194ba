#include "dspg/decoder/model.hpp"

#include <cmath>

#include "dspg/error.hpp"
#include "dspg/structure_io/vocab.hpp"

namespace dspg::decoder {

using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

Branch parse_branch(const std::string& name) {
  if (name == "full") return Branch::full;
  if (name == "backbone") return Branch::backbone;
  if (name == "surface") return Branch::surface;
  throw ConfigError("unknown branch '" + name + "'");
}

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::full: return "full";
    case Branch::backbone: return "backbone";
    case Branch::surface: return "surface";
  }
  return "?";
}

ModelConfig model_config(const io::RunConfig& c) {
  ModelConfig m;
  m.backbone = {c.d_s, c.d_v, c.h_v, c.gvp_layers, c.h_s, c.enc_layers, c.enc_heads, c.ffn_mult, c.dropout};
  m.surface = {c.g, c.K, c.d_surf, c.h_g, c.h_s, c.surf_layers, c.surf_heads, c.ffn_mult, c.fuse_blocks, c.dropout};
  m.decoder = {c.h_s, c.dec_layers, c.dec_heads, c.ffn_mult, c.max_len, structure::Vocabulary::kSize, c.dropout,
               c.prefix_lm};
  m.freeze_backbone = c.freeze_backbone;
  return m;
}

Var fuse(Var b, Var s) {
  if (b.shape() != s.shape()) {
    throw DimensionError("fuse: backbone embedding " + numerics::shape_string(b.shape()) +
                         " and surface embedding " + numerics::shape_string(s.shape()) + " differ");
  }
  return numerics::add(b, s);
}

Tensor fuse(const Tensor& b, const Tensor& s) {
  Tape tape(numerics::Precision::f32, false);
  return tape.value(fuse(tape.constant(b), tape.constant(s)));
}

Decoder::Decoder(const DecoderConfig& cfg, numerics::Rng& rng)
    : cfg_(cfg),
      token_embedding_(numerics::make_param({cfg.vocab, cfg.hidden}, rng, 0.02)),
      positions_(numerics::make_param({cfg.max_len, cfg.hidden}, rng, 0.02)),
      transformer_({cfg.hidden, cfg.heads, cfg.ffn_mult, cfg.layers, cfg.dropout}, rng),
      out_(cfg.hidden, cfg.vocab, rng, 0.02) {}

Var Decoder::forward(Tape& tape, Var prefix, std::span<const int> tokens, numerics::Rng* dropout_rng) {
  if (prefix.shape().size() != 2 || prefix.dim(1) != cfg_.hidden) {
    throw DimensionError("decoder prefix must be [L, " + std::to_string(cfg_.hidden) + "], got " +
                         numerics::shape_string(prefix.shape()));
  }
  const std::size_t l = prefix.dim(0), total = l + tokens.size();
  if (total > cfg_.max_len) {
    throw ContextLengthError("prefix " + std::to_string(l) + " + tokens " + std::to_string(tokens.size()) +
                             " exceeds max_len " + std::to_string(cfg_.max_len));
  }
  Var x = prefix;
  if (!tokens.empty()) x = numerics::concat_rows(prefix, numerics::gather_rows(tape.param(token_embedding_), tokens));
  x = numerics::add(x, numerics::slice_rows(tape.param(positions_), 0, total));
  numerics::AttentionMask mask{true, cfg_.prefix_lm ? l : 0};
  Var h = transformer_.forward(tape, x, mask, dropout_rng);
  return out_.forward(tape, h);
}

void Decoder::collect(const std::string& prefix, numerics::ParamList& out) {
  out.push_back({prefix + ".token_embedding", &token_embedding_});
  out.push_back({prefix + ".positions", &positions_});
  transformer_.collect(prefix + ".transformer", out);
  out_.collect(prefix + ".out", out);
}

DsProGen::DsProGen(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.backbone.hidden != cfg.decoder.hidden || cfg.surface.hidden != cfg.decoder.hidden) {
    throw ConfigError("backbone, surface and decoder widths must all equal h_s");
  }
  numerics::Rng b(numerics::derive_seed(seed, "init.backbone"));
  numerics::Rng s(numerics::derive_seed(seed, "init.surface"));
  numerics::Rng d(numerics::derive_seed(seed, "init.decoder"));
  backbone_ = backbone::BackboneEncoder(cfg.backbone, b);
  surface_ = surface_encoder::SurfaceEncoder(cfg.surface, s);
  decoder_ = Decoder(cfg.decoder, d);
  if (cfg.freeze_backbone) {
    numerics::ParamList frozen;
    backbone_.collect("backbone", frozen);
    for (auto& p : frozen) p.tensor->set_requires_grad(false);
  }
}

Var DsProGen::prefix(Tape& tape, const PreparedProtein& protein, Branch branch, numerics::Rng* dropout_rng) {
  const std::size_t l = protein.length();
  switch (branch) {
    case Branch::backbone:
      return backbone_.forward(tape, protein.geometry, dropout_rng);
    case Branch::surface:
      return surface_.forward(tape, protein.surface, l, dropout_rng);
    case Branch::full:
      break;
  }
  Var b = backbone_.forward(tape, protein.geometry, dropout_rng);
  Var s = surface_.forward(tape, protein.surface, l, dropout_rng);
  return fuse(b, s);
}

Var DsProGen::forward(Tape& tape, const PreparedProtein& protein, Branch branch, numerics::Rng* dropout_rng) {
  Var r = prefix(tape, protein, branch, dropout_rng);
  const std::span<const int> inputs(protein.tokens.data(), protein.tokens.size() - 1);
  return decoder_.forward(tape, r, inputs, dropout_rng);
}

numerics::ParamList DsProGen::parameters() {
  numerics::ParamList out;
  backbone_.collect("backbone", out);
  surface_.collect("surface", out);
  decoder_.collect("decoder", out);
  return out;
}

}  // namespace dspg::decoder
