#include "crfn/fusion.hpp"

namespace crfn {

using ad::InitSpec;
using ad::Tape;
using ad::Value;

FusionVariant fusion_variant_from_string(const std::string& s) {
  if (s == "crfn") return FusionVariant::Crfn;
  if (s == "no_fc") return FusionVariant::NoFc;
  if (s == "concat") return FusionVariant::Concat;
  if (s == "gated") return FusionVariant::Gated;
  throw ConfigError("unknown fusion variant '" + s +
                    "' (expected crfn|no_fc|concat|gated)");
}

const char* fusion_variant_name(FusionVariant v) {
  switch (v) {
    case FusionVariant::Crfn: return "crfn";
    case FusionVariant::NoFc: return "no_fc";
    case FusionVariant::Concat: return "concat";
    case FusionVariant::Gated: return "gated";
  }
  return "?";
}

FusionParams build_fusion_params(ad::ParamStore& store, FusionVariant variant,
                                 int d, int d_out, double beta_init, Rng& rng,
                                 const std::string& prefix) {
  FusionParams p;
  p.variant = variant;
  p.d = d;
  p.d_out = d_out;
  auto name = [&](const char* suffix) { return prefix + "." + suffix; };

  if (variant == FusionVariant::Crfn || variant == FusionVariant::NoFc) {
    p.u_v_w = store.make_param(name("u_v.w"), ad::mat(d, d),
                               InitSpec::scaled_uniform(d), rng);
    p.u_v_b = store.make_param(name("u_v.b"), ad::vec(d),
                               InitSpec::constant(0), rng);
    p.u_a_w = store.make_param(name("u_a.w"), ad::mat(d, d),
                               InitSpec::scaled_uniform(d), rng);
    p.u_a_b = store.make_param(name("u_a.b"), ad::vec(d),
                               InitSpec::constant(0), rng);
  }
  if (variant == FusionVariant::Crfn) {
    p.ln_v_gain = store.make_param(name("ln_v.gain"), ad::vec(d),
                                   InitSpec::constant(1), rng);
    p.ln_v_bias = store.make_param(name("ln_v.bias"), ad::vec(d),
                                   InitSpec::constant(0), rng);
    p.ln_a_gain = store.make_param(name("ln_a.gain"), ad::vec(d),
                                   InitSpec::constant(1), rng);
    p.ln_a_bias = store.make_param(name("ln_a.bias"), ad::vec(d),
                                   InitSpec::constant(0), rng);
    p.beta_v = store.make_param(name("beta_v"), ad::vec(1),
                                InitSpec::constant(beta_init), rng);
    p.beta_a = store.make_param(name("beta_a"), ad::vec(1),
                                InitSpec::constant(beta_init), rng);
  }
  if (variant == FusionVariant::Gated) {
    p.gate_w = store.make_param(name("gate.w"), ad::mat(1, 2 * d),
                                InitSpec::scaled_uniform(2 * d), rng);
    p.gate_b = store.make_param(name("gate.b"), ad::vec(1),
                                InitSpec::constant(0), rng);
  }
  p.proj_w = store.make_param(name("proj.w"), ad::mat(d_out, 2 * d),
                              InitSpec::scaled_uniform(2 * d), rng);
  p.proj_b = store.make_param(name("proj.b"), ad::vec(d_out),
                              InitSpec::constant(0), rng);
  return p;
}

Value* transform_modality(Tape& t, Value* x, char which,
                          const FusionParams& p) {
  Value* w = which == 'v' ? p.u_v_w : p.u_a_w;
  Value* b = which == 'v' ? p.u_v_b : p.u_a_b;
  return t.tanh(t.affine(w, x, b));
}

Value* interaction_vector(Tape& t, Value* u_v, Value* u_a) {
  return t.mean_pair(u_v, u_a);
}

namespace {

Value* project_joint(Tape& t, Value* v_hat, Value* a_hat,
                     const FusionParams& p) {
  return t.affine(p.proj_w, t.concat(v_hat, a_hat), p.proj_b);
}

}  // namespace

FusedPair crfn_fuse(Tape& t, Value* v, Value* a, const FusionParams& p) {
  FusedPair out;
  out.interaction = interaction_vector(t, transform_modality(t, v, 'v', p),
                                       transform_modality(t, a, 'a', p));
  Value* v_norm = t.layer_norm(v, p.ln_v_gain, p.ln_v_bias);
  Value* a_norm = t.layer_norm(a, p.ln_a_gain, p.ln_a_bias);
  out.v_hat = t.tanh(t.add(v_norm, t.scale(p.beta_v, out.interaction)));
  out.a_hat = t.tanh(t.add(a_norm, t.scale(p.beta_a, out.interaction)));
  out.joint = project_joint(t, out.v_hat, out.a_hat, p);
  return out;
}

FusedPair no_fc_fuse(Tape& t, Value* v, Value* a, const FusionParams& p) {
  FusedPair out;
  out.interaction = interaction_vector(t, transform_modality(t, v, 'v', p),
                                       transform_modality(t, a, 'a', p));
  out.v_hat = t.tanh(t.add(v, out.interaction));
  out.a_hat = t.tanh(t.add(a, out.interaction));
  out.joint = project_joint(t, out.v_hat, out.a_hat, p);
  return out;
}

FusedPair concat_fuse(Tape& t, Value* v, Value* a, const FusionParams& p) {
  FusedPair out;
  out.v_hat = v;
  out.a_hat = a;
  out.joint = project_joint(t, v, a, p);
  return out;
}

FusedPair gated_fuse(Tape& t, Value* v, Value* a, const FusionParams& p) {
  FusedPair out;
  Value* g = t.sigmoid(t.affine(p.gate_w, t.concat(v, a), p.gate_b));
  Value* one_minus_g = t.add_scalar(t.mul_scalar(g, -1.0), 1.0);
  out.v_hat = t.scale(g, v);
  out.a_hat = t.scale(one_minus_g, a);
  out.joint = project_joint(t, out.v_hat, out.a_hat, p);
  return out;
}

FusedPair fuse(Tape& t, Value* v, Value* a, const FusionParams& p) {
  switch (p.variant) {
    case FusionVariant::Crfn: return crfn_fuse(t, v, a, p);
    case FusionVariant::NoFc: return no_fc_fuse(t, v, a, p);
    case FusionVariant::Concat: return concat_fuse(t, v, a, p);
    case FusionVariant::Gated: return gated_fuse(t, v, a, p);
  }
  throw ContractError("fuse: bad variant");
}

}  // namespace crfn
