#pragma once

#include <string>

#include "crfn/autodiff.hpp"

namespace crfn {

// crfn:   bidirectional residual interaction with the learnable fusion
//         controller (residual scaling + layer norm + tanh)
// no_fc:  same interaction, controller removed (no norm, no scaling)
// concat: plain concatenation baseline
// gated:  scalar sigmoid gate weighting the two streams
enum class FusionVariant { Crfn, NoFc, Concat, Gated };

FusionVariant fusion_variant_from_string(const std::string& s);
const char* fusion_variant_name(FusionVariant v);

// Learnable pieces of one fusion head. Which pointers are non-null depends
// on the variant; the joint projection exists for all of them.
struct FusionParams {
  FusionVariant variant = FusionVariant::Crfn;
  int d = 64;
  int d_out = 128;

  // modality transforms into the shared interaction space
  ad::Value* u_v_w = nullptr;
  ad::Value* u_v_b = nullptr;
  ad::Value* u_a_w = nullptr;
  ad::Value* u_a_b = nullptr;

  // residual-path normalization and scaling (the fusion controller)
  ad::Value* ln_v_gain = nullptr;
  ad::Value* ln_v_bias = nullptr;
  ad::Value* ln_a_gain = nullptr;
  ad::Value* ln_a_bias = nullptr;
  ad::Value* beta_v = nullptr;
  ad::Value* beta_a = nullptr;

  // scalar gate (gated baseline)
  ad::Value* gate_w = nullptr;
  ad::Value* gate_b = nullptr;

  // post-fusion joint projection 2d -> d_out
  ad::Value* proj_w = nullptr;
  ad::Value* proj_b = nullptr;
};

FusionParams build_fusion_params(ad::ParamStore& store, FusionVariant variant,
                                 int d, int d_out, double beta_init, Rng& rng,
                                 const std::string& prefix = "fusion");

struct FusedPair {
  ad::Value* v_hat = nullptr;
  ad::Value* a_hat = nullptr;
  ad::Value* interaction = nullptr;  // null for concat/gated
  ad::Value* joint = nullptr;
};

// tanh(W x + b) with the selected modality's transform ('v' or 'a').
ad::Value* transform_modality(ad::Tape& t, ad::Value* x, char which,
                              const FusionParams& p);

// Shared residual signal: elementwise average of the transformed features.
ad::Value* interaction_vector(ad::Tape& t, ad::Value* u_v, ad::Value* u_a);

FusedPair crfn_fuse(ad::Tape& t, ad::Value* v, ad::Value* a,
                    const FusionParams& p);
FusedPair no_fc_fuse(ad::Tape& t, ad::Value* v, ad::Value* a,
                     const FusionParams& p);
FusedPair concat_fuse(ad::Tape& t, ad::Value* v, ad::Value* a,
                      const FusionParams& p);
FusedPair gated_fuse(ad::Tape& t, ad::Value* v, ad::Value* a,
                     const FusionParams& p);

// Dispatch on p.variant.
FusedPair fuse(ad::Tape& t, ad::Value* v, ad::Value* a, const FusionParams& p);

}  // namespace crfn
