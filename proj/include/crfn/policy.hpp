#pragma once

#include <optional>
#include <vector>

#include "crfn/agent.hpp"
#include "crfn/autodiff.hpp"
#include "crfn/fusion.hpp"
#include "crfn/gridworld.hpp"

namespace crfn {

struct PolicyDims {
  int rays = kDefaultRays;  // visual input width R
  int freq_bins = 16;       // audio bins F (input is 2F flattened)
  int d = 64;               // per-modality feature width
  int d_out = 128;          // fused feature width
  int hidden = 128;         // recurrent state width H
};

// Full navigation network: two 2-layer tanh encoders, a fusion head, one
// GRU cell and affine actor/critic heads.
struct PolicyParams {
  PolicyDims dims;
  FusionParams fusion;

  ad::Value* vis_w1 = nullptr;
  ad::Value* vis_b1 = nullptr;
  ad::Value* vis_w2 = nullptr;
  ad::Value* vis_b2 = nullptr;
  ad::Value* aud_w1 = nullptr;
  ad::Value* aud_b1 = nullptr;
  ad::Value* aud_w2 = nullptr;
  ad::Value* aud_b2 = nullptr;

  ad::Value* gru_wz = nullptr;
  ad::Value* gru_uz = nullptr;
  ad::Value* gru_bz = nullptr;
  ad::Value* gru_wr = nullptr;
  ad::Value* gru_ur = nullptr;
  ad::Value* gru_br = nullptr;
  ad::Value* gru_wh = nullptr;
  ad::Value* gru_uh = nullptr;
  ad::Value* gru_bh = nullptr;

  ad::Value* actor_w = nullptr;
  ad::Value* actor_b = nullptr;
  ad::Value* critic_w = nullptr;
  ad::Value* critic_b = nullptr;
};

PolicyParams build_policy_params(ad::ParamStore& store, const PolicyDims& dims,
                                 FusionVariant variant, double beta_init,
                                 Rng& rng);

struct AgentState {
  std::vector<double> hidden;  // zero at episode start
  int step_index = 0;
};

AgentState initial_state(const PolicyDims& dims);

struct PolicyStepOut {
  ad::Value* logits = nullptr;       // 4 action logits
  ad::Value* value = nullptr;        // state value, scalar
  ad::Value* next_hidden = nullptr;  // H-vector
  FusedPair aux;                     // fusion internals for analysis
};

ad::Value* encode_visual(ad::Tape& t, ad::Value* x, const PolicyParams& p);
ad::Value* encode_audio(ad::Tape& t, ad::Value* x, const PolicyParams& p);
ad::Value* gru_step(ad::Tape& t, ad::Value* x, ad::Value* h,
                    const PolicyParams& p);

PolicyStepOut policy_step(ad::Tape& t, const Observation& obs,
                          const AgentState& state, const PolicyParams& p);

enum class ActMode { Sample, Greedy };

struct ActResult {
  Action action;
  double log_prob;
};

// Categorical draw / argmax (ties to the lowest index) over raw logits.
ActResult act(const std::vector<double>& logits, ActMode mode,
              Rng* rng = nullptr);

struct EvalStep {
  ad::Value* log_prob = nullptr;  // of the stored action
  ad::Value* value = nullptr;
  ad::Value* entropy = nullptr;
};

// Teacher-forced re-evaluation along stored hiddens, one graph per step on
// the shared tape; feeds the surrogate loss.
std::vector<EvalStep> evaluate_actions(
    ad::Tape& t, const std::vector<Observation>& obs,
    const std::vector<std::vector<double>>& hiddens,
    const std::vector<Action>& actions, const PolicyParams& p);

}  // namespace crfn

namespace crfn {

// Drives episodes with the learned network (greedy by default).
class PolicyAgent : public Agent {
 public:
  PolicyAgent(const PolicyParams& params, ActMode mode = ActMode::Greedy,
              uint64_t sample_seed = 0)
      : params_(params), mode_(mode), sample_seed_(sample_seed) {}

  void reset(const EpisodeSpec& spec) override;
  Action act(const Observation& obs, const Pose& pose) override;

 private:
  const PolicyParams& params_;
  ActMode mode_;
  uint64_t sample_seed_;
  AgentState state_;
  std::optional<Rng> rng_;
};

}  // namespace crfn
