#include "crfn/policy.hpp"

#include <cmath>

namespace crfn {

using ad::InitSpec;
using ad::Tape;
using ad::Value;

PolicyParams build_policy_params(ad::ParamStore& store, const PolicyDims& dims,
                                 FusionVariant variant, double beta_init,
                                 Rng& rng) {
  PolicyParams p;
  p.dims = dims;
  const int r = dims.rays, f2 = 2 * dims.freq_bins, d = dims.d;
  const int dj = dims.d_out, h = dims.hidden;

  auto w = [&](const char* name, int rows, int cols) {
    return store.make_param(name, ad::mat(rows, cols),
                            InitSpec::scaled_uniform(cols), rng);
  };
  auto b = [&](const char* name, int n) {
    return store.make_param(name, ad::vec(n), InitSpec::constant(0), rng);
  };

  p.vis_w1 = w("vis.w1", d, r);
  p.vis_b1 = b("vis.b1", d);
  p.vis_w2 = w("vis.w2", d, d);
  p.vis_b2 = b("vis.b2", d);
  p.aud_w1 = w("aud.w1", d, f2);
  p.aud_b1 = b("aud.b1", d);
  p.aud_w2 = w("aud.w2", d, d);
  p.aud_b2 = b("aud.b2", d);

  p.fusion = build_fusion_params(store, variant, d, dj, beta_init, rng);

  p.gru_wz = w("gru.wz", h, dj);
  p.gru_uz = w("gru.uz", h, h);
  p.gru_bz = b("gru.bz", h);
  p.gru_wr = w("gru.wr", h, dj);
  p.gru_ur = w("gru.ur", h, h);
  p.gru_br = b("gru.br", h);
  p.gru_wh = w("gru.wh", h, dj);
  p.gru_uh = w("gru.uh", h, h);
  p.gru_bh = b("gru.bh", h);

  p.actor_w = w("actor.w", kNumActions, h);
  p.actor_b = b("actor.b", kNumActions);
  p.critic_w = w("critic.w", 1, h);
  p.critic_b = b("critic.b", 1);
  return p;
}

AgentState initial_state(const PolicyDims& dims) {
  AgentState s;
  s.hidden.assign(static_cast<size_t>(dims.hidden), 0.0);
  s.step_index = 0;
  return s;
}

namespace {

Value* two_layer_tanh(Tape& t, Value* x, Value* w1, Value* b1, Value* w2,
                      Value* b2) {
  return t.tanh(t.affine(w2, t.tanh(t.affine(w1, x, b1)), b2));
}

}  // namespace

Value* encode_visual(Tape& t, Value* x, const PolicyParams& p) {
  return two_layer_tanh(t, x, p.vis_w1, p.vis_b1, p.vis_w2, p.vis_b2);
}

Value* encode_audio(Tape& t, Value* x, const PolicyParams& p) {
  return two_layer_tanh(t, x, p.aud_w1, p.aud_b1, p.aud_w2, p.aud_b2);
}

Value* gru_step(Tape& t, Value* x, Value* h, const PolicyParams& p) {
  Value* z = t.sigmoid(
      t.add(t.add(t.matvec(p.gru_wz, x), t.matvec(p.gru_uz, h)), p.gru_bz));
  Value* r = t.sigmoid(
      t.add(t.add(t.matvec(p.gru_wr, x), t.matvec(p.gru_ur, h)), p.gru_br));
  Value* cand = t.tanh(t.add(
      t.add(t.matvec(p.gru_wh, x), t.matvec(p.gru_uh, t.mul(r, h))), p.gru_bh));
  Value* keep = t.add_scalar(t.mul_scalar(z, -1.0), 1.0);  // 1 - z
  return t.add(t.mul(keep, h), t.mul(z, cand));
}

PolicyStepOut policy_step(Tape& t, const Observation& obs,
                          const AgentState& state, const PolicyParams& p) {
  if (static_cast<int>(obs.visual.size()) != p.dims.rays)
    throw ShapeError("policy_step: visual size " +
                     std::to_string(obs.visual.size()) + ", expected " +
                     std::to_string(p.dims.rays));
  if (static_cast<int>(obs.audio.size()) != 2 * p.dims.freq_bins)
    throw ShapeError("policy_step: audio size " +
                     std::to_string(obs.audio.size()) + ", expected " +
                     std::to_string(2 * p.dims.freq_bins));

  Value* vis_in = t.constant(ad::vec(p.dims.rays), obs.visual);
  Value* aud_in = t.constant(ad::vec(2 * p.dims.freq_bins), obs.audio);
  Value* v = encode_visual(t, vis_in, p);
  Value* a = encode_audio(t, aud_in, p);

  PolicyStepOut out;
  out.aux = fuse(t, v, a, p.fusion);

  Value* h = t.constant(ad::vec(p.dims.hidden), state.hidden);
  out.next_hidden = gru_step(t, out.aux.joint, h, p);
  out.logits = t.affine(p.actor_w, out.next_hidden, p.actor_b);
  out.value = t.affine(p.critic_w, out.next_hidden, p.critic_b);
  return out;
}

ActResult act(const std::vector<double>& logits, ActMode mode, Rng* rng) {
  for (double l : logits)
    if (!std::isfinite(l)) throw DataError("act: non-finite logit");

  // stable log-softmax
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);

  int idx = 0;
  if (mode == ActMode::Greedy) {
    for (size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[static_cast<size_t>(idx)]) idx = static_cast<int>(i);
  } else {
    if (!rng) throw ContractError("act: sampling requires an rng");
    const double u = rng->uniform(0.0, 1.0);
    double cum = 0.0;
    idx = static_cast<int>(logits.size()) - 1;
    for (size_t i = 0; i < logits.size(); ++i) {
      cum += std::exp(logits[i] - lse);
      if (u < cum) {
        idx = static_cast<int>(i);
        break;
      }
    }
  }
  return {static_cast<Action>(idx), logits[static_cast<size_t>(idx)] - lse};
}

std::vector<EvalStep> evaluate_actions(
    Tape& t, const std::vector<Observation>& obs,
    const std::vector<std::vector<double>>& hiddens,
    const std::vector<Action>& actions, const PolicyParams& p) {
  if (obs.size() != hiddens.size() || obs.size() != actions.size())
    throw ContractError("evaluate_actions: batch length mismatch");

  std::vector<EvalStep> out;
  out.reserve(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    AgentState st{hiddens[i], 0};
    const PolicyStepOut step = policy_step(t, obs[i], st, p);
    Value* lp = t.softmax_logprobs(step.logits);
    EvalStep e;
    e.log_prob = t.gather(lp, static_cast<int>(actions[i]));
    e.value = step.value;
    e.entropy = t.entropy(lp);
    out.push_back(e);
  }
  return out;
}

void PolicyAgent::reset(const EpisodeSpec& spec) {
  state_ = initial_state(params_.dims);
  if (mode_ == ActMode::Sample)
    rng_.emplace(derive_seed(sample_seed_, spec.seed));
}

Action PolicyAgent::act(const Observation& obs, const Pose&) {
  Tape t;
  const PolicyStepOut out = policy_step(t, obs, state_, params_);
  state_.hidden = out.next_hidden->data;
  ++state_.step_index;
  return crfn::act(out.logits->data, mode_, rng_ ? &*rng_ : nullptr).action;
}

}  // namespace crfn
