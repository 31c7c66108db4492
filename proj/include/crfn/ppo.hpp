#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crfn/metrics.hpp"
#include "crfn/policy.hpp"

namespace crfn {

struct PpoConfig {
  int ppo_epochs = 4;
  double clip_eps = 0.1;
  double value_coef = 0.5;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double lr = 2.5e-4;
  int rollout_len = 128;
  int num_updates = 500;
  uint64_t seed = 1;
  double max_grad_norm = 0.5;

  void validate() const;
};

// Fixed-length slice of experience; episodes auto-reset inside it.
struct RolloutBuffer {
  std::vector<Observation> observations;
  std::vector<std::vector<double>> hiddens;  // pre-action recurrent state
  std::vector<Action> actions;
  std::vector<double> log_probs;  // acting-time
  std::vector<double> values;     // acting-time
  std::vector<double> rewards;
  std::vector<uint8_t> dones;
  double bootstrap_value = 0;  // V of the state after the last transition

  size_t size() const { return actions.size(); }
};

struct GaeResult {
  std::vector<double> advantages;  // normalized: mean 0, std 1
  std::vector<double> raw_advantages;
  std::vector<double> returns;  // raw advantage + value
};

GaeResult compute_gae(const RolloutBuffer& buffer, double gamma,
                      double lambda);

// Per-step surrogate internals, for the clipping-bound checks.
struct PpoLossDiag {
  std::vector<double> ratios;
  std::vector<double> unclipped;  // ratio * A
  std::vector<double> clipped;    // clamp(ratio) * A
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
};

// Clipped-surrogate loss over already-evaluated per-step nodes:
//   -mean(min(rho A, clamp(rho, 1-eps, 1+eps) A))
//   + value_coef * mean((V - ret)^2) - entropy_coef * mean(H).
ad::Value* ppo_surrogate(ad::Tape& t, const std::vector<EvalStep>& steps,
                         const std::vector<double>& old_log_probs,
                         const std::vector<double>& advantages,
                         const std::vector<double>& returns,
                         const PpoConfig& cfg, PpoLossDiag* diag = nullptr);

// Re-evaluates the buffer under the current parameters and assembles the
// surrogate; differentiable end to end, including the fusion scalars.
ad::Value* ppo_loss(ad::Tape& t, const RolloutBuffer& buffer,
                    const GaeResult& gae, const PolicyParams& params,
                    const PpoConfig& cfg, PpoLossDiag* diag = nullptr);

// Supplies the spec for training episode number `episode_index`.
using SpecSampler = std::function<EpisodeSpec(uint64_t episode_index)>;

// Owns the training environment stream; recurrent state and the current
// episode carry over between successive collect() calls.
class RolloutCollector {
 public:
  RolloutCollector(SpecSampler sampler, const PolicyParams& params,
                   uint64_t seed);

  RolloutBuffer collect(int len);

  // returns of episodes completed during the latest collect()
  const std::vector<double>& completed_returns() const { return completed_; }

 private:
  void start_episode();

  SpecSampler sampler_;
  const PolicyParams& params_;
  Rng action_rng_;
  GridEnv env_;
  Observation obs_;
  AgentState state_;
  uint64_t episode_index_ = 0;
  double episode_return_ = 0;
  std::vector<double> completed_;
};

struct UpdateRecord {
  int update = 0;
  double beta_v = 0;  // residual scales at the start of the update;
  double beta_a = 0;  // zero for variants without a fusion controller
  std::optional<double> mean_episode_return;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  std::optional<MetricsReport> eval;
};

struct TrainLog {
  std::vector<UpdateRecord> records;
};

struct TrainOptions {
  std::vector<Scenario> eval_scenarios;
  int eval_every = 0;     // 0 disables periodic evaluation
  double stop_at_sr = 0;  // stop once eval SR reaches this; 0 disables
  std::string checkpoint_dir;  // empty disables checkpoints
  int checkpoint_every = 0;
  std::function<void(const UpdateRecord&)> on_update;
};

// PPO: collect -> GAE -> ppo_epochs x (loss, backward, clip, adam).
// Aborts with TrainAbort on a non-finite loss.
class Trainer {
 public:
  Trainer(SpecSampler sampler, ad::ParamStore& store, PolicyParams& params,
          const PpoConfig& cfg);

  TrainLog train(const TrainOptions& opts = {});

 private:
  std::string checkpoint_path(const std::string& dir, int update) const;

  ad::ParamStore& store_;
  PolicyParams& params_;
  PpoConfig cfg_;
  RolloutCollector collector_;
};

void write_train_log_jsonl(const TrainLog& log, const std::string& path);
TrainLog read_train_log_jsonl(const std::string& path);

// CSV rows "update,beta_v,beta_a", one per update.
void export_beta_curve(const TrainLog& log, const std::string& path);

}  // namespace crfn
