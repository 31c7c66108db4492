#include "crfn/ppo.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace crfn {

using ad::Tape;
using ad::Value;

void PpoConfig::validate() const {
  if (clip_eps <= 0) throw ConfigError("ppo: clip_eps must be > 0");
  if (gamma <= 0 || gamma > 1) throw ConfigError("ppo: gamma must be in (0, 1]");
  if (gae_lambda < 0 || gae_lambda > 1)
    throw ConfigError("ppo: gae_lambda must be in [0, 1]");
  if (ppo_epochs < 1) throw ConfigError("ppo: ppo_epochs must be >= 1");
  if (rollout_len < 1) throw ConfigError("ppo: rollout_len must be >= 1");
  if (num_updates < 0) throw ConfigError("ppo: num_updates must be >= 0");
  if (lr <= 0) throw ConfigError("ppo: lr must be > 0");
}

GaeResult compute_gae(const RolloutBuffer& buffer, double gamma,
                      double lambda) {
  const int n = static_cast<int>(buffer.size());
  GaeResult out;
  out.raw_advantages.assign(static_cast<size_t>(n), 0.0);
  out.returns.assign(static_cast<size_t>(n), 0.0);

  double next_adv = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double not_done = buffer.dones[static_cast<size_t>(t)] ? 0.0 : 1.0;
    const double next_value = t == n - 1 ? buffer.bootstrap_value
                                         : buffer.values[static_cast<size_t>(t) + 1];
    const double delta = buffer.rewards[static_cast<size_t>(t)] +
                         gamma * next_value * not_done -
                         buffer.values[static_cast<size_t>(t)];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    out.raw_advantages[static_cast<size_t>(t)] = next_adv;
    out.returns[static_cast<size_t>(t)] =
        next_adv + buffer.values[static_cast<size_t>(t)];
  }

  // per-update normalization
  double mean = 0.0;
  for (double a : out.raw_advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : out.raw_advantages) var += (a - mean) * (a - mean);
  var /= n;
  const double denom = std::max(std::sqrt(var), 1e-8);
  out.advantages.resize(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t)
    out.advantages[static_cast<size_t>(t)] =
        (out.raw_advantages[static_cast<size_t>(t)] - mean) / denom;
  return out;
}

Value* ppo_surrogate(Tape& t, const std::vector<EvalStep>& steps,
                     const std::vector<double>& old_log_probs,
                     const std::vector<double>& advantages,
                     const std::vector<double>& returns, const PpoConfig& cfg,
                     PpoLossDiag* diag) {
  const size_t n = steps.size();
  if (old_log_probs.size() != n || advantages.size() != n ||
      returns.size() != n)
    throw ContractError("ppo_surrogate: batch length mismatch");
  if (n == 0) throw ContractError("ppo_surrogate: empty batch");

  std::vector<Value*> mins, vlosses, entropies;
  mins.reserve(n);
  vlosses.reserve(n);
  entropies.reserve(n);
  if (diag) {
    diag->ratios.clear();
    diag->unclipped.clear();
    diag->clipped.clear();
  }

  for (size_t i = 0; i < n; ++i) {
    Value* ratio = t.exp(t.add_scalar(steps[i].log_prob, -old_log_probs[i]));
    Value* unclipped = t.mul_scalar(ratio, advantages[i]);
    Value* clipped = t.mul_scalar(
        t.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps), advantages[i]);
    mins.push_back(t.minimum(unclipped, clipped));
    Value* verr = t.add_scalar(steps[i].value, -returns[i]);
    vlosses.push_back(t.mul(verr, verr));
    entropies.push_back(steps[i].entropy);
    if (diag) {
      diag->ratios.push_back(ratio->data[0]);
      diag->unclipped.push_back(unclipped->data[0]);
      diag->clipped.push_back(clipped->data[0]);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  Value* policy_term = t.mul_scalar(t.add_n(mins), -inv_n);
  Value* value_mean = t.mul_scalar(t.add_n(vlosses), inv_n);
  Value* entropy_mean = t.mul_scalar(t.add_n(entropies), inv_n);
  Value* loss =
      t.add(t.add(policy_term, t.mul_scalar(value_mean, cfg.value_coef)),
            t.mul_scalar(entropy_mean, -cfg.entropy_coef));
  if (diag) {
    diag->policy_loss = policy_term->data[0];
    diag->value_loss = value_mean->data[0];
    diag->entropy = entropy_mean->data[0];
  }
  return loss;
}

Value* ppo_loss(Tape& t, const RolloutBuffer& buffer, const GaeResult& gae,
                const PolicyParams& params, const PpoConfig& cfg,
                PpoLossDiag* diag) {
  const auto steps =
      evaluate_actions(t, buffer.observations, buffer.hiddens, buffer.actions,
                       params);
  return ppo_surrogate(t, steps, buffer.log_probs, gae.advantages, gae.returns,
                       cfg, diag);
}

RolloutCollector::RolloutCollector(SpecSampler sampler,
                                   const PolicyParams& params, uint64_t seed)
    : sampler_(std::move(sampler)),
      params_(params),
      action_rng_(derive_seed(seed, 0xacdULL)) {
  start_episode();
}

void RolloutCollector::start_episode() {
  obs_ = env_.reset(sampler_(episode_index_++));
  state_ = initial_state(params_.dims);
  episode_return_ = 0.0;
}

RolloutBuffer RolloutCollector::collect(int len) {
  RolloutBuffer buf;
  buf.observations.reserve(static_cast<size_t>(len));
  completed_.clear();

  for (int i = 0; i < len; ++i) {
    Tape t;
    const PolicyStepOut out = policy_step(t, obs_, state_, params_);
    const ActResult a = act(out.logits->data, ActMode::Sample, &action_rng_);

    buf.observations.push_back(obs_);
    buf.hiddens.push_back(state_.hidden);
    buf.actions.push_back(a.action);
    buf.log_probs.push_back(a.log_prob);
    buf.values.push_back(out.value->data[0]);

    const StepResult res = env_.step(a.action);
    buf.rewards.push_back(res.reward);
    buf.dones.push_back(res.done ? 1 : 0);
    episode_return_ += res.reward;

    if (res.done) {
      completed_.push_back(episode_return_);
      start_episode();
    } else {
      obs_ = res.obs;
      state_.hidden = out.next_hidden->data;
      ++state_.step_index;
    }
  }

  // bootstrap value of the state after the last stored transition
  Tape t;
  buf.bootstrap_value = policy_step(t, obs_, state_, params_).value->data[0];
  return buf;
}

Trainer::Trainer(SpecSampler sampler, ad::ParamStore& store,
                 PolicyParams& params, const PpoConfig& cfg)
    : store_(store),
      params_(params),
      cfg_(cfg),
      collector_(std::move(sampler), params, cfg.seed) {
  cfg_.validate();
}

std::string Trainer::checkpoint_path(const std::string& dir, int update) const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "ckpt_u%d_s%llu.bin", update,
                static_cast<unsigned long long>(cfg_.seed));
  return (std::filesystem::path(dir) / buf).string();
}

TrainLog Trainer::train(const TrainOptions& opts) {
  TrainLog log;
  bool stop = false;
  int updates_done = 0;

  for (int u = 0; u < cfg_.num_updates && !stop; ++u) {
    UpdateRecord rec;
    rec.update = u;
    if (params_.fusion.beta_v) rec.beta_v = params_.fusion.beta_v->data[0];
    if (params_.fusion.beta_a) rec.beta_a = params_.fusion.beta_a->data[0];

    const RolloutBuffer buffer = collector_.collect(cfg_.rollout_len);
    const GaeResult gae = compute_gae(buffer, cfg_.gamma, cfg_.gae_lambda);

    for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
      Tape tape;
      PpoLossDiag diag;
      Value* loss = ppo_loss(tape, buffer, gae, params_, cfg_, &diag);
      if (!std::isfinite(loss->data[0]))
        throw TrainAbort("ppo: non-finite loss at update " + std::to_string(u) +
                         ", epoch " + std::to_string(epoch));
      tape.backward(loss);
      store_.clip_grad_norm(cfg_.max_grad_norm);
      store_.adam_step(cfg_.lr);
      if (epoch == 0) {
        rec.policy_loss = diag.policy_loss;
        rec.value_loss = diag.value_loss;
        rec.entropy = diag.entropy;
      }
    }

    if (!collector_.completed_returns().empty()) {
      double acc = 0;
      for (double r : collector_.completed_returns()) acc += r;
      rec.mean_episode_return =
          acc / static_cast<double>(collector_.completed_returns().size());
    }

    if (opts.eval_every > 0 && (u + 1) % opts.eval_every == 0 &&
        !opts.eval_scenarios.empty()) {
      PolicyAgent agent(params_, ActMode::Greedy);
      rec.eval = evaluate(agent, opts.eval_scenarios).report;
      if (opts.stop_at_sr > 0 && rec.eval->sr >= opts.stop_at_sr) stop = true;
    }

    log.records.push_back(rec);
    if (opts.on_update) opts.on_update(rec);
    updates_done = u + 1;

    if (!opts.checkpoint_dir.empty() && opts.checkpoint_every > 0 &&
        (u + 1) % opts.checkpoint_every == 0) {
      store_.save(checkpoint_path(opts.checkpoint_dir, u + 1));
    }
  }

  if (!opts.checkpoint_dir.empty()) {
    store_.save(checkpoint_path(opts.checkpoint_dir, updates_done));
    store_.save(
        (std::filesystem::path(opts.checkpoint_dir) / "ckpt_final.bin").string());
  }
  return log;
}

namespace {

nlohmann::json record_to_json(const UpdateRecord& r) {
  nlohmann::json j{{"update", r.update},
                   {"beta_v", r.beta_v},
                   {"beta_a", r.beta_a},
                   {"policy_loss", r.policy_loss},
                   {"value_loss", r.value_loss},
                   {"entropy", r.entropy}};
  if (r.mean_episode_return)
    j["mean_episode_return"] = *r.mean_episode_return;
  else
    j["mean_episode_return"] = nullptr;
  if (r.eval) {
    j["eval"] = {{"sr", r.eval->sr},
                 {"spl", r.eval->spl},
                 {"sna", r.eval->sna},
                 {"n", r.eval->n}};
  }
  return j;
}

}  // namespace

void write_train_log_jsonl(const TrainLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("train log: cannot write '" + path + "'");
  for (const auto& r : log.records) os << record_to_json(r).dump() << "\n";
}

TrainLog read_train_log_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("train log: cannot open '" + path + "'");
  TrainLog log;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    UpdateRecord r;
    r.update = j.at("update").get<int>();
    r.beta_v = j.at("beta_v").get<double>();
    r.beta_a = j.at("beta_a").get<double>();
    r.policy_loss = j.at("policy_loss").get<double>();
    r.value_loss = j.at("value_loss").get<double>();
    r.entropy = j.at("entropy").get<double>();
    if (!j.at("mean_episode_return").is_null())
      r.mean_episode_return = j.at("mean_episode_return").get<double>();
    if (j.contains("eval")) {
      MetricsReport rep;
      rep.sr = j["eval"].at("sr").get<double>();
      rep.spl = j["eval"].at("spl").get<double>();
      rep.sna = j["eval"].at("sna").get<double>();
      rep.n = j["eval"].at("n").get<int>();
      r.eval = rep;
    }
    log.records.push_back(r);
  }
  return log;
}

void export_beta_curve(const TrainLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("beta curve: cannot write '" + path + "'");
  os << "update,beta_v,beta_a\n";
  // shortest round-trip decimal form
  auto fmt = [](double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  for (const auto& r : log.records)
    os << r.update << "," << fmt(r.beta_v) << "," << fmt(r.beta_a) << "\n";
}

}  // namespace crfn
