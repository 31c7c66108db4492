#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "crfn/policy.hpp"

using namespace crfn;
using ad::ParamStore;
using ad::Tape;
using ad::Value;

namespace {

PolicyDims tiny_dims() {
  PolicyDims d;
  d.rays = 3;
  d.freq_bins = 2;
  d.d = 4;
  d.d_out = 6;
  d.hidden = 5;
  return d;
}

Observation random_obs(Rng& rng, const PolicyDims& d) {
  Observation o;
  o.freq_bins = d.freq_bins;
  o.visual.resize(static_cast<size_t>(d.rays));
  for (auto& v : o.visual) v = rng.uniform(0, 1);
  o.audio.resize(static_cast<size_t>(2 * d.freq_bins));
  for (auto& v : o.audio) v = rng.uniform(0, 0.5);
  return o;
}

}  // namespace

TEST_CASE("encoders") {
  Rng rng(1);
  ParamStore store;
  auto p = build_policy_params(store, tiny_dims(), FusionVariant::Crfn, 0.2, rng);

  SUBCASE("zero weights give zero output") {
    for (auto* w : {p.vis_w1, p.vis_w2})
      std::fill(w->data.begin(), w->data.end(), 0.0);
    Tape t;
    Value* y = encode_visual(t, t.constant(ad::vec(3), std::vector<double>{1, 2, 3}), p);
    for (double e : y->data) CHECK(e == 0.0);
  }

  SUBCASE("outputs bounded by tanh") {
    Rng r(2);
    for (int trial = 0; trial < 20; ++trial) {
      Tape t;
      std::vector<double> big(4, 100.0);
      Value* y = encode_audio(t, t.constant(ad::vec(4), big), p);
      for (double e : y->data) {
        CHECK(e > -1.0);
        CHECK(e < 1.0);
      }
    }
  }

  SUBCASE("gradient check") {
    std::vector<double> xv{0.2, 0.8, 0.4};
    std::vector<double> xa{0.1, 0.3, 0.0, 0.25};
    auto f = [&](Tape& t) {
      Value* v = encode_visual(t, t.constant(ad::vec(3), xv), p);
      Value* a = encode_audio(t, t.constant(ad::vec(4), xa), p);
      return t.sum(t.mul(v, a));
    };
    CHECK(ad::grad_check(store, f, 1e-5) < 1e-5);
  }
}

TEST_CASE("gru_step closed-form cases") {
  Rng rng(3);
  ParamStore store;
  auto p = build_policy_params(store, tiny_dims(), FusionVariant::Concat, 0.2, rng);

  SUBCASE("all-zero weights halve the hidden state") {
    for (auto* w : {p.gru_wz, p.gru_uz, p.gru_wr, p.gru_ur, p.gru_wh, p.gru_uh})
      std::fill(w->data.begin(), w->data.end(), 0.0);
    Tape t;
    std::vector<double> h0{1, -2, 0.5, 4, -1};
    Value* h1 = gru_step(t, t.constant(ad::vec(6), 0.3), t.constant(ad::vec(5), h0), p);
    for (int i = 0; i < 5; ++i)
      CHECK(h1->data[static_cast<size_t>(i)] ==
            doctest::Approx(0.5 * h0[static_cast<size_t>(i)]).epsilon(1e-14));
  }

  SUBCASE("zero input, zero hidden, zero biases stay at zero") {
    Tape t;
    Value* h1 = gru_step(t, t.constant(ad::vec(6), 0.0), t.constant(ad::vec(5), 0.0), p);
    for (double e : h1->data) CHECK(e == 0.0);
  }
}

TEST_CASE("gru gradient through three chained steps") {
  Rng rng(5);
  ParamStore store;
  auto p = build_policy_params(store, tiny_dims(), FusionVariant::Concat, 0.2, rng);
  std::vector<std::vector<double>> xs = {
      {0.1, -0.2, 0.3, 0.0, 0.5, -0.4},
      {0.7, 0.2, -0.3, 0.1, 0.0, 0.2},
      {-0.5, 0.4, 0.1, -0.1, 0.3, 0.6}};
  auto f = [&](Tape& t) {
    Value* h = t.constant(ad::vec(5), 0.0);
    for (const auto& x : xs) h = gru_step(t, t.constant(ad::vec(6), x), h, p);
    return t.mean(t.mul(h, h));
  };
  CHECK(ad::grad_check(store, f, 1e-5) < 1e-4);
}

TEST_CASE("policy_step determinism and value-head gradient") {
  Rng rng(7);
  ParamStore store;
  auto dims = tiny_dims();
  auto p = build_policy_params(store, dims, FusionVariant::Crfn, 0.2, rng);
  Rng orng(11);
  const Observation obs = random_obs(orng, dims);

  auto run = [&] {
    Tape t;
    auto out = policy_step(t, obs, initial_state(dims), p);
    return out.logits->data;
  };
  CHECK(run() == run());

  auto f = [&](Tape& t) {
    auto out = policy_step(t, obs, initial_state(dims), p);
    return t.gather(out.value, 0);
  };
  CHECK(ad::grad_check(store, f, 1e-5) < 1e-4);
}

TEST_CASE("concat variant with a dead audio path ignores audio") {
  Rng rng(13);
  ParamStore store;
  auto dims = tiny_dims();
  auto p = build_policy_params(store, dims, FusionVariant::Concat, 0.2, rng);
  // silence the audio-encoder output path
  std::fill(p.aud_w2->data.begin(), p.aud_w2->data.end(), 0.0);
  std::fill(p.aud_b2->data.begin(), p.aud_b2->data.end(), 0.0);

  Rng orng(17);
  Observation obs = random_obs(orng, dims);
  Tape t;
  auto base = policy_step(t, obs, initial_state(dims), p);
  for (int trial = 0; trial < 10; ++trial) {
    Observation perturbed = obs;
    for (auto& v : perturbed.audio) v = orng.uniform(0, 1);
    auto out = policy_step(t, perturbed, initial_state(dims), p);
    CHECK(out.logits->data == base.logits->data);
  }
}

TEST_CASE("act") {
  SUBCASE("greedy picks the max, ties to the lowest index") {
    CHECK(act({10, 0, 0, 0}, ActMode::Greedy).action == Action::Forward);
    CHECK(act({1, 5, 5, 0}, ActMode::Greedy).action == Action::TurnLeft);
  }
  SUBCASE("uniform logits give log_prob ln(1/4)") {
    auto r = act({0, 0, 0, 0}, ActMode::Greedy);
    CHECK(r.log_prob == doctest::Approx(std::log(0.25)).epsilon(1e-15));
  }
  SUBCASE("non-finite logits are rejected") {
    CHECK_THROWS_AS(act({0, std::nan(""), 0, 0}, ActMode::Greedy), DataError);
  }
  SUBCASE("sampling frequencies match softmax probabilities within 3 sigma") {
    const std::vector<double> logits{0.5, -0.2, 1.0, 0.0};
    double mx = 1.0, z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    std::vector<double> probs;
    for (double l : logits) probs.push_back(std::exp(l - mx) / z);

    Rng rng(19);
    const int n = 100000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i)
      counts[static_cast<size_t>(act(logits, ActMode::Sample, &rng).action)]++;
    for (int k = 0; k < 4; ++k) {
      const double mean = n * probs[static_cast<size_t>(k)];
      const double sigma =
          std::sqrt(n * probs[static_cast<size_t>(k)] * (1 - probs[static_cast<size_t>(k)]));
      CHECK(std::abs(counts[static_cast<size_t>(k)] - mean) < 3 * sigma);
    }
  }
}

TEST_CASE("evaluate_actions") {
  Rng rng(23);
  ParamStore store;
  auto dims = tiny_dims();
  auto p = build_policy_params(store, dims, FusionVariant::Crfn, 0.2, rng);

  // roll a 5-step trajectory with the acting policy
  Rng orng(29), arng(31);
  std::vector<Observation> obs;
  std::vector<std::vector<double>> hiddens;
  std::vector<Action> actions;
  std::vector<double> stored_lp;
  AgentState st = initial_state(dims);
  for (int i = 0; i < 5; ++i) {
    obs.push_back(random_obs(orng, dims));
    hiddens.push_back(st.hidden);
    Tape t;
    auto out = policy_step(t, obs.back(), st, p);
    auto a = act(out.logits->data, ActMode::Sample, &arng);
    actions.push_back(a.action);
    stored_lp.push_back(a.log_prob);
    st.hidden = out.next_hidden->data;
  }

  SUBCASE("ratio identity: unchanged parameters reproduce stored log-probs") {
    Tape t;
    auto steps = evaluate_actions(t, obs, hiddens, actions, p);
    for (size_t i = 0; i < steps.size(); ++i)
      CHECK(std::abs(steps[i].log_prob->data[0] - stored_lp[i]) < 1e-12);
  }

  SUBCASE("uniform logits give entropy ln 4") {
    std::fill(p.actor_w->data.begin(), p.actor_w->data.end(), 0.0);
    std::fill(p.actor_b->data.begin(), p.actor_b->data.end(), 0.0);
    Tape t;
    auto steps = evaluate_actions(t, obs, hiddens, actions, p);
    CHECK(steps[0].entropy->data[0] ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }

  SUBCASE("batch evaluation equals per-step single evaluation") {
    Tape t;
    auto steps = evaluate_actions(t, obs, hiddens, actions, p);
    for (size_t i = 0; i < 3; ++i) {
      Tape ti;
      auto single = evaluate_actions(ti, {obs[i]}, {hiddens[i]}, {actions[i]}, p);
      CHECK(steps[i].log_prob->data[0] == single[0].log_prob->data[0]);
      CHECK(steps[i].value->data[0] == single[0].value->data[0]);
      CHECK(steps[i].entropy->data[0] == single[0].entropy->data[0]);
    }
  }

  SUBCASE("length mismatch is rejected") {
    Tape t;
    CHECK_THROWS_AS(evaluate_actions(t, obs, hiddens,
                                     std::vector<Action>{Action::Stop}, p),
                    ContractError);
  }
}

TEST_CASE("recurrence determinism over an observation sequence") {
  Rng rng(37);
  ParamStore store;
  auto dims = tiny_dims();
  auto p = build_policy_params(store, dims, FusionVariant::Gated, 0.2, rng);
  Rng orng(41);
  std::vector<Observation> seq;
  for (int i = 0; i < 6; ++i) seq.push_back(random_obs(orng, dims));

  auto run = [&] {
    AgentState st = initial_state(dims);
    std::vector<double> trace;
    for (const auto& o : seq) {
      Tape t;
      auto out = policy_step(t, o, st, p);
      st.hidden = out.next_hidden->data;
      trace.insert(trace.end(), st.hidden.begin(), st.hidden.end());
    }
    return trace;
  };
  CHECK(run() == run());
}
