#include <doctest.h>

#include <cmath>

#include "htrl/error.hpp"
#include "htrl/policy.hpp"
#include "htrl/ppo.hpp"
#include "rl_envs.hpp"

using namespace htrl;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an htrl::Error");
  return ErrorKind::Io;
}

PpoConfig bandit_config() {
  PpoConfig cfg;
  cfg.total_timesteps = 20000;
  cfg.rollout_horizon = 256;
  cfg.minibatch = 64;
  cfg.epochs = 4;
  cfg.learning_rate = 3e-3;
  cfg.hidden = {16};
  cfg.seed = 1;
  return cfg;
}

}  // namespace

TEST_SUITE("rl_engine") {
  TEST_CASE("zero output layer gives uniform heads") {
    Rng rng(0);
    for (const auto spec : {ActionSpec::multi_discrete(3, 5), ActionSpec::multi_binary(4)}) {
      auto p = init_policy(6, spec, {8, 8}, rng);
      p.actor.layers.back().weight.setZero();
      const std::vector<double> obs{0.1, -0.3, 0.7, 0.0, 1.0, 0.2};
      const auto out = policy_eval(p, obs);
      REQUIRE(out.heads.size() == spec.heads);
      for (const auto& h : out.heads) {
        CHECK(static_cast<std::size_t>(h.size()) == spec.arity);
        for (Eigen::Index k = 0; k < h.size(); ++k) CHECK(h(k) == doctest::Approx(1.0 / spec.arity));
      }
    }
  }

  TEST_CASE("head probabilities are normalised") {
    Rng rng(4);
    auto p = init_policy(5, ActionSpec::multi_discrete(4, 5), {16}, rng);
    // Inflate the output so the distribution is far from uniform.
    p.actor.layers.back().weight *= 300.0;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> obs(5);
      for (auto& x : obs) x = rng.normal();
      for (const auto& h : policy_eval(p, obs).heads) {
        CHECK(std::abs(h.sum() - 1.0) < 1e-9);
        CHECK(h.minCoeff() >= 0.0);
      }
    }
  }

  TEST_CASE("shape mismatch") {
    Rng rng(0);
    const auto p = init_policy(3, ActionSpec::multi_binary(2), {4}, rng);
    const std::vector<double> obs{1.0};
    CHECK(kind_of([&] { policy_eval(p, obs); }) == ErrorKind::ShapeMismatch);
  }

  TEST_CASE("log-prob gradient matches central differences") {
    Rng rng(9);
    for (const auto spec : {ActionSpec::multi_discrete(2, 5), ActionSpec::multi_binary(3)}) {
      auto p = init_policy(4, spec, {6, 5}, rng);
      // Larger output weights make the gradient non-trivial.
      p.actor.layers.back().weight = Eigen::MatrixXd::Random(p.actor.layers.back().weight.rows(),
                                                             p.actor.layers.back().weight.cols());
      const std::vector<double> obs{0.3, -0.8, 0.5, 1.2};
      Action a(spec.heads);
      for (auto& x : a) x = static_cast<int>(rng.uniform(spec.arity));
      const Eigen::VectorXd g = log_prob_gradient(p, obs, a);
      Eigen::VectorXd flat = p.flatten();
      double worst = 0.0;
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < flat.size(); ++i) {
        auto q = p;
        Eigen::VectorXd f = flat;
        f(i) += h;
        q.unflatten(f);
        const double up = log_prob(q, obs, a);
        f(i) -= 2 * h;
        q.unflatten(f);
        const double down = log_prob(q, obs, a);
        const double fd = (up - down) / (2 * h);
        const double scale = std::max({std::abs(fd), std::abs(g(i)), 1e-3});
        worst = std::max(worst, std::abs(fd - g(i)) / scale);
      }
      CHECK(worst < 1e-4);
    }
  }

  TEST_CASE("flatten round trip") {
    Rng rng(2);
    const auto p = init_policy(3, ActionSpec::multi_discrete(2, 5), {7}, rng);
    CHECK(static_cast<std::size_t>(p.flatten().size()) == p.parameter_count());
    auto q = p.zeros_like();
    q.unflatten(p.flatten());
    CHECK(q.flatten() == p.flatten());
  }

  TEST_CASE("GAE limits") {
    const std::vector<double> r{1.0, 2.0, 3.0};
    const std::vector<double> v{0.5, -1.0, 2.0};
    const std::vector<std::uint8_t> done{0, 0, 1};
    const double g = 0.9;
    // lambda = 1: discounted return minus value.
    const auto mc = compute_gae(r, v, done, 7.0, g, 1.0);
    CHECK(mc[2] == doctest::Approx(3.0 - 2.0));
    CHECK(mc[1] == doctest::Approx(2.0 + g * 3.0 + 1.0));
    CHECK(mc[0] == doctest::Approx(1.0 + g * 2.0 + g * g * 3.0 - 0.5));
    // lambda = 0: one-step TD residual.
    const auto td = compute_gae(r, v, done, 7.0, g, 0.0);
    CHECK(td[0] == doctest::Approx(1.0 + g * -1.0 - 0.5));
    CHECK(td[1] == doctest::Approx(2.0 + g * 2.0 + 1.0));
    CHECK(td[2] == doctest::Approx(3.0 - 2.0));
    // An unfinished rollout bootstraps from last_value.
    const std::vector<std::uint8_t> open{0, 0, 0};
    CHECK(compute_gae(r, v, open, 7.0, g, 0.0)[2] == doctest::Approx(3.0 + g * 7.0 - 2.0));
  }

  TEST_CASE("identical old and new policy: clipped gradient equals plain policy gradient") {
    Rng rng(6);
    const auto p = init_policy(3, ActionSpec::multi_discrete(2, 5), {8}, rng);
    PpoConfig cfg;
    cfg.entropy_coef = 0.0;
    cfg.value_coef = 0.0;
    cfg.normalize_advantage = false;
    const int n = 16;
    Batch b;
    b.observations = Eigen::MatrixXd::Random(3, n);
    b.old_log_prob.resize(n);
    b.advantages = Eigen::VectorXd::Random(n);
    b.returns = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.parameter_count()));
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd col = b.observations.col(i);
      const std::vector<double> obs(col.data(), col.data() + 3);
      Action a{static_cast<int>(rng.uniform(5)), static_cast<int>(rng.uniform(5))};
      b.actions.push_back(a);
      b.old_log_prob(i) = log_prob(p, obs, a);
      expected -= b.advantages(i) * log_prob_gradient(p, obs, a) / n;
    }
    auto grad = p.zeros_like();
    const auto loss = ppo_loss(p, b, cfg, &grad);
    CHECK(loss.max_ratio_deviation < 1e-12);
    CHECK(loss.clip_fraction == 0.0);
    CHECK((grad.flatten() - expected).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("bandit converges to the paying arm") {
    test::BanditEnv env;
    const auto res = train(env, bandit_config());
    const auto out = policy_eval(res.params, std::vector<double>{1.0});
    CHECK(out.heads[0](0) > 0.9);
    for (const auto& row : res.curve.rows) CHECK(row.first_ratio_deviation < 1e-9);
    for (std::size_t i = 1; i < res.curve.rows.size(); ++i) {
      CHECK(res.curve.rows[i].timestep > res.curve.rows[i - 1].timestep);
    }
    // Greedy play afterwards always pulls arm 0.
    const auto logs = run_policy(res.params, env, 50, PolicyMode::Greedy, 3);
    REQUIRE(logs.size() == 50);
    for (const auto& ep : logs) CHECK(ep.actions.at(0) == Action{0});
    const auto [first, last] = res.curve.decile_means();
    CHECK(last > first);
  }

  TEST_CASE("training is deterministic per seed") {
    test::BanditEnv env;
    auto cfg = bandit_config();
    cfg.total_timesteps = 2000;
    const auto a = train(env, cfg);
    const auto b = train(env, cfg);
    CHECK(a.curve.to_csv() == b.curve.to_csv());
    CHECK(a.params.flatten() == b.params.flatten());
    cfg.seed = 2;
    CHECK(train(env, cfg).params.flatten() != a.params.flatten());
  }

  TEST_CASE("critic learns the discounted return") {
    test::ChainEnv env;
    PpoConfig cfg;
    cfg.total_timesteps = 40000;
    cfg.rollout_horizon = 512;
    cfg.minibatch = 128;
    cfg.epochs = 5;
    cfg.gamma = 0.5;
    cfg.gae_lambda = 1.0;
    cfg.learning_rate = 3e-3;
    cfg.max_grad_norm = 10.0;
    cfg.hidden = {16};
    const auto res = train(env, cfg);
    CHECK(policy_eval(res.params, std::vector<double>{1.0, 0.0}).value == doctest::Approx(1.5).epsilon(0.01));
    CHECK(policy_eval(res.params, std::vector<double>{0.0, 1.0}).value == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("run_policy") {
    test::BanditEnv env;
    Rng rng(0);
    const auto p = init_policy(1, env.action_spec(), {4}, rng);
    CHECK(run_policy(p, env, 0, PolicyMode::Sample, 1).empty());
    const auto a = run_policy(p, env, 30, PolicyMode::Sample, 5);
    const auto b = run_policy(p, env, 30, PolicyMode::Sample, 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].actions == b[i].actions);
    std::size_t seen = 0;
    run_policy(p, env, 7, PolicyMode::Sample, 5, [&](const StepContext&) { ++seen; }, false);
    CHECK(seen == 7);
    const auto mismatched = init_policy(2, env.action_spec(), {4}, rng);
    CHECK(kind_of([&] { run_policy(mismatched, env, 1, PolicyMode::Sample, 0); }) ==
          ErrorKind::EnvContractViolation);
  }

  TEST_CASE("environment contract is enforced") {
    test::BanditEnv env;
    Rng rng(0);
    CHECK(kind_of([&] { env.step({0}); }) == ErrorKind::EnvContractViolation);
    env.reset(rng);
    CHECK(kind_of([&] { env.step({2}); }) == ErrorKind::EnvContractViolation);
    CHECK(kind_of([&] { env.step({0, 0}); }) == ErrorKind::EnvContractViolation);
    CHECK(env.step({0}).terminal);
    CHECK(kind_of([&] { env.step({0}); }) == ErrorKind::EnvContractViolation);
    test::BrokenEnv broken;
    CHECK(kind_of([&] { broken.reset(rng); }) == ErrorKind::EnvContractViolation);
  }

  TEST_CASE("config validation") {
    const auto bad = [](auto mutate) {
      PpoConfig c;
      mutate(c);
      return kind_of([&] { c.validate(); });
    };
    CHECK_NOTHROW(PpoConfig{}.validate());
    CHECK(bad([](PpoConfig& c) { c.gamma = 0.0; }) == ErrorKind::DomainError);
    CHECK(bad([](PpoConfig& c) { c.gamma = 1.01; }) == ErrorKind::DomainError);
    CHECK(bad([](PpoConfig& c) { c.clip = 1.0; }) == ErrorKind::DomainError);
    CHECK(bad([](PpoConfig& c) { c.minibatch = c.rollout_horizon + 1; }) == ErrorKind::DomainError);
  }

  TEST_CASE("Adam moves against the gradient") {
    Adam adam(2, 0.1);
    Eigen::VectorXd x(2);
    x << 1.0, -1.0;
    for (int i = 0; i < 500; ++i) {
      const Eigen::VectorXd g = 2.0 * x;  // d/dx |x|^2
      adam.step(x, g);
    }
    CHECK(x.norm() < 1e-2);
  }

  TEST_CASE("checkpoints round trip") {
    test::BanditEnv env;
    auto cfg = bandit_config();
    cfg.total_timesteps = 1024;
    cfg.checkpoint_interval = 512;
    std::vector<std::uint64_t> at;
    std::string last;
    TrainHooks hooks;
    hooks.checkpoint = [&](const PolicyParams& p, std::uint64_t t) {
      at.push_back(t);
      last = checkpoint_json(p, cfg, t);
    };
    const auto res = train(env, cfg, hooks);
    CHECK(at == std::vector<std::uint64_t>{512, 1024});
    PpoConfig echo;
    const auto loaded = load_checkpoint(last, &echo);
    CHECK(loaded.flatten() == res.params.flatten());
    CHECK(echo.rollout_horizon == cfg.rollout_horizon);
    CHECK(echo.hidden == cfg.hidden);
    CHECK(kind_of([] { load_checkpoint("{}"); }) == ErrorKind::ShapeMismatch);
  }
}
