#include "htrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "htrl/error.hpp"

namespace htrl {

void PpoConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::DomainError, what);
  };
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(clip > 0.0 && clip < 1.0, "clip must lie in (0, 1)");
  require(rollout_horizon > 0, "rollout_horizon must be positive");
  require(minibatch > 0 && minibatch <= rollout_horizon, "minibatch must lie in [1, horizon]");
  require(epochs > 0, "epochs must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(max_grad_norm > 0.0, "max_grad_norm must be positive");
}

std::string TrainingCurve::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "timestep,mean_ep_reward,mean_ep_len,policy_loss,value_loss,entropy,approx_kl,"
        "clip_fraction\n";
  for (const auto& r : rows) {
    os << r.timestep << ',' << r.mean_episode_reward << ',' << r.mean_episode_length << ','
       << r.policy_loss << ',' << r.value_loss << ',' << r.entropy << ',' << r.approx_kl << ','
       << r.clip_fraction << '\n';
  }
  return os.str();
}

std::pair<double, double> TrainingCurve::decile_means() const {
  if (episodes.empty()) return {NAN, NAN};
  const std::size_t k = std::max<std::size_t>(1, episodes.size() / 10);
  double first = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    first += episodes[i].reward;
    last += episodes[episodes.size() - k + i].reward;
  }
  return {first / static_cast<double>(k), last / static_cast<double>(k)};
}

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const std::uint8_t> dones, double last_value,
                                double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : last_value;
    const double alive = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * alive - values[t];
    running = delta + gamma * lambda * alive * running;
    adv[t] = running;
  }
  return adv;
}

namespace {

/// Log-softmax per head block.
Eigen::MatrixXd head_log_softmax(const Eigen::MatrixXd& logits, std::size_t arity) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  const auto a = static_cast<Eigen::Index>(arity);
  for (Eigen::Index h = 0; h < logits.rows(); h += a) {
    const auto block = logits.middleRows(h, a);
    const Eigen::RowVectorXd mx = block.colwise().maxCoeff();
    Eigen::MatrixXd shifted = block.rowwise() - mx;
    const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log().matrix();
    out.middleRows(h, a) = shifted.rowwise() - lse;
  }
  return out;
}

struct SingleEval {
  Eigen::VectorXd log_probs;  // heads * arity
  double value;
};

SingleEval evaluate_single(const PolicyParams& p, const Observation& obs) {
  const Eigen::Map<const Eigen::VectorXd> x(obs.data(), static_cast<Eigen::Index>(obs.size()));
  const Eigen::MatrixXd xm = x;
  SingleEval e;
  e.log_probs = head_log_softmax(p.actor.forward(xm), p.spec.arity).col(0);
  e.value = p.critic.forward(xm)(0, 0);
  return e;
}

Action sample_from_log_probs(const Eigen::VectorXd& lp, const ActionSpec& spec, Rng& rng) {
  Action a(spec.heads);
  const auto ar = static_cast<Eigen::Index>(spec.arity);
  for (std::size_t h = 0; h < spec.heads; ++h) {
    const Eigen::Index base = static_cast<Eigen::Index>(h) * ar;
    const double u = rng.uniform01();
    double acc = 0.0;
    int choice = -1;
    int last_positive = 0;
    for (Eigen::Index k = 0; k < ar; ++k) {
      const double p = std::exp(lp(base + k));
      if (p > 0.0) last_positive = static_cast<int>(k);
      acc += p;
      if (choice < 0 && u < acc) choice = static_cast<int>(k);
    }
    a[h] = choice < 0 ? last_positive : choice;
  }
  return a;
}

double action_log_prob(const Eigen::VectorXd& lp, const Action& a, std::size_t arity) {
  double s = 0.0;
  for (std::size_t h = 0; h < a.size(); ++h) {
    s += lp(static_cast<Eigen::Index>(h * arity) + a[h]);
  }
  return s;
}

}  // namespace

LossTerms ppo_loss(const PolicyParams& params, const Batch& batch, const PpoConfig& cfg,
                   PolicyParams* grad) {
  const auto b = batch.observations.cols();
  const double inv_b = 1.0 / static_cast<double>(b);
  const std::size_t arity = params.spec.arity;
  const auto heads = static_cast<Eigen::Index>(params.spec.heads);
  const auto ar = static_cast<Eigen::Index>(arity);

  std::vector<Eigen::MatrixXd> actor_acts;
  std::vector<Eigen::MatrixXd> critic_acts;
  const Eigen::MatrixXd logits = params.actor.forward(batch.observations, &actor_acts);
  const Eigen::MatrixXd values = params.critic.forward(batch.observations, &critic_acts);
  const Eigen::MatrixXd logp = head_log_softmax(logits, arity);
  const Eigen::MatrixXd probs = logp.array().exp().matrix();

  Eigen::VectorXd adv = batch.advantages;
  if (cfg.normalize_advantage && b > 1) {
    const double mean = adv.mean();
    const double var = (adv.array() - mean).square().sum() / static_cast<double>(b - 1);
    adv = ((adv.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
  }

  LossTerms out;
  Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(logits.rows(), b);
  Eigen::MatrixXd d_values(1, b);
  std::size_t clipped = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const Action& act = batch.actions[static_cast<std::size_t>(i)];
    double lp_new = 0.0;
    for (Eigen::Index h = 0; h < heads; ++h) lp_new += logp(h * ar + act[static_cast<std::size_t>(h)], i);
    const double log_ratio = lp_new - batch.old_log_prob(i);
    const double ratio = std::exp(log_ratio);
    const double a = adv(i);
    const double surr1 = ratio * a;
    const double surr2 = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * a;
    out.policy_loss -= std::min(surr1, surr2) * inv_b;
    out.max_ratio_deviation = std::max(out.max_ratio_deviation, std::abs(ratio - 1.0));
    if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;
    out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_b;

    // Only the unclipped branch carries gradient.
    const double coef = surr1 <= surr2 ? -ratio * a * inv_b : 0.0;
    for (Eigen::Index h = 0; h < heads; ++h) {
      double ent = 0.0;
      for (Eigen::Index k = 0; k < ar; ++k) ent -= probs(h * ar + k, i) * logp(h * ar + k, i);
      out.entropy += ent * inv_b;
      for (Eigen::Index k = 0; k < ar; ++k) {
        const Eigen::Index row = h * ar + k;
        const double onehot = k == act[static_cast<std::size_t>(h)] ? 1.0 : 0.0;
        d_logits(row, i) += coef * (onehot - probs(row, i));
        // d(-c * H)/dlogit_k = c * p_k (log p_k + H)
        d_logits(row, i) += cfg.entropy_coef * inv_b * probs(row, i) * (logp(row, i) + ent);
      }
    }
    const double err = values(0, i) - batch.returns(i);
    out.value_loss += err * err * inv_b;
    d_values(0, i) = cfg.value_coef * 2.0 * err * inv_b;
  }
  out.clip_fraction = static_cast<double>(clipped) * inv_b;
  out.total = out.policy_loss + cfg.value_coef * out.value_loss - cfg.entropy_coef * out.entropy;
  if (grad != nullptr) {
    params.actor.backward(actor_acts, d_logits, grad->actor);
    params.critic.backward(critic_acts, d_values, grad->critic);
  }
  return out;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

TrainResult train(Environment& env, const PpoConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  Rng root(cfg.seed);
  Rng init_rng = root.split();
  Rng env_rng = root.split();
  Rng action_rng = root.split();
  Rng shuffle_rng = root.split();

  const ActionSpec spec = env.action_spec();
  const std::size_t width = env.observation_width();
  TrainResult result{init_policy(width, spec, cfg.hidden, init_rng), {}};
  PolicyParams& params = result.params;
  Adam adam(params.parameter_count(), cfg.learning_rate);

  std::deque<EpisodeRecord> window;
  Observation obs = env.reset(env_rng);
  double ep_reward = 0.0;
  std::size_t ep_len = 0;
  std::size_t episode = 0;
  std::uint64_t timestep = 0;
  std::uint64_t next_checkpoint = cfg.checkpoint_interval;

  while (timestep < cfg.total_timesteps) {
    const std::size_t horizon = static_cast<std::size_t>(
        std::min<std::uint64_t>(cfg.rollout_horizon, cfg.total_timesteps - timestep));
    Eigen::MatrixXd observations(static_cast<Eigen::Index>(width),
                                 static_cast<Eigen::Index>(horizon));
    std::vector<Action> actions(horizon);
    std::vector<double> rewards(horizon);
    std::vector<double> values(horizon);
    std::vector<double> old_logp(horizon);
    std::vector<std::uint8_t> dones(horizon);

    for (std::size_t t = 0; t < horizon; ++t) {
      const SingleEval e = evaluate_single(params, obs);
      Action a = sample_from_log_probs(e.log_probs, spec, action_rng);
      observations.col(static_cast<Eigen::Index>(t)) =
          Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(width));
      const StepResult r = env.step(a);
      ++timestep;
      ++ep_len;
      ep_reward += r.reward;
      if (hooks.on_step) hooks.on_step(StepContext{episode, ep_len - 1, obs, a, r});

      double reward = r.reward;
      if (r.truncated && !r.terminal) {
        reward += cfg.gamma * evaluate_single(params, r.observation).value;
      }
      rewards[t] = reward;
      values[t] = e.value;
      old_logp[t] = action_log_prob(e.log_probs, a, spec.arity);
      actions[t] = std::move(a);
      dones[t] = r.done() ? 1 : 0;

      if (r.done()) {
        const EpisodeRecord rec{timestep, ep_reward, ep_len};
        result.curve.episodes.push_back(rec);
        window.push_back(rec);
        if (window.size() > 100) window.pop_front();
        ep_reward = 0.0;
        ep_len = 0;
        ++episode;
        obs = env.reset(env_rng);
      } else {
        obs = r.observation;
      }
    }

    const double last_value = evaluate_single(params, obs).value;
    const std::vector<double> adv =
        compute_gae(rewards, values, dones, last_value, cfg.gamma, cfg.gae_lambda);

    std::vector<std::size_t> order(horizon);
    std::iota(order.begin(), order.end(), 0);
    LossTerms sum{};
    std::size_t minibatches = 0;
    double first_deviation = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = horizon; i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.uniform(i)]);
      }
      for (std::size_t start = 0; start < horizon; start += cfg.minibatch) {
        const std::size_t count = std::min(cfg.minibatch, horizon - start);
        Batch batch;
        batch.observations.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(count));
        batch.old_log_prob.resize(static_cast<Eigen::Index>(count));
        batch.advantages.resize(static_cast<Eigen::Index>(count));
        batch.returns.resize(static_cast<Eigen::Index>(count));
        for (std::size_t k = 0; k < count; ++k) {
          const std::size_t idx = order[start + k];
          const auto col = static_cast<Eigen::Index>(k);
          batch.observations.col(col) = observations.col(static_cast<Eigen::Index>(idx));
          batch.actions.push_back(actions[idx]);
          batch.old_log_prob(col) = old_logp[idx];
          batch.advantages(col) = adv[idx];
          batch.returns(col) = adv[idx] + values[idx];
        }
        PolicyParams grad = params.zeros_like();
        const LossTerms loss = ppo_loss(params, batch, cfg, &grad);
        if (!std::isfinite(loss.total)) {
          throw Error(ErrorKind::NonFiniteLoss,
                      "loss became non-finite at timestep " + std::to_string(timestep));
        }
        if (minibatches == 0) first_deviation = loss.max_ratio_deviation;
        Eigen::VectorXd g = grad.flatten();
        const double norm = g.norm();
        if (norm > cfg.max_grad_norm) g *= cfg.max_grad_norm / (norm + 1e-6);
        Eigen::VectorXd flat = params.flatten();
        adam.step(flat, g);
        params.unflatten(flat);
        if (epoch + 1 == cfg.epochs) {
          sum.policy_loss += loss.policy_loss;
          sum.value_loss += loss.value_loss;
          sum.entropy += loss.entropy;
          sum.approx_kl += loss.approx_kl;
          sum.clip_fraction += loss.clip_fraction;
        }
        ++minibatches;
      }
    }
    const double per_epoch =
        static_cast<double>((horizon + cfg.minibatch - 1) / cfg.minibatch);
    CurveRow row{};
    row.timestep = timestep;
    row.mean_episode_reward = NAN;
    row.mean_episode_length = NAN;
    if (!window.empty()) {
      double rs = 0.0;
      double ls = 0.0;
      for (const auto& e : window) {
        rs += e.reward;
        ls += static_cast<double>(e.length);
      }
      row.mean_episode_reward = rs / static_cast<double>(window.size());
      row.mean_episode_length = ls / static_cast<double>(window.size());
    }
    row.policy_loss = sum.policy_loss / per_epoch;
    row.value_loss = sum.value_loss / per_epoch;
    row.entropy = sum.entropy / per_epoch;
    row.approx_kl = sum.approx_kl / per_epoch;
    row.clip_fraction = sum.clip_fraction / per_epoch;
    row.first_ratio_deviation = first_deviation;
    result.curve.rows.push_back(row);

    if (hooks.checkpoint && cfg.checkpoint_interval > 0 && timestep >= next_checkpoint) {
      hooks.checkpoint(params, timestep);
      while (next_checkpoint <= timestep) next_checkpoint += cfg.checkpoint_interval;
    }
  }
  return result;
}

std::vector<EpisodeLog> run_policy(const PolicyParams& params, Environment& env,
                                   std::size_t episodes, PolicyMode mode, std::uint64_t seed,
                                   const StepObserver& observer, bool keep_logs) {
  if (env.observation_width() != params.observation_width || !(env.action_spec() == params.spec)) {
    throw Error(ErrorKind::EnvContractViolation, "policy does not match the environment");
  }
  Rng root(seed);
  Rng env_rng = root.split();
  Rng action_rng = root.split();
  std::vector<EpisodeLog> logs;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    EpisodeLog log;
    Observation obs = env.reset(env_rng);
    for (std::size_t step = 0;; ++step) {
      const SingleEval e = evaluate_single(params, obs);
      Action a;
      if (mode == PolicyMode::Greedy) {
        a.resize(params.spec.heads);
        const auto ar = static_cast<Eigen::Index>(params.spec.arity);
        for (std::size_t h = 0; h < params.spec.heads; ++h) {
          Eigen::Index best = 0;
          e.log_probs.segment(static_cast<Eigen::Index>(h) * ar, ar).maxCoeff(&best);
          a[h] = static_cast<int>(best);
        }
      } else {
        a = sample_from_log_probs(e.log_probs, params.spec, action_rng);
      }
      const StepResult r = env.step(a);
      if (observer) observer(StepContext{ep, step, obs, a, r});
      if (keep_logs) {
        log.actions.push_back(a);
        log.rewards.push_back(r.reward);
      }
      obs = r.observation;
      if (r.done()) break;
    }
    if (keep_logs) {
      log.final_observation = obs;
      logs.push_back(std::move(log));
    }
  }
  return logs;
}

namespace {

nlohmann::ordered_json mlp_to_json(const Mlp& net) {
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : net.layers) {
    nlohmann::ordered_json j;
    j["rows"] = l.weight.rows();
    j["cols"] = l.weight.cols();
    j["weight"] = std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size());
    j["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back(std::move(j));
  }
  return layers;
}

Mlp mlp_from_json(const nlohmann::json& layers) {
  Mlp net;
  for (const auto& j : layers) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto w = j.at("weight").get<std::vector<double>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows) {
      throw Error(ErrorKind::ShapeMismatch, "checkpoint tensor has inconsistent size");
    }
    DenseLayer l{Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols),
                 Eigen::Map<const Eigen::VectorXd>(b.data(), rows)};
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace

std::string checkpoint_json(const PolicyParams& params, const PpoConfig& cfg,
                            std::uint64_t timestep) {
  nlohmann::ordered_json j;
  j["format"] = "htrl-policy";
  j["version"] = 1;
  j["timestep"] = timestep;
  nlohmann::ordered_json c;
  c["total_timesteps"] = cfg.total_timesteps;
  c["rollout_horizon"] = cfg.rollout_horizon;
  c["epochs"] = cfg.epochs;
  c["minibatch"] = cfg.minibatch;
  c["gamma"] = cfg.gamma;
  c["gae_lambda"] = cfg.gae_lambda;
  c["clip"] = cfg.clip;
  c["learning_rate"] = cfg.learning_rate;
  c["entropy_coef"] = cfg.entropy_coef;
  c["value_coef"] = cfg.value_coef;
  c["max_grad_norm"] = cfg.max_grad_norm;
  c["normalize_advantage"] = cfg.normalize_advantage;
  c["hidden"] = cfg.hidden;
  c["seed"] = cfg.seed;
  c["checkpoint_interval"] = cfg.checkpoint_interval;
  j["config"] = std::move(c);
  j["observation_width"] = params.observation_width;
  j["action_kind"] = params.spec.kind == ActionKind::MultiBinary ? "multi_binary" : "multi_discrete";
  j["heads"] = params.spec.heads;
  j["arity"] = params.spec.arity;
  j["actor"] = mlp_to_json(params.actor);
  j["critic"] = mlp_to_json(params.critic);
  return j.dump() + "\n";
}

PolicyParams load_checkpoint(std::string_view json, PpoConfig* cfg) {
  try {
    const auto j = nlohmann::json::parse(json);
    if (j.at("format") != "htrl-policy" || j.at("version") != 1) {
      throw Error(ErrorKind::ShapeMismatch, "not a policy checkpoint");
    }
    PolicyParams p;
    p.observation_width = j.at("observation_width").get<std::size_t>();
    p.spec.kind = j.at("action_kind") == "multi_binary" ? ActionKind::MultiBinary
                                                        : ActionKind::MultiDiscrete;
    p.spec.heads = j.at("heads").get<std::size_t>();
    p.spec.arity = j.at("arity").get<std::size_t>();
    const auto& c = j.at("config");
    p.hidden = c.at("hidden").get<std::vector<std::size_t>>();
    p.actor = mlp_from_json(j.at("actor"));
    p.critic = mlp_from_json(j.at("critic"));
    if (cfg != nullptr) {
      cfg->total_timesteps = c.at("total_timesteps").get<std::uint64_t>();
      cfg->rollout_horizon = c.at("rollout_horizon").get<std::size_t>();
      cfg->epochs = c.at("epochs").get<std::size_t>();
      cfg->minibatch = c.at("minibatch").get<std::size_t>();
      cfg->gamma = c.at("gamma").get<double>();
      cfg->gae_lambda = c.at("gae_lambda").get<double>();
      cfg->clip = c.at("clip").get<double>();
      cfg->learning_rate = c.at("learning_rate").get<double>();
      cfg->entropy_coef = c.at("entropy_coef").get<double>();
      cfg->value_coef = c.at("value_coef").get<double>();
      cfg->max_grad_norm = c.at("max_grad_norm").get<double>();
      cfg->normalize_advantage = c.at("normalize_advantage").get<bool>();
      cfg->hidden = p.hidden;
      cfg->seed = c.at("seed").get<std::uint64_t>();
      cfg->checkpoint_interval = c.at("checkpoint_interval").get<std::uint64_t>();
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ShapeMismatch, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace htrl
