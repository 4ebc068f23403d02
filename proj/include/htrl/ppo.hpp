#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "htrl/environment.hpp"
#include "htrl/policy.hpp"

namespace htrl {

struct PpoConfig {
  std::uint64_t total_timesteps = 100000;
  std::size_t rollout_horizon = 2048;
  std::size_t epochs = 10;
  std::size_t minibatch = 64;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double learning_rate = 3e-4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  bool normalize_advantage = true;
  std::vector<std::size_t> hidden{64, 64};
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_interval = 0;  // timesteps; 0 disables

  /// Throws DomainError on out-of-range settings.
  void validate() const;
};

struct EpisodeRecord {
  std::uint64_t end_timestep;
  double reward;
  std::size_t length;
};

struct CurveRow {
  std::uint64_t timestep;
  double mean_episode_reward;  // last 100 finished episodes; NaN before the first
  double mean_episode_length;
  double policy_loss;
  double value_loss;
  double entropy;
  double approx_kl;
  double clip_fraction;
  double first_ratio_deviation;  // max |ratio - 1| on the first minibatch of the update
};

struct TrainingCurve {
  std::vector<CurveRow> rows;
  std::vector<EpisodeRecord> episodes;

  [[nodiscard]] std::string to_csv() const;
  /// Mean episode reward over the first and last tenth of finished episodes.
  [[nodiscard]] std::pair<double, double> decile_means() const;
};

struct StepContext {
  std::size_t episode;
  std::size_t step;
  const Observation& observation;  // before the action
  const Action& action;
  const StepResult& result;
};
using StepObserver = std::function<void(const StepContext&)>;

struct TrainHooks {
  std::function<void(const PolicyParams&, std::uint64_t timestep)> checkpoint;
  StepObserver on_step;
};

struct TrainResult {
  PolicyParams params;
  TrainingCurve curve;
};

/// Clipped-surrogate PPO with GAE. Deterministic for a given config and
/// environment. Throws NonFiniteLoss if an update diverges.
TrainResult train(Environment& env, const PpoConfig& cfg, const TrainHooks& hooks = {});

/// Advantages for one rollout. dones[t] marks that the episode ended after
/// step t; truncation bootstrapping must already be folded into the rewards.
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const std::uint8_t> dones, double last_value,
                                double gamma, double lambda);

struct Batch {
  Eigen::MatrixXd observations;  // width x B
  std::vector<Action> actions;
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct LossTerms {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double max_ratio_deviation = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Loss of one minibatch; accumulates dLoss/dparams into `grad` if given.
LossTerms ppo_loss(const PolicyParams& params, const Batch& batch, const PpoConfig& cfg,
                   PolicyParams* grad);

/// Adam over flattened parameters.
class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-5);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

enum class PolicyMode { Sample, Greedy };

struct EpisodeLog {
  std::vector<Action> actions;
  std::vector<double> rewards;
  Observation final_observation;
};

/// Runs whole episodes with fixed parameters. `observer` sees every step;
/// logs are kept only when `keep_logs` is set.
std::vector<EpisodeLog> run_policy(const PolicyParams& params, Environment& env,
                                   std::size_t episodes, PolicyMode mode, std::uint64_t seed,
                                   const StepObserver& observer = {}, bool keep_logs = true);

/// JSON checkpoint: config echo plus every tensor.
std::string checkpoint_json(const PolicyParams& params, const PpoConfig& cfg,
                            std::uint64_t timestep);
PolicyParams load_checkpoint(std::string_view json, PpoConfig* cfg = nullptr);

}  // namespace htrl
