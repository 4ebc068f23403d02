#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "htrl/environment.hpp"
#include "htrl/rng.hpp"

namespace htrl {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// tanh hidden layers, linear output layer. Samples are columns.
struct Mlp {
  std::vector<DenseLayer> layers;

  /// `acts` receives the input followed by every hidden activation.
  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& x,
                                        std::vector<Eigen::MatrixXd>* acts = nullptr) const;
  /// Accumulates parameter gradients into `grad` (same shapes) given the
  /// activations of a forward pass and dLoss/dOutput.
  void backward(const std::vector<Eigen::MatrixXd>& acts, const Eigen::MatrixXd& d_out,
                Mlp& grad) const;

  [[nodiscard]] Mlp zeros_like() const;
  [[nodiscard]] std::size_t parameter_count() const;
};

/// Separate actor and critic networks over the same observation.
struct PolicyParams {
  std::size_t observation_width = 0;
  ActionSpec spec;
  std::vector<std::size_t> hidden;
  Mlp actor;   // outputs heads * arity logits
  Mlp critic;  // outputs one value

  [[nodiscard]] std::size_t parameter_count() const;
  /// Actor parameters then critic, each layer weight (column-major) then bias.
  [[nodiscard]] Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  [[nodiscard]] PolicyParams zeros_like() const;
};

/// Orthogonal initialisation: gain sqrt(2) on hidden layers, 0.01 on the
/// policy output and 1 on the value output; zero biases.
PolicyParams init_policy(std::size_t observation_width, ActionSpec spec,
                         const std::vector<std::size_t>& hidden, Rng& rng);

struct PolicyOutput {
  std::vector<Eigen::VectorXd> heads;  // probabilities per head
  double value = 0.0;
};

/// Throws ShapeMismatch when the observation width is wrong.
PolicyOutput policy_eval(const PolicyParams& params, std::span<const double> observation);

double log_prob(const PolicyParams& params, std::span<const double> observation,
                const Action& action);

/// d log pi(action | observation) / d flatten(params). Critic entries are zero.
Eigen::VectorXd log_prob_gradient(const PolicyParams& params, std::span<const double> observation,
                                  const Action& action);

Action sample_action(const PolicyOutput& out, Rng& rng);
Action greedy_action(const PolicyOutput& out);

/// Row-wise softmax over consecutive blocks of `arity` rows.
Eigen::MatrixXd head_softmax(const Eigen::MatrixXd& logits, std::size_t arity);

}  // namespace htrl
