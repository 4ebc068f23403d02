#include "htrl/policy.hpp"

#include <cmath>

#include "htrl/error.hpp"

namespace htrl {

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, std::vector<Eigen::MatrixXd>* acts) const {
  Eigen::MatrixXd h = x;
  if (acts) acts->assign(1, x);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Eigen::MatrixXd z = layers[k].weight * h;
    z.colwise() += layers[k].bias;
    if (k + 1 < layers.size()) {
      h = z.array().tanh().matrix();
      if (acts) acts->push_back(h);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

void Mlp::backward(const std::vector<Eigen::MatrixXd>& acts, const Eigen::MatrixXd& d_out,
                   Mlp& grad) const {
  Eigen::MatrixXd delta = d_out;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const Eigen::MatrixXd& input = acts[k];
    grad.layers[k].weight.noalias() += delta * input.transpose();
    grad.layers[k].bias += delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd back = layers[k].weight.transpose() * delta;
    // input = tanh(z) for every layer below the top.
    delta = back.array() * (1.0 - input.array().square());
  }
}

Mlp Mlp::zeros_like() const {
  Mlp z;
  for (const auto& l : layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::size_t PolicyParams::parameter_count() const {
  return actor.parameter_count() + critic.parameter_count();
}

namespace {

template <typename P, typename Fn>
void for_each_block(P& p, Fn fn) {
  for (auto* net : {&p.actor, &p.critic}) {
    for (auto& l : net->layers) {
      fn(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
      fn(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
  }
}

Eigen::MatrixXd orthogonal(std::size_t rows, std::size_t cols, double gain, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(std::max(rows, cols));
  const auto n = static_cast<Eigen::Index>(std::min(rows, cols));
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return gain * w;
}

Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
             double out_gain, Rng& rng) {
  Mlp net;
  std::size_t prev = in;
  for (std::size_t h : hidden) {
    net.layers.push_back({orthogonal(h, prev, std::sqrt(2.0), rng),
                          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h))});
    prev = h;
  }
  net.layers.push_back({orthogonal(out, prev, out_gain, rng),
                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))});
  return net;
}

Eigen::VectorXd to_column(std::span<const double> obs) {
  return Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
}

void check_obs(const PolicyParams& params, std::span<const double> obs) {
  if (obs.size() != params.observation_width) {
    throw Error(ErrorKind::ShapeMismatch, "observation width " + std::to_string(obs.size()) +
                                              ", policy expects " +
                                              std::to_string(params.observation_width));
  }
}

void check_action(const PolicyParams& params, const Action& action) {
  if (action.size() != params.spec.heads) {
    throw Error(ErrorKind::ShapeMismatch, "action head count mismatch");
  }
  for (int a : action) {
    if (a < 0 || static_cast<std::size_t>(a) >= params.spec.arity) {
      throw Error(ErrorKind::ShapeMismatch, "action component out of range");
    }
  }
}

}  // namespace

Eigen::VectorXd PolicyParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for_each_block(*this, [&](const double* data, std::size_t n) {
    flat.segment(pos, static_cast<Eigen::Index>(n)) =
        Eigen::Map<const Eigen::VectorXd>(data, static_cast<Eigen::Index>(n));
    pos += static_cast<Eigen::Index>(n);
  });
  return flat;
}

void PolicyParams::unflatten(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw Error(ErrorKind::ShapeMismatch, "flat parameter vector has the wrong length");
  }
  Eigen::Index pos = 0;
  for_each_block(*this, [&](double* data, std::size_t n) {
    Eigen::Map<Eigen::VectorXd>(data, static_cast<Eigen::Index>(n)) =
        flat.segment(pos, static_cast<Eigen::Index>(n));
    pos += static_cast<Eigen::Index>(n);
  });
}

PolicyParams PolicyParams::zeros_like() const {
  PolicyParams z;
  z.observation_width = observation_width;
  z.spec = spec;
  z.hidden = hidden;
  z.actor = actor.zeros_like();
  z.critic = critic.zeros_like();
  return z;
}

PolicyParams init_policy(std::size_t observation_width, ActionSpec spec,
                         const std::vector<std::size_t>& hidden, Rng& rng) {
  if (spec.heads == 0 || spec.arity < 2) {
    throw Error(ErrorKind::ShapeMismatch, "action spec needs at least one head of arity >= 2");
  }
  PolicyParams p;
  p.observation_width = observation_width;
  p.spec = spec;
  p.hidden = hidden;
  p.actor = make_mlp(observation_width, hidden, spec.heads * spec.arity, 0.01, rng);
  p.critic = make_mlp(observation_width, hidden, 1, 1.0, rng);
  return p;
}

Eigen::MatrixXd head_softmax(const Eigen::MatrixXd& logits, std::size_t arity) {
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  const auto a = static_cast<Eigen::Index>(arity);
  for (Eigen::Index h = 0; h < logits.rows(); h += a) {
    const auto block = logits.middleRows(h, a);
    const Eigen::RowVectorXd mx = block.colwise().maxCoeff();
    Eigen::MatrixXd e = (block.rowwise() - mx).array().exp().matrix();
    const Eigen::RowVectorXd sum = e.colwise().sum();
    for (Eigen::Index c = 0; c < e.cols(); ++c) e.col(c) /= sum(c);
    probs.middleRows(h, a) = e;
  }
  return probs;
}

PolicyOutput policy_eval(const PolicyParams& params, std::span<const double> observation) {
  check_obs(params, observation);
  const Eigen::VectorXd x = to_column(observation);
  const Eigen::MatrixXd probs = head_softmax(params.actor.forward(x), params.spec.arity);
  PolicyOutput out;
  const auto a = static_cast<Eigen::Index>(params.spec.arity);
  for (std::size_t h = 0; h < params.spec.heads; ++h) {
    out.heads.emplace_back(probs.col(0).segment(static_cast<Eigen::Index>(h) * a, a));
  }
  out.value = params.critic.forward(x)(0, 0);
  return out;
}

double log_prob(const PolicyParams& params, std::span<const double> observation,
                const Action& action) {
  check_action(params, action);
  const PolicyOutput out = policy_eval(params, observation);
  double lp = 0.0;
  for (std::size_t h = 0; h < action.size(); ++h) lp += std::log(out.heads[h](action[h]));
  return lp;
}

Eigen::VectorXd log_prob_gradient(const PolicyParams& params, std::span<const double> observation,
                                  const Action& action) {
  check_obs(params, observation);
  check_action(params, action);
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::MatrixXd logits = params.actor.forward(to_column(observation), &acts);
  const Eigen::MatrixXd probs = head_softmax(logits, params.spec.arity);
  Eigen::MatrixXd d_logits = -probs;
  for (std::size_t h = 0; h < action.size(); ++h) {
    d_logits(static_cast<Eigen::Index>(h * params.spec.arity) + action[h], 0) += 1.0;
  }
  PolicyParams grad = params.zeros_like();
  params.actor.backward(acts, d_logits, grad.actor);
  return grad.flatten();
}

Action sample_action(const PolicyOutput& out, Rng& rng) {
  Action a(out.heads.size());
  for (std::size_t h = 0; h < out.heads.size(); ++h) {
    const auto& p = out.heads[h];
    const double u = rng.uniform01();
    double acc = 0.0;
    int choice = static_cast<int>(p.size()) - 1;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      acc += p(k);
      if (u < acc) {
        choice = static_cast<int>(k);
        break;
      }
    }
    a[h] = choice;
  }
  return a;
}

Action greedy_action(const PolicyOutput& out) {
  Action a(out.heads.size());
  for (std::size_t h = 0; h < out.heads.size(); ++h) {
    Eigen::Index best = 0;
    out.heads[h].maxCoeff(&best);
    a[h] = static_cast<int>(best);
  }
  return a;
}

}  // namespace htrl
