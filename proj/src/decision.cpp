#include "alpine/decision.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace alpine::decision {

void RewardParams::validate() const {
  if (!(eps_min < eps_max))
    throw std::invalid_argument("reward params: requires eps_min < eps_max");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("reward params: requires 0 < delta < 1");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("reward params: requires 0 <= rho <= 1");
  if (alpha < 0.0 || beta < 0.0 || lambda_e < 0.0)
    throw std::invalid_argument("reward params: weights must be nonnegative");
  if (!(g0 > 0.0)) throw std::invalid_argument("reward params: requires g0 > 0");
}

void TransitionParams::validate() const {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("transition params: requires eta in (0,1]");
  if (!(gamma_step > 0.0))
    throw std::invalid_argument("transition params: requires gamma_step > 0");
  if (sigma_zeta < 0.0)
    throw std::invalid_argument("transition params: requires sigma_zeta >= 0");
}

void Td3Config::validate() const {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("td3 config: requires tau in (0,1)");
  if (policy_delay < 1)
    throw std::invalid_argument("td3 config: requires policy delay >= 1");
  if (buffer_capacity < static_cast<std::size_t>(batch_size))
    throw std::invalid_argument("td3 config: buffer smaller than batch");
  if (batch_size < 1 || episodes < 1 || steps_per_episode < 1 || hidden_width < 1)
    throw std::invalid_argument("td3 config: counts must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[next_] = t;  // overwrite oldest
    next_ = (next_ + 1) % capacity_;
  }
}

static void check_state_action(double eps, double s, const RewardParams& p) {
  p.validate();
  if (!(s >= 0.0 && s <= 1.0))
    throw std::invalid_argument("state must lie in [0,1]");
  if (!(eps >= p.eps_min && eps <= p.eps_max))
    throw std::invalid_argument("eps outside [eps_min, eps_max]");
}

static double logistic(double s, const RewardParams& p) {
  return 1.0 / (1.0 + std::exp(-p.kappa * (s - p.s0)));
}

double privacy_gain(double eps, double s, const RewardParams& p) {
  check_state_action(eps, s, p);
  const double headroom = (p.eps_max - eps) / p.range();
  return logistic(s, p) * std::pow(headroom, p.delta);
}

double utility_loss(double eps, double s, const RewardParams& p) {
  check_state_action(eps, s, p);
  return (1.0 - p.rho * s) * (p.g0 / eps) * (p.g0 / eps);
}

double time_average_power(const std::vector<double>& power) {
  if (power.empty()) throw std::invalid_argument("energy window has no samples");
  if (power.size() == 1) return power[0];
  double sum = 0.5 * (power.front() + power.back());
  for (std::size_t i = 1; i + 1 < power.size(); ++i) sum += power[i];
  return sum / static_cast<double>(power.size() - 1);
}

double energy_cost(const std::vector<double>& power, double power_ceiling) {
  if (!(power_ceiling > 0.0))
    throw std::invalid_argument("power ceiling must be positive");
  return std::clamp(time_average_power(power) / power_ceiling, 0.0, 1.0);
}

double reward(double eps, double s, const RewardParams& p, double energy) {
  return p.alpha * privacy_gain(eps, s, p) - p.beta * utility_loss(eps, s, p) -
         p.lambda_e * energy;
}

double signpow(double x, double gamma) {
  return x >= 0.0 ? std::pow(x, gamma) : -std::pow(-x, gamma);
}

double step_transition(double s, double eps, const TransitionParams& tp,
                       double eps_min, double eps_max, Rng& rng) {
  tp.validate();
  if (!(s >= 0.0 && s <= 1.0))
    throw std::invalid_argument("step_transition: state outside [0,1]");
  if (!(eps >= eps_min && eps <= eps_max))
    throw std::invalid_argument("step_transition: eps outside bounds");
  const double goal = (eps_max - eps) / (eps_max - eps_min);
  const double zeta = tp.sigma_zeta > 0.0 ? rng.normal(0.0, tp.sigma_zeta) : 0.0;
  return std::clamp(s + tp.eta * signpow(goal - s, tp.gamma_step) + zeta, 0.0, 1.0);
}

double reward_derivative(double eps, double s, const RewardParams& p) {
  check_state_action(eps, s, p);
  const double range = p.range();
  const double hr = (p.eps_max - eps) / range;
  const double dgain = -p.alpha * logistic(s, p) * p.delta / range *
                       std::pow(hr, p.delta - 1.0);
  const double dloss = p.beta * (1.0 - p.rho * s) * 2.0 * p.g0 * p.g0 /
                       (eps * eps * eps);
  return dgain + dloss;
}

double analytic_optimum(double s, const RewardParams& p) {
  p.validate();
  if (!(s >= 0.0 && s <= 1.0))
    throw std::invalid_argument("analytic_optimum: state outside [0,1]");
  // Boundary derivative as eps -> eps_min+ (the headroom factor equals 1).
  const double boundary = -p.alpha * logistic(s, p) * p.delta / p.range() +
                          p.beta * (1.0 - p.rho * s) * 2.0 * p.g0 * p.g0 /
                              (p.eps_min * p.eps_min * p.eps_min);
  if (boundary <= 0.0) return p.eps_min;
  // dW/deps is positive at eps_min and diverges to -inf at eps_max; the
  // root is the unique interior maximizer.
  double lo = p.eps_min;
  double hi = p.eps_max - 1e-13 * p.range();
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    if (reward_derivative(mid, s, p) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> BudgetEnv::step(double s, double eps, Rng& rng) const {
  const double r = reward(eps, s, rp, energy);
  const double s_next = step_transition(s, eps, tp, rp.eps_min, rp.eps_max, rng);
  return {r, s_next};
}

double Actor::eval(double s) const {
  const double y = net.forward({s})[0];  // tanh output in [-1,1]
  return eps_min + (eps_max - eps_min) * 0.5 * (y + 1.0);
}

double act(const Actor& actor, double s, bool explore, double explore_sd, Rng& rng) {
  double eps = actor.eval(s);
  if (explore) eps += rng.normal(0.0, explore_sd);
  return std::clamp(eps, actor.eps_min, actor.eps_max);
}

namespace {

nn::Mlp make_actor_net(int hidden, Rng& rng) {
  nn::Mlp net;
  net.layers.emplace_back(1, hidden, nn::Act::Tanh);
  net.layers.emplace_back(hidden, hidden, nn::Act::Tanh);
  net.layers.emplace_back(hidden, 1, nn::Act::Tanh);
  net.init(rng);
  return net;
}

nn::Mlp make_critic_net(int hidden, Rng& rng) {
  nn::Mlp net;
  net.layers.emplace_back(2, hidden, nn::Act::Tanh);
  net.layers.emplace_back(hidden, hidden, nn::Act::Tanh);
  net.layers.emplace_back(hidden, 1, nn::Act::None);
  net.init(rng);
  return net;
}

}  // namespace

TrainedAgent td3_train(const BudgetEnv& env, const Td3Config& cfg,
                       std::uint64_t seed) {
  cfg.validate();
  env.rp.validate();
  env.tp.validate();
  const RewardParams& rp = env.rp;
  const double range = rp.range();

  Rng init_rng(derive_seed(seed, "init"));
  Rng run_rng(derive_seed(seed, "run"));

  TrainedAgent agent;
  agent.reward_params = rp;
  agent.actor = Actor{make_actor_net(cfg.hidden_width, init_rng), rp.eps_min, rp.eps_max};
  agent.critic1 = make_critic_net(cfg.hidden_width, init_rng);
  agent.critic2 = make_critic_net(cfg.hidden_width, init_rng);

  nn::Mlp actor_t = agent.actor.net;  // targets start equal to the mains
  nn::Mlp critic1_t = agent.critic1;
  nn::Mlp critic2_t = agent.critic2;

  ReplayBuffer buffer(cfg.buffer_capacity);
  const int batch = cfg.batch_size;

  nn::Workspace ws_c1, ws_c2, ws_actor, ws_pol;
  nn::MlpGrads g_c1, g_c2, g_actor;
  g_c1.init_like(agent.critic1);
  g_c2.init_like(agent.critic2);
  g_actor.init_like(agent.actor.net);
  nn::AdamOpt opt_c1(cfg.critic_lr), opt_c2(cfg.critic_lr), opt_actor(cfg.actor_lr);

  std::vector<double> sa(batch * 2), s_next_in(batch), target_sa(batch * 2);
  std::vector<double> y(batch), dy(batch), dx;
  std::vector<Transition> mb(batch);

  long update_step = 0;
  double last_actor_loss = 0.0;
  agent.curve.reserve(static_cast<std::size_t>(cfg.episodes) * cfg.steps_per_episode);

  // Critic inputs use the action normalized to [0,1].
  auto norm_a = [&](double eps) { return (eps - rp.eps_min) / range; };

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    double s = run_rng.uniform01();  // R_risk ~ Uniform(0,1)
    for (int t = 0; t < cfg.steps_per_episode; ++t) {
      const double a = act(agent.actor, s, true, cfg.explore_noise_sd, run_rng);
      const auto [r, s_next] = env.step(s, a, run_rng);
      buffer.push({s, a, r, s_next});
      s = s_next;

      if (buffer.size() < static_cast<std::size_t>(batch)) continue;
      ++update_step;

      double batch_reward = 0.0;
      for (int i = 0; i < batch; ++i) {
        mb[i] = buffer.sample(run_rng);
        batch_reward += mb[i].r;
        // Target action with clipped smoothing noise.
        double noise = run_rng.normal(0.0, cfg.policy_noise_sd);
        noise = std::clamp(noise, -cfg.policy_noise_clip, cfg.policy_noise_clip);
        assert(std::abs(noise) <= cfg.policy_noise_clip);
        const double ta_raw = rp.eps_min + range * 0.5 *
                              (actor_t.forward({mb[i].s_next})[0] + 1.0);
        const double ta = std::clamp(ta_raw + noise, rp.eps_min, rp.eps_max);
        target_sa[2 * i] = mb[i].s_next;
        target_sa[2 * i + 1] = norm_a(ta);
        sa[2 * i] = mb[i].s;
        sa[2 * i + 1] = norm_a(mb[i].a);
      }
      batch_reward /= batch;

      const auto q1t = critic1_t.forward_batch(target_sa, batch);
      const auto q2t = critic2_t.forward_batch(target_sa, batch);
      for (int i = 0; i < batch; ++i)
        y[i] = mb[i].r + cfg.discount * std::min(q1t[i], q2t[i]);

      nn::forward_batch(agent.critic1, sa, batch, ws_c1);
      const double loss1 = nn::mse_loss(ws_c1.acts.back(), y, dy);
      g_c1.zero();
      nn::backward_batch(agent.critic1, ws_c1, batch, dy, g_c1);
      opt_c1.step(agent.critic1, g_c1);

      nn::forward_batch(agent.critic2, sa, batch, ws_c2);
      const double loss2 = nn::mse_loss(ws_c2.acts.back(), y, dy);
      g_c2.zero();
      nn::backward_batch(agent.critic2, ws_c2, batch, dy, g_c2);
      opt_c2.step(agent.critic2, g_c2);

      if (!std::isfinite(loss1) || !std::isfinite(loss2))
        throw DivergenceError("td3_train: critic loss diverged at update step " +
                              std::to_string(update_step));

      if (update_step % cfg.policy_delay == 0) {
        // Deterministic policy gradient through critic 1.
        std::vector<double> states(batch);
        for (int i = 0; i < batch; ++i) states[i] = mb[i].s;
        nn::forward_batch(agent.actor.net, states, batch, ws_pol);
        const auto& tanh_out = ws_pol.acts.back();
        std::vector<double> actor_sa(batch * 2);
        for (int i = 0; i < batch; ++i) {
          actor_sa[2 * i] = mb[i].s;
          actor_sa[2 * i + 1] = 0.5 * (tanh_out[i] + 1.0);  // normalized action
        }
        nn::forward_batch(agent.critic1, actor_sa, batch, ws_c1);
        double q_mean = 0.0;
        for (int i = 0; i < batch; ++i) q_mean += ws_c1.acts.back()[i];
        q_mean /= batch;
        last_actor_loss = -q_mean;
        if (!std::isfinite(last_actor_loss))
          throw DivergenceError("td3_train: actor loss diverged at update step " +
                                std::to_string(update_step));

        // dQ/d(input) of critic 1, then chain into the actor.
        std::vector<double> dq(batch, -1.0 / batch);
        g_c1.zero();  // grads discarded; only dx is needed
        nn::backward_batch(agent.critic1, ws_c1, batch, dq, g_c1, &dx);
        std::vector<double> d_actor(batch);
        for (int i = 0; i < batch; ++i) d_actor[i] = dx[2 * i + 1] * 0.5;
        g_actor.zero();
        nn::backward_batch(agent.actor.net, ws_pol, batch, d_actor, g_actor);
        opt_actor.step(agent.actor.net, g_actor);

        nn::soft_update(actor_t, agent.actor.net, cfg.tau);
        nn::soft_update(critic1_t, agent.critic1, cfg.tau);
        nn::soft_update(critic2_t, agent.critic2, cfg.tau);
      }

      agent.curve.push_back(
          {update_step, loss1, loss2, last_actor_loss, batch_reward});
    }
  }
  return agent;
}

}  // namespace alpine::decision
