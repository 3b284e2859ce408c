#include "alpine/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace alpine::nn {

Dense::Dense(int in_dim, int out_dim, Act activation)
    : in(in_dim), out(out_dim), act(activation) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("Dense: widths must be positive");
  w.assign(static_cast<std::size_t>(in) * out, 0.0);
  b.assign(out, 0.0);
}

void Dense::init(Rng& rng) {
  // Uniform He-style fan-in scaling.
  double bound = std::sqrt(1.0 / in);
  for (double& v : w) v = rng.uniform(-bound, bound);
  for (double& v : b) v = rng.uniform(-bound, bound);
}

static inline void apply_act(Act act, double* y, std::size_t n) {
  switch (act) {
    case Act::None:
      break;
    case Act::Relu:
      for (std::size_t i = 0; i < n; ++i)
        if (y[i] < 0.0) y[i] = 0.0;
      break;
    case Act::Tanh:
      for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(y[i]);
      break;
  }
}

void dense_forward(const Dense& layer, const double* x, int n, double* y) {
  const int in = layer.in, out = layer.out;
  for (int s = 0; s < n; ++s) {
    const double* xs = x + static_cast<std::size_t>(s) * in;
    double* ys = y + static_cast<std::size_t>(s) * out;
    for (int o = 0; o < out; ++o) {
      const double* wr = layer.w.data() + static_cast<std::size_t>(o) * in;
      double acc = layer.b[o];
      for (int i = 0; i < in; ++i) acc += wr[i] * xs[i];
      ys[o] = acc;
    }
  }
  apply_act(layer.act, y, static_cast<std::size_t>(n) * out);
}

std::size_t Mlp::param_count() const {
  std::size_t c = 0;
  for (const auto& l : layers) c += l.param_count();
  return c;
}

std::size_t Mlp::mac_count() const {
  std::size_t c = 0;
  for (const auto& l : layers) c += l.mac_count();
  return c;
}

void Mlp::init(Rng& rng) {
  for (auto& l : layers) l.init(rng);
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
  return forward_batch(x, 1);
}

std::vector<double> Mlp::forward_batch(const std::vector<double>& x, int n) const {
  if (layers.empty()) return x;
  if (x.size() != static_cast<std::size_t>(n) * layers.front().in)
    throw std::invalid_argument("Mlp::forward_batch: input size mismatch");
  std::vector<double> cur = x;
  std::vector<double> next;
  for (const auto& l : layers) {
    next.assign(static_cast<std::size_t>(n) * l.out, 0.0);
    dense_forward(l, cur.data(), n, next.data());
    cur.swap(next);
  }
  return cur;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.w.begin(), l.w.end());
    flat.insert(flat.end(), l.b.begin(), l.b.end());
  }
  return flat;
}

void Mlp::unflatten(const std::vector<double>& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("Mlp::unflatten: size mismatch");
  std::size_t pos = 0;
  for (auto& l : layers) {
    std::copy(flat.begin() + pos, flat.begin() + pos + l.w.size(), l.w.begin());
    pos += l.w.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + l.b.size(), l.b.begin());
    pos += l.b.size();
  }
}

void MlpGrads::init_like(const Mlp& net) {
  layers.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    layers[i].w.assign(net.layers[i].w.size(), 0.0);
    layers[i].b.assign(net.layers[i].b.size(), 0.0);
  }
}

void MlpGrads::zero() {
  for (auto& g : layers) {
    std::fill(g.w.begin(), g.w.end(), 0.0);
    std::fill(g.b.begin(), g.b.end(), 0.0);
  }
}

void forward_batch(const Mlp& net, const std::vector<double>& x, int n,
                   Workspace& ws) {
  ws.acts.resize(net.layers.size() + 1);
  ws.acts[0] = x;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Dense& l = net.layers[li];
    ws.acts[li + 1].assign(static_cast<std::size_t>(n) * l.out, 0.0);
    dense_forward(l, ws.acts[li].data(), n, ws.acts[li + 1].data());
  }
}

void backward_batch(const Mlp& net, const Workspace& ws, int n,
                    const std::vector<double>& dy, MlpGrads& grads,
                    std::vector<double>* dx) {
  std::vector<double> delta = dy;
  std::vector<double> delta_prev;
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const Dense& l = net.layers[li];
    const std::vector<double>& a_out = ws.acts[li + 1];
    const std::vector<double>& a_in = ws.acts[li];
    // Through the activation (post-activation values suffice).
    switch (l.act) {
      case Act::None:
        break;
      case Act::Relu:
        for (std::size_t i = 0; i < delta.size(); ++i)
          if (a_out[i] <= 0.0) delta[i] = 0.0;
        break;
      case Act::Tanh:
        for (std::size_t i = 0; i < delta.size(); ++i)
          delta[i] *= 1.0 - a_out[i] * a_out[i];
        break;
    }
    DenseGrads& g = grads.layers[li];
    for (int s = 0; s < n; ++s) {
      const double* ds = delta.data() + static_cast<std::size_t>(s) * l.out;
      const double* xs = a_in.data() + static_cast<std::size_t>(s) * l.in;
      for (int o = 0; o < l.out; ++o) {
        const double d = ds[o];
        if (d == 0.0) continue;
        g.b[o] += d;
        double* gw = g.w.data() + static_cast<std::size_t>(o) * l.in;
        for (int i = 0; i < l.in; ++i) gw[i] += d * xs[i];
      }
    }
    const bool need_dx = li > 0 || dx != nullptr;
    if (!need_dx) break;
    delta_prev.assign(static_cast<std::size_t>(n) * l.in, 0.0);
    for (int s = 0; s < n; ++s) {
      const double* ds = delta.data() + static_cast<std::size_t>(s) * l.out;
      double* dp = delta_prev.data() + static_cast<std::size_t>(s) * l.in;
      for (int o = 0; o < l.out; ++o) {
        const double d = ds[o];
        if (d == 0.0) continue;
        const double* wr = l.w.data() + static_cast<std::size_t>(o) * l.in;
        for (int i = 0; i < l.in; ++i) dp[i] += d * wr[i];
      }
    }
    delta.swap(delta_prev);
  }
  if (dx != nullptr) *dx = std::move(delta);
}

void AdamOpt::step(Mlp& net, const MlpGrads& grads) {
  if (states_.empty()) {
    states_.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      states_[i].mw.assign(net.layers[i].w.size(), 0.0);
      states_[i].vw.assign(net.layers[i].w.size(), 0.0);
      states_[i].mb.assign(net.layers[i].b.size(), 0.0);
      states_[i].vb.assign(net.layers[i].b.size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    update(net.layers[i].w, grads.layers[i].w, states_[i].mw, states_[i].vw);
    update(net.layers[i].b, grads.layers[i].b, states_[i].mb, states_[i].vb);
  }
}

void soft_update(Mlp& target, const Mlp& main, double tau) {
  for (std::size_t li = 0; li < target.layers.size(); ++li) {
    auto& tw = target.layers[li].w;
    auto& tb = target.layers[li].b;
    const auto& mw = main.layers[li].w;
    const auto& mb = main.layers[li].b;
    for (std::size_t i = 0; i < tw.size(); ++i)
      tw[i] = tau * mw[i] + (1.0 - tau) * tw[i];
    for (std::size_t i = 0; i < tb.size(); ++i)
      tb[i] = tau * mb[i] + (1.0 - tau) * tb[i];
  }
}

double mse_loss(const std::vector<double>& y, const std::vector<double>& t,
                std::vector<double>& dy) {
  if (y.size() != t.size()) throw std::invalid_argument("mse_loss: size mismatch");
  dy.resize(y.size());
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - t[i];
    loss += e * e;
    dy[i] = 2.0 * e * inv;
  }
  return loss * inv;
}

}  // namespace alpine::nn
