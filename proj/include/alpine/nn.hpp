#pragma once

#include <cstddef>
#include <vector>

#include "alpine/rng.hpp"

namespace alpine::nn {

enum class Act { None, Relu, Tanh };

// Fully connected layer, weights row-major [out][in].
struct Dense {
  int in = 0;
  int out = 0;
  Act act = Act::None;
  std::vector<double> w;
  std::vector<double> b;

  Dense() = default;
  Dense(int in_dim, int out_dim, Act activation);

  void init(Rng& rng);
  std::size_t param_count() const { return w.size() + b.size(); }
  std::size_t mac_count() const {
    return static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
  }
};

// y[n,out] = act(x[n,in] * W^T + b)
void dense_forward(const Dense& layer, const double* x, int n, double* y);

struct DenseGrads {
  std::vector<double> w;
  std::vector<double> b;
};

struct Mlp {
  std::vector<Dense> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t param_count() const;
  std::size_t mac_count() const;
  void init(Rng& rng);

  std::vector<double> forward(const std::vector<double>& x) const;
  // Batched: x holds n rows of input_dim, returns n rows of output_dim.
  std::vector<double> forward_batch(const std::vector<double>& x, int n) const;

  // Flat parameter access (w then b, layer by layer), for soft updates
  // and checkpointing.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
};

// Activations of each layer for one batch; acts[0] is the input.
struct Workspace {
  std::vector<std::vector<double>> acts;
};

struct MlpGrads {
  std::vector<DenseGrads> layers;
  void init_like(const Mlp& net);
  void zero();
};

void forward_batch(const Mlp& net, const std::vector<double>& x, int n,
                   Workspace& ws);

// Backprop dLoss/dOutput through the net. Accumulates into grads; writes
// dLoss/dInput into dx when non-null.
void backward_batch(const Mlp& net, const Workspace& ws, int n,
                    const std::vector<double>& dy, MlpGrads& grads,
                    std::vector<double>* dx = nullptr);

class AdamOpt {
 public:
  explicit AdamOpt(double lr) : lr_(lr) {}

  void step(Mlp& net, const MlpGrads& grads);

 private:
  struct State {
    std::vector<double> mw, vw, mb, vb;
  };
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<State> states_;
};

// target <- tau*main + (1-tau)*target, elementwise.
void soft_update(Mlp& target, const Mlp& main, double tau);

// Mean-squared error over all elements; fills dy with the gradient.
double mse_loss(const std::vector<double>& y, const std::vector<double>& t,
                std::vector<double>& dy);

}  // namespace alpine::nn
