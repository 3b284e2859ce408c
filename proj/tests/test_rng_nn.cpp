#include <doctest.h>

#include <cmath>

#include "alpine/nn.hpp"
#include "alpine/rng.hpp"

using namespace alpine;

TEST_CASE("rng streams are deterministic and in range") {
  Rng a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform01();
    const double y = b.uniform01();
    if (x != y) all_equal = false;
    if (x != c.uniform01()) any_diff = true;
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng normal has roughly the requested moments") {
  Rng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(2.0, 3.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("derive_seed decorrelates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
}

namespace {

nn::Mlp small_net(std::uint64_t seed) {
  nn::Mlp net;
  net.layers.emplace_back(3, 5, nn::Act::Tanh);
  net.layers.emplace_back(5, 4, nn::Act::Relu);
  net.layers.emplace_back(4, 2, nn::Act::None);
  Rng rng(seed);
  net.init(rng);
  return net;
}

double batch_loss(const nn::Mlp& net, const std::vector<double>& x, int n,
                  const std::vector<double>& t) {
  const auto y = net.forward_batch(x, n);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - t[i]) * (y[i] - t[i]);
  return acc / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("backward_batch matches central finite differences") {
  nn::Mlp net = small_net(11);
  Rng rng(12);
  const int n = 4;
  std::vector<double> x(n * 3), t(n * 2);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto& v : t) v = rng.uniform(-1, 1);

  nn::Workspace ws;
  nn::MlpGrads grads;
  grads.init_like(net);
  nn::forward_batch(net, x, n, ws);
  std::vector<double> dy;
  nn::mse_loss(ws.acts.back(), t, dy);
  nn::backward_batch(net, ws, n, dy, grads);

  const double h = 1e-6;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    for (std::size_t wi = 0; wi < net.layers[li].w.size(); wi += 7) {
      const double orig = net.layers[li].w[wi];
      net.layers[li].w[wi] = orig + h;
      const double up = batch_loss(net, x, n, t);
      net.layers[li].w[wi] = orig - h;
      const double dn = batch_loss(net, x, n, t);
      net.layers[li].w[wi] = orig;
      const double numeric = (up - dn) / (2 * h);
      CHECK(grads.layers[li].w[wi] ==
            doctest::Approx(numeric).epsilon(1e-4).scale(1.0));
    }
    for (std::size_t bi = 0; bi < net.layers[li].b.size(); bi += 3) {
      const double orig = net.layers[li].b[bi];
      net.layers[li].b[bi] = orig + h;
      const double up = batch_loss(net, x, n, t);
      net.layers[li].b[bi] = orig - h;
      const double dn = batch_loss(net, x, n, t);
      net.layers[li].b[bi] = orig;
      const double numeric = (up - dn) / (2 * h);
      CHECK(grads.layers[li].b[bi] ==
            doctest::Approx(numeric).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("backward_batch input gradient matches finite differences") {
  nn::Mlp net = small_net(21);
  Rng rng(22);
  const int n = 3;
  std::vector<double> x(n * 3), t(n * 2);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto& v : t) v = rng.uniform(-1, 1);

  nn::Workspace ws;
  nn::MlpGrads grads;
  grads.init_like(net);
  nn::forward_batch(net, x, n, ws);
  std::vector<double> dy, dx;
  nn::mse_loss(ws.acts.back(), t, dy);
  nn::backward_batch(net, ws, n, dy, grads, &dx);

  const double h = 1e-6;
  for (std::size_t xi = 0; xi < x.size(); ++xi) {
    std::vector<double> xp = x, xm = x;
    xp[xi] += h;
    xm[xi] -= h;
    const double numeric =
        (batch_loss(net, xp, n, t) - batch_loss(net, xm, n, t)) / (2 * h);
    CHECK(dx[xi] == doctest::Approx(numeric).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("forward_batch equals per-row forward") {
  nn::Mlp net = small_net(31);
  Rng rng(32);
  const int n = 6;
  std::vector<double> x(n * 3);
  for (auto& v : x) v = rng.uniform(-2, 2);
  const auto batch = net.forward_batch(x, n);
  for (int r = 0; r < n; ++r) {
    const std::vector<double> row(x.begin() + r * 3, x.begin() + (r + 1) * 3);
    const auto single = net.forward(row);
    for (int c = 0; c < 2; ++c) CHECK(batch[r * 2 + c] == single[c]);
  }
}

TEST_CASE("soft_update is the exact convex combination") {
  nn::Mlp target = small_net(41);
  nn::Mlp main = small_net(42);
  nn::Mlp before = target;
  const double tau = 0.005;
  nn::soft_update(target, main, tau);
  for (std::size_t li = 0; li < target.layers.size(); ++li)
    for (std::size_t i = 0; i < target.layers[li].w.size(); ++i)
      CHECK(target.layers[li].w[i] ==
            tau * main.layers[li].w[i] + (1 - tau) * before.layers[li].w[i]);
}

TEST_CASE("adam descends a quadratic") {
  nn::Mlp net;
  net.layers.emplace_back(1, 1, nn::Act::None);
  net.layers[0].w = {2.0};
  net.layers[0].b = {1.0};
  nn::AdamOpt opt(0.05);
  nn::Workspace ws;
  nn::MlpGrads grads;
  grads.init_like(net);
  std::vector<double> x = {1.0, -1.0, 0.5, 2.0};
  std::vector<double> t = {0.0, 0.0, 0.0, 0.0};
  std::vector<double> dy;
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 500; ++i) {
    nn::forward_batch(net, x, 4, ws);
    last = nn::mse_loss(ws.acts.back(), t, dy);
    if (i == 0) first = last;
    grads.zero();
    nn::backward_batch(net, ws, 4, dy, grads);
    opt.step(net, grads);
  }
  CHECK(last < 1e-4 * first);
}

TEST_CASE("flatten and unflatten round trip") {
  nn::Mlp net = small_net(51);
  const auto flat = net.flatten();
  nn::Mlp other = small_net(52);
  other.unflatten(flat);
  CHECK(other.flatten() == flat);
}
