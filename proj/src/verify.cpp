#include "alpine/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "alpine/rng.hpp"

namespace alpine::verify {

void FeedbackState::validate() const {
  if (!(alpha_min <= alpha && alpha <= alpha_max) ||
      !(beta_min <= beta && beta <= beta_max))
    throw std::invalid_argument("feedback state: weights outside clamps");
  if (!(step > 0.0)) throw std::invalid_argument("feedback state: step must be positive");
}

double mann_whitney_auc(const std::vector<double>& positives,
                        const std::vector<double>& negatives) {
  if (positives.empty() || negatives.empty())
    throw std::invalid_argument("auc: both samples must be nonempty");
  struct Item {
    double v;
    bool pos;
  };
  std::vector<Item> all;
  all.reserve(positives.size() + negatives.size());
  for (double v : positives) all.push_back({v, true});
  for (double v : negatives) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (all[k].pos) rank_sum_pos += midrank;
    i = j;
  }
  const double m = static_cast<double>(positives.size());
  const double n = static_cast<double>(negatives.size());
  return (rank_sum_pos - m * (m + 1.0) / 2.0) / (m * n);
}

double mia_attack(const std::vector<double>& member_confidences,
                  const std::vector<double>& nonmember_confidences) {
  return mann_whitney_auc(member_confidences, nonmember_confidences);
}

double LogisticModel::predict_proba(const std::vector<double>& row) const {
  if (row.size() != weights.size())
    throw std::invalid_argument("logistic: feature width mismatch");
  double z = bias;
  for (std::size_t c = 0; c < row.size(); ++c)
    z += weights[c] * (row[c] - moments.mean[c]) / moments.sd[c];
  return 1.0 / (1.0 + std::exp(-z));
}

LogisticModel fit_logistic(const std::vector<double>& features, int rows, int cols,
                           const std::vector<int>& labels, int epochs, double lr) {
  if (rows <= 0 || cols <= 0 ||
      features.size() != static_cast<std::size_t>(rows) * cols ||
      labels.size() != static_cast<std::size_t>(rows))
    throw std::invalid_argument("fit_logistic: bad shape");
  LogisticModel model;
  model.moments = lightae::Standardizer::fit(features, cols);
  std::vector<double> x = model.moments.applied(features);
  model.weights.assign(cols, 0.0);

  std::vector<double> gw(cols);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (int r = 0; r < rows; ++r) {
      double z = model.bias;
      const double* xr = x.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) z += model.weights[c] * xr[c];
      const double err = 1.0 / (1.0 + std::exp(-z)) - static_cast<double>(labels[r]);
      for (int c = 0; c < cols; ++c) gw[c] += err * xr[c];
      gb += err;
    }
    const double scale = lr / rows;
    for (int c = 0; c < cols; ++c) model.weights[c] -= scale * gw[c];
    model.bias -= scale * gb;
  }
  return model;
}

namespace {

std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  return order;
}

double binary_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && truth[i] == 1) ++tp;
    else if (pred[i] == 1 && truth[i] == 0) ++fp;
    else if (pred[i] == 0 && truth[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / (tp + fp);
  const double r = static_cast<double>(tp) / (tp + fn);
  return 2.0 * p * r / (p + r);
}

}  // namespace

std::pair<double, double> pia_attack(const std::vector<double>& model_probs,
                                     const std::vector<double>& public_features,
                                     int rows, int cols,
                                     const std::vector<int>& property_labels,
                                     std::uint64_t seed) {
  if (model_probs.size() != static_cast<std::size_t>(rows) ||
      property_labels.size() != static_cast<std::size_t>(rows) ||
      public_features.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("pia_attack: bad shape");
  bool has0 = false, has1 = false;
  for (int v : property_labels) (v == 0 ? has0 : has1) = true;
  if (!has0 || !has1)
    throw std::invalid_argument("pia_attack: need both property classes present");

  // Attacker features: model output probability plus the public columns.
  const int acols = cols + 1;
  std::vector<double> ax(static_cast<std::size_t>(rows) * acols);
  for (int r = 0; r < rows; ++r) {
    ax[static_cast<std::size_t>(r) * acols] = model_probs[r];
    for (int c = 0; c < cols; ++c)
      ax[static_cast<std::size_t>(r) * acols + 1 + c] =
          public_features[static_cast<std::size_t>(r) * cols + c];
  }

  const auto order = seeded_permutation(rows, derive_seed(seed, "pia-split"));
  const int train_rows = rows / 2;
  std::vector<double> train_x, eval_x;
  std::vector<int> train_y, eval_y;
  for (int i = 0; i < rows; ++i) {
    const int r = order[i];
    auto& dst_x = i < train_rows ? train_x : eval_x;
    auto& dst_y = i < train_rows ? train_y : eval_y;
    dst_x.insert(dst_x.end(), ax.begin() + static_cast<std::size_t>(r) * acols,
                 ax.begin() + static_cast<std::size_t>(r + 1) * acols);
    dst_y.push_back(property_labels[r]);
  }

  const LogisticModel attacker =
      fit_logistic(train_x, train_rows, acols, train_y);
  long correct = 0, ones = 0;
  for (std::size_t i = 0; i < eval_y.size(); ++i) {
    std::vector<double> row(eval_x.begin() + i * acols, eval_x.begin() + (i + 1) * acols);
    const int pred = attacker.predict_proba(row) >= 0.5 ? 1 : 0;
    if (pred == eval_y[i]) ++correct;
    if (eval_y[i] == 1) ++ones;
  }
  const double n_eval = static_cast<double>(eval_y.size());
  const double attack_acc = static_cast<double>(correct) / n_eval;
  const double prior_acc =
      std::max(static_cast<double>(ones), n_eval - static_cast<double>(ones)) / n_eval;
  return {attack_acc, prior_acc};
}

namespace {

void window_bounds(int i, int n, int w, int& lo, int& hi) {
  lo = std::max(0, i - (w - 1) / 2);
  hi = std::min(n - 1, i + w / 2);
}

std::vector<double> moving_average(const std::vector<double>& s, int w) {
  const int n = static_cast<int>(s.size());
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    int lo, hi;
    window_bounds(i, n, w, lo, hi);
    double acc = 0.0;
    for (int j = lo; j <= hi; ++j) acc += s[j];
    out[i] = acc / (hi - lo + 1);
  }
  return out;
}

// Least-squares polynomial fit on the (possibly edge-truncated) window,
// evaluated at the center point. Exact on polynomials up to the order.
std::vector<double> savitzky_golay(const std::vector<double>& s, int w, int order) {
  const int n = static_cast<int>(s.size());
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    int lo, hi;
    window_bounds(i, n, w, lo, hi);
    const int len = hi - lo + 1;
    const int p = std::min(order, len - 1);
    const int dim = p + 1;
    // Normal equations A c = rhs with Vandermonde moments around x = i.
    std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0);
    std::vector<double> rhs(dim, 0.0);
    for (int j = lo; j <= hi; ++j) {
      const double x = static_cast<double>(j - i);
      double pow_k = 1.0;
      std::vector<double> powers(2 * p + 1);
      for (int k = 0; k <= 2 * p; ++k) {
        powers[k] = pow_k;
        pow_k *= x;
      }
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) a[static_cast<std::size_t>(r) * dim + c] += powers[r + c];
        rhs[r] += powers[r] * s[j];
      }
    }
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < dim; ++col) {
      int piv = col;
      for (int r = col + 1; r < dim; ++r)
        if (std::abs(a[static_cast<std::size_t>(r) * dim + col]) >
            std::abs(a[static_cast<std::size_t>(piv) * dim + col]))
          piv = r;
      if (piv != col) {
        for (int c = 0; c < dim; ++c)
          std::swap(a[static_cast<std::size_t>(col) * dim + c],
                    a[static_cast<std::size_t>(piv) * dim + c]);
        std::swap(rhs[col], rhs[piv]);
      }
      const double d = a[static_cast<std::size_t>(col) * dim + col];
      for (int r = col + 1; r < dim; ++r) {
        const double f = a[static_cast<std::size_t>(r) * dim + col] / d;
        for (int c = col; c < dim; ++c)
          a[static_cast<std::size_t>(r) * dim + c] -= f * a[static_cast<std::size_t>(col) * dim + c];
        rhs[r] -= f * rhs[col];
      }
    }
    for (int r = dim - 1; r >= 0; --r) {
      double acc = rhs[r];
      for (int c = r + 1; c < dim; ++c)
        acc -= a[static_cast<std::size_t>(r) * dim + c] * rhs[c];
      rhs[r] = acc / a[static_cast<std::size_t>(r) * dim + r];
    }
    out[i] = rhs[0];  // value at x = 0
  }
  return out;
}

std::vector<double> wiener_filter(const std::vector<double>& s, int w) {
  const int n = static_cast<int>(s.size());
  std::vector<double> mean(n), var(n);
  for (int i = 0; i < n; ++i) {
    int lo, hi;
    window_bounds(i, n, w, lo, hi);
    const int len = hi - lo + 1;
    double m = 0.0;
    for (int j = lo; j <= hi; ++j) m += s[j];
    m /= len;
    double v = 0.0;
    for (int j = lo; j <= hi; ++j) v += (s[j] - m) * (s[j] - m);
    mean[i] = m;
    var[i] = v / len;
  }
  const double noise = std::accumulate(var.begin(), var.end(), 0.0) / n;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double denom = std::max(var[i], noise);
    out[i] = denom > 0.0
                 ? mean[i] + std::max(var[i] - noise, 0.0) / denom * (s[i] - mean[i])
                 : mean[i];
  }
  return out;
}

}  // namespace

std::vector<double> denoise(const std::vector<double>& series, Denoiser kind,
                            int window, int poly_order) {
  if (series.empty()) throw std::invalid_argument("denoise: empty series");
  if (window < 1 || window > static_cast<int>(series.size()))
    throw std::invalid_argument("denoise: window must lie in [1, series length]");
  switch (kind) {
    case Denoiser::MovingAverage:
      return moving_average(series, window);
    case Denoiser::SavitzkyGolay:
      if (poly_order < 0) throw std::invalid_argument("denoise: negative poly order");
      return savitzky_golay(series, window, poly_order);
    case Denoiser::Wiener:
      return wiener_filter(series, window);
  }
  throw std::invalid_argument("denoise: unknown denoiser");
}

double reconstruction_attack(const std::vector<double>& noisy,
                             const std::vector<double>& original, Denoiser kind,
                             int window, int poly_order) {
  if (noisy.size() != original.size())
    throw std::invalid_argument("reconstruction_attack: series lengths differ");
  const auto rec = denoise(noisy, kind, window, poly_order);
  double mae = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) mae += std::abs(rec[i] - original[i]);
  return mae / static_cast<double>(rec.size());
}

UtilityReport utility_eval(const std::vector<double>& features, int rows, int cols,
                           const std::vector<int>& labels, std::uint64_t seed) {
  if (rows < 100) throw std::invalid_argument("utility_eval: need at least 100 rows");
  for (int v : labels)
    if (v != 0 && v != 1) throw std::invalid_argument("utility_eval: labels must be binary");

  const auto order = seeded_permutation(rows, derive_seed(seed, "utility-split"));
  const int train_rows = rows * 7 / 10;
  std::vector<double> train_x, eval_x;
  std::vector<int> train_y, eval_y;
  for (int i = 0; i < rows; ++i) {
    const int r = order[i];
    auto& dst_x = i < train_rows ? train_x : eval_x;
    auto& dst_y = i < train_rows ? train_y : eval_y;
    dst_x.insert(dst_x.end(), features.begin() + static_cast<std::size_t>(r) * cols,
                 features.begin() + static_cast<std::size_t>(r + 1) * cols);
    dst_y.push_back(labels[r]);
  }

  const LogisticModel model = fit_logistic(train_x, train_rows, cols, train_y);
  std::vector<int> pred(eval_y.size());
  std::vector<double> probs_pos, probs_neg;
  for (std::size_t i = 0; i < eval_y.size(); ++i) {
    std::vector<double> row(eval_x.begin() + i * cols, eval_x.begin() + (i + 1) * cols);
    const double p = model.predict_proba(row);
    pred[i] = p >= 0.5 ? 1 : 0;
    (eval_y[i] == 1 ? probs_pos : probs_neg).push_back(p);
  }
  UtilityReport report;
  report.f1 = binary_f1(pred, eval_y);
  report.roc_auc = (probs_pos.empty() || probs_neg.empty())
                       ? 0.5
                       : mann_whitney_auc(probs_pos, probs_neg);
  return report;
}

double privacy_strength(double mia_auc) {
  return 1.0 - 2.0 * std::abs(mia_auc - 0.5);
}

FeedbackState feedback_update(const FeedbackState& state, double privacy_metric,
                              double utility_metric) {
  state.validate();
  FeedbackState next = state;
  if (privacy_metric < state.theta_p)
    next.alpha = std::clamp(state.alpha * state.step, state.alpha_min, state.alpha_max);
  if (utility_metric < state.theta_u)
    next.beta = std::clamp(state.beta * state.step, state.beta_min, state.beta_max);
  return next;
}

}  // namespace alpine::verify
