#include "alpine/lightae.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

#include "alpine/rng.hpp"

namespace alpine::lightae {

void TeacherConfig::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("teacher config: input_dim must be positive");
  if (hidden_sizes.empty()) throw std::invalid_argument("teacher config: no hidden sizes");
  for (int w : hidden_sizes)
    if (w <= 0) throw std::invalid_argument("teacher config: widths must be positive");
  if (latent_dim != hidden_sizes.back())
    throw std::invalid_argument("teacher config: latent_dim must equal last encoder width");
  if (batch_size <= 0 || epochs <= 0 || kd_epochs <= 0)
    throw std::invalid_argument("teacher config: counts must be positive");
}

Standardizer Standardizer::fit(const std::vector<double>& rows, int cols) {
  if (cols <= 0 || rows.empty() || rows.size() % cols != 0)
    throw std::invalid_argument("standardizer: bad shape");
  const std::size_t n = rows.size() / cols;
  Standardizer s;
  s.mean.assign(cols, 0.0);
  s.sd.assign(cols, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (int c = 0; c < cols; ++c) s.mean[c] += rows[r * cols + c];
  for (int c = 0; c < cols; ++c) s.mean[c] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (int c = 0; c < cols; ++c) {
      const double d = rows[r * cols + c] - s.mean[c];
      s.sd[c] += d * d;
    }
  for (int c = 0; c < cols; ++c) {
    s.sd[c] = std::sqrt(s.sd[c] / static_cast<double>(n));
    if (s.sd[c] < 1e-9) s.sd[c] = 1.0;  // constant feature maps to zero
  }
  return s;
}

void Standardizer::apply(std::vector<double>& rows) const {
  const std::size_t cols = mean.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t c = i % cols;
    rows[i] = (rows[i] - mean[c]) / sd[c];
  }
}

std::vector<double> Standardizer::applied(const std::vector<double>& rows) const {
  std::vector<double> out = rows;
  apply(out);
  return out;
}

namespace {

nn::Mlp make_autoencoder(const TeacherConfig& cfg, Rng& rng) {
  nn::Mlp net;
  int prev = cfg.input_dim;
  for (int w : cfg.hidden_sizes) {
    net.layers.emplace_back(prev, w, nn::Act::Relu);
    prev = w;
  }
  for (int i = static_cast<int>(cfg.hidden_sizes.size()) - 2; i >= 0; --i) {
    net.layers.emplace_back(prev, cfg.hidden_sizes[i], nn::Act::Relu);
    prev = cfg.hidden_sizes[i];
  }
  net.layers.emplace_back(prev, cfg.input_dim, nn::Act::None);
  net.init(rng);
  return net;
}

// Minibatch Adam regression of net(x) onto targets. Returns final epoch
// mean loss; throws DivergenceError on NaN.
double train_regression(nn::Mlp& net, const std::vector<double>& x,
                        const std::vector<double>& targets, int rows, int epochs,
                        int batch_size, double lr, Rng& rng, const char* what) {
  const int in_dim = net.input_dim();
  const int out_dim = net.output_dim();
  nn::AdamOpt opt(lr);
  nn::MlpGrads grads;
  grads.init_like(net);
  nn::Workspace ws;
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> bx, bt, dy;
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    epoch_loss = 0.0;
    int batches = 0;
    for (int start = 0; start < rows; start += batch_size) {
      const int n = std::min(batch_size, rows - start);
      bx.resize(static_cast<std::size_t>(n) * in_dim);
      bt.resize(static_cast<std::size_t>(n) * out_dim);
      for (int i = 0; i < n; ++i) {
        const int r = order[start + i];
        std::copy_n(x.begin() + static_cast<std::size_t>(r) * in_dim, in_dim,
                    bx.begin() + static_cast<std::size_t>(i) * in_dim);
        std::copy_n(targets.begin() + static_cast<std::size_t>(r) * out_dim, out_dim,
                    bt.begin() + static_cast<std::size_t>(i) * out_dim);
      }
      nn::forward_batch(net, bx, n, ws);
      const double loss = nn::mse_loss(ws.acts.back(), bt, dy);
      if (!std::isfinite(loss))
        throw DivergenceError(std::string(what) + ": loss diverged at epoch " +
                              std::to_string(epoch));
      grads.zero();
      nn::backward_batch(net, ws, n, dy, grads);
      opt.step(net, grads);
      epoch_loss += loss;
      ++batches;
    }
    epoch_loss /= std::max(1, batches);
  }
  return epoch_loss;
}

double mean_reconstruction_mse(const nn::Mlp& net, const std::vector<double>& rows,
                               int row_count) {
  const auto y = net.forward_batch(rows, row_count);
  double acc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double e = y[i] - rows[i];
    acc += e * e;
  }
  return acc / static_cast<double>(rows.size());
}

}  // namespace

TeacherModel train_teacher(const std::vector<double>& rows, int row_count,
                           const Standardizer& moments, const TeacherConfig& cfg,
                           std::uint64_t seed) {
  cfg.validate();
  if (row_count < cfg.batch_size)
    throw std::invalid_argument("train_teacher: need at least batch_size rows");
  if (rows.size() != static_cast<std::size_t>(row_count) * cfg.input_dim)
    throw std::invalid_argument("train_teacher: shape mismatch");

  // Deterministic tail split for validation.
  const int val_rows = std::max(1, row_count / 10);
  const int train_rows = row_count - val_rows;
  std::vector<double> train_x(rows.begin(),
                              rows.begin() + static_cast<std::size_t>(train_rows) * cfg.input_dim);
  std::vector<double> val_x(rows.begin() + static_cast<std::size_t>(train_rows) * cfg.input_dim,
                            rows.end());

  TeacherModel model;
  model.cfg = cfg;
  model.moments = moments;
  Rng rng(derive_seed(seed, "teacher"));
  model.net = make_autoencoder(cfg, rng);
  train_regression(model.net, train_x, train_x, train_rows, cfg.epochs,
                   cfg.batch_size, cfg.ae_lr, rng, "train_teacher");
  model.validation_mse = mean_reconstruction_mse(model.net, val_x, val_rows);
  return model;
}

int bottleneck_width(double fraction, int in, int out) {
  const int narrow = std::min(in, out);
  return std::max(1, static_cast<int>(std::llround(fraction * fraction * narrow)));
}

BlockLibrary distill_descendants(const TeacherModel& teacher,
                                 const std::vector<double>& fractions,
                                 const std::vector<double>& rows, int row_count,
                                 std::uint64_t seed) {
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw std::invalid_argument("distill: fractions must lie in (0,1]");

  BlockLibrary lib;
  lib.cfg = teacher.cfg;
  lib.moments = teacher.moments;
  lib.teacher_validation_mse = teacher.validation_mse;
  lib.blocks.resize(teacher.net.layers.size());

  // Activations entering each block on the training rows.
  std::vector<double> acts = rows;
  for (std::size_t bi = 0; bi < teacher.net.layers.size(); ++bi) {
    const nn::Dense& parent = teacher.net.layers[bi];
    std::vector<double> targets(static_cast<std::size_t>(row_count) * parent.out);
    nn::dense_forward(parent, acts.data(), row_count, targets.data());

    DescendantVariant tv;
    tv.parent_index = static_cast<int>(bi);
    tv.variant_index = 0;
    tv.width_fraction = 1.0;
    tv.net.layers.push_back(parent);
    lib.blocks[bi].push_back(std::move(tv));

    int vi = 1;
    for (double f : fractions) {
      DescendantVariant dv;
      dv.parent_index = static_cast<int>(bi);
      dv.variant_index = vi;
      dv.width_fraction = f;
      if (f >= 1.0) {
        dv.net.layers.push_back(parent);  // identity descendant
      } else {
        const int h = bottleneck_width(f, parent.in, parent.out);
        dv.net.layers.emplace_back(parent.in, h, nn::Act::Relu);
        dv.net.layers.emplace_back(h, parent.out, parent.act);
        Rng rng(derive_seed(seed, "distill-" + std::to_string(bi) + "-" +
                                      std::to_string(vi)));
        dv.net.init(rng);
        try {
          train_regression(dv.net, acts, targets, row_count, teacher.cfg.kd_epochs,
                           teacher.cfg.batch_size, teacher.cfg.kd_lr, rng, "distill");
        } catch (const DivergenceError& e) {
          std::cerr << "[lightae] warning: dropping variant " << bi << "/" << vi
                    << ": " << e.what() << "\n";
          ++vi;
          continue;
        }
      }
      lib.blocks[bi].push_back(std::move(dv));
      ++vi;
    }
    acts = std::move(targets);
  }
  return lib;
}

namespace {

volatile double g_latency_sink = 0.0;

double median_forward_latency_us(const nn::Mlp& net) {
  using clock = std::chrono::steady_clock;
  constexpr int kPasses = 201;
  std::vector<double> input(net.input_dim(), 0.5);
  double sink = 0.0;
  // Warmup.
  for (int i = 0; i < 10; ++i) sink += net.forward(input)[0];
  std::vector<double> samples(kPasses);
  for (int i = 0; i < kPasses; ++i) {
    const auto t0 = clock::now();
    sink += net.forward(input)[0];
    const auto t1 = clock::now();
    samples[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  g_latency_sink = sink;
  std::nth_element(samples.begin(), samples.begin() + kPasses / 2, samples.end());
  return samples[kPasses / 2];
}

// Scores every calibration row through the teacher with block `bi`
// replaced by `variant`, then returns F1 at a threshold recalibrated on
// the normal rows.
double substituted_f1(const BlockLibrary& lib, int bi,
                      const DescendantVariant& variant,
                      const std::vector<double>& std_rows, int rows,
                      const std::vector<int>& labels) {
  std::vector<double> cur = std_rows;
  int n = rows;
  for (int li = 0; li < lib.block_count(); ++li) {
    const nn::Mlp& step = (li == bi) ? variant.net : lib.blocks[li][0].net;
    cur = step.forward_batch(cur, n);
  }
  const int dim = lib.cfg.input_dim;
  std::vector<double> scores(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double e = cur[static_cast<std::size_t>(r) * dim + c] -
                       std_rows[static_cast<std::size_t>(r) * dim + c];
      acc += e * e;
    }
    scores[r] = acc / dim;
  }
  std::vector<double> clean;
  clean.reserve(rows);
  for (int r = 0; r < rows; ++r)
    if (labels[r] == 0) clean.push_back(scores[r]);
  const double thr = quantile(std::move(clean), 0.99);
  return detection_f1(scores, labels, thr);
}

}  // namespace

void profile_blocks(BlockLibrary& lib, const LabeledWindows& calib) {
  if (lib.blocks.empty()) throw std::invalid_argument("profile_blocks: empty library");
  if (calib.rows <= 0 || calib.cols != lib.cfg.input_dim ||
      calib.labels.size() != static_cast<std::size_t>(calib.rows))
    throw std::invalid_argument("profile_blocks: bad calibration data");

  std::vector<double> std_rows = lib.moments.applied(calib.features);
  const double teacher_f1 = [&] {
    return substituted_f1(lib, -1, lib.blocks[0][0], std_rows, calib.rows,
                          calib.labels);
  }();

  for (int bi = 0; bi < lib.block_count(); ++bi) {
    for (auto& variant : lib.blocks[bi]) {
      variant.memory_bytes = static_cast<double>(variant.net.param_count()) * 4.0;
      variant.latency_us = median_forward_latency_us(variant.net);
      if (variant.variant_index == 0) {
        variant.accuracy_loss_pts = 0.0;  // the teacher is its own baseline
      } else {
        const double f1 =
            substituted_f1(lib, bi, variant, std_rows, calib.rows, calib.labels);
        variant.accuracy_loss_pts = std::max(0.0, (teacher_f1 - f1) * 100.0);
      }
      variant.profiled = true;
    }
  }
}

void Constraints::validate() const {
  if (!(latency_reduction_pct >= 0.0 && latency_reduction_pct < 100.0) ||
      !(resource_reduction_pct >= 0.0 && resource_reduction_pct < 100.0))
    throw std::invalid_argument("constraints: percentages must lie in [0,100)");
}

SelectionPlan select_blocks(const BlockLibrary& lib, const Constraints& constraints) {
  constraints.validate();
  const int blocks = lib.block_count();
  if (blocks == 0) throw std::invalid_argument("select_blocks: empty library");

  double teacher_latency = 0.0, teacher_memory = 0.0;
  double combos = 1.0;
  double min_latency = 0.0, min_memory = 0.0;
  for (int bi = 0; bi < blocks; ++bi) {
    if (lib.blocks[bi].empty())
      throw std::invalid_argument("select_blocks: block with no variants");
    double best_t = std::numeric_limits<double>::max();
    double best_m = std::numeric_limits<double>::max();
    for (const auto& v : lib.blocks[bi]) {
      if (!v.profiled)
        throw std::invalid_argument("select_blocks: library not profiled");
      best_t = std::min(best_t, v.latency_us);
      best_m = std::min(best_m, v.memory_bytes);
    }
    teacher_latency += lib.blocks[bi][0].latency_us;
    teacher_memory += lib.blocks[bi][0].memory_bytes;
    min_latency += best_t;
    min_memory += best_m;
    combos *= static_cast<double>(lib.blocks[bi].size());
  }
  if (combos > 1e5)
    throw std::invalid_argument("select_blocks: library too large for exact enumeration");

  const double latency_budget =
      (1.0 - constraints.latency_reduction_pct / 100.0) * teacher_latency;
  const double memory_budget =
      (1.0 - constraints.resource_reduction_pct / 100.0) * teacher_memory;
  if (min_latency > latency_budget)
    throw InfeasibleError("select_blocks: latency budget infeasible even for the all-smallest plan");
  if (min_memory > memory_budget)
    throw InfeasibleError("select_blocks: memory budget infeasible even for the all-smallest plan");

  SelectionPlan best;
  double best_loss = std::numeric_limits<double>::max();
  std::vector<int> idx(blocks, 0);
  for (;;) {
    double t = 0.0, m = 0.0, u = 0.0;
    for (int bi = 0; bi < blocks; ++bi) {
      const auto& v = lib.blocks[bi][idx[bi]];
      t += v.latency_us;
      m += v.memory_bytes;
      u += v.accuracy_loss_pts;
    }
    if (t <= latency_budget && m <= memory_budget && u < best_loss) {
      best_loss = u;
      best.chosen = idx;
      best.total_latency_us = t;
      best.total_memory_bytes = m;
      best.total_accuracy_loss_pts = u;
    }
    int bi = blocks - 1;
    while (bi >= 0 && ++idx[bi] == static_cast<int>(lib.blocks[bi].size())) {
      idx[bi] = 0;
      --bi;
    }
    if (bi < 0) break;
  }
  if (best.chosen.empty())
    throw InfeasibleError("select_blocks: joint latency and memory budgets admit no plan");
  return best;
}

nn::Mlp compose_plan(const BlockLibrary& lib, const SelectionPlan& plan) {
  if (plan.chosen.size() != static_cast<std::size_t>(lib.block_count()))
    throw std::invalid_argument("compose_plan: plan does not match library");
  nn::Mlp net;
  for (int bi = 0; bi < lib.block_count(); ++bi) {
    const auto& v = lib.blocks[bi].at(plan.chosen[bi]);
    for (const auto& layer : v.net.layers) net.layers.push_back(layer);
  }
  return net;
}

double anomaly_score(const nn::Mlp& net, const std::vector<double>& window) {
  if (window.size() != static_cast<std::size_t>(net.input_dim()))
    throw std::invalid_argument("anomaly_score: window width mismatch");
  const auto y = net.forward(window);
  double acc = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double e = y[i] - window[i];
    acc += e * e;
  }
  return acc / static_cast<double>(window.size());
}

std::vector<double> anomaly_scores(const nn::Mlp& net,
                                   const std::vector<double>& rows, int row_count) {
  const int dim = net.input_dim();
  const auto y = net.forward_batch(rows, row_count);
  std::vector<double> scores(row_count, 0.0);
  for (int r = 0; r < row_count; ++r) {
    double acc = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double e = y[static_cast<std::size_t>(r) * dim + c] -
                       rows[static_cast<std::size_t>(r) * dim + c];
      acc += e * e;
    }
    scores[r] = acc / dim;
  }
  return scores;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[lo + 1] - values[lo]) * frac;
}

Calibration calibrate(std::vector<double> clean_scores) {
  if (clean_scores.size() < 100)
    throw std::invalid_argument("calibrate: need at least 100 clean scores");
  Calibration c;
  c.valid = true;
  c.threshold = quantile(clean_scores, 0.99);
  c.q50 = quantile(clean_scores, 0.50);
  c.q999 = quantile(std::move(clean_scores), 0.999);
  return c;
}

double risk_from_score(const Calibration& calib, double score) {
  if (!calib.valid) throw std::invalid_argument("risk_from_score: not calibrated");
  const double span = calib.q999 - calib.q50;
  if (span <= 0.0) return score <= calib.q50 ? 0.0 : 1.0;
  return std::clamp((score - calib.q50) / span, 0.0, 1.0);
}

double detection_f1(const std::vector<double>& scores, const std::vector<int>& labels,
                    double threshold) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("detection_f1: size mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > threshold;
    if (pred && labels[i] == 1) ++tp;
    else if (pred && labels[i] == 0) ++fp;
    else if (!pred && labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace alpine::lightae
