#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "alpine/nn.hpp"

namespace alpine::lightae {

struct TeacherConfig {
  int input_dim = 3;
  std::vector<int> hidden_sizes = {360, 180, 90, 45};
  int latent_dim = 45;
  double ae_lr = 1e-3;
  double kd_lr = 5e-4;
  int batch_size = 256;
  int epochs = 200;
  int kd_epochs = 50;

  void validate() const;
};

// Per-feature z-score moments, fitted on clean training data and stored
// with the model.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  static Standardizer fit(const std::vector<double>& rows, int cols);
  void apply(std::vector<double>& rows) const;
  std::vector<double> applied(const std::vector<double>& rows) const;
};

struct TeacherModel {
  TeacherConfig cfg;
  Standardizer moments;
  nn::Mlp net;  // one fully connected block (+ activation) per layer
  double validation_mse = 0.0;

  int block_count() const { return static_cast<int>(net.layers.size()); }
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// rows are standardized feature rows (row-major, cfg.input_dim columns).
TeacherModel train_teacher(const std::vector<double>& rows, int row_count,
                           const Standardizer& moments, const TeacherConfig& cfg,
                           std::uint64_t seed);

struct DescendantVariant {
  int parent_index = 0;
  int variant_index = 0;
  double width_fraction = 1.0;  // 1.0 marks the teacher variant / a copy
  nn::Mlp net;
  double memory_bytes = 0.0;
  double latency_us = 0.0;
  double accuracy_loss_pts = 0.0;  // F1 points relative to the teacher
  bool profiled = false;
};

struct Calibration {
  bool valid = false;
  double threshold = 0.0;  // 99th percentile of clean scores
  double q50 = 0.0;
  double q999 = 0.0;
};

struct BlockLibrary {
  TeacherConfig cfg;
  Standardizer moments;
  // blocks[i][0] is always the teacher's own block i.
  std::vector<std::vector<DescendantVariant>> blocks;
  double teacher_validation_mse = 0.0;
  Calibration calib;

  int block_count() const { return static_cast<int>(blocks.size()); }
};

// Internal width of a distilled bottleneck: the parameter count scales
// roughly with fraction^2 of the parent block.
int bottleneck_width(double fraction, int in, int out);

// Distills compressed two-layer descendants of every block against the
// teacher's post-activation outputs on the given (standardized) rows.
// A fraction of 1.0 yields a parameter copy of the parent block.
BlockLibrary distill_descendants(const TeacherModel& teacher,
                                 const std::vector<double>& fractions,
                                 const std::vector<double>& rows, int row_count,
                                 std::uint64_t seed);

struct LabeledWindows {
  std::vector<double> features;  // row-major, raw (unstandardized) values
  int rows = 0;
  int cols = 0;
  std::vector<int> labels;  // 0 normal, 1 anomaly
};

// Fills (M, T, U) for every variant: parameter memory, median forward
// latency, and F1 loss when only that variant is substituted into the
// teacher, measured on the labeled calibration windows.
void profile_blocks(BlockLibrary& lib, const LabeledWindows& calib);

struct Constraints {
  double latency_reduction_pct = 0.0;
  double resource_reduction_pct = 0.0;

  void validate() const;
};

struct SelectionPlan {
  std::vector<int> chosen;  // variant index per block
  double total_memory_bytes = 0.0;
  double total_latency_us = 0.0;
  double total_accuracy_loss_pts = 0.0;
};

// Exact minimum-accuracy-loss selection under the latency and memory
// budgets, by exhaustive enumeration (libraries here are tiny).
SelectionPlan select_blocks(const BlockLibrary& lib, const Constraints& constraints);

// Stitches the chosen variants into a single runnable network.
nn::Mlp compose_plan(const BlockLibrary& lib, const SelectionPlan& plan);

// Mean squared reconstruction error of one standardized window.
double anomaly_score(const nn::Mlp& net, const std::vector<double>& window);

std::vector<double> anomaly_scores(const nn::Mlp& net,
                                   const std::vector<double>& rows, int row_count);

// Threshold and risk mapping from >= 100 clean validation scores.
Calibration calibrate(std::vector<double> clean_scores);

double risk_from_score(const Calibration& calib, double score);

// Binary F1 of score > threshold against anomaly labels.
double detection_f1(const std::vector<double>& scores, const std::vector<int>& labels,
                    double threshold);

double quantile(std::vector<double> sorted_or_not, double q);

}  // namespace alpine::lightae
