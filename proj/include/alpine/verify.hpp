#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "alpine/lightae.hpp"

namespace alpine::verify {

struct AttackReport {
  std::string kind;        // "mia" | "pia" | "reconstruction"
  double metric = 0.0;     // AUC, accuracy-vs-prior delta, or MAE
  double eps = 0.0;
  std::string dataset_id;
};

struct UtilityReport {
  std::string task_id;
  double f1 = 0.0;
  double roc_auc = 0.0;
  double clean_baseline_f1 = 0.0;
};

struct FeedbackState {
  double alpha = 5.0;
  double beta = 20.0;
  double theta_p = 0.8;   // privacy-strength threshold
  double theta_u = 0.85;  // utility threshold (fraction of clean baseline)
  double step = 1.1;
  double alpha_min = 1.0, alpha_max = 50.0;
  double beta_min = 1.0, beta_max = 100.0;

  void validate() const;
};

// Rank-statistic AUC of positives vs negatives, midranks for ties.
double mann_whitney_auc(const std::vector<double>& positives,
                        const std::vector<double>& negatives);

// Confidence-threshold membership inference; returns the attack AUC.
double mia_attack(const std::vector<double>& member_confidences,
                  const std::vector<double>& nonmember_confidences);

// Plain logistic regression trained by full-batch gradient descent on
// standardized features. Deterministic.
struct LogisticModel {
  lightae::Standardizer moments;
  std::vector<double> weights;  // one per feature
  double bias = 0.0;

  double predict_proba(const std::vector<double>& row) const;
};

LogisticModel fit_logistic(const std::vector<double>& features, int rows, int cols,
                           const std::vector<int>& labels, int epochs = 300,
                           double lr = 0.5);

// Property-inference attack: a logistic adversary on the model's output
// probabilities plus public features. Returns (attack accuracy on the
// held-out half, majority-class prior accuracy).
std::pair<double, double> pia_attack(const std::vector<double>& model_probs,
                                     const std::vector<double>& public_features,
                                     int rows, int cols,
                                     const std::vector<int>& property_labels,
                                     std::uint64_t seed);

enum class Denoiser { MovingAverage, SavitzkyGolay, Wiener };

std::vector<double> denoise(const std::vector<double>& series, Denoiser kind,
                            int window, int poly_order = 2);

// MAE between the denoised noisy series and the original.
double reconstruction_attack(const std::vector<double>& noisy,
                             const std::vector<double>& original, Denoiser kind,
                             int window, int poly_order = 2);

// Trains the built-in logistic classifier on a seeded 70/30 split and
// reports F1 and ROC-AUC on the held-out part.
UtilityReport utility_eval(const std::vector<double>& features, int rows, int cols,
                           const std::vector<int>& labels, std::uint64_t seed);

// Maps an MIA AUC into [0,1]: 1 means indistinguishable members.
double privacy_strength(double mia_auc);

FeedbackState feedback_update(const FeedbackState& state, double privacy_metric,
                              double utility_metric);

}  // namespace alpine::verify
