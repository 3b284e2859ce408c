#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace alpine::risk {

// Saaty-scale pairwise comparison matrix, reciprocal by construction.
struct PairwiseMatrix {
  int n = 0;
  std::vector<double> entries;  // row-major n*n

  double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
  void validate() const;  // throws std::invalid_argument
};

struct AnpWeights {
  std::vector<double> weights;
  double lambda_max = 0.0;
  double consistency_ratio = 0.0;
};

struct Grade {
  std::string label;
  double l = 0.0, m = 0.0, u = 0.0;  // triangular parameters, l <= m <= u
  double rep = 0.0;                  // representative value for defuzzification
};

struct GradeScheme {
  std::vector<Grade> grades;
  void validate() const;
  std::vector<double> representatives() const;
};

GradeScheme default_grade_scheme();

struct RiskVector {
  double r_cha = 0.0;
  double r_sen = 0.0;
  double r_con = 0.0;
  double r_res = 0.0;

  std::vector<double> as_vector() const { return {r_cha, r_sen, r_con, r_res}; }
  void validate() const;
};

struct CompositeRisk {
  std::vector<double> relation;   // row-major dims x grades
  std::vector<double> synthesis;  // length grades
  double r_risk = 0.0;
};

// Per-field-kind sensitivity scores in [0,1].
struct SensitivityTable {
  std::map<std::string, double> scores;

  double lookup(const std::string& kind) const;
  void validate() const;
};

SensitivityTable default_sensitivity_table();

struct ResourceSnapshot {
  double mem_usage = 0.0, cpu_usage = 0.0;
  double mem_normal = 0.0, cpu_normal = 0.0;
  double mem_max = 1.0, cpu_max = 1.0;
  void validate() const;
};

struct ContextField {
  bool sensitive = false;
  std::vector<double> samples;
};

// Defuzzification hit zero total mass; callers fall back to the
// maximum-risk representative.
class ZeroMassError : public std::runtime_error {
 public:
  ZeroMassError() : std::runtime_error("fuzzy synthesis has zero total mass") {}
};

class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Principal-eigenvector weights by power iteration; consistency ratio from
// the Saaty random-index table. CR > 0.1 logs a warning but is not an error.
AnpWeights anp_weights(const PairwiseMatrix& c);

double triangular_membership(double x, double l, double m, double u);

// Row i holds the membership of risk component i to each grade.
std::vector<double> fuzzy_relation(const RiskVector& risks, const GradeScheme& scheme);

std::vector<double> fuzzy_synthesize(const AnpWeights& w,
                                     const std::vector<double>& relation,
                                     int grade_count);

double defuzzify(const std::vector<double>& synthesis,
                 const std::vector<double>& representatives);

double context_risk(const std::vector<ContextField>& fields);

double resource_risk(const ResourceSnapshot& snap);

CompositeRisk fuse(const RiskVector& risks, const AnpWeights& w,
                   const GradeScheme& scheme);

}  // namespace alpine::risk
