#pragma once

#include <map>
#include <string>
#include <vector>

#include "alpine/rng.hpp"

namespace alpine::blp {

struct BoundedDomain {
  double l = 0.0;
  double u = 1.0;

  double delta() const { return u - l; }  // global sensitivity
  void validate() const;
};

struct PrivacyBudget {
  double eps = 1.0;

  double scale(const BoundedDomain& dom) const { return dom.delta() / eps; }
  void validate() const;
};

// Sequential-composition accountant. Append-only within a session.
class BudgetLedger {
 public:
  void append(const std::string& mechanism_id, double eps);
  double total() const { return total_; }
  const std::vector<std::pair<std::string, double>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, double>> entries_;
  double total_ = 0.0;
};

// Normalizer of the truncated Laplace kernel centered at x over [l,u]:
// C(x) = 1 - exp(-(x-l)/b)/2 - exp(-(u-x)/b)/2.
double normalization_constant(double x, const BoundedDomain& dom, double b);

// Analytic CDF of the bounded Laplace release at y, center x, scale b.
double cdf(double y, double x, const BoundedDomain& dom, double b);

// Exact inverse-CDF draw; the release always lies in [l,u].
double sample(double x, const BoundedDomain& dom, const PrivacyBudget& budget,
              Rng& rng);

struct FieldSpec {
  BoundedDomain domain;
  double eps = 0.0;
};

// Per-field independent perturbation; each field's budget is appended to
// the ledger in field-name order.
std::map<std::string, double> perturb_record(
    const std::map<std::string, double>& record,
    const std::map<std::string, FieldSpec>& specs, Rng& rng,
    BudgetLedger& ledger);

// Sequential composition: total budget is the exact sum of the entries.
double compose(const BudgetLedger& ledger);

}  // namespace alpine::blp
