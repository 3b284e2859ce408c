#include "alpine/blp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace alpine::blp {

void BoundedDomain::validate() const {
  if (!(l < u)) throw std::invalid_argument("bounded domain: requires l < u");
}

void PrivacyBudget::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("privacy budget: eps must be positive");
}

void BudgetLedger::append(const std::string& mechanism_id, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("ledger: eps must be positive");
  entries_.emplace_back(mechanism_id, eps);
  total_ += eps;
}

static void check_center(double x, const BoundedDomain& dom) {
  dom.validate();
  if (!(x >= dom.l && x <= dom.u))
    throw std::invalid_argument("bounded laplace: x outside [l,u]");
}

double normalization_constant(double x, const BoundedDomain& dom, double b) {
  check_center(x, dom);
  if (!(b > 0.0)) throw std::invalid_argument("bounded laplace: scale must be positive");
  return 1.0 - 0.5 * std::exp(-(x - dom.l) / b) - 0.5 * std::exp(-(dom.u - x) / b);
}

double cdf(double y, double x, const BoundedDomain& dom, double b) {
  check_center(x, dom);
  if (y <= dom.l) return 0.0;
  if (y >= dom.u) return 1.0;
  const double e_lo = std::exp(-(x - dom.l) / b);
  const double c = normalization_constant(x, dom, b);
  double mass;
  if (y <= x) {
    mass = 0.5 * (std::exp(-(x - y) / b) - e_lo);
  } else {
    mass = 0.5 * (1.0 - e_lo) + 0.5 * (1.0 - std::exp(-(y - x) / b));
  }
  return mass / c;
}

double sample(double x, const BoundedDomain& dom, const PrivacyBudget& budget,
              Rng& rng) {
  budget.validate();
  check_center(x, dom);
  const double b = budget.scale(dom);
  const double e_lo = std::exp(-(x - dom.l) / b);
  const double c = 1.0 - 0.5 * e_lo - 0.5 * std::exp(-(dom.u - x) / b);
  const double below_center = 0.5 * (1.0 - e_lo);
  const double target = rng.uniform01() * c;
  double y;
  if (target <= below_center) {
    y = x + b * std::log(2.0 * target + e_lo);
  } else {
    y = x - b * std::log(1.0 - 2.0 * (target - below_center));
  }
  // Absorb ulp-level excursions; the support contract is absolute.
  return std::clamp(y, dom.l, dom.u);
}

std::map<std::string, double> perturb_record(
    const std::map<std::string, double>& record,
    const std::map<std::string, FieldSpec>& specs, Rng& rng,
    BudgetLedger& ledger) {
  std::map<std::string, double> noisy;
  for (const auto& [name, value] : record) {
    auto it = specs.find(name);
    if (it == specs.end())
      throw std::invalid_argument("perturb_record: no bounds for field '" + name + "'");
    const FieldSpec& spec = it->second;
    PrivacyBudget budget{spec.eps};
    noisy[name] = sample(value, spec.domain, budget, rng);
    ledger.append(name, spec.eps);
  }
  return noisy;
}

double compose(const BudgetLedger& ledger) {
  double sum = 0.0;
  for (const auto& [id, eps] : ledger.entries()) sum += eps;
  return sum;
}

}  // namespace alpine::blp
