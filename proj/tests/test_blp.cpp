#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "alpine/blp.hpp"

using namespace alpine;
using namespace alpine::blp;

namespace {

// Quadrature oracle: composite Simpson on each smooth side of the kink at x.
double quadrature_constant(double x, const BoundedDomain& dom, double b) {
  auto kernel = [&](double t) { return std::exp(-std::abs(t - x) / b) / (2.0 * b); };
  auto simpson = [&](double lo, double hi) {
    const int n = 4000;  // even
    const double h = (hi - lo) / n;
    double acc = kernel(lo) + kernel(hi);
    for (int i = 1; i < n; ++i) acc += kernel(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  return simpson(dom.l, x) + simpson(x, dom.u);
}

double ks_statistic(std::vector<double> samples, double x, const BoundedDomain& dom,
                    double b) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i], x, dom, b);
    ks = std::max(ks, std::abs((i + 1) / n - f));
    ks = std::max(ks, std::abs(i / n - f));
  }
  return ks;
}

}  // namespace

TEST_CASE("normalization constant closed form") {
  const BoundedDomain dom{0.0, 1.0};
  CHECK(normalization_constant(0.5, dom, 0.25) ==
        doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  // At the boundary one exponential collapses to 1.
  const double b = 0.2;
  CHECK(normalization_constant(0.0, dom, b) ==
        doctest::Approx(0.5 * (1.0 - std::exp(-1.0 / b))).epsilon(1e-12));
  CHECK_THROWS_AS(normalization_constant(1.5, dom, b), std::invalid_argument);
  CHECK_THROWS_AS(normalization_constant(0.5, dom, 0.0), std::invalid_argument);
}

TEST_CASE("normalization constant matches quadrature at random points") {
  Rng rng(42);
  const BoundedDomain dom{-2.0, 3.0};
  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.uniform(dom.l, dom.u);
    const double b = rng.uniform(0.05, 2.0);
    const double analytic = normalization_constant(x, dom, b);
    CHECK(std::abs(analytic - quadrature_constant(x, dom, b)) <= 1e-9);
    CHECK(analytic > 0.0);
    CHECK(analytic < 1.0);
    // Symmetry about the domain center.
    CHECK(normalization_constant(dom.l + dom.u - x, dom, b) ==
          doctest::Approx(analytic).epsilon(1e-12));
  }
}

TEST_CASE("samples stay inside the domain") {
  Rng rng(7);
  const BoundedDomain dom{10.0, 20.0};
  const PrivacyBudget budget{0.5};
  for (int i = 0; i < 100000; ++i) {
    const double y = sample(17.0, dom, budget, rng);
    REQUIRE(y >= dom.l);
    REQUIRE(y <= dom.u);
  }
  CHECK_THROWS_AS(sample(21.0, dom, budget, rng), std::invalid_argument);
}

TEST_CASE("empirical cdf matches the analytic cdf") {
  Rng rng(8);
  const BoundedDomain dom{0.0, 1.0};
  const double x = 0.3;
  const double eps = 2.0;
  const PrivacyBudget budget{eps};
  std::vector<double> samples(100000);
  for (auto& v : samples) v = sample(x, dom, budget, rng);
  CHECK(ks_statistic(std::move(samples), x, dom, budget.scale(dom)) < 0.01);
}

TEST_CASE("larger budgets concentrate the release") {
  Rng rng(9);
  const BoundedDomain dom{0.0, 1.0};
  auto sd_of = [&](double eps) {
    const PrivacyBudget budget{eps};
    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      const double y = sample(0.5, dom, budget, rng);
      sum += y;
      sq += y * y;
    }
    const double mean = sum / n;
    return std::sqrt(sq / n - mean * mean);
  };
  CHECK(sd_of(1.0) >= 10.0 * sd_of(100.0));
}

TEST_CASE("density histogram matches f_w within three standard errors") {
  Rng rng(10);
  const BoundedDomain dom{0.0, 1.0};
  const double x = 0.4;
  const PrivacyBudget budget{1.5};
  const double b = budget.scale(dom);
  const int n = 1000000;
  const int bins = 50;
  std::vector<int> hist(bins, 0);
  for (int i = 0; i < n; ++i) {
    const double y = sample(x, dom, budget, rng);
    const int bin = std::min(bins - 1, static_cast<int>((y - dom.l) / dom.delta() * bins));
    hist[bin]++;
  }
  for (int i = 0; i < bins; ++i) {
    const double lo = dom.l + dom.delta() * i / bins;
    const double hi = dom.l + dom.delta() * (i + 1) / bins;
    const double p = cdf(hi, x, dom, b) - cdf(lo, x, dom, b);
    const double se = std::sqrt(n * p * (1.0 - p));
    CHECK(std::abs(hist[i] - n * p) <= 3.0 * se + 1.0);
  }
}

TEST_CASE("release at the center is symmetric") {
  Rng rng(11);
  const BoundedDomain dom{0.0, 1.0};
  const PrivacyBudget budget{1.0};
  const int n = 1000000;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
  std::vector<double> deltas(n);
  for (int i = 0; i < n; ++i) {
    deltas[i] = sample(0.5, dom, budget, rng) - 0.5;
    m1 += deltas[i];
  }
  m1 /= n;
  for (int i = 0; i < n; ++i) {
    const double d = deltas[i] - m1;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  const double skewness = m3 / std::pow(m2, 1.5);
  CHECK(std::abs(skewness) < 0.02);
}

TEST_CASE("perturb_record noises every field and fills the ledger") {
  Rng rng(12);
  BudgetLedger ledger;

  const auto empty = perturb_record({}, {}, rng, ledger);
  CHECK(empty.empty());
  CHECK(ledger.total() == 0.0);

  std::map<std::string, double> record{
      {"a", 0.2}, {"b", 0.4}, {"c", 0.6}, {"d", 0.8}};
  std::map<std::string, FieldSpec> specs{
      {"a", {{0.0, 1.0}, 1.0}},
      {"b", {{0.0, 1.0}, 1.0}},
      {"c", {{0.0, 1.0}, 2.0}},
      {"d", {{0.0, 1.0}, 2.0}},
  };
  const auto noisy = perturb_record(record, specs, rng, ledger);
  CHECK(noisy.size() == 4);
  CHECK(ledger.total() == 6.0);
  for (const auto& [name, value] : noisy) {
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
  }

  record["e"] = 0.5;  // no spec for e
  CHECK_THROWS_AS(perturb_record(record, specs, rng, ledger), std::invalid_argument);
}

TEST_CASE("compose sums the ledger exactly") {
  BudgetLedger ledger;
  CHECK(compose(ledger) == 0.0);
  ledger.append("m1", 1.0);
  CHECK(compose(ledger) == 1.0);
  ledger.append("m2", 2.0);
  ledger.append("m3", 3.0);
  CHECK(compose(ledger) == 6.0);
  CHECK(ledger.total() == compose(ledger));
}

TEST_CASE("ledger totals are nondecreasing and exact over random sequences") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    BudgetLedger ledger;
    double prev = 0.0;
    const int count = 1 + static_cast<int>(rng.uniform_int(30));
    for (int i = 0; i < count; ++i) {
      ledger.append("m" + std::to_string(i), rng.uniform(1e-6, 4.0));
      CHECK(ledger.total() >= prev);
      prev = ledger.total();
    }
    CHECK(ledger.total() == compose(ledger));
  }
}

TEST_CASE("domain and budget validation") {
  const BoundedDomain degenerate{1.0, 1.0};
  CHECK_THROWS_AS(degenerate.validate(), std::invalid_argument);
  const PrivacyBudget zero{0.0};
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
  const PrivacyBudget negative{-1.0};
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}
