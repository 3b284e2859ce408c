#include <doctest.h>

#include <cmath>

#include "alpine/risk.hpp"
#include "alpine/rng.hpp"

using namespace alpine;
using namespace alpine::risk;

namespace {

// The worked example's pairwise judgments.
PairwiseMatrix example_matrix() {
  PairwiseMatrix c;
  c.n = 4;
  c.entries = {1.0,       1.0 / 3.0, 1.0 / 2.0, 3.0,
               3.0,       1.0,       2.0,       5.0,
               2.0,       1.0 / 2.0, 1.0,       3.0,
               1.0 / 3.0, 1.0 / 5.0, 1.0 / 3.0, 1.0};
  return c;
}

const RiskVector kExampleRisks{0.22, 0.55, 0.65, 0.33};

PairwiseMatrix random_reciprocal(Rng& rng, int n) {
  PairwiseMatrix c;
  c.n = n;
  c.entries.assign(static_cast<std::size_t>(n) * n, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = rng.uniform(1.0 / 9.0, 9.0);
      c.entries[static_cast<std::size_t>(i) * n + j] = v;
      c.entries[static_cast<std::size_t>(j) * n + i] = 1.0 / v;
    }
  return c;
}

}  // namespace

TEST_CASE("anp_weights reproduces the worked-example weights") {
  const auto w = anp_weights(example_matrix());
  REQUIRE(w.weights.size() == 4);
  CHECK(std::abs(w.weights[0] - 0.17) <= 0.01);
  CHECK(std::abs(w.weights[1] - 0.48) <= 0.01);
  CHECK(std::abs(w.weights[2] - 0.27) <= 0.01);
  CHECK(std::abs(w.weights[3] - 0.08) <= 0.01);
  CHECK(std::abs(w.lambda_max - 4.06) <= 0.02);
  CHECK(w.consistency_ratio > 0.0);
  CHECK(w.consistency_ratio < 0.1);
}

TEST_CASE("anp_weights on the all-ones 2x2 matrix") {
  PairwiseMatrix c;
  c.n = 2;
  c.entries = {1, 1, 1, 1};
  const auto w = anp_weights(c);
  CHECK(w.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.lambda_max == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w.consistency_ratio == 0.0);
}

TEST_CASE("anp_weights recovers the closed-form 2x2 eigenvector") {
  PairwiseMatrix c;
  c.n = 2;
  c.entries = {1.0, 2.0, 0.5, 1.0};
  const auto w = anp_weights(c);
  CHECK(w.weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(w.weights[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("anp_weights validation errors") {
  PairwiseMatrix bad;
  bad.n = 2;
  bad.entries = {1.0, 2.0, 0.4, 1.0};  // not reciprocal
  CHECK_THROWS_AS(anp_weights(bad), std::invalid_argument);
  bad.entries = {1.0, -2.0, -0.5, 1.0};  // not positive
  CHECK_THROWS_AS(anp_weights(bad), std::invalid_argument);
  bad.entries = {2.0, 1.0, 1.0, 1.0};  // diagonal not 1
  CHECK_THROWS_AS(anp_weights(bad), std::invalid_argument);
}

TEST_CASE("triangular membership matches the appendix values") {
  CHECK(triangular_membership(0.22, 0.0, 0.0, 0.4) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(triangular_membership(0.65, 0.6, 1.0, 1.0) == doctest::Approx(0.125).epsilon(1e-12));
  // Outside the support of a non-degenerate triangle.
  CHECK(triangular_membership(0.25, 0.3, 0.5, 0.7) == 0.0);
  CHECK(triangular_membership(0.3, 0.3, 0.5, 0.7) == 0.0);
  // Shoulders peak at 1.
  CHECK(triangular_membership(0.0, 0.0, 0.0, 0.4) == 1.0);
  CHECK(triangular_membership(1.0, 0.6, 1.0, 1.0) == 1.0);
  CHECK_THROWS_AS(triangular_membership(0.5, 0.7, 0.5, 0.9), std::invalid_argument);
}

TEST_CASE("fuzzy_relation reproduces the appendix matrix exactly") {
  const auto rel = fuzzy_relation(kExampleRisks, default_grade_scheme());
  const double expected[12] = {0.45,  0.0,  0.0,    //
                               0.0,   0.75, 0.0,    //
                               0.0,   0.25, 0.125,  //
                               0.175, 0.15, 0.0};
  REQUIRE(rel.size() == 12);
  for (int i = 0; i < 12; ++i) CHECK(rel[i] == doctest::Approx(expected[i]).epsilon(1e-9));
}

TEST_CASE("fuzzy_relation midpoint of the falling edge") {
  const auto rel = fuzzy_relation({0.2, 0.0, 0.0, 0.0}, default_grade_scheme());
  CHECK(rel[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fuzzy_relation rows re-derive from triangular_membership") {
  Rng rng(99);
  const auto scheme = default_grade_scheme();
  for (int trial = 0; trial < 50; ++trial) {
    RiskVector r{rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()};
    const auto rel = fuzzy_relation(r, scheme);
    const auto vec = r.as_vector();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto& g = scheme.grades[j];
        CHECK(rel[i * 3 + j] == triangular_membership(vec[i], g.l, g.m, g.u));
      }
  }
}

TEST_CASE("fuzzy_synthesize matches the appendix synthesis") {
  const auto w = anp_weights(example_matrix());
  const auto rel = fuzzy_relation(kExampleRisks, default_grade_scheme());
  const auto b = fuzzy_synthesize(w, rel, 3);
  REQUIRE(b.size() == 3);
  CHECK(std::abs(b[0] - 0.09) <= 0.005);
  CHECK(std::abs(b[1] - 0.44) <= 0.005);
  CHECK(std::abs(b[2] - 0.03) <= 0.005);
}

TEST_CASE("fuzzy_synthesize with one-hot weights selects a row") {
  AnpWeights w;
  w.weights = {0.0, 1.0, 0.0, 0.0};
  const auto rel = fuzzy_relation(kExampleRisks, default_grade_scheme());
  const auto b = fuzzy_synthesize(w, rel, 3);
  for (int j = 0; j < 3; ++j) CHECK(b[j] == rel[1 * 3 + j]);
}

TEST_CASE("fuzzy_synthesize equals a naive dot product") {
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    AnpWeights w;
    w.weights = {rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()};
    std::vector<double> rel(12);
    for (auto& v : rel) v = rng.uniform01();
    const auto b = fuzzy_synthesize(w, rel, 3);
    for (int j = 0; j < 3; ++j) {
      double expect = 0.0;
      for (int i = 0; i < 4; ++i) expect += w.weights[i] * rel[i * 3 + j];
      CHECK(b[j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  AnpWeights w;
  w.weights = {1.0, 0.0};
  CHECK_THROWS_AS(fuzzy_synthesize(w, std::vector<double>(5, 0.1), 3),
                  std::invalid_argument);
}

TEST_CASE("defuzzify matches the appendix composite risk") {
  CHECK(std::abs(defuzzify({0.09, 0.44, 0.03}, {0.2, 0.5, 0.8}) - 0.47) <= 0.01);
}

TEST_CASE("defuzzify degenerate and error cases") {
  CHECK(defuzzify({0.0, 0.7, 0.0}, {0.2, 0.5, 0.8}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(defuzzify({0.0, 0.0, 0.0}, {0.2, 0.5, 0.8}), ZeroMassError);
}

TEST_CASE("defuzzify is invariant to positive scaling of the synthesis") {
  Rng rng(5);
  const std::vector<double> reps = {0.2, 0.5, 0.8};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> b = {rng.uniform01() + 0.01, rng.uniform01(), rng.uniform01()};
    const double base = defuzzify(b, reps);
    const double k = rng.uniform(0.001, 1000.0);
    std::vector<double> scaled = b;
    for (auto& v : scaled) v *= k;
    CHECK(defuzzify(scaled, reps) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("context_risk extremes") {
  // 16 evenly filled bins -> exactly maximal entropy.
  ContextField uniform_field;
  uniform_field.sensitive = true;
  for (int rep = 0; rep < 4; ++rep)
    for (int bin = 0; bin < 16; ++bin)
      uniform_field.samples.push_back((bin + 0.5) / 16.0);
  CHECK(context_risk({uniform_field}) == doctest::Approx(1.0).epsilon(1e-12));

  ContextField insensitive = uniform_field;
  insensitive.sensitive = false;
  CHECK(context_risk({insensitive, insensitive}) == 0.0);

  // One sensitive-uniform plus one non-sensitive field averages to 0.5.
  CHECK(context_risk({uniform_field, insensitive}) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(context_risk({}), std::invalid_argument);
  ContextField empty;
  empty.sensitive = true;
  CHECK_THROWS_AS(context_risk({empty}), std::invalid_argument);
}

TEST_CASE("resource_risk follows the normalized-excess formula") {
  ResourceSnapshot snap;
  snap.mem_normal = 0.4;
  snap.mem_max = 0.8;
  snap.cpu_normal = 0.3;
  snap.cpu_max = 0.9;

  snap.mem_usage = 0.4;
  snap.cpu_usage = 0.3;
  CHECK(resource_risk(snap) == 0.0);

  snap.mem_usage = 0.8;
  CHECK(resource_risk(snap) == doctest::Approx(1.0).epsilon(1e-12));

  snap.mem_usage = 0.6;
  snap.cpu_usage = 0.5;
  CHECK(resource_risk(snap) == doctest::Approx(0.5).epsilon(1e-12));

  // Below baseline clamps to zero, beyond max clamps to one.
  snap.mem_usage = 0.1;
  snap.cpu_usage = 0.1;
  CHECK(resource_risk(snap) == 0.0);
  snap.cpu_usage = 0.95;
  CHECK(resource_risk(snap) == 1.0);

  snap.mem_normal = 0.9;
  snap.mem_max = 0.8;
  CHECK_THROWS_AS(resource_risk(snap), std::invalid_argument);
}

TEST_CASE("fuse reproduces the appendix pipeline") {
  const auto w = anp_weights(example_matrix());
  const auto fused = fuse(kExampleRisks, w, default_grade_scheme());
  CHECK(std::abs(fused.r_risk - 0.47) <= 0.01);
  CHECK(fused.relation.size() == 12);
  CHECK(fused.synthesis.size() == 3);
}

TEST_CASE("fuse shoulder extremes") {
  const auto w = anp_weights(example_matrix());
  const auto scheme = default_grade_scheme();
  CHECK(fuse({0, 0, 0, 0}, w, scheme).r_risk == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fuse({1, 1, 1, 1}, w, scheme).r_risk == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("fuse is monotone in every risk component") {
  const auto w = anp_weights(example_matrix());
  const auto scheme = default_grade_scheme();
  Rng rng(2024);
  for (int comp = 0; comp < 4; ++comp) {
    for (int ctx = 0; ctx < 50; ++ctx) {
      double base[4] = {rng.uniform01(), rng.uniform01(), rng.uniform01(),
                        rng.uniform01()};
      double prev = -1.0;
      for (int g = 0; g < 50; ++g) {
        base[comp] = static_cast<double>(g) / 49.0;
        const RiskVector r{base[0], base[1], base[2], base[3]};
        const double v = fuse(r, w, scheme).r_risk;
        CHECK(v >= prev - 1e-9);
        prev = v;
      }
    }
  }
}

TEST_CASE("anp weights normalize over random reciprocal matrices") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = random_reciprocal(rng, 4);
    const auto w = anp_weights(c);
    double sum = 0.0;
    for (double v : w.weights) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(w.lambda_max >= 4.0 - 1e-9);
  }
}

TEST_CASE("consistent matrices are recovered exactly") {
  Rng rng(88);
  for (int trial = 0; trial < 100; ++trial) {
    double wtrue[4];
    double total = 0.0;
    for (double& v : wtrue) {
      v = rng.uniform(0.1, 10.0);
      total += v;
    }
    PairwiseMatrix c;
    c.n = 4;
    c.entries.resize(16);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) c.entries[i * 4 + j] = wtrue[i] / wtrue[j];
    const auto w = anp_weights(c);
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(w.weights[i] - wtrue[i] / total) <= 1e-6);
    CHECK(w.consistency_ratio < 1e-9);
  }
}

TEST_CASE("grade scheme validation") {
  GradeScheme bad = default_grade_scheme();
  bad.grades[1].rep = 0.1;  // representatives must increase
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  GradeScheme gap = default_grade_scheme();
  gap.grades[1].l = 0.5;  // leaves (0.4, 0.5) uncovered
  CHECK_THROWS_AS(gap.validate(), std::invalid_argument);

  CHECK_NOTHROW(default_grade_scheme().validate());
}

TEST_CASE("sensitivity table defaults and lookup") {
  const auto table = default_sensitivity_table();
  CHECK(table.lookup("location") == 1.0);
  CHECK(table.lookup("health") == 0.8);
  CHECK(table.lookup("environmental") == 0.3);
  CHECK_THROWS_AS(table.lookup("unknown"), std::invalid_argument);
}
