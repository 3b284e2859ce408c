#include "alpine/risk.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace alpine::risk {

namespace {

// Saaty random indices for n = 1..10.
constexpr double kRandomIndex[] = {0.0, 0.0, 0.0, 0.58, 0.89,
                                   1.12, 1.24, 1.32, 1.41, 1.45, 1.49};

constexpr double kReciprocityTol = 1e-12;
constexpr int kPowerIterCap = 10000;
constexpr double kPowerIterTol = 1e-12;

}  // namespace

void PairwiseMatrix::validate() const {
  if (n < 1 || entries.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("pairwise matrix: bad shape");
  for (int i = 0; i < n; ++i) {
    if (std::abs(at(i, i) - 1.0) > kReciprocityTol)
      throw std::invalid_argument("pairwise matrix: diagonal entries must be 1");
    for (int j = 0; j < n; ++j) {
      if (!(at(i, j) > 0.0))
        throw std::invalid_argument("pairwise matrix: entries must be positive");
      if (std::abs(at(i, j) * at(j, i) - 1.0) > kReciprocityTol)
        throw std::invalid_argument("pairwise matrix: reciprocity violated");
    }
  }
}

AnpWeights anp_weights(const PairwiseMatrix& c) {
  c.validate();
  const int n = c.n;
  std::vector<double> v(n, 1.0 / n), cv(n);
  double lambda = 0.0;
  bool converged = false;
  for (int it = 0; it < kPowerIterCap; ++it) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += c.at(i, j) * v[j];
      cv[i] = acc;
    }
    const double total = std::accumulate(cv.begin(), cv.end(), 0.0);
    lambda = total;  // v sums to 1, so sum(Cv)/sum(v) = total
    double delta = 0.0;
    for (int i = 0; i < n; ++i) {
      cv[i] /= total;
      delta = std::max(delta, std::abs(cv[i] - v[i]));
    }
    v = cv;
    if (delta < kPowerIterTol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("anp_weights: power iteration did not converge");

  AnpWeights out;
  out.weights = v;
  out.lambda_max = lambda;
  const double ri = n <= 10 ? kRandomIndex[n] : kRandomIndex[10];
  out.consistency_ratio =
      (n <= 2 || ri == 0.0) ? 0.0 : (lambda - n) / ((n - 1) * ri);
  if (out.consistency_ratio > 0.1)
    std::cerr << "[risk] warning: consistency ratio " << out.consistency_ratio
              << " exceeds 0.1; pairwise judgments are inconsistent\n";
  return out;
}

double triangular_membership(double x, double l, double m, double u) {
  if (!(l <= m && m <= u))
    throw std::invalid_argument("triangular_membership: requires l <= m <= u");
  if (l == m && m == u) return x == m ? 1.0 : 0.0;
  if (l == m) {  // left shoulder: plateau of 1 at the peak, falling edge after
    if (x < l || x >= u) return 0.0;
    if (x <= m) return 1.0;
    return (u - x) / (u - m);
  }
  if (m == u) {  // right shoulder
    if (x <= l || x > u) return 0.0;
    if (x >= m) return 1.0;
    return (x - l) / (m - l);
  }
  if (x <= l || x >= u) return 0.0;
  if (x <= m) return (x - l) / (m - l);
  return (u - x) / (u - m);
}

void GradeScheme::validate() const {
  if (grades.empty()) throw std::invalid_argument("grade scheme: empty");
  double prev_rep = -std::numeric_limits<double>::infinity();
  for (const auto& g : grades) {
    if (!(g.l <= g.m && g.m <= g.u))
      throw std::invalid_argument("grade scheme: requires l <= m <= u");
    if (!(g.rep > prev_rep))
      throw std::invalid_argument("grade scheme: representatives must increase");
    prev_rep = g.rep;
  }
  // Union of supports must cover [0,1].
  std::vector<std::pair<double, double>> spans;
  spans.reserve(grades.size());
  for (const auto& g : grades) spans.emplace_back(g.l, g.u);
  std::sort(spans.begin(), spans.end());
  double covered = 0.0;
  for (const auto& [lo, hi] : spans) {
    if (lo > covered) throw std::invalid_argument("grade scheme: supports leave a gap");
    covered = std::max(covered, hi);
  }
  if (spans.front().first > 0.0 || covered < 1.0)
    throw std::invalid_argument("grade scheme: supports must cover [0,1]");
}

std::vector<double> GradeScheme::representatives() const {
  std::vector<double> reps;
  reps.reserve(grades.size());
  for (const auto& g : grades) reps.push_back(g.rep);
  return reps;
}

GradeScheme default_grade_scheme() {
  return GradeScheme{{
      {"low", 0.0, 0.0, 0.4, 0.2},
      {"medium", 0.3, 0.5, 0.7, 0.5},
      {"high", 0.6, 1.0, 1.0, 0.8},
  }};
}

void RiskVector::validate() const {
  for (double v : {r_cha, r_sen, r_con, r_res})
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("risk vector: components must lie in [0,1]");
}

std::vector<double> fuzzy_relation(const RiskVector& risks, const GradeScheme& scheme) {
  risks.validate();
  scheme.validate();
  const auto r = risks.as_vector();
  const std::size_t k = scheme.grades.size();
  std::vector<double> rel(r.size() * k, 0.0);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const Grade& g = scheme.grades[j];
      rel[i * k + j] = triangular_membership(r[i], g.l, g.m, g.u);
    }
  return rel;
}

std::vector<double> fuzzy_synthesize(const AnpWeights& w,
                                     const std::vector<double>& relation,
                                     int grade_count) {
  const std::size_t n = w.weights.size();
  const std::size_t k = static_cast<std::size_t>(grade_count);
  if (relation.size() != n * k)
    throw std::invalid_argument("fuzzy_synthesize: dimension mismatch");
  std::vector<double> b(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) b[j] += w.weights[i] * relation[i * k + j];
  return b;
}

double defuzzify(const std::vector<double>& synthesis,
                 const std::vector<double>& representatives) {
  if (synthesis.size() != representatives.size())
    throw std::invalid_argument("defuzzify: dimension mismatch");
  double mass = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < synthesis.size(); ++i) {
    mass += synthesis[i];
    weighted += synthesis[i] * representatives[i];
  }
  if (mass <= 0.0) throw ZeroMassError();
  return weighted / mass;
}

double context_risk(const std::vector<ContextField>& fields) {
  if (fields.empty()) throw std::invalid_argument("context_risk: no fields");
  constexpr int kBins = 16;
  const double log2_bins = std::log2(static_cast<double>(kBins));
  double acc = 0.0;
  for (const auto& f : fields) {
    if (f.samples.empty())
      throw std::invalid_argument("context_risk: field with no samples");
    if (!f.sensitive) continue;
    const auto [lo_it, hi_it] = std::minmax_element(f.samples.begin(), f.samples.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) continue;  // constant field carries zero entropy
    int hist[kBins] = {};
    for (double s : f.samples) {
      int bin = static_cast<int>((s - lo) / (hi - lo) * kBins);
      hist[std::clamp(bin, 0, kBins - 1)]++;
    }
    double h = 0.0;
    for (int c : hist) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / f.samples.size();
      h -= p * std::log2(p);
    }
    acc += h / log2_bins;
  }
  return acc / static_cast<double>(fields.size());
}

void ResourceSnapshot::validate() const {
  auto check = [](double normal, double max) {
    return normal >= 0.0 && normal < max && max <= 1.0;
  };
  if (!check(mem_normal, mem_max) || !check(cpu_normal, cpu_max))
    throw std::invalid_argument("resource snapshot: requires 0 <= normal < max <= 1");
}

double resource_risk(const ResourceSnapshot& snap) {
  snap.validate();
  const double mem = (snap.mem_usage - snap.mem_normal) / (snap.mem_max - snap.mem_normal);
  const double cpu = (snap.cpu_usage - snap.cpu_normal) / (snap.cpu_max - snap.cpu_normal);
  return std::clamp(std::max(mem, cpu), 0.0, 1.0);
}

double SensitivityTable::lookup(const std::string& kind) const {
  auto it = scores.find(kind);
  if (it == scores.end())
    throw std::invalid_argument("sensitivity table: unknown field kind '" + kind + "'");
  return it->second;
}

void SensitivityTable::validate() const {
  for (const auto& [kind, score] : scores)
    if (!(score >= 0.0 && score <= 1.0))
      throw std::invalid_argument("sensitivity table: score for '" + kind +
                                  "' outside [0,1]");
}

SensitivityTable default_sensitivity_table() {
  return SensitivityTable{{
      {"location", 1.0},
      {"health", 0.8},
      {"environmental", 0.3},
  }};
}

CompositeRisk fuse(const RiskVector& risks, const AnpWeights& w,
                   const GradeScheme& scheme) {
  CompositeRisk out;
  out.relation = fuzzy_relation(risks, scheme);
  out.synthesis = fuzzy_synthesize(w, out.relation,
                                   static_cast<int>(scheme.grades.size()));
  out.r_risk = defuzzify(out.synthesis, scheme.representatives());
  return out;
}

}  // namespace alpine::risk
