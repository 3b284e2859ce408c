#include "alpine/tracegen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "alpine/rng.hpp"

namespace alpine::tracegen {

const char* label_name(Label label) {
  switch (label) {
    case Label::Normal: return "normal";
    case Label::Physical: return "physical";
    case Label::Network: return "network";
    case Label::Hardware: return "hardware";
    case Label::Adversarial: return "adversarial";
  }
  return "normal";
}

Label label_from_name(const std::string& name) {
  if (name == "normal") return Label::Normal;
  if (name == "physical") return Label::Physical;
  if (name == "network") return Label::Network;
  if (name == "hardware") return Label::Hardware;
  if (name == "adversarial") return Label::Adversarial;
  throw std::invalid_argument("unknown label '" + name + "'");
}

TraceProfile TraceProfile::fd() {
  TraceProfile p;
  p.name = "FD";
  p.signal_lo = -55.0; p.signal_hi = -45.0;
  p.quality_lo = 53.0; p.quality_hi = 57.0;
  p.ping_lo = 2.0; p.ping_hi = 10.0;
  p.train_count = 4310;
  p.test_count = 5604;
  p.dt_seconds = 86400.0 / 9914.0;  // 24 h of monitoring
  p.signal_column = "rssi";
  p.quality_column = "link_quality";
  return p;
}

TraceProfile TraceProfile::sd() {
  TraceProfile p;
  p.name = "SD";
  p.signal_lo = 80.0; p.signal_hi = 85.0;
  p.quality_lo = 115.0; p.quality_hi = 230.0;
  p.ping_lo = 2.0; p.ping_hi = 10.0;
  p.train_count = 7692;
  p.test_count = 9306;
  p.dt_seconds = 144000.0 / 16998.0;  // 40 h
  p.signal_column = "signal_strength";
  p.quality_column = "transmit_rate";
  return p;
}

TraceProfile TraceProfile::by_name(const std::string& name) {
  if (name == "FD" || name == "fd") return fd();
  if (name == "SD" || name == "sd") return sd();
  throw std::invalid_argument("unknown trace profile '" + name + "'");
}

namespace {

double reflect_into(double x, double lo, double hi) {
  while (x < lo || x > hi) {
    if (x < lo) x = 2.0 * lo - x;
    if (x > hi) x = 2.0 * hi - x;
  }
  return x;
}

// Random-walk step sd as a fraction of the range width.
constexpr double kWalkStepFrac = 0.05;

// Picks a contiguous all-normal window of length k; seeded random starts
// with a linear scan fallback.
int pick_window_start(const Trace& trace, int k, Rng& rng) {
  const int n = static_cast<int>(trace.size());
  if (k > n) throw std::invalid_argument("anomaly window longer than trace");
  auto all_normal = [&](int start) {
    for (int i = start; i < start + k; ++i)
      if (trace[i].label != Label::Normal) return false;
    return true;
  };
  for (int attempt = 0; attempt < 100; ++attempt) {
    const int start = static_cast<int>(rng.uniform_int(n - k + 1));
    if (all_normal(start)) return start;
  }
  for (int start = 0; start + k <= n; ++start)
    if (all_normal(start)) return start;
  throw std::runtime_error("no free stretch for anomaly window");
}

int window_len(const Trace& trace, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw std::invalid_argument("anomaly fraction outside [0,1]");
  return static_cast<int>(std::floor(fraction * static_cast<double>(trace.size())));
}

}  // namespace

Trace gen_baseline(const TraceProfile& profile, int count, std::uint64_t seed,
                   double timestamp_offset) {
  if (count <= 0) throw std::invalid_argument("gen_baseline: count must be positive");
  Rng rng(derive_seed(seed, "baseline-" + profile.name));
  Trace trace(count);
  double sig = 0.5 * (profile.signal_lo + profile.signal_hi);
  double qual = 0.5 * (profile.quality_lo + profile.quality_hi);
  double ping = 0.5 * (profile.ping_lo + profile.ping_hi);
  const double sig_step = kWalkStepFrac * (profile.signal_hi - profile.signal_lo);
  const double qual_step = kWalkStepFrac * (profile.quality_hi - profile.quality_lo);
  const double ping_step = kWalkStepFrac * (profile.ping_hi - profile.ping_lo);
  for (int i = 0; i < count; ++i) {
    sig = reflect_into(sig + rng.normal(0.0, sig_step), profile.signal_lo, profile.signal_hi);
    qual = reflect_into(qual + rng.normal(0.0, qual_step), profile.quality_lo, profile.quality_hi);
    ping = reflect_into(ping + rng.normal(0.0, ping_step), profile.ping_lo, profile.ping_hi);
    trace[i] = {timestamp_offset + (i + 1) * profile.dt_seconds, sig, qual, ping,
                Label::Normal};
  }
  return trace;
}

namespace {

void apply_physical(Trace& trace, const TraceProfile& profile, int start, int k,
                    Rng& rng) {
  const bool fd = profile.name == "FD";
  for (int i = start; i < start + k; ++i) {
    ChannelSample& s = trace[i];
    s.signal -= fd ? rng.uniform(30.0, 60.0) : rng.uniform(40.0, 80.0);
    if (rng.uniform01() < 0.5) s.signal += rng.uniform(-60.0, 60.0);
    if (fd)
      s.quality *= 0.5;  // link quality clamped to 50% of baseline
    else
      s.quality *= 0.16;  // transmit rate reduced to ~16%
    s.label = Label::Physical;
  }
}

void apply_network(Trace& trace, const TraceProfile& profile, int start, int k,
                   Rng& rng) {
  const bool fd = profile.name == "FD";
  for (int i = start; i < start + k; ++i) {
    ChannelSample& s = trace[i];
    // Congestion accumulates across the burst: t is the normalized
    // position within the window.
    const double t = k > 1 ? static_cast<double>(i - start) / (k - 1) : 0.0;
    s.ping_ms *= std::exp(t);
    s.quality = static_cast<double>(rng.uniform_int(fd ? 15 : 30));
    s.label = Label::Network;
  }
}

void apply_hardware(Trace& trace, const TraceProfile&, int start, int k, Rng& rng) {
  for (int i = start; i < start + k; ++i) {
    ChannelSample& s = trace[i];
    s.signal += rng.uniform01() < 0.5 ? -50.0 : 50.0;
    if (s.ping_ms > 3.0) s.ping_ms *= 20.0;
    s.label = Label::Hardware;
  }
}

void apply_adversarial(Trace& trace, const TraceProfile& profile, int start, int k,
                       Rng& rng) {
  const bool fd = profile.name == "FD";
  for (int i = start; i < start + k; ++i) {
    ChannelSample& s = trace[i];
    s.signal *= 0.8;
    if (fd)
      s.quality = s.quality * 0.3 + rng.uniform(-5.0, 5.0);
    else
      s.quality *= 0.2;
    s.ping_ms *= rng.uniform(3.0, 5.0);
    s.signal += rng.normal(-60.0, 15.0);
    s.label = Label::Adversarial;
  }
}

using Injector = void (*)(Trace&, const TraceProfile&, int, int, Rng&);

Trace inject(const Trace& trace, const TraceProfile& profile, double fraction,
             std::uint64_t seed, const char* tag, Injector apply) {
  Trace out = trace;
  const int k = window_len(trace, fraction);
  if (k == 0) return out;
  Rng rng(derive_seed(seed, tag));
  const int start = pick_window_start(out, k, rng);
  apply(out, profile, start, k, rng);
  return out;
}

}  // namespace

Trace inject_physical(const Trace& trace, const TraceProfile& profile,
                      double fraction, std::uint64_t seed) {
  return inject(trace, profile, fraction, seed, "physical", apply_physical);
}

Trace inject_network(const Trace& trace, const TraceProfile& profile,
                     double fraction, std::uint64_t seed) {
  return inject(trace, profile, fraction, seed, "network", apply_network);
}

Trace inject_hardware(const Trace& trace, const TraceProfile& profile,
                      double fraction, std::uint64_t seed) {
  return inject(trace, profile, fraction, seed, "hardware", apply_hardware);
}

Trace inject_adversarial(const Trace& trace, const TraceProfile& profile,
                         double fraction, std::uint64_t seed) {
  return inject(trace, profile, fraction, seed, "adversarial", apply_adversarial);
}

Dataset build_dataset(const TraceProfile& profile, std::uint64_t seed) {
  Dataset ds;
  ds.train = gen_baseline(profile, profile.train_count, derive_seed(seed, "train"));
  const double offset = profile.train_count * profile.dt_seconds;
  ds.test = gen_baseline(profile, profile.test_count, derive_seed(seed, "test"), offset);

  // One anomaly window per quarter of the test trace keeps the four
  // classes disjoint by construction.
  const int n = profile.test_count;
  const int k = static_cast<int>(std::floor(0.05 * n));
  const Injector injectors[4] = {apply_physical, apply_network, apply_hardware,
                                 apply_adversarial};
  const char* tags[4] = {"physical", "network", "hardware", "adversarial"};
  for (int q = 0; q < 4; ++q) {
    const int seg_lo = q * (n / 4);
    const int seg_len = (q == 3 ? n - seg_lo : n / 4);
    Rng rng(derive_seed(seed, std::string("ds-") + tags[q]));
    const int start = seg_lo + static_cast<int>(rng.uniform_int(seg_len - k + 1));
    injectors[q](ds.test, profile, start, k, rng);
  }
  return ds;
}

void write_csv(const std::string& path, const Trace& trace,
               const TraceProfile& profile) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "timestamp," << profile.signal_column << "," << profile.quality_column
      << ",ping_delay_ms,label\n";
  char buf[256];
  for (const ChannelSample& s : trace) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%s\n", s.timestamp,
                  s.signal, s.quality, s.ping_ms, label_name(s.label));
    out << buf;
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Trace read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv '" + path + "'");
  Trace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string part;
    ChannelSample s;
    std::getline(ss, part, ','); s.timestamp = std::stod(part);
    std::getline(ss, part, ','); s.signal = std::stod(part);
    std::getline(ss, part, ','); s.quality = std::stod(part);
    std::getline(ss, part, ','); s.ping_ms = std::stod(part);
    std::getline(ss, part, ','); s.label = label_from_name(part);
    trace.push_back(s);
  }
  return trace;
}

void to_matrix(const Trace& trace, std::vector<double>& features,
               std::vector<int>& labels) {
  features.clear();
  labels.clear();
  features.reserve(trace.size() * 3);
  labels.reserve(trace.size());
  for (const ChannelSample& s : trace) {
    features.push_back(s.signal);
    features.push_back(s.quality);
    features.push_back(s.ping_ms);
    labels.push_back(s.label == Label::Normal ? 0 : 1);
  }
}

}  // namespace alpine::tracegen
