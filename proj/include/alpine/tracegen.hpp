#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace alpine::tracegen {

enum class Label { Normal, Physical, Network, Hardware, Adversarial };

const char* label_name(Label label);
Label label_from_name(const std::string& name);

// One channel telemetry sample. `signal` and `quality` map to
// (rssi, link_quality) in the FD profile and to
// (signal_strength, transmit_rate) in SD.
struct ChannelSample {
  double timestamp = 0.0;  // seconds
  double signal = 0.0;
  double quality = 0.0;
  double ping_ms = 0.0;
  Label label = Label::Normal;
};

using Trace = std::vector<ChannelSample>;

struct TraceProfile {
  std::string name;  // "FD" | "SD"
  double signal_lo = 0.0, signal_hi = 0.0;
  double quality_lo = 0.0, quality_hi = 0.0;
  double ping_lo = 0.0, ping_hi = 0.0;
  int train_count = 0;
  int test_count = 0;
  double dt_seconds = 1.0;
  std::string signal_column;
  std::string quality_column;

  static TraceProfile fd();
  static TraceProfile sd();
  static TraceProfile by_name(const std::string& name);
};

// Bounded Gaussian random walk reflected at the profile's range edges.
Trace gen_baseline(const TraceProfile& profile, int count, std::uint64_t seed,
                   double timestamp_offset = 0.0);

// Each injector marks one contiguous window of floor(fraction * n) samples
// chosen among still-normal stretches, and applies its recipe.
Trace inject_physical(const Trace& trace, const TraceProfile& profile,
                      double fraction, std::uint64_t seed);
Trace inject_network(const Trace& trace, const TraceProfile& profile,
                     double fraction, std::uint64_t seed);
Trace inject_hardware(const Trace& trace, const TraceProfile& profile,
                      double fraction, std::uint64_t seed);
Trace inject_adversarial(const Trace& trace, const TraceProfile& profile,
                         double fraction, std::uint64_t seed);

struct Dataset {
  Trace train;  // clean baseline
  Trace test;   // four anomaly classes at 5% each, disjoint windows
};

Dataset build_dataset(const TraceProfile& profile, std::uint64_t seed);

void write_csv(const std::string& path, const Trace& trace,
               const TraceProfile& profile);
Trace read_csv(const std::string& path);

// Feature matrix (signal, quality, ping) and 0/1 anomaly labels.
void to_matrix(const Trace& trace, std::vector<double>& features,
               std::vector<int>& labels);

}  // namespace alpine::tracegen
