#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alpine/blp.hpp"
#include "alpine/config.hpp"
#include "alpine/rng.hpp"

namespace alpine::harness {

// --- Synthetic sensing task -------------------------------------------------

struct SensingField {
  std::string name;
  std::string kind;  // sensitivity-table key
  blp::BoundedDomain domain;
};

struct SensingTask {
  std::vector<SensingField> base_fields;      // classification features
  std::vector<SensingField> optional_fields;  // sensitive extras, sent some rounds

  static SensingTask default_task();
};

struct SensingDataset {
  std::vector<double> features;  // row-major
  int rows = 0;
  int cols = 0;
  std::vector<int> labels;
};

// Class-conditional feature rows: each base field concentrates around a
// per-class center inside its bounded domain.
SensingDataset make_sensing_dataset(const SensingTask& task, int rows,
                                    std::uint64_t seed);
std::vector<double> make_sensing_row(const SensingTask& task, int label, Rng& rng);

// --- Round log ---------------------------------------------------------------

struct RoundRecord {
  int round = 0;
  int terminal = 0;
  double r_cha = 0, r_sen = 0, r_con = 0, r_res = 0;
  double r_risk = 0;
  double eps = 0;
  double privacy_gain = 0, utility_loss = 0, energy = 0, reward = 0;
  double ledger_total = 0;
  int verified_round = 0;  // 0 until the first verification reaches this terminal
  double mia_auc = 0, privacy_strength = 0, recon_mae = 0;
  double utility_f1 = 0, utility_ratio = 0, clean_f1 = 0;
  double alpha = 0, beta = 0;
  double pipeline_ms = 0, rtt_ms = 0;
};

std::string record_to_json(const RoundRecord& r);
RoundRecord record_from_json(const std::string& line);
void write_round_log(const std::string& path, const std::vector<RoundRecord>& records);
std::vector<RoundRecord> read_round_log(const std::string& path);

// --- Closed loop ---------------------------------------------------------------

struct RunSummary {
  int terminals = 0;
  int rounds = 0;
  double wall_seconds = 0.0;
  double throughput_rps = 0.0;  // records acknowledged per second
  long frames_sent = 0;
  long frames_received = 0;
  long frames_lost = 0;
  std::vector<double> rtts_ms;
};

struct RunResult {
  std::vector<RoundRecord> records;  // sorted by (terminal, round)
  RunSummary summary;
};

// Runs the five-step loop between simulated terminal actors and one edge
// actor. Requires the library and agent checkpoints named by the config.
RunResult run_loop(const config::RunConfig& cfg);

void write_run_summary(const std::string& path, const RunSummary& summary);

// --- Reports -------------------------------------------------------------------

void write_report(const std::vector<RoundRecord>& records, const RunSummary* summary,
                  const std::string& agent_path, const std::string& out_dir);

struct CurveRow {
  long step;
  double critic1, critic2, actor, reward;
};
void write_training_curve(const std::string& path, const std::vector<CurveRow>& rows);

}  // namespace alpine::harness
