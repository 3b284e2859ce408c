#include "alpine/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "alpine/decision.hpp"
#include "alpine/lightae.hpp"
#include "alpine/model_io.hpp"
#include "alpine/risk.hpp"
#include "alpine/tracegen.hpp"
#include "alpine/transport.hpp"
#include "alpine/verify.hpp"

namespace alpine::harness {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

SensingTask SensingTask::default_task() {
  SensingTask task;
  task.base_fields = {
      {"temperature", "environmental", {15.0, 35.0}},
      {"humidity", "environmental", {20.0, 80.0}},
      {"light", "environmental", {0.0, 1000.0}},
      {"voltage", "environmental", {2.0, 3.0}},
  };
  task.optional_fields = {
      {"location", "location", {0.0, 100.0}},
      {"heart_rate", "health", {50.0, 150.0}},
  };
  return task;
}

std::vector<double> make_sensing_row(const SensingTask& task, int label, Rng& rng) {
  std::vector<double> row;
  row.reserve(task.base_fields.size());
  for (const auto& f : task.base_fields) {
    const double width = f.domain.delta();
    const double center = f.domain.l + (label == 1 ? 0.8 : 0.2) * width;
    row.push_back(std::clamp(rng.normal(center, 0.06 * width), f.domain.l, f.domain.u));
  }
  return row;
}

SensingDataset make_sensing_dataset(const SensingTask& task, int rows,
                                    std::uint64_t seed) {
  SensingDataset ds;
  ds.rows = rows;
  ds.cols = static_cast<int>(task.base_fields.size());
  ds.features.reserve(static_cast<std::size_t>(rows) * ds.cols);
  ds.labels.reserve(rows);
  Rng rng(derive_seed(seed, "sensing"));
  for (int r = 0; r < rows; ++r) {
    const int label = rng.uniform01() < 0.5 ? 0 : 1;
    const auto row = make_sensing_row(task, label, rng);
    ds.features.insert(ds.features.end(), row.begin(), row.end());
    ds.labels.push_back(label);
  }
  return ds;
}

// --- Round log ----------------------------------------------------------------

std::string record_to_json(const RoundRecord& r) {
  json j;
  j["round"] = r.round;
  j["terminal"] = r.terminal;
  j["r_cha"] = r.r_cha;
  j["r_sen"] = r.r_sen;
  j["r_con"] = r.r_con;
  j["r_res"] = r.r_res;
  j["r_risk"] = r.r_risk;
  j["eps"] = r.eps;
  j["privacy_gain"] = r.privacy_gain;
  j["utility_loss"] = r.utility_loss;
  j["energy"] = r.energy;
  j["reward"] = r.reward;
  j["ledger_total"] = r.ledger_total;
  j["verified_round"] = r.verified_round;
  j["mia_auc"] = r.mia_auc;
  j["privacy_strength"] = r.privacy_strength;
  j["recon_mae"] = r.recon_mae;
  j["utility_f1"] = r.utility_f1;
  j["utility_ratio"] = r.utility_ratio;
  j["clean_f1"] = r.clean_f1;
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["pipeline_ms"] = r.pipeline_ms;
  j["rtt_ms"] = r.rtt_ms;
  return j.dump();
}

RoundRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  RoundRecord r;
  r.round = j.at("round");
  r.terminal = j.at("terminal");
  r.r_cha = j.at("r_cha");
  r.r_sen = j.at("r_sen");
  r.r_con = j.at("r_con");
  r.r_res = j.at("r_res");
  r.r_risk = j.at("r_risk");
  r.eps = j.at("eps");
  r.privacy_gain = j.at("privacy_gain");
  r.utility_loss = j.at("utility_loss");
  r.energy = j.at("energy");
  r.reward = j.at("reward");
  r.ledger_total = j.at("ledger_total");
  r.verified_round = j.at("verified_round");
  r.mia_auc = j.at("mia_auc");
  r.privacy_strength = j.at("privacy_strength");
  r.recon_mae = j.at("recon_mae");
  r.utility_f1 = j.at("utility_f1");
  r.utility_ratio = j.at("utility_ratio");
  r.clean_f1 = j.at("clean_f1");
  r.alpha = j.at("alpha");
  r.beta = j.at("beta");
  r.pipeline_ms = j.at("pipeline_ms");
  r.rtt_ms = j.at("rtt_ms");
  return r;
}

void write_round_log(const std::string& path, const std::vector<RoundRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& r : records) out << record_to_json(r) << "\n";
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<RoundRecord> read_round_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<RoundRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(record_from_json(line));
  }
  return records;
}

// --- Closed loop ----------------------------------------------------------------

namespace {

std::vector<std::uint8_t> to_bytes(const json& j) {
  const std::string s = j.dump();
  return {s.begin(), s.end()};
}

json from_bytes(const std::vector<std::uint8_t>& bytes) {
  return json::parse(std::string(bytes.begin(), bytes.end()));
}

struct VerificationOutcome {
  double mia_auc = 0.5;
  double strength = 1.0;
  double utility_f1 = 0.0;
  double utility_ratio = 0.0;
  double recon_mae = 0.0;
};

// Edge-side simulation on its own clean holdout: re-noise at the budget the
// terminal actually used, then attack and evaluate.
VerificationOutcome edge_verify(const SensingTask& task, const SensingDataset& holdout,
                                double clean_f1, double eps, int n_fields,
                                std::uint64_t seed) {
  VerificationOutcome out;
  const double eps_field = eps / std::max(1, n_fields);
  Rng rng(derive_seed(seed, "edge-noise"));
  blp::BudgetLedger scratch_ledger;
  std::vector<double> noisy = holdout.features;
  for (int r = 0; r < holdout.rows; ++r)
    for (int c = 0; c < holdout.cols; ++c) {
      const auto& dom = task.base_fields[c].domain;
      noisy[static_cast<std::size_t>(r) * holdout.cols + c] =
          blp::sample(noisy[static_cast<std::size_t>(r) * holdout.cols + c], dom,
                      {eps_field}, rng);
    }
  (void)scratch_ledger;

  // Membership inference: the attacked model is trained on half the rows.
  const int members = holdout.rows / 2;
  std::vector<double> member_x(noisy.begin(),
                               noisy.begin() + static_cast<std::size_t>(members) * holdout.cols);
  std::vector<int> member_y(holdout.labels.begin(), holdout.labels.begin() + members);
  const auto model = verify::fit_logistic(member_x, members, holdout.cols, member_y);
  std::vector<double> conf_members, conf_non;
  for (int r = 0; r < holdout.rows; ++r) {
    std::vector<double> row(noisy.begin() + static_cast<std::size_t>(r) * holdout.cols,
                            noisy.begin() + static_cast<std::size_t>(r + 1) * holdout.cols);
    const double p = model.predict_proba(row);
    const double conf = holdout.labels[r] == 1 ? p : 1.0 - p;
    (r < members ? conf_members : conf_non).push_back(conf);
  }
  out.mia_auc = verify::mia_attack(conf_members, conf_non);
  out.strength = verify::privacy_strength(out.mia_auc);

  const auto report = verify::utility_eval(noisy, holdout.rows, holdout.cols,
                                           holdout.labels, derive_seed(seed, "edge-utility"));
  out.utility_f1 = report.f1;
  out.utility_ratio = clean_f1 > 0.0 ? report.f1 / clean_f1 : 0.0;

  std::vector<double> clean_series(holdout.rows), noisy_series(holdout.rows);
  for (int r = 0; r < holdout.rows; ++r) {
    clean_series[r] = holdout.features[static_cast<std::size_t>(r) * holdout.cols];
    noisy_series[r] = noisy[static_cast<std::size_t>(r) * holdout.cols];
  }
  out.recon_mae = verify::reconstruction_attack(noisy_series, clean_series,
                                                verify::Denoiser::Wiener, 5);
  return out;
}

struct TerminalOutput {
  std::vector<RoundRecord> records;
  std::vector<double> rtts_ms;
  long frames_sent = 0;
  long frames_received = 0;
};

constexpr int kFrameTimeoutMs = 60000;

void edge_handler(const config::RunConfig& cfg, const SensingTask& task,
                  const SensingDataset& holdout, double clean_f1,
                  transport::Session& session) {
  const transport::Frame hello = session.recv(kFrameTimeoutMs);
  if (hello.type != transport::FrameType::Ack)
    throw transport::ProtocolError("edge: expected hello frame");
  const int terminal = from_bytes(hello.payload).at("terminal");

  verify::FeedbackState fb = cfg.feedback;
  VerificationOutcome latest;
  int verified_round = 0;

  for (int round = 1; round <= cfg.rounds; ++round) {
    session.send(transport::FrameType::Task, to_bytes(json{{"round", round}}));
    const transport::Frame frame = session.recv(kFrameTimeoutMs);
    if (frame.type != transport::FrameType::Record)
      throw transport::ProtocolError("edge: expected record frame");
    const json record = from_bytes(frame.payload);
    const double eps = record.at("eps");
    const int n_fields = record.at("n_fields");

    if (round % cfg.verify_cadence == 0) {
      latest = edge_verify(task, holdout, clean_f1, eps, n_fields,
                           derive_seed(cfg.seed, "verify-" + std::to_string(terminal) +
                                                     "-" + std::to_string(round)));
      fb = verify::feedback_update(fb, latest.strength, latest.utility_ratio);
      verified_round = round;
    }

    json feedback;
    feedback["round"] = round;
    feedback["alpha"] = fb.alpha;
    feedback["beta"] = fb.beta;
    feedback["verified_round"] = verified_round;
    feedback["mia_auc"] = latest.mia_auc;
    feedback["privacy_strength"] = latest.strength;
    feedback["utility_f1"] = latest.utility_f1;
    feedback["utility_ratio"] = latest.utility_ratio;
    feedback["recon_mae"] = latest.recon_mae;
    feedback["clean_f1"] = clean_f1;
    session.send(transport::FrameType::Feedback, to_bytes(feedback));
  }
}

TerminalOutput terminal_actor(const config::RunConfig& cfg, int terminal,
                              const SensingTask& task, const nn::Mlp& plan_net,
                              const lightae::Standardizer& moments,
                              const lightae::Calibration& calib,
                              const risk::AnpWeights& weights,
                              const decision::Actor& actor,
                              const tracegen::Trace& trace,
                              transport::Session& session) {
  TerminalOutput out;
  session.send(transport::FrameType::Ack, to_bytes(json{{"terminal", terminal}}));

  decision::RewardParams rp = cfg.reward;
  blp::BudgetLedger ledger;
  const double max_rep = cfg.grades.grades.back().rep;
  const std::size_t plan_macs = plan_net.mac_count();

  std::map<std::string, std::deque<double>> history;
  constexpr std::size_t kHistoryCap = 50;

  int verified_round = 0;
  VerificationOutcome latest;
  double clean_f1 = 0.0;

  for (int round = 1; round <= cfg.rounds; ++round) {
    const transport::Frame taskf = session.recv(kFrameTimeoutMs);
    if (taskf.type != transport::FrameType::Task)
      throw transport::ProtocolError("terminal: expected task frame");

    const auto t0 = Clock::now();
    const std::string tag = std::to_string(terminal) + "-" + std::to_string(round);

    // (2) risk perception
    const tracegen::ChannelSample& cs = trace[(round - 1) % trace.size()];
    std::vector<double> window = {cs.signal, cs.quality, cs.ping_ms};
    window = moments.applied(window);
    const double score = lightae::anomaly_score(plan_net, window);
    const double r_cha = lightae::risk_from_score(calib, score);

    Rng field_rng(derive_seed(cfg.seed, "fields-" + tag));
    const int label = field_rng.uniform01() < 0.5 ? 0 : 1;
    std::vector<double> base_row = make_sensing_row(task, label, field_rng);

    std::map<std::string, double> fields;
    std::map<std::string, blp::FieldSpec> specs;
    std::vector<std::string> kinds;
    for (std::size_t c = 0; c < task.base_fields.size(); ++c) {
      const auto& f = task.base_fields[c];
      fields[f.name] = base_row[c];
      specs[f.name] = {f.domain, 0.0};
      kinds.push_back(f.kind);
    }
    for (const auto& f : task.optional_fields) {
      if (field_rng.uniform01() < 0.3) {
        fields[f.name] = field_rng.uniform(f.domain.l, f.domain.u);
        specs[f.name] = {f.domain, 0.0};
        kinds.push_back(f.kind);
      }
    }

    double sens_sum = 0.0;
    for (const auto& kind : kinds) sens_sum += cfg.sensitivity.lookup(kind);
    const double r_sen = sens_sum / static_cast<double>(kinds.size());

    std::map<std::string, std::string> kind_of;
    for (const auto& f : task.base_fields) kind_of[f.name] = f.kind;
    for (const auto& f : task.optional_fields) kind_of[f.name] = f.kind;

    std::vector<risk::ContextField> context;
    for (const auto& [name, value] : fields) {
      auto& h = history[name];
      h.push_back(value);
      if (h.size() > kHistoryCap) h.pop_front();
      risk::ContextField cf;
      cf.sensitive = cfg.sensitivity.lookup(kind_of.at(name)) >= 0.5;
      cf.samples.assign(h.begin(), h.end());
      context.push_back(std::move(cf));
    }
    const double r_con = risk::context_risk(context);

    Rng res_rng(derive_seed(cfg.seed, "res-" + tag));
    risk::ResourceSnapshot snap;
    snap.mem_normal = cfg.mem_normal;
    snap.mem_max = cfg.mem_max;
    snap.cpu_normal = cfg.cpu_normal;
    snap.cpu_max = cfg.cpu_max;
    const double mu = res_rng.uniform01();
    const double cu = res_rng.uniform01();
    snap.mem_usage = cfg.mem_normal + (cfg.mem_max - cfg.mem_normal) * mu * mu * mu;
    snap.cpu_usage = cfg.cpu_normal + (cfg.cpu_max - cfg.cpu_normal) * cu * cu * cu;
    const double r_res = risk::resource_risk(snap);

    risk::RiskVector risks{r_cha, r_sen, r_con, r_res};
    double r_risk;
    try {
      r_risk = risk::fuse(risks, weights, cfg.grades).r_risk;
    } catch (const risk::ZeroMassError&) {
      r_risk = max_rep;  // conservative fallback
    }

    // (3) decision and noise injection
    Rng act_rng(derive_seed(cfg.seed, "act-" + tag));
    const double eps = decision::act(actor, r_risk, false, cfg.td3.explore_noise_sd,
                                     act_rng);
    const double eps_field = eps / static_cast<double>(fields.size());
    for (auto& [name, spec] : specs) spec.eps = eps_field;
    Rng noise_rng(derive_seed(cfg.seed, "blp-" + tag));
    const auto noisy = blp::perturb_record(fields, specs, noise_rng, ledger);

    // (4) transmit
    json record;
    record["round"] = round;
    record["terminal"] = terminal;
    record["eps"] = eps;
    record["n_fields"] = static_cast<int>(fields.size());
    record["label"] = label;
    json jfields;
    for (const auto& [name, value] : noisy) jfields[name] = value;
    record["fields"] = jfields;
    const auto payload = to_bytes(record);

    const double power = cfg.energy.base_watts +
                         cfg.energy.watts_per_mac * static_cast<double>(plan_macs) +
                         cfg.energy.watts_per_byte * static_cast<double>(payload.size());
    const std::vector<double> power_window(5, power);
    const double energy = decision::energy_cost(power_window, cfg.energy.ceiling_watts);

    const double pg = decision::privacy_gain(eps, r_risk, rp);
    const double ul = decision::utility_loss(eps, r_risk, rp);
    const double w = decision::reward(eps, r_risk, rp, energy);

    const auto t1 = Clock::now();
    const transport::Frame reply =
        session.request(transport::FrameType::Record, payload, kFrameTimeoutMs);
    if (reply.type != transport::FrameType::Feedback)
      throw transport::ProtocolError("terminal: expected feedback frame");

    // (5) apply feedback
    const json fbj = from_bytes(reply.payload);
    rp.alpha = fbj.at("alpha");
    rp.beta = fbj.at("beta");
    verified_round = fbj.at("verified_round");
    latest.mia_auc = fbj.at("mia_auc");
    latest.strength = fbj.at("privacy_strength");
    latest.utility_f1 = fbj.at("utility_f1");
    latest.utility_ratio = fbj.at("utility_ratio");
    latest.recon_mae = fbj.at("recon_mae");
    clean_f1 = fbj.at("clean_f1");

    RoundRecord rec;
    rec.round = round;
    rec.terminal = terminal;
    rec.r_cha = r_cha;
    rec.r_sen = r_sen;
    rec.r_con = r_con;
    rec.r_res = r_res;
    rec.r_risk = r_risk;
    rec.eps = eps;
    rec.privacy_gain = pg;
    rec.utility_loss = ul;
    rec.energy = energy;
    rec.reward = w;
    rec.ledger_total = ledger.total();
    rec.verified_round = verified_round;
    rec.mia_auc = latest.mia_auc;
    rec.privacy_strength = latest.strength;
    rec.recon_mae = latest.recon_mae;
    rec.utility_f1 = latest.utility_f1;
    rec.utility_ratio = latest.utility_ratio;
    rec.clean_f1 = clean_f1;
    rec.alpha = rp.alpha;
    rec.beta = rp.beta;
    rec.pipeline_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rec.rtt_ms = session.rtts_ms().back();
    out.records.push_back(rec);
  }
  out.rtts_ms = session.rtts_ms();
  out.frames_sent = static_cast<long>(session.frames_sent());
  out.frames_received = static_cast<long>(session.frames_received());
  return out;
}

}  // namespace

RunResult run_loop(const config::RunConfig& cfg) {
  cfg.validate();
  if (cfg.library_path.empty() || cfg.agent_path.empty())
    throw std::runtime_error("run_loop: library and agent checkpoint paths required");

  const lightae::BlockLibrary lib = model_io::load_library(cfg.library_path);
  const model_io::AgentCheckpoint agent = model_io::load_agent(cfg.agent_path);

  const lightae::SelectionPlan plan = lightae::select_blocks(lib, cfg.constraints);
  const nn::Mlp plan_net = lightae::compose_plan(lib, plan);

  // Per-plan calibration on fresh clean windows.
  const auto profile = tracegen::TraceProfile::by_name(cfg.profile);
  const auto calib_trace =
      tracegen::gen_baseline(profile, 1000, derive_seed(cfg.seed, "calib"));
  std::vector<double> calib_features;
  std::vector<int> calib_labels;
  tracegen::to_matrix(calib_trace, calib_features, calib_labels);
  lib.moments.apply(calib_features);
  const auto clean_scores =
      lightae::anomaly_scores(plan_net, calib_features, static_cast<int>(calib_trace.size()));
  const lightae::Calibration calib = lightae::calibrate(clean_scores);

  const risk::AnpWeights weights = risk::anp_weights(cfg.pairwise);
  const SensingTask task = SensingTask::default_task();
  const SensingDataset holdout =
      make_sensing_dataset(task, cfg.sensing_rows, derive_seed(cfg.seed, "edge-holdout"));
  const double clean_f1 =
      verify::utility_eval(holdout.features, holdout.rows, holdout.cols, holdout.labels,
                           derive_seed(cfg.seed, "edge-clean"))
          .f1;

  // Per-terminal channel traces with occasional anomalies.
  std::vector<tracegen::Trace> traces(cfg.terminals);
  for (int t = 0; t < cfg.terminals; ++t) {
    const std::uint64_t tseed = derive_seed(cfg.seed, "trace-" + std::to_string(t));
    const int n = std::max(cfg.rounds, 40);
    tracegen::Trace tr = tracegen::gen_baseline(profile, n, tseed);
    tr = tracegen::inject_physical(tr, profile, 0.05, derive_seed(tseed, 1));
    tr = tracegen::inject_network(tr, profile, 0.05, derive_seed(tseed, 2));
    tr = tracegen::inject_hardware(tr, profile, 0.05, derive_seed(tseed, 3));
    tr = tracegen::inject_adversarial(tr, profile, 0.05, derive_seed(tseed, 4));
    traces[t] = std::move(tr);
  }

  const auto wall0 = Clock::now();

  std::vector<TerminalOutput> outputs(cfg.terminals);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.terminals) * 2);
  std::vector<std::thread> threads;
  std::vector<std::unique_ptr<transport::Session>> edge_sessions(cfg.terminals);
  std::vector<std::unique_ptr<transport::Session>> term_sessions(cfg.terminals);

  std::unique_ptr<transport::SocketServer> server;
  if (cfg.transport == "socket") server = std::make_unique<transport::SocketServer>();

  for (int t = 0; t < cfg.terminals; ++t) {
    if (cfg.transport == "inproc") {
      auto [a, b] = transport::make_inproc_pair();
      term_sessions[t] = std::make_unique<transport::Session>(std::move(a));
      edge_sessions[t] = std::make_unique<transport::Session>(std::move(b));
    }
  }

  for (int t = 0; t < cfg.terminals; ++t) {
    threads.emplace_back([&, t] {
      try {
        if (cfg.transport == "socket") {
          auto channel = transport::connect_local(server->port(), kFrameTimeoutMs);
          term_sessions[t] = std::make_unique<transport::Session>(std::move(channel));
        }
        outputs[t] = terminal_actor(cfg, t, task, plan_net, lib.moments, calib,
                                    weights, agent.actor, traces[t], *term_sessions[t]);
      } catch (...) {
        failures[t] = std::current_exception();
      }
    });
  }

  if (cfg.transport == "socket") {
    for (int t = 0; t < cfg.terminals; ++t)
      edge_sessions[t] =
          std::make_unique<transport::Session>(server->accept_one(kFrameTimeoutMs));
  }

  for (int t = 0; t < cfg.terminals; ++t) {
    threads.emplace_back([&, t] {
      try {
        edge_handler(cfg, task, holdout, clean_f1, *edge_sessions[t]);
      } catch (...) {
        failures[cfg.terminals + t] = std::current_exception();
      }
    });
  }

  for (auto& th : threads) th.join();
  for (auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  const auto wall1 = Clock::now();

  RunResult result;
  result.summary.terminals = cfg.terminals;
  result.summary.rounds = cfg.rounds;
  result.summary.wall_seconds = std::chrono::duration<double>(wall1 - wall0).count();
  for (int t = 0; t < cfg.terminals; ++t) {
    auto& o = outputs[t];
    result.summary.frames_sent += o.frames_sent;
    result.summary.frames_sent += static_cast<long>(edge_sessions[t]->frames_sent());
    result.summary.frames_received += o.frames_received;
    result.summary.frames_received +=
        static_cast<long>(edge_sessions[t]->frames_received());
    result.summary.rtts_ms.insert(result.summary.rtts_ms.end(), o.rtts_ms.begin(),
                                  o.rtts_ms.end());
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
  }
  result.summary.frames_lost = result.summary.frames_sent - result.summary.frames_received;
  result.summary.throughput_rps =
      result.summary.wall_seconds > 0.0
          ? static_cast<double>(result.records.size()) / result.summary.wall_seconds
          : 0.0;
  std::sort(result.records.begin(), result.records.end(),
            [](const RoundRecord& a, const RoundRecord& b) {
              return a.terminal != b.terminal ? a.terminal < b.terminal
                                              : a.round < b.round;
            });
  return result;
}

void write_run_summary(const std::string& path, const RunSummary& summary) {
  json j;
  j["terminals"] = summary.terminals;
  j["rounds"] = summary.rounds;
  j["wall_seconds"] = summary.wall_seconds;
  j["throughput_rps"] = summary.throughput_rps;
  j["frames_sent"] = summary.frames_sent;
  j["frames_received"] = summary.frames_received;
  j["frames_lost"] = summary.frames_lost;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace alpine::harness
