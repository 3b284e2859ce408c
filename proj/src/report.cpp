#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "alpine/harness.hpp"
#include "alpine/lightae.hpp"
#include "alpine/model_io.hpp"

namespace alpine::harness {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_training_curve(const std::string& path, const std::vector<CurveRow>& rows) {
  auto out = open_out(path);
  out << "step,critic1,critic2,actor,reward\n";
  for (const auto& r : rows)
    out << r.step << "," << fmt(r.critic1) << "," << fmt(r.critic2) << ","
        << fmt(r.actor) << "," << fmt(r.reward) << "\n";
}

void write_report(const std::vector<RoundRecord>& records, const RunSummary* summary,
                  const std::string& agent_path, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const char* name) { return out_dir + "/" + name; };

  {
    auto out = open_out(path("round_metrics.csv"));
    out << "round,terminal,r_cha,r_sen,r_con,r_res,r_risk,eps,privacy_gain,"
           "utility_loss,energy,reward,ledger_total,alpha,beta,pipeline_ms,rtt_ms\n";
    for (const auto& r : records)
      out << r.round << "," << r.terminal << "," << fmt(r.r_cha) << "," << fmt(r.r_sen)
          << "," << fmt(r.r_con) << "," << fmt(r.r_res) << "," << fmt(r.r_risk) << ","
          << fmt(r.eps) << "," << fmt(r.privacy_gain) << "," << fmt(r.utility_loss)
          << "," << fmt(r.energy) << "," << fmt(r.reward) << "," << fmt(r.ledger_total)
          << "," << fmt(r.alpha) << "," << fmt(r.beta) << "," << fmt(r.pipeline_ms)
          << "," << fmt(r.rtt_ms) << "\n";
  }

  {
    // One row per verification event: the attack/utility curves over eps.
    auto out = open_out(path("attack_utility.csv"));
    out << "round,terminal,eps,mia_auc,privacy_strength,recon_mae,utility_f1,"
           "utility_ratio,clean_f1\n";
    for (const auto& r : records) {
      if (r.verified_round != r.round) continue;
      out << r.round << "," << r.terminal << "," << fmt(r.eps) << "," << fmt(r.mia_auc)
          << "," << fmt(r.privacy_strength) << "," << fmt(r.recon_mae) << ","
          << fmt(r.utility_f1) << "," << fmt(r.utility_ratio) << "," << fmt(r.clean_f1)
          << "\n";
    }
  }

  {
    auto out = open_out(path("policy_grid.csv"));
    out << "s,eps\n";
    if (!agent_path.empty()) {
      const auto ckpt = model_io::load_agent(agent_path);
      for (int i = 0; i <= 100; ++i) {
        const double s = static_cast<double>(i) / 100.0;
        out << fmt(s) << "," << fmt(ckpt.actor.eval(s)) << "\n";
      }
    }
  }

  {
    auto out = open_out(path("rtt_summary.csv"));
    out << "messages,rtt_p50_ms,rtt_p99_ms,throughput_rps,wall_seconds,frames_lost\n";
    if (summary != nullptr && !summary->rtts_ms.empty()) {
      std::vector<double> rtts = summary->rtts_ms;
      const double p50 = lightae::quantile(rtts, 0.50);
      const double p99 = lightae::quantile(rtts, 0.99);
      out << rtts.size() << "," << fmt(p50) << "," << fmt(p99) << ","
          << fmt(summary->throughput_rps) << "," << fmt(summary->wall_seconds) << ","
          << summary->frames_lost << "\n";
    } else if (!records.empty()) {
      std::vector<double> rtts;
      rtts.reserve(records.size());
      for (const auto& r : records) rtts.push_back(r.rtt_ms);
      out << rtts.size() << "," << fmt(lightae::quantile(rtts, 0.50)) << ","
          << fmt(lightae::quantile(rtts, 0.99)) << ",,,\n";
    }
  }

  {
    auto out = open_out(path("summary.txt"));
    out << "rounds logged: " << records.size() << "\n";
    if (!records.empty()) {
      double eps_sum = 0.0, risk_sum = 0.0;
      int met = 0, considered = 0;
      for (const auto& r : records) {
        eps_sum += r.eps;
        risk_sum += r.r_risk;
        if (r.verified_round > 0) {
          ++considered;
          if (r.privacy_strength >= 0.0 && r.utility_ratio >= 0.0) ++met;
        }
      }
      out << "mean eps: " << eps_sum / records.size() << "\n";
      out << "mean r_risk: " << risk_sum / records.size() << "\n";
      out << "rounds with verification metrics: " << considered << " (" << met
          << " finite)\n";
      const auto& last = records.back();
      out << "final alpha: " << last.alpha << ", final beta: " << last.beta << "\n";
    }
    if (summary != nullptr) {
      out << "terminals: " << summary->terminals << ", rounds: " << summary->rounds
          << "\n";
      out << "wall seconds: " << summary->wall_seconds << "\n";
      out << "throughput (records/s): " << summary->throughput_rps << "\n";
      out << "frames sent/received/lost: " << summary->frames_sent << "/"
          << summary->frames_received << "/" << summary->frames_lost << "\n";
    }
  }
}

}  // namespace alpine::harness
