// Command-line front end: dataset generation, offline training, selection,
// the closed-loop run, attacks, and report generation.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "alpine/blp.hpp"
#include "alpine/config.hpp"
#include "alpine/decision.hpp"
#include "alpine/harness.hpp"
#include "alpine/lightae.hpp"
#include "alpine/model_io.hpp"
#include "alpine/tracegen.hpp"
#include "alpine/verify.hpp"

namespace fs = std::filesystem;
using namespace alpine;

namespace {

config::RunConfig load_cfg(const std::string& path) {
  return path.empty() ? config::default_config() : config::load_config(path);
}

lightae::LabeledWindows windows_from_csv(const std::string& path) {
  const auto trace = tracegen::read_csv(path);
  lightae::LabeledWindows w;
  tracegen::to_matrix(trace, w.features, w.labels);
  w.rows = static_cast<int>(trace.size());
  w.cols = 3;
  return w;
}

// The teacher lives in the library as variant 0 of every block.
lightae::TeacherModel teacher_from_library(const lightae::BlockLibrary& lib) {
  lightae::TeacherModel teacher;
  teacher.cfg = lib.cfg;
  teacher.moments = lib.moments;
  teacher.validation_mse = lib.teacher_validation_mse;
  for (const auto& variants : lib.blocks)
    for (const auto& layer : variants.at(0).net.layers)
      teacher.net.layers.push_back(layer);
  return teacher;
}

lightae::BlockLibrary teacher_only_library(const lightae::TeacherModel& teacher) {
  lightae::BlockLibrary lib;
  lib.cfg = teacher.cfg;
  lib.moments = teacher.moments;
  lib.teacher_validation_mse = teacher.validation_mse;
  lib.blocks.resize(teacher.net.layers.size());
  for (std::size_t bi = 0; bi < teacher.net.layers.size(); ++bi) {
    lightae::DescendantVariant tv;
    tv.parent_index = static_cast<int>(bi);
    tv.variant_index = 0;
    tv.width_fraction = 1.0;
    tv.net.layers.push_back(teacher.net.layers[bi]);
    lib.blocks[bi].push_back(std::move(tv));
  }
  return lib;
}

struct NoisedSensing {
  harness::SensingDataset clean;
  std::vector<double> noisy;
};

NoisedSensing noised_sensing(int rows, double eps, std::uint64_t seed) {
  NoisedSensing out;
  const auto task = harness::SensingTask::default_task();
  out.clean = harness::make_sensing_dataset(task, rows, seed);
  out.noisy = out.clean.features;
  const double eps_field = eps / out.clean.cols;
  Rng rng(derive_seed(seed, "attack-noise"));
  for (int r = 0; r < out.clean.rows; ++r)
    for (int c = 0; c < out.clean.cols; ++c) {
      auto& v = out.noisy[static_cast<std::size_t>(r) * out.clean.cols + c];
      v = blp::sample(v, task.base_fields[c].domain, {eps_field}, rng);
    }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ALPINE closed-loop adaptive privacy framework"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path, library_path, agent_path, log_path;
  std::string profile_name = "FD", kind = "mia", fractions_arg, summary_path;
  std::uint64_t seed = 42;
  double eps = 1.0, latency_pct = 0.0, resource_pct = 0.0;
  int rows = 400;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic channel dataset");
  gen->add_option("--profile", profile_name, "FD or SD");
  gen->add_option("--seed", seed);
  gen->add_option("--config", config_path);
  gen->add_option("--out", out_path, "output directory")->required();

  auto* train_ae = app.add_subcommand("train-ae", "Train the teacher autoencoder");
  train_ae->add_option("--data", data_path, "clean training CSV")->required();
  train_ae->add_option("--seed", seed);
  train_ae->add_option("--config", config_path);
  train_ae->add_option("--out", out_path, "library checkpoint")->required();

  auto* distill = app.add_subcommand("distill", "Distill compressed block descendants");
  distill->add_option("--library", library_path)->required();
  distill->add_option("--data", data_path, "clean training CSV")->required();
  distill->add_option("--fractions", fractions_arg, "comma-separated width fractions");
  distill->add_option("--seed", seed);
  distill->add_option("--config", config_path);
  distill->add_option("--out", out_path, "library checkpoint")->required();

  auto* profile_cmd = app.add_subcommand("profile", "Profile library variants (M, T, U)");
  profile_cmd->add_option("--library", library_path)->required();
  profile_cmd->add_option("--data", data_path, "labeled calibration CSV")->required();
  profile_cmd->add_option("--seed", seed);
  profile_cmd->add_option("--config", config_path);
  profile_cmd->add_option("--out", out_path, "library checkpoint")->required();

  auto* select = app.add_subcommand("select", "Select the optimal block combination");
  select->add_option("--library", library_path)->required();
  select->add_option("--latency", latency_pct, "latency reduction %");
  select->add_option("--resource", resource_pct, "resource reduction %");
  select->add_option("--seed", seed);
  select->add_option("--config", config_path);
  select->add_option("--out", out_path, "plan JSON (optional)");

  auto* train_agent = app.add_subcommand("train-agent", "Train the TD3 budget policy");
  train_agent->add_option("--seed", seed);
  train_agent->add_option("--config", config_path);
  train_agent->add_option("--out", out_path, "agent checkpoint")->required();
  std::string curve_path;
  train_agent->add_option("--curve", curve_path, "training-curve CSV");

  auto* run = app.add_subcommand("run", "Run the closed loop");
  run->add_option("--config", config_path);
  run->add_option("--seed", seed);
  run->add_option("--library", library_path, "override library checkpoint");
  run->add_option("--agent", agent_path, "override agent checkpoint");
  run->add_option("--out", out_path, "output directory");

  auto* attack = app.add_subcommand("attack", "Run one attack on the sensing task");
  attack->add_option("--kind", kind, "mia | pia | recon")->required();
  attack->add_option("--eps", eps, "privacy budget");
  attack->add_option("--rows", rows);
  attack->add_option("--seed", seed);
  attack->add_option("--config", config_path);
  attack->add_option("--out", out_path, "report JSON (optional)");

  auto* report = app.add_subcommand("report", "Generate summary CSVs from a run log");
  report->add_option("--log", log_path, "round log (JSON lines)")->required();
  report->add_option("--agent", agent_path, "agent checkpoint for the policy grid");
  report->add_option("--summary", summary_path, "run summary JSON");
  report->add_option("--seed", seed);
  report->add_option("--config", config_path);
  report->add_option("--out", out_path, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto profile = tracegen::TraceProfile::by_name(profile_name);
      const auto ds = tracegen::build_dataset(profile, seed);
      fs::create_directories(out_path);
      tracegen::write_csv(out_path + "/train.csv", ds.train, profile);
      tracegen::write_csv(out_path + "/test.csv", ds.test, profile);
      std::cout << "wrote " << ds.train.size() << " train rows and " << ds.test.size()
                << " test rows to " << out_path << "\n";
    } else if (*train_ae) {
      auto cfg = load_cfg(config_path);
      const auto w = windows_from_csv(data_path);
      const auto moments = lightae::Standardizer::fit(w.features, w.cols);
      const auto std_rows = moments.applied(w.features);
      const auto teacher =
          lightae::train_teacher(std_rows, w.rows, moments, cfg.teacher, seed);
      auto lib = teacher_only_library(teacher);
      // Calibrate on the validation tail of the training windows.
      const int val_rows = std::max(1, w.rows / 10);
      std::vector<double> val(std_rows.end() - static_cast<std::size_t>(val_rows) * w.cols,
                              std_rows.end());
      lib.calib = lightae::calibrate(lightae::anomaly_scores(teacher.net, val, val_rows));
      model_io::save_library(lib, out_path);
      std::cout << "teacher validation mse " << teacher.validation_mse << ", saved to "
                << out_path << "\n";
    } else if (*distill) {
      auto cfg = load_cfg(config_path);
      auto lib = model_io::load_library(library_path);
      const auto teacher = teacher_from_library(lib);
      const auto w = windows_from_csv(data_path);
      const auto std_rows = lib.moments.applied(w.features);
      std::vector<double> fractions = cfg.kd_fractions;
      if (!fractions_arg.empty()) {
        fractions.clear();
        std::istringstream ss(fractions_arg);
        std::string part;
        while (std::getline(ss, part, ',')) fractions.push_back(std::stod(part));
      }
      auto distilled =
          lightae::distill_descendants(teacher, fractions, std_rows, w.rows, seed);
      distilled.calib = lib.calib;
      model_io::save_library(distilled, out_path);
      std::cout << "distilled " << fractions.size() << " descendants per block, saved to "
                << out_path << "\n";
    } else if (*profile_cmd) {
      auto lib = model_io::load_library(library_path);
      const auto calib = windows_from_csv(data_path);
      lightae::profile_blocks(lib, calib);
      model_io::save_library(lib, out_path);
      std::cout << "profiled " << lib.block_count() << " blocks, saved to " << out_path
                << "\n";
    } else if (*select) {
      const auto lib = model_io::load_library(library_path);
      const lightae::Constraints constraints{latency_pct, resource_pct};
      const auto plan = lightae::select_blocks(lib, constraints);
      nlohmann::ordered_json j;
      j["chosen"] = plan.chosen;
      j["total_memory_bytes"] = plan.total_memory_bytes;
      j["total_latency_us"] = plan.total_latency_us;
      j["total_accuracy_loss_pts"] = plan.total_accuracy_loss_pts;
      std::cout << j.dump(2) << "\n";
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
      }
    } else if (*train_agent) {
      auto cfg = load_cfg(config_path);
      decision::BudgetEnv env{cfg.reward, cfg.transition, 0.0};
      const auto agent = decision::td3_train(env, cfg.td3, seed);
      model_io::save_agent(agent.actor, agent.reward_params, out_path);
      if (!curve_path.empty()) {
        std::vector<harness::CurveRow> rows_out;
        rows_out.reserve(agent.curve.size());
        for (const auto& p : agent.curve)
          rows_out.push_back({p.step, p.critic1_loss, p.critic2_loss, p.actor_loss,
                              p.batch_reward});
        harness::write_training_curve(curve_path, rows_out);
      }
      std::cout << "trained agent over " << agent.curve.size() << " update steps, saved to "
                << out_path << "\n";
    } else if (*run) {
      auto cfg = load_cfg(config_path);
      if (run->count("--seed")) cfg.seed = seed;
      if (!library_path.empty()) cfg.library_path = library_path;
      if (!agent_path.empty()) cfg.agent_path = agent_path;
      if (!out_path.empty()) cfg.out_dir = out_path;
      fs::create_directories(cfg.out_dir);
      const auto result = harness::run_loop(cfg);
      harness::write_round_log(cfg.out_dir + "/runlog.jsonl", result.records);
      harness::write_run_summary(cfg.out_dir + "/run_summary.json", result.summary);
      harness::write_report(result.records, &result.summary, cfg.agent_path, cfg.out_dir);
      std::cout << result.records.size() << " rounds logged to " << cfg.out_dir
                << "/runlog.jsonl (" << result.summary.throughput_rps << " records/s)\n";
    } else if (*attack) {
      const auto ns = noised_sensing(rows, eps, seed);
      nlohmann::ordered_json j;
      j["kind"] = kind;
      j["eps"] = eps;
      j["dataset"] = "sensing-" + std::to_string(seed);
      if (kind == "mia") {
        const int members = ns.clean.rows / 2;
        std::vector<double> mx(ns.noisy.begin(),
                               ns.noisy.begin() + static_cast<std::size_t>(members) * ns.clean.cols);
        std::vector<int> my(ns.clean.labels.begin(), ns.clean.labels.begin() + members);
        const auto model = verify::fit_logistic(mx, members, ns.clean.cols, my);
        std::vector<double> cm, cn;
        for (int r = 0; r < ns.clean.rows; ++r) {
          std::vector<double> row(ns.noisy.begin() + static_cast<std::size_t>(r) * ns.clean.cols,
                                  ns.noisy.begin() + static_cast<std::size_t>(r + 1) * ns.clean.cols);
          const double p = model.predict_proba(row);
          (r < members ? cm : cn).push_back(ns.clean.labels[r] == 1 ? p : 1.0 - p);
        }
        const double auc = verify::mia_attack(cm, cn);
        j["auc"] = auc;
        j["privacy_strength"] = verify::privacy_strength(auc);
      } else if (kind == "pia") {
        // Hidden property: clean temperature above its domain midpoint.
        const auto task = harness::SensingTask::default_task();
        const double mid = 0.5 * (task.base_fields[0].domain.l + task.base_fields[0].domain.u);
        std::vector<int> property(ns.clean.rows);
        for (int r = 0; r < ns.clean.rows; ++r)
          property[r] =
              ns.clean.features[static_cast<std::size_t>(r) * ns.clean.cols] > mid ? 1 : 0;
        const auto model = verify::fit_logistic(ns.noisy, ns.clean.rows, ns.clean.cols,
                                                ns.clean.labels);
        std::vector<double> probs(ns.clean.rows);
        std::vector<double> public_features(static_cast<std::size_t>(ns.clean.rows) * 2);
        for (int r = 0; r < ns.clean.rows; ++r) {
          std::vector<double> row(ns.noisy.begin() + static_cast<std::size_t>(r) * ns.clean.cols,
                                  ns.noisy.begin() + static_cast<std::size_t>(r + 1) * ns.clean.cols);
          probs[r] = model.predict_proba(row);
          public_features[static_cast<std::size_t>(r) * 2] = row[1];
          public_features[static_cast<std::size_t>(r) * 2 + 1] = row[2];
        }
        const auto [acc, prior] =
            verify::pia_attack(probs, public_features, ns.clean.rows, 2, property, seed);
        j["attack_accuracy"] = acc;
        j["prior_accuracy"] = prior;
        j["delta_vs_prior"] = acc - prior;
      } else if (kind == "recon") {
        std::vector<double> clean_series(ns.clean.rows), noisy_series(ns.clean.rows);
        for (int r = 0; r < ns.clean.rows; ++r) {
          clean_series[r] = ns.clean.features[static_cast<std::size_t>(r) * ns.clean.cols];
          noisy_series[r] = ns.noisy[static_cast<std::size_t>(r) * ns.clean.cols];
        }
        j["mae_moving_average"] = verify::reconstruction_attack(
            noisy_series, clean_series, verify::Denoiser::MovingAverage, 5);
        j["mae_savitzky_golay"] = verify::reconstruction_attack(
            noisy_series, clean_series, verify::Denoiser::SavitzkyGolay, 7, 2);
        j["mae_wiener"] = verify::reconstruction_attack(noisy_series, clean_series,
                                                        verify::Denoiser::Wiener, 5);
      } else {
        std::cerr << "unknown attack kind '" << kind << "'\n";
        return 2;
      }
      std::cout << j.dump(2) << "\n";
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
      }
    } else if (*report) {
      std::vector<harness::RoundRecord> records;
      if (fs::exists(log_path)) records = harness::read_round_log(log_path);
      harness::write_report(records, nullptr, agent_path, out_path);
      std::cout << "report for " << records.size() << " records written to " << out_path
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
