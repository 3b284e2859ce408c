#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "alpine/decision.hpp"
#include "alpine/lightae.hpp"
#include "alpine/risk.hpp"
#include "alpine/verify.hpp"

namespace alpine::config {

// Minimal INI-style parser: [section] headers, key = value lines,
// '#' or ';' comments.
struct Ini {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
};

Ini parse_ini(const std::string& text);
Ini load_ini(const std::string& path);

struct EnergyParams {
  double base_watts = 0.5;
  double watts_per_mac = 2e-6;
  double watts_per_byte = 1e-3;
  double ceiling_watts = 2.0;
};

struct RunConfig {
  std::uint64_t seed = 42;
  int terminals = 1;
  int rounds = 50;
  int verify_cadence = 10;
  std::string transport = "inproc";  // inproc | socket
  std::string profile = "FD";
  int sensing_rows = 400;  // edge-side verification holdout size

  std::string library_path;
  std::string agent_path;
  std::string out_dir = ".";

  decision::RewardParams reward;
  decision::TransitionParams transition;
  decision::Td3Config td3;
  lightae::TeacherConfig teacher;
  std::vector<double> kd_fractions = {0.5, 0.25};
  lightae::Constraints constraints;
  verify::FeedbackState feedback;
  EnergyParams energy;

  risk::PairwiseMatrix pairwise;
  risk::GradeScheme grades;
  risk::SensitivityTable sensitivity;
  double mem_normal = 0.3, mem_max = 0.9;
  double cpu_normal = 0.2, cpu_max = 0.95;

  void validate() const;
};

// Compiled-in defaults (Table-5 values and the default risk setup).
RunConfig default_config();

// Defaults overridden by whatever the file provides.
RunConfig load_config(const std::string& path);
RunConfig config_from_ini(const Ini& ini);

}  // namespace alpine::config
