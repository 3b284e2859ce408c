#include "alpine/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace alpine::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& value) {
  std::vector<double> out;
  std::istringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(std::stod(part));
  }
  return out;
}

}  // namespace

bool Ini::has(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}

std::string Ini::get(const std::string& section, const std::string& key) const {
  return sections.at(section).at(key);
}

Ini parse_ini(const std::string& text) {
  Ini ini;
  std::istringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      ini.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    ini.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return ini;
}

Ini load_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ini(buf.str());
}

RunConfig default_config() {
  RunConfig cfg;
  // Worked-example pairwise judgments as the compiled-in default.
  cfg.pairwise.n = 4;
  cfg.pairwise.entries = {1.0,       1.0 / 3.0, 1.0 / 2.0, 3.0,
                          3.0,       1.0,       2.0,       5.0,
                          2.0,       1.0 / 2.0, 1.0,       3.0,
                          1.0 / 3.0, 1.0 / 5.0, 1.0 / 3.0, 1.0};
  cfg.grades = risk::default_grade_scheme();
  cfg.sensitivity = risk::default_sensitivity_table();
  return cfg;
}

void RunConfig::validate() const {
  if (terminals < 1) throw std::invalid_argument("run config: terminals must be >= 1");
  if (rounds < 1) throw std::invalid_argument("run config: rounds must be >= 1");
  if (verify_cadence < 1)
    throw std::invalid_argument("run config: verify cadence must be >= 1");
  if (transport != "inproc" && transport != "socket")
    throw std::invalid_argument("run config: transport must be inproc or socket");
  reward.validate();
  transition.validate();
  td3.validate();
  teacher.validate();
  constraints.validate();
  feedback.validate();
  grades.validate();
  sensitivity.validate();
  pairwise.validate();
}

RunConfig config_from_ini(const Ini& ini) {
  RunConfig cfg = default_config();

  auto dbl = [&](const std::string& sec, const std::string& key, double& dst) {
    if (ini.has(sec, key)) dst = std::stod(ini.get(sec, key));
  };
  auto integer = [&](const std::string& sec, const std::string& key, int& dst) {
    if (ini.has(sec, key)) dst = std::stoi(ini.get(sec, key));
  };
  auto str = [&](const std::string& sec, const std::string& key, std::string& dst) {
    if (ini.has(sec, key)) dst = ini.get(sec, key);
  };

  if (ini.has("run", "SEED")) cfg.seed = std::stoull(ini.get("run", "SEED"));
  integer("run", "TERMINALS", cfg.terminals);
  integer("run", "ROUNDS", cfg.rounds);
  integer("run", "VERIFY_CADENCE", cfg.verify_cadence);
  integer("run", "SENSING_ROWS", cfg.sensing_rows);
  str("run", "TRANSPORT", cfg.transport);
  str("run", "PROFILE", cfg.profile);
  str("run", "LIBRARY", cfg.library_path);
  str("run", "AGENT", cfg.agent_path);
  str("run", "OUT_DIR", cfg.out_dir);

  dbl("reward", "ALPHA", cfg.reward.alpha);
  dbl("reward", "BETA", cfg.reward.beta);
  dbl("reward", "LAMBDA_E", cfg.reward.lambda_e);
  dbl("reward", "PRIV_KAPPA", cfg.reward.kappa);
  dbl("reward", "PRIV_S0", cfg.reward.s0);
  dbl("reward", "PRIV_DELTA", cfg.reward.delta);
  dbl("reward", "UTIL_RHO", cfg.reward.rho);
  dbl("reward", "UTIL_SIGMA0", cfg.reward.g0);
  dbl("reward", "EPSILON_MIN", cfg.reward.eps_min);
  dbl("reward", "EPSILON_MAX", cfg.reward.eps_max);

  dbl("transition", "TRANS_ETA", cfg.transition.eta);
  dbl("transition", "TRANS_GAMMA", cfg.transition.gamma_step);
  dbl("transition", "TRANS_SIGMA_ZETA", cfg.transition.sigma_zeta);

  dbl("td3", "GAMMA", cfg.td3.discount);
  dbl("td3", "TAU", cfg.td3.tau);
  dbl("td3", "ACTOR_LR", cfg.td3.actor_lr);
  dbl("td3", "CRITIC_LR", cfg.td3.critic_lr);
  if (ini.has("td3", "BUFFER_SIZE"))
    cfg.td3.buffer_capacity =
        static_cast<std::size_t>(std::stod(ini.get("td3", "BUFFER_SIZE")));
  integer("td3", "BATCH_SIZE", cfg.td3.batch_size);
  integer("td3", "POLICY_FREQ", cfg.td3.policy_delay);
  dbl("td3", "POLICY_NOISE", cfg.td3.policy_noise_sd);
  dbl("td3", "NOISE_CLIP", cfg.td3.policy_noise_clip);
  dbl("td3", "EXPLORE_NOISE", cfg.td3.explore_noise_sd);
  integer("td3", "EPISODES", cfg.td3.episodes);
  integer("td3", "STEPS_PER_EPISODE", cfg.td3.steps_per_episode);
  integer("td3", "HIDDEN", cfg.td3.hidden_width);

  integer("lightae", "INPUT_DIM", cfg.teacher.input_dim);
  if (ini.has("lightae", "HIDDEN_SIZES")) {
    cfg.teacher.hidden_sizes.clear();
    for (double v : parse_list(ini.get("lightae", "HIDDEN_SIZES")))
      cfg.teacher.hidden_sizes.push_back(static_cast<int>(v));
  }
  integer("lightae", "LATENT_DIM", cfg.teacher.latent_dim);
  dbl("lightae", "AE_LR", cfg.teacher.ae_lr);
  dbl("lightae", "KD_LR", cfg.teacher.kd_lr);
  integer("lightae", "BATCH_SIZE", cfg.teacher.batch_size);
  integer("lightae", "EPOCHS", cfg.teacher.epochs);
  integer("lightae", "KD_EPOCHS", cfg.teacher.kd_epochs);
  if (ini.has("lightae", "FRACTIONS"))
    cfg.kd_fractions = parse_list(ini.get("lightae", "FRACTIONS"));
  dbl("lightae", "LATENCY_PCT", cfg.constraints.latency_reduction_pct);
  dbl("lightae", "RESOURCE_PCT", cfg.constraints.resource_reduction_pct);

  dbl("feedback", "THETA_P", cfg.feedback.theta_p);
  dbl("feedback", "THETA_U", cfg.feedback.theta_u);
  dbl("feedback", "STEP", cfg.feedback.step);
  dbl("feedback", "ALPHA_MIN", cfg.feedback.alpha_min);
  dbl("feedback", "ALPHA_MAX", cfg.feedback.alpha_max);
  dbl("feedback", "BETA_MIN", cfg.feedback.beta_min);
  dbl("feedback", "BETA_MAX", cfg.feedback.beta_max);

  if (ini.has("risk", "PAIRWISE")) {
    const auto values = parse_list(ini.get("risk", "PAIRWISE"));
    if (values.size() != 16)
      throw std::invalid_argument("config: PAIRWISE expects 16 comma-separated entries");
    cfg.pairwise.entries = values;
    cfg.pairwise.n = 4;
  }
  if (ini.has("risk", "GRADES")) {
    // l,m,u,rep groups separated by ';'
    cfg.grades.grades.clear();
    std::istringstream ss(ini.get("risk", "GRADES"));
    std::string group;
    int idx = 0;
    while (std::getline(ss, group, ';')) {
      const auto v = parse_list(group);
      if (v.size() != 4)
        throw std::invalid_argument("config: each GRADES group needs l,m,u,rep");
      cfg.grades.grades.push_back(
          {"grade" + std::to_string(++idx), v[0], v[1], v[2], v[3]});
    }
  }
  if (ini.has("risk", "SENSITIVITY")) {
    // kind:score pairs separated by ','
    cfg.sensitivity.scores.clear();
    std::istringstream ss(ini.get("risk", "SENSITIVITY"));
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("config: SENSITIVITY expects kind:score pairs");
      cfg.sensitivity.scores[trim(pair.substr(0, colon))] =
          std::stod(pair.substr(colon + 1));
    }
  }
  dbl("risk", "MEM_NORMAL", cfg.mem_normal);
  dbl("risk", "MEM_MAX", cfg.mem_max);
  dbl("risk", "CPU_NORMAL", cfg.cpu_normal);
  dbl("risk", "CPU_MAX", cfg.cpu_max);

  dbl("energy", "POWER_BASE", cfg.energy.base_watts);
  dbl("energy", "POWER_PER_MAC", cfg.energy.watts_per_mac);
  dbl("energy", "POWER_PER_BYTE", cfg.energy.watts_per_byte);
  dbl("energy", "POWER_CEILING", cfg.energy.ceiling_watts);

  // Keep the TD3 action bounds and the reward bounds in one place.
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return config_from_ini(load_ini(path));
}

}  // namespace alpine::config
