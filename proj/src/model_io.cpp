#include "alpine/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace alpine::model_io {

namespace {

constexpr char kLibraryMagic[4] = {'A', 'L', 'A', 'E'};
constexpr char kAgentMagic[4] = {'A', 'L', 'T', 'D'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    bytes(b, 4);
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u32(static_cast<std::uint32_t>(bits));
    u32(static_cast<std::uint32_t>(bits >> 32));
  }
  void close(const std::string& path) {
    out_.flush();
    if (!out_) throw std::runtime_error("write to '" + path + "' failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open '" + path + "'");
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw std::runtime_error("truncated checkpoint '" + path_ + "'");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    const std::uint64_t bits = lo | (hi << 32);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

 private:
  std::ifstream in_;
  std::string path_;
};

void write_mlp(Writer& w, const nn::Mlp& net) {
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    w.u32(static_cast<std::uint32_t>(layer.in));
    w.u32(static_cast<std::uint32_t>(layer.out));
    w.u8(static_cast<std::uint8_t>(layer.act));
    for (double v : layer.w) w.f32(static_cast<float>(v));
    for (double v : layer.b) w.f32(static_cast<float>(v));
  }
}

nn::Mlp read_mlp(Reader& r) {
  nn::Mlp net;
  const std::uint32_t layer_count = r.u32();
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const int in = static_cast<int>(r.u32());
    const int out = static_cast<int>(r.u32());
    const auto act = static_cast<nn::Act>(r.u8());
    nn::Dense layer(in, out, act);
    for (double& v : layer.w) v = r.f32();
    for (double& v : layer.b) v = r.f32();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void check_magic(Reader& r, const char expected[4], const std::string& path) {
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, expected, 4) != 0)
    throw std::runtime_error("'" + path + "' is not a valid checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw std::runtime_error("'" + path + "' has unsupported format version " +
                             std::to_string(version));
}

}  // namespace

void save_library(const lightae::BlockLibrary& lib, const std::string& path) {
  Writer w(path);
  w.bytes(kLibraryMagic, 4);
  w.u32(kFormatVersion);

  w.u32(static_cast<std::uint32_t>(lib.cfg.input_dim));
  w.u32(static_cast<std::uint32_t>(lib.cfg.hidden_sizes.size()));
  for (int h : lib.cfg.hidden_sizes) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(lib.cfg.latent_dim));
  w.f64(lib.cfg.ae_lr);
  w.f64(lib.cfg.kd_lr);
  w.u32(static_cast<std::uint32_t>(lib.cfg.batch_size));
  w.u32(static_cast<std::uint32_t>(lib.cfg.epochs));
  w.u32(static_cast<std::uint32_t>(lib.cfg.kd_epochs));

  w.u32(static_cast<std::uint32_t>(lib.moments.mean.size()));
  for (double v : lib.moments.mean) w.f64(v);
  for (double v : lib.moments.sd) w.f64(v);
  w.f64(lib.teacher_validation_mse);

  w.u32(static_cast<std::uint32_t>(lib.blocks.size()));
  for (const auto& variants : lib.blocks) {
    w.u32(static_cast<std::uint32_t>(variants.size()));
    for (const auto& v : variants) {
      w.u32(static_cast<std::uint32_t>(v.parent_index));
      w.u32(static_cast<std::uint32_t>(v.variant_index));
      w.f64(v.width_fraction);
      write_mlp(w, v.net);
      w.u8(v.profiled ? 1 : 0);
      w.f64(v.memory_bytes);
      w.f64(v.latency_us);
      w.f64(v.accuracy_loss_pts);
    }
  }

  w.u8(lib.calib.valid ? 1 : 0);
  w.f64(lib.calib.threshold);
  w.f64(lib.calib.q50);
  w.f64(lib.calib.q999);
  w.close(path);
}

lightae::BlockLibrary load_library(const std::string& path) {
  Reader r(path);
  check_magic(r, kLibraryMagic, path);

  lightae::BlockLibrary lib;
  lib.cfg.input_dim = static_cast<int>(r.u32());
  const std::uint32_t hidden_count = r.u32();
  lib.cfg.hidden_sizes.clear();
  for (std::uint32_t i = 0; i < hidden_count; ++i)
    lib.cfg.hidden_sizes.push_back(static_cast<int>(r.u32()));
  lib.cfg.latent_dim = static_cast<int>(r.u32());
  lib.cfg.ae_lr = r.f64();
  lib.cfg.kd_lr = r.f64();
  lib.cfg.batch_size = static_cast<int>(r.u32());
  lib.cfg.epochs = static_cast<int>(r.u32());
  lib.cfg.kd_epochs = static_cast<int>(r.u32());

  const std::uint32_t cols = r.u32();
  lib.moments.mean.resize(cols);
  lib.moments.sd.resize(cols);
  for (auto& v : lib.moments.mean) v = r.f64();
  for (auto& v : lib.moments.sd) v = r.f64();
  lib.teacher_validation_mse = r.f64();

  const std::uint32_t block_count = r.u32();
  lib.blocks.resize(block_count);
  for (auto& variants : lib.blocks) {
    const std::uint32_t variant_count = r.u32();
    variants.resize(variant_count);
    for (auto& v : variants) {
      v.parent_index = static_cast<int>(r.u32());
      v.variant_index = static_cast<int>(r.u32());
      v.width_fraction = r.f64();
      v.net = read_mlp(r);
      v.profiled = r.u8() != 0;
      v.memory_bytes = r.f64();
      v.latency_us = r.f64();
      v.accuracy_loss_pts = r.f64();
    }
  }

  lib.calib.valid = r.u8() != 0;
  lib.calib.threshold = r.f64();
  lib.calib.q50 = r.f64();
  lib.calib.q999 = r.f64();
  return lib;
}

void save_agent(const decision::Actor& actor, const decision::RewardParams& rp,
                const std::string& path) {
  Writer w(path);
  w.bytes(kAgentMagic, 4);
  w.u32(kFormatVersion);
  w.f64(actor.eps_min);
  w.f64(actor.eps_max);
  write_mlp(w, actor.net);
  w.f64(rp.alpha);
  w.f64(rp.beta);
  w.f64(rp.lambda_e);
  w.f64(rp.kappa);
  w.f64(rp.s0);
  w.f64(rp.delta);
  w.f64(rp.rho);
  w.f64(rp.g0);
  w.f64(rp.eps_min);
  w.f64(rp.eps_max);
  w.close(path);
}

AgentCheckpoint load_agent(const std::string& path) {
  Reader r(path);
  check_magic(r, kAgentMagic, path);
  AgentCheckpoint ckpt;
  ckpt.actor.eps_min = r.f64();
  ckpt.actor.eps_max = r.f64();
  ckpt.actor.net = read_mlp(r);
  ckpt.reward_params.alpha = r.f64();
  ckpt.reward_params.beta = r.f64();
  ckpt.reward_params.lambda_e = r.f64();
  ckpt.reward_params.kappa = r.f64();
  ckpt.reward_params.s0 = r.f64();
  ckpt.reward_params.delta = r.f64();
  ckpt.reward_params.rho = r.f64();
  ckpt.reward_params.g0 = r.f64();
  ckpt.reward_params.eps_min = r.f64();
  ckpt.reward_params.eps_max = r.f64();
  return ckpt;
}

}  // namespace alpine::model_io
