#include <doctest.h>

#include <cmath>

#include "alpine/lightae.hpp"
#include "alpine/rng.hpp"
#include "alpine/tracegen.hpp"

using namespace alpine;
using namespace alpine::lightae;

namespace {

TeacherConfig tiny_config() {
  TeacherConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_sizes = {40, 20};
  cfg.latent_dim = 20;
  cfg.batch_size = 64;
  cfg.epochs = 40;
  cfg.kd_epochs = 30;
  return cfg;
}

struct FdData {
  std::vector<double> train_std;
  int train_rows = 0;
  Standardizer moments;
  LabeledWindows calib;
};

FdData make_fd_data(int train_rows, int calib_rows, std::uint64_t seed) {
  const auto fd = tracegen::TraceProfile::fd();
  FdData data;
  const auto train = tracegen::gen_baseline(fd, train_rows, seed);
  std::vector<int> ignore;
  tracegen::to_matrix(train, data.train_std, ignore);
  data.train_rows = train_rows;
  data.moments = Standardizer::fit(data.train_std, 3);
  data.moments.apply(data.train_std);

  auto calib_trace = tracegen::gen_baseline(fd, calib_rows, derive_seed(seed, "calib"));
  calib_trace = tracegen::inject_physical(calib_trace, fd, 0.05, derive_seed(seed, 1));
  calib_trace = tracegen::inject_network(calib_trace, fd, 0.05, derive_seed(seed, 2));
  calib_trace = tracegen::inject_hardware(calib_trace, fd, 0.05, derive_seed(seed, 3));
  calib_trace = tracegen::inject_adversarial(calib_trace, fd, 0.05, derive_seed(seed, 4));
  tracegen::to_matrix(calib_trace, data.calib.features, data.calib.labels);
  data.calib.rows = calib_rows;
  data.calib.cols = 3;
  return data;
}

// Synthetic profiled library for the selection tests; nets stay empty.
BlockLibrary synthetic_library(Rng& rng, int blocks, int variants) {
  BlockLibrary lib;
  lib.cfg = tiny_config();
  lib.blocks.resize(blocks);
  for (int b = 0; b < blocks; ++b) {
    for (int v = 0; v < variants; ++v) {
      DescendantVariant dv;
      dv.parent_index = b;
      dv.variant_index = v;
      dv.profiled = true;
      if (v == 0) {
        dv.memory_bytes = rng.uniform(800.0, 1200.0);
        dv.latency_us = rng.uniform(80.0, 120.0);
        dv.accuracy_loss_pts = 0.0;
      } else {
        dv.memory_bytes = rng.uniform(100.0, 1100.0);
        dv.latency_us = rng.uniform(10.0, 110.0);
        dv.accuracy_loss_pts = rng.uniform(0.01, 5.0);
      }
      lib.blocks[b].push_back(std::move(dv));
    }
  }
  return lib;
}

struct BruteResult {
  bool feasible = false;
  double best_loss = 0.0;
};

BruteResult brute_force(const BlockLibrary& lib, const Constraints& c) {
  const int blocks = lib.block_count();
  double t_teacher = 0.0, m_teacher = 0.0;
  for (int b = 0; b < blocks; ++b) {
    t_teacher += lib.blocks[b][0].latency_us;
    m_teacher += lib.blocks[b][0].memory_bytes;
  }
  const double t_budget = (1.0 - c.latency_reduction_pct / 100.0) * t_teacher;
  const double m_budget = (1.0 - c.resource_reduction_pct / 100.0) * m_teacher;
  BruteResult result;
  std::vector<int> idx(blocks, 0);
  for (;;) {
    double t = 0.0, m = 0.0, u = 0.0;
    for (int b = 0; b < blocks; ++b) {
      const auto& v = lib.blocks[b][idx[b]];
      t += v.latency_us;
      m += v.memory_bytes;
      u += v.accuracy_loss_pts;
    }
    if (t <= t_budget && m <= m_budget && (!result.feasible || u < result.best_loss)) {
      result.feasible = true;
      result.best_loss = u;
    }
    int b = blocks - 1;
    while (b >= 0 && ++idx[b] == static_cast<int>(lib.blocks[b].size())) {
      idx[b] = 0;
      --b;
    }
    if (b < 0) break;
  }
  return result;
}

}  // namespace

TEST_CASE("standardizer maps constant features to zero") {
  std::vector<double> rows = {2.0, 5.0, 2.0, 7.0, 2.0, 9.0};
  const auto s = Standardizer::fit(rows, 2);
  auto out = s.applied(rows);
  CHECK(out[0] == 0.0);
  CHECK(out[2] == 0.0);
  CHECK(out[4] == 0.0);
}

TEST_CASE("teacher reaches near-zero error on a constant signal") {
  TeacherConfig cfg = tiny_config();
  cfg.epochs = 20;
  const int rows = 256;
  std::vector<double> raw(rows * 3);
  for (int r = 0; r < rows; ++r) {
    raw[r * 3] = -50.0;
    raw[r * 3 + 1] = 55.0;
    raw[r * 3 + 2] = 5.0;
  }
  const auto moments = Standardizer::fit(raw, 3);
  const auto std_rows = moments.applied(raw);
  const auto model = train_teacher(std_rows, rows, moments, cfg, 1);
  CHECK(model.validation_mse < 1e-4);
}

TEST_CASE("teacher training is bitwise reproducible") {
  TeacherConfig cfg = tiny_config();
  cfg.epochs = 3;
  const auto data = make_fd_data(300, 100, 5);
  const auto a = train_teacher(data.train_std, data.train_rows, data.moments, cfg, 9);
  const auto b = train_teacher(data.train_std, data.train_rows, data.moments, cfg, 9);
  CHECK(a.net.flatten() == b.net.flatten());
  CHECK(a.validation_mse == b.validation_mse);
}

TEST_CASE("train_teacher validates its inputs") {
  TeacherConfig cfg = tiny_config();
  const auto data = make_fd_data(128, 100, 6);
  CHECK_THROWS_AS(train_teacher(data.train_std, 10, data.moments, cfg, 1),
                  std::invalid_argument);
  TeacherConfig bad = cfg;
  bad.latent_dim = 7;
  CHECK_THROWS_AS(train_teacher(data.train_std, data.train_rows, data.moments, bad, 1),
                  std::invalid_argument);
}

TEST_CASE("bottleneck width scales parameters into the quarter-to-half band") {
  // Parameter-count arithmetic oracle for the half-width descendant.
  const int shapes[][2] = {{360, 180}, {180, 90}, {90, 45}, {45, 90}, {90, 180}, {180, 360}};
  for (const auto& shape : shapes) {
    const int in = shape[0], out = shape[1];
    const int h = bottleneck_width(0.5, in, out);
    const double teacher_params = static_cast<double>(in) * out + out;
    const double desc_params = static_cast<double>(in) * h + h +
                               static_cast<double>(h) * out + out;
    const double ratio = desc_params / teacher_params;
    CHECK(ratio >= 0.25);
    CHECK(ratio <= 0.50);
  }
  // Boundary blocks floor at a single internal unit.
  CHECK(bottleneck_width(0.5, 3, 360) == 1);
  const double boundary_ratio = (3.0 * 1 + 1 + 1 * 360 + 360) / (3.0 * 360 + 360);
  CHECK(boundary_ratio <= 0.55);
  CHECK(bottleneck_width(1e-6, 100, 100) == 1);
}

TEST_CASE("distillation produces copies, bottlenecks, and profiled losses") {
  TeacherConfig cfg = tiny_config();
  const auto data = make_fd_data(1200, 1500, 7);
  const auto teacher = train_teacher(data.train_std, data.train_rows, data.moments, cfg, 11);

  SUBCASE("empty fraction list leaves only teacher variants") {
    const auto lib = distill_descendants(teacher, {}, data.train_std, data.train_rows, 3);
    for (const auto& variants : lib.blocks) {
      REQUIRE(variants.size() == 1);
      CHECK(variants[0].width_fraction == 1.0);
    }
  }

  SUBCASE("fraction 1.0 is an identity copy with zero accuracy loss") {
    auto lib = distill_descendants(teacher, {1.0}, data.train_std, data.train_rows, 3);
    for (int b = 0; b < lib.block_count(); ++b) {
      REQUIRE(lib.blocks[b].size() == 2);
      CHECK(lib.blocks[b][1].net.flatten() == lib.blocks[b][0].net.flatten());
    }
    profile_blocks(lib, data.calib);
    for (int b = 0; b < lib.block_count(); ++b) {
      CHECK(lib.blocks[b][0].accuracy_loss_pts == 0.0);  // teacher baseline
      CHECK(lib.blocks[b][1].accuracy_loss_pts == 0.0);  // identical parameters
      CHECK(lib.blocks[b][1].memory_bytes == lib.blocks[b][0].memory_bytes);
    }
  }

  SUBCASE("accuracy loss grows as the width fraction shrinks") {
    auto lib = distill_descendants(teacher, {0.5, 0.25}, data.train_std,
                                   data.train_rows, 13);
    profile_blocks(lib, data.calib);
    int monotone = 0;
    for (int b = 0; b < lib.block_count(); ++b) {
      REQUIRE(lib.blocks[b].size() == 3);
      const double u_half = lib.blocks[b][1].accuracy_loss_pts;
      const double u_quarter = lib.blocks[b][2].accuracy_loss_pts;
      if (u_quarter >= u_half) ++monotone;
      // Memory must shrink with the fraction whenever the widths differ.
      CHECK(lib.blocks[b][1].memory_bytes <= lib.blocks[b][0].memory_bytes);
      CHECK(lib.blocks[b][2].memory_bytes <= lib.blocks[b][1].memory_bytes);
    }
    CHECK(monotone >= static_cast<int>(std::ceil(0.9 * lib.block_count())));
  }
}

TEST_CASE("profiled latencies are reproducible within twenty percent") {
  TeacherConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_sizes = {64, 64};
  cfg.latent_dim = 64;
  cfg.epochs = 2;
  cfg.batch_size = 64;
  const auto data = make_fd_data(128, 120, 15);
  const auto teacher = train_teacher(data.train_std, data.train_rows, data.moments, cfg, 1);
  auto lib = distill_descendants(teacher, {0.5}, data.train_std, data.train_rows, 1);
  auto lib2 = lib;
  profile_blocks(lib, data.calib);
  profile_blocks(lib2, data.calib);
  for (int b = 0; b < lib.block_count(); ++b)
    for (std::size_t v = 0; v < lib.blocks[b].size(); ++v) {
      const double t1 = lib.blocks[b][v].latency_us;
      const double t2 = lib2.blocks[b][v].latency_us;
      CHECK(t2 >= 0.8 * t1);
      CHECK(t2 <= 1.2 * t1);
    }
}

TEST_CASE("selection keeps the teacher when unconstrained") {
  Rng rng(21);
  const auto lib = synthetic_library(rng, 4, 3);
  const auto plan = select_blocks(lib, {0.0, 0.0});
  for (int b = 0; b < 4; ++b) CHECK(plan.chosen[b] == 0);
  CHECK(plan.total_accuracy_loss_pts == 0.0);
}

TEST_CASE("tightening the constraint ladder degrades monotonically") {
  Rng rng(22);
  const auto lib = synthetic_library(rng, 5, 4);
  const Constraints ladder[3] = {{0, 0}, {20, 20}, {50, 50}};
  double prev_m = 1e300, prev_u = -1.0;
  for (const auto& c : ladder) {
    const auto plan = select_blocks(lib, c);
    CHECK(plan.total_memory_bytes <= prev_m);
    CHECK(plan.total_accuracy_loss_pts >= prev_u);
    prev_m = plan.total_memory_bytes;
    prev_u = plan.total_accuracy_loss_pts;
  }
}

TEST_CASE("selection equals brute force on random instances") {
  Rng rng(23);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int blocks = 1 + static_cast<int>(rng.uniform_int(5));
    const int variants = 1 + static_cast<int>(rng.uniform_int(4));
    const auto lib = synthetic_library(rng, blocks, variants);
    Constraints c{rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0)};
    const auto brute = brute_force(lib, c);
    try {
      const auto plan = select_blocks(lib, c);
      REQUIRE(brute.feasible);
      CHECK(plan.total_accuracy_loss_pts == doctest::Approx(brute.best_loss).epsilon(1e-12));
      // The returned plan satisfies both budget inequalities.
      double t_teacher = 0.0, m_teacher = 0.0;
      for (int b = 0; b < blocks; ++b) {
        t_teacher += lib.blocks[b][0].latency_us;
        m_teacher += lib.blocks[b][0].memory_bytes;
      }
      CHECK(plan.total_latency_us <= (1.0 - c.latency_reduction_pct / 100.0) * t_teacher);
      CHECK(plan.total_memory_bytes <= (1.0 - c.resource_reduction_pct / 100.0) * m_teacher);
      ++solved;
    } catch (const InfeasibleError&) {
      CHECK(!brute.feasible);
    }
  }
  CHECK(solved > 10);
}

TEST_CASE("infeasible constraints name the binding budget") {
  BlockLibrary lib;
  lib.cfg = tiny_config();
  lib.blocks.resize(2);
  for (int b = 0; b < 2; ++b) {
    DescendantVariant teacher;
    teacher.profiled = true;
    teacher.memory_bytes = 1000.0;
    teacher.latency_us = 100.0;
    lib.blocks[b].push_back(teacher);
  }
  // Single-variant library: any reduction is unreachable.
  try {
    select_blocks(lib, {0.0, 30.0});
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("memory") != std::string::npos);
  }
  try {
    select_blocks(lib, {30.0, 0.0});
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("latency") != std::string::npos);
  }
  CHECK_THROWS_AS(select_blocks(lib, {100.0, 0.0}), std::invalid_argument);
}

TEST_CASE("selection refuses unprofiled libraries") {
  TeacherConfig cfg = tiny_config();
  cfg.epochs = 2;
  const auto data = make_fd_data(128, 100, 25);
  const auto teacher = train_teacher(data.train_std, data.train_rows, data.moments, cfg, 2);
  const auto lib = distill_descendants(teacher, {0.5}, data.train_std, data.train_rows, 2);
  CHECK_THROWS_AS(select_blocks(lib, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("anomaly score is pure and validates width") {
  TeacherConfig cfg = tiny_config();
  cfg.epochs = 2;
  const auto data = make_fd_data(128, 100, 27);
  const auto teacher = train_teacher(data.train_std, data.train_rows, data.moments, cfg, 3);
  const std::vector<double> window = {0.1, -0.4, 1.2};
  CHECK(anomaly_score(teacher.net, window) == anomaly_score(teacher.net, window));
  CHECK_THROWS_AS(anomaly_score(teacher.net, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("composed plans reproduce per-variant scoring") {
  TeacherConfig cfg = tiny_config();
  cfg.epochs = 5;
  const auto data = make_fd_data(256, 200, 29);
  const auto teacher = train_teacher(data.train_std, data.train_rows, data.moments, cfg, 4);
  auto lib = distill_descendants(teacher, {0.5}, data.train_std, data.train_rows, 4);
  profile_blocks(lib, data.calib);
  const auto plan = select_blocks(lib, {0.0, 0.0});
  const auto net = compose_plan(lib, plan);
  // The unconstrained plan is the teacher itself.
  const std::vector<double> window = {0.3, 0.3, 0.3};
  CHECK(anomaly_score(net, window) == anomaly_score(teacher.net, window));

  SelectionPlan bad;
  bad.chosen = {0};
  CHECK_THROWS_AS(compose_plan(lib, bad), std::invalid_argument);
}

TEST_CASE("calibration maps clean quantiles to risk") {
  std::vector<double> scores(1000);
  for (int i = 0; i < 1000; ++i) scores[i] = static_cast<double>(i);
  const auto calib = calibrate(scores);
  CHECK(calib.threshold == doctest::Approx(quantile(scores, 0.99)));
  CHECK(risk_from_score(calib, calib.q50) == 0.0);
  CHECK(risk_from_score(calib, calib.q50 - 10.0) == 0.0);
  CHECK(risk_from_score(calib, calib.q999) == 1.0);
  CHECK(risk_from_score(calib, calib.q999 + 10.0) == 1.0);
  CHECK(risk_from_score(calib, 0.5 * (calib.q50 + calib.q999)) ==
        doctest::Approx(0.5).epsilon(1e-9));
  CHECK_THROWS_AS(calibrate(std::vector<double>(50, 1.0)), std::invalid_argument);
}

TEST_CASE("detection f1 on a small crafted confusion") {
  const std::vector<double> scores = {0.1, 0.9, 0.8, 0.2, 0.7};
  const std::vector<int> labels = {0, 1, 1, 0, 0};
  // threshold 0.5: tp=2 fp=1 fn=0 -> precision 2/3, recall 1.
  CHECK(detection_f1(scores, labels, 0.5) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(detection_f1({0.1}, {1}, 0.5) == 0.0);
}
