#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "morphic/expert/collect.hpp"
#include "morphic/expert/storage.hpp"
#include "morphic/nn/losses.hpp"
#include "morphic/policy/policy.hpp"
#include "morphic/policy/train.hpp"
#include "morphic/sense/render.hpp"
#include "morphic/util/rng.hpp"
#include "morphic/world/world.hpp"

using namespace morphic;
namespace fs = std::filesystem;

namespace {

const arm::ArmModel& model() {
  static const arm::ArmModel m = arm::default_arm();
  return m;
}

// Small stack for gradient-oracle work: 1-channel 8x8 images.
policy::PolicyConfig tiny_config() {
  policy::PolicyConfig c;
  c.image_height = 8;
  c.image_width = 8;
  c.image_channels = 1;
  c.conv1_ch = 2;
  c.conv1_k = 3;
  c.conv1_s = 2;
  c.conv2_ch = 2;
  c.conv2_k = 2;
  c.conv2_s = 1;
  c.hidden = 6;
  c.latent = 4;
  c.morph_hidden = 5;
  c.morph_latent = 3;
  return c;
}

// Matches the 16x16 two-channel collection camera used by the buffer
// fixtures below.
policy::PolicyConfig small_config() {
  policy::PolicyConfig c;
  c.image_height = 16;
  c.image_width = 16;
  c.image_channels = 2;
  c.conv1_ch = 4;
  c.conv2_ch = 8;
  c.hidden = 32;
  c.latent = 8;
  c.morph_hidden = 8;
  c.morph_latent = 4;
  return c;
}

policy::TrainSample random_sample(const policy::PolicyConfig& cfg,
                                  util::Rng& rng) {
  policy::TrainSample s;
  s.image = nn::Tensor({cfg.image_channels, cfg.image_height, cfg.image_width});
  for (double& v : s.image.data) v = rng.uniform();
  s.priv = nn::Tensor({world::PrivilegedState::kDim});
  for (double& v : s.priv.data) v = rng.uniform(-1.0, 1.0);
  s.morph = nn::Tensor({arm::kNumJoints});
  for (double& v : s.morph.data) v = rng.uniform(-0.2, 0.2);
  s.goal = nn::Tensor({policy::kGoalDim});
  for (double& v : s.goal.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : s.action) v = rng.uniform(-0.02, 0.02);
  double qn = 0.0;
  for (int k = 3; k < 7; ++k) qn += s.action[static_cast<std::size_t>(k)] *
                                    s.action[static_cast<std::size_t>(k)];
  qn = std::sqrt(qn);
  for (int k = 3; k < 7; ++k) s.action[static_cast<std::size_t>(k)] /= qn;
  return s;
}

std::vector<double> params_of(const policy::MagicPolicy& p) {
  std::vector<double> out(p.param_count());
  p.gather_params(out);
  return out;
}

std::vector<double> grads_of(const policy::MagicPolicy& p) {
  std::vector<double> out(p.param_count());
  p.gather_grads(out);
  return out;
}

// Loss value at the current parameters; lr = 0 keeps them fixed.
double loss_value(policy::MagicPolicy& p, const policy::TrainConfig& cfg,
                  const std::vector<policy::TrainSample>& batch) {
  policy::TrainConfig frozen = cfg;
  frozen.adam.lr = 0.0;
  nn::Adam opt(p.param_count(), frozen.adam);
  return policy::train_step(p, opt, frozen, batch).total;
}

std::string fresh_dir(const std::string& name) {
  const fs::path root = fs::temp_directory_path() / "morphic-policy-tests";
  fs::create_directories(root);
  const fs::path p = root / name;
  fs::remove_all(p);
  return p.string();
}

sense::CameraModel collect_camera() {
  sense::CameraModel c = sense::default_camera(model());
  c.height = 16;
  c.width = 16;
  return c;
}

// Shared cross-morphology reach buffer (sampled goals and designs).
const std::string& sampled_buffer() {
  static const std::string dir = [] {
    const std::string d = fresh_dir("sampled-buffer");
    expert::CollectConfig cc;
    cc.n_target = 4;
    cc.mix = expert::TaskMix::Reach;
    cc.seed = 77;
    cc.camera = collect_camera();
    auto r = expert::collect(cc, model(), d);
    REQUIRE(r.ok());
    return d;
  }();
  return dir;
}

bool same_action(const world::Action& a, const world::Action& b) {
  return a.dxyz == b.dxyz && a.drot.coeffs() == b.drot.coeffs() &&
         a.dfinger == b.dfinger;
}

}  // namespace

TEST_CASE("policy initialization is seeded and lives on the float32 lattice") {
  const auto cfg = tiny_config();
  policy::MagicPolicy a = policy::make_policy(cfg, 42);
  policy::MagicPolicy b = policy::make_policy(cfg, 42);
  policy::MagicPolicy c = policy::make_policy(cfg, 43);
  CHECK(params_of(a) == params_of(b));
  CHECK(params_of(a) != params_of(c));
  for (double v : params_of(a)) {
    CHECK(v == static_cast<double>(static_cast<float>(v)));
  }
}

TEST_CASE("actions are deterministic, unit-quaternion, and morphology-aware") {
  const auto cfg = tiny_config();
  policy::MagicPolicy p = policy::make_policy(cfg, 7);
  util::Rng rng(1);

  policy::OnboardObs obs;
  obs.image = sense::Image(cfg.image_height, cfg.image_width,
                           cfg.image_channels);
  for (double& v : obs.image.data) v = rng.uniform();
  for (int i = 0; i < policy::kGoalDim; ++i) obs.goal[i] = rng.uniform(-1, 1);

  arm::MorphologyParams m = arm::baseline_design();
  const world::Action a1 = policy::act_onboard(p, obs, m);
  const world::Action a2 = policy::act_onboard(p, obs, m);
  CHECK(same_action(a1, a2));
  CHECK(std::abs(a1.drot.norm() - 1.0) <= 1e-9);

  arm::MorphologyParams m2 = m;
  m2.deltas[2] += 0.15;
  const world::Action a3 = policy::act_onboard(p, obs, m2);
  CHECK(!same_action(a1, a3));

  world::PrivilegedState s{};
  s.joints.setZero();
  s.ee_current.setRandom();
  s.ee_goal.setRandom();
  s.object.setRandom();
  s.contact.setZero();
  s.doors.setZero();
  const world::Action pa1 = policy::act_privileged(p, s, m);
  const world::Action pa2 = policy::act_privileged(p, s, m);
  CHECK(same_action(pa1, pa2));
  CHECK(std::abs(pa1.drot.norm() - 1.0) <= 1e-9);

  // Wrong image size must throw, not silently mis-read.
  policy::OnboardObs bad = obs;
  bad.image = sense::Image(cfg.image_height + 1, cfg.image_width,
                           cfg.image_channels);
  CHECK_THROWS_AS(policy::act_onboard(p, bad, m), std::invalid_argument);
}

TEST_CASE("identical latents give bitwise-identical actions through the head") {
  const auto cfg = tiny_config();
  policy::MagicPolicy p = policy::make_policy(cfg, 9);
  util::Rng rng(2);
  nn::Tensor z({cfg.latent});
  for (double& v : z.data) v = rng.uniform(-1, 1);
  double n = 0.0;
  for (double v : z.data) n += v * v;
  for (double& v : z.data) v /= std::sqrt(n);
  nn::Tensor z_m({cfg.morph_latent});
  for (double& v : z_m.data) v = rng.uniform(-1, 1);

  const world::Action a = policy::head_action(p, z, z_m);
  const world::Action b = policy::head_action(p, z, z_m);
  CHECK(same_action(a, b));
}

TEST_CASE("goal fields carry the realized reach goal and vanish elsewhere") {
  auto st = world::reset(world::Task::reach(), 5, model(),
                         arm::baseline_design());
  REQUIRE(st.ok());
  const auto g = policy::goal_fields(*st, world::Task::reach());
  CHECK(g.head<3>() == st->goal.p);
  CHECK(g[3] == st->goal.q.w());
  CHECK(g[6] == st->goal.q.z());

  auto pick = world::reset(world::Task::pick(), 5, model(),
                           arm::baseline_design());
  REQUIRE(pick.ok());
  CHECK(policy::goal_fields(*pick, world::Task::pick()).isZero());
}

TEST_CASE("policy checkpoints round-trip bitwise") {
  const auto cfg = tiny_config();
  policy::MagicPolicy p = policy::make_policy(cfg, 11);
  const std::string path = fresh_dir("ck") + ".bin";

  SUBCASE("parameters only") {
    policy::save_policy(path, p, 123);
    auto ck = policy::load_policy(path);
    REQUIRE(ck.ok());
    CHECK(ck->step == 123);
    CHECK(ck->policy.cfg == cfg);
    CHECK(ck->adam_m.empty());
    CHECK(params_of(ck->policy) == params_of(p));
  }

  SUBCASE("with optimizer state") {
    std::vector<float> m(p.param_count(), 0.25f), v(p.param_count(), 0.5f);
    policy::save_policy(path, p, 7, m, v);
    auto ck = policy::load_policy(path);
    REQUIRE(ck.ok());
    CHECK(ck->adam_m == m);
    CHECK(ck->adam_v == v);
  }

  SUBCASE("foreign files are rejected") {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "MORPHCK1";  // magic without a valid body
    f.close();
    CHECK(!policy::load_policy(path).ok());
  }
}

TEST_CASE("composite training loss matches finite differences end to end") {
  const auto cfg = tiny_config();
  policy::MagicPolicy p = policy::make_policy(cfg, 31);
  util::Rng rng(32);
  std::vector<policy::TrainSample> batch;
  batch.push_back(random_sample(cfg, rng));
  batch.push_back(random_sample(cfg, rng));

  policy::TrainConfig tc;
  tc.batch = 2;
  tc.w_bc_onboard = 1.0;
  tc.w_align = 1.0;
  tc.w_bc_priv = 1.0;
  tc.stop_grad = policy::StopGrad::None;
  tc.adam.lr = 0.0;

  const std::vector<double> params = params_of(p);
  nn::Adam opt(p.param_count(), tc.adam);
  policy::train_step(p, opt, tc, batch);
  CHECK(params_of(p) == params);  // lr 0 plus the f32 lattice: a fixed point
  const std::vector<double> grads = grads_of(p);

  const double eps = 1e-5;
  double worst = 0.0;
  std::vector<double> bumped = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    bumped[i] = params[i] + eps;
    p.scatter_params(bumped);
    const double jp = loss_value(p, tc, batch);
    bumped[i] = params[i] - eps;
    p.scatter_params(bumped);
    const double jm = loss_value(p, tc, batch);
    bumped[i] = params[i];
    const double fd = (jp - jm) / (2.0 * eps);
    const double rel = std::abs(fd - grads[i]) /
                       std::max({1e-6, std::abs(fd), std::abs(grads[i])});
    worst = std::max(worst, rel);
  }
  p.scatter_params(params);
  CHECK(worst < 1e-4);
}

TEST_CASE("stop-gradient modes reroute exactly the alignment term") {
  const auto cfg = tiny_config();
  util::Rng rng(33);
  std::vector<policy::TrainSample> batch;
  batch.push_back(random_sample(cfg, rng));
  batch.push_back(random_sample(cfg, rng));

  policy::TrainConfig tc;
  tc.batch = 2;
  tc.adam.lr = 0.0;

  const auto grads_for = [&](policy::StopGrad mode, double w_align) {
    policy::MagicPolicy p = policy::make_policy(cfg, 34);
    policy::TrainConfig c = tc;
    c.stop_grad = mode;
    c.w_align = w_align;
    nn::Adam opt(p.param_count(), c.adam);
    policy::train_step(p, opt, c, batch);
    return grads_of(p);
  };

  const auto g_none = grads_for(policy::StopGrad::None, 1.0);
  const auto g_sgr = grads_for(policy::StopGrad::SgR, 1.0);
  const auto g_sgp = grads_for(policy::StopGrad::SgP, 1.0);
  const auto g_noalign = grads_for(policy::StopGrad::None, 0.0);

  // Stack extents in the flat parameter vector.
  policy::MagicPolicy probe = policy::make_policy(cfg, 34);
  const std::size_t n_conv = probe.conv.param_count();
  const std::size_t n_rtail = probe.r_tail.param_count();
  const std::size_t n_p = probe.p_net.param_count();
  const std::size_t r_end = n_conv + n_rtail;
  const std::size_t p_end = r_end + n_p;

  // sg_R: the image encoder sees no alignment gradient (identical to
  // dropping the term), while the privileged encoder still does.
  bool r_matches_noalign = true, p_matches_noalign = true;
  for (std::size_t i = 0; i < r_end; ++i) {
    r_matches_noalign = r_matches_noalign && g_sgr[i] == g_noalign[i];
  }
  for (std::size_t i = r_end; i < p_end; ++i) {
    p_matches_noalign = p_matches_noalign && g_sgr[i] == g_noalign[i];
  }
  CHECK(r_matches_noalign);
  CHECK(!p_matches_noalign);

  // sg_P is the mirror image.
  bool p_matches2 = true, r_matches2 = true;
  for (std::size_t i = r_end; i < p_end; ++i) {
    p_matches2 = p_matches2 && g_sgp[i] == g_noalign[i];
  }
  for (std::size_t i = 0; i < r_end; ++i) {
    r_matches2 = r_matches2 && g_sgp[i] == g_noalign[i];
  }
  CHECK(p_matches2);
  CHECK(!r_matches2);

  // The head is upstream of the alignment term: all modes agree there.
  bool head_same = true;
  for (std::size_t i = p_end; i < g_none.size(); ++i) {
    head_same = head_same && g_none[i] == g_sgr[i] && g_none[i] == g_sgp[i];
  }
  CHECK(head_same);
}

TEST_CASE("loss bookkeeping: weights are exact multipliers") {
  const auto cfg = tiny_config();
  util::Rng rng(35);
  std::vector<policy::TrainSample> batch;
  batch.push_back(random_sample(cfg, rng));
  batch.push_back(random_sample(cfg, rng));
  batch.push_back(random_sample(cfg, rng));

  policy::TrainConfig tc;
  tc.batch = 3;
  tc.adam.lr = 0.0;

  policy::MagicPolicy p1 = policy::make_policy(cfg, 36);
  nn::Adam o1(p1.param_count(), tc.adam);
  const auto l1 = policy::train_step(p1, o1, tc, batch);
  CHECK(std::abs(l1.total - (tc.w_bc_onboard * l1.bc_onboard +
                             tc.w_align * l1.align +
                             tc.w_bc_priv * l1.bc_priv)) <= 1e-9);
  CHECK(l1.latent_dev <= 1e-6);
  const auto g1 = grads_of(p1);

  policy::TrainConfig doubled = tc;
  doubled.w_bc_onboard = 2.0;
  doubled.w_align = 2.0;
  doubled.w_bc_priv = 2.0;
  policy::MagicPolicy p2 = policy::make_policy(cfg, 36);
  nn::Adam o2(p2.param_count(), doubled.adam);
  const auto l2 = policy::train_step(p2, o2, doubled, batch);
  CHECK(l2.total == 2.0 * l1.total);
  const auto g2 = grads_of(p2);

  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    dot += g1[i] * g2[i];
    n1 += g1[i] * g1[i];
    n2 += g2[i] * g2[i];
  }
  CHECK(dot / std::sqrt(n1 * n2) > 0.999);
}

TEST_CASE("zero weights and non-finite labels both leave parameters alone") {
  const auto cfg = tiny_config();
  util::Rng rng(37);
  std::vector<policy::TrainSample> batch;
  batch.push_back(random_sample(cfg, rng));

  policy::TrainConfig tc;
  tc.batch = 1;
  tc.w_bc_onboard = 0.0;
  tc.w_align = 0.0;
  tc.w_bc_priv = 0.0;

  policy::MagicPolicy p = policy::make_policy(cfg, 38);
  const auto before = params_of(p);
  nn::Adam opt(p.param_count(), tc.adam);
  const auto l = policy::train_step(p, opt, tc, batch);
  CHECK(l.finite);
  CHECK(l.total == 0.0);
  CHECK(params_of(p) == before);

  policy::TrainConfig full;
  full.batch = 1;
  auto bad = batch;
  bad[0].action[0] = std::nan("");
  nn::Adam opt2(p.param_count(), full.adam);
  const auto l2 = policy::train_step(p, opt2, full, bad);
  CHECK(!l2.finite);
  CHECK(params_of(p) == before);
}

TEST_CASE("training-set loading recovers realized goals and splits holdout") {
  auto loaded = policy::TrainSet::load(sampled_buffer(), model());
  REQUIRE(loaded.ok());
  const policy::TrainSet& data = *loaded;
  CHECK(data.height() == 16);
  CHECK(data.width() == 16);
  CHECK(data.channels() == 2);
  CHECK(data.size() > 0);

  auto rd = expert::BufferReader::open(sampled_buffer());
  REQUIRE(rd.ok());
  CHECK(data.size() == rd->num_steps());

  // Sampled-goal reach trajectories: the loader's replayed goal must equal
  // the goal slice of the stored full-precision final privileged state (the
  // script's last waypoint is the goal itself).
  std::size_t at = 0;
  for (std::size_t k = 0; k < rd->num_trajectories(); ++k) {
    const auto& meta = rd->meta(k);
    REQUIRE(meta.task == world::TaskKind::Reach);
    REQUIRE(!meta.goal.has_value());
    const auto traj = rd->trajectory(k);
    const auto v = data.sample(at);
    for (int i = 0; i < policy::kGoalDim; ++i) {
      CHECK(v.goal[i] ==
            traj.final_priv[world::PrivilegedState::kGoalOffset + i]);
    }
    // Step payloads come back exactly as stored.
    for (int i = 0; i < world::PrivilegedState::kDim; ++i) {
      CHECK(v.priv[i] == traj.steps[0].priv[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < world::Action::kDim; ++i) {
      CHECK(v.action[i] == traj.steps[0].action[static_cast<std::size_t>(i)]);
    }
    at += meta.n_steps;
  }

  // Holdout: every 101st index, the rest trains; the split is a partition.
  const auto& ho = data.holdout();
  REQUIRE(!ho.empty());
  CHECK(ho[0] == 0);
  for (std::size_t i = 0; i < ho.size(); ++i) {
    CHECK(ho[i] == i * 101);
  }
  CHECK(ho.size() + data.train_indices().size() == data.size());

  CHECK(!policy::TrainSet::load(fresh_dir("no-buffer"), model()).ok());
}

TEST_CASE("training-set loading honors explicit goals verbatim") {
  const std::string dir = fresh_dir("explicit-goal-buffer");
  auto probe = world::reset(world::Task::reach(), 3, model(),
                            arm::baseline_design());
  REQUIRE(probe.ok());
  world::Task pinned = world::Task::reach();
  pinned.goal = arm::Pose{probe->goal.p, probe->goal.q};

  expert::CollectConfig cc;
  cc.n_target = 2;
  cc.fixed = arm::baseline_design();
  cc.seed = 91;
  cc.camera = collect_camera();
  cc.task_override = pinned;
  REQUIRE(expert::collect(cc, model(), dir).ok());

  auto loaded = policy::TrainSet::load(dir, model());
  REQUIRE(loaded.ok());
  const auto v = loaded->sample(0);
  CHECK(v.goal[0] == pinned.goal->p.x());
  CHECK(v.goal[1] == pinned.goal->p.y());
  CHECK(v.goal[2] == pinned.goal->p.z());
  CHECK(v.goal[3] == pinned.goal->q.w());
  CHECK(v.goal[6] == pinned.goal->q.z());
}

TEST_CASE("training runs, logs, checkpoints, and resumes bitwise") {
  auto loaded = policy::TrainSet::load(sampled_buffer(), model());
  REQUIRE(loaded.ok());
  const policy::TrainSet& data = *loaded;

  const auto cfg = small_config();
  policy::TrainConfig tc;
  tc.batch = 8;
  tc.total_steps = 30;
  tc.seed = 5;
  tc.log_every = 10;
  tc.heldout_every = 15;
  tc.eval_every = 15;
  tc.checkpoint_every = 15;

  int hook_calls = 0;
  const policy::EvalHook hook = [&hook_calls](policy::MagicPolicy&,
                                              long step) {
    ++hook_calls;
    return nlohmann::json{{"probe_step", step}};
  };

  const std::string dir_a = fresh_dir("train-a");
  policy::MagicPolicy pa = policy::make_policy(cfg, 50);
  auto ra = policy::train(pa, data, tc,
                          {dir_a + "/log.jsonl", dir_a + "/ck", ""}, hook);
  REQUIRE(ra.ok());
  CHECK(ra->steps_done == 30);
  CHECK(ra->last.finite);
  CHECK(hook_calls == 2);  // steps 15 and 30
  REQUIRE(fs::exists(ra->final_checkpoint));

  // Log: parseable JSONL, cadence respected, latents pinned to the sphere.
  std::ifstream log(dir_a + "/log.jsonl");
  std::string line;
  std::vector<nlohmann::json> recs;
  while (std::getline(log, line)) recs.push_back(nlohmann::json::parse(line));
  REQUIRE(recs.size() == 4);
  CHECK(recs[0]["step"] == 10);
  CHECK(recs[1]["step"] == 15);  // the heldout/eval cadence forces a record
  CHECK(recs[2]["step"] == 20);
  CHECK(recs[3]["step"] == 30);
  for (const auto& r : recs) {
    CHECK(r["latent_dev"].get<double>() <= 1e-6);
    CHECK(std::isfinite(r["total"].get<double>()));
  }
  CHECK(recs[1].contains("heldout_align"));
  CHECK(recs[1]["eval"]["probe_step"] == 15);
  CHECK(recs[3].contains("heldout_align"));
  CHECK(recs[3]["eval"]["probe_step"] == 30);

  // Resume from the step-15 checkpoint and land on identical parameters.
  const std::string dir_b = fresh_dir("train-b");
  policy::MagicPolicy pb = policy::make_policy(cfg, 50);
  policy::TrainConfig half = tc;
  half.total_steps = 15;
  half.eval_every = 0;
  REQUIRE(policy::train(pb, data, half,
                        {dir_b + "/log.jsonl", dir_b + "/ck", ""})
              .ok());
  policy::MagicPolicy pc = policy::make_policy(cfg, 50);
  policy::TrainConfig rest = tc;
  rest.eval_every = 0;
  auto rc = policy::train(pc, data, rest,
                          {dir_b + "/log.jsonl", dir_b + "/ck",
                           dir_b + "/ck/ck-final.bin"});
  REQUIRE(rc.ok());
  CHECK(params_of(pc) == params_of(pa));

  // And the final checkpoints carry identical optimizer state.
  auto ck_a = policy::load_policy(ra->final_checkpoint);
  auto ck_c = policy::load_policy(rc->final_checkpoint);
  REQUIRE(ck_a.ok());
  REQUIRE(ck_c.ok());
  CHECK(ck_a->adam_m == ck_c->adam_m);
  CHECK(ck_a->adam_v == ck_c->adam_v);

  // Same length, same seed, fresh run: bitwise repeatable.
  policy::MagicPolicy pd = policy::make_policy(cfg, 50);
  auto rd2 = policy::train(pd, data, rest, {"", "", ""});
  REQUIRE(rd2.ok());
  CHECK(params_of(pd) == params_of(pa));
}

TEST_CASE("training rejects bad configs and an all-holdout buffer") {
  auto loaded = policy::TrainSet::load(sampled_buffer(), model());
  REQUIRE(loaded.ok());
  policy::MagicPolicy p = policy::make_policy(small_config(), 1);

  policy::TrainConfig bad;
  bad.batch = 0;
  auto r = policy::train(p, *loaded, bad, {"", "", ""});
  REQUIRE(!r.ok());
  CHECK(r.error() == policy::TrainError::BadConfig);

  policy::TrainConfig neg;
  neg.w_align = -1.0;
  r = policy::train(p, *loaded, neg, {"", "", ""});
  REQUIRE(!r.ok());
  CHECK(r.error() == policy::TrainError::BadConfig);

  CHECK(std::string(policy::stop_grad_name(policy::StopGrad::SgR)) == "sg_R");
  CHECK(std::string(policy::train_error_name(
            policy::TrainError::NonFiniteLoss)) == "NonFiniteLoss");
}

TEST_CASE("held-out alignment shrinks when the encoders are trained to agree") {
  auto loaded = policy::TrainSet::load(sampled_buffer(), model());
  REQUIRE(loaded.ok());
  const auto cfg = small_config();

  policy::MagicPolicy p = policy::make_policy(cfg, 60);
  const double before = policy::heldout_alignment(p, *loaded, 1.0);
  CHECK(before > 0.0);

  // Alignment-only training must shrink the held-out alignment loss.
  policy::TrainConfig tc;
  tc.batch = 8;
  tc.total_steps = 60;
  tc.seed = 61;
  tc.w_bc_onboard = 0.0;
  tc.w_bc_priv = 0.0;
  tc.augment = false;
  tc.log_every = 0;
  tc.heldout_every = 0;
  REQUIRE(policy::train(p, *loaded, tc, {"", "", ""}).ok());
  const double after = policy::heldout_alignment(p, *loaded, 1.0);
  CHECK(after < before);
}
