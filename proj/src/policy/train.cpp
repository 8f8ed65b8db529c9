#include "morphic/policy/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "morphic/nn/losses.hpp"
#include "morphic/sense/augment.hpp"
#include "morphic/util/rng.hpp"

namespace morphic::policy {

namespace fs = std::filesystem;

namespace {

constexpr int kPrivDim = world::PrivilegedState::kDim;

bool all_zero(std::span<const double> v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

nn::Tensor concat1d(const nn::Tensor& a, const nn::Tensor& b) {
  nn::Tensor out({static_cast<int>(a.size() + b.size())});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

double norm_deviation(const nn::Tensor& z) {
  double sq = 0.0;
  for (double v : z.data) sq += v * v;
  return std::abs(std::sqrt(sq) - 1.0);
}

void fisher_yates(std::vector<std::uint32_t>& v, util::Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

// Shared-head imitation pass: forward, loss against the label, and (when the
// scaled gradient is nonzero) a backward pass that accumulates head
// parameter gradients and splits the input gradient into latent and
// morphology parts.
double head_pass(MagicPolicy& policy, const nn::Tensor& z,
                 const nn::Tensor& z_m, const std::array<double, 8>& label,
                 double scale, std::span<double> g_z, std::span<double> g_zm) {
  const nn::Tensor in = concat1d(z, z_m);
  const nn::Tensor a = policy.head.forward(in);
  const auto loss = nn::bc_loss(
      std::span<const double, 8>(a.data.data(), 8),
      std::span<const double, 8>(label.data(), 8));
  nn::Tensor g;
  g.shape = a.shape;
  g.data.resize(a.size());
  bool nonzero = false;
  for (std::size_t i = 0; i < 8; ++i) {
    g.data[i] = scale * loss.grad[i];
    nonzero = nonzero || g.data[i] != 0.0;
  }
  if (nonzero) {
    const nn::Tensor gin = policy.head.backward(g);
    for (std::size_t i = 0; i < g_z.size(); ++i) g_z[i] += gin.data[i];
    for (std::size_t i = 0; i < g_zm.size(); ++i) {
      g_zm[i] += gin.data[g_z.size() + i];
    }
  }
  return loss.value;
}

void save_training_checkpoint(const std::string& path,
                              const MagicPolicy& policy, const nn::Adam& opt,
                              long step) {
  std::vector<float> m, v;
  m.reserve(opt.first_moment().size());
  v.reserve(opt.second_moment().size());
  for (double x : opt.first_moment()) m.push_back(static_cast<float>(x));
  for (double x : opt.second_moment()) v.push_back(static_cast<float>(x));
  save_policy(path, policy, step, m, v);
}

}  // namespace

const char* stop_grad_name(StopGrad m) {
  switch (m) {
    case StopGrad::None: return "none";
    case StopGrad::SgR: return "sg_R";
    case StopGrad::SgP: return "sg_P";
  }
  return "?";
}

const char* train_error_name(TrainError e) {
  switch (e) {
    case TrainError::BadConfig: return "BadConfig";
    case TrainError::EmptyBuffer: return "EmptyBuffer";
    case TrainError::NonFiniteLoss: return "NonFiniteLoss";
    case TrainError::Io: return "Io";
  }
  return "?";
}

StepLosses train_step(MagicPolicy& policy, nn::Adam& opt,
                      const TrainConfig& cfg,
                      const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  policy.zero_grads();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  StepLosses losses;
  const auto latent = static_cast<std::size_t>(policy.cfg.latent);
  const auto morph_latent = static_cast<std::size_t>(policy.cfg.morph_latent);
  std::vector<double> g_zr(latent), g_zp(latent), g_zm(morph_latent);

  for (const auto& s : batch) {
    std::fill(g_zr.begin(), g_zr.end(), 0.0);
    std::fill(g_zp.begin(), g_zp.end(), 0.0);
    std::fill(g_zm.begin(), g_zm.end(), 0.0);

    const nn::Tensor z_m = policy.m_net.forward(s.morph);
    const nn::Tensor feats = policy.conv.forward(s.image);
    const nn::Tensor z_r = policy.r_tail.forward(concat1d(feats, s.goal));
    const nn::Tensor z_p = policy.p_net.forward(s.priv);
    losses.latent_dev = std::max(
        {losses.latent_dev, norm_deviation(z_r), norm_deviation(z_p)});

    losses.bc_onboard += head_pass(policy, z_r, z_m, s.action,
                                   cfg.w_bc_onboard * inv_b, g_zr, g_zm);
    losses.bc_priv += head_pass(policy, z_p, z_m, s.action,
                                cfg.w_bc_priv * inv_b, g_zp, g_zm);

    const auto align = nn::huber_loss(z_r.data, z_p.data, cfg.huber_delta);
    losses.align += align.value;
    const double a_scale = cfg.w_align * inv_b;
    if (cfg.stop_grad != StopGrad::SgR) {
      for (std::size_t i = 0; i < latent; ++i) {
        g_zr[i] += a_scale * align.grad[i];
      }
    }
    if (cfg.stop_grad != StopGrad::SgP) {
      for (std::size_t i = 0; i < latent; ++i) {
        g_zp[i] -= a_scale * align.grad[i];
      }
    }

    if (!all_zero(g_zr)) {
      nn::Tensor g;
      g.shape = z_r.shape;
      g.data = g_zr;
      const nn::Tensor g_rin = policy.r_tail.backward(g);
      nn::Tensor g_feats;
      g_feats.shape = feats.shape;
      g_feats.data.assign(g_rin.data.begin(),
                          g_rin.data.begin() +
                              static_cast<std::ptrdiff_t>(feats.size()));
      policy.conv.backward(g_feats);
    }
    if (!all_zero(g_zp)) {
      nn::Tensor g;
      g.shape = z_p.shape;
      g.data = g_zp;
      policy.p_net.backward(g);
    }
    if (!all_zero(g_zm)) {
      nn::Tensor g;
      g.shape = z_m.shape;
      g.data = g_zm;
      policy.m_net.backward(g);
    }
  }

  losses.bc_onboard *= inv_b;
  losses.align *= inv_b;
  losses.bc_priv *= inv_b;
  losses.total = cfg.w_bc_onboard * losses.bc_onboard +
                 cfg.w_align * losses.align + cfg.w_bc_priv * losses.bc_priv;
  losses.finite = std::isfinite(losses.bc_onboard) &&
                  std::isfinite(losses.align) &&
                  std::isfinite(losses.bc_priv) && std::isfinite(losses.total);
  if (!losses.finite) return losses;  // leave parameters untouched

  const std::size_t n = policy.param_count();
  std::vector<double> params(n), grads(n);
  policy.gather_params(params);
  policy.gather_grads(grads);
  opt.step(params, grads);
  policy.scatter_params(params);
  return losses;
}

double heldout_alignment(MagicPolicy& policy, const TrainSet& data,
                         double delta) {
  if (data.holdout().empty()) return 0.0;
  const std::size_t img_floats = static_cast<std::size_t>(data.height()) *
                                 static_cast<std::size_t>(data.width()) *
                                 static_cast<std::size_t>(data.channels());
  double sum = 0.0;
  nn::Tensor img({data.channels(), data.height(), data.width()});
  nn::Tensor goal({kGoalDim});
  nn::Tensor priv({kPrivDim});
  for (std::uint32_t idx : data.holdout()) {
    const auto v = data.sample(idx);
    for (std::size_t i = 0; i < img_floats; ++i) img.data[i] = v.image[i];
    for (int i = 0; i < kGoalDim; ++i) {
      goal.data[static_cast<std::size_t>(i)] = v.goal[i];
    }
    for (int i = 0; i < kPrivDim; ++i) {
      priv.data[static_cast<std::size_t>(i)] = v.priv[i];
    }
    const nn::Tensor feats = policy.conv.forward(img);
    const nn::Tensor z_r = policy.r_tail.forward(concat1d(feats, goal));
    const nn::Tensor z_p = policy.p_net.forward(priv);
    sum += nn::huber_loss(z_r.data, z_p.data, delta).value;
  }
  return sum / static_cast<double>(data.holdout().size());
}

util::Expected<TrainResult, TrainError> train(MagicPolicy& policy,
                                              const TrainSet& data,
                                              const TrainConfig& cfg,
                                              const TrainPaths& paths,
                                              const EvalHook& eval_hook) {
  if (cfg.batch < 1 || cfg.total_steps < 0 || cfg.w_bc_onboard < 0.0 ||
      cfg.w_align < 0.0 || cfg.w_bc_priv < 0.0 || cfg.huber_delta <= 0.0 ||
      cfg.log_every < 0 || cfg.heldout_every < 0 || cfg.eval_every < 0 ||
      cfg.checkpoint_every < 0) {
    return util::err(TrainError::BadConfig);
  }
  const std::size_t n_train = data.train_indices().size();
  if (n_train == 0) return util::err(TrainError::EmptyBuffer);

  nn::Adam opt(policy.param_count(), cfg.adam);
  long start_step = 0;
  if (!paths.resume_from.empty()) {
    auto ck = load_policy(paths.resume_from);
    if (!ck.ok() || !(ck->policy.cfg == policy.cfg) || ck->adam_m.empty()) {
      return util::err(TrainError::Io);
    }
    std::vector<double> params(ck->policy.param_count());
    ck->policy.gather_params(params);
    policy.scatter_params(params);
    opt.restore(ck->adam_m, ck->adam_v,
                static_cast<std::uint64_t>(ck->step));
    start_step = ck->step;
  }

  std::ofstream log;
  if (!paths.log_path.empty()) {
    const fs::path parent = fs::path(paths.log_path).parent_path();
    if (!parent.empty()) {
      std::error_code ec;
      fs::create_directories(parent, ec);
      if (ec) return util::err(TrainError::Io);
    }
    log.open(paths.log_path, paths.resume_from.empty()
                                 ? std::ios::out | std::ios::trunc
                                 : std::ios::out | std::ios::app);
    if (!log) return util::err(TrainError::Io);
  }
  if (!paths.checkpoint_dir.empty()) {
    std::error_code ec;
    fs::create_directories(paths.checkpoint_dir, ec);
    if (ec) return util::err(TrainError::Io);
  }

  const std::uint64_t shuffle_master = util::substream(cfg.seed, kShuffleSalt);
  const std::uint64_t augment_master = util::substream(cfg.seed, kAugmentSalt);
  const auto& train_idx = data.train_indices();
  std::vector<std::uint32_t> perm;
  std::uint64_t cached_epoch = ~0ull;

  const std::size_t img_floats = static_cast<std::size_t>(data.height()) *
                                 static_cast<std::size_t>(data.width()) *
                                 static_cast<std::size_t>(data.channels());
  std::vector<TrainSample> batch(static_cast<std::size_t>(cfg.batch));
  for (auto& s : batch) {
    s.image = nn::Tensor({data.channels(), data.height(), data.width()});
    s.priv = nn::Tensor({kPrivDim});
    s.morph = nn::Tensor({arm::kNumJoints});
    s.goal = nn::Tensor({kGoalDim});
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto wall_ms = [&t0] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };
  const auto checkpoint_path = [&paths](long step) {
    char name[32];
    std::snprintf(name, sizeof(name), "ck-%08ld.bin", step);
    return (fs::path(paths.checkpoint_dir) / name).string();
  };

  TrainResult result;
  result.steps_done = start_step;
  sense::Image aug_buf(data.height(), data.width(), data.channels());

  for (long step = start_step; step < cfg.total_steps; ++step) {
    const auto stream_pos = static_cast<std::uint64_t>(step) *
                            static_cast<std::uint64_t>(cfg.batch);
    // Epoch boundary: reshuffle and re-assert parameter health.
    if (stream_pos / n_train != cached_epoch) {
      const std::uint64_t epoch = stream_pos / n_train;
      perm = train_idx;
      util::Rng rng(util::substream(shuffle_master, epoch));
      fisher_yates(perm, rng);
      cached_epoch = epoch;
      std::vector<double> params(policy.param_count());
      policy.gather_params(params);
      for (double v : params) {
        if (!std::isfinite(v)) return util::err(TrainError::NonFiniteLoss);
      }
    }

    for (int i = 0; i < cfg.batch; ++i) {
      const std::uint64_t pos = stream_pos + static_cast<std::uint64_t>(i);
      const std::uint64_t epoch = pos / n_train;
      if (epoch != cached_epoch) {
        perm = train_idx;
        util::Rng rng(util::substream(shuffle_master, epoch));
        fisher_yates(perm, rng);
        cached_epoch = epoch;
      }
      const std::uint32_t di = perm[pos % n_train];
      const auto v = data.sample(di);
      auto& s = batch[static_cast<std::size_t>(i)];
      if (cfg.augment) {
        for (std::size_t k = 0; k < img_floats; ++k) aug_buf.data[k] = v.image[k];
        const sense::Image out =
            sense::augment(aug_buf, util::substream(augment_master, pos));
        s.image.data = out.data;
      } else {
        for (std::size_t k = 0; k < img_floats; ++k) s.image.data[k] = v.image[k];
      }
      for (int k = 0; k < kPrivDim; ++k) {
        s.priv.data[static_cast<std::size_t>(k)] = v.priv[k];
      }
      for (int k = 0; k < arm::kNumJoints; ++k) {
        s.morph.data[static_cast<std::size_t>(k)] = v.morph[k];
      }
      for (int k = 0; k < kGoalDim; ++k) {
        s.goal.data[static_cast<std::size_t>(k)] = v.goal[k];
      }
      for (int k = 0; k < world::Action::kDim; ++k) {
        s.action[static_cast<std::size_t>(k)] = v.action[k];
      }
    }

    const StepLosses losses = train_step(policy, opt, cfg, batch);
    result.last = losses;
    result.steps_done = step + 1;

    if (!losses.finite) {
      if (log) {
        nlohmann::ordered_json rec;
        rec["step"] = step + 1;
        rec["event"] = "non_finite_loss";
        rec["bc_onboard"] = losses.bc_onboard;
        rec["align"] = losses.align;
        rec["bc_priv"] = losses.bc_priv;
        log << rec.dump() << "\n" << std::flush;
      }
      if (!paths.checkpoint_dir.empty()) {
        save_training_checkpoint(
            (fs::path(paths.checkpoint_dir) / "ck-nonfinite.bin").string(),
            policy, opt, step);
      }
      return util::err(TrainError::NonFiniteLoss);
    }

    const long done = step + 1;
    const bool last = done == cfg.total_steps;
    const bool log_tick =
        (cfg.log_every > 0 && done % cfg.log_every == 0) || last;
    const bool held_tick =
        cfg.heldout_every > 0 && (done % cfg.heldout_every == 0 || last);
    const bool eval_tick = eval_hook && cfg.eval_every > 0 &&
                           (done % cfg.eval_every == 0 || last);
    nlohmann::json eval_out;
    if (eval_tick) eval_out = eval_hook(policy, done);
    if (log && (log_tick || held_tick || eval_tick)) {
      nlohmann::ordered_json rec;
      rec["step"] = done;
      rec["total"] = losses.total;
      rec["bc_onboard"] = losses.bc_onboard;
      rec["align"] = losses.align;
      rec["bc_priv"] = losses.bc_priv;
      rec["latent_dev"] = losses.latent_dev;
      if (held_tick) {
        rec["heldout_align"] =
            heldout_alignment(policy, data, cfg.huber_delta);
      }
      if (eval_tick) rec["eval"] = eval_out;
      rec["wall_ms"] = wall_ms();
      log << rec.dump() << "\n" << std::flush;
    }
    if (!paths.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        done % cfg.checkpoint_every == 0 && !last) {
      save_training_checkpoint(checkpoint_path(done), policy, opt, done);
    }
  }

  if (!paths.checkpoint_dir.empty()) {
    result.final_checkpoint =
        (fs::path(paths.checkpoint_dir) / "ck-final.bin").string();
    save_training_checkpoint(result.final_checkpoint, policy, opt,
                             std::max(start_step, cfg.total_steps));
  }
  return result;
}

}  // namespace morphic::policy
