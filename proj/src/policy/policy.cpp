#include "morphic/policy/policy.hpp"

#include <cstring>
#include <stdexcept>
#include <utility>

#include "morphic/nn/checkpoint.hpp"
#include "morphic/sense/render.hpp"
#include "morphic/util/expected.hpp"

namespace morphic::policy {

namespace {

std::array<const nn::Sequential*, 5> stacks(const MagicPolicy& p) {
  return {&p.conv, &p.r_tail, &p.p_net, &p.m_net, &p.head};
}

std::array<nn::Sequential*, 5> stacks(MagicPolicy& p) {
  return {&p.conv, &p.r_tail, &p.p_net, &p.m_net, &p.head};
}

nn::Tensor concat1d(const nn::Tensor& a, const nn::Tensor& b) {
  nn::Tensor out({static_cast<int>(a.size() + b.size())});
  std::memcpy(out.data.data(), a.data.data(), a.size() * sizeof(double));
  std::memcpy(out.data.data() + a.size(), b.data.data(),
              b.size() * sizeof(double));
  return out;
}

nn::Tensor morph_tensor(const arm::MorphologyParams& m) {
  nn::Tensor t({arm::kNumJoints});
  for (int i = 0; i < arm::kNumJoints; ++i) {
    t.data[static_cast<std::size_t>(i)] = m.deltas[static_cast<std::size_t>(i)];
  }
  return t;
}

world::Action action_from_output(const nn::Tensor& out) {
  world::Action a;
  a.dxyz = {out.data[0], out.data[1], out.data[2]};
  a.drot = Eigen::Quaterniond(out.data[3], out.data[4], out.data[5], out.data[6]);
  a.dfinger = out.data[7];
  return a;
}

}  // namespace

bool PolicyConfig::operator==(const PolicyConfig& o) const {
  return image_height == o.image_height && image_width == o.image_width &&
         image_channels == o.image_channels && conv1_ch == o.conv1_ch &&
         conv1_k == o.conv1_k && conv1_s == o.conv1_s &&
         conv2_ch == o.conv2_ch && conv2_k == o.conv2_k &&
         conv2_s == o.conv2_s && hidden == o.hidden && latent == o.latent &&
         morph_hidden == o.morph_hidden && morph_latent == o.morph_latent;
}

int PolicyConfig::conv_features() const {
  const auto out_dim = [](int in, int k, int s) { return (in - k) / s + 1; };
  const int h1 = out_dim(image_height, conv1_k, conv1_s);
  const int w1 = out_dim(image_width, conv1_k, conv1_s);
  const int h2 = out_dim(h1, conv2_k, conv2_s);
  const int w2 = out_dim(w1, conv2_k, conv2_s);
  if (h2 <= 0 || w2 <= 0) {
    throw std::invalid_argument("conv trunk collapses the image to nothing");
  }
  return conv2_ch * h2 * w2;
}

void to_json(nlohmann::json& j, const PolicyConfig& c) {
  j = nlohmann::json{{"image_height", c.image_height},
                     {"image_width", c.image_width},
                     {"image_channels", c.image_channels},
                     {"conv1_ch", c.conv1_ch},
                     {"conv1_k", c.conv1_k},
                     {"conv1_s", c.conv1_s},
                     {"conv2_ch", c.conv2_ch},
                     {"conv2_k", c.conv2_k},
                     {"conv2_s", c.conv2_s},
                     {"hidden", c.hidden},
                     {"latent", c.latent},
                     {"morph_hidden", c.morph_hidden},
                     {"morph_latent", c.morph_latent}};
}

void from_json(const nlohmann::json& j, PolicyConfig& c) {
  j.at("image_height").get_to(c.image_height);
  j.at("image_width").get_to(c.image_width);
  j.at("image_channels").get_to(c.image_channels);
  j.at("conv1_ch").get_to(c.conv1_ch);
  j.at("conv1_k").get_to(c.conv1_k);
  j.at("conv1_s").get_to(c.conv1_s);
  j.at("conv2_ch").get_to(c.conv2_ch);
  j.at("conv2_k").get_to(c.conv2_k);
  j.at("conv2_s").get_to(c.conv2_s);
  j.at("hidden").get_to(c.hidden);
  j.at("latent").get_to(c.latent);
  j.at("morph_hidden").get_to(c.morph_hidden);
  j.at("morph_latent").get_to(c.morph_latent);
}

std::size_t MagicPolicy::param_count() const {
  std::size_t n = 0;
  for (const auto* s : stacks(*this)) n += s->param_count();
  return n;
}

void MagicPolicy::gather_params(std::span<double> out) const {
  std::size_t at = 0;
  for (const auto* s : stacks(*this)) {
    s->gather_params(out.subspan(at, s->param_count()));
    at += s->param_count();
  }
}

void MagicPolicy::scatter_params(std::span<const double> in) {
  std::size_t at = 0;
  for (auto* s : stacks(*this)) {
    s->scatter_params(in.subspan(at, s->param_count()));
    at += s->param_count();
  }
}

void MagicPolicy::gather_grads(std::span<double> out) const {
  std::size_t at = 0;
  for (const auto* s : stacks(*this)) {
    s->gather_grads(out.subspan(at, s->param_count()));
    at += s->param_count();
  }
}

void MagicPolicy::zero_grads() {
  for (auto* s : stacks(*this)) s->zero_grads();
}

MagicPolicy make_policy(const PolicyConfig& cfg, std::uint64_t init_seed) {
  MagicPolicy p;
  p.cfg = cfg;
  p.init_seed = init_seed;

  p.conv.add<nn::Conv2d>(cfg.image_channels, cfg.conv1_ch, cfg.conv1_k,
                         cfg.conv1_s);
  p.conv.add<nn::Relu>();
  p.conv.add<nn::Conv2d>(cfg.conv1_ch, cfg.conv2_ch, cfg.conv2_k, cfg.conv2_s);
  p.conv.add<nn::Relu>();
  p.conv.add<nn::Flatten>();

  p.r_tail.add<nn::Dense>(cfg.conv_features() + kGoalDim, cfg.hidden);
  p.r_tail.add<nn::Relu>();
  p.r_tail.add<nn::Dense>(cfg.hidden, cfg.latent);
  p.r_tail.add<nn::UnitNormalize>();

  p.p_net.add<nn::Dense>(world::PrivilegedState::kDim, cfg.hidden);
  p.p_net.add<nn::Relu>();
  p.p_net.add<nn::Dense>(cfg.hidden, cfg.hidden);
  p.p_net.add<nn::Relu>();
  p.p_net.add<nn::Dense>(cfg.hidden, cfg.latent);
  p.p_net.add<nn::UnitNormalize>();

  p.m_net.add<nn::Dense>(arm::kNumJoints, cfg.morph_hidden);
  p.m_net.add<nn::Relu>();
  p.m_net.add<nn::Dense>(cfg.morph_hidden, cfg.morph_latent);

  p.head.add<nn::Dense>(cfg.latent + cfg.morph_latent, cfg.hidden);
  p.head.add<nn::Relu>();
  p.head.add<nn::Dense>(cfg.hidden, cfg.hidden);
  p.head.add<nn::Relu>();
  p.head.add<nn::Dense>(cfg.hidden, world::Action::kDim);
  p.head.add<nn::UnitNormalize>(3, 4);

  util::Rng rng(init_seed);
  for (auto* s : stacks(p)) s->init(rng);

  // Round to the float32 lattice (see make_policy contract).
  std::vector<double> params(p.param_count());
  p.gather_params(params);
  for (double& v : params) v = static_cast<double>(static_cast<float>(v));
  p.scatter_params(params);
  return p;
}

Eigen::Matrix<double, kGoalDim, 1> goal_fields(const world::WorldState& state,
                                               const world::Task& task) {
  Eigen::Matrix<double, kGoalDim, 1> g =
      Eigen::Matrix<double, kGoalDim, 1>::Zero();
  if (task.kind == world::TaskKind::Reach) {
    g << state.goal.p, state.goal.q.w(), state.goal.q.x(), state.goal.q.y(),
        state.goal.q.z();
  }
  return g;
}

OnboardObs onboard_observation(const world::WorldState& state,
                               const arm::ArmModel& model,
                               const arm::MorphologyParams& params,
                               const world::Task& task,
                               const sense::CameraModel& camera) {
  return {sense::render(state, model, params, camera),
          goal_fields(state, task)};
}

nn::Tensor encode_morphology(MagicPolicy& policy,
                             const arm::MorphologyParams& m) {
  return policy.m_net.forward(morph_tensor(m));
}

nn::Tensor encode_onboard(MagicPolicy& policy, const sense::Image& image,
                          const Eigen::Matrix<double, kGoalDim, 1>& goal) {
  nn::Tensor img({image.channels, image.height, image.width});
  img.data = image.data;
  const nn::Tensor feats = policy.conv.forward(img);
  nn::Tensor g({kGoalDim});
  for (int i = 0; i < kGoalDim; ++i) g.data[static_cast<std::size_t>(i)] = goal[i];
  return policy.r_tail.forward(concat1d(feats, g));
}

nn::Tensor encode_privileged(MagicPolicy& policy, const nn::Tensor& priv) {
  return policy.p_net.forward(priv);
}

world::Action head_action(MagicPolicy& policy, const nn::Tensor& z,
                          const nn::Tensor& z_m) {
  return action_from_output(policy.head.forward(concat1d(z, z_m)));
}

world::Action act_onboard(MagicPolicy& policy, const OnboardObs& obs,
                          const arm::MorphologyParams& m) {
  const nn::Tensor z_m = encode_morphology(policy, m);
  const nn::Tensor z_r = encode_onboard(policy, obs.image, obs.goal);
  return head_action(policy, z_r, z_m);
}

world::Action act_privileged(MagicPolicy& policy,
                             const world::PrivilegedState& s,
                             const arm::MorphologyParams& m) {
  const nn::Tensor z_m = encode_morphology(policy, m);
  nn::Tensor priv({world::PrivilegedState::kDim});
  const auto flat = s.flatten();
  for (int i = 0; i < world::PrivilegedState::kDim; ++i) {
    priv.data[static_cast<std::size_t>(i)] = flat[i];
  }
  return head_action(policy, encode_privileged(policy, priv), z_m);
}

void save_policy(const std::string& path, const MagicPolicy& policy,
                 long step, std::span<const float> adam_m,
                 std::span<const float> adam_v) {
  std::vector<double> params(policy.param_count());
  policy.gather_params(params);
  std::vector<float> params32(params.begin(), params.end());

  nlohmann::ordered_json header;
  header["format"] = "magic-policy";
  header["config"] = nlohmann::json(policy.cfg);
  header["init_seed"] = policy.init_seed;
  header["step"] = step;
  header["stacks"] = {{"conv", policy.conv.describe()},
                      {"r_tail", policy.r_tail.describe()},
                      {"p_net", policy.p_net.describe()},
                      {"m_net", policy.m_net.describe()},
                      {"head", policy.head.describe()}};

  std::vector<nn::CheckpointBlock> blocks;
  blocks.emplace_back("params", std::move(params32));
  if (!adam_m.empty()) {
    blocks.emplace_back("adam_m", std::vector<float>(adam_m.begin(), adam_m.end()));
    blocks.emplace_back("adam_v", std::vector<float>(adam_v.begin(), adam_v.end()));
  }
  nn::write_checkpoint(path, header, blocks);
}

util::Expected<PolicyCheckpoint, std::string> load_policy(
    const std::string& path) {
  auto ck = nn::read_checkpoint(path);
  if (!ck.ok()) return util::err(ck.error());
  if (!ck->header.contains("format") ||
      ck->header["format"] != "magic-policy") {
    return util::err("not a policy checkpoint: " + path);
  }
  PolicyCheckpoint out;
  try {
    const PolicyConfig cfg = ck->header.at("config").get<PolicyConfig>();
    const std::uint64_t seed = ck->header.at("init_seed").get<std::uint64_t>();
    out.step = ck->header.at("step").get<long>();
    out.policy = make_policy(cfg, seed);
  } catch (const nlohmann::json::exception& e) {
    return util::err(std::string("bad policy checkpoint header: ") + e.what());
  }

  const auto* params = ck->find("params");
  if (params == nullptr) return util::err(std::string("checkpoint lacks a params block"));
  if (params->size() != out.policy.param_count()) {
    return util::err("checkpoint parameter count mismatch: " + path);
  }
  std::vector<double> wide(params->begin(), params->end());
  out.policy.scatter_params(wide);

  const auto* m = ck->find("adam_m");
  const auto* v = ck->find("adam_v");
  if ((m == nullptr) != (v == nullptr)) {
    return util::err(std::string("checkpoint has half an optimizer state"));
  }
  if (m != nullptr) {
    if (m->size() != params->size() || v->size() != params->size()) {
      return util::err(std::string("optimizer state size mismatch"));
    }
    out.adam_m = *m;
    out.adam_v = *v;
  }
  return out;
}

}  // namespace morphic::policy
