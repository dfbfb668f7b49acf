#include "qalign/rl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qalign/errors.hpp"
#include "qalign/io/csv.hpp"

namespace qalign::rl {

namespace {

constexpr char kMagic[8] = {'Q', 'A', 'L', 'G', 'N', 'C', 'K', 'P'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(char((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(char((v >> (8 * i)) & 0xFF));
  }
  void i64(long long v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) {
    u64(s.size());
    out_ += s;
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  template <class V>
  void floats(const V& v) {
    u64(std::uint64_t(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f32(v(i));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(in_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(in_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  long long i64() { return static_cast<long long>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes() {
    const auto n = u64();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool match(const char* p, std::size_t n) {
    need(n);
    const bool ok = std::memcmp(in_.data() + pos_, p, n) == 0;
    pos_ += n;
    return ok;
  }
  template <class V>
  void floats(V& v) {
    const auto n = u64();
    if (n != std::uint64_t(v.size())) throw VersionError("checkpoint: parameter block size mismatch");
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f32();
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (pos_ + n > in_.size()) throw VersionError("checkpoint: truncated data");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_config(Writer& w, const SacConfig& c) {
  w.u32(std::uint32_t(c.hidden.size()));
  for (int h : c.hidden) w.u32(std::uint32_t(h));
  w.i64(c.batch_size);
  w.f64(c.learning_rate);
  w.f64(c.gamma);
  w.f64(c.tau);
  w.i64(c.replay_capacity);
  w.i64(c.warmup_steps);
  w.f64(c.entropy_target);
  w.f64(c.initial_alpha);
  w.f64(c.log_std_min);
  w.f64(c.log_std_max);
  w.i64(c.total_steps);
  w.i64(c.updates_per_step);
  w.i64(c.log_interval);
  w.i64(c.validation_interval);
  w.i64(c.validation_trials);
  w.i64(c.checkpoint_interval);
}

SacConfig read_config(Reader& r) {
  SacConfig c;
  c.hidden.resize(r.u32());
  for (int& h : c.hidden) h = int(r.u32());
  c.batch_size = int(r.i64());
  c.learning_rate = r.f64();
  c.gamma = r.f64();
  c.tau = r.f64();
  c.replay_capacity = r.i64();
  c.warmup_steps = r.i64();
  c.entropy_target = r.f64();
  c.initial_alpha = r.f64();
  c.log_std_min = r.f64();
  c.log_std_max = r.f64();
  c.total_steps = r.i64();
  c.updates_per_step = int(r.i64());
  c.log_interval = r.i64();
  c.validation_interval = r.i64();
  c.validation_trials = int(r.i64());
  c.checkpoint_interval = r.i64();
  return c;
}

void write_adam(Writer& w, const Adam<float>& a) {
  w.i64(a.t);
  w.floats(a.m);
  w.floats(a.v);
}

void read_adam(Reader& r, Adam<float>& a) {
  a.t = r.i64();
  r.floats(a.m);
  r.floats(a.v);
}

}  // namespace

std::string serialize_checkpoint(const AgentCheckpoint& ckpt) {
  const auto& agent = ckpt.agent;
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(std::uint32_t(agent.obs_dim()));
  write_config(w, agent.config());
  w.f64(ckpt.scale.r_scale_um);
  w.f64(ckpt.scale.z_scale_um);
  w.f64(ckpt.scale.c_max_cps);
  w.u32(std::uint32_t(ckpt.scale.obs_frames));
  w.i64(ckpt.train_step);
  w.f64(agent.log_alpha());

  w.floats(agent.actor().params());
  for (int i = 0; i < 2; ++i) w.floats(agent.critic(i).params());
  for (int i = 0; i < 2; ++i) w.floats(agent.target(i).params());
  write_adam(w, agent.actor_optimizer());
  for (int i = 0; i < 2; ++i) write_adam(w, agent.critic_optimizer(i));
  const auto& aa = agent.alpha_optimizer();
  w.i64(aa.t);
  w.f64(aa.m(0));
  w.f64(aa.v(0));

  std::ostringstream rng;
  rng << agent.rng();
  w.bytes(rng.str());
  return w.take();
}

AgentCheckpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (!r.match(kMagic, sizeof kMagic)) throw VersionError("checkpoint: not a qalign checkpoint");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const int obs_dim = int(r.u32());
  const SacConfig config = read_config(r);

  AgentCheckpoint ckpt{SacAgent<float>(obs_dim, config, 0), {}, 0};
  ckpt.scale.r_scale_um = r.f64();
  ckpt.scale.z_scale_um = r.f64();
  ckpt.scale.c_max_cps = r.f64();
  ckpt.scale.obs_frames = int(r.u32());
  if (ckpt.scale.observation_dim() != obs_dim) throw VersionError("checkpoint: observation size mismatch");
  ckpt.train_step = r.i64();

  auto& agent = ckpt.agent;
  agent.set_log_alpha(r.f64());
  r.floats(agent.actor().params());
  for (int i = 0; i < 2; ++i) r.floats(agent.critic(i).params());
  for (int i = 0; i < 2; ++i) r.floats(agent.target(i).params());
  read_adam(r, agent.actor_optimizer());
  for (int i = 0; i < 2; ++i) read_adam(r, agent.critic_optimizer(i));
  auto& aa = agent.alpha_optimizer();
  aa.t = r.i64();
  aa.m(0) = r.f64();
  aa.v(0) = r.f64();

  std::istringstream rng(r.bytes());
  rng >> agent.rng();
  if (!rng) throw VersionError("checkpoint: corrupt generator state");
  if (!r.at_end()) throw VersionError("checkpoint: trailing data");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const AgentCheckpoint& ckpt) {
  io::write_atomically(path, serialize_checkpoint(ckpt));
}

AgentCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace qalign::rl
