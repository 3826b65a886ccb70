#include "escape/ipc.h"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

namespace escape {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

json PoseJson(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }

[[noreturn]] void ThrowErrno(const std::string& what) {
  throw ChannelClosed(what + ": " + std::strerror(errno));
}

}  // namespace

FdChannel::FdChannel(int in_fd, int out_fd, bool owns)
    : in_fd_(in_fd), out_fd_(out_fd), owns_(owns) {}

FdChannel::~FdChannel() {
  if (!owns_) return;
  if (in_fd_ >= 0) ::close(in_fd_);
  if (out_fd_ >= 0 && out_fd_ != in_fd_) ::close(out_fd_);
}

std::optional<std::string> FdChannel::ReadLine(std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  while (true) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd pfd{in_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("poll");
    }
    if (ready == 0) return std::nullopt;
    char chunk[65536];
    const ssize_t n = ::read(in_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      ThrowErrno("read");
    }
    if (n == 0) throw ChannelClosed("peer closed the stream");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void FdChannel::WriteLine(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(out_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) {
      n = ::write(out_fd_, data.data() + off, data.size() - off);
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("write");
    }
    off += static_cast<std::size_t>(n);
  }
}

void FdChannel::CloseWrite() {
  if (::shutdown(out_fd_, SHUT_WR) < 0 && errno == ENOTSOCK && owns_) {
    ::close(out_fd_);
    if (out_fd_ == in_fd_) in_fd_ = -1;
    out_fd_ = -1;
  }
}

std::pair<std::unique_ptr<FdChannel>, std::unique_ptr<FdChannel>>
SocketPairChannels() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) < 0) ThrowErrno("socketpair");
  return {std::make_unique<FdChannel>(fds[0], fds[0], true),
          std::make_unique<FdChannel>(fds[1], fds[1], true)};
}

namespace {

sockaddr_un UnixAddress(const std::filesystem::path& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string p = path.string();
  if (p.size() >= sizeof addr.sun_path) {
    throw InvalidArgument("unix socket path too long: " + p);
  }
  std::memcpy(addr.sun_path, p.c_str(), p.size() + 1);
  return addr;
}

}  // namespace

std::unique_ptr<FdChannel> AcceptUnix(const std::filesystem::path& path) {
  const sockaddr_un addr = UnixAddress(path);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) ThrowErrno("socket");
  ::unlink(addr.sun_path);
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(fd, 1) < 0) {
    const int err = errno;
    ::close(fd);
    errno = err;
    ThrowErrno("bind " + path.string());
  }
  const int client = ::accept(fd, nullptr, nullptr);
  const int err = errno;
  ::close(fd);
  ::unlink(addr.sun_path);
  if (client < 0) {
    errno = err;
    ThrowErrno("accept");
  }
  return std::make_unique<FdChannel>(client, client, true);
}

std::unique_ptr<FdChannel> ConnectUnix(const std::filesystem::path& path) {
  const sockaddr_un addr = UnixAddress(path);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) ThrowErrno("socket");
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0) {
    const int err = errno;
    ::close(fd);
    errno = err;
    ThrowErrno("connect " + path.string());
  }
  return std::make_unique<FdChannel>(fd, fd, true);
}

RecordingChannel::RecordingChannel(LineChannel& inner, std::ostream& transcript)
    : inner_(inner), transcript_(transcript) {}

std::optional<std::string> RecordingChannel::ReadLine(
    std::chrono::milliseconds timeout) {
  std::optional<std::string> line;
  try {
    line = inner_.ReadLine(timeout);
  } catch (const ChannelClosed& e) {
    transcript_ << json{{"closed", e.what()}}.dump() << '\n';
    throw;
  }
  if (line) {
    transcript_ << json{{"recv", *line}}.dump(-1, ' ', false,
                                               json::error_handler_t::replace)
                << '\n';
  } else {
    transcript_ << json{{"timeout", true}}.dump() << '\n';
  }
  transcript_.flush();
  return line;
}

void RecordingChannel::WriteLine(std::string_view line) { inner_.WriteLine(line); }

ReplayChannel::ReplayChannel(std::string_view transcript) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < transcript.size()) {
    std::size_t end = transcript.find('\n', pos);
    if (end == std::string_view::npos) end = transcript.size();
    const std::string_view raw = transcript.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("transcript: ") + e.what(), line_no);
    }
    if (j.contains("recv") && j["recv"].is_string()) {
      events_.push_back({Event::Kind::kLine, j["recv"].get<std::string>()});
    } else if (j.contains("timeout")) {
      events_.push_back({Event::Kind::kTimeout, {}});
    } else if (j.contains("closed")) {
      events_.push_back({Event::Kind::kClosed,
                         j["closed"].is_string() ? j["closed"].get<std::string>()
                                                 : std::string("closed")});
    } else {
      throw ParseError("transcript: unknown event", line_no);
    }
  }
}

std::optional<std::string> ReplayChannel::ReadLine(std::chrono::milliseconds) {
  if (events_.empty()) throw ChannelClosed("transcript exhausted");
  Event e = std::move(events_.front());
  events_.pop_front();
  switch (e.kind) {
    case Event::Kind::kLine:
      return std::move(e.line);
    case Event::Kind::kTimeout:
      return std::nullopt;
    case Event::Kind::kClosed:
      throw ChannelClosed(e.line);
  }
  return std::nullopt;
}

std::string HelloRecord(const EnvSetup& setup, const DiscreteActionSet& actions) {
  json j;
  j["type"] = "hello";
  j["protocol"] = kProtocolVersion;
  j["ray_count"] = setup.lidar.ray_count;
  j["max_range"] = setup.lidar.max_range;
  j["dt"] = setup.limits.dt;
  j["limits"] = {{"omega_max", setup.limits.omega_max},
                 {"v_max", setup.limits.v_max}};
  j["footprint"] = {setup.footprint.half_length, setup.footprint.half_width};
  json list = json::array();
  for (const DiscreteAction& a : actions) {
    list.push_back({{"index", a.index},
                    {"omega", a.command.omega},
                    {"v", a.command.v},
                    {"radius", a.radius}});
  }
  j["actions"] = std::move(list);
  return j.dump();
}

void ServerHandshake(LineChannel& channel, const EnvSetup& setup,
                     const DiscreteActionSet& actions, const IpcOptions& options) {
  channel.WriteLine(HelloRecord(setup, actions));
  const std::optional<std::string> reply = channel.ReadLine(options.timeout);
  if (!reply) throw ProtocolError("client did not answer the hello");
  json j;
  try {
    j = json::parse(*reply);
  } catch (const json::parse_error&) {
    channel.WriteLine(json{{"type", "error"}, {"message", "malformed hello"}}.dump());
    throw ProtocolError("malformed client hello");
  }
  if (!j.is_object() || j.value("type", "") != "hello" ||
      !j.contains("protocol") || !j["protocol"].is_number_integer()) {
    channel.WriteLine(json{{"type", "error"}, {"message", "expected hello"}}.dump());
    throw ProtocolError("expected a client hello");
  }
  const int version = j["protocol"].get<int>();
  if (version != kProtocolVersion) {
    const std::string msg = "protocol version mismatch: server " +
                            std::to_string(kProtocolVersion) + ", client " +
                            std::to_string(version);
    channel.WriteLine(json{{"type", "error"}, {"message", msg}}.dump());
    throw ProtocolError(msg);
  }
}

std::string ResetRecord(const EscapeEnv& env, const EpisodeInfo& info) {
  json j;
  j["type"] = "reset";
  j["episode"] = info.index;
  j["seed"] = info.seed;
  j["class"] = info.label;
  j["start"] = PoseJson(env.start());
  j["goal"] = PoseJson(env.goal());
  j["scenario"] = json::parse(SerializeScenario(env.scenario()));
  return j.dump();
}

std::string ObservationRecord(int step, const Observation& obs) {
  json j;
  j["type"] = "observation";
  j["step"] = step;
  j["scan"] = obs.scan;
  const TargetFeatures& t = obs.target;
  j["target"] = {t.distance, t.cos_bearing, t.sin_bearing, t.cos_heading,
                 t.sin_heading};
  j["mask"] = obs.mask.ToBitString();
  return j.dump();
}

std::string ResultRecord(const StepResult& r) {
  json j;
  j["type"] = "result";
  j["step"] = r.step;
  j["pose"] = PoseJson(r.pose);
  j["cmd"] = {r.command.omega, r.command.v};
  j["reward"] = {{"iou", r.reward.iou_term},
                 {"distance", r.reward.distance_term},
                 {"time", r.reward.time_term},
                 {"total", r.reward.total}};
  j["terminal"] = r.terminal;
  j["cause"] = CauseName(r.cause);
  j["source"] = SourceName(r.source);
  return j.dump();
}

VelocityCommand ParseActionRecord(std::string_view line,
                                  const DiscreteActionSet& actions) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw ProtocolError("malformed record: " + std::string(line.substr(0, 80)));
  }
  if (!j.is_object()) throw ProtocolError("record is not an object");
  const std::string type = j.value("type", "");
  if (type == "bye") throw ChannelClosed("client said goodbye");
  if (type != "action") throw ProtocolError("expected an action record, got '" + type + "'");
  if (j.contains("index")) {
    const json& idx = j["index"];
    if (!idx.is_number_integer()) throw ProtocolError("action index is not an integer");
    const long long i = idx.get<long long>();
    if (i < 0 || i >= static_cast<long long>(actions.size())) {
      throw ProtocolError("action index " + std::to_string(i) + " outside [0, " +
                          std::to_string(actions.size()) + ")");
    }
    return actions[static_cast<std::size_t>(i)].command;
  }
  if (!j.contains("omega") || !j.contains("v") || !j["omega"].is_number() ||
      !j["v"].is_number()) {
    throw ProtocolError("action needs 'index' or numeric 'omega' and 'v'");
  }
  const VelocityCommand cmd{j["omega"].get<double>(), j["v"].get<double>()};
  if (!std::isfinite(cmd.omega) || !std::isfinite(cmd.v) ||
      !actions.limits().Admits(cmd, 1e-9)) {
    throw ProtocolError("continuous action outside the motion limits");
  }
  return cmd;
}

ExternalPolicy::ExternalPolicy(LineChannel& channel, IpcOptions options,
                               std::string label)
    : channel_(channel), options_(options), label_(std::move(label)) {}

void ExternalPolicy::Handshake(const EnvSetup& setup,
                               const DiscreteActionSet& actions) {
  ServerHandshake(channel_, setup, actions, options_);
  ready_ = true;
}

void ExternalPolicy::Finish() {
  if (!ready_) return;
  try {
    channel_.WriteLine(json{{"type", "bye"}}.dump());
  } catch (const ChannelClosed&) {
  }
}

bool ExternalPolicy::Begin(const EscapeEnv& env, const Observation&,
                           const EpisodeInfo& info) {
  if (!ready_) throw ProtocolError("handshake not completed");
  channel_.WriteLine(ResetRecord(env, info));
  return true;
}

std::string ExternalPolicy::ReadReply() {
  const std::optional<std::string> line = channel_.ReadLine(options_.timeout);
  if (!line) {
    throw ProtocolError("client silent for " +
                        std::to_string(options_.timeout.count()) + " ms");
  }
  return *line;
}

VelocityCommand ExternalPolicy::Act(const EscapeEnv& env, const Observation& obs) {
  channel_.WriteLine(ObservationRecord(env.step_count(), obs));
  return ParseActionRecord(ReadReply(), env.actions());
}

void ExternalPolicy::Observe(const StepResult& result) {
  channel_.WriteLine(ResultRecord(result));
}

void ExternalPolicy::End(bool failed, const std::string& reason) {
  if (failed) {
    channel_.WriteLine(json{{"type", "episode_failed"}, {"reason", reason}}.dump());
  }
}

ServeSummary RunServeSession(LineChannel& channel, EscapeEnv& env,
                             const std::vector<Scenario>& scenarios,
                             const ServeOptions& options) {
  if (scenarios.empty()) throw InvalidArgument("serve needs at least one scenario");
  ServerHandshake(channel, env.setup(), env.actions(), options.ipc);
  ServeSummary summary;
  EpisodeConfig cfg = options.episode;
  cfg.hybrid_guidance = options.train_mode;
  cfg.observe = true;
  try {
    for (int ep = 0; options.episodes == 0 || ep < options.episodes; ++ep) {
      const Scenario& scenario = scenarios[static_cast<std::size_t>(ep) % scenarios.size()];
      const EpisodeInfo info{ep, MixSeed(options.seed, static_cast<std::uint64_t>(ep)),
                             scenario.features.Label()};
      Observation obs = env.Reset(scenario, cfg, info.seed);
      channel.WriteLine(ResetRecord(env, info));
      ++summary.episodes;
      try {
        while (env.active()) {
          channel.WriteLine(ObservationRecord(env.step_count(), obs));
          const std::optional<std::string> line = channel.ReadLine(options.ipc.timeout);
          if (!line) throw ProtocolError("client silent");
          VelocityCommand cmd = ParseActionRecord(*line, env.actions());
          ActionSource source = ActionSource::kPolicy;
          if (options.train_mode) std::tie(cmd, source) = env.HybridAction(cmd);
          StepResult r = env.Step(cmd, source);
          channel.WriteLine(ResultRecord(r));
          obs = std::move(r.observation);
        }
      } catch (const ChannelClosed&) {
        throw;
      } catch (const ProtocolError& e) {
        ++summary.protocol_failures;
        channel.WriteLine(json{{"type", "episode_failed"}, {"reason", e.what()}}.dump());
      }
    }
    channel.WriteLine(json{{"type", "bye"}}.dump());
  } catch (const ChannelClosed&) {
  }
  return summary;
}

}  // namespace escape
