#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "escape/errors.h"
#include "escape/escape_env.h"
#include "escape/policy.h"

// Newline-delimited JSON between the environment (server) and an external
// policy (client). See docs/ipc-protocol.md for the record layouts.
namespace escape {

inline constexpr int kProtocolVersion = 1;

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// The peer hung up, said goodbye, or the transport failed.
class ChannelClosed : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  // Next line without its terminator, or nullopt once `timeout` elapses.
  // Throws ChannelClosed at end of stream.
  virtual std::optional<std::string> ReadLine(std::chrono::milliseconds timeout) = 0;
  virtual void WriteLine(std::string_view line) = 0;
};

// Stream over file descriptors (pipes, stdio, sockets).
class FdChannel : public LineChannel {
 public:
  FdChannel(int in_fd, int out_fd, bool owns = false);
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  std::optional<std::string> ReadLine(std::chrono::milliseconds timeout) override;
  void WriteLine(std::string_view line) override;
  // Half-closes the write side so the peer sees end of stream.
  void CloseWrite();

 private:
  int in_fd_;
  int out_fd_;
  bool owns_;
  std::string buffer_;
};

// Two connected endpoints (for in-process clients and tests).
std::pair<std::unique_ptr<FdChannel>, std::unique_ptr<FdChannel>>
SocketPairChannels();
// Binds `path`, accepts one client, and removes the socket file.
std::unique_ptr<FdChannel> AcceptUnix(const std::filesystem::path& path);
std::unique_ptr<FdChannel> ConnectUnix(const std::filesystem::path& path);

// Records every line read from the client, timeouts and end of stream as
// JSON lines so a session can be replayed without the client.
class RecordingChannel : public LineChannel {
 public:
  RecordingChannel(LineChannel& inner, std::ostream& transcript);
  std::optional<std::string> ReadLine(std::chrono::milliseconds timeout) override;
  void WriteLine(std::string_view line) override;

 private:
  LineChannel& inner_;
  std::ostream& transcript_;
};

// Plays a recorded transcript back; writes are discarded.
class ReplayChannel : public LineChannel {
 public:
  // Throws ParseError for malformed transcripts.
  explicit ReplayChannel(std::string_view transcript);
  std::optional<std::string> ReadLine(std::chrono::milliseconds timeout) override;
  void WriteLine(std::string_view) override {}

 private:
  struct Event {
    enum class Kind { kLine, kTimeout, kClosed } kind;
    std::string line;
  };
  std::deque<Event> events_;
};

struct IpcOptions {
  std::chrono::milliseconds timeout{5000};
};

std::string HelloRecord(const EnvSetup& setup, const DiscreteActionSet& actions);
// Sends the server hello and waits for the client's. A version mismatch is
// answered with an error record and throws ProtocolError.
void ServerHandshake(LineChannel& channel, const EnvSetup& setup,
                     const DiscreteActionSet& actions, const IpcOptions& options);

std::string ResetRecord(const EscapeEnv& env, const EpisodeInfo& info);
std::string ObservationRecord(int step, const Observation& obs);
std::string ResultRecord(const StepResult& result);
// {"type":"action","index":i} or {"type":"action","omega":w,"v":v}.
// A "bye" record throws ChannelClosed; anything else throws ProtocolError.
VelocityCommand ParseActionRecord(std::string_view line,
                                  const DiscreteActionSet& actions);

// A policy living on the other end of a channel. The handshake must be
// completed before the first episode.
class ExternalPolicy : public Policy {
 public:
  ExternalPolicy(LineChannel& channel, IpcOptions options = {},
                 std::string label = "external");

  void Handshake(const EnvSetup& setup, const DiscreteActionSet& actions);
  // Sends the closing record.
  void Finish();

  std::string Label() const override { return label_; }
  bool Begin(const EscapeEnv& env, const Observation& obs,
             const EpisodeInfo& info) override;
  VelocityCommand Act(const EscapeEnv& env, const Observation& obs) override;
  void Observe(const StepResult& result) override;
  void End(bool failed, const std::string& reason) override;

 private:
  std::string ReadReply();

  LineChannel& channel_;
  IpcOptions options_;
  std::string label_;
  bool ready_ = false;
};

struct ServeOptions {
  bool train_mode = false;
  // 0 runs until the client says goodbye or disconnects.
  int episodes = 0;
  std::uint64_t seed = 0;
  EpisodeConfig episode;
  IpcOptions ipc;
};

struct ServeSummary {
  int episodes = 0;
  int protocol_failures = 0;
};

// Environment server for trainers: cycles through `scenarios`, sending an
// observation per step and applying hybrid guidance in training mode.
ServeSummary RunServeSession(LineChannel& channel, EscapeEnv& env,
                             const std::vector<Scenario>& scenarios,
                             const ServeOptions& options);

}  // namespace escape
