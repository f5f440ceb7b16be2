#pragma once

// SemanticScorer backed by an external process speaking line-delimited JSON.
//
// Protocol (one JSON object per line, UTF-8):
//   engine -> plugin   {"id": <integer>, "a": <string>, "b": <string>}
//   plugin -> engine   {"id": <integer>, "score": <number in [0,1]>}
// Replies may arrive in any order. Closing the plugin's stdin (EOF) asks it
// to shut down. A reply that is missing, late, non-numeric or out of range
// is a scorer failure.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "legalir/scorer.hpp"

namespace legalir {

struct SubprocessScorerOptions {
  /// Maximum time without any reply bytes while requests are outstanding.
  std::chrono::milliseconds timeout{30000};
  /// Grace period after EOF before the plugin is terminated.
  std::chrono::milliseconds shutdown_grace{2000};
};

class SubprocessScorer final : public SemanticScorer {
 public:
  /// Starts `command` through /bin/sh -c.
  explicit SubprocessScorer(std::string command, SubprocessScorerOptions options = {})
      : command_(std::move(command)), options_(options) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
      throw ScorerFailure(std::string("socketpair: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw ScorerFailure(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
    ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);
  }

  SubprocessScorer(const SubprocessScorer&) = delete;
  SubprocessScorer& operator=(const SubprocessScorer&) = delete;

  ~SubprocessScorer() override { shutdown(); }

  double score(std::string_view a, std::string_view b) override {
    const TextPair p{a, b};
    return score_batch(std::span<const TextPair>(&p, 1)).front();
  }

  std::vector<double> score_batch(std::span<const TextPair> pairs) override {
    if (fd_ < 0) throw ScorerFailure("scorer process '" + command_ + "' is not running");

    std::string outbox;
    std::unordered_map<std::int64_t, std::size_t> pending;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto id = next_id_++;
      pending.emplace(id, i);
      nlohmann::json req = {{"id", id}, {"a", pairs[i].a}, {"b", pairs[i].b}};
      outbox += req.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
      outbox.push_back('\n');
    }

    std::vector<double> scores(pairs.size(), 0.0);
    std::size_t written = 0;
    auto last_progress = std::chrono::steady_clock::now();

    while (!pending.empty()) {
      pollfd pfd{fd_, static_cast<short>(POLLIN | (written < outbox.size() ? POLLOUT : 0)), 0};
      const auto waited = std::chrono::steady_clock::now() - last_progress;
      const auto left = options_.timeout - std::chrono::duration_cast<std::chrono::milliseconds>(waited);
      if (left.count() <= 0) fail("timed out waiting for scores", pending);

      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail(std::string("poll: ") + std::strerror(errno), pending);
      }
      if (rc == 0) fail("timed out waiting for scores", pending);

      if ((pfd.revents & POLLOUT) && written < outbox.size()) {
        const auto n = ::send(fd_, outbox.data() + written, outbox.size() - written, MSG_NOSIGNAL);
        if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
          fail(std::string("write to scorer: ") + std::strerror(errno), pending);
        }
        if (n > 0) written += static_cast<std::size_t>(n);
      }
      if (pfd.revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const auto n = ::recv(fd_, buf, sizeof buf, 0);
        if (n == 0) fail("scorer process closed its output", pending);
        if (n < 0) {
          if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
          fail(std::string("read from scorer: ") + std::strerror(errno), pending);
        }
        inbox_.append(buf, static_cast<std::size_t>(n));
        last_progress = std::chrono::steady_clock::now();
        drain_lines(pending, scores);
      }
    }
    return scores;
  }

  /// Single-flight: one request stream per process.
  bool concurrent_safe() const override { return false; }

  /// Sends EOF and reaps the process, terminating it after the grace period.
  void shutdown() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_WR);
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ > 0) {
      const auto deadline = std::chrono::steady_clock::now() + options_.shutdown_grace;
      int status = 0;
      while (::waitpid(pid_, &status, WNOHANG) == 0) {
        if (std::chrono::steady_clock::now() >= deadline) {
          ::kill(pid_, SIGKILL);
          ::waitpid(pid_, &status, 0);
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
      pid_ = -1;
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what,
                         const std::unordered_map<std::int64_t, std::size_t>& pending) {
    std::optional<std::size_t> first;
    for (const auto& [_, idx] : pending) {
      if (!first || idx < *first) first = idx;
    }
    // The stream is out of sync after a failure; stop the plugin.
    shutdown();
    throw ScorerFailure("scorer '" + command_ + "': " + what, first);
  }

  void drain_lines(std::unordered_map<std::int64_t, std::size_t>& pending,
                   std::vector<double>& scores) {
    std::size_t start = 0;
    for (auto nl = inbox_.find('\n'); nl != std::string::npos; nl = inbox_.find('\n', start)) {
      const std::string line = inbox_.substr(start, nl - start);
      start = nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

      nlohmann::json reply;
      try {
        reply = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        fail("malformed reply: " + line, pending);
      }
      if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_integer()) {
        fail("reply without integer id: " + line, pending);
      }
      const auto id = reply["id"].get<std::int64_t>();
      auto it = pending.find(id);
      if (it == pending.end()) fail("reply for unknown or repeated id " + std::to_string(id), pending);
      const auto idx = it->second;
      if (!reply.contains("score") || !reply["score"].is_number()) {
        const auto copy = std::unordered_map<std::int64_t, std::size_t>{{id, idx}};
        fail("non-numeric score for id " + std::to_string(id), copy);
      }
      const double v = reply["score"].get<double>();
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        const auto copy = std::unordered_map<std::int64_t, std::size_t>{{id, idx}};
        fail("score " + std::to_string(v) + " outside [0, 1] for id " + std::to_string(id), copy);
      }
      scores[idx] = v;
      pending.erase(it);
    }
    inbox_.erase(0, start);
  }

  std::string command_;
  SubprocessScorerOptions options_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::int64_t next_id_ = 0;
  std::string inbox_;
};

}  // namespace legalir
