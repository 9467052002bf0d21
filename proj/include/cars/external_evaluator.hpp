#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "cars/evaluator.hpp"
#include "cars/json_io.hpp"

extern char** environ;

namespace cars {

struct ExternalOptions {
  std::chrono::milliseconds timeout{0};  // per sample; 0 disables
  std::size_t max_in_flight = 64;
};

/// Evaluator backed by a child process speaking line-delimited JSON.
///
/// Request  (stdin):  {"id":7,"params":{"C1":[1e-05],"fsw":[100000.0]}}
/// Response (stdout): {"id":7,"meas":{"vmean":[12.0]}}  or  {"id":7,"error":"..."}
///
/// Responses may arrive in any order. A response line that cannot be parsed
/// fails the sample whose id it names; if no id can be recovered the oldest
/// outstanding request is failed. The child runs under /bin/sh -c and stays
/// alive across batches.
class ExternalEvaluator : public Evaluator {
 public:
  explicit ExternalEvaluator(std::string command, ExternalOptions opts = {})
      : command_(std::move(command)), opts_(opts) {
    if (opts_.max_in_flight == 0) opts_.max_in_flight = 1;
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
      throw EvaluatorError(std::string("socketpair: ") + std::strerror(errno));
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, sv[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&fa, sv[1], STDOUT_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &fa, nullptr, const_cast<char**>(argv), environ);
    posix_spawn_file_actions_destroy(&fa);
    ::close(sv[1]);
    if (rc != 0) {
      ::close(sv[0]);
      throw EvaluatorError("cannot spawn evaluator '" + command_ + "': " + std::strerror(rc));
    }
    fd_ = sv[0];
  }

  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  ~ExternalEvaluator() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_WR);
      ::close(fd_);
    }
    if (pid_ > 0) {
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  const std::string& command() const noexcept { return command_; }

 protected:
  std::vector<EvaluationResult> do_evaluate(
      std::span<const EvaluationRequest> requests) override {
    using clock = std::chrono::steady_clock;
    std::vector<EvaluationResult> done;
    done.reserve(requests.size());
    if (requests.empty()) return done;
    if (dead_) throw TransportError("evaluator process is gone", {});

    std::map<std::uint64_t, clock::time_point> in_flight;
    std::deque<std::uint64_t> send_order;
    std::size_t next = 0;

    auto finish = [&](std::uint64_t id, EvaluationResult r) {
      if (in_flight.erase(id) == 0) return;  // late or unknown id
      r.id = id;
      done.push_back(std::move(r));
    };
    auto lost = [&](const std::string& why) -> TransportError {
      dead_ = true;
      return TransportError("evaluator '" + command_ + "': " + why, std::move(done));
    };

    while (done.size() < requests.size()) {
      while (next < requests.size() && in_flight.size() < opts_.max_in_flight) {
        const auto& rq = requests[next++];
        json line{{"id", rq.id}, {"params", value_map_to_json(rq.params)}};
        if (!send_line(line.dump())) throw lost("write failed");
        in_flight.emplace(rq.id, clock::now() + opts_.timeout);
        send_order.push_back(rq.id);
      }

      int wait_ms = -1;
      if (opts_.timeout.count() > 0) {
        auto earliest = clock::time_point::max();
        for (const auto& [id, deadline] : in_flight) earliest = std::min(earliest, deadline);
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(earliest - clock::now());
        wait_ms = static_cast<int>(std::max<long long>(0, left.count()) + 1);
      }

      pollfd pfd{fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, wait_ms);
      if (pr < 0 && errno != EINTR) throw lost(std::string("poll: ") + std::strerror(errno));
      if (pr > 0) {
        char chunk[65536];
        const ssize_t n = ::read(fd_, chunk, sizeof chunk);
        if (n < 0 && errno != EINTR && errno != EAGAIN) throw lost(std::string("read: ") + std::strerror(errno));
        if (n == 0) throw lost("process exited with " + std::to_string(in_flight.size()) + " request(s) outstanding");
        if (n > 0) buffer_.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = buffer_.find('\n')) != std::string::npos) {
          std::string text = buffer_.substr(0, pos);
          buffer_.erase(0, pos + 1);
          if (text.empty()) continue;
          if (auto parsed = parse_response(text)) {
            finish(parsed->id, std::move(*parsed));
          } else if (auto id = recover_id(text)) {
            finish(*id, {*id, {}, "malformed response"});
          } else {
            while (!send_order.empty() && !in_flight.count(send_order.front())) send_order.pop_front();
            if (!send_order.empty()) {
              const auto id = send_order.front();
              finish(id, {id, {}, "malformed response"});
            }
          }
        }
      }

      if (opts_.timeout.count() > 0) {
        const auto now = clock::now();
        std::vector<std::uint64_t> expired;
        for (const auto& [id, deadline] : in_flight)
          if (deadline <= now) expired.push_back(id);
        for (auto id : expired) finish(id, {id, {}, "timeout"});
      }
    }
    return done;
  }

 private:
  bool send_line(const std::string& s) {
    std::string data = s + '\n';
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  static std::optional<EvaluationResult> parse_response(const std::string& text) {
    try {
      const json j = json::parse(text);
      EvaluationResult r;
      r.id = j.at("id").get<std::uint64_t>();
      if (j.contains("error")) {
        r.error = j.at("error").is_string() ? j.at("error").get<std::string>() : j.at("error").dump();
        if (r.error.empty()) r.error = "error";
      } else {
        r.meas = value_map_from_json(j.at("meas"));
      }
      return r;
    } catch (const json::exception&) {
      return std::nullopt;
    }
  }

  static std::optional<std::uint64_t> recover_id(const std::string& text) {
    static const std::regex re(R"re("id"\s*:\s*([0-9]+))re");
    std::smatch m;
    if (std::regex_search(text, m, re)) return std::stoull(m[1].str());
    return std::nullopt;
  }

  std::string command_;
  ExternalOptions opts_;
  pid_t pid_ = -1;
  int fd_ = -1;
  bool dead_ = false;
  std::string buffer_;
};

}  // namespace cars
