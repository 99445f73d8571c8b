#include "geoprog/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace geoprog {

using nlohmann::json;

ExternalPolicy::ExternalPolicy(std::string command, double timeout_s)
    : command_(std::move(command)), timeout_s_(timeout_s) {
  int to_child[2];    // parent writes -> child stdin
  int from_child[2];  // child stdout -> parent reads
  if (pipe(to_child) != 0 || pipe(from_child) != 0)
    throw IoError("policy: pipe() failed");
  const pid_t pid = fork();
  if (pid < 0) throw IoError("policy: fork() failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), (char*)nullptr);
    _exit(127);
  }
  pid_ = pid;
  close(to_child[0]);
  close(from_child[1]);
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

ExternalPolicy::~ExternalPolicy() { shutdown(); }

void ExternalPolicy::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::optional<std::string> ExternalPolicy::transact(const std::string& line) {
  if (dead_ || pid_ <= 0) return std::nullopt;

  std::string payload = line;
  payload.push_back('\n');
  size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n = write(to_child_, payload.data() + written, payload.size() - written);
    if (n <= 0) {
      dead_ = true;
      return std::nullopt;
    }
    written += size_t(n);
  }

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s_);
  for (;;) {
    // Serve a complete line from the buffer first.
    const size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string out = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return out;
    }
    const auto remaining = deadline - std::chrono::steady_clock::now();
    const auto remaining_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count();
    if (remaining_ms <= 0) return std::nullopt;  // timeout: caller scores zero

    pollfd p{from_child_, POLLIN, 0};
    const int rv = poll(&p, 1, int(remaining_ms));
    if (rv < 0) {
      dead_ = true;
      return std::nullopt;
    }
    if (rv == 0) return std::nullopt;  // timeout
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n <= 0) {
      dead_ = true;  // child exited or closed stdout
      return std::nullopt;
    }
    buffer_.append(chunk, size_t(n));
  }
}

namespace {

json view_payload(const SolverView& view) {
  json payload = {{"problem_id", view.problem_id}};
  if (view.program) payload["program"] = *view.program;
  if (view.output) payload["output"] = value_to_json(*view.output);
  if (view.arg) payload["arg"] = value_to_json(*view.arg);
  if (view.visible_pairs) {
    json pairs = json::array();
    for (const IoPair& p : *view.visible_pairs)
      pairs.push_back({{"a", value_to_json(p.arg)}, {"o", value_to_json(p.output)}});
    payload["visible_pairs"] = pairs;
  }
  return payload;
}

std::optional<std::string> extract_text(const std::optional<std::string>& reply) {
  if (!reply) return std::nullopt;
  json j = json::parse(*reply, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j.at("text").is_string())
    return std::nullopt;
  return j.at("text").get<std::string>();
}

}  // namespace

std::optional<std::string> ExternalPolicy::propose(const ProposalRequest& request, Rng&) {
  json refs = json::array();
  for (const Problem* p : request.references) refs.push_back(p->to_json());
  json payload = {{"image", {{"id", request.image.id},
                             {"w", request.image.width},
                             {"h", request.image.height}}},
                  {"references", refs}};
  if (request.program) payload["program"] = *request.program;
  if (request.n_io) payload["n_io"] = request.n_io;
  json req = {{"kind", "propose"},
              {"mode", mode_tag(request.mode)},
              {"image_id", request.image.id},
              {"payload", payload}};
  return extract_text(transact(req.dump()));
}

std::optional<std::string> ExternalPolicy::solve(const SolverView& view, Rng&) {
  json req = {{"kind", "solve"},
              {"mode", mode_tag(view.mode)},
              {"image_id", view.image.id},
              {"payload", view_payload(view)}};
  return extract_text(transact(req.dump()));
}

}  // namespace geoprog
