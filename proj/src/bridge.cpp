#include "attr/bridge.hpp"

#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "attr/error.hpp"

namespace attr {

using nlohmann::json;

std::string encode_hello(std::size_t d) {
  return json{{"op", "hello"}, {"d", d}}.dump();
}

std::string encode_predict(const Matrix& batch) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < batch.cols(); ++j) row.push_back(batch(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"op", "predict"}, {"x", std::move(rows)}}.dump();
}

Vector decode_predict_reply(const std::string& line, std::size_t expected) {
  json reply = json::parse(line, nullptr, false);
  if (reply.is_discarded() || !reply.is_object())
    throw EvaluationFailure("bridge replied with malformed JSON");
  if (reply.contains("error")) {
    std::string msg = reply["error"].is_string() ? reply["error"].get<std::string>() : reply["error"].dump();
    throw EvaluationFailure("bridge error: " + msg);
  }
  if (!reply.contains("y") || !reply["y"].is_array())
    throw EvaluationFailure("bridge reply lacks a y array");
  const json& y = reply["y"];
  if (y.size() != expected)
    throw EvaluationFailure("bridge returned " + std::to_string(y.size()) + " outputs for " +
                            std::to_string(expected) + " rows");
  Vector out(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) {
    if (!y[i].is_number()) throw EvaluationFailure("bridge output is not a number");
    out(static_cast<Eigen::Index>(i)) = y[i].get<double>();
  }
  return out;
}

BridgeModel::BridgeModel(const std::string& command, std::size_t input_dim) : dim_(input_dim) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw BridgeHandshakeError("pipe: " + std::string(std::strerror(errno)));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw BridgeHandshakeError("pipe: " + std::string(std::strerror(errno)));
  }
  pid_t pid = fork();
  if (pid < 0) throw BridgeHandshakeError("fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  pid_ = pid;
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");

  std::string line;
  try {
    line = exchange(encode_hello(dim_));
  } catch (const EvaluationFailure& e) {
    throw BridgeHandshakeError(std::string("no handshake reply: ") + e.what());
  }
  json reply = json::parse(line, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || reply.value("ok", false) != true ||
      !reply.contains("d") || !reply["d"].is_number_integer() ||
      reply["d"].get<long long>() != static_cast<long long>(dim_))
    throw BridgeHandshakeError("unexpected handshake reply: " + line);
}

BridgeModel::~BridgeModel() {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::string BridgeModel::exchange(const std::string& request) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (std::fputs(request.c_str(), to_child_) < 0 || std::fputc('\n', to_child_) == EOF ||
      std::fflush(to_child_) != 0)
    throw EvaluationFailure("bridge process closed its input");
  char* buf = nullptr;
  std::size_t cap = 0;
  ssize_t len = getline(&buf, &cap, from_child_);
  if (len < 0) {
    std::free(buf);
    throw EvaluationFailure("bridge process closed its output");
  }
  std::string line(buf, static_cast<std::size_t>(len));
  std::free(buf);
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  return line;
}

Vector BridgeModel::predict(const Matrix& batch) const {
  if (batch.rows() == 0) return Vector(0);
  return decode_predict_reply(exchange(encode_predict(batch)), static_cast<std::size_t>(batch.rows()));
}

}  // namespace attr
