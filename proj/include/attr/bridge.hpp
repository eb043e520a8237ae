#pragma once

#include <cstddef>
#include <cstdio>
#include <memory>
#include <mutex>
#include <string>

#include "attr/model.hpp"

namespace attr {

// Client side of the line-delimited JSON model protocol over a child
// process's stdin/stdout:
//   -> {"op":"hello","d":D}           <- {"ok":true,"d":D}
//   -> {"op":"predict","x":[[...]]}   <- {"y":[...]}  or  {"error":"..."}
// Requests are serialized; one line per message.
class BridgeModel final : public Model {
 public:
  // Spawns `command` through /bin/sh and performs the handshake. Throws
  // BridgeHandshakeError if the process cannot start or answers wrongly.
  BridgeModel(const std::string& command, std::size_t input_dim);
  ~BridgeModel() override;

  BridgeModel(const BridgeModel&) = delete;
  BridgeModel& operator=(const BridgeModel&) = delete;

  std::size_t input_dim() const override { return dim_; }
  // Throws EvaluationFailure on an error reply or a broken pipe.
  Vector predict(const Matrix& batch) const override;
  bool thread_safe() const override { return true; }

 private:
  std::string exchange(const std::string& request) const;

  std::size_t dim_;
  int pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  mutable std::mutex mu_;
};

// Request/response encoding, exposed for tests.
std::string encode_hello(std::size_t d);
std::string encode_predict(const Matrix& batch);
// Throws EvaluationFailure on {"error":...} or a malformed reply.
Vector decode_predict_reply(const std::string& line, std::size_t expected);

}  // namespace attr
