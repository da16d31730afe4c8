#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lmz/predictors.hpp"
#include "lmz/subprocess.hpp"

namespace lmz {

// Protocol v1: one JSON object per line over the child's stdin/stdout.
//
//   client  {"v":1,"type":"hello","alphabet_size":A}
//   server  {"v":1,"type":"hello","param_count":N}
//   client  {"type":"predict","id":I,"context":"<base64>","alphabet_size":A,"top_k":K}
//   server  {"type":"predict","id":I,"entries":[[symbol,log2p],...]}
//   server  {"type":"error","id":I,"message":"..."}     (instead of predict)
//   client  {"type":"bye"}
//
// Ids start at 1 and increase by one per request. Entries hold at most K
// distinct symbols below A with finite log2p <= 0.
inline constexpr int kBridgeVersion = 1;

struct PredictEntry {
  Symbol symbol;
  double log2p;
};

std::string hello_request(std::uint32_t alphabet_size);
// Returns the declared param_count.
std::uint64_t parse_hello_response(const std::string& line);

std::string predict_request(std::uint64_t id, std::span<const std::uint8_t> context,
                            std::uint32_t alphabet_size, std::uint32_t top_k);
// Validates id, symbol range, duplicates and log-probabilities; any
// violation is a protocol error.
std::vector<PredictEntry> parse_predict_response(const std::string& line,
                                                 std::uint64_t expected_id,
                                                 std::uint32_t alphabet_size,
                                                 std::uint32_t top_k);

std::string bye_request();

// Full distribution from top-k entries: the listed symbols share
// 1 - (A - k) 2^-16 in proportion to 2^log2p, every other symbol gets 2^-16.
void complete_distribution(std::span<const PredictEntry> entries,
                           std::uint32_t alphabet_size, std::span<double> out);

class BridgeSession {
 public:
  BridgeSession(const std::string& command, std::uint32_t alphabet_size,
                std::chrono::milliseconds timeout);
  ~BridgeSession();

  std::uint64_t param_count() const { return param_count_; }
  std::vector<PredictEntry> predict(std::span<const std::uint8_t> context,
                                    std::uint32_t top_k);
  void close();

 private:
  Subprocess process_;
  std::uint32_t alphabet_size_;
  std::uint64_t param_count_ = 0;
  std::uint64_t next_id_ = 1;
  bool open_ = true;
};

// Spec keys: cmd (command line), top_k (default 100), timeout (seconds,
// default 30). Symbols are sent as bytes, so alphabet_size <= 256.
class BridgePredictor final : public Predictor {
 public:
  explicit BridgePredictor(const PredictorSpec& spec);

  void predict(std::span<const Symbol> context, std::span<double> out) override;
  // 2 bytes per declared parameter.
  ModelFootprint footprint() const override;

 private:
  std::unique_ptr<BridgeSession> session_;
  std::uint32_t top_k_;
  std::vector<std::uint8_t> bytes_;
};

// Replays a recorded transcript ("> " client lines, "< " server lines)
// against a server command. Returns a list of mismatch descriptions; empty
// means every server line matched byte for byte.
std::vector<std::string> replay_transcript(const std::string& command,
                                           const std::string& transcript,
                                           std::chrono::milliseconds timeout);

}  // namespace lmz
