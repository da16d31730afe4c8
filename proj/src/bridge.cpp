#include "lmz/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "lmz/byte_io.hpp"
#include "lmz/errors.hpp"

namespace lmz {

namespace {

using nlohmann::json;

constexpr double kFloorMass = 1.0 / 65536.0;

json parse_line(const std::string& line) {
  json message = json::parse(line, nullptr, false);
  if (message.is_discarded() || !message.is_object())
    fail(ErrorKind::protocol, "bridge sent a malformed line: " + line.substr(0, 200));
  return message;
}

void expect_type(const json& message, const std::string& type) {
  const auto it = message.find("type");
  if (it == message.end() || !it->is_string())
    fail(ErrorKind::protocol, "bridge message without a type");
  if (*it == "error")
    fail(ErrorKind::protocol,
         "bridge reported an error: " + message.value("message", std::string("?")));
  if (*it != type)
    fail(ErrorKind::protocol, "expected a '" + type + "' message, got '" +
                                  it->get<std::string>() + "'");
}

}  // namespace

std::string hello_request(std::uint32_t alphabet_size) {
  nlohmann::ordered_json message;
  message["v"] = kBridgeVersion;
  message["type"] = "hello";
  message["alphabet_size"] = alphabet_size;
  return message.dump();
}

std::uint64_t parse_hello_response(const std::string& line) {
  const json message = parse_line(line);
  expect_type(message, "hello");
  if (message.value("v", 0) != kBridgeVersion)
    fail(ErrorKind::protocol, "bridge speaks a different protocol version");
  const auto it = message.find("param_count");
  if (it == message.end() || !it->is_number_unsigned())
    fail(ErrorKind::protocol, "bridge hello lacks param_count");
  return it->get<std::uint64_t>();
}

std::string predict_request(std::uint64_t id, std::span<const std::uint8_t> context,
                            std::uint32_t alphabet_size, std::uint32_t top_k) {
  nlohmann::ordered_json message;
  message["type"] = "predict";
  message["id"] = id;
  message["context"] = base64_encode(context);
  message["alphabet_size"] = alphabet_size;
  message["top_k"] = top_k;
  return message.dump();
}

std::vector<PredictEntry> parse_predict_response(const std::string& line,
                                                 std::uint64_t expected_id,
                                                 std::uint32_t alphabet_size,
                                                 std::uint32_t top_k) {
  const json message = parse_line(line);
  expect_type(message, "predict");
  const auto id = message.find("id");
  if (id == message.end() || !id->is_number_unsigned() ||
      id->get<std::uint64_t>() != expected_id)
    fail(ErrorKind::protocol, "bridge answered out of order");
  const auto entries = message.find("entries");
  if (entries == message.end() || !entries->is_array())
    fail(ErrorKind::protocol, "bridge response lacks entries");
  if (entries->size() > top_k) fail(ErrorKind::protocol, "bridge sent more than top_k entries");

  std::vector<PredictEntry> out;
  std::vector<bool> seen(alphabet_size, false);
  for (const auto& entry : *entries) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_unsigned() ||
        !entry[1].is_number())
      fail(ErrorKind::protocol, "bridge entry must be [symbol, log2p]");
    const auto symbol = entry[0].get<std::uint64_t>();
    const double log2p = entry[1].get<double>();
    if (symbol >= alphabet_size) fail(ErrorKind::protocol, "bridge symbol out of range");
    if (seen[symbol]) fail(ErrorKind::protocol, "bridge repeated a symbol");
    if (!std::isfinite(log2p) || log2p > 0.0)
      fail(ErrorKind::protocol, "bridge log-probability must be finite and <= 0");
    seen[symbol] = true;
    out.push_back({static_cast<Symbol>(symbol), log2p});
  }
  return out;
}

std::string bye_request() { return json{{"type", "bye"}}.dump(); }

void complete_distribution(std::span<const PredictEntry> entries,
                           std::uint32_t alphabet_size, std::span<double> out) {
  if (out.size() != alphabet_size)
    fail(ErrorKind::invalid_argument, "output size differs from alphabet");
  if (entries.size() > alphabet_size) fail(ErrorKind::protocol, "too many entries");
  if (entries.empty()) {
    std::fill(out.begin(), out.end(), 1.0 / alphabet_size);
    return;
  }
  std::fill(out.begin(), out.end(), -1.0);
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : entries) {
    if (e.symbol >= alphabet_size) fail(ErrorKind::protocol, "symbol out of range");
    if (out[e.symbol] >= 0.0) fail(ErrorKind::protocol, "duplicate symbol");
    if (!std::isfinite(e.log2p) || e.log2p > 0.0)
      fail(ErrorKind::protocol, "log-probability must be finite and <= 0");
    out[e.symbol] = 0.0;
    top = std::max(top, e.log2p);
  }
  double weight = 0.0;
  for (const auto& e : entries) weight += std::exp2(e.log2p - top);
  const double rest = static_cast<double>(alphabet_size - entries.size()) * kFloorMass;
  if (rest >= 1.0) fail(ErrorKind::protocol, "alphabet too large for the floor mass");
  const double scale = (1.0 - rest) / weight;
  for (const auto& e : entries) out[e.symbol] = std::exp2(e.log2p - top) * scale;
  for (auto& p : out)
    if (p < 0.0) p = kFloorMass;
}

BridgeSession::BridgeSession(const std::string& command, std::uint32_t alphabet_size,
                             std::chrono::milliseconds timeout)
    : process_(split_command(command), timeout), alphabet_size_(alphabet_size) {
  process_.write_line(hello_request(alphabet_size));
  param_count_ = parse_hello_response(process_.read_line());
}

BridgeSession::~BridgeSession() {
  try {
    close();
  } catch (...) {
  }
}

std::vector<PredictEntry> BridgeSession::predict(std::span<const std::uint8_t> context,
                                                 std::uint32_t top_k) {
  if (!open_) fail(ErrorKind::predictor_unavailable, "bridge session is closed");
  const std::uint64_t id = next_id_++;
  process_.write_line(predict_request(id, context, alphabet_size_, top_k));
  return parse_predict_response(process_.read_line(), id, alphabet_size_, top_k);
}

void BridgeSession::close() {
  if (!open_) return;
  open_ = false;
  try {
    process_.write_line(bye_request());
  } catch (const Error&) {
  }
  process_.close();
}

BridgePredictor::BridgePredictor(const PredictorSpec& spec) : Predictor(spec) {
  if (spec.alphabet_size > 256)
    fail(ErrorKind::invalid_argument, "bridge predictors work on bytes");
  const long top_k = spec.get_int("top_k", 100);
  const double timeout = spec.get_double("timeout", 30.0);
  if (top_k < 1) fail(ErrorKind::invalid_argument, "top_k must be positive");
  if (!(timeout > 0)) fail(ErrorKind::invalid_argument, "timeout must be positive");
  top_k_ = static_cast<std::uint32_t>(std::min<long>(top_k, spec.alphabet_size));
  const auto cmd = spec.get("cmd");
  if (!cmd) fail(ErrorKind::invalid_argument, "bridge predictor needs cmd=...");
  session_ = std::make_unique<BridgeSession>(
      *cmd, spec.alphabet_size,
      std::chrono::milliseconds(static_cast<long>(timeout * 1000)));
}

void BridgePredictor::predict(std::span<const Symbol> context, std::span<double> out) {
  bytes_.assign(context.begin(), context.end());
  const auto entries = session_->predict(bytes_, top_k_);
  complete_distribution(entries, alphabet_size(), out);
}

ModelFootprint BridgePredictor::footprint() const {
  const auto params = session_->param_count();
  return {2 * params, params};
}

std::vector<std::string> replay_transcript(const std::string& command,
                                           const std::string& transcript,
                                           std::chrono::milliseconds timeout) {
  Subprocess process(split_command(command), timeout);
  std::vector<std::string> mismatches;
  std::istringstream in(transcript);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("> ", 0) == 0) {
      process.write_line(line.substr(2));
    } else if (line.rfind("< ", 0) == 0) {
      const std::string got = process.read_line();
      if (got != line.substr(2))
        mismatches.push_back("line " + std::to_string(number) + ": expected " +
                             line.substr(2) + " got " + got);
    } else {
      fail(ErrorKind::invalid_argument,
           "transcript line " + std::to_string(number) + " has no direction marker");
    }
  }
  process.close();
  return mismatches;
}

}  // namespace lmz
