// Deterministic bridge server used by the conformance tests.
//
//   bridge_server [mode] [param_count]
//
// Modes:
//   model      order-0 counts of the context bytes, add-one smoothed; the
//              top_k most frequent symbols are returned (ties: lower symbol)
//   duplicate  repeats the first entry
//   positive   returns a log-probability above zero
//   garbage    answers predict requests with a non-JSON line
//   exit       exits right after the handshake
//   silent     never answers predict requests
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lmz/byte_io.hpp"

using ordered = nlohmann::ordered_json;

namespace {

void send(const ordered& message) { std::cout << message.dump() << "\n" << std::flush; }

void send_error(const nlohmann::json& id, const std::string& text) {
  ordered reply;
  reply["type"] = "error";
  reply["id"] = id;
  reply["message"] = text;
  send(reply);
}

ordered model_entries(const std::vector<std::uint8_t>& context, std::uint32_t alphabet,
                      std::uint32_t top_k) {
  ordered entries = ordered::array();
  if (context.empty()) return entries;
  std::vector<std::uint64_t> counts(alphabet, 0);
  for (auto b : context)
    if (b < alphabet) ++counts[b];
  std::vector<std::uint32_t> order(alphabet);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return counts[a] > counts[b]; });
  const double total = static_cast<double>(context.size() + alphabet);
  for (std::uint32_t i = 0; i < std::min(top_k, alphabet); ++i) {
    const auto s = order[i];
    entries.push_back({s, std::log2(static_cast<double>(counts[s] + 1) / total)});
  }
  return entries;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "model";
  const std::uint64_t params = argc > 2 ? std::stoull(argv[2]) : 1234;
  std::uint32_t alphabet = 256;
  std::string line;
  while (std::getline(std::cin, line)) {
    const auto message = nlohmann::json::parse(line, nullptr, false);
    if (message.is_discarded() || !message.is_object()) {
      send_error(nullptr, "malformed request");
      continue;
    }
    const std::string type = message.value("type", "");
    if (type == "hello") {
      alphabet = message.value("alphabet_size", 256u);
      ordered reply;
      reply["v"] = 1;
      reply["type"] = "hello";
      reply["param_count"] = params;
      send(reply);
      if (mode == "exit") return 0;
    } else if (type == "predict") {
      if (mode == "silent") {
        std::this_thread::sleep_for(std::chrono::hours(1));
        continue;
      }
      if (mode == "garbage") {
        std::cout << "not json\n" << std::flush;
        continue;
      }
      const auto id = message.value("id", std::uint64_t{0});
      std::vector<std::uint8_t> context;
      try {
        context = lmz::base64_decode(message.value("context", ""));
      } catch (...) {
        send_error(id, "bad context");
        continue;
      }
      const auto top_k = message.value("top_k", 100u);
      auto entries = model_entries(context, alphabet, top_k);
      if (mode == "duplicate") {
        entries = ordered::array({{1, -1.0}, {1, -1.0}});
      } else if (mode == "positive") {
        entries = ordered::array({{1, 0.5}});
      }
      ordered reply;
      reply["type"] = "predict";
      reply["id"] = id;
      reply["entries"] = entries;
      send(reply);
    } else if (type == "bye") {
      return 0;
    } else {
      send_error(message.value("id", nlohmann::json()), "unknown message type '" + type + "'");
    }
  }
  return 0;
}
