#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "lmz/bridge.hpp"
#include "lmz/datapipe.hpp"
#include "lmz/errors.hpp"
#include "lmz/sequence_coder.hpp"

using namespace lmz;
using namespace std::chrono_literals;

namespace {

const std::string kServer = LMZ_BRIDGE_SERVER;

std::string server(const std::string& mode, std::uint64_t params = 1234) {
  return kServer + " " + mode + " " + std::to_string(params);
}

PredictorSpec bridge_spec(const std::string& mode, const std::string& top_k = "100",
                          const std::string& timeout = "30") {
  PredictorSpec spec;
  spec.kind = PredictorKind::bridge;
  spec.parameters["cmd"] = server(mode);
  spec.parameters["top_k"] = top_k;
  spec.parameters["timeout"] = timeout;
  return spec;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::io;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("handshake reports the parameter count") {
  BridgeSession session(server("model", 987654321), 256, 10s);
  CHECK(session.param_count() == 987654321);
  session.close();
  CHECK(kind_of([&] { session.predict({}, 1); }) == ErrorKind::predictor_unavailable);

  BridgePredictor predictor(bridge_spec("model"));
  CHECK(predictor.footprint().serialized_bytes == 2 * 1234);
}

TEST_CASE("request lines follow the wire format") {
  CHECK(hello_request(256) == R"({"v":1,"type":"hello","alphabet_size":256})");
  const std::vector<std::uint8_t> aab{'a', 'a', 'b'};
  CHECK(predict_request(2, aab, 256, 3) ==
        R"({"type":"predict","id":2,"context":"YWFi","alphabet_size":256,"top_k":3})");
  CHECK(bye_request() == R"({"type":"bye"})");
  CHECK(parse_hello_response(R"({"v":1,"type":"hello","param_count":7})") == 7);
  CHECK(kind_of([] { parse_hello_response(R"({"v":2,"type":"hello","param_count":7})"); }) ==
        ErrorKind::protocol);
}

TEST_CASE("response validation") {
  const auto ok = parse_predict_response(
      R"({"type":"predict","id":5,"entries":[[3,-1.5],[0,-0.5]]})", 5, 256, 2);
  REQUIRE(ok.size() == 2);
  CHECK(ok[0].symbol == 3);
  CHECK(ok[1].log2p == -0.5);
  const char* bad[] = {
      R"({"type":"predict","id":4,"entries":[]})",
      R"({"type":"predict","id":5,"entries":[[1,-1],[2,-1],[3,-1]]})",
      R"({"type":"predict","id":5,"entries":[[256,-1]]})",
      R"({"type":"predict","id":5,"entries":[[1,-1],[1,-2]]})",
      R"({"type":"predict","id":5,"entries":[[1,0.25]]})",
      R"({"type":"predict","id":5,"entries":[[1]]})",
      R"({"type":"predict","id":5})",
      R"({"type":"error","id":5,"message":"oops"})",
      R"(not json)",
  };
  for (const char* line : bad)
    CHECK(kind_of([&] { parse_predict_response(line, 5, 256, 2); }) == ErrorKind::protocol);
}

TEST_CASE("completion of top-k entries") {
  constexpr std::uint32_t A = 256;
  constexpr double floor_mass = 1.0 / 65536;
  std::vector<double> out(A);

  // k = A: plain renormalization.
  std::vector<PredictEntry> all;
  double z = 0;
  for (std::uint32_t s = 0; s < A; ++s) {
    all.push_back({static_cast<Symbol>(s), -1.0 - 0.01 * s});
    z += std::exp2(-1.0 - 0.01 * s);
  }
  complete_distribution(all, A, out);
  for (std::uint32_t s = 0; s < A; ++s)
    REQUIRE(out[s] == doctest::Approx(std::exp2(-1.0 - 0.01 * s) / z).epsilon(1e-12));

  // k = 1: the single entry takes everything but the floors.
  const PredictEntry one[] = {{42, -3.0}};
  complete_distribution(one, A, out);
  CHECK(out[42] == doctest::Approx(1.0 - (A - 1) * floor_mass).epsilon(1e-15));
  CHECK(out[0] == floor_mass);

  // Empty: uniform.
  complete_distribution({}, A, out);
  for (double p : out) REQUIRE(p == doctest::Approx(1.0 / A).epsilon(1e-15));

  // Random k = 100 responses.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logp(-30.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Symbol> symbols(A);
    std::iota(symbols.begin(), symbols.end(), Symbol{0});
    std::shuffle(symbols.begin(), symbols.end(), rng);
    std::vector<PredictEntry> entries;
    for (int i = 0; i < 100; ++i) entries.push_back({symbols[i], logp(rng)});
    complete_distribution(entries, A, out);
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    REQUIRE(std::fabs(sum - 1.0) < 1e-12);
    for (std::size_t i = 100; i < A; ++i) REQUIRE(out[symbols[i]] == floor_mass);
    for (std::size_t i = 0; i < 100; ++i)
      for (std::size_t j = 0; j < 100; ++j)
        if (entries[i].log2p > entries[j].log2p)
          REQUIRE(out[entries[i].symbol] >= out[entries[j].symbol]);
  }
}

TEST_CASE("2048 sequential requests keep ids in step") {
  BridgeSession session(server("model"), 256, 30s);
  const auto data = make_text_fixture(2048, 3);
  for (std::size_t i = 0; i < 2048; ++i) {
    const auto entries = session.predict(std::span(data).first(i), 4);
    REQUIRE(entries.size() == (i == 0 ? 0u : 4u));
  }
}

TEST_CASE("coding through the bridge round-trips") {
  BridgePredictor predictor(bridge_spec("model", "16"));
  const auto data = make_text_fixture(3000, 4);
  const auto symbols = to_symbols(data);
  SequenceOptions options;
  options.segment = 1024;
  options.window = 512;
  const auto encoded = encode_sequence(predictor, symbols, options);
  CHECK(encoded.size() < 8 * data.size());
  const auto decoded = decode_sequence(predictor, encoded, symbols.size(), options);
  CHECK(decoded == symbols);
}

TEST_CASE("misbehaving servers surface as errors") {
  CHECK(kind_of([] { BridgePredictor p(bridge_spec("duplicate")); std::vector<double> out(256);
                     p.predict({}, out); }) == ErrorKind::protocol);
  CHECK(kind_of([] { BridgePredictor p(bridge_spec("positive")); std::vector<double> out(256);
                     p.predict({}, out); }) == ErrorKind::protocol);
  CHECK(kind_of([] { BridgePredictor p(bridge_spec("garbage")); std::vector<double> out(256);
                     p.predict({}, out); }) == ErrorKind::protocol);
  CHECK(kind_of([] { BridgePredictor p(bridge_spec("exit")); std::vector<double> out(256);
                     p.predict({}, out); }) == ErrorKind::predictor_unavailable);
  const auto start = std::chrono::steady_clock::now();
  CHECK(kind_of([] { BridgePredictor p(bridge_spec("silent", "100", "0.3")); std::vector<double> out(256);
                     p.predict({}, out); }) == ErrorKind::predictor_unavailable);
  CHECK(std::chrono::steady_clock::now() - start < 10s);
  CHECK(kind_of([] { BridgeSession s("/nonexistent/lmz-bridge", 256, 1s); }) ==
        ErrorKind::predictor_unavailable);
  auto big = bridge_spec("model");
  big.alphabet_size = 512;
  CHECK(kind_of([&] { BridgePredictor p(big); }) == ErrorKind::invalid_argument);
}

TEST_CASE("reference transcript replays byte for byte") {
  const auto transcript = read_file(std::string(LMZ_FIXTURES_DIR) + "/bridge_v1.transcript");
  REQUIRE(!transcript.empty());
  const auto mismatches = replay_transcript(server("model"), transcript, 10s);
  for (const auto& m : mismatches) INFO(m);
  CHECK(mismatches.empty());
  // The client side of the transcript is what BridgeSession sends.
  CHECK(transcript.find("> " + hello_request(256) + "\n") != std::string::npos);
  const std::vector<std::uint8_t> ctx{0, 1, 1, 1};
  CHECK(transcript.find("> " + predict_request(3, ctx, 256, 1) + "\n") != std::string::npos);

  const auto other = replay_transcript(server("model", 99), transcript, 10s);
  CHECK(other.size() == 1);
}
