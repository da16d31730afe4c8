#include "lmz/generate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "lmz/errors.hpp"
#include "lmz/sequence_coder.hpp"

namespace lmz {

const char* to_string(SampleMode mode) {
  return mode == SampleMode::argmax ? "argmax" : "categorical";
}

SampleMode parse_sample_mode(const std::string& name) {
  if (name == "argmax") return SampleMode::argmax;
  if (name == "categorical") return SampleMode::categorical;
  fail(ErrorKind::invalid_argument, "unknown sampling mode '" + name + "'");
}

namespace {

// Uniform integer in [0, bound) by rejection, independent of the standard
// library's distribution algorithms.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do r = rng();
  while (r >= limit);
  return r % bound;
}

}  // namespace

Symbol sample_from(const Pmf& pmf, const SamplerConfig& config, std::mt19937_64& rng) {
  const std::size_t n = pmf.alphabet_size();
  if (config.mode == SampleMode::argmax) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < n; ++s)
      if (pmf.mass(s) > pmf.mass(best)) best = s;
    return static_cast<Symbol>(best);
  }
  if (!config.top_k || *config.top_k >= n) {
    const auto target = static_cast<std::uint32_t>(draw_below(rng, pmf.total()));
    return static_cast<Symbol>(pmf.find(target));
  }
  if (*config.top_k == 0) fail(ErrorKind::invalid_argument, "top_k must be positive");
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  const auto k = static_cast<std::ptrdiff_t>(*config.top_k);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](auto a, auto b) {
    return pmf.mass(a) != pmf.mass(b) ? pmf.mass(a) > pmf.mass(b) : a < b;
  });
  order.resize(*config.top_k);
  std::sort(order.begin(), order.end());
  std::uint64_t sum = 0;
  for (auto s : order) sum += pmf.mass(s);
  std::uint64_t target = draw_below(rng, sum);
  for (auto s : order) {
    if (target < pmf.mass(s)) return static_cast<Symbol>(s);
    target -= pmf.mass(s);
  }
  return static_cast<Symbol>(order.back());
}

Sampler::Sampler(Predictor& predictor, SamplerConfig config)
    : predictor_(predictor), config_(config), rng_(config.seed) {
  if (config_.top_k && *config_.top_k > predictor_.alphabet_size())
    fail(ErrorKind::invalid_argument, "top_k exceeds the alphabet");
  if (config_.window == 0) fail(ErrorKind::invalid_argument, "window must be positive");
  predictor_.reset();
}

std::span<const Symbol> Sampler::context() const {
  const std::size_t start = history_.size() > config_.window ? history_.size() - config_.window : 0;
  return std::span(history_).subspan(start);
}

void Sampler::observe(std::span<const Symbol> symbols) {
  for (auto s : symbols) {
    if (s >= predictor_.alphabet_size())
      fail(ErrorKind::invalid_argument, "prompt symbol outside the alphabet");
    predictor_.update(context(), s);
    history_.push_back(s);
  }
}

Symbol Sampler::next() {
  predictor_.predict_pmf(context(), pmf_, scratch_);
  const Symbol s = sample_from(pmf_, config_, rng_);
  predictor_.update(context(), s);
  history_.push_back(s);
  return s;
}

std::vector<Symbol> Sampler::generate(std::size_t n) {
  std::vector<Symbol> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

std::vector<std::uint8_t> generate(Predictor& predictor, std::span<const std::uint8_t> prompt,
                                   std::size_t n, const SamplerConfig& config) {
  Sampler sampler(predictor, config);
  sampler.observe(to_symbols(prompt));
  return to_bytes(sampler.generate(n));
}

std::vector<std::uint8_t> rowwise_image_continuation(Predictor& predictor,
                                                     std::span<const std::uint8_t> pixels,
                                                     std::size_t height, std::size_t width,
                                                     const SamplerConfig& config) {
  if (pixels.size() != height * width)
    fail(ErrorKind::invalid_argument, "pixel count does not match the image size");
  if (width < 2) fail(ErrorKind::invalid_argument, "rows need at least 2 pixels");
  const std::size_t half = width / 2;
  std::vector<std::uint8_t> out;
  out.reserve(pixels.size());
  for (std::size_t r = 0; r < height; ++r) {
    const auto prompt = pixels.subspan(r * width, half);
    SamplerConfig row_config = config;
    row_config.seed = config.seed + r;
    const auto completion = generate(predictor, prompt, width - half, row_config);
    out.insert(out.end(), prompt.begin(), prompt.end());
    out.insert(out.end(), completion.begin(), completion.end());
  }
  return out;
}

std::vector<std::uint8_t> audio_continuation(Predictor& predictor,
                                             std::span<const std::uint8_t> audio,
                                             const SamplerConfig& config) {
  if (audio.size() < kAudioPrompt)
    fail(ErrorKind::invalid_argument, "audio continuation needs a 1024-byte prompt");
  const auto prompt = audio.first(kAudioPrompt);
  auto out = std::vector<std::uint8_t>(prompt.begin(), prompt.end());
  const auto tail = generate(predictor, prompt, kAudioContinuation, config);
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

double byte_entropy(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return 0;
  std::array<std::size_t, 256> counts{};
  for (auto b : bytes) ++counts[b];
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(bytes.size());
    h -= p * std::log2(p);
  }
  return h;
}

std::string generation_metadata(const Predictor& predictor, const SamplerConfig& config,
                                std::size_t prompt_bytes, std::size_t generated_bytes) {
  nlohmann::ordered_json j;
  j["predictor"] = predictor.spec().canonical();
  j["mode"] = to_string(config.mode);
  j["seed"] = config.seed;
  j["top_k"] = config.top_k ? nlohmann::ordered_json(*config.top_k) : nlohmann::ordered_json();
  j["window"] = config.window;
  j["prompt_bytes"] = prompt_bytes;
  j["generated_bytes"] = generated_bytes;
  return j.dump(2) + "\n";
}

}  // namespace lmz
