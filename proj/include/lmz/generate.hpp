#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lmz/predictors.hpp"

namespace lmz {

enum class SampleMode { argmax, categorical };
const char* to_string(SampleMode mode);
SampleMode parse_sample_mode(const std::string& name);

struct SamplerConfig {
  SampleMode mode = SampleMode::argmax;
  std::uint64_t seed = 0;
  std::optional<std::size_t> top_k;
  std::size_t window = kDefaultWindow;
};

// Draws from the quantized PMF the coder would use. Argmax takes the
// lowest-index maximum. Categorical inverts the CDF of the (optionally
// top-k) masses with an exact integer draw from rng.
Symbol sample_from(const Pmf& pmf, const SamplerConfig& config, std::mt19937_64& rng);

// Stateful generator: the predictor is reset, then observes `prompt`, then
// every produced symbol.
class Sampler {
 public:
  Sampler(Predictor& predictor, SamplerConfig config);

  void observe(std::span<const Symbol> symbols);
  Symbol next();
  std::vector<Symbol> generate(std::size_t n);

  const std::vector<Symbol>& history() const { return history_; }

 private:
  std::span<const Symbol> context() const;

  Predictor& predictor_;
  SamplerConfig config_;
  std::mt19937_64 rng_;
  std::vector<Symbol> history_;
  Pmf pmf_;
  QuantizeScratch scratch_;
};

// n bytes continuing `prompt`.
std::vector<std::uint8_t> generate(Predictor& predictor, std::span<const std::uint8_t> prompt,
                                   std::size_t n, const SamplerConfig& config);

// Each row is completed independently from its first floor(width / 2)
// bytes. Row r uses seed + r in categorical mode.
std::vector<std::uint8_t> rowwise_image_continuation(Predictor& predictor,
                                                     std::span<const std::uint8_t> pixels,
                                                     std::size_t height, std::size_t width,
                                                     const SamplerConfig& config);

inline constexpr std::size_t kAudioPrompt = 1024;
inline constexpr std::size_t kAudioContinuation = 1024;

// Keeps the first 1024 bytes and generates the next 1024.
std::vector<std::uint8_t> audio_continuation(Predictor& predictor,
                                             std::span<const std::uint8_t> audio,
                                             const SamplerConfig& config);

// Empirical byte entropy in bits.
double byte_entropy(std::span<const std::uint8_t> bytes);

// JSON sidecar describing a generation run.
std::string generation_metadata(const Predictor& predictor, const SamplerConfig& config,
                                std::size_t prompt_bytes, std::size_t generated_bytes);

}  // namespace lmz
