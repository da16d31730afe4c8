#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace lmz {

enum class PredictorKind {
  uniform,
  adaptive_freq,
  context_backoff,
  codec_inverted,
  bridge,
};

const char* to_string(PredictorKind kind);

// Identity and configuration of a predictor. The canonical text form is
//   kind:key=value,key=value
// with keys sorted and values percent-encoded outside [A-Za-z0-9._~/-]. It is
// embedded in containers, so decoding is self-describing.
struct PredictorSpec {
  PredictorKind kind = PredictorKind::uniform;
  std::uint32_t alphabet_size = 256;
  std::map<std::string, std::string> parameters;

  // Accepts aliases (backoff, adaptive, codec) and fills in defaults.
  static PredictorSpec parse(std::string_view text);
  std::string canonical() const;

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;

  friend bool operator==(const PredictorSpec&, const PredictorSpec&) = default;
};

std::string percent_encode(std::string_view raw);
std::string percent_decode(std::string_view encoded);

}  // namespace lmz
