#include "lmz/predictor_spec.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "lmz/errors.hpp"

namespace lmz {

namespace {

PredictorKind parse_kind(std::string_view name) {
  if (name == "uniform") return PredictorKind::uniform;
  if (name == "adaptive_freq" || name == "adaptive")
    return PredictorKind::adaptive_freq;
  if (name == "context_backoff" || name == "backoff")
    return PredictorKind::context_backoff;
  if (name == "codec_inverted" || name == "codec")
    return PredictorKind::codec_inverted;
  if (name == "bridge") return PredictorKind::bridge;
  fail(ErrorKind::invalid_argument,
       "unknown predictor kind '" + std::string(name) + "'");
}

void set_default(PredictorSpec& spec, const std::string& key,
                 const std::string& value) {
  spec.parameters.try_emplace(key, value);
}

bool unreserved(unsigned char c) {
  return std::isalnum(c) || c == '.' || c == '_' || c == '~' || c == '/' ||
         c == '-';
}

}  // namespace

const char* to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::uniform: return "uniform";
    case PredictorKind::adaptive_freq: return "adaptive_freq";
    case PredictorKind::context_backoff: return "context_backoff";
    case PredictorKind::codec_inverted: return "codec_inverted";
    case PredictorKind::bridge: return "bridge";
  }
  return "unknown";
}

std::string percent_encode(std::string_view raw) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : raw) {
    if (unreserved(c)) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

std::string percent_decode(std::string_view encoded) {
  std::string out;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded[i] != '%') {
      out.push_back(encoded[i]);
      continue;
    }
    unsigned value = 0;
    if (i + 2 >= encoded.size())
      fail(ErrorKind::invalid_argument, "truncated percent escape");
    auto [ptr, ec] = std::from_chars(encoded.data() + i + 1,
                                     encoded.data() + i + 3, value, 16);
    if (ec != std::errc{} || ptr != encoded.data() + i + 3)
      fail(ErrorKind::invalid_argument, "bad percent escape");
    out.push_back(static_cast<char>(value));
    i += 2;
  }
  return out;
}

PredictorSpec PredictorSpec::parse(std::string_view text) {
  PredictorSpec spec;
  const auto colon = text.find(':');
  spec.kind = parse_kind(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0)
        fail(ErrorKind::invalid_argument,
             "predictor parameter must be key=value: " + std::string(item));
      std::string key(item.substr(0, eq));
      std::string value = percent_decode(item.substr(eq + 1));
      if (!spec.parameters.emplace(key, std::move(value)).second)
        fail(ErrorKind::invalid_argument, "duplicate parameter " + key);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }

  if (auto it = spec.parameters.find("alphabet_size");
      it != spec.parameters.end()) {
    char* end = nullptr;
    const long value = std::strtol(it->second.c_str(), &end, 10);
    if (*end != '\0' || value < 2 || value > 65536)
      fail(ErrorKind::invalid_argument, "alphabet_size must be in [2, 65536]");
    spec.alphabet_size = static_cast<std::uint32_t>(value);
    spec.parameters.erase(it);
  }

  switch (spec.kind) {
    case PredictorKind::uniform:
      break;
    case PredictorKind::adaptive_freq:
      set_default(spec, "alpha", "1");
      break;
    case PredictorKind::context_backoff:
      set_default(spec, "order", "3");
      set_default(spec, "adapt", "1");
      break;
    case PredictorKind::codec_inverted:
      set_default(spec, "codec", "deflate");
      break;
    case PredictorKind::bridge:
      if (!spec.parameters.count("cmd"))
        fail(ErrorKind::invalid_argument, "bridge predictor needs cmd=...");
      set_default(spec, "top_k", "100");
      set_default(spec, "timeout", "30");
      break;
  }
  return spec;
}

std::string PredictorSpec::canonical() const {
  std::map<std::string, std::string> all = parameters;
  all["alphabet_size"] = std::to_string(alphabet_size);
  std::string out = to_string(kind);
  char sep = ':';
  for (const auto& [key, value] : all) {
    out.push_back(sep);
    out += key;
    out.push_back('=');
    out += percent_encode(value);
    sep = ',';
  }
  return out;
}

std::optional<std::string> PredictorSpec::get(const std::string& key) const {
  if (auto it = parameters.find(key); it != parameters.end()) return it->second;
  return std::nullopt;
}

std::string PredictorSpec::get_or(const std::string& key,
                                  const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double PredictorSpec::get_double(const std::string& key, double fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  char* end = nullptr;
  const double parsed = std::strtod(value->c_str(), &end);
  if (end == value->c_str() || *end != '\0')
    fail(ErrorKind::invalid_argument, "parameter " + key + " is not a number");
  return parsed;
}

long PredictorSpec::get_int(const std::string& key, long fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  char* end = nullptr;
  const long parsed = std::strtol(value->c_str(), &end, 10);
  if (end == value->c_str() || *end != '\0')
    fail(ErrorKind::invalid_argument, "parameter " + key + " is not an integer");
  return parsed;
}

}  // namespace lmz
