#include "lmz/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmz/bridge.hpp"
#include "lmz/byte_io.hpp"
#include "lmz/errors.hpp"

namespace lmz {

namespace {

PredictorSpec bare_spec(PredictorKind kind, std::uint32_t alphabet_size) {
  PredictorSpec spec;
  spec.kind = kind;
  spec.alphabet_size = alphabet_size;
  return spec;
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void check_output(std::span<double> out, std::uint32_t alphabet_size) {
  if (out.size() != alphabet_size)
    fail(ErrorKind::invalid_argument, "output size differs from alphabet");
}

constexpr double kInvertFloor = 1.0 / 65536.0;

}  // namespace

void Predictor::predict_pmf(std::span<const Symbol> context, Pmf& out,
                            QuantizeScratch& scratch) {
  probabilities_.resize(alphabet_size());
  predict(context, probabilities_);
  quantize_into(probabilities_, pmf_bits_for(alphabet_size()), out, scratch);
}

UniformPredictor::UniformPredictor(std::uint32_t alphabet_size)
    : Predictor(bare_spec(PredictorKind::uniform, alphabet_size)) {
  std::vector<double> flat(alphabet_size, 1.0 / alphabet_size);
  cached_ = quantize(flat, pmf_bits_for(alphabet_size));
}

void UniformPredictor::predict(std::span<const Symbol>, std::span<double> out) {
  check_output(out, alphabet_size());
  std::fill(out.begin(), out.end(), 1.0 / alphabet_size());
}

void UniformPredictor::predict_pmf(std::span<const Symbol>, Pmf& out, QuantizeScratch&) {
  out = cached_;
}

AdaptiveFrequencyPredictor::AdaptiveFrequencyPredictor(std::uint32_t alphabet_size,
                                                       double alpha)
    : Predictor([&] {
        auto spec = bare_spec(PredictorKind::adaptive_freq, alphabet_size);
        spec.parameters["alpha"] = format_number(alpha);
        return spec;
      }()),
      alpha_(alpha),
      counts_(alphabet_size, 0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    fail(ErrorKind::invalid_argument, "alpha must be positive");
}

void AdaptiveFrequencyPredictor::predict(std::span<const Symbol>, std::span<double> out) {
  check_output(out, alphabet_size());
  const double denominator = static_cast<double>(total_) + alpha_ * alphabet_size();
  for (std::size_t y = 0; y < out.size(); ++y)
    out[y] = (static_cast<double>(counts_[y]) + alpha_) / denominator;
}

void AdaptiveFrequencyPredictor::update(std::span<const Symbol>, Symbol observed) {
  if (observed >= alphabet_size())
    fail(ErrorKind::invalid_argument, "symbol outside alphabet");
  ++counts_[observed];
  ++total_;
}

void AdaptiveFrequencyPredictor::reset() {
  std::fill(counts_.begin(), counts_.end(), 0);
  total_ = 0;
}

ContextBackoffPredictor::ContextBackoffPredictor(std::uint32_t alphabet_size,
                                                 unsigned order, bool adapt,
                                                 std::shared_ptr<const ContextStats> trained)
    : ContextBackoffPredictor(
          [&] {
            auto spec = bare_spec(PredictorKind::context_backoff, alphabet_size);
            spec.parameters["order"] = std::to_string(order);
            spec.parameters["adapt"] = adapt ? "1" : "0";
            return spec;
          }(),
          std::move(trained)) {}

ContextBackoffPredictor::ContextBackoffPredictor(PredictorSpec spec,
                                                 std::shared_ptr<const ContextStats> trained)
    : Predictor(std::move(spec)),
      order_(static_cast<unsigned>(this->spec().get_int("order", 3))),
      adapt_(this->spec().get_int("adapt", 1) != 0),
      trained_(std::move(trained)),
      live_(order_, this->spec().alphabet_size) {
  if (this->spec().get_int("order", 3) < 0 || order_ > 255)
    fail(ErrorKind::invalid_argument, "order must be in [0, 255]");
  if (trained_ && trained_->alphabet_size() != alphabet_size())
    fail(ErrorKind::predictor_mismatch, "trained table has a different alphabet");
}

void ContextBackoffPredictor::predict(std::span<const Symbol> context,
                                      std::span<double> out) {
  check_output(out, alphabet_size());
  const ContextStats* sources[2];
  std::size_t count = 0;
  if (trained_) sources[count++] = trained_.get();
  if (adapt_ && (!live_empty_ || count == 0)) sources[count++] = &live_;
  if (count == 0) {
    std::fill(out.begin(), out.end(), 1.0 / alphabet_size());
    return;
  }
  backoff_distribution(std::span(sources, count), context, order_, out);
}

void ContextBackoffPredictor::update(std::span<const Symbol> context, Symbol observed) {
  if (!adapt_) return;
  live_.update(context, observed);
  live_empty_ = false;
}

void ContextBackoffPredictor::reset() {
  if (live_empty_) return;
  live_.clear();
  live_empty_ = true;
}

ModelFootprint ContextBackoffPredictor::footprint() const {
  if (!trained_) return {};
  return {trained_->serialized_size(order_), std::nullopt};
}

void invert_codec(const CodeLengthFn& code_length, std::span<const std::uint8_t> context,
                  std::size_t candidate_count, std::span<double> out) {
  if (candidate_count == 0 || candidate_count > 256 || out.size() != candidate_count)
    fail(ErrorKind::invalid_argument, "candidate count must be in [1, 256]");
  std::vector<std::uint8_t> extended(context.begin(), context.end());
  extended.push_back(0);
  double shortest = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < candidate_count; ++b) {
    extended.back() = static_cast<std::uint8_t>(b);
    out[b] = code_length(extended);
    shortest = std::min(shortest, out[b]);
  }
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp2(shortest - v);
    sum += v;
  }
  double floored = 0.0;
  for (auto& v : out) {
    v = std::max(v / sum, kInvertFloor);
    floored += v;
  }
  for (auto& v : out) v /= floored;
}

CodecInvertedPredictor::CodecInvertedPredictor(const std::string& codec_id,
                                               std::uint32_t alphabet_size)
    : Predictor([&] {
        auto spec = bare_spec(PredictorKind::codec_inverted, alphabet_size);
        spec.parameters["codec"] = codec_id;
        return spec;
      }()),
      codec_(make_codec(codec_id)) {
  if (alphabet_size > 256)
    fail(ErrorKind::invalid_argument, "codec inversion works on bytes");
}

void CodecInvertedPredictor::predict(std::span<const Symbol> context,
                                     std::span<double> out) {
  check_output(out, alphabet_size());
  scratch_.assign(context.begin(), context.end());
  try {
    invert_codec([this](std::span<const std::uint8_t> bytes) {
                   return codec_->code_length_bits(bytes);
                 },
                 scratch_, alphabet_size(), out);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) throw;
    fail(ErrorKind::predictor_unavailable, std::string("codec failed: ") + e.what());
  }
}

std::shared_ptr<const ContextStats> load_trie(const std::filesystem::path& path,
                                              const std::string& expected_sha256) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path.string());
  } catch (const Error& e) {
    fail(ErrorKind::predictor_unavailable, e.what());
  }
  if (!expected_sha256.empty() && sha256_hex(bytes) != expected_sha256)
    fail(ErrorKind::predictor_mismatch, "trie " + path.string() + " has a different hash");
  return std::make_shared<const ContextStats>(ContextStats::deserialize(bytes));
}

std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec,
                                          const ArtifactStore& store) {
  switch (spec.kind) {
    case PredictorKind::uniform:
      return std::make_unique<UniformPredictor>(spec.alphabet_size);
    case PredictorKind::adaptive_freq:
      return std::make_unique<AdaptiveFrequencyPredictor>(spec.alphabet_size,
                                                          spec.get_double("alpha", 1.0));
    case PredictorKind::context_backoff: {
      std::shared_ptr<const ContextStats> trained;
      if (auto trie = spec.get("trie"))
        trained = load_trie(store.directory / *trie, spec.get_or("trie_sha256", ""));
      return std::make_unique<ContextBackoffPredictor>(spec, std::move(trained));
    }
    case PredictorKind::codec_inverted:
      return std::make_unique<CodecInvertedPredictor>(spec.get_or("codec", "deflate"),
                                                      spec.alphabet_size);
    case PredictorKind::bridge:
      return std::make_unique<BridgePredictor>(spec);
  }
  fail(ErrorKind::invalid_argument, "unknown predictor kind");
}

}  // namespace lmz
