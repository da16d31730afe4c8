#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lmz/codecs.hpp"
#include "lmz/context_stats.hpp"
#include "lmz/pmf.hpp"
#include "lmz/predictor_spec.hpp"

namespace lmz {

struct ModelFootprint {
  std::uint64_t serialized_bytes = 0;
  std::optional<std::uint64_t> param_count;
};

inline constexpr std::size_t kDefaultWindow = 2048;

// A next-symbol model. Coding and generation call predict, then update with
// the symbol that actually occurred. Implementations must be deterministic
// in (spec, training state, update history, context).
class Predictor {
 public:
  explicit Predictor(PredictorSpec spec) : spec_(std::move(spec)) {}
  virtual ~Predictor() = default;

  const PredictorSpec& spec() const { return spec_; }
  std::uint32_t alphabet_size() const { return spec_.alphabet_size; }

  // Writes alphabet_size() strictly positive probabilities summing to 1.
  virtual void predict(std::span<const Symbol> context, std::span<double> out) = 0;
  virtual void update(std::span<const Symbol> context, Symbol observed) {
    (void)context;
    (void)observed;
  }
  // Forgets everything learned through update (chunk boundary).
  virtual void reset() {}
  virtual ModelFootprint footprint() const { return {}; }

  // Quantized form of predict; overridable when a cached PMF is exact.
  virtual void predict_pmf(std::span<const Symbol> context, Pmf& out,
                           QuantizeScratch& scratch);

 protected:
  std::vector<double> probabilities_;

 private:
  PredictorSpec spec_;
};

class UniformPredictor final : public Predictor {
 public:
  explicit UniformPredictor(std::uint32_t alphabet_size = 256);
  void predict(std::span<const Symbol> context, std::span<double> out) override;
  void predict_pmf(std::span<const Symbol> context, Pmf& out,
                   QuantizeScratch& scratch) override;

 private:
  Pmf cached_;
};

// Add-alpha estimator (c_y + alpha) / (n + alpha * |X|). alpha = 1 is
// Laplace, alpha = 0.5 is Krichevsky-Trofimov.
class AdaptiveFrequencyPredictor final : public Predictor {
 public:
  AdaptiveFrequencyPredictor(std::uint32_t alphabet_size = 256, double alpha = 1.0);
  void predict(std::span<const Symbol> context, std::span<double> out) override;
  void update(std::span<const Symbol> context, Symbol observed) override;
  void reset() override;

  double alpha() const { return alpha_; }

 private:
  double alpha_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Escape-method-C backoff over a frozen trained table (optional) plus counts
// gathered in the current chunk when adapt is on.
class ContextBackoffPredictor final : public Predictor {
 public:
  ContextBackoffPredictor(std::uint32_t alphabet_size, unsigned order, bool adapt,
                          std::shared_ptr<const ContextStats> trained = nullptr);
  // For specs built by make_predictor, which carry artifact references.
  ContextBackoffPredictor(PredictorSpec spec, std::shared_ptr<const ContextStats> trained);

  void predict(std::span<const Symbol> context, std::span<double> out) override;
  void update(std::span<const Symbol> context, Symbol observed) override;
  void reset() override;
  // Size of the trained table dumped to this predictor's order; 0 untrained.
  ModelFootprint footprint() const override;

  unsigned order() const { return order_; }
  const ContextStats* trained() const { return trained_.get(); }

 private:
  unsigned order_;
  bool adapt_;
  std::shared_ptr<const ContextStats> trained_;
  ContextStats live_;
  bool live_empty_ = true;
};

// Distribution implied by a code-length function: proportional to
// 2^-length(context + b), floored at 2^-16 and renormalized. The constant
// length(context) cancels in the normalization.
using CodeLengthFn = std::function<double(std::span<const std::uint8_t>)>;
void invert_codec(const CodeLengthFn& code_length, std::span<const std::uint8_t> context,
                  std::size_t candidate_count, std::span<double> out);

class CodecInvertedPredictor final : public Predictor {
 public:
  explicit CodecInvertedPredictor(const std::string& codec_id,
                                  std::uint32_t alphabet_size = 256);
  void predict(std::span<const Symbol> context, std::span<double> out) override;

 private:
  std::unique_ptr<CodecAdapter> codec_;
  std::vector<std::uint8_t> scratch_;
};

// Where training artifacts named in a spec (trie=..., bpe=...) are looked up.
struct ArtifactStore {
  std::filesystem::path directory = ".";
};

// Builds the predictor a spec describes. Artifact references are resolved
// relative to the store and checked against their recorded SHA-256
// (mismatch: predictor_mismatch).
std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec,
                                          const ArtifactStore& store = {});

// Reads a trie dump and verifies it against an expected hex digest (empty
// digest skips the check).
std::shared_ptr<const ContextStats> load_trie(const std::filesystem::path& path,
                                              const std::string& expected_sha256);

}  // namespace lmz
