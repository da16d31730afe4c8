#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "lmz/pmf.hpp"

namespace lmz {

// Byte-level BPE. Tokens 0..255 are bytes; merge i creates token 256 + i.
class BpeVocab {
 public:
  BpeVocab();
  explicit BpeVocab(std::vector<std::pair<Symbol, Symbol>> merges);

  std::size_t vocab_size() const { return 256 + merges_.size(); }
  const std::vector<std::pair<Symbol, Symbol>>& merges() const { return merges_; }
  const std::vector<std::uint8_t>& expansion(Symbol token) const { return expansions_[token]; }

  std::vector<Symbol> encode(std::span<const std::uint8_t> bytes) const;
  // Unknown token ids are a corrupt stream.
  std::vector<std::uint8_t> decode(std::span<const Symbol> tokens) const;

  // Text format:
  //   lmz-bpe 1
  //   merges <count>
  //   <left> <right> # <hex bytes of the new token>
  std::string to_text() const;
  static BpeVocab from_text(const std::string& text);

  bool operator==(const BpeVocab& other) const { return merges_ == other.merges_; }

 private:
  std::vector<std::pair<Symbol, Symbol>> merges_;
  std::vector<std::vector<std::uint8_t>> expansions_;
  absl::flat_hash_map<std::uint32_t, std::uint32_t> rank_;
};

inline constexpr std::size_t kMaxVocabSize = 65535;

// Greedy most-frequent adjacent pair merging until vocab_size tokens exist
// or no pair occurs twice. Ties go to the smaller left token, then the
// smaller right token. Occurrences are counted as adjacent positions and
// merged left to right.
BpeVocab train_bpe(std::span<const std::uint8_t> corpus, std::size_t vocab_size);

struct TokenizedRate {
  std::size_t vocab_size = 0;
  double tokens_per_chunk = 0;
  double raw_rate = 0;  // percent of original bytes
};

struct TokenizedRateOptions {
  unsigned order = 1;
  std::size_t chunk_size = 2048;
};

// For each vocab size: train BPE on `train`, train an escape-C backoff model
// of the given order over the token stream, then code every chunk of
// `test` (tokenized independently, model adapting within the chunk). The
// coded size of a chunk is its model log-loss plus 2 bits of coder
// termination. Rates divide by original bytes.
std::vector<TokenizedRate> tokenized_rate(std::span<const std::uint8_t> train,
                                          std::span<const std::uint8_t> test,
                                          std::span<const std::size_t> vocab_sizes,
                                          const TokenizedRateOptions& options = {});

}  // namespace lmz
