#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lmz/bitstring.hpp"
#include "lmz/predictors.hpp"

namespace lmz {

struct SequenceOptions {
  // The predictor is reset every `segment` symbols; 0 never resets.
  std::size_t segment = kDefaultWindow;
  // Longest context handed to the predictor. Contexts never cross a reset.
  std::size_t window = kDefaultWindow;
  // When set, receives -log2 q for every coded symbol, where q is the
  // quantized probability the coder used.
  std::vector<double>* code_lengths = nullptr;
};

// Codes the whole sequence as one arithmetic-coded stream. The predictor is
// reset before the first symbol.
BitString encode_sequence(Predictor& predictor, std::span<const Symbol> symbols,
                          const SequenceOptions& options = {});

std::vector<Symbol> decode_sequence(Predictor& predictor, const BitString& code,
                                    std::size_t count,
                                    const SequenceOptions& options = {});

// Code lengths the coder would pay, without producing bits.
double sequence_code_length(Predictor& predictor, std::span<const Symbol> symbols,
                            const SequenceOptions& options = {});

std::vector<Symbol> to_symbols(std::span<const std::uint8_t> bytes);
// Throws invalid_argument for symbols above 255.
std::vector<std::uint8_t> to_bytes(std::span<const Symbol> symbols);

}  // namespace lmz
