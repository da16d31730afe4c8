#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lmz {

using Symbol = std::uint16_t;

inline constexpr unsigned kDefaultPmfBits = 16;
inline constexpr unsigned kWidePmfBits = 20;
inline constexpr unsigned kMaxPmfBits = 24;

// PMF precision used for a given alphabet: 16 bits, widened to 20 bits once
// the alphabet outgrows 4096 symbols.
inline unsigned pmf_bits_for(std::size_t alphabet_size) {
  return alphabet_size > 4096 ? kWidePmfBits : kDefaultPmfBits;
}

// Quantized probability mass function. cumulative has alphabet_size + 1
// entries, starts at 0, ends at 2^bits and is strictly increasing.
struct Pmf {
  std::vector<std::uint32_t> cumulative;
  unsigned bits = kDefaultPmfBits;

  std::size_t alphabet_size() const { return cumulative.size() - 1; }
  std::uint32_t total() const { return std::uint32_t{1} << bits; }
  std::uint32_t mass(std::size_t s) const {
    return cumulative[s + 1] - cumulative[s];
  }
  // Code length in bits that the coder pays for symbol s.
  double code_length(std::size_t s) const;
  // Symbol whose interval contains the scaled target value.
  std::size_t find(std::uint32_t target) const;
};

// Reusable buffers so the per-symbol hot path does not allocate.
struct QuantizeScratch {
  std::vector<std::uint64_t> remainders;
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> masses;
  std::vector<std::uint64_t> selection;
};

// Deterministic integer quantization. Each probability is first rounded to a
// 2^-52 fixed-point value (round half to even). Symbol i then gets
// floor(p_i * (2^bits - n)) + 1 units, and the residual is handed out one
// unit at a time by decreasing fractional remainder, lower index first.
Pmf quantize(std::span<const double> probabilities, unsigned bits);
void quantize_into(std::span<const double> probabilities, unsigned bits,
                   Pmf& out, QuantizeScratch& scratch);

}  // namespace lmz
