#pragma once

#include <cstddef>
#include <cstdint>

#include "lmz/bitstring.hpp"
#include "lmz/pmf.hpp"

namespace lmz {

inline constexpr unsigned kStateBits = 32;

// Interval [low, high] (inclusive high) in 32-bit fixed point. All products
// are formed in 64-bit registers.
struct CoderState {
  static constexpr std::uint64_t kTop = (std::uint64_t{1} << kStateBits) - 1;
  static constexpr std::uint64_t kHalf = std::uint64_t{1} << (kStateBits - 1);
  static constexpr std::uint64_t kQuarter = kHalf >> 1;

  std::uint64_t low = 0;
  std::uint64_t high = kTop;
  std::uint64_t pending_bits = 0;   // encoder: deferred underflow bits
  std::uint64_t code_register = 0;  // decoder: current code value

  std::uint64_t width() const { return high - low + 1; }
};

// Narrows the interval to the symbol's slot and renormalizes, appending
// resolved bits (and released pending bits) to out.
void encode_symbol(CoderState& state, const Pmf& pmf, std::size_t symbol,
                   BitString& out);

// Initializes a decoder state by reading the first kStateBits bits.
CoderState start_decoding(BitReader& in);

// Mirrors encode_symbol. Throws corrupt_stream if the code register ever
// leaves the interval, which cannot happen on a well-formed stream.
std::size_t decode_symbol(CoderState& state, const Pmf& pmf, BitReader& in);

// Streaming encoder. finish() emits the shortest tail that pins a value
// inside the final interval and trims trailing zeros: the reader pads the
// stream with zeros, so they carry no information.
class ArithmeticEncoder {
 public:
  void encode(const Pmf& pmf, std::size_t symbol) {
    encode_symbol(state_, pmf, symbol, bits_);
  }
  BitString finish();
  const CoderState& state() const { return state_; }

 private:
  CoderState state_;
  BitString bits_;
};

class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(const BitString& code)
      : reader_(code), state_(start_decoding(reader_)) {}

  std::size_t decode(const Pmf& pmf) {
    return decode_symbol(state_, pmf, reader_);
  }
  const CoderState& state() const { return state_; }

 private:
  BitReader reader_;
  CoderState state_;
};

}  // namespace lmz
