#include "lmz/arithmetic_coder.hpp"

#include "lmz/errors.hpp"

namespace lmz {

namespace {

using S = CoderState;

void narrow(CoderState& state, const Pmf& pmf, std::size_t symbol) {
  const std::uint64_t range = state.width();
  state.high = state.low + ((range * pmf.cumulative[symbol + 1]) >> pmf.bits) - 1;
  state.low = state.low + ((range * pmf.cumulative[symbol]) >> pmf.bits);
}

void emit(CoderState& state, bool bit, BitString& out) {
  out.push_back(bit);
  out.append(!bit, state.pending_bits);
  state.pending_bits = 0;
}

}  // namespace

void encode_symbol(CoderState& state, const Pmf& pmf, std::size_t symbol,
                   BitString& out) {
  narrow(state, pmf, symbol);
  for (;;) {
    if (state.high < S::kHalf) {
      emit(state, false, out);
    } else if (state.low >= S::kHalf) {
      emit(state, true, out);
      state.low -= S::kHalf;
      state.high -= S::kHalf;
    } else if (state.low >= S::kQuarter && state.high < S::kHalf + S::kQuarter) {
      ++state.pending_bits;
      state.low -= S::kQuarter;
      state.high -= S::kQuarter;
    } else {
      break;
    }
    state.low <<= 1;
    state.high = (state.high << 1) | 1;
  }
}

BitString ArithmeticEncoder::finish() {
  // After renormalization low < 1/2 <= high, so the value 1/2 always lies in
  // the final interval: a single 1 followed by the pending zeros, which the
  // trim below removes again.
  emit(state_, true, bits_);
  BitString out = std::move(bits_);
  out.trim_trailing_zeros();
  state_ = CoderState{};
  bits_ = BitString{};
  return out;
}

CoderState start_decoding(BitReader& in) {
  CoderState state;
  for (unsigned i = 0; i < kStateBits; ++i)
    state.code_register = (state.code_register << 1) | in.next();
  return state;
}

std::size_t decode_symbol(CoderState& state, const Pmf& pmf, BitReader& in) {
  if (state.code_register < state.low || state.code_register > state.high)
    fail(ErrorKind::corrupt_stream, "code register outside coder interval");
  const std::uint64_t range = state.width();
  const std::uint64_t offset = state.code_register - state.low;
  const auto target = static_cast<std::uint32_t>(
      (((offset + 1) << pmf.bits) - 1) / range);
  const std::size_t symbol = pmf.find(target);
  narrow(state, pmf, symbol);
  for (;;) {
    if (state.high < S::kHalf) {
      // nothing to subtract
    } else if (state.low >= S::kHalf) {
      state.low -= S::kHalf;
      state.high -= S::kHalf;
      state.code_register -= S::kHalf;
    } else if (state.low >= S::kQuarter && state.high < S::kHalf + S::kQuarter) {
      state.low -= S::kQuarter;
      state.high -= S::kQuarter;
      state.code_register -= S::kQuarter;
    } else {
      break;
    }
    state.low <<= 1;
    state.high = (state.high << 1) | 1;
    state.code_register = (state.code_register << 1) | in.next();
  }
  return symbol;
}

}  // namespace lmz
