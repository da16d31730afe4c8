#include "lmz/sequence_coder.hpp"

#include <algorithm>

#include "lmz/arithmetic_coder.hpp"
#include "lmz/errors.hpp"

namespace lmz {

namespace {

// Drives predict/update over the sequence and hands each PMF to visit.
template <class Visit>
void walk(Predictor& predictor, std::span<const Symbol> symbols, std::size_t count,
          const SequenceOptions& options, Visit&& visit) {
  if (options.window == 0) fail(ErrorKind::invalid_argument, "window must be positive");
  Pmf pmf;
  QuantizeScratch scratch;
  predictor.reset();
  std::size_t segment_start = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (options.segment && i > 0 && i % options.segment == 0) {
      predictor.reset();
      segment_start = i;
    }
    const std::size_t from = std::max(segment_start, i >= options.window ? i - options.window : 0);
    const auto context = symbols.subspan(from, i - from);
    predictor.predict_pmf(context, pmf, scratch);
    const Symbol symbol = visit(i, pmf);
    if (options.code_lengths) options.code_lengths->push_back(pmf.code_length(symbol));
    predictor.update(context, symbol);
  }
}

}  // namespace

BitString encode_sequence(Predictor& predictor, std::span<const Symbol> symbols,
                          const SequenceOptions& options) {
  ArithmeticEncoder encoder;
  if (symbols.empty()) return {};
  const std::size_t alphabet = predictor.alphabet_size();
  walk(predictor, symbols, symbols.size(), options, [&](std::size_t i, const Pmf& pmf) {
    if (symbols[i] >= alphabet) fail(ErrorKind::invalid_argument, "symbol outside alphabet");
    encoder.encode(pmf, symbols[i]);
    return symbols[i];
  });
  return encoder.finish();
}

std::vector<Symbol> decode_sequence(Predictor& predictor, const BitString& code,
                                    std::size_t count, const SequenceOptions& options) {
  std::vector<Symbol> out(count);
  if (count == 0) return out;
  ArithmeticDecoder decoder(code);
  walk(predictor, out, count, options, [&](std::size_t i, const Pmf& pmf) {
    out[i] = static_cast<Symbol>(decoder.decode(pmf));
    return out[i];
  });
  return out;
}

double sequence_code_length(Predictor& predictor, std::span<const Symbol> symbols,
                            const SequenceOptions& options) {
  double total = 0.0;
  walk(predictor, symbols, symbols.size(), options, [&](std::size_t i, const Pmf& pmf) {
    if (symbols[i] >= pmf.alphabet_size())
      fail(ErrorKind::invalid_argument, "symbol outside alphabet");
    total += pmf.code_length(symbols[i]);
    return symbols[i];
  });
  return total;
}

std::vector<Symbol> to_symbols(std::span<const std::uint8_t> bytes) {
  return {bytes.begin(), bytes.end()};
}

std::vector<std::uint8_t> to_bytes(std::span<const Symbol> symbols) {
  std::vector<std::uint8_t> out(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] > 255) fail(ErrorKind::invalid_argument, "symbol is not a byte");
    out[i] = static_cast<std::uint8_t>(symbols[i]);
  }
  return out;
}

}  // namespace lmz
