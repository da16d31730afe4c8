#include "lmz/rational_coder.hpp"

#include "lmz/errors.hpp"

namespace lmz {

using boost::multiprecision::cpp_int;

Rational parse_decimal(const std::string& literal) {
  const auto dot = literal.find('.');
  const std::string whole = literal.substr(0, dot);
  const std::string frac = dot == std::string::npos ? "" : literal.substr(dot + 1);
  if ((whole + frac).empty() ||
      (whole + frac).find_first_not_of("0123456789") != std::string::npos)
    fail(ErrorKind::invalid_argument, "not a decimal literal: " + literal);
  cpp_int numerator(whole.empty() ? std::string("0") : whole);
  cpp_int denominator = 1;
  for (char c : frac) {
    numerator = numerator * 10 + (c - '0');
    denominator *= 10;
  }
  return Rational(numerator, denominator);
}

void ConditionalTable::set(std::vector<Symbol> history,
                           std::vector<Rational> conditional) {
  if (conditional.size() != alphabet_size_)
    fail(ErrorKind::invalid_argument, "conditional has wrong alphabet size");
  Rational sum = 0;
  for (const auto& p : conditional) {
    if (p < 0) fail(ErrorKind::invalid_distribution, "negative probability");
    sum += p;
  }
  if (sum != 1)
    fail(ErrorKind::invalid_distribution, "conditional does not sum to 1");
  table_[std::move(history)] = std::move(conditional);
}

const std::vector<Rational>& ConditionalTable::lookup(
    std::span<const Symbol> history) const {
  for (std::size_t skip = 0; skip <= history.size(); ++skip) {
    std::vector<Symbol> key(history.begin() + static_cast<std::ptrdiff_t>(skip),
                            history.end());
    if (auto it = table_.find(key); it != table_.end()) return it->second;
  }
  fail(ErrorKind::invalid_argument, "conditional table has no empty context");
}

RationalInterval refine(const RationalInterval& interval,
                        std::span<const Rational> conditional,
                        std::size_t symbol) {
  Rational below = 0;
  for (std::size_t y = 0; y < symbol; ++y) below += conditional[y];
  const Rational width = interval.width();
  RationalInterval out;
  out.low = interval.low + width * below;
  out.high = interval.low + width * (below + conditional[symbol]);
  return out;
}

BitString shortest_dyadic_code(const RationalInterval& interval) {
  if (!(interval.low < interval.high))
    fail(ErrorKind::invalid_argument, "empty interval");
  // For k bits the best candidate is the smallest multiple of 2^-k that is
  // >= low; it fits when that multiple plus 2^-k is still <= high.
  for (unsigned k = 0;; ++k) {
    const cpp_int scale = cpp_int(1) << k;
    const Rational scaled_low = interval.low * scale;
    cpp_int m = numerator(scaled_low) / denominator(scaled_low);
    if (Rational(m) < scaled_low) ++m;
    if (Rational(m + 1, scale) <= interval.high) {
      BitString code;
      for (unsigned i = 0; i < k; ++i)
        code.push_back(bit_test(m, k - 1 - i));
      return code;
    }
  }
}

RationalInterval dyadic_interval(const BitString& code) {
  cpp_int m = 0;
  for (std::size_t i = 0; i < code.size(); ++i) m = (m << 1) | (code[i] ? 1 : 0);
  const cpp_int scale = cpp_int(1) << code.size();
  return {Rational(m, scale), Rational(m + 1, scale)};
}

ExactEncoding exact_encode(const ConditionalTable& model,
                           std::span<const Symbol> symbols) {
  ExactEncoding out;
  RationalInterval interval;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] >= model.alphabet_size())
      fail(ErrorKind::invalid_argument, "symbol outside alphabet");
    const auto& conditional = model.lookup(symbols.first(i));
    if (conditional[symbols[i]] == 0)
      fail(ErrorKind::invalid_distribution, "symbol has zero probability");
    interval = refine(interval, conditional, symbols[i]);
    out.steps.push_back(interval);
  }
  out.code = shortest_dyadic_code(interval);
  return out;
}

}  // namespace lmz
