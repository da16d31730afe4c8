#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lmz/bitstring.hpp"
#include "lmz/pmf.hpp"

namespace lmz {

using Rational = boost::multiprecision::cpp_rational;

// Parses a decimal literal such as "0.45" exactly (no binary rounding).
Rational parse_decimal(const std::string& literal);

struct RationalInterval {
  Rational low{0};
  Rational high{1};

  Rational width() const { return high - low; }
  bool contains(const RationalInterval& inner) const {
    return low <= inner.low && inner.high <= high;
  }
  friend bool operator==(const RationalInterval&,
                         const RationalInterval&) = default;
};

// Explicit conditional model: history -> next-symbol distribution. Lookups
// fall back to the longest stored suffix of the history, ending at the empty
// context, which must be present.
class ConditionalTable {
 public:
  explicit ConditionalTable(std::size_t alphabet_size)
      : alphabet_size_(alphabet_size) {}

  void set(std::vector<Symbol> history, std::vector<Rational> conditional);
  const std::vector<Rational>& lookup(std::span<const Symbol> history) const;
  std::size_t alphabet_size() const { return alphabet_size_; }

 private:
  std::size_t alphabet_size_;
  std::map<std::vector<Symbol>, std::vector<Rational>> table_;
};

// Infinite-precision interval refinement: the sub-interval of `interval`
// assigned to `symbol` under `conditional`.
RationalInterval refine(const RationalInterval& interval,
                        std::span<const Rational> conditional,
                        std::size_t symbol);

// Shortest bit string b such that [0.b, 0.b + 2^-|b|) lies inside interval.
BitString shortest_dyadic_code(const RationalInterval& interval);

// Dyadic interval spanned by a code word.
RationalInterval dyadic_interval(const BitString& code);

struct ExactEncoding {
  std::vector<RationalInterval> steps;  // interval after each symbol
  BitString code;
};

ExactEncoding exact_encode(const ConditionalTable& model,
                           std::span<const Symbol> symbols);

}  // namespace lmz
