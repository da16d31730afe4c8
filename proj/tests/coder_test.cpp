#include <doctest.h>

#include <cmath>
#include <random>

#include "lmz/arithmetic_coder.hpp"
#include "lmz/errors.hpp"
#include "lmz/rational_coder.hpp"

using namespace lmz;
using boost::multiprecision::cpp_int;

namespace {

// Reference quantizer over exact integers: a second, deliberately naive
// implementation of the rounding rule (full sort, no selection tricks).
std::vector<std::uint32_t> reference_cumulative(const std::vector<double>& p, unsigned bits) {
  const std::size_t n = p.size();
  const cpp_int spread = (cpp_int(1) << bits) - n;
  const cpp_int one = cpp_int(1) << 52;
  std::vector<cpp_int> mass(n), remainder(n);
  cpp_int used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // Round half to even of p * 2^52; p is a double so p * 2^52 is exact.
    const long double scaled = std::ldexp(static_cast<long double>(p[i]), 52);
    cpp_int fixed = static_cast<cpp_int>(std::floor(scaled));
    const long double frac = scaled - std::floor(scaled);
    if (frac > 0.5L || (frac == 0.5L && (fixed & 1) == 1)) ++fixed;
    const cpp_int product = fixed * spread;
    mass[i] = product / one + 1;
    remainder[i] = product % one;
    used += mass[i];
  }
  cpp_int residual = (cpp_int(1) << bits) - used;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; residual > 0; ++k, --residual) mass[order[k % n]] += 1;
  std::vector<std::uint32_t> cumulative{0};
  for (const auto& m : mass) cumulative.push_back(cumulative.back() + static_cast<std::uint32_t>(m));
  return cumulative;
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n, bool spiky) {
  std::vector<double> p(n);
  std::exponential_distribution<double> e(1.0);
  double sum = 0;
  for (auto& x : p) {
    x = e(rng);
    if (spiky) x = std::pow(x, 8.0);
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

}  // namespace

TEST_CASE("bit string packs MSB first and trims trailing zeros") {
  auto bits = BitString::from_string("1011000");
  CHECK(bits.size() == 7);
  CHECK(bits.bytes() == std::vector<std::uint8_t>{0xB0});
  bits.trim_trailing_zeros();
  CHECK(bits.to_string() == "1011");
  auto round = BitString::from_bytes(bits.bytes(), bits.size());
  CHECK(round == bits);
  CHECK_THROWS_AS(BitString::from_bytes(std::vector<std::uint8_t>{0xB1}, 4), Error);
  BitReader reader(round);
  std::string read;
  for (int i = 0; i < 6; ++i) read += static_cast<char>('0' + reader.next());
  CHECK(read == "101100");
}

TEST_CASE("quantize uniform over four symbols") {
  const auto pmf = quantize(std::vector<double>(4, 0.25), 4);
  CHECK(pmf.cumulative == std::vector<std::uint32_t>{0, 4, 8, 12, 16});
}

TEST_CASE("quantize three-symbol model at 16 bits") {
  const std::vector<double> p{0.45, 0.3, 0.25};
  const auto pmf = quantize(p, 16);
  CHECK(pmf.cumulative == reference_cumulative(p, 16));
  // Frozen from an exact-fraction evaluation of the rule.
  CHECK(pmf.cumulative == std::vector<std::uint32_t>{0, 29491, 49152, 65536});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::fabs(pmf.mass(i) - (p[i] * (65536.0 - 3) + 1)) <= 1.0);
}

TEST_CASE("quantize point mass gives every other symbol one unit") {
  std::vector<double> p(256, 0.0);
  p[0] = 1.0;
  const auto pmf = quantize(p, 16);
  CHECK(pmf.mass(0) == 65536 - 255);
  for (std::size_t i = 1; i < 256; ++i) CHECK(pmf.mass(i) == 1);
}

TEST_CASE("quantize breaks remainder ties toward lower index") {
  const auto pmf = quantize(std::vector<double>(10, 0.1), 16);
  CHECK(pmf.cumulative == reference_cumulative(std::vector<double>(10, 0.1), 16));
  CHECK(pmf.cumulative == std::vector<std::uint32_t>{0, 6554, 13108, 19662, 26216, 32770,
                                                     39324, 45877, 52430, 58983, 65536});
}

TEST_CASE("quantize rejects bad input") {
  CHECK_THROWS_AS(quantize(std::vector<double>{0.5, -0.1, 0.6}, 16), Error);
  try {
    quantize(std::vector<double>(256, 1.0 / 256), 9);
    FAIL("expected precision error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::precision);
  }
  try {
    quantize(std::vector<double>{0.5, 0.6}, 16);
    FAIL("expected invalid distribution");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_distribution);
  }
}

TEST_CASE("quantize matches the reference on random distributions") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    const unsigned bits = trial % 3 == 0 ? 20 : 16;
    const auto p = random_distribution(rng, n, trial % 2 == 0);
    const auto pmf = quantize(p, bits);
    REQUIRE(pmf.cumulative == reference_cumulative(p, bits));
    for (std::size_t i = 0; i < n; ++i) REQUIRE(pmf.mass(i) >= 1);
    REQUIRE(pmf.cumulative.back() == (1u << bits));
  }
}

TEST_CASE("encoding the lower half of a binary split emits a 0") {
  const auto pmf = quantize(std::vector<double>{0.5, 0.5}, 16);
  CoderState state;
  BitString out;
  encode_symbol(state, pmf, 0, out);
  CHECK(out.to_string() == "0");
}

TEST_CASE("arithmetic coder round-trips random symbols under random PMFs") {
  std::mt19937_64 rng(11);
  std::vector<Pmf> pmfs;
  for (int i = 0; i < 64; ++i) {
    const std::size_t n = 2 + rng() % 255;
    pmfs.push_back(quantize(random_distribution(rng, n, i % 2 == 0), i % 5 == 0 ? 20 : 16));
  }
  std::vector<std::pair<std::size_t, std::size_t>> steps;
  ArithmeticEncoder encoder;
  double ideal = 0;
  for (int i = 0; i < 100000; ++i) {
    const std::size_t which = rng() % pmfs.size();
    const auto& pmf = pmfs[which];
    // Draw the symbol from the PMF itself so code length tracks entropy.
    const std::uint32_t target = static_cast<std::uint32_t>(rng() & (pmf.total() - 1));
    const std::size_t symbol = pmf.find(target);
    steps.emplace_back(which, symbol);
    ideal += pmf.code_length(symbol);
    encoder.encode(pmf, symbol);
  }
  const BitString code = encoder.finish();
  CHECK(static_cast<double>(code.size()) <= std::ceil(ideal) + 2);
  ArithmeticDecoder decoder(code);
  for (const auto& [which, symbol] : steps) REQUIRE(decoder.decode(pmfs[which]) == symbol);
}

TEST_CASE("near-certain symbols cost almost nothing") {
  std::vector<double> p(256, 0.0);
  p[0] = 1.0;
  const auto pmf = quantize(p, 16);
  ArithmeticEncoder encoder;
  for (int i = 0; i < 10000; ++i) encoder.encode(pmf, 0);
  const auto code = encoder.finish();
  CHECK(code.size() <= 60);
  ArithmeticDecoder decoder(code);
  for (int i = 0; i < 10000; ++i) REQUIRE(decoder.decode(pmf) == 0);
}

TEST_CASE("prefix of a sequence never codes longer than the sequence") {
  std::mt19937_64 rng(3);
  const auto pmf = quantize(random_distribution(rng, 256, false), 16);
  std::vector<std::size_t> symbols(3000);
  for (auto& s : symbols) s = rng() % 256;
  std::size_t previous = 0;
  for (std::size_t len = 0; len <= symbols.size(); len += 97) {
    ArithmeticEncoder encoder;
    for (std::size_t i = 0; i < len; ++i) encoder.encode(pmf, symbols[i]);
    const std::size_t bits = encoder.finish().size();
    CHECK(bits >= previous);
    previous = bits;
  }
}

TEST_CASE("exact coder reproduces the AIXI worked example") {
  const Symbol A = 0, I = 1, X = 2;
  ConditionalTable model(3);
  model.set({}, {parse_decimal("0.45"), parse_decimal("0.3"), parse_decimal("0.25")});
  model.set({A}, {parse_decimal("0.2"), parse_decimal("0.6"), parse_decimal("0.2")});
  const std::vector<Symbol> two{A, I};
  const auto encoding = exact_encode(model, two);
  REQUIRE(encoding.steps.size() == 2);
  CHECK(encoding.steps[0] == RationalInterval{0, parse_decimal("0.45")});
  CHECK(encoding.steps[1] == RationalInterval{parse_decimal("0.09"), parse_decimal("0.36")});

  const RationalInterval final_interval{parse_decimal("0.322"), parse_decimal("0.341")};
  const auto code = shortest_dyadic_code(final_interval);
  CHECK(code.to_string() == "0101010");
  CHECK(final_interval.contains(dyadic_interval(code)));
  (void)X;
}

TEST_CASE("certain symbol needs at most one bit") {
  ConditionalTable model(2);
  model.set({}, {Rational(1), Rational(0)});
  const std::vector<Symbol> one{0};
  const auto encoding = exact_encode(model, one);
  CHECK(encoding.steps[0] == RationalInterval{0, 1});
  CHECK(encoding.code.size() <= 1);
}

TEST_CASE("exact code length is within one bit of the ideal") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ConditionalTable model(4);
    std::vector<Rational> p;
    cpp_int total = 0;
    std::vector<cpp_int> weights;
    for (int i = 0; i < 4; ++i) {
      weights.push_back(1 + rng() % 20);
      total += weights.back();
    }
    for (const auto& w : weights) p.emplace_back(w, total);
    model.set({}, p);
    std::vector<Symbol> symbols(1 + rng() % 12);
    Rational probability = 1;
    for (auto& s : symbols) {
      s = static_cast<Symbol>(rng() % 4);
      probability *= p[s];
    }
    const auto encoding = exact_encode(model, symbols);
    CHECK(encoding.steps.back().width() == probability);
    const double ideal = -std::log2(static_cast<double>(probability));
    CHECK(static_cast<double>(encoding.code.size()) <= std::ceil(ideal - 1e-9) + 1);
    CHECK(encoding.steps.back().contains(dyadic_interval(encoding.code)));
  }
}
