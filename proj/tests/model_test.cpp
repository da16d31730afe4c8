#include <doctest.h>

#include <cmath>
#include <random>

#include "lmz/byte_io.hpp"
#include "lmz/context_stats.hpp"
#include "lmz/errors.hpp"
#include "lmz/predictor_spec.hpp"
#include "lmz/predictors.hpp"

using namespace lmz;

namespace {

std::vector<Symbol> symbols_of(std::string_view text) {
  return {text.begin(), text.end()};
}

void train(ContextStats& stats, std::span<const Symbol> data) {
  for (std::size_t i = 0; i < data.size(); ++i) stats.update(data.first(i), data[i]);
}

std::vector<Symbol> random_text(std::mt19937_64& rng, std::size_t n, unsigned alphabet) {
  std::vector<Symbol> out(n);
  // Skewed source so tries get uneven branching.
  for (auto& s : out) {
    const unsigned r = static_cast<unsigned>(rng() % (alphabet * alphabet));
    s = static_cast<Symbol>(static_cast<unsigned>(std::sqrt(static_cast<double>(r))));
  }
  return out;
}

}  // namespace

TEST_CASE("predictor spec canonical form round-trips") {
  const auto spec = PredictorSpec::parse("backoff:order=5,trie=models/a%20b.lmzt");
  CHECK(spec.kind == PredictorKind::context_backoff);
  CHECK(spec.get_or("trie", "") == "models/a b.lmzt");
  CHECK(spec.canonical() ==
        "context_backoff:adapt=1,alphabet_size=256,order=5,trie=models/a%20b.lmzt");
  CHECK(PredictorSpec::parse(spec.canonical()) == spec);

  const auto seven = PredictorSpec::parse("bridge:cmd=python3 serve.py,alphabet_size=128");
  CHECK(seven.alphabet_size == 128);
  CHECK(PredictorSpec::parse(seven.canonical()) == seven);
  CHECK(seven.canonical() ==
        "bridge:alphabet_size=128,cmd=python3%20serve.py,timeout=30,top_k=100");

  CHECK(PredictorSpec::parse("uniform").canonical() == "uniform:alphabet_size=256");
  CHECK(PredictorSpec::parse("adaptive").canonical() == "adaptive_freq:alpha=1,alphabet_size=256");
  CHECK_THROWS_AS(PredictorSpec::parse("nonsense"), Error);
  CHECK_THROWS_AS(PredictorSpec::parse("uniform:alphabet_size=1"), Error);
  CHECK_THROWS_AS(PredictorSpec::parse("uniform:alphabet_size=65537"), Error);
  CHECK_THROWS_AS(PredictorSpec::parse("bridge"), Error);
  CHECK_THROWS_AS(PredictorSpec::parse("uniform:x=%4"), Error);
  CHECK(percent_decode(percent_encode("a,b=c%d:é")) == "a,b=c%d:é");
}

TEST_CASE("trie counts every suffix context") {
  ContextStats stats(2, 256);
  const auto data = symbols_of("abab");
  train(stats, data);
  ContextStats::NodeId path[3];
  const auto a = symbols_of("a");
  REQUIRE(stats.context_path(a, 2, path) == 2);
  CHECK(stats.total(path[0]) == 4);
  CHECK(stats.distinct(path[0]) == 2);
  CHECK(stats.count(path[1], 'b') == 2);
  CHECK(stats.total(path[1]) == 2);
  const auto ba = symbols_of("ba");
  REQUIRE(stats.context_path(ba, 2, path) == 3);
  CHECK(stats.count(path[2], 'b') == 1);
  CHECK(stats.total(path[2]) == 1);
}

TEST_CASE("backoff on empty statistics is uniform") {
  ContextStats stats(3, 256);
  const auto ctx = symbols_of("xyz");
  for (unsigned k = 0; k <= 3; ++k)
    CHECK(backoff_probability(stats, ctx, 'q', k) == doctest::Approx(1.0 / 256).epsilon(1e-15));
}

TEST_CASE("backoff after a single observation") {
  ContextStats stats(1, 256);
  train(stats, symbols_of("ab"));
  // Order 0 sees a and b once each: n = 2, d = 2.
  const double p0 = (1.0 + 2.0 / 256) / 4.0;
  const auto a = symbols_of("a");
  CHECK(backoff_probability(stats, a, 'b', 0) == doctest::Approx(p0).epsilon(1e-14));
  CHECK(backoff_probability(stats, a, 'b', 1) == doctest::Approx(0.5 + 0.5 * p0).epsilon(1e-14));
}

TEST_CASE("order-2 backoff fed abab prefers the seen continuation") {
  ContextBackoffPredictor predictor(256, 2, true);
  const auto data = symbols_of("abab");
  for (std::size_t i = 0; i < data.size(); ++i)
    predictor.update(std::span(data).first(i), data[i]);
  std::vector<double> p(256);
  const auto a = symbols_of("a");
  predictor.predict(a, p);
  // Hand evaluation: order 0 has a:2 b:2 (n 4, d 2); context "a" has b:2 (n 2, d 1).
  const double p0_b = (2.0 + 2.0 / 256) / 6.0;
  const double p0_c = (2.0 / 256) / 6.0;
  CHECK(p['b'] == doctest::Approx((2.0 + p0_b) / 3.0).epsilon(1e-14));
  CHECK(p['c'] == doctest::Approx(p0_c / 3.0).epsilon(1e-14));
  CHECK(p['b'] > p['c']);
}

TEST_CASE("backoff distributions sum to one on random tables") {
  std::mt19937_64 rng(17);
  std::vector<double> dist;
  for (int trial = 0; trial < 1000; ++trial) {
    const unsigned alphabet = 2 + static_cast<unsigned>(rng() % 30);
    const unsigned order = static_cast<unsigned>(rng() % 4);
    ContextStats stats(order, alphabet);
    const auto data = random_text(rng, rng() % 200, alphabet);
    train(stats, data);
    const auto ctx = random_text(rng, rng() % 6, alphabet);
    double sum = 0;
    dist.assign(alphabet, 0);
    const ContextStats* sources[1] = {&stats};
    backoff_distribution(sources, ctx, order, dist);
    for (Symbol y = 0; y < alphabet; ++y) {
      const double p = backoff_probability(stats, ctx, y, order);
      REQUIRE(p > 0.0);
      REQUIRE(p < 1.0);
      REQUIRE(dist[y] == doctest::Approx(p).epsilon(1e-12));
      sum += p;
    }
    REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("two count sources blend like one merged table") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const unsigned alphabet = 2 + static_cast<unsigned>(rng() % 12);
    const unsigned order = static_cast<unsigned>(rng() % 4);
    ContextStats base(order, alphabet), live(order, alphabet), merged(order, alphabet);
    const auto first = random_text(rng, rng() % 300, alphabet);
    const auto second = random_text(rng, rng() % 100, alphabet);
    train(base, first);
    train(merged, first);
    train(live, second);
    train(merged, second);
    const auto ctx = random_text(rng, order + 1, alphabet);
    const ContextStats* pair[2] = {&base, &live};
    const ContextStats* one[1] = {&merged};
    std::vector<double> a(alphabet), b(alphabet);
    backoff_distribution(pair, ctx, order, a);
    backoff_distribution(one, ctx, order, b);
    for (unsigned y = 0; y < alphabet; ++y) {
      REQUIRE(a[y] == doctest::Approx(b[y]).epsilon(1e-12));
      REQUIRE(backoff_probability(pair, ctx, static_cast<Symbol>(y), order) ==
              doctest::Approx(b[y]).epsilon(1e-12));
    }
  }
}

TEST_CASE("per-order probabilities match separate evaluations") {
  std::mt19937_64 rng(29);
  ContextStats stats(5, 40);
  train(stats, random_text(rng, 5000, 40));
  std::vector<double> by_order(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ctx = random_text(rng, 8, 40);
    const Symbol y = static_cast<Symbol>(rng() % 40);
    backoff_probabilities_by_order(stats, ctx, y, by_order);
    for (unsigned k = 0; k <= 5; ++k)
      REQUIRE(by_order[k] == doctest::Approx(backoff_probability(stats, ctx, y, k)).epsilon(1e-13));
  }
}

TEST_CASE("trie dump round-trips and truncates by depth") {
  std::mt19937_64 rng(31);
  const auto data = random_text(rng, 20000, 60);
  ContextStats deep(4, 256);
  train(deep, data);
  const auto dump = deep.serialize();
  CHECK(dump.size() == deep.serialized_size(4));
  const auto back = ContextStats::deserialize(dump);
  CHECK(back.serialize() == dump);
  CHECK(back.node_count() == deep.node_count());
  CHECK(back.entry_count() == deep.entry_count());

  for (unsigned depth = 0; depth <= 4; ++depth) {
    ContextStats shallow(depth, 256);
    train(shallow, data);
    CHECK(deep.serialize(depth) == shallow.serialize());
    CHECK(deep.serialized_size(depth) == shallow.serialize().size());
  }
  // Header layout: magic, version, depth, alphabet, body length.
  CHECK(std::string(dump.begin(), dump.begin() + 4) == "LMZT");
  CHECK(dump[4] == 1);
  CHECK(dump[5] == 4);
}

TEST_CASE("trie dump of a tiny table is byte exact") {
  ContextStats stats(1, 256);
  train(stats, symbols_of("ab"));
  // root: entries a:1, b:1 (gaps 97, 0); child a (gap 97): entry b:1 (gap 98), no children.
  const std::vector<std::uint8_t> body{2, 97, 1, 0, 1, 1, 97, 1, 98, 1, 0};
  std::vector<std::uint8_t> expected{'L', 'M', 'Z', 'T', 1, 1, 0, 1, 0, 0,
                                     static_cast<std::uint8_t>(body.size()), 0, 0, 0, 0, 0, 0, 0};
  expected.insert(expected.end(), body.begin(), body.end());
  CHECK(stats.serialize() == expected);
}

TEST_CASE("corrupt trie dumps are rejected") {
  ContextStats stats(2, 256);
  train(stats, symbols_of("hello world"));
  auto dump = stats.serialize();
  auto truncated = dump;
  truncated.pop_back();
  try {
    ContextStats::deserialize(truncated);
    FAIL("expected corrupt stream");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::corrupt_stream);
  }
  auto bumped = dump;
  bumped[4] = 2;
  try {
    ContextStats::deserialize(bumped);
    FAIL("expected unknown version");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unknown_version);
  }
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 2000; ++trial) {
    auto fuzzed = dump;
    fuzzed[18 + rng() % (fuzzed.size() - 18)] = static_cast<std::uint8_t>(rng());
    try {
      ContextStats::deserialize(fuzzed);
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::corrupt_stream || e.kind() == ErrorKind::invalid_argument));
    }
  }
}

TEST_CASE("uniform and adaptive predictors") {
  std::vector<double> p(256);
  UniformPredictor uniform;
  const auto ctx = symbols_of("anything");
  uniform.predict(ctx, p);
  for (double x : p) CHECK(x == 1.0 / 256);
  uniform.update(ctx, 'a');
  uniform.predict(ctx, p);
  CHECK(p['a'] == 1.0 / 256);
  CHECK(uniform.footprint().serialized_bytes == 0);

  AdaptiveFrequencyPredictor laplace;
  const auto aa = symbols_of("aa");
  for (std::size_t i = 0; i < aa.size(); ++i) laplace.update(std::span(aa).first(i), aa[i]);
  laplace.predict(aa, p);
  CHECK(p[97] == doctest::Approx(3.0 / 258).epsilon(1e-15));
  CHECK(p[98] == doctest::Approx(1.0 / 258).epsilon(1e-15));

  const double before = p['z'];
  laplace.update(aa, 'z');
  laplace.predict(aa, p);
  CHECK(p['z'] > before);
  laplace.reset();
  laplace.predict(aa, p);
  CHECK(p['a'] == doctest::Approx(1.0 / 256).epsilon(1e-15));

  AdaptiveFrequencyPredictor kt(256, 0.5);
  kt.update({}, 'x');
  kt.predict({}, p);
  CHECK(p['x'] == doctest::Approx(1.5 / 129).epsilon(1e-15));
}

TEST_CASE("untrained backoff predictor starts uniform") {
  ContextBackoffPredictor predictor(256, 3, true);
  std::vector<double> p(256);
  const auto ctx = symbols_of("abc");
  predictor.predict(ctx, p);
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 256).epsilon(1e-15));
  CHECK(predictor.footprint().serialized_bytes == 0);
}

TEST_CASE("trained backoff footprint is the dump size at its order") {
  std::mt19937_64 rng(41);
  auto trained = std::make_shared<ContextStats>(5, 256);
  train(*trained, random_text(rng, 10000, 50));
  for (unsigned order = 0; order <= 5; ++order) {
    ContextBackoffPredictor predictor(256, order, false, trained);
    CHECK(predictor.footprint().serialized_bytes == trained->serialize(order).size());
  }
}

TEST_CASE("frozen predictor conditionals obey the chain rule") {
  std::mt19937_64 rng(43);
  auto trained = std::make_shared<ContextStats>(3, 256);
  train(*trained, random_text(rng, 5000, 30));
  ContextBackoffPredictor frozen(256, 3, false, trained);
  const auto seq = random_text(rng, 400, 30);
  std::vector<double> p(256);
  double chain = 0, direct = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    frozen.predict(std::span(seq).first(i), p);
    chain += std::log2(p[seq[i]]);
    direct += std::log2(backoff_probability(*trained, std::span(seq).first(i), seq[i], 3));
  }
  CHECK(chain == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("inverting equal code lengths gives the uniform distribution") {
  std::vector<double> p(256);
  invert_codec([](std::span<const std::uint8_t>) { return 100.0; }, {}, 256, p);
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 256).epsilon(1e-15));
}

TEST_CASE("inversion ignores a constant added to every code length") {
  std::mt19937_64 rng(47);
  std::vector<double> lengths(256);
  for (auto& l : lengths) l = 8.0 * static_cast<double>(10 + rng() % 6);
  auto length = [&](double shift) {
    return [&, shift](std::span<const std::uint8_t> bytes) { return lengths[bytes.back()] + shift; };
  };
  std::vector<double> a(256), b(256);
  invert_codec(length(0.0), {}, 256, a);
  invert_codec(length(800.0), {}, 256, b);
  for (std::size_t i = 0; i < 256; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("inverted deflate predicts the repeated byte") {
  auto codec = make_codec("deflate");
  const std::vector<std::uint8_t> context(1000, 120);
  std::vector<double> p(256);
  invert_codec([&](std::span<const std::uint8_t> b) { return codec->code_length_bits(b); },
               context, 256, p);
  // Oracle: compress every extension directly.
  std::size_t best = 0;
  std::size_t best_size = SIZE_MAX;
  auto extended = context;
  extended.push_back(0);
  for (std::size_t b = 0; b < 256; ++b) {
    extended.back() = static_cast<std::uint8_t>(b);
    const auto size = codec->compress(extended).size();
    if (size < best_size) best_size = size, best = b;
  }
  CHECK(best == 120);
  CHECK(std::max_element(p.begin(), p.end()) - p.begin() == 120);
}

TEST_CASE("inverted deflate distributions are normalized") {
  CodecInvertedPredictor predictor("deflate");
  std::mt19937_64 rng(53);
  std::vector<double> p(256);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Symbol> ctx(rng() % 300);
    for (auto& c : ctx) c = static_cast<Symbol>(rng() % 8 + 'a');
    predictor.predict(ctx, p);
    double sum = 0;
    for (double x : p) {
      REQUIRE(x > 0.0);
      sum += x;
    }
    REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("factory builds every kind and checks artifact hashes") {
  CHECK(make_predictor(PredictorSpec::parse("uniform"))->alphabet_size() == 256);
  CHECK(make_predictor(PredictorSpec::parse("adaptive:alpha=0.5"))->spec().get_double("alpha", 0) == 0.5);
  CHECK(make_predictor(PredictorSpec::parse("codec:codec=lzma2"))->spec().get_or("codec", "") == "lzma2");

  ContextStats stats(2, 256);
  train(stats, symbols_of("abracadabra"));
  const auto dump = stats.serialize();
  const auto dir = std::filesystem::temp_directory_path() / "lmz_model_test";
  std::filesystem::create_directories(dir);
  write_file((dir / "t.lmzt").string(), dump);
  ArtifactStore store{dir};
  const auto good = PredictorSpec::parse("backoff:order=2,trie=t.lmzt,trie_sha256=" + sha256_hex(dump));
  auto predictor = make_predictor(good, store);
  CHECK(predictor->footprint().serialized_bytes == dump.size());
  const auto bad = PredictorSpec::parse("backoff:order=2,trie=t.lmzt,trie_sha256=00");
  try {
    make_predictor(bad, store);
    FAIL("expected predictor mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::predictor_mismatch);
  }
}
