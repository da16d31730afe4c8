#include <doctest.h>

#include <cstdlib>
#include <random>

#include "lmz/codecs.hpp"
#include "lmz/datapipe.hpp"
#include "lmz/errors.hpp"

using namespace lmz;

namespace {

std::vector<std::uint8_t> random_chunk(std::mt19937_64& rng) {
  const std::size_t n = rng() % 2049;
  std::vector<std::uint8_t> out(n);
  switch (rng() % 3) {
    case 0:
      for (auto& b : out) b = static_cast<std::uint8_t>(rng());
      break;
    case 1: {
      const auto text = make_text_fixture(n, rng());
      std::copy(text.begin(), text.end(), out.begin());
      break;
    }
    default:
      std::fill(out.begin(), out.end(), static_cast<std::uint8_t>(rng()));
  }
  return out;
}

double rate(std::size_t compressed, std::size_t raw) {
  return 100.0 * static_cast<double>(compressed) / static_cast<double>(raw);
}

}  // namespace

TEST_CASE("every adapter round-trips 1000 random chunks") {
  for (const auto& id : codec_ids()) {
    auto codec = make_codec(id);
    CAPTURE(id);
    std::mt19937_64 rng(id.size());
    for (int i = 0; i < 1000; ++i) {
      const auto chunk = random_chunk(rng);
      const auto blob = codec->compress(chunk);
      REQUIRE(codec->decompress(blob, chunk.size()) == chunk);
    }
  }
}

TEST_CASE("constant input compresses below two percent") {
  const std::vector<std::uint8_t> zeros(1 << 20, 0);
  for (const char* id : {"deflate", "lzma2"}) {
    auto codec = make_codec(id);
    CHECK(rate(codec->compress(zeros).size(), zeros.size()) < 2.0);
  }
}

TEST_CASE("random input does not compress") {
  const auto data = make_random_fixture(1 << 20, 9);
  for (const auto& id : codec_ids()) {
    auto codec = make_codec(id);
    const double r = rate(compress_whole(*codec, data), data.size());
    CAPTURE(id);
    CHECK(r >= 99.0);
    // png pays one filter byte per 64-pixel row.
    const double ceiling = id == "flac" ? 110.0 : id == "png" ? 101.0 + 100.0 / kPngWidth : 101.0;
    CHECK(r <= ceiling);
  }
}

TEST_CASE("header bytes are the cost of empty input") {
  for (const auto& id : codec_ids()) {
    auto codec = make_codec(id);
    CAPTURE(id);
    CHECK(codec->header_bytes() == codec->compress({}).size());
    CHECK(codec->header_bytes() > 0);
  }
  CHECK(make_codec("deflate")->header_bytes() == 20);
}

TEST_CASE("chunked accounting counts the header once") {
  const auto data = make_text_fixture(5 * 2048 + 300, 10);
  for (const auto& id : codec_ids()) {
    auto codec = make_codec(id);
    const std::size_t header = codec->header_bytes();
    std::uint64_t expected = header;
    for (std::size_t start = 0; start < data.size(); start += 2048) {
      const auto chunk = std::span(data).subspan(start, std::min<std::size_t>(2048, data.size() - start));
      expected += codec->compress(chunk).size() - header;
    }
    CAPTURE(id);
    CHECK(compress_chunked(*codec, data) == expected);
    CHECK(compress_whole(*codec, data) == codec->compress(data).size());
  }
  auto deflate = make_codec("deflate");
  CHECK(compress_chunked(*deflate, {}) == deflate->header_bytes());
  CHECK_THROWS_AS(compress_chunked(*deflate, data, 0), Error);
}

TEST_CASE("corrupt blobs and unknown codecs") {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
  for (const char* id : {"deflate", "lzma2", "png"}) {
    auto codec = make_codec(id);
    CAPTURE(id);
    CHECK_THROWS_AS(codec->decompress(junk, 4), Error);
  }
  auto deflate = make_codec("deflate");
  const std::vector<std::uint8_t> abc{'a', 'b', 'c'};
  CHECK_THROWS_AS(deflate->decompress(deflate->compress(abc), 4), Error);
  try {
    make_codec("zstd");
    FAIL("accepted an unknown codec");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
  }
}

TEST_CASE("png lays bytes out 64 pixels wide") {
  auto png = make_codec("png");
  const std::vector<std::uint8_t> ramp = [] {
    std::vector<std::uint8_t> v(200);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::uint8_t>(i);
    return v;
  }();
  const auto blob = png->compress(ramp);
  // IHDR width and height, big-endian at offsets 16 and 20.
  CHECK(blob[19] == 64);
  CHECK(blob[23] == 4);
  CHECK(png->decompress(blob, ramp.size()) == ramp);
}

TEST_CASE("a broken flac seam is reported as unavailable") {
  setenv("LMZ_FLAC_CMD", "/nonexistent/flac-seam", 1);
  try {
    make_codec("flac");
    FAIL("flac seam should not start");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::adapter_unavailable);
  }
  unsetenv("LMZ_FLAC_CMD");
  CHECK(make_codec("flac")->id() == "flac");
}
