#include "lmz/datapipe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>
#include <png.h>

#include "lmz/byte_io.hpp"
#include "lmz/errors.hpp"

namespace lmz {

const char* to_string(Modality modality) {
  switch (modality) {
    case Modality::text: return "text";
    case Modality::image: return "image";
    case Modality::audio: return "audio";
    case Modality::random: return "random";
  }
  return "unknown";
}

Modality parse_modality(const std::string& name) {
  if (name == "text") return Modality::text;
  if (name == "image") return Modality::image;
  if (name == "audio") return Modality::audio;
  if (name == "random") return Modality::random;
  fail(ErrorKind::invalid_argument, "unknown modality '" + name + "'");
}

SevenBit to_seven_bit(std::span<const std::uint8_t> bytes, Modality modality) {
  SevenBit out;
  out.bytes.resize(bytes.size());
  if (modality == Modality::text) {
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      out.bytes[i] = bytes[i] & 0x7F;
      if (bytes[i] & 0x80) out.lost_bits.push_back(true);
    }
  } else {
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      out.bytes[i] = bytes[i] >> 1;
      out.lost_bits.push_back(bytes[i] & 1);
    }
  }
  return out;
}

std::vector<std::uint8_t> from_seven_bit_halved(std::span<const std::uint8_t> bytes,
                                                const BitString& lost_bits) {
  if (lost_bits.size() != bytes.size())
    fail(ErrorKind::corrupt_stream, "lost-bit sidecar does not match the data");
  std::vector<std::uint8_t> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (bytes[i] > 127) fail(ErrorKind::corrupt_stream, "byte is not 7-bit");
    out[i] = static_cast<std::uint8_t>((bytes[i] << 1) | (lost_bits[i] ? 1 : 0));
  }
  return out;
}

BitString msb_plane(std::span<const std::uint8_t> bytes) {
  BitString plane;
  for (auto b : bytes) plane.push_back(b & 0x80);
  return plane;
}

std::vector<std::uint8_t> restore_msb(std::span<const std::uint8_t> seven_bit,
                                      const BitString& plane) {
  if (plane.size() != seven_bit.size())
    fail(ErrorKind::corrupt_stream, "bit plane does not match the data");
  std::vector<std::uint8_t> out(seven_bit.size());
  for (std::size_t i = 0; i < seven_bit.size(); ++i) {
    if (seven_bit[i] > 127) fail(ErrorKind::corrupt_stream, "byte is not 7-bit");
    out[i] = static_cast<std::uint8_t>(seven_bit[i] | (plane[i] ? 0x80 : 0));
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> extract_image_patches(
    std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width) {
  if (pixels.size() != height * width)
    fail(ErrorKind::invalid_argument, "pixel count does not match the image size");
  std::vector<std::vector<std::uint8_t>> patches;
  for (std::size_t top = 0; top + kPatchHeight <= height; top += kPatchHeight) {
    for (std::size_t left = 0; left + kPatchWidth <= width; left += kPatchWidth) {
      std::vector<std::uint8_t> patch;
      patch.reserve(kPatchHeight * kPatchWidth);
      for (std::size_t r = 0; r < kPatchHeight; ++r) {
        const auto row = pixels.subspan((top + r) * width + left, kPatchWidth);
        patch.insert(patch.end(), row.begin(), row.end());
      }
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

std::vector<std::uint8_t> reduce_audio(std::span<const std::int16_t> samples) {
  std::vector<std::uint8_t> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out[i] = static_cast<std::uint8_t>((samples[i] >> 8) + 128);
  return out;
}

std::vector<Chunk> chunk_stream(std::span<const std::uint8_t> bytes, Modality modality,
                                std::size_t chunk_size) {
  if (chunk_size == 0) fail(ErrorKind::invalid_argument, "chunk size must be positive");
  std::vector<Chunk> chunks;
  chunks.reserve(chunk_count(bytes.size(), chunk_size));
  for (std::size_t pos = 0; pos < bytes.size(); pos += chunk_size) {
    const auto piece = bytes.subspan(pos, std::min(chunk_size, bytes.size() - pos));
    chunks.push_back({{piece.begin(), piece.end()}, modality, pos, {}});
  }
  return chunks;
}

std::size_t chunk_count(std::size_t total_bytes, std::size_t chunk_size) {
  return (total_bytes + chunk_size - 1) / chunk_size;
}

namespace {

// Platform-independent draws (the standard distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t bits() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  bool chance(double p) { return uniform() < p; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Sum of four uniforms: cheap bell-shaped noise with unit variance.
  double noise() {
    double s = 0;
    for (int i = 0; i < 4; ++i) s += uniform();
    return (s - 2.0) * std::sqrt(3.0);
  }

 private:
  std::mt19937_64 engine_;
};

class Zipf {
 public:
  Zipf(std::size_t n, double exponent, double offset) : cumulative_(n) {
    double total = 0;
    for (std::size_t r = 0; r < n; ++r) {
      total += 1.0 / std::pow(static_cast<double>(r) + offset, exponent);
      cumulative_[r] = total;
    }
    for (auto& c : cumulative_) c /= total;
  }
  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

constexpr std::array<const char*, 72> kFunctionWords = {
    "the",   "of",    "and",   "in",    "to",     "a",     "is",    "was",   "for",
    "as",    "by",    "with",  "on",    "that",   "from",  "his",   "at",    "it",
    "an",    "are",   "which", "were",  "this",   "be",    "or",    "has",   "had",
    "also",  "first", "not",   "its",   "their",  "one",   "after", "but",   "two",
    "new",   "they",  "he",    "who",   "been",   "have",  "more",  "other", "all",
    "into",  "she",   "her",   "most",  "during", "only",  "when",  "there", "time",
    "would", "between", "such", "many", "city",   "later", "known", "where", "years",
    "some",  "these", "under", "three", "while",  "state", "about", "world", "since"};

constexpr std::array<const char*, 20> kOnsets = {"b", "c", "d", "f", "g", "h", "k", "l", "m", "n",
                                                 "p", "r", "s", "t", "v", "w", "st", "tr", "ch", "br"};
constexpr std::array<const char*, 12> kNuclei = {"a", "e", "i", "o", "u", "ai", "ea", "ou", "io", "ar", "er", "on"};
constexpr std::array<const char*, 8> kCodas = {"", "", "", "n", "s", "r", "l", "t"};
constexpr std::array<const char*, 8> kAccented = {"\xC3\xA9", "\xC3\xB6", "\xC3\xB1", "\xC3\xA8",
                                                  "\xC3\xBC", "\xC3\xA1", "\xC3\xA7", "\xC5\x82"};

struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::uint32_t> followers;  // kFollowers per word
  static constexpr std::size_t kFollowers = 6;
};

Vocabulary build_vocabulary(Rng& rng, std::size_t size) {
  Vocabulary v;
  for (const char* w : kFunctionWords) v.words.emplace_back(w);
  while (v.words.size() < size) {
    // Frequent ranks get short words.
    const double rank = static_cast<double>(v.words.size()) / static_cast<double>(size);
    const std::size_t syllables = 1 + static_cast<std::size_t>(rank * 2.5 + rng.uniform() * 1.6);
    std::string word;
    for (std::size_t s = 0; s < syllables; ++s) {
      word += kOnsets[rng.below(kOnsets.size())];
      if (rng.chance(0.01)) {
        word += kAccented[rng.below(kAccented.size())];
      } else {
        word += kNuclei[rng.below(kNuclei.size())];
      }
      if (s + 1 == syllables) word += kCodas[rng.below(kCodas.size())];
    }
    v.words.push_back(std::move(word));
  }
  Zipf zipf(size, 1.0, 2.7);
  v.followers.resize(size * Vocabulary::kFollowers);
  for (auto& f : v.followers) f = static_cast<std::uint32_t>(zipf(rng));
  return v;
}

class TextWriter {
 public:
  TextWriter(std::size_t n, std::uint64_t seed)
      : limit_(n), rng_(seed), vocab_(build_vocabulary(rng_, 30000)), zipf_(30000, 1.05, 2.7) {
    out_.reserve(n + 4096);
  }

  std::vector<std::uint8_t> run() {
    emit("<mediawiki xml:lang=\"en\">\n");
    while (out_.size() < limit_) page();
    out_.resize(limit_);
    return std::move(out_);
  }

 private:
  void emit(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

  std::size_t next_word() {
    if (previous_ < vocab_.words.size() && rng_.chance(0.5)) {
      // Geometric pick among the word's usual followers.
      std::size_t slot = 0;
      while (slot + 1 < Vocabulary::kFollowers && rng_.chance(0.45)) ++slot;
      previous_ = vocab_.followers[previous_ * Vocabulary::kFollowers + slot];
    } else {
      previous_ = zipf_(rng_);
    }
    return previous_;
  }

  std::string capitalized(std::size_t word) {
    std::string w = vocab_.words[word];
    if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 32);
    return w;
  }

  std::string title() {
    std::string t = capitalized(zipf_(rng_) + 40);
    const std::size_t extra = rng_.below(3);
    for (std::size_t i = 0; i < extra; ++i) t += " " + capitalized(zipf_(rng_) + 40);
    return t;
  }

  void sentence(bool lead, const std::string& page_title) {
    const std::size_t length = 5 + rng_.below(20);
    previous_ = SIZE_MAX;
    if (lead) {
      emit("'''" + page_title + "''' ");
      emit(rng_.chance(0.5) ? "is a " : "was the ");
    }
    for (std::size_t i = 0; i < length; ++i) {
      std::string word = vocab_.words[next_word()];
      if (i == 0 && !lead) word = capitalized(previous_);
      if (rng_.chance(0.05)) {
        emit("[[" + word + "]]");
      } else if (rng_.chance(0.01)) {
        emit("[[" + capitalized(zipf_(rng_)) + "|" + word + "]]");
      } else if (rng_.chance(0.015)) {
        emit(std::to_string(1700 + rng_.below(320)));
      } else {
        emit(word);
      }
      if (i + 1 < length) emit(rng_.chance(0.07) ? ", " : " ");
    }
    emit(rng_.chance(0.9) ? "." : ";");
  }

  void page() {
    const std::string page_title = title();
    ++page_id_;
    emit("  <page>\n    <title>" + page_title + "</title>\n    <id>" +
         std::to_string(page_id_) + "</id>\n    <revision>\n      <id>" +
         std::to_string(100000 + page_id_ * 7 + rng_.below(7)) +
         "</id>\n      <timestamp>200" + std::to_string(1 + rng_.below(8)) + "-" +
         two_digits(1 + rng_.below(12)) + "-" + two_digits(1 + rng_.below(28)) + "T" +
         two_digits(rng_.below(24)) + ":" + two_digits(rng_.below(60)) + ":" +
         two_digits(rng_.below(60)) + "Z</timestamp>\n      <contributor>\n        <username>" +
         capitalized(zipf_(rng_) + 100) + "</username>\n        <id>" +
         std::to_string(1 + rng_.below(90000)) +
         "</id>\n      </contributor>\n      <text xml:space=\"preserve\">");
    const std::size_t paragraphs = 1 + rng_.below(10);
    for (std::size_t p = 0; p < paragraphs; ++p) {
      if (p > 0 && rng_.chance(0.35)) emit("== " + title() + " ==\n");
      const std::size_t sentences = 2 + rng_.below(6);
      for (std::size_t s = 0; s < sentences; ++s) {
        sentence(p == 0 && s == 0, page_title);
        emit(s + 1 < sentences ? " " : "\n\n");
      }
    }
    const std::size_t categories = 1 + rng_.below(3);
    for (std::size_t c = 0; c < categories; ++c) emit("[[Category:" + title() + "]]\n");
    emit("</text>\n    </revision>\n  </page>\n");
  }

  static std::string two_digits(std::size_t v) {
    return (v < 10 ? "0" : "") + std::to_string(v);
  }

  std::size_t limit_;
  Rng rng_;
  Vocabulary vocab_;
  Zipf zipf_;
  std::vector<std::uint8_t> out_;
  std::size_t previous_ = SIZE_MAX;
  std::size_t page_id_ = 0;
};

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::vector<std::uint8_t> make_random_fixture(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; i += 8) {
    std::uint64_t word = engine();
    for (std::size_t k = 0; k < 8 && i + k < n; ++k, word >>= 8)
      out[i + k] = static_cast<std::uint8_t>(word);
  }
  return out;
}

std::vector<std::uint8_t> make_text_fixture(std::size_t n, std::uint64_t seed) {
  return TextWriter(n, seed).run();
}

std::vector<std::uint8_t> make_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  std::vector<double> field(height * width);
  // Smooth shading: a gradient plus a few low-frequency waves.
  const double base = rng.range(60, 190);
  const double gx = rng.range(-60, 60) / w, gy = rng.range(-60, 60) / h;
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves(3);
  for (auto& wave : waves)
    wave = {rng.range(0.5, 3) * 2 * std::numbers::pi / w, rng.range(0.5, 3) * 2 * std::numbers::pi / h,
            rng.range(0, 2 * std::numbers::pi), rng.range(5, 25)};
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      double v = base + gx * static_cast<double>(x) + gy * static_cast<double>(y);
      for (const auto& wave : waves)
        v += wave.amp * std::sin(wave.fx * static_cast<double>(x) + wave.fy * static_cast<double>(y) + wave.phase);
      field[y * width + x] = v;
    }
  // Objects: discs and boxes with their own shading and hard edges.
  const std::size_t objects = 4 + rng.below(8);
  for (std::size_t o = 0; o < objects; ++o) {
    const double cx = rng.range(0, w), cy = rng.range(0, h);
    const double r = rng.range(6, std::min(h, w) / 3);
    const double level = rng.range(10, 245);
    const double slope = rng.range(-1.5, 1.5);
    const bool disc = rng.chance(0.5);
    const auto y0 = static_cast<std::size_t>(std::max(0.0, cy - r));
    const auto y1 = static_cast<std::size_t>(std::min(h, cy + r));
    const auto x0 = static_cast<std::size_t>(std::max(0.0, cx - r));
    const auto x1 = static_cast<std::size_t>(std::min(w, cx + r));
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        if (disc && dx * dx + dy * dy > r * r) continue;
        field[y * width + x] = level + slope * dy;
      }
  }
  // Fine texture and sensor noise.
  const double grain = rng.range(1.0, 4.0);
  std::vector<std::uint8_t> pixels(height * width);
  for (std::size_t i = 0; i < pixels.size(); ++i)
    pixels[i] = clamp_byte(field[i] + grain * rng.noise());
  return pixels;
}

std::vector<std::uint8_t> make_image_fixture(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint8_t> out;
  out.reserve(n + kChunkSize * 48);
  for (std::uint64_t picture = 0; out.size() < n; ++picture) {
    const auto pixels = make_image(256, 384, seed * 1000003 + picture);
    for (auto& patch : extract_image_patches(pixels, 256, 384))
      out.insert(out.end(), patch.begin(), patch.end());
  }
  out.resize(n);
  return out;
}

std::vector<std::int16_t> make_audio_samples(std::size_t count, std::uint64_t seed) {
  constexpr double kRate = 16000.0;
  constexpr double kTwoPi = 2 * std::numbers::pi;
  Rng rng(seed);
  std::vector<std::int16_t> out;
  out.reserve(count);
  double lowpass = 0;
  while (out.size() < count) {
    const double kind = rng.uniform();
    const auto length = static_cast<std::size_t>(rng.range(0.08, 0.4) * kRate);
    if (kind < 0.55) {
      // Voiced: harmonics of a drifting pitch, shaped by three formants.
      double f0 = rng.range(90, 240);
      const double drift = rng.range(-40, 40) / static_cast<double>(length);
      const double formants[3] = {rng.range(300, 900), rng.range(900, 2500), rng.range(2500, 3500)};
      const double peak = rng.range(3000, 12000);
      std::array<double, 24> gains{};
      double phase = 0;
      for (std::size_t i = 0; i < length && out.size() < count; ++i) {
        if (i % 160 == 0) {
          for (std::size_t k = 0; k < gains.size(); ++k) {
            const double f = f0 * static_cast<double>(k + 1);
            double g = 0;
            for (double fm : formants) g += std::exp(-((f - fm) * (f - fm)) / (2 * 120.0 * 120.0));
            gains[k] = f < kRate / 2 ? g / static_cast<double>(k + 1) : 0.0;
          }
        }
        f0 += drift;
        phase += kTwoPi * f0 / kRate;
        if (phase > kTwoPi) phase -= kTwoPi;
        double v = 0;
        for (std::size_t k = 0; k < gains.size(); ++k)
          if (gains[k] > 1e-4) v += gains[k] * std::sin(phase * static_cast<double>(k + 1));
        const double t = static_cast<double>(i) / static_cast<double>(length);
        const double envelope = std::sin(std::numbers::pi * t);
        const double s = peak * envelope * v + 30.0 * rng.noise();
        out.push_back(static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0)));
      }
    } else if (kind < 0.75) {
      // Unvoiced: high-passed noise burst.
      const double amp = rng.range(300, 2500);
      for (std::size_t i = 0; i < length && out.size() < count; ++i) {
        const double white = rng.noise();
        lowpass = 0.7 * lowpass + 0.3 * white;
        const double t = static_cast<double>(i) / static_cast<double>(length);
        const double s = amp * std::sin(std::numbers::pi * t) * (white - lowpass);
        out.push_back(static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0)));
      }
    } else {
      // Pause: room noise only.
      for (std::size_t i = 0; i < length && out.size() < count; ++i)
        out.push_back(static_cast<std::int16_t>(std::lround(40.0 * rng.noise())));
    }
  }
  return out;
}

std::vector<std::uint8_t> make_audio_fixture(std::size_t n, std::uint64_t seed) {
  return reduce_audio(make_audio_samples(n, seed));
}

std::vector<std::uint8_t> make_fixture(Modality modality, std::size_t n, std::uint64_t seed) {
  switch (modality) {
    case Modality::text: return make_text_fixture(n, seed);
    case Modality::image: return make_image_fixture(n, seed);
    case Modality::audio: return make_audio_fixture(n, seed);
    case Modality::random: return make_random_fixture(n, seed);
  }
  fail(ErrorKind::invalid_argument, "unknown modality");
}

namespace {

struct PngInput {
  std::vector<std::uint8_t> bytes;
  std::size_t position = 0;
};

void png_read_memory(png_structp png, png_bytep data, png_size_t length) {
  auto* in = static_cast<PngInput*>(png_get_io_ptr(png));
  if (in->position + length > in->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, in->bytes.data() + in->position, length);
  in->position += length;
}

void png_write_memory(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_no_flush(png_structp) {}

void png_quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_quiet_warning(png_structp, png_const_charp) {}

void decode_gray(PngInput& in, GrayImage& image) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorKind::io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::io, "cannot decode PNG");
  }
  png_set_read_fn(png, &in, png_read_memory);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  const auto color = png_get_color_type(png, info);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != image.width) png_error(png, "unexpected row layout");
  image.pixels.resize(image.width * image.height);
  std::vector<png_bytep> rows(image.height);
  for (std::size_t r = 0; r < image.height; ++r) rows[r] = image.pixels.data() + r * image.width;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
}

void encode_gray(const GrayImage& image, std::vector<png_bytep>& rows,
                 std::vector<std::uint8_t>& out) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorKind::io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "cannot encode PNG");
  }
  png_set_write_fn(png, &out, png_write_memory, png_no_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

GrayImage read_png_gray(const std::string& path) {
  PngInput in{read_file(path), 0};
  GrayImage image;
  decode_gray(in, image);
  return image;
}

void write_png_gray(const std::string& path, const GrayImage& image) {
  if (image.pixels.size() != image.height * image.width || image.pixels.empty())
    fail(ErrorKind::invalid_argument, "image size does not match its pixels");
  std::vector<png_bytep> rows(image.height);
  for (std::size_t r = 0; r < image.height; ++r)
    rows[r] = const_cast<png_bytep>(image.pixels.data() + r * image.width);
  std::vector<std::uint8_t> out;
  encode_gray(image, rows, out);
  write_file(path, out);
}

WavAudio read_wav(const std::string& path) {
  const auto bytes = read_file(path);
  ByteCursor in(bytes);
  try {
    const auto riff = in.take(4);
    in.le<std::uint32_t>();
    const auto wave = in.take(4);
    if (std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(wave.data(), "WAVE", 4) != 0)
      fail(ErrorKind::io, path + " is not a WAV file");
    std::uint16_t channels = 0, bits = 0, format = 0;
    WavAudio audio;
    while (in.remaining() >= 8) {
      const auto id = in.take(4);
      const auto size = in.le<std::uint32_t>();
      if (std::memcmp(id.data(), "fmt ", 4) == 0) {
        ByteCursor fmt(in.take(size));
        format = fmt.le<std::uint16_t>();
        channels = fmt.le<std::uint16_t>();
        audio.sample_rate = fmt.le<std::uint32_t>();
        fmt.le<std::uint32_t>();
        fmt.le<std::uint16_t>();
        bits = fmt.le<std::uint16_t>();
      } else if (std::memcmp(id.data(), "data", 4) == 0) {
        if ((format != 1 && format != 0xFFFE) || bits != 16 || channels == 0)
          fail(ErrorKind::io, path + " is not 16-bit PCM");
        // A truncated final frame is dropped.
        const std::size_t available = std::min<std::size_t>(size, in.remaining());
        const std::size_t frames = available / (2u * channels);
        ByteCursor data(in.take(available));
        for (std::size_t f = 0; f < frames; ++f) {
          audio.samples.push_back(static_cast<std::int16_t>(data.le<std::uint16_t>()));
          for (std::size_t c = 1; c < channels; ++c) data.le<std::uint16_t>();
        }
        return audio;
      } else {
        in.take(std::min<std::size_t>(size + (size & 1), in.remaining()));
        continue;
      }
      if (size & 1) in.take(1);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    fail(ErrorKind::io, path + " is a malformed WAV file");
  }
  fail(ErrorKind::io, path + " has no data chunk");
}

void write_wav(const std::string& path, const WavAudio& audio) {
  std::vector<std::uint8_t> out{'R', 'I', 'F', 'F'};
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  put_le<std::uint32_t>(out, 36 + data_bytes);
  for (char c : std::string("WAVEfmt ")) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, audio.sample_rate);
  put_le<std::uint32_t>(out, audio.sample_rate * 2);
  put_le<std::uint16_t>(out, 2);
  put_le<std::uint16_t>(out, 16);
  for (char c : std::string("data")) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint32_t>(out, data_bytes);
  for (auto s : audio.samples) put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s));
  write_file(path, out);
}

std::string manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["modality"] = to_string(m.modality);
  j["total_bytes"] = m.total_bytes;
  j["chunk_count"] = m.chunk_count;
  j["source"] = m.source;
  j["transforms"] = m.transforms;
  j["seed"] = m.seed;
  j["sha256"] = m.sha256;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::io, "manifest is not JSON");
  try {
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.modality = parse_modality(j.at("modality").get<std::string>());
    m.total_bytes = j.at("total_bytes").get<std::uint64_t>();
    m.chunk_count = j.at("chunk_count").get<std::uint64_t>();
    m.source = j.value("source", std::string());
    m.transforms = j.value("transforms", std::vector<std::string>{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.sha256 = j.value("sha256", std::string());
    if (m.chunk_count != chunk_count(m.total_bytes))
      fail(ErrorKind::io, "manifest chunk count disagrees with its size");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, std::string("bad manifest: ") + e.what());
  }
}

}  // namespace lmz
