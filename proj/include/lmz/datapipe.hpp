#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lmz/bitstring.hpp"

namespace lmz {

inline constexpr std::size_t kChunkSize = 2048;
inline constexpr std::size_t kPatchHeight = 32;
inline constexpr std::size_t kPatchWidth = 64;

enum class Modality { text, image, audio, random };

const char* to_string(Modality modality);
Modality parse_modality(const std::string& name);

struct Chunk {
  std::vector<std::uint8_t> payload;
  Modality modality = Modality::text;
  std::uint64_t source_offset = 0;
  BitString lost_bits;
};

struct SevenBit {
  std::vector<std::uint8_t> bytes;
  BitString lost_bits;
};

// Text: clears the top bit and records it only for bytes >= 128 (so the
// sidecar is all ones and only counts the damage). Other modalities: halves
// every byte and records every low bit, which is invertible.
SevenBit to_seven_bit(std::span<const std::uint8_t> bytes, Modality modality);
std::vector<std::uint8_t> from_seven_bit_halved(std::span<const std::uint8_t> bytes,
                                                const BitString& lost_bits);

// Top bit of every byte, one bit per byte. Together with the text variant's
// output this restores the input.
BitString msb_plane(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> restore_msb(std::span<const std::uint8_t> seven_bit,
                                      const BitString& plane);

// Non-overlapping 32x64 patches in row-major scan order, each flattened
// row-major. Border remainders are dropped; images smaller than one patch
// give nothing.
std::vector<std::vector<std::uint8_t>> extract_image_patches(
    std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width);

// (sample >> 8) + 128 per signed 16-bit sample.
std::vector<std::uint8_t> reduce_audio(std::span<const std::int16_t> samples);

// Consecutive chunks; the last one may be short.
std::vector<Chunk> chunk_stream(std::span<const std::uint8_t> bytes,
                                Modality modality = Modality::text,
                                std::size_t chunk_size = kChunkSize);
std::size_t chunk_count(std::size_t total_bytes, std::size_t chunk_size = kChunkSize);

// Deterministic synthetic corpora. The same (n, seed) always yields the same
// bytes.
std::vector<std::uint8_t> make_random_fixture(std::size_t n, std::uint64_t seed);
// Wiki-style XML dump: pages with markup around Zipf-distributed words that
// follow a sparse word-to-word transition table, plus some UTF-8.
std::vector<std::uint8_t> make_text_fixture(std::size_t n, std::uint64_t seed);
// Grayscale picture with smooth shading, shapes, edges and sensor noise.
std::vector<std::uint8_t> make_image(std::size_t height, std::size_t width,
                                     std::uint64_t seed);
// Concatenated 32x64 patches cut from generated pictures.
std::vector<std::uint8_t> make_image_fixture(std::size_t n, std::uint64_t seed);
// Speech-like 16 kHz PCM: voiced segments with drifting pitch and formant
// weighting, unvoiced noise bursts and pauses.
std::vector<std::int16_t> make_audio_samples(std::size_t count, std::uint64_t seed);
// reduce_audio of make_audio_samples.
std::vector<std::uint8_t> make_audio_fixture(std::size_t n, std::uint64_t seed);
std::vector<std::uint8_t> make_fixture(Modality modality, std::size_t n, std::uint64_t seed);

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

// 8-bit grayscale from any PNG (colour is converted, 16-bit is stripped).
GrayImage read_png_gray(const std::string& path);
void write_png_gray(const std::string& path, const GrayImage& image);

// PCM16 WAV; multi-channel files keep the first channel.
struct WavAudio {
  std::uint32_t sample_rate = 0;
  std::vector<std::int16_t> samples;
};
WavAudio read_wav(const std::string& path);
void write_wav(const std::string& path, const WavAudio& audio);

struct DatasetManifest {
  std::string name;
  Modality modality = Modality::text;
  std::uint64_t total_bytes = 0;
  std::uint64_t chunk_count = 0;
  std::string source;
  std::vector<std::string> transforms;
  std::uint64_t seed = 0;
  std::string sha256;
};

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

}  // namespace lmz
