#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lmz {

inline constexpr std::size_t kPngWidth = 64;

// Baseline compressor behind a byte-in, byte-out interface.
class CodecAdapter {
 public:
  virtual ~CodecAdapter() = default;

  virtual std::string id() const = 0;
  virtual std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data) = 0;
  virtual std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> blob,
                                               std::size_t original_size) = 0;

  // Compressed size of the empty input: the fixed per-invocation overhead.
  std::size_t header_bytes();

  // Code length in bits of data under this codec.
  virtual double code_length_bits(std::span<const std::uint8_t> data) {
    return 8.0 * static_cast<double>(compress(data).size());
  }

 private:
  std::optional<std::size_t> header_;
};

// deflate: gzip member, level 9.
// lzma2:   raw LZMA2 stream, preset 6.
// png:     8-bit grayscale, 64 pixels wide, zero-padded last row.
// flac:    8-bit mono PCM at 16 kHz through an external process.
std::vector<std::string> codec_ids();

// Throws adapter_unavailable when the codec cannot run on this host and
// invalid_argument for unknown ids. The flac adapter probes its seam.
std::unique_ptr<CodecAdapter> make_codec(const std::string& id);

// Total compressed bytes of one invocation over the whole stream.
std::uint64_t compress_whole(CodecAdapter& codec, std::span<const std::uint8_t> data);

// Per-chunk payloads (compressed size minus header) summed, plus the header
// counted once.
std::uint64_t compress_chunked(CodecAdapter& codec, std::span<const std::uint8_t> data,
                               std::size_t chunk_size = 2048);

// Command used for the flac seam: $LMZ_FLAC_CMD if set, otherwise
// python3 on tools/flac_seam.py.
std::string flac_seam_command();

}  // namespace lmz
