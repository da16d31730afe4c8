#include "lmz/codecs.hpp"

#include <algorithm>
#include <chrono>
#include <csetjmp>
#include <cstdlib>
#include <cstring>

#include <lzma.h>
#include <png.h>
#include <zlib.h>

#include "lmz/byte_io.hpp"
#include "lmz/errors.hpp"
#include "lmz/subprocess.hpp"

#ifndef LMZ_TOOLS_DIR
#define LMZ_TOOLS_DIR "tools"
#endif

namespace lmz {

std::size_t CodecAdapter::header_bytes() {
  if (!header_) header_ = compress({}).size();
  return *header_;
}

namespace {

class DeflateCodec final : public CodecAdapter {
 public:
  DeflateCodec() {
    std::memset(&stream_, 0, sizeof stream_);
    // windowBits 15 + 16 selects the gzip wrapper.
    if (deflateInit2(&stream_, 9, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
      fail(ErrorKind::adapter_unavailable, "zlib init failed");
  }
  ~DeflateCodec() override { deflateEnd(&stream_); }

  std::string id() const override { return "deflate"; }

  std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data) override {
    deflateReset(&stream_);
    std::vector<std::uint8_t> out(deflateBound(&stream_, data.size()));
    stream_.next_in = const_cast<Bytef*>(data.data());
    stream_.avail_in = static_cast<uInt>(data.size());
    stream_.next_out = out.data();
    stream_.avail_out = static_cast<uInt>(out.size());
    if (deflate(&stream_, Z_FINISH) != Z_STREAM_END)
      fail(ErrorKind::adapter_unavailable, "deflate did not finish");
    out.resize(stream_.total_out);
    return out;
  }

  std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> blob,
                                       std::size_t original_size) override {
    z_stream in{};
    if (inflateInit2(&in, 15 + 16) != Z_OK)
      fail(ErrorKind::adapter_unavailable, "zlib init failed");
    std::vector<std::uint8_t> out(original_size + 1);
    in.next_in = const_cast<Bytef*>(blob.data());
    in.avail_in = static_cast<uInt>(blob.size());
    in.next_out = out.data();
    in.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&in, Z_FINISH);
    const auto produced = in.total_out;
    inflateEnd(&in);
    if (rc != Z_STREAM_END || produced != original_size)
      fail(ErrorKind::corrupt_stream, "gzip data does not match its length");
    out.resize(produced);
    return out;
  }

 private:
  z_stream stream_;
};

class Lzma2Codec final : public CodecAdapter {
 public:
  Lzma2Codec() {
    if (lzma_lzma_preset(&options_, 6))
      fail(ErrorKind::adapter_unavailable, "liblzma preset 6 unavailable");
    filters_[0] = {LZMA_FILTER_LZMA2, &options_};
    filters_[1] = {LZMA_VLI_UNKNOWN, nullptr};
  }

  std::string id() const override { return "lzma2"; }

  std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data) override {
    std::vector<std::uint8_t> out(data.size() + data.size() / 16 + 256);
    std::size_t written = 0;
    const lzma_ret rc = lzma_raw_buffer_encode(filters_, nullptr, data.data(),
                                               data.size(), out.data(), &written,
                                               out.size());
    if (rc != LZMA_OK) fail(ErrorKind::adapter_unavailable, "lzma2 encode failed");
    out.resize(written);
    return out;
  }

  std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> blob,
                                       std::size_t original_size) override {
    std::vector<std::uint8_t> out(original_size + 1);
    std::size_t in_pos = 0, out_pos = 0;
    const lzma_ret rc = lzma_raw_buffer_decode(filters_, nullptr, blob.data(), &in_pos,
                                               blob.size(), out.data(), &out_pos,
                                               out.size());
    if ((rc != LZMA_OK && rc != LZMA_STREAM_END) || out_pos != original_size)
      fail(ErrorKind::corrupt_stream, "lzma2 data does not match its length");
    out.resize(original_size);
    return out;
  }

 private:
  lzma_options_lzma options_{};
  lzma_filter filters_[2];
};

struct PngBuffer {
  std::vector<std::uint8_t> bytes;
  std::size_t position = 0;
};

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* buffer = static_cast<PngBuffer*>(png_get_io_ptr(png));
  buffer->bytes.insert(buffer->bytes.end(), data, data + length);
}

void png_flush(png_structp) {}

void png_quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_quiet_warning(png_structp, png_const_charp) {}

// Kept free of locals that live across setjmp.
void write_gray(std::vector<png_bytep>& rows, PngBuffer& buffer) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorKind::adapter_unavailable, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::adapter_unavailable, "libpng encode failed");
  }
  png_set_write_fn(png, &buffer, png_append, png_flush);
  png_set_compression_level(png, 9);
  png_set_IHDR(png, info, static_cast<png_uint_32>(kPngWidth),
               static_cast<png_uint_32>(rows.size()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

void png_consume(png_structp png, png_bytep data, png_size_t length) {
  auto* buffer = static_cast<PngBuffer*>(png_get_io_ptr(png));
  if (buffer->position + length > buffer->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, buffer->bytes.data() + buffer->position, length);
  buffer->position += length;
}

class PngCodec final : public CodecAdapter {
 public:
  std::string id() const override { return "png"; }

  std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data) override {
    const std::size_t rows = std::max<std::size_t>(1, (data.size() + kPngWidth - 1) / kPngWidth);
    std::vector<std::uint8_t> pixels(rows * kPngWidth, 0);
    std::copy(data.begin(), data.end(), pixels.begin());
    std::vector<png_bytep> row_pointers(rows);
    for (std::size_t r = 0; r < rows; ++r) row_pointers[r] = pixels.data() + r * kPngWidth;
    PngBuffer buffer;
    write_gray(row_pointers, buffer);
    return std::move(buffer.bytes);
  }

  std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> blob,
                                       std::size_t original_size) override {
    PngBuffer buffer{{blob.begin(), blob.end()}, 0};
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> row_pointers;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
      png_destroy_read_struct(&png, nullptr, nullptr);
      fail(ErrorKind::adapter_unavailable, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_read_struct(&png, &info, nullptr);
      fail(ErrorKind::corrupt_stream, "libpng decode failed");
    }
    png_set_read_fn(png, &buffer, png_consume);
    png_set_user_limits(png, 0x7fffffff, 0x7fffffff);
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    if (width != kPngWidth || png_get_bit_depth(png, info) != 8 ||
        png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
        static_cast<std::size_t>(height) * width < original_size)
      png_error(png, "unexpected PNG geometry");
    pixels.resize(static_cast<std::size_t>(height) * width);
    row_pointers.resize(height);
    for (std::size_t r = 0; r < height; ++r) row_pointers[r] = pixels.data() + r * width;
    png_read_image(png, row_pointers.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    pixels.resize(original_size);
    return pixels;
  }
};

// Framed exchange with the seam process, see tools/flac_seam.py.
class FlacCodec final : public CodecAdapter {
 public:
  FlacCodec()
      : process_(split_command(flac_seam_command()), std::chrono::seconds(60),
                 ErrorKind::adapter_unavailable) {
    const std::uint8_t probe[] = {0, 1, 127, 128, 200, 255};
    if (call('d', call('c', probe)) != std::vector<std::uint8_t>(probe, probe + 6))
      fail(ErrorKind::adapter_unavailable, "flac seam failed its probe");
  }

  std::string id() const override { return "flac"; }

  std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data) override {
    return call('c', data);
  }

  std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> blob,
                                       std::size_t original_size) override {
    auto out = call('d', blob);
    // The seam encodes empty input as one silent sample.
    if (original_size == 0 && out.size() == 1) out.clear();
    if (out.size() != original_size)
      fail(ErrorKind::corrupt_stream, "flac data does not match its length");
    return out;
  }

 private:
  std::vector<std::uint8_t> call(char op, std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> frame{static_cast<std::uint8_t>(op)};
    put_le<std::uint64_t>(frame, payload.size());
    frame.insert(frame.end(), payload.begin(), payload.end());
    process_.write(frame);
    const auto head = process_.read_exact(9);
    ByteCursor cursor(head);
    const std::uint8_t status = cursor.take(1)[0];
    const auto length = cursor.le<std::uint64_t>();
    auto body = process_.read_exact(length);
    if (status != 0)
      fail(ErrorKind::adapter_unavailable,
           "flac seam: " + std::string(body.begin(), body.end()));
    return body;
  }

  Subprocess process_;
};

}  // namespace

std::string flac_seam_command() {
  if (const char* cmd = std::getenv("LMZ_FLAC_CMD"); cmd && *cmd) return cmd;
  const char* tools = std::getenv("LMZ_TOOLS_DIR");
  return std::string("python3 '") + (tools && *tools ? tools : LMZ_TOOLS_DIR) +
         "/flac_seam.py'";
}

std::vector<std::string> codec_ids() { return {"deflate", "lzma2", "png", "flac"}; }

std::unique_ptr<CodecAdapter> make_codec(const std::string& id) {
  if (id == "deflate" || id == "gzip") return std::make_unique<DeflateCodec>();
  if (id == "lzma2") return std::make_unique<Lzma2Codec>();
  if (id == "png") return std::make_unique<PngCodec>();
  if (id == "flac") return std::make_unique<FlacCodec>();
  fail(ErrorKind::invalid_argument, "unknown codec '" + id + "'");
}

std::uint64_t compress_whole(CodecAdapter& codec, std::span<const std::uint8_t> data) {
  return codec.compress(data).size();
}

std::uint64_t compress_chunked(CodecAdapter& codec, std::span<const std::uint8_t> data,
                               std::size_t chunk_size) {
  if (chunk_size == 0) fail(ErrorKind::invalid_argument, "chunk size must be positive");
  const std::uint64_t header = codec.header_bytes();
  std::uint64_t total = header;
  for (std::size_t pos = 0; pos < data.size(); pos += chunk_size) {
    const auto chunk = data.subspan(pos, std::min(chunk_size, data.size() - pos));
    const std::uint64_t size = codec.compress(chunk).size();
    // A chunk can beat the empty-input size only by a byte or two of
    // header variation; clamp so payloads stay non-negative.
    total += size > header ? size - header : 0;
  }
  return total;
}

}  // namespace lmz
