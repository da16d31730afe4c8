#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmz {

// Packed MSB-first bit sequence. The final byte is zero padded; length() is
// the true bit count.
class BitString {
 public:
  BitString() = default;

  static BitString from_bytes(std::span<const std::uint8_t> bytes,
                              std::size_t bit_length);
  static BitString from_string(std::string_view zeros_and_ones);

  void push_back(bool bit);
  void append(bool bit, std::size_t copies);
  bool operator[](std::size_t i) const {
    return (bytes_[i >> 3] >> (7 - (i & 7))) & 1;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t byte_size() const { return bytes_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  // Drops trailing zero bits. Readers pad with zeros, so the value is kept.
  void trim_trailing_zeros();

  std::string to_string() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t size_ = 0;
};

// Sequential reader that yields zeros after the end of the string.
class BitReader {
 public:
  explicit BitReader(const BitString& bits) : bits_(&bits) {}

  unsigned next() {
    const std::size_t i = pos_++;
    return i < bits_->size() ? static_cast<unsigned>((*bits_)[i]) : 0u;
  }
  std::size_t consumed() const { return pos_; }

 private:
  const BitString* bits_;
  std::size_t pos_ = 0;
};

}  // namespace lmz
