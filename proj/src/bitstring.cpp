#include "lmz/bitstring.hpp"

#include "lmz/errors.hpp"

namespace lmz {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_distribution: return "invalid-distribution";
    case ErrorKind::precision: return "precision";
    case ErrorKind::predictor_unavailable: return "predictor-unavailable";
    case ErrorKind::corrupt_stream: return "corrupt-stream";
    case ErrorKind::unknown_version: return "unknown-version";
    case ErrorKind::predictor_mismatch: return "predictor-mismatch";
    case ErrorKind::adapter_unavailable: return "adapter-unavailable";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes,
                                std::size_t bit_length) {
  if ((bit_length + 7) / 8 != bytes.size())
    fail(ErrorKind::corrupt_stream, "bit length does not match byte count");
  BitString out;
  out.bytes_.assign(bytes.begin(), bytes.end());
  out.size_ = bit_length;
  if (bit_length % 8 != 0) {
    // Padding bits must be zero so that equality stays structural.
    const auto mask = static_cast<std::uint8_t>(0xFFu >> (bit_length % 8));
    if (out.bytes_.back() & mask)
      fail(ErrorKind::corrupt_stream, "nonzero padding bits");
  }
  return out;
}

BitString BitString::from_string(std::string_view zeros_and_ones) {
  BitString out;
  for (char c : zeros_and_ones) {
    if (c != '0' && c != '1')
      fail(ErrorKind::invalid_argument, "bit string must contain only 0/1");
    out.push_back(c == '1');
  }
  return out;
}

void BitString::push_back(bool bit) {
  if ((size_ & 7) == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (size_ & 7));
  ++size_;
}

void BitString::append(bool bit, std::size_t copies) {
  for (; copies > 0 && (size_ & 7) != 0; --copies) push_back(bit);
  bytes_.insert(bytes_.end(), copies / 8, bit ? 0xFF : 0x00);
  size_ += copies / 8 * 8;
  for (copies %= 8; copies > 0; --copies) push_back(bit);
}

void BitString::trim_trailing_zeros() {
  while (!bytes_.empty() && bytes_.back() == 0) {
    bytes_.pop_back();
    size_ = bytes_.size() * 8;
  }
  if (bytes_.empty()) {
    size_ = 0;
    return;
  }
  while (!(*this)[size_ - 1]) --size_;
}

std::string BitString::to_string() const {
  std::string s;
  s.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) s.push_back((*this)[i] ? '1' : '0');
  return s;
}

}  // namespace lmz
