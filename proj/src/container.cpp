#include "lmz/container.hpp"

#include <cstring>
#include <limits>

#include "lmz/byte_io.hpp"
#include "lmz/datapipe.hpp"
#include "lmz/errors.hpp"
#include "lmz/eval.hpp"
#include "lmz/sequence_coder.hpp"

namespace lmz {

namespace {

constexpr char kMagic[4] = {'L', 'M', 'Z', 'C'};

BitString take_bits(ByteCursor& in, std::uint64_t bit_count) {
  if (bit_count > static_cast<std::uint64_t>(in.remaining()) * 8)
    fail(ErrorKind::corrupt_stream, "container is truncated");
  const auto bytes = in.take(static_cast<std::size_t>((bit_count + 7) / 8));
  return BitString::from_bytes(bytes, static_cast<std::size_t>(bit_count));
}

SequenceOptions segment_options() {
  SequenceOptions options;
  options.segment = kChunkSize;
  options.window = kChunkSize;
  return options;
}

}  // namespace

std::vector<std::uint8_t> write_container(const Container& container) {
  if (container.spec.size() > std::numeric_limits<std::uint32_t>::max() ||
      container.lost_bits.size() > std::numeric_limits<std::uint32_t>::max())
    fail(ErrorKind::invalid_argument, "container field too large");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kContainerVersion);
  put_le(out, static_cast<std::uint32_t>(container.spec.size()));
  out.insert(out.end(), container.spec.begin(), container.spec.end());
  put_le(out, container.original_length);
  put_le(out, static_cast<std::uint32_t>(container.lost_bits.size()));
  out.insert(out.end(), container.lost_bits.bytes().begin(), container.lost_bits.bytes().end());
  put_le(out, static_cast<std::uint64_t>(container.payload.size()));
  out.insert(out.end(), container.payload.bytes().begin(), container.payload.bytes().end());
  return out;
}

Container read_container(std::span<const std::uint8_t> bytes) {
  ByteCursor in(bytes);
  if (bytes.size() < 4 || std::memcmp(in.take(4).data(), kMagic, 4) != 0)
    fail(ErrorKind::corrupt_stream, "not an lmz container");
  const auto version = in.le<std::uint8_t>();
  if (version != kContainerVersion)
    fail(ErrorKind::unknown_version,
         "container version " + std::to_string(version) + " is not supported");
  Container c;
  const auto spec_length = in.le<std::uint32_t>();
  const auto spec = in.take(spec_length);
  c.spec.assign(spec.begin(), spec.end());
  c.original_length = in.le<std::uint64_t>();
  c.lost_bits = take_bits(in, in.le<std::uint32_t>());
  c.payload = take_bits(in, in.le<std::uint64_t>());
  if (in.remaining() != 0) fail(ErrorKind::corrupt_stream, "trailing bytes after payload");
  return c;
}

const char* to_string(Transform transform) {
  switch (transform) {
    case Transform::none: return "none";
    case Transform::msb: return "msb";
    case Transform::halve: return "halve";
  }
  return "none";
}

Transform parse_transform(const std::string& name) {
  if (name == "none") return Transform::none;
  if (name == "msb") return Transform::msb;
  if (name == "halve") return Transform::halve;
  fail(ErrorKind::invalid_argument, "unknown transform '" + name + "'");
}

std::vector<std::uint8_t> compress_container(std::span<const std::uint8_t> data,
                                             const PredictorSpec& spec, Transform transform,
                                             const ArtifactStore& store,
                                             ContainerStats* stats) {
  PredictorSpec model_spec = spec;
  model_spec.parameters.erase("transform");
  Container c;
  c.spec = model_spec.canonical();
  c.original_length = data.size();

  std::vector<std::uint8_t> coded;
  switch (transform) {
    case Transform::none:
      coded.assign(data.begin(), data.end());
      break;
    case Transform::msb: {
      auto seven = to_seven_bit(data, Modality::text);
      coded = std::move(seven.bytes);
      if (!seven.lost_bits.empty()) c.lost_bits = msb_plane(data);
      break;
    }
    case Transform::halve: {
      auto seven = to_seven_bit(data, Modality::image);
      coded = std::move(seven.bytes);
      c.lost_bits = std::move(seven.lost_bits);
      break;
    }
  }
  if (transform != Transform::none) {
    PredictorSpec recorded = model_spec;
    recorded.parameters["transform"] = to_string(transform);
    c.spec = recorded.canonical();
  }

  auto predictor = make_predictor(model_spec, store);
  c.payload = encode_sequence(*predictor, to_symbols(coded), segment_options());
  if (stats) {
    stats->payload_bytes = c.payload.byte_size();
    stats->lost_bits = c.lost_bits.size();
    stats->raw_rate = data.empty() ? 0.0 : raw_rate(stats->payload_bytes, stats->lost_bits, data.size());
  }
  return write_container(c);
}

std::vector<std::uint8_t> decompress_container(std::span<const std::uint8_t> bytes,
                                               const ArtifactStore& store) {
  const Container c = read_container(bytes);
  PredictorSpec spec;
  try {
    spec = PredictorSpec::parse(c.spec);
  } catch (const Error& e) {
    fail(ErrorKind::corrupt_stream, std::string("container spec is invalid: ") + e.what());
  }
  const Transform transform = parse_transform(spec.get_or("transform", "none"));
  spec.parameters.erase("transform");

  const bool lost_ok = transform == Transform::none    ? c.lost_bits.empty()
                       : transform == Transform::halve ? c.lost_bits.size() == c.original_length
                                                       : c.lost_bits.empty() ||
                                                             c.lost_bits.size() == c.original_length;
  if (!lost_ok) fail(ErrorKind::corrupt_stream, "lost bits do not match the transform");
  // Even a near-certain symbol costs more than 2^-17 bits.
  if (c.original_length > (static_cast<std::uint64_t>(c.payload.size()) + 64) << 17)
    fail(ErrorKind::corrupt_stream, "declared length is impossible for the payload");

  auto predictor = make_predictor(spec, store);
  auto coded = to_bytes(
      decode_sequence(*predictor, c.payload, static_cast<std::size_t>(c.original_length),
                      segment_options()));
  for (auto b : coded)
    if (transform != Transform::none && b > 127)
      fail(ErrorKind::corrupt_stream, "decoded byte is not 7-bit");
  switch (transform) {
    case Transform::none:
      return coded;
    case Transform::msb:
      return c.lost_bits.empty() ? coded : restore_msb(coded, c.lost_bits);
    case Transform::halve:
      return from_seven_bit_halved(coded, c.lost_bits);
  }
  return coded;
}

}  // namespace lmz
