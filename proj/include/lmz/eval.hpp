#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lmz/codecs.hpp"
#include "lmz/predictors.hpp"

namespace lmz {

// Percent of raw size. Lost bits are charged to the compressed side,
// rounded up to whole bytes.
double raw_rate(std::uint64_t compressed_bytes, std::uint64_t lost_bits, std::uint64_t raw_bytes);
// raw + 100 * model_bytes / raw_bytes.
double adjusted_rate(double raw, std::uint64_t model_bytes, std::uint64_t raw_bytes);

enum class ChunkMode { whole, chunked };
const char* to_string(ChunkMode mode);
ChunkMode parse_chunk_mode(const std::string& name);

struct RateReport {
  ChunkMode chunk_mode = ChunkMode::chunked;
  std::string compressor;
  std::string dataset;
  double raw_rate = 0;
  double adjusted_rate = 0;
  std::uint64_t compressed_bytes = 0;
  std::uint64_t model_bytes = 0;
  std::uint64_t raw_bytes = 0;
  // False when the compressor could not run here; written as N/A.
  bool available = true;
};

RateReport make_report(ChunkMode mode, std::string compressor, std::string dataset,
                       std::uint64_t compressed_bytes, std::uint64_t lost_bits,
                       std::uint64_t model_bytes, std::uint64_t raw_bytes);

// Chunked: every chunk is its own arithmetic-coded stream, charged in whole
// bytes. Whole: one stream over the data, predictor never reset.
RateReport evaluate_predictor(Predictor& predictor, std::span<const std::uint8_t> data,
                              ChunkMode mode, const std::string& dataset,
                              std::uint64_t lost_bits = 0, std::size_t chunk_size = 2048);
RateReport evaluate_codec(CodecAdapter& codec, std::span<const std::uint8_t> data,
                          ChunkMode mode, const std::string& dataset,
                          std::uint64_t lost_bits = 0, std::size_t chunk_size = 2048);

struct CurvePoint {
  std::size_t position = 0;  // 1-based byte index within the chunk
  double mean_rate = 0;      // percent
  std::size_t samples = 0;
};

// Cumulative rate at every position of the first sample_count full chunks,
// from the per-symbol code lengths of the quantized PMFs.
std::vector<CurvePoint> in_context_curve(Predictor& predictor, std::span<const std::uint8_t> data,
                                         std::size_t sample_count = 100,
                                         std::size_t chunk_size = 2048);

struct SweepCell {
  std::string dataset;
  std::uint64_t dataset_bytes = 0;
  unsigned order = 0;
  std::uint64_t model_bytes = 0;
  double raw_rate = 0;
  double adjusted_rate = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // dataset-major, orders ascending
  // Per dataset, the order with the lowest adjusted rate.
  std::vector<unsigned> argmin_order;
  std::vector<std::uint64_t> argmin_model_bytes;
};

struct SweepDataset {
  std::string name;
  std::span<const std::uint8_t> bytes;
};

// Backoff models of orders 0..max_order trained on each dataset (contexts
// restart at chunk boundaries) and scored on it with frozen counts. A
// chunk costs its model log-loss plus 2 bits of coder termination; model
// bytes are the serialized trie at that order.
SweepResult backoff_sweep(std::span<const SweepDataset> datasets, unsigned max_order = 5,
                          std::size_t chunk_size = 2048);

// Deterministic CSV: chunk_mode,compressor,dataset,raw_rate,adjusted_rate,
// compressed_bytes,model_bytes,raw_bytes.
std::string reports_to_csv(std::span<const RateReport> reports);
std::string curve_to_csv(std::span<const CurvePoint> curve);
std::string sweep_to_csv(const SweepResult& sweep);

// Static SVG line plots.
std::string curve_to_svg(std::span<const CurvePoint> curve, const std::string& title);
std::string sweep_to_svg(const SweepResult& sweep);

}  // namespace lmz
