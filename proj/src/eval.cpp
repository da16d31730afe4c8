#include "lmz/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lmz/context_stats.hpp"
#include "lmz/datapipe.hpp"
#include "lmz/errors.hpp"
#include "lmz/sequence_coder.hpp"

namespace lmz {

double raw_rate(std::uint64_t compressed_bytes, std::uint64_t lost_bits, std::uint64_t raw_bytes) {
  if (raw_bytes == 0) fail(ErrorKind::invalid_argument, "raw size must be positive");
  return 100.0 * static_cast<double>(compressed_bytes + (lost_bits + 7) / 8) /
         static_cast<double>(raw_bytes);
}

double adjusted_rate(double raw, std::uint64_t model_bytes, std::uint64_t raw_bytes) {
  if (raw_bytes == 0) fail(ErrorKind::invalid_argument, "raw size must be positive");
  return raw + 100.0 * static_cast<double>(model_bytes) / static_cast<double>(raw_bytes);
}

const char* to_string(ChunkMode mode) { return mode == ChunkMode::whole ? "whole" : "chunked"; }

ChunkMode parse_chunk_mode(const std::string& name) {
  if (name == "whole") return ChunkMode::whole;
  if (name == "chunked") return ChunkMode::chunked;
  fail(ErrorKind::invalid_argument, "unknown chunk mode '" + name + "'");
}

RateReport make_report(ChunkMode mode, std::string compressor, std::string dataset,
                       std::uint64_t compressed_bytes, std::uint64_t lost_bits,
                       std::uint64_t model_bytes, std::uint64_t raw_bytes) {
  RateReport r;
  r.chunk_mode = mode;
  r.compressor = std::move(compressor);
  r.dataset = std::move(dataset);
  r.compressed_bytes = compressed_bytes + (lost_bits + 7) / 8;
  r.model_bytes = model_bytes;
  r.raw_bytes = raw_bytes;
  r.raw_rate = raw_rate(compressed_bytes, lost_bits, raw_bytes);
  r.adjusted_rate = adjusted_rate(r.raw_rate, model_bytes, raw_bytes);
  return r;
}

RateReport evaluate_predictor(Predictor& predictor, std::span<const std::uint8_t> data,
                              ChunkMode mode, const std::string& dataset,
                              std::uint64_t lost_bits, std::size_t chunk_size) {
  if (chunk_size == 0) fail(ErrorKind::invalid_argument, "chunk size must be positive");
  const auto symbols = to_symbols(data);
  std::uint64_t compressed = 0;
  if (mode == ChunkMode::whole) {
    SequenceOptions options;
    options.segment = 0;
    options.window = chunk_size;
    compressed = (encode_sequence(predictor, symbols, options).size() + 7) / 8;
  } else {
    SequenceOptions options;
    options.segment = chunk_size;
    options.window = chunk_size;
    for (std::size_t pos = 0; pos < symbols.size(); pos += chunk_size) {
      const auto chunk = std::span(symbols).subspan(pos, std::min(chunk_size, symbols.size() - pos));
      compressed += (encode_sequence(predictor, chunk, options).size() + 7) / 8;
    }
  }
  return make_report(mode, predictor.spec().canonical(), dataset, compressed, lost_bits,
                     predictor.footprint().serialized_bytes, data.size());
}

RateReport evaluate_codec(CodecAdapter& codec, std::span<const std::uint8_t> data,
                          ChunkMode mode, const std::string& dataset,
                          std::uint64_t lost_bits, std::size_t chunk_size) {
  const std::uint64_t compressed = mode == ChunkMode::whole
                                       ? compress_whole(codec, data)
                                       : compress_chunked(codec, data, chunk_size);
  return make_report(mode, codec.id(), dataset, compressed, lost_bits, 0, data.size());
}

std::vector<CurvePoint> in_context_curve(Predictor& predictor, std::span<const std::uint8_t> data,
                                         std::size_t sample_count, std::size_t chunk_size) {
  if (chunk_size == 0 || sample_count == 0)
    fail(ErrorKind::invalid_argument, "curve needs a positive chunk size and sample count");
  const std::size_t available = data.size() / chunk_size;
  if (available < sample_count)
    fail(ErrorKind::invalid_argument, "curve needs " + std::to_string(sample_count) +
                                          " full chunks; the dataset has " +
                                          std::to_string(available));
  std::vector<double> bits(chunk_size, 0.0);
  std::vector<double> lengths;
  SequenceOptions options;
  options.segment = chunk_size;
  options.window = chunk_size;
  options.code_lengths = &lengths;
  for (std::size_t c = 0; c < sample_count; ++c) {
    lengths.clear();
    const auto symbols = to_symbols(data.subspan(c * chunk_size, chunk_size));
    sequence_code_length(predictor, symbols, options);
    double cumulative = 0;
    for (std::size_t i = 0; i < chunk_size; ++i) {
      cumulative += lengths[i];
      bits[i] += cumulative;
    }
  }
  std::vector<CurvePoint> curve(chunk_size);
  for (std::size_t i = 0; i < chunk_size; ++i)
    curve[i] = {i + 1,
                100.0 * bits[i] / (8.0 * static_cast<double>(i + 1) * static_cast<double>(sample_count)),
                sample_count};
  return curve;
}

SweepResult backoff_sweep(std::span<const SweepDataset> datasets, unsigned max_order,
                          std::size_t chunk_size) {
  if (chunk_size == 0) fail(ErrorKind::invalid_argument, "chunk size must be positive");
  SweepResult result;
  std::vector<double> probabilities(max_order + 1);
  for (const auto& dataset : datasets) {
    if (dataset.bytes.empty()) fail(ErrorKind::invalid_argument, "empty sweep dataset");
    const auto symbols = to_symbols(dataset.bytes);
    ContextStats stats(max_order, 256);
    auto context_at = [&](std::size_t i) {
      const std::size_t chunk_start = i - i % chunk_size;
      const std::size_t start = std::max(chunk_start, i >= max_order ? i - max_order : 0);
      return std::span<const Symbol>(symbols).subspan(start, i - start);
    };
    for (std::size_t i = 0; i < symbols.size(); ++i) stats.update(context_at(i), symbols[i]);

    std::vector<double> bits(max_order + 1, 0.0);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      backoff_probabilities_by_order(stats, context_at(i), symbols[i], probabilities);
      for (unsigned k = 0; k <= max_order; ++k) bits[k] -= std::log2(probabilities[k]);
    }
    const double termination = 2.0 * static_cast<double>(chunk_count(symbols.size(), chunk_size));
    unsigned best = 0;
    double best_rate = std::numeric_limits<double>::infinity();
    std::uint64_t best_bytes = 0;
    for (unsigned k = 0; k <= max_order; ++k) {
      SweepCell cell;
      cell.dataset = dataset.name;
      cell.dataset_bytes = symbols.size();
      cell.order = k;
      cell.model_bytes = stats.serialized_size(k);
      cell.raw_rate = 100.0 * (bits[k] + termination) / (8.0 * static_cast<double>(symbols.size()));
      cell.adjusted_rate = adjusted_rate(cell.raw_rate, cell.model_bytes, symbols.size());
      if (cell.adjusted_rate < best_rate) {
        best_rate = cell.adjusted_rate;
        best = k;
        best_bytes = cell.model_bytes;
      }
      result.cells.push_back(cell);
    }
    result.argmin_order.push_back(best);
    result.argmin_model_bytes.push_back(best_bytes);
  }
  return result;
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string line_plot(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series, bool log_x) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto tx = [&](double x) { return log_x ? std::log10(std::max(x, 1.0)) : x; };
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!(x0 < x1)) x1 = x0 + 1;
  if (!(y0 < y1)) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  auto py = [&](double y) { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); };

  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                    "font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  svg += "<line x1=\"" + fixed(kLeft, 1) + "\" y1=\"" + fixed(kH - kBottom, 1) + "\" x2=\"" +
         fixed(kW - kRight, 1) + "\" y2=\"" + fixed(kH - kBottom, 1) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fixed(kLeft, 1) + "\" y1=\"" + fixed(kTop, 1) + "\" x2=\"" +
         fixed(kLeft, 1) + "\" y2=\"" + fixed(kH - kBottom, 1) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fixed((kLeft + kW - kRight) / 2, 1) + "\" y=\"390\" text-anchor=\"middle\">" +
         x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fixed(kH / 2, 1) + "\" transform=\"rotate(-90 16 " +
         fixed(kH / 2, 1) + ")\" text-anchor=\"middle\">" + y_label + "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = y0 + (y1 - y0) * t / 4;
    svg += "<text x=\"" + fixed(kLeft - 6, 1) + "\" y=\"" + fixed(py(y) + 4, 1) +
           "\" text-anchor=\"end\">" + fixed(y, 1) + "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = colors[i % 8];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[i].points) svg += fixed(px(x), 1) + "," + fixed(py(y), 1) + " ";
    svg += "\"/>\n";
    svg += "<text x=\"" + fixed(kW - kRight + 10, 1) + "\" y=\"" +
           fixed(kTop + 16 * static_cast<double>(i), 1) + "\" fill=\"" + color + "\">" +
           series[i].label + "</text>\n";
  }
  return svg + "</svg>\n";
}

}  // namespace


std::string reports_to_csv(std::span<const RateReport> reports) {
  std::string out = "chunk_mode,compressor,dataset,raw_rate,adjusted_rate,compressed_bytes,model_bytes,raw_bytes\n";
  for (const auto& r : reports) {
    if (!r.available) {
      out += std::string(to_string(r.chunk_mode)) + "," + csv_field(r.compressor) + "," +
             csv_field(r.dataset) + ",N/A,N/A,N/A,N/A," + std::to_string(r.raw_bytes) + "\n";
      continue;
    }
    out += std::string(to_string(r.chunk_mode)) + "," + csv_field(r.compressor) + "," +
           csv_field(r.dataset) + "," + fixed(r.raw_rate) + "," + fixed(r.adjusted_rate) + "," +
           std::to_string(r.compressed_bytes) + "," + std::to_string(r.model_bytes) + "," +
           std::to_string(r.raw_bytes) + "\n";
  }
  return out;
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::string out = "position,mean_rate,samples\n";
  for (const auto& p : curve)
    out += std::to_string(p.position) + "," + fixed(p.mean_rate) + "," + std::to_string(p.samples) + "\n";
  return out;
}

std::string sweep_to_csv(const SweepResult& sweep) {
  std::string out = "dataset,dataset_bytes,order,model_bytes,raw_rate,adjusted_rate\n";
  for (const auto& c : sweep.cells)
    out += csv_field(c.dataset) + "," + std::to_string(c.dataset_bytes) + "," +
           std::to_string(c.order) + "," + std::to_string(c.model_bytes) + "," +
           fixed(c.raw_rate) + "," + fixed(c.adjusted_rate) + "\n";
  return out;
}

std::string curve_to_svg(std::span<const CurvePoint> curve, const std::string& title) {
  Series s{"mean rate", {}};
  for (const auto& p : curve) s.points.emplace_back(static_cast<double>(p.position), p.mean_rate);
  return line_plot(title, "position in chunk", "rate (%)", {s}, false);
}

std::string sweep_to_svg(const SweepResult& sweep) {
  std::vector<Series> series;
  for (const auto& c : sweep.cells) {
    if (series.empty() || series.back().label != c.dataset) series.push_back({c.dataset, {}});
    series.back().points.emplace_back(static_cast<double>(std::max<std::uint64_t>(c.model_bytes, 1)),
                                      c.adjusted_rate);
  }
  return line_plot("adjusted rate by model size", "model bytes (log scale)", "adjusted rate (%)",
                   series, true);
}

}  // namespace lmz
