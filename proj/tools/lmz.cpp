// lmz: prediction-based lossless compression and its evaluation harness.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmz/bridge.hpp"
#include "lmz/byte_io.hpp"
#include "lmz/codecs.hpp"
#include "lmz/container.hpp"
#include "lmz/context_stats.hpp"
#include "lmz/datapipe.hpp"
#include "lmz/errors.hpp"
#include "lmz/eval.hpp"
#include "lmz/generate.hpp"
#include "lmz/sequence_coder.hpp"
#include "lmz/tokenize.hpp"

namespace fs = std::filesystem;
using namespace lmz;

namespace {

struct Dataset {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

// "fixture:<modality>:<bytes>[:<seed>]", "name=path" or a plain path.
Dataset load_dataset(const std::string& text) {
  if (text.rfind("fixture:", 0) == 0) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t colon; (colon = text.find(':', start)) != std::string::npos; start = colon + 1)
      parts.push_back(text.substr(start, colon - start));
    parts.push_back(text.substr(start));
    if (parts.size() < 3 || parts.size() > 4)
      fail(ErrorKind::invalid_argument, "fixture datasets look like fixture:text:1000000[:seed]");
    std::size_t n = 0;
    std::uint64_t seed = 1;
    try {
      n = std::stoull(parts[2]);
      if (parts.size() == 4) seed = std::stoull(parts[3]);
    } catch (const std::exception&) {
      fail(ErrorKind::invalid_argument, "bad fixture size or seed in '" + text + "'");
    }
    return {text, make_fixture(parse_modality(parts[1]), n, seed)};
  }
  if (const auto eq = text.find('='); eq != std::string::npos)
    return {text.substr(0, eq), read_file(text.substr(eq + 1))};
  return {fs::path(text).stem().string(), read_file(text)};
}

std::vector<Dataset> load_datasets(const std::vector<std::string>& specs) {
  std::vector<Dataset> out;
  for (const auto& s : specs) out.push_back(load_dataset(s));
  return out;
}

bool is_codec(const std::string& name) {
  const auto ids = codec_ids();
  return std::find(ids.begin(), ids.end(), name) != ids.end();
}

std::string read_text(const std::string& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, as_bytes(text));
}

// Writes to the file, or to stdout for "" and "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text << std::flush;
  else
    write_text(path, text);
}

nlohmann::ordered_json argv_json(int argc, char** argv) {
  nlohmann::ordered_json args = nlohmann::ordered_json::array();
  for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
  return args;
}

struct EvalJob {
  ChunkMode mode;
  std::string compressor;
  const Dataset* dataset;
};

RateReport run_eval_job(const EvalJob& job, const ArtifactStore& store) {
  const auto& data = job.dataset->bytes;
  try {
    if (is_codec(job.compressor)) {
      auto codec = make_codec(job.compressor);
      return evaluate_codec(*codec, data, job.mode, job.dataset->name);
    }
    auto predictor = make_predictor(PredictorSpec::parse(job.compressor), store);
    auto report = evaluate_predictor(*predictor, data, job.mode, job.dataset->name);
    report.compressor = job.compressor;
    return report;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::adapter_unavailable && e.kind() != ErrorKind::predictor_unavailable)
      throw;
    std::cerr << "lmz: " << job.compressor << " unavailable: " << e.what() << "\n";
    RateReport na;
    na.chunk_mode = job.mode;
    na.compressor = job.compressor;
    na.dataset = job.dataset->name;
    na.raw_bytes = data.size();
    na.available = false;
    return na;
  }
}

// Jobs run on `jobs` threads; results keep the job order.
std::vector<RateReport> run_eval(const std::vector<EvalJob>& plan, const ArtifactStore& store,
                                 unsigned jobs) {
  std::vector<RateReport> reports(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < plan.size();) {
      try {
        reports[i] = run_eval_job(plan[i], store);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < std::max(1u, jobs); ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return reports;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lossless compression with sequence predictors and arithmetic coding"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lmz 1.0");

  std::string artifacts;
  app.add_option("--artifacts", artifacts,
                 "Directory holding training artifacts named in predictor specs");

  // compress
  std::string compress_input, compress_model = "backoff:order=3", compress_out,
              compress_transform = "none";
  auto* compress = app.add_subcommand("compress", "Compress a file into an LMZC container");
  compress->add_option("input", compress_input, "File to compress")->required();
  compress->add_option("-m,--model", compress_model, "Predictor spec")->capture_default_str();
  compress->add_option("-o,--out", compress_out, "Container path")->required();
  compress->add_option("--transform", compress_transform, "none, msb or halve")
      ->check(CLI::IsMember({"none", "msb", "halve"}))
      ->capture_default_str();

  // decompress
  std::string decompress_input, decompress_out;
  auto* decompress = app.add_subcommand("decompress", "Restore the original bytes of a container");
  decompress->add_option("input", decompress_input, "Container")->required();
  decompress->add_option("-o,--out", decompress_out, "Output path")->required();

  // eval
  std::vector<std::string> eval_datasets, eval_compressors;
  bool eval_chunked = false, eval_whole = false;
  std::string eval_out;
  unsigned eval_jobs = 1;
  auto* eval = app.add_subcommand("eval", "Rate table over datasets and compressors (CSV)");
  eval->add_option("--datasets", eval_datasets,
                   "Datasets: path, name=path or fixture:<modality>:<bytes>[:seed]")
      ->required();
  eval->add_option("--compressors", eval_compressors, "Codec ids or predictor specs");
  eval->add_flag("--chunked", eval_chunked, "Independent 2048-byte chunks (default)");
  eval->add_flag("--whole", eval_whole, "One stream per dataset");
  eval->add_option("-o,--out", eval_out, "CSV path (default stdout)");
  eval->add_option("-j,--jobs", eval_jobs, "Worker threads")->capture_default_str();

  // generate
  std::string gen_model = "backoff:order=3", gen_prompt, gen_out, gen_meta, gen_mode = "argmax",
              gen_kind = "bytes";
  std::size_t gen_bytes = 256, gen_window = kDefaultWindow;
  std::uint64_t gen_seed = 0;
  std::optional<std::size_t> gen_top_k;
  auto* generate_cmd = app.add_subcommand("generate", "Sample a continuation of a prompt");
  generate_cmd->add_option("-m,--model", gen_model, "Predictor spec")->capture_default_str();
  generate_cmd->add_option("--prompt", gen_prompt, "Prompt file (PNG for image, WAV for audio)")
      ->required();
  generate_cmd->add_option("--kind", gen_kind, "bytes, image (row halves) or audio (1024 + 1024)")
      ->check(CLI::IsMember({"bytes", "image", "audio"}))
      ->capture_default_str();
  generate_cmd->add_option("-n,--bytes", gen_bytes, "Bytes to generate (kind=bytes)")
      ->capture_default_str();
  generate_cmd->add_option("--mode", gen_mode, "argmax or categorical")
      ->check(CLI::IsMember({"argmax", "categorical"}))
      ->capture_default_str();
  generate_cmd->add_option("--seed", gen_seed, "Sampling seed")->capture_default_str();
  generate_cmd->add_option("--top-k", gen_top_k, "Restrict sampling to the k likeliest symbols");
  generate_cmd->add_option("--window", gen_window, "Context window")->capture_default_str();
  generate_cmd->add_option("-o,--out", gen_out, "Prompt plus continuation")->required();
  generate_cmd->add_option("--meta", gen_meta, "JSON sidecar (default <out>.json)");

  // sweep
  std::vector<std::string> sweep_datasets;
  unsigned sweep_max_order = 5;
  std::string sweep_csv, sweep_svg, sweep_meta;
  auto* sweep = app.add_subcommand("sweep", "Backoff order sweep: raw and adjusted rates");
  sweep->add_option("--datasets", sweep_datasets, "Datasets, smallest first")->required();
  sweep->add_option("--max-order", sweep_max_order, "Largest backoff order")->capture_default_str();
  sweep->add_option("--csv", sweep_csv, "CSV path (default stdout)");
  sweep->add_option("--svg", sweep_svg, "Plot path");
  sweep->add_option("--meta", sweep_meta, "JSON sidecar with flags and argmins");

  // curve
  std::string curve_model = "backoff:order=3", curve_dataset, curve_csv, curve_svg, curve_meta;
  std::size_t curve_samples = 100;
  auto* curve = app.add_subcommand("curve", "Mean rate by position within a chunk");
  curve->add_option("-m,--model", curve_model, "Predictor spec")->capture_default_str();
  curve->add_option("--dataset", curve_dataset, "Dataset")->required();
  curve->add_option("--samples", curve_samples, "Chunks to average")->capture_default_str();
  curve->add_option("--csv", curve_csv, "CSV path (default stdout)");
  curve->add_option("--svg", curve_svg, "Plot path");
  curve->add_option("--meta", curve_meta, "JSON sidecar with flags");

  // train
  std::string train_input, train_out;
  unsigned train_order = 3;
  auto* train = app.add_subcommand("train", "Count a backoff trie and print its predictor spec");
  train->add_option("--input", train_input, "Training dataset")->required();
  train->add_option("--order", train_order, "Context order")->capture_default_str();
  train->add_option("-o,--out", train_out, "Trie dump path")->required();

  // bpe-train
  std::string bpe_input, bpe_out;
  std::size_t bpe_vocab = 1024;
  auto* bpe = app.add_subcommand("bpe-train", "Learn BPE merges");
  bpe->add_option("--input", bpe_input, "Training dataset")->required();
  bpe->add_option("--vocab-size", bpe_vocab, "Target vocabulary size")->capture_default_str();
  bpe->add_option("-o,--out", bpe_out, "Vocabulary file")->required();

  // prepare
  std::string prep_modality = "text", prep_input, prep_out, prep_manifest;
  std::size_t prep_bytes = 0;
  std::uint64_t prep_seed = 1;
  auto* prepare = app.add_subcommand("prepare", "Build a dataset file and its manifest");
  prepare->add_option("--modality", prep_modality, "text, image, audio or random")
      ->check(CLI::IsMember({"text", "image", "audio", "random"}))
      ->capture_default_str();
  prepare->add_option("--input", prep_input,
                      "Source file (raw text, PNG or WAV); omit for a synthetic fixture");
  prepare->add_option("--bytes", prep_bytes, "Fixture size, or truncation of the input");
  prepare->add_option("--seed", prep_seed, "Fixture seed")->capture_default_str();
  prepare->add_option("-o,--out", prep_out, "Dataset path")->required();
  prepare->add_option("--manifest", prep_manifest, "Manifest path (default <out>.json)");

  // bridge-check
  std::string bc_cmd, bc_transcript;
  double bc_timeout = 30;
  std::uint32_t bc_alphabet = 256;
  auto* bridge_check = app.add_subcommand("bridge-check", "Handshake with a bridge server");
  bridge_check->add_option("--cmd", bc_cmd, "Server command line")->required();
  bridge_check->add_option("--transcript", bc_transcript, "Replay a recorded transcript");
  bridge_check->add_option("--timeout", bc_timeout, "Seconds per response")->capture_default_str();
  bridge_check->add_option("--alphabet", bc_alphabet, "Alphabet size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ArtifactStore store;
    if (!artifacts.empty()) store.directory = artifacts;

    if (*compress) {
      const auto data = read_file(compress_input);
      ContainerStats stats;
      const auto blob = compress_container(data, PredictorSpec::parse(compress_model),
                                           parse_transform(compress_transform), store, &stats);
      write_file(compress_out, blob);
      std::printf("raw_rate %.4f\n", stats.raw_rate);
      std::printf("container_bytes %zu\n", blob.size());
      return 0;
    }

    if (*decompress) {
      const auto blob = read_file(decompress_input);
      if (artifacts.empty()) store.directory = fs::path(decompress_input).parent_path();
      if (store.directory.empty()) store.directory = ".";
      write_file(decompress_out, decompress_container(blob, store));
      return 0;
    }

    if (*eval) {
      const auto datasets = load_datasets(eval_datasets);
      std::vector<ChunkMode> modes;
      if (eval_chunked || !eval_whole) modes.push_back(ChunkMode::chunked);
      if (eval_whole) modes.push_back(ChunkMode::whole);
      std::vector<EvalJob> plan;
      for (auto mode : modes)
        for (const auto& c : eval_compressors)
          for (const auto& d : datasets) plan.push_back({mode, c, &d});
      emit(eval_out, reports_to_csv(run_eval(plan, store, eval_jobs)));
      return 0;
    }

    if (*generate_cmd) {
      auto predictor = make_predictor(PredictorSpec::parse(gen_model), store);
      SamplerConfig config{parse_sample_mode(gen_mode), gen_seed, gen_top_k, gen_window};
      std::size_t prompt_bytes = 0, generated = 0;
      if (gen_kind == "image") {
        auto image = read_png_gray(gen_prompt);
        image.pixels = rowwise_image_continuation(*predictor, image.pixels, image.height,
                                                  image.width, config);
        write_png_gray(gen_out, image);
        prompt_bytes = image.height * (image.width / 2);
        generated = image.pixels.size() - prompt_bytes;
      } else if (gen_kind == "audio") {
        const auto wav = read_wav(gen_prompt);
        const auto bytes = audio_continuation(*predictor, reduce_audio(wav.samples), config);
        WavAudio out{wav.sample_rate, {}};
        for (auto b : bytes) out.samples.push_back(static_cast<std::int16_t>((b - 128) * 256));
        write_wav(gen_out, out);
        prompt_bytes = kAudioPrompt;
        generated = kAudioContinuation;
      } else {
        auto bytes = read_file(gen_prompt);
        prompt_bytes = bytes.size();
        const auto tail = generate(*predictor, bytes, gen_bytes, config);
        bytes.insert(bytes.end(), tail.begin(), tail.end());
        write_file(gen_out, bytes);
        generated = tail.size();
      }
      auto meta = nlohmann::ordered_json::parse(
          generation_metadata(*predictor, config, prompt_bytes, generated));
      meta["kind"] = gen_kind;
      meta["argv"] = argv_json(argc, argv);
      write_text(gen_meta.empty() ? gen_out + ".json" : gen_meta, meta.dump(2) + "\n");
      std::fprintf(stderr, "lmz: generated %zu bytes (mode %s, seed %llu)\n", generated,
                   gen_mode.c_str(), static_cast<unsigned long long>(gen_seed));
      return 0;
    }

    if (*sweep) {
      const auto datasets = load_datasets(sweep_datasets);
      std::vector<SweepDataset> views;
      for (const auto& d : datasets) views.push_back({d.name, d.bytes});
      const auto result = backoff_sweep(views, sweep_max_order);
      emit(sweep_csv, sweep_to_csv(result));
      if (!sweep_svg.empty()) write_text(sweep_svg, sweep_to_svg(result));
      nlohmann::ordered_json argmins = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < datasets.size(); ++i) {
        const auto& cell = result.cells[i * (sweep_max_order + 1) + result.argmin_order[i]];
        std::fprintf(stderr, "lmz: %s argmin order %u, model %llu bytes, adjusted %.4f\n",
                     datasets[i].name.c_str(), result.argmin_order[i],
                     static_cast<unsigned long long>(result.argmin_model_bytes[i]),
                     cell.adjusted_rate);
        argmins.push_back({{"dataset", datasets[i].name},
                           {"order", result.argmin_order[i]},
                           {"model_bytes", result.argmin_model_bytes[i]},
                           {"adjusted_rate", cell.adjusted_rate}});
      }
      if (!sweep_meta.empty()) {
        nlohmann::ordered_json meta;
        meta["argv"] = argv_json(argc, argv);
        meta["max_order"] = sweep_max_order;
        meta["argmin"] = argmins;
        write_text(sweep_meta, meta.dump(2) + "\n");
      }
      return 0;
    }

    if (*curve) {
      const auto dataset = load_dataset(curve_dataset);
      auto predictor = make_predictor(PredictorSpec::parse(curve_model), store);
      const auto points = in_context_curve(*predictor, dataset.bytes, curve_samples);
      emit(curve_csv, curve_to_csv(points));
      if (!curve_svg.empty())
        write_text(curve_svg, curve_to_svg(points, predictor->spec().canonical() + " on " + dataset.name));
      if (!curve_meta.empty()) {
        nlohmann::ordered_json meta;
        meta["argv"] = argv_json(argc, argv);
        meta["predictor"] = predictor->spec().canonical();
        meta["dataset"] = dataset.name;
        meta["samples"] = curve_samples;
        write_text(curve_meta, meta.dump(2) + "\n");
      }
      return 0;
    }

    if (*train) {
      const auto dataset = load_dataset(train_input);
      const auto stats = train_context_stats(to_symbols(dataset.bytes), train_order, 256);
      const auto dump = stats.serialize();
      write_file(train_out, dump);
      PredictorSpec spec;
      spec.kind = PredictorKind::context_backoff;
      spec.parameters["order"] = std::to_string(train_order);
      spec.parameters["adapt"] = "1";
      spec.parameters["trie"] = fs::path(train_out).filename().string();
      spec.parameters["trie_sha256"] = sha256_hex(dump);
      std::printf("%s\n", spec.canonical().c_str());
      std::fprintf(stderr, "lmz: trie %zu bytes, %zu contexts\n", dump.size(), stats.node_count());
      return 0;
    }

    if (*bpe) {
      const auto dataset = load_dataset(bpe_input);
      const auto vocab = train_bpe(dataset.bytes, bpe_vocab);
      const auto text = vocab.to_text();
      write_text(bpe_out, text);
      std::printf("vocab_size %zu\nsha256 %s\n", vocab.vocab_size(),
                  sha256_hex(as_bytes(text)).c_str());
      return 0;
    }

    if (*prepare) {
      DatasetManifest manifest;
      manifest.modality = parse_modality(prep_modality);
      manifest.seed = prep_seed;
      std::vector<std::uint8_t> bytes;
      if (prep_input.empty()) {
        if (prep_bytes == 0) fail(ErrorKind::invalid_argument, "synthetic datasets need --bytes");
        bytes = make_fixture(manifest.modality, prep_bytes, prep_seed);
        manifest.source = "fixture";
      } else {
        manifest.source = prep_input;
        switch (manifest.modality) {
          case Modality::image: {
            const auto image = read_png_gray(prep_input);
            for (const auto& patch : extract_image_patches(image.pixels, image.height, image.width))
              bytes.insert(bytes.end(), patch.begin(), patch.end());
            manifest.transforms = {"grayscale", "patches_32x64"};
            break;
          }
          case Modality::audio:
            bytes = reduce_audio(read_wav(prep_input).samples);
            manifest.transforms = {"first_channel", "pcm16_to_u8"};
            break;
          default:
            bytes = read_file(prep_input);
        }
        if (prep_bytes != 0 && bytes.size() > prep_bytes) bytes.resize(prep_bytes);
      }
      manifest.name = fs::path(prep_out).stem().string();
      manifest.total_bytes = bytes.size();
      manifest.chunk_count = chunk_count(bytes.size());
      manifest.sha256 = sha256_hex(bytes);
      write_file(prep_out, bytes);
      write_text(prep_manifest.empty() ? prep_out + ".json" : prep_manifest,
                 manifest_to_json(manifest));
      std::printf("bytes %zu\nchunks %llu\n", bytes.size(),
                  static_cast<unsigned long long>(manifest.chunk_count));
      return 0;
    }

    if (*bridge_check) {
      const auto timeout = std::chrono::milliseconds(static_cast<long>(bc_timeout * 1000));
      if (!bc_transcript.empty()) {
        const auto mismatches = replay_transcript(bc_cmd, read_text(bc_transcript), timeout);
        for (const auto& m : mismatches) std::printf("mismatch %s\n", m.c_str());
        std::printf("transcript %s\n", mismatches.empty() ? "ok" : "differs");
        return mismatches.empty() ? 0 : exit_code(ErrorKind::protocol);
      }
      BridgeSession session(bc_cmd, bc_alphabet, timeout);
      const auto entries = session.predict({}, std::min<std::uint32_t>(bc_alphabet, 100));
      session.close();
      std::printf("param_count %llu\nmodel_bytes %llu\nempty_context_entries %zu\n",
                  static_cast<unsigned long long>(session.param_count()),
                  static_cast<unsigned long long>(2 * session.param_count()), entries.size());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "lmz: %s: %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lmz: %s\n", e.what());
    return 1;
  }
  return 0;
}
