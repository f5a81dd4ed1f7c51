// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: latency/throughput benchmarks, codec metrics,
// codebook fitting, feature encoding and token generation.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mctok/bench/harness.hpp"
#include "mctok/bench/reports.hpp"
#include "mctok/hier/hierarchy.hpp"
#include "mctok/io/kv_file.hpp"
#include "mctok/io/token_stream.hpp"
#include "mctok/layout/delay.hpp"
#include "mctok/metrics/spectral.hpp"
#include "mctok/metrics/wav.hpp"
#include "mctok/nn/multihead_session.hpp"
#include "mctok/rng.hpp"
#include "mctok/rvq/quantizer.hpp"
#include "mctok/simd/kernels.hpp"

namespace {

using namespace mctok;

// Flag-backed settings. Each flag --foo-bar maps to config key foo_bar; flags
// given on the command line override the same key from --config.
class Settings {
 public:
  void add(CLI::App& app, const std::string& flag, const std::string& help) {
    std::string key = flag;
    for (char& c : key) c = c == '-' ? '_' : c;
    values_[key];
    options_[key] = app.add_option("--" + flag, values_[key], help)->delimiter(',');
  }

  io::KeyValues merged(const std::optional<std::string>& config_path) const {
    io::KeyValues kv = config_path ? io::KeyValues::load(*config_path) : io::KeyValues{};
    for (const auto& [key, option] : options_) {
      if (option->count() == 0) continue;
      std::string joined;
      for (const auto& v : values_.at(key)) joined += (joined.empty() ? "" : ",") + v;
      kv.set(key, joined);
    }
    return kv;
  }

 private:
  std::map<std::string, std::vector<std::string>> values_;
  std::map<std::string, CLI::Option*> options_;
};

void AddModelFlags(CLI::App& app, Settings& s) {
  s.add(app, "layers", "backbone layers");
  s.add(app, "model-dim", "backbone width");
  s.add(app, "heads", "attention heads");
  s.add(app, "head-dim", "per-head width");
  s.add(app, "ffn-dim", "feed-forward width");
  s.add(app, "vocab-size", "entries per codebook");
  s.add(app, "max-seq", "maximum sequence length");
  s.add(app, "model-seed", "weight initialisation seed (default: --seed)");
}

nn::ModelConfig ModelFromSettings(const io::KeyValues& kv) {
  nn::ModelConfig m;
  auto size = [&](const char* key, std::size_t& field) {
    if (!kv.contains(key)) return;
    const long long v = kv.require_int(key);
    if (v <= 0) throw std::invalid_argument(std::string(key) + " must be positive");
    field = static_cast<std::size_t>(v);
  };
  size("layers", m.layers);
  size("model_dim", m.model_dim);
  size("heads", m.heads);
  size("head_dim", m.head_dim);
  size("ffn_dim", m.ffn_dim);
  size("vocab_size", m.vocab_size);
  size("max_seq", m.max_seq);
  size("codebooks", m.num_codebooks);
  if (kv.contains("model_seed")) {
    m.seed = kv.require_u64("model_seed");
  } else if (kv.contains("seed")) {
    m.seed = kv.require_u64("seed");
  }
  return m;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
  std::cout << "wrote " << path.string() << '\n';
}

int RunBench(const io::KeyValues& kv, const std::string& report, const std::string& out, const std::string& suite) {
  bench::BenchConfig cfg;
  cfg.apply(kv);
  const nn::ModelConfig model = ModelFromSettings(kv);
  bench::Bench b(cfg, model);
  const bench::ReportMeta meta = b.meta();
  const bool json = report == "json";
  const std::string ext = json ? ".json" : ".csv";
  std::cout << "model " << b.model_name() << ", simd " << meta.simd << '\n';

  if (suite == "latency" || suite == "all") {
    const auto rows = b.latency_report();
    WriteText(out + "_ttft_tpot" + ext, json ? bench::ttft_json(rows, meta).dump(2) + "\n" : bench::ttft_csv(rows));
    WriteText(out + "_first_chunk" + ext,
              json ? bench::first_chunk_json(rows, meta).dump(2) + "\n" : bench::first_chunk_csv(rows));
    for (const auto& r : rows) {
      if (r.failed_runs != 0) std::cerr << "warning: " << r.failed_runs << " failed runs at L=" << r.backbone_input_length << '\n';
    }
  }
  if (suite == "throughput" || suite == "all") {
    for (const auto& r : b.throughput_reports()) {
      const std::string path = out + "_throughput_b" + std::to_string(r.batch) + ext;
      WriteText(path, json ? bench::throughput_json(r, meta).dump(2) + "\n" : bench::throughput_csv(r));
      if (r.partial()) std::cerr << "warning: batch " << r.batch << " hit resource exhaustion; report is partial\n";
    }
  }
  return 0;
}

metrics::SpectrogramConfig SpectrogramFrom(const std::optional<std::string>& path) {
  return path ? metrics::SpectrogramConfig::load(*path) : metrics::SpectrogramConfig{};
}

int RunMetrics(const std::string& ref, const std::string& est, const std::optional<std::string>& config,
               const std::string& report, const std::optional<std::string>& out) {
  const auto cfg = SpectrogramFrom(config);
  const metrics::MetricsReport r = metrics::evaluate(metrics::read_wav(ref), metrics::read_wav(est), cfg);
  const std::string text = report == "json" ? metrics::metrics_json(r, cfg).dump(2) + "\n" : metrics::metrics_csv(r);
  if (out) {
    WriteText(*out, text);
  } else {
    std::cout << text;
  }
  return 0;
}

rvq::FrameSet MelFrames(const std::vector<std::string>& wavs, const metrics::SpectrogramConfig& cfg) {
  std::vector<float> rows;
  std::size_t bins = 0;
  for (const auto& path : wavs) {
    const rvq::FrameSet mel = metrics::extract_mel_frames(metrics::read_wav(path), cfg);
    bins = mel.cols();
    rows.insert(rows.end(), mel.data().begin(), mel.data().end());
  }
  const std::size_t frames = rows.size() / bins;
  return rvq::FrameSet(frames, bins, std::move(rows));
}

int RunFit(const std::vector<std::string>& wavs, std::size_t stages, std::size_t entries, std::uint64_t seed,
           std::size_t embed_dim, const std::optional<std::string>& config, const std::string& out) {
  const auto cfg = SpectrogramFrom(config);
  const rvq::FrameSet frames = MelFrames(wavs, cfg);
  rvq::FitOptions options;
  options.embed_dim = embed_dim;
  const rvq::QuantizerStack stack = rvq::fit_codebooks(frames, stages, entries, seed, options);
  std::cout << frames.rows() << " frames x " << frames.cols() << " mel bins\n";
  for (std::size_t c = 1; c <= stages; ++c) {
    std::printf("stages %zu  mse %.6f  mel_distance %.6f\n", c, rvq::reconstruction_error(frames, stack, c),
                metrics::mel_feature_distance(frames, rvq::reconstruct_frames(frames, stack, c)));
  }
  rvq::save_stack(out, stack);
  std::cout << "wrote " << out << '\n';
  return 0;
}

int RunEncode(const std::string& wav, const std::string& stack_path, const std::optional<std::string>& config,
              const std::string& out) {
  const rvq::QuantizerStack stack = rvq::load_stack(stack_path);
  const rvq::FrameSet frames = MelFrames({wav}, SpectrogramFrom(config));
  const TokenGrid grid = rvq::encode_frames(frames, stack);
  io::write_token_stream(out, grid);
  std::cout << "wrote " << out << " (" << grid.frames() << " frames x " << grid.codebooks() << " codebooks)\n";
  return 0;
}

int RunGenerate(const io::KeyValues& kv, std::size_t frames, std::size_t prompt_len, const std::string& out,
                const std::optional<std::string>& timestamps) {
  bench::BenchConfig cfg;
  cfg.apply(kv);
  nn::ModelConfig model = ModelFromSettings(kv);
  model.num_codebooks = cfg.codebooks;
  model.validate();
  nn::SessionOptions options;
  options.sampler.mode = nn::SampleMode::kTemperature;
  options.sampler.seed = cfg.seed;

  Rng rng(derive_seed(cfg.seed, prompt_len));
  std::vector<float> prompt(prompt_len * model.model_dim);
  for (float& x : prompt) x = static_cast<float>(rng.normal());

  nn::GenerationResult result;
  if (cfg.mode == bench::Mode::kHierarchy) {
    const hier::HierarchyModel m(model);
    const auto stack = rvq::QuantizerStack::random(model.num_codebooks, 16, model.vocab_size, model.model_dim,
                                                   cfg.frame_rate_hz, derive_seed(model.seed, 0x57AC));
    auto pool = m.backbone().make_pool(1);
    hier::HierarchySession session(m, *pool, stack, options);
    result = session.run(prompt, frames);
  } else {
    const nn::MultiheadModel m(model);
    auto pool = m.backbone().make_pool(1);
    nn::MultiheadSession session(
        m, *pool, layout::DelaySpec::canonical(model.num_codebooks, static_cast<TokenId>(model.vocab_size)), options);
    result = session.run(prompt, frames).generation;
  }
  io::write_token_stream(out, result.tokens);
  std::cout << "wrote " << out << " (" << result.tokens.frames() << " frames" << (result.hit_eos ? ", stopped at EOS" : "")
            << ")\n";
  if (timestamps) {
    io::write_frame_timestamps(*timestamps, result.frame_wall_ns);
    std::cout << "wrote " << *timestamps << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mctok: multi-codebook audio token runtime"};
  app.require_subcommand(1);

  auto* bench_cmd = app.add_subcommand("bench", "latency and throughput benchmarks");
  Settings bench_settings;
  bench_settings.add(*bench_cmd, "mode", "hierarchy | multihead");
  bench_settings.add(*bench_cmd, "input-len", "backbone input lengths (comma separated)");
  bench_settings.add(*bench_cmd, "iters", "measured runs per length");
  bench_settings.add(*bench_cmd, "warmup", "untimed runs before measuring");
  bench_settings.add(*bench_cmd, "chunk-tokens", "codebook tokens in the first chunk");
  bench_settings.add(*bench_cmd, "frame-rate", "frames per second of audio");
  bench_settings.add(*bench_cmd, "codebooks", "codebooks per frame (K)");
  bench_settings.add(*bench_cmd, "tpot-frames", "frames per TPOT run");
  bench_settings.add(*bench_cmd, "phase", "prefill | decode | all");
  bench_settings.add(*bench_cmd, "batch", "concurrent sessions (comma separated)");
  bench_settings.add(*bench_cmd, "prefill-len", "prefill stress lengths");
  bench_settings.add(*bench_cmd, "decode-len", "decode stress lengths");
  bench_settings.add(*bench_cmd, "duration", "stress duration in seconds");
  bench_settings.add(*bench_cmd, "pool-sequences", "KV pages for this many full sequences (0: batch)");
  bench_settings.add(*bench_cmd, "seed", "sampling and prompt seed");
  AddModelFlags(*bench_cmd, bench_settings);
  std::optional<std::string> bench_config;
  std::string report = "csv", out = "mctok_bench", suite = "all";
  bench_cmd->add_option("--config", bench_config, "key=value file; command-line flags win")->check(CLI::ExistingFile);
  bench_cmd->add_option("--report", report, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_option("--out", out, "output path prefix");
  bench_cmd->add_option("--suite", suite, "latency | throughput | all")
      ->check(CLI::IsMember({"latency", "throughput", "all"}));

  auto* metrics_cmd = app.add_subcommand("metrics", "SI-SDR, STFT and mel distance between two WAV files");
  std::string ref, est, metrics_report = "csv";
  std::optional<std::string> metrics_config, metrics_out;
  metrics_cmd->add_option("--ref", ref, "reference WAV")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--est", est, "estimate WAV")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--config", metrics_config, "spectrogram key=value file")->check(CLI::ExistingFile);
  metrics_cmd->add_option("--report", metrics_report, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  metrics_cmd->add_option("--out", metrics_out, "output file (default: stdout)");

  auto* fit_cmd = app.add_subcommand("fit", "fit RVQ codebooks on log-mel frames of WAV files");
  std::vector<std::string> fit_wavs;
  std::size_t stages = 8, entries = 256, embed_dim = 64;
  std::uint64_t fit_seed = 0;
  std::optional<std::string> fit_config;
  std::string fit_out = "stack.qrvq";
  fit_cmd->add_option("--wav", fit_wavs, "training WAV files")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--stages", stages, "codebooks (C)");
  fit_cmd->add_option("--entries", entries, "entries per codebook (E)");
  fit_cmd->add_option("--embed-dim", embed_dim, "context embedding width");
  fit_cmd->add_option("--seed", fit_seed, "k-means seed");
  fit_cmd->add_option("--config", fit_config, "spectrogram key=value file")->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit_out, "output stack file");

  auto* encode_cmd = app.add_subcommand("encode", "quantize the log-mel frames of a WAV file into tokens");
  std::string encode_wav_path, encode_stack, encode_out = "tokens.bin";
  std::optional<std::string> encode_config;
  encode_cmd->add_option("--wav", encode_wav_path, "input WAV")->required()->check(CLI::ExistingFile);
  encode_cmd->add_option("--stack", encode_stack, "codebook stack file")->required()->check(CLI::ExistingFile);
  encode_cmd->add_option("--config", encode_config, "spectrogram key=value file")->check(CLI::ExistingFile);
  encode_cmd->add_option("--out", encode_out, "output token stream");

  auto* gen_cmd = app.add_subcommand("generate", "sample tokens from a randomly initialised model");
  Settings gen_settings;
  gen_settings.add(*gen_cmd, "mode", "hierarchy | multihead");
  gen_settings.add(*gen_cmd, "codebooks", "codebooks per frame (K)");
  gen_settings.add(*gen_cmd, "frame-rate", "frames per second of audio");
  gen_settings.add(*gen_cmd, "seed", "sampling and prompt seed");
  AddModelFlags(*gen_cmd, gen_settings);
  std::optional<std::string> gen_config, gen_timestamps;
  std::size_t gen_frames = 25, gen_prompt = 16;
  std::string gen_out = "tokens.bin";
  gen_cmd->add_option("--config", gen_config, "key=value file; command-line flags win")->check(CLI::ExistingFile);
  gen_cmd->add_option("--frames", gen_frames, "frames to generate");
  gen_cmd->add_option("--prompt-len", gen_prompt, "prompt length in backbone positions");
  gen_cmd->add_option("--out", gen_out, "output token stream");
  gen_cmd->add_option("--timestamps", gen_timestamps, "per-frame completion times (CSV)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench_cmd->parsed()) return RunBench(bench_settings.merged(bench_config), report, out, suite);
    if (metrics_cmd->parsed()) return RunMetrics(ref, est, metrics_config, metrics_report, metrics_out);
    if (fit_cmd->parsed()) return RunFit(fit_wavs, stages, entries, fit_seed, embed_dim, fit_config, fit_out);
    if (encode_cmd->parsed()) return RunEncode(encode_wav_path, encode_stack, encode_config, encode_out);
    if (gen_cmd->parsed()) {
      return RunGenerate(gen_settings.merged(gen_config), gen_frames, gen_prompt, gen_out, gen_timestamps);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
