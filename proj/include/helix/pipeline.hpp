#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "helix/channel.hpp"
#include "helix/metrics.hpp"
#include "helix/train.hpp"

namespace helix {

struct PipelineConfig {
  std::filesystem::path input_file;
  int l = 100;
  int k = 4;
  ErrorScheme channel;            // transmission noise
  ErrorScheme injection;          // self-supervision noise (defaults to channel)
  int copies = 3;                 // channel reads simulated per sequence
  int t = 4;                      // injected copies per clean read
  std::string model_preset = "desk";
  TrainHyper training;
  int beam_size = 5;
  uint64_t master_seed = 0;       // required; no wall-clock seeding
  std::filesystem::path output_dir;
  size_t evaluation_sample_size = 5000;  // 0 = evaluate all, exclude none
  int decode_threads = 2;

  void validate() const;
  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Run-directory layout; every stage knows its artifact paths through this.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path sequences() const { return root / "archive/sequences.tsv"; }
  std::filesystem::path manifest() const { return root / "archive/manifest.json"; }
  std::filesystem::path reads() const { return root / "reads/reads.tsv"; }
  std::filesystem::path partition() const { return root / "partition/partition.tsv"; }
  std::filesystem::path eval_sample() const { return root / "partition/eval_sample.txt"; }
  std::filesystem::path corpus() const { return root / "corpus/corpus.tsv"; }
  std::filesystem::path vocab() const { return root / "models/vocab.txt"; }
  std::filesystem::path checkpoint(const std::string& cls) const {
    return root / ("models/model_" + cls + ".ckpt");
  }
  std::filesystem::path train_log() const { return root / "models/train_log.json"; }
  std::filesystem::path recon() const { return root / "recon/recon.tsv"; }
  std::filesystem::path decoded() const { return root / "decoded/output.bin"; }
  std::filesystem::path decode_report() const { return root / "decoded/decode_report.json"; }
  std::filesystem::path report(const std::string& name) const {
    return root / ("reports/report_" + name + ".json");
  }
  std::filesystem::path histogram(const std::string& name) const {
    return root / ("reports/hist_" + name + ".csv");
  }
  std::filesystem::path sweep_csv() const { return root / "sweep/sweep.csv"; }
  std::filesystem::path stage_manifest(const std::string& stage) const {
    return root / ("manifests/" + stage + ".json");
  }
};

enum class ReconScope { Eval, All };

// Stage entry points. Each reads its upstream artifacts from the run
// directory, writes its own artifacts plus a stage manifest, and throws
// ArtifactError when an upstream artifact is missing.
void cmd_encode(const PipelineConfig& cfg, const RunPaths& run);
void cmd_simulate(const PipelineConfig& cfg, const RunPaths& run);
void cmd_classify(const PipelineConfig& cfg, const RunPaths& run);
void cmd_gen_train(const PipelineConfig& cfg, const RunPaths& run);
void cmd_train(const PipelineConfig& cfg, const RunPaths& run);
void cmd_reconstruct(const PipelineConfig& cfg, const RunPaths& run,
                     ReconScope scope);
void cmd_decode(const PipelineConfig& cfg, const RunPaths& run);
EvalReport cmd_evaluate(const PipelineConfig& cfg, const RunPaths& run,
                        const std::string& algorithm, int copies);
void cmd_run(const PipelineConfig& cfg, const RunPaths& run);

struct SweepRow {
  double factor = 1.0;
  std::string algorithm;
  int t = 1;
  double success = 0.0, edit = 0.0, hamming = 0.0, edit_normalized = 0.0;
};
std::vector<SweepRow> cmd_sweep(const PipelineConfig& cfg, const RunPaths& run,
                                const std::vector<double>& factors);

}  // namespace helix
