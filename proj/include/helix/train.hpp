#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "helix/model.hpp"
#include "helix/partition.hpp"

namespace helix {

struct TrainHyper {
  double learning_rate = 1e-4;
  int warmup_steps = 500;
  int batch_size = 32;
  int max_epochs = 30;
  int patience = 3;                  // validation epochs without improvement
  double validation_fraction = 0.05; // held out by hashed clean target
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainState {
  int64_t step = 0;
  double best_val_loss = 0.0;
  uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

// Adaptive-moment accumulators, aligned with the model's parameter order.
struct OptState {
  std::vector<Eigen::MatrixXf> m, v;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochLog> history;
  int best_epoch = 0;
  OptState opt;
};

// Teacher-forced training with cross-entropy, adaptive-moment updates with
// linear warmup, and best-validation-checkpoint early stopping. Throws
// TrainingDiverged when the loss becomes non-finite.
TrainResult train_model(Seq2SeqModel<float>& model,
                        const std::vector<TrainingPair>& pairs,
                        const TrainHyper& hyper, int l, uint64_t seed);

// A per-class reconstruction model; classes with an empty corpus fall back
// to a validity-preserving identity mapping.
struct ClassModel {
  bool identity_fallback = true;
  std::shared_ptr<Seq2SeqModel<float>> model;
  TrainResult log;
};

struct Ensemble {
  ClassModel sl, ll, clbc;

  const ClassModel& of(ReadClass c) const;
};

// Three independently seeded models with the same configuration, trained on
// pairs_SL / pairs_LL / pairs_CLBC respectively.
Ensemble train_ensemble(const TrainingCorpus& corpus, const ModelConfig& cfg,
                        const TrainHyper& hyper, int l, uint64_t seed);

// ---- checkpoint container (versioned, self-describing) -------------------
// Layout: magic "HELIXCK1", little-endian u64 header length, JSON header
// (format version, kind, config, vocabulary file reference, tensor table,
// train state), then raw row-major float32 tensor data.

void save_checkpoint(const std::filesystem::path& path,
                     Seq2SeqModel<float>& model, const TrainState& state,
                     const OptState* opt, const std::string& vocab_ref,
                     const std::string& class_name);
void save_identity_checkpoint(const std::filesystem::path& path,
                              const std::string& class_name);

struct LoadedCheckpoint {
  bool identity_fallback = false;
  std::string class_name;
  ModelConfig config;
  std::shared_ptr<Seq2SeqModel<float>> model;  // null when identity
  TrainState state;
  OptState opt;  // empty when the checkpoint carries no optimizer moments
  std::string vocab_ref;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace helix
