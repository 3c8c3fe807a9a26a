#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace helix {

struct ModelConfig {
  int num_layers = 4;
  int hidden_size = 128;
  int ffn_size = 512;
  int num_heads = 4;
  int vocab_size = 261;
  int max_encoder_positions = 115;
  int max_decoder_positions = 26;
  double dropout_rate = 0.1;
  int k = 4;

  int head_dim() const { return hidden_size / num_heads; }
  void validate() const;

  // "desk" (default), "paper" (12/768/3072/12) or "micro" (test scale);
  // position limits are derived from l and k.
  static ModelConfig preset(const std::string& name, int l, int k);
};

// Encoder-decoder Transformer over the shared 261-token vocabulary:
// bidirectional pre-norm encoder over k-mer tokens, causal decoder with a
// cross-attention block between self-attention and feed-forward, separate
// embeddings, and an output projection to the vocabulary. Scalar is float
// for training/inference and double for finite-difference gradient checks.
template <typename Scalar>
class Seq2SeqModel {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit Seq2SeqModel(const ModelConfig& cfg);
  ~Seq2SeqModel();
  Seq2SeqModel(const Seq2SeqModel&) = delete;
  Seq2SeqModel& operator=(const Seq2SeqModel&) = delete;

  const ModelConfig& config() const { return cfg_; }

  // Gaussian(0, 0.02) weights, unit norm gains, zero biases.
  void init_parameters(uint64_t seed);

  struct ParamRef {
    std::string name;
    Mat* value;
    Mat* grad;
  };
  // Stable enumeration order; the checkpoint and optimizer rely on it.
  std::vector<ParamRef> parameters();
  int64_t parameter_count() const;

  // One teacher-forced training batch. src rows are padded with PAD (id 0);
  // validity is derived from the ids. tgt_in starts with CLS; tgt_out ends
  // with EOS; PAD positions in tgt_out are excluded from the loss.
  struct Batch {
    int nseq = 0;
    int src_len = 0;
    int tgt_len = 0;
    std::vector<int32_t> src_ids;  // nseq*src_len
    std::vector<int32_t> tgt_in;   // nseq*tgt_len
    std::vector<int32_t> tgt_out;  // nseq*tgt_len
  };

  // Mean cross-entropy per counted target token; accumulates parameter
  // gradients (call zero_grads() first). Dropout is active when
  // config().dropout_rate > 0 and is deterministic in dropout_seed.
  double forward_backward(const Batch& batch, uint64_t dropout_seed);

  // Inference-mode loss (no dropout, no gradients).
  double forward_loss(const Batch& batch) const;

  void zero_grads();

  // --- single-sample inference (no dropout) ---

  // Contextual states, shape (|ids| x hidden). Key positions with id PAD are
  // masked out of attention. `positions` defaults to 0,1,2,...
  Mat encoder_forward(std::span<const int32_t> ids,
                      std::span<const int32_t> positions = {}) const;

  // Per-layer post-softmax attention probabilities, for inspection.
  struct EncoderTrace {
    std::vector<std::vector<Mat>> attn;  // [layer][head], each S x S
  };
  Mat encoder_forward(std::span<const int32_t> ids,
                      std::span<const int32_t> positions,
                      EncoderTrace* trace) const;

  // Causal decoding over `prev_ids` with cross-attention on enc_states.
  // Returns logits, shape (|prev_ids| x vocab).
  Mat decoder_forward(std::span<const int32_t> prev_ids, const Mat& enc_states,
                      std::span<const uint8_t> enc_valid) const;

  // Incremental decoding context for one read: the encoder pass and the
  // per-layer cross-attention keys/values are computed once.
  class DecodeSession {
   public:
    DecodeSession(const Seq2SeqModel& model, std::span<const int32_t> src_ids);
    // Logits of the last position for each prefix; prefixes must share one
    // length. Shape (n_prefixes x vocab).
    Mat last_logits(const std::vector<std::vector<int32_t>>& prefixes) const;

   private:
    const Seq2SeqModel& model_;
    Mat enc_states_;
    std::vector<uint8_t> enc_valid_;
    std::vector<Mat> enc_k_, enc_v_;  // per decoder layer
  };

 private:
  struct Impl;
  ModelConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

extern template class Seq2SeqModel<float>;
extern template class Seq2SeqModel<double>;

}  // namespace helix
