#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "helix/codec.hpp"
#include "helix/partition.hpp"
#include "helix/train.hpp"

namespace helix {

struct BeamCandidate {
  std::vector<int32_t> tokens;  // l/4 codeword token ids (no BOS, no EOS)
  double log_prob = 0.0;        // cumulative, including the forced EOS
};

// Produces the logits over the vocabulary for the last position of each
// prefix; all prefixes share one length. Beam search is generic over this so
// tests can drive it with hand-set logit tables.
using StepFn =
    std::function<Eigen::MatrixXf(const std::vector<std::vector<int32_t>>&)>;

// Beam search over `steps` decoder positions with logits masked to
// `allowed_tokens` (log-probabilities elsewhere are -inf); after the last
// step EOS is forced and its log-probability added. Returns the completed
// candidates, best score first; at most B of them.
std::vector<BeamCandidate> beam_search_constrained(
    const StepFn& step, int steps, const std::vector<int32_t>& allowed_tokens,
    int beam_size);

// Decodes one read into a length-l sequence whose codewords all lie in
// `used`. Among the completed beams, the one with minimal edit distance to
// the read wins; ties break to higher log-probability, then lexicographic
// order.
std::string constrained_decode(const Seq2SeqModel<float>& model,
                               const std::string& read, const UsedSet& used,
                               int beam_size, int l);

// Validity-preserving identity: pad with 'A'/truncate to length l, then snap
// every aligned codeword to the nearest used codeword. Used for CLGC reads
// (where it is a no-op) and as the fallback for untrained class models.
std::string snap_to_valid(const std::string& read, int l, const UsedSet& used);

// CLGC reads map through the identity; SL/LL/CLBC decode through their class
// model (or the fallback). Output is ordered by sequence id.
std::vector<ReadRecord> reconstruct_all(const ReadPartition& partition,
                                        const Ensemble& ensemble,
                                        const UsedSet& used, int beam_size,
                                        int l, int threads = 1);

}  // namespace helix
