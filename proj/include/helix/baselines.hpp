#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace helix {

struct ReadCluster {
  uint64_t sequence_id = 0;
  std::vector<std::string> reads;  // t >= 1 reads of the same source sequence
};

// Returns the first read unchanged (single-read natural-error baseline).
std::string identity_reconstruct(const ReadCluster& cluster);

struct BmaResult {
  std::string sequence;  // always exactly l symbols
  bool pointers_exhausted = false;
};

// Bitwise Majority Alignment with two-symbol lookahead. One pointer per
// read; each output position takes the majority over current symbols (ties
// by alphabet order A<C<G<T); disagreeing reads advance by 1 (substitution),
// 0 (deletion in the read) or 2 (insertion in the read) depending on how
// their next two symbols compare with the majority decisions. With t=1 the
// read itself is returned, padded with 'A' / truncated to length l.
BmaResult bma_reconstruct(const ReadCluster& cluster, int l);

}  // namespace helix
