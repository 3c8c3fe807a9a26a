#include "helix/baselines.hpp"

#include <array>
#include <stdexcept>

#include "helix/dna.hpp"

namespace helix {

std::string identity_reconstruct(const ReadCluster& cluster) {
  if (cluster.reads.empty())
    throw std::invalid_argument("identity_reconstruct: empty cluster");
  return cluster.reads.front();
}

namespace {

// Majority symbol over the given characters; ties broken by alphabet order.
// Returns 0 when no read contributes.
char majority(const std::array<int, 4>& votes) {
  int best = -1;
  char sym = 0;
  for (int b = 0; b < 4; ++b) {
    if (votes[static_cast<size_t>(b)] > best) {
      best = votes[static_cast<size_t>(b)];
      sym = kBases[b];
    }
  }
  return best > 0 ? sym : 0;
}

}  // namespace

BmaResult bma_reconstruct(const ReadCluster& cluster, int l) {
  if (cluster.reads.empty())
    throw std::invalid_argument("bma_reconstruct: empty cluster");
  if (l <= 0) throw std::invalid_argument("bma_reconstruct: l must be positive");

  BmaResult result;
  result.sequence.reserve(static_cast<size_t>(l));

  const auto& reads = cluster.reads;
  if (reads.size() == 1) {
    result.sequence = reads.front().substr(
        0, std::min(reads.front().size(), static_cast<size_t>(l)));
    result.sequence.resize(static_cast<size_t>(l), 'A');
    return result;
  }

  std::vector<size_t> ptr(reads.size(), 0);
  auto at = [&](size_t j, size_t off) -> char {
    size_t p = ptr[j] + off;
    return p < reads[j].size() ? reads[j][p] : 0;
  };

  for (int i = 0; i < l; ++i) {
    std::array<int, 4> votes{0, 0, 0, 0};
    for (size_t j = 0; j < reads.size(); ++j) {
      char c = at(j, 0);
      if (c != 0) votes[static_cast<size_t>(base_index(c))]++;
    }
    char m = majority(votes);
    if (m == 0) {  // every pointer ran past its read
      result.pointers_exhausted = true;
      result.sequence.resize(static_cast<size_t>(l), 'A');
      return result;
    }
    result.sequence.push_back(m);

    // Expected next output symbol, estimated from the next symbols of the
    // reads that agree with the current majority.
    std::array<int, 4> next_votes{0, 0, 0, 0};
    for (size_t j = 0; j < reads.size(); ++j) {
      if (at(j, 0) == m) {
        char c = at(j, 1);
        if (c != 0) next_votes[static_cast<size_t>(base_index(c))]++;
      }
    }
    char m1 = majority(next_votes);  // 0 when undefined

    for (size_t j = 0; j < reads.size(); ++j) {
      char a = at(j, 0);
      if (a == 0) continue;
      if (a == m) {
        ptr[j] += 1;
        continue;
      }
      char b = at(j, 1);
      char c = at(j, 2);
      bool sub_ev = (m1 != 0 && b == m1);          // alignment intact past a
      bool del_ev = (m1 != 0 && a == m1);          // a already belongs to i+1
      bool ins_ev = (b == m && (m1 == 0 || c == 0 || c == m1));  // m shifted right
      if (sub_ev) ptr[j] += 1;       // ambiguity resolves to substitution
      else if (del_ev) ptr[j] += 0;  // hold: the read is missing m
      else if (ins_ev) ptr[j] += 2;  // skip the inserted symbol and m
      else ptr[j] += 1;
    }
  }
  return result;
}

}  // namespace helix
