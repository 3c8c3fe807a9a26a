#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <iterator>
#include <string>
#include <vector>

#include "helix/rng.hpp"

namespace testutil {

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("helix_" + tag + "_" + std::to_string(counter.fetch_add(1)) + "_" +
             std::to_string(static_cast<uint64_t>(
                 reinterpret_cast<uintptr_t>(this))));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string random_dna(helix::Rng& rng, size_t len) {
  static const char bases[] = {'A', 'C', 'G', 'T'};
  std::string s(len, 'A');
  for (auto& c : s) c = bases[rng.below(4)];
  return s;
}

inline std::vector<uint8_t> random_bytes(helix::Rng& rng, size_t len) {
  std::vector<uint8_t> b(len);
  for (auto& x : b) x = static_cast<uint8_t>(rng.below(256));
  return b;
}

// DNA string over a restricted codeword alphabet (length multiple of 4).
inline std::string random_valid_sequence(helix::Rng& rng, int l,
                                         const std::vector<std::string>& cws) {
  std::string s;
  s.reserve(static_cast<size_t>(l));
  for (int i = 0; i < l / 4; ++i)
    s += cws[rng.below(static_cast<uint32_t>(cws.size()))];
  return s;
}

// Exponential-recursion edit distance; the independent oracle for the DP.
inline int64_t edit_distance_oracle(const std::string& a,
                                    const std::string& b) {
  if (a.empty()) return static_cast<int64_t>(b.size());
  if (b.empty()) return static_cast<int64_t>(a.size());
  std::string a1 = a.substr(1), b1 = b.substr(1);
  int64_t best = edit_distance_oracle(a1, b1) + (a[0] != b[0]);
  best = std::min(best, edit_distance_oracle(a1, b) + 1);
  best = std::min(best, edit_distance_oracle(a, b1) + 1);
  return best;
}

// Deterministic English-like text: seeded sentences over a fixed word list
// with punctuation, capitalization and the occasional number. Structured
// enough for a sequence model to learn, byte-diverse enough to be realistic.
inline std::string generate_text(uint64_t seed, size_t min_bytes) {
  static const char* kNouns[] = {
      "species", "storage", "sequence", "channel", "record", "library",
      "molecule", "archive", "system", "process", "signal", "pattern",
      "message", "fragment", "segment", "mixture", "density", "medium",
      "sample", "strand", "vector", "cluster", "origin", "nature", "theory",
      "result", "effect", "change", "growth", "model"};
  static const char* kVerbs[] = {
      "stores", "encodes", "decodes", "retrieves", "preserves", "transmits",
      "corrupts", "repairs", "contains", "produces", "reduces", "improves",
      "selects", "divides", "combines", "observes", "records", "predicts",
      "recovers", "supports"};
  static const char* kAdjs[] = {
      "synthetic", "natural", "durable", "reliable", "noisy", "redundant",
      "compact", "stable", "random", "distinct", "gradual", "frequent",
      "careful", "robust", "ancient", "modern", "simple", "complex",
      "uniform", "varied"};
  static const char* kAdverbs[] = {"slowly",  "rapidly",  "reliably",
                                   "rarely",  "commonly", "gradually",
                                   "directly", "strongly"};
  static const char* kConnect[] = {"and", "but", "while", "because",
                                   "although", "so that", "whereas"};

  helix::Rng rng(seed);
  auto pick = [&](auto& arr) {
    return arr[rng.below(static_cast<uint32_t>(std::size(arr)))];
  };
  std::string text;
  text.reserve(min_bytes + 256);
  while (text.size() < min_bytes) {
    std::string clause = std::string("the ") + pick(kAdjs) + " " +
                         pick(kNouns) + " " + pick(kVerbs) + " the " +
                         pick(kAdjs) + " " + pick(kNouns);
    if (rng.below(3) == 0) clause += std::string(" ") + pick(kAdverbs);
    std::string sentence = clause;
    if (rng.below(2) == 0) {
      sentence += std::string(", ") + pick(kConnect) + " the " + pick(kNouns) +
                  " " + pick(kVerbs) + " " + pick(kAdverbs);
    }
    if (rng.below(8) == 0)
      sentence += " over " + std::to_string(rng.below(9000) + 100) + " cycles";
    sentence[0] = static_cast<char>(std::toupper(sentence[0]));
    sentence += ". ";
    text += sentence;
    if (rng.below(12) == 0) text += "\n";
  }
  return text;
}

}  // namespace testutil
