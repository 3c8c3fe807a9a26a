#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace helix {

// Fixed 261-token vocabulary shared by encoder and decoder: 5 special tokens
// followed by all 256 4-mers over {A,C,G,T} in lexicographic order.
struct Vocabulary {
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kUnused = 1;
  static constexpr int32_t kEos = 2;
  static constexpr int32_t kCls = 3;
  static constexpr int32_t kMask = 4;
  static constexpr int32_t kFirstKmer = 5;
  static constexpr int32_t kSize = 261;

  // token id for a 4-mer; throws std::invalid_argument for non-4-mers
  static int32_t token_of(std::string_view kmer);
  // 4-mer for ids 5..260; throws std::out_of_range otherwise
  static std::string kmer_of(int32_t id);
  static bool is_kmer_token(int32_t id) { return id >= kFirstKmer && id < kSize; }

  // One token string per line, line number = id. Part of the model artifact.
  static void dump(const std::filesystem::path& path);
  static void validate_file(const std::filesystem::path& path);
};

// Overlapping k-mers with a stride-one sliding window. Inputs shorter than k
// are right-padded with 'A' to length k first.
std::vector<std::string> kmerize(std::string_view seq, int k);

// Number of tokens encode_input produces for design length l and k-mer size
// k: CLS + k-mers of a read capped at l+16 bases + EOS.
int encoder_length(int l, int k);

// [CLS] + k-mer token ids + [EOS], right-padded with PAD to encoder_length;
// reads longer than l+16 bases are truncated.
std::vector<int32_t> encode_input(std::string_view read, int l, int k);

// The l/4 non-overlapping codeword tokens of a length-l sequence, followed
// by EOS (length l/4 + 1).
std::vector<int32_t> encode_target(std::string_view seq, int l);

// Concatenates the codewords of ids 5..260, stopping at EOS. A non-codeword
// token before EOS raises std::runtime_error (malformed output).
std::string decode_output(std::span<const int32_t> ids);

}  // namespace helix
