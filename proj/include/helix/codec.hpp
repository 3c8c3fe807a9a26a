#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace helix {

// Numeric value of a 4-base codeword under the canonical map (A,C,G,T =
// base-4 digits 0..3, most significant first), or -1 if not a valid codeword.
int codeword_value(std::string_view cw);

// Byte value -> codeword string under the canonical map.
std::string codeword_of_byte(uint8_t b);

// Bijection between the 256 byte values and 4-base DNA codewords.
struct CodewordTable {
  std::array<std::string, 256> byte_to_codeword;
};

CodewordTable build_codeword_table();

// The subset of codewords actually present in an encoded file, keyed by the
// codeword's canonical byte value.
struct UsedSet {
  std::bitset<256> mask;

  bool contains(std::string_view cw) const {
    int v = codeword_value(cw);
    return v >= 0 && mask[static_cast<size_t>(v)];
  }
  bool contains_value(int v) const {
    return v >= 0 && v < 256 && mask[static_cast<size_t>(v)];
  }
  size_t count() const { return mask.count(); }

  std::vector<std::string> to_codewords() const;  // lexicographic order
  static UsedSet from_codewords(const std::vector<std::string>& cws);
};

// Nearest codeword in `used` by Hamming distance over the 4 positions,
// ties broken by lexicographic order of the codeword.
std::string nearest_used_codeword(std::string_view cw, const UsedSet& used);

struct Manifest {
  int l = 0;
  int k = 4;
  std::vector<std::string> used_set;  // sorted codeword strings
  uint64_t original_byte_length = 0;
  uint64_t pad_byte_count = 0;
  uint64_t sequence_count = 0;
  std::string file_digest;  // "<algorithm>:<hex>", e.g. "sha256:ab12..."

  UsedSet used() const { return UsedSet::from_codewords(used_set); }
};

struct StoredArchive {
  std::vector<std::string> sequences;  // each of length manifest.l
  Manifest manifest;
};

// Byte-level encoding: every byte becomes a 4-base codeword, the
// concatenation is split into length-l sequences, and the final sequence is
// zero-byte padded to full length. Throws ConfigError when l is not a
// positive multiple of 4 and std::invalid_argument for empty input.
StoredArchive encode_file(std::span<const uint8_t> bytes, int l);

struct DecodeIssue {
  uint64_t sequence_index = 0;
  std::string reason;
};

struct DecodeResult {
  std::vector<uint8_t> bytes;
  std::vector<DecodeIssue> issues;
};

// Inverse of encode_file after stripping pad bytes. Sequences of the wrong
// length or with non-ACGT symbols are recorded as issues and their byte range
// is filled with pad (zero) bytes. Valid 4-mers outside the used set are
// mapped to the nearest used codeword.
DecodeResult decode_archive(const std::vector<std::string>& sequences,
                            const Manifest& manifest);

// --- external formats ---------------------------------------------------
// Sequence/read record files: one record per line, `<id><TAB><sequence>`.

void write_sequences_tsv(const std::filesystem::path& path,
                         const std::vector<std::string>& sequences);
std::vector<std::string> read_sequences_tsv(const std::filesystem::path& path);

void write_manifest_json(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest_json(const std::filesystem::path& path);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const uint8_t> bytes);

}  // namespace helix
