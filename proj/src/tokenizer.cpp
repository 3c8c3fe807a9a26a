#include "helix/tokenizer.hpp"

#include <fstream>
#include <stdexcept>

#include "helix/codec.hpp"
#include "helix/dna.hpp"
#include "helix/errors.hpp"
#include "helix/tsv.hpp"

namespace helix {

namespace {
const char* kSpecialNames[5] = {"[PAD]", "[UNUSED]", "[EOS]", "[CLS]", "[MASK]"};
}

int32_t Vocabulary::token_of(std::string_view kmer) {
  int v = codeword_value(kmer);
  if (v < 0)
    throw std::invalid_argument("token_of: not a 4-mer over ACGT: " +
                                std::string(kmer));
  return kFirstKmer + v;
}

std::string Vocabulary::kmer_of(int32_t id) {
  if (!is_kmer_token(id))
    throw std::out_of_range("kmer_of: id " + std::to_string(id) +
                            " is not a k-mer token");
  return codeword_of_byte(static_cast<uint8_t>(id - kFirstKmer));
}

void Vocabulary::dump(const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const char* name : kSpecialNames) out << name << '\n';
  for (int v = 0; v < 256; ++v)
    out << codeword_of_byte(static_cast<uint8_t>(v)) << '\n';
}

void Vocabulary::validate_file(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.size() != kSize)
    throw ArtifactError("vocabulary file must have exactly 261 lines");
  for (int i = 0; i < 5; ++i)
    if (lines[static_cast<size_t>(i)] != kSpecialNames[i])
      throw ArtifactError("vocabulary special token mismatch at id " +
                          std::to_string(i));
  for (int v = 0; v < 256; ++v)
    if (lines[static_cast<size_t>(v) + 5] !=
        codeword_of_byte(static_cast<uint8_t>(v)))
      throw ArtifactError("vocabulary 4-mer mismatch at id " +
                          std::to_string(v + 5));
}

std::vector<std::string> kmerize(std::string_view seq, int k) {
  if (k <= 0) throw std::invalid_argument("kmerize: k must be positive");
  std::string padded;
  if (seq.size() < static_cast<size_t>(k)) {
    padded.assign(seq);
    padded.append(static_cast<size_t>(k) - seq.size(), 'A');
    seq = padded;
  }
  std::vector<std::string> kmers;
  kmers.reserve(seq.size() - static_cast<size_t>(k) + 1);
  for (size_t i = 0; i + static_cast<size_t>(k) <= seq.size(); ++i)
    kmers.emplace_back(seq.substr(i, static_cast<size_t>(k)));
  return kmers;
}

int encoder_length(int l, int k) { return (l + 16) - k + 1 + 2; }

std::vector<int32_t> encode_input(std::string_view read, int l, int k) {
  require_dna(read, "encode_input");
  const size_t cap = static_cast<size_t>(l) + 16;
  if (read.size() > cap) read = read.substr(0, cap);

  std::vector<int32_t> ids;
  ids.reserve(static_cast<size_t>(encoder_length(l, k)));
  ids.push_back(Vocabulary::kCls);
  for (const auto& kmer : kmerize(read, k))
    ids.push_back(Vocabulary::token_of(kmer));
  ids.push_back(Vocabulary::kEos);
  ids.resize(static_cast<size_t>(encoder_length(l, k)), Vocabulary::kPad);
  return ids;
}

std::vector<int32_t> encode_target(std::string_view seq, int l) {
  if (seq.size() != static_cast<size_t>(l))
    throw std::invalid_argument("encode_target: sequence length must be l");
  require_dna(seq, "encode_target");
  std::vector<int32_t> ids;
  ids.reserve(static_cast<size_t>(l) / 4 + 1);
  for (size_t i = 0; i + 4 <= seq.size(); i += 4)
    ids.push_back(Vocabulary::token_of(seq.substr(i, 4)));
  ids.push_back(Vocabulary::kEos);
  return ids;
}

std::string decode_output(std::span<const int32_t> ids) {
  std::string seq;
  seq.reserve(ids.size() * 4);
  for (int32_t id : ids) {
    if (id == Vocabulary::kEos) return seq;
    if (!Vocabulary::is_kmer_token(id))
      throw std::runtime_error("decode_output: non-codeword token " +
                               std::to_string(id) + " before EOS");
    seq += Vocabulary::kmer_of(id);
  }
  return seq;
}

}  // namespace helix
