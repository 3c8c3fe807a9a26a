#include "helix/codec.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <nlohmann/json.hpp>

#include "helix/digest.hpp"
#include "helix/dna.hpp"
#include "helix/errors.hpp"
#include "helix/tsv.hpp"

namespace helix {

using json = nlohmann::ordered_json;

int codeword_value(std::string_view cw) {
  if (cw.size() != 4) return -1;
  int v = 0;
  for (char c : cw) {
    int d = base_index(c);
    if (d < 0) return -1;
    v = v * 4 + d;
  }
  return v;
}

std::string codeword_of_byte(uint8_t b) {
  std::string cw(4, 'A');
  for (int i = 3; i >= 0; --i) {
    cw[i] = kBases[b & 3];
    b >>= 2;
  }
  return cw;
}

CodewordTable build_codeword_table() {
  CodewordTable t;
  for (int b = 0; b < 256; ++b)
    t.byte_to_codeword[b] = codeword_of_byte(static_cast<uint8_t>(b));
  return t;
}

std::vector<std::string> UsedSet::to_codewords() const {
  std::vector<std::string> out;
  out.reserve(mask.count());
  for (int v = 0; v < 256; ++v)
    if (mask[static_cast<size_t>(v)])
      out.push_back(codeword_of_byte(static_cast<uint8_t>(v)));
  return out;
}

UsedSet UsedSet::from_codewords(const std::vector<std::string>& cws) {
  UsedSet u;
  for (const auto& cw : cws) {
    int v = codeword_value(cw);
    if (v < 0) throw ConfigError("used_set entry is not a codeword: " + cw);
    u.mask.set(static_cast<size_t>(v));
  }
  return u;
}

std::string nearest_used_codeword(std::string_view cw, const UsedSet& used) {
  if (used.count() == 0) throw ConfigError("nearest_used_codeword: empty used_set");
  int best_v = -1;
  int best_d = 5;
  for (int v = 0; v < 256; ++v) {
    if (!used.mask[static_cast<size_t>(v)]) continue;
    std::string cand = codeword_of_byte(static_cast<uint8_t>(v));
    int d = 0;
    for (int i = 0; i < 4; ++i) d += (cand[i] != cw[i]);
    if (d < best_d) {  // ascending v == lexicographic order, so ties keep the first
      best_d = d;
      best_v = v;
    }
  }
  return codeword_of_byte(static_cast<uint8_t>(best_v));
}

StoredArchive encode_file(std::span<const uint8_t> bytes, int l) {
  if (l <= 0 || l % 4 != 0)
    throw ConfigError("sequence length l must be a positive multiple of 4, got " +
                      std::to_string(l));
  if (bytes.empty()) throw std::invalid_argument("encode_file: empty input");

  const size_t bytes_per_seq = static_cast<size_t>(l) / 4;
  const uint64_t n_seq = (bytes.size() + bytes_per_seq - 1) / bytes_per_seq;
  const uint64_t padded = n_seq * bytes_per_seq;

  StoredArchive a;
  a.sequences.reserve(n_seq);
  UsedSet used;

  std::string seq;
  seq.reserve(static_cast<size_t>(l));
  for (uint64_t i = 0; i < padded; ++i) {
    uint8_t b = i < bytes.size() ? bytes[i] : 0;
    used.mask.set(b);
    seq += codeword_of_byte(b);
    if (seq.size() == static_cast<size_t>(l)) {
      a.sequences.push_back(std::move(seq));
      seq.clear();
      seq.reserve(static_cast<size_t>(l));
    }
  }

  a.manifest.l = l;
  a.manifest.k = 4;
  a.manifest.used_set = used.to_codewords();
  a.manifest.original_byte_length = bytes.size();
  a.manifest.pad_byte_count = padded - bytes.size();
  a.manifest.sequence_count = n_seq;
  a.manifest.file_digest = "sha256:" + sha256_hex(bytes);
  return a;
}

DecodeResult decode_archive(const std::vector<std::string>& sequences,
                            const Manifest& manifest) {
  const int l = manifest.l;
  if (l <= 0 || l % 4 != 0) throw ConfigError("manifest: invalid l");
  const size_t bytes_per_seq = static_cast<size_t>(l) / 4;
  if (sequences.size() != manifest.sequence_count)
    throw ConfigError("manifest: sequence_count does not match input");
  if (manifest.sequence_count * bytes_per_seq !=
      manifest.original_byte_length + manifest.pad_byte_count)
    throw ConfigError("manifest: byte-count arithmetic does not hold");

  const UsedSet used = manifest.used();
  DecodeResult r;
  r.bytes.reserve(manifest.sequence_count * bytes_per_seq);

  for (uint64_t si = 0; si < sequences.size(); ++si) {
    const std::string& seq = sequences[si];
    if (seq.size() != static_cast<size_t>(l)) {
      r.issues.push_back({si, "wrong length " + std::to_string(seq.size())});
      r.bytes.insert(r.bytes.end(), bytes_per_seq, 0);
      continue;
    }
    if (!is_dna(seq)) {
      r.issues.push_back({si, "non-ACGT symbol"});
      r.bytes.insert(r.bytes.end(), bytes_per_seq, 0);
      continue;
    }
    for (size_t i = 0; i < bytes_per_seq; ++i) {
      std::string_view cw(seq.data() + 4 * i, 4);
      int v = codeword_value(cw);
      if (!used.contains_value(v))
        v = codeword_value(nearest_used_codeword(cw, used));
      r.bytes.push_back(static_cast<uint8_t>(v));
    }
  }
  r.bytes.resize(manifest.original_byte_length);
  return r;
}

void write_sequences_tsv(const std::filesystem::path& path,
                         const std::vector<std::string>& sequences) {
  auto out = open_out(path);
  for (size_t i = 0; i < sequences.size(); ++i)
    out << i << '\t' << sequences[i] << '\n';
}

std::vector<std::string> read_sequences_tsv(const std::filesystem::path& path) {
  std::vector<std::string> seqs;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() != 2)
      throw ArtifactError(path.string() + ": malformed record: " + line);
    uint64_t id = 0;
    auto [p, ec] = std::from_chars(fields[0].data(),
                                   fields[0].data() + fields[0].size(), id);
    if (ec != std::errc() || id != seqs.size())
      throw ArtifactError(path.string() + ": ids must be consecutive from 0");
    seqs.push_back(fields[1]);
  }
  return seqs;
}

void write_manifest_json(const std::filesystem::path& path, const Manifest& m) {
  json j;
  j["l"] = m.l;
  j["k"] = m.k;
  j["used_set"] = m.used_set;
  j["original_byte_length"] = m.original_byte_length;
  j["pad_byte_count"] = m.pad_byte_count;
  j["sequence_count"] = m.sequence_count;
  j["file_digest"] = m.file_digest;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Manifest read_manifest_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ArtifactError("manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  try {
    m.l = j.at("l").get<int>();
    m.k = j.at("k").get<int>();
    m.used_set = j.at("used_set").get<std::vector<std::string>>();
    m.original_byte_length = j.at("original_byte_length").get<uint64_t>();
    m.pad_byte_count = j.at("pad_byte_count").get<uint64_t>();
    m.sequence_count = j.at("sequence_count").get<uint64_t>();
    m.file_digest = j.at("file_digest").get<std::string>();
  } catch (const json::exception& e) {
    throw ArtifactError("manifest " + path.string() + ": " + e.what());
  }
  return m;
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const uint8_t> bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace helix
