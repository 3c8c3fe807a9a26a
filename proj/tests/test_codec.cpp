#include <doctest.h>

#include <set>

#include "helix/codec.hpp"
#include "helix/digest.hpp"
#include "helix/errors.hpp"
#include "helix/rng.hpp"

#include "testutil.hpp"

using namespace helix;

TEST_CASE("canonical codeword table") {
  auto table = build_codeword_table();
  CHECK(table.byte_to_codeword[0x00] == "AAAA");
  CHECK(table.byte_to_codeword[0xFF] == "TTTT");
  CHECK(table.byte_to_codeword[0x1B] == "ACGT");

  SUBCASE("bijection") {
    std::set<std::string> seen;
    for (const auto& cw : table.byte_to_codeword) {
      CHECK(cw.size() == 4);
      seen.insert(cw);
    }
    CHECK(seen.size() == 256);
    for (int b = 0; b < 256; ++b)
      CHECK(codeword_value(table.byte_to_codeword[static_cast<size_t>(b)]) == b);
  }
}

TEST_CASE("encode_file splits and pads") {
  SUBCASE("25 bytes fill one length-100 sequence") {
    std::vector<uint8_t> bytes(25, 0x41);
    auto a = encode_file(bytes, 100);
    CHECK(a.sequences.size() == 1);
    CHECK(a.sequences[0].size() == 100);
    CHECK(a.manifest.pad_byte_count == 0);
  }
  SUBCASE("26 bytes need two sequences and 24 pad bytes") {
    std::vector<uint8_t> bytes(26, 0x41);
    auto a = encode_file(bytes, 100);
    CHECK(a.sequences.size() == 2);
    CHECK(a.manifest.pad_byte_count == 24);
    CHECK(a.manifest.original_byte_length == 26);
  }
  SUBCASE("all-zero input uses a single codeword") {
    std::vector<uint8_t> bytes(100, 0x00);
    auto a = encode_file(bytes, 100);
    CHECK(a.sequences.size() == 4);
    for (const auto& s : a.sequences) {
      for (size_t i = 0; i + 4 <= s.size(); i += 4)
        CHECK(s.substr(i, 4) == "AAAA");
    }
    CHECK(a.manifest.used_set == std::vector<std::string>{"AAAA"});
  }
  SUBCASE("l not a multiple of 4 is a configuration error") {
    std::vector<uint8_t> bytes(10, 0);
    CHECK_THROWS_AS(encode_file(bytes, 102), ConfigError);
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(encode_file({}, 100), std::invalid_argument);
  }
}

TEST_CASE("decode_archive inverts encode_file") {
  Rng rng(41);
  for (int iter = 0; iter < 50; ++iter) {
    size_t len = 1 + rng.below(2000);
    auto bytes = testutil::random_bytes(rng, len);
    int l = 4 * (1 + static_cast<int>(rng.below(40)));
    auto a = encode_file(bytes, l);
    // manifest arithmetic invariant
    CHECK(a.manifest.sequence_count * (static_cast<uint64_t>(l) / 4) -
              a.manifest.pad_byte_count ==
          a.manifest.original_byte_length);
    auto r = decode_archive(a.sequences, a.manifest);
    CHECK(r.issues.empty());
    CHECK(r.bytes == bytes);
  }
}

TEST_CASE("decode_archive error handling") {
  std::vector<uint8_t> bytes(50, 0x41);
  auto a = encode_file(bytes, 100);

  SUBCASE("wrong-length sequence is recorded and padded") {
    a.sequences[0].pop_back();
    auto r = decode_archive(a.sequences, a.manifest);
    REQUIRE(r.issues.size() == 1);
    CHECK(r.issues[0].sequence_index == 0);
    for (int i = 0; i < 25; ++i) CHECK(r.bytes[static_cast<size_t>(i)] == 0);
    // the intact second sequence still decodes
    CHECK(r.bytes[25] == 0x41);
  }
  SUBCASE("non-ACGT symbol is recorded") {
    a.sequences[1][3] = 'B';
    auto r = decode_archive(a.sequences, a.manifest);
    REQUIRE(r.issues.size() == 1);
    CHECK(r.issues[0].sequence_index == 1);
    CHECK(r.issues[0].reason == "non-ACGT symbol");
  }
}

TEST_CASE("invalid codewords map to the nearest used codeword") {
  UsedSet used = UsedSet::from_codewords({"AAAA", "TTTT"});
  CHECK(nearest_used_codeword("AAAC", used) == "AAAA");  // Hamming 1 vs 4
  CHECK(nearest_used_codeword("TTTA", used) == "TTTT");
  // equidistant: lexicographic order wins
  CHECK(nearest_used_codeword("AATT", used) == "AAAA");

  Manifest m;
  m.l = 8;
  m.used_set = {"AAAA", "TTTT"};
  m.original_byte_length = 2;
  m.pad_byte_count = 0;
  m.sequence_count = 1;
  m.file_digest = "sha256:";
  auto r = decode_archive({"AAACTTTT"}, m);
  CHECK(r.issues.empty());
  CHECK(r.bytes == std::vector<uint8_t>{0x00, 0xFF});
}

TEST_CASE("sequence tsv and manifest round-trip") {
  testutil::TempDir dir("codec");
  Rng rng(7);
  auto bytes = testutil::random_bytes(rng, 333);
  auto a = encode_file(bytes, 40);

  write_sequences_tsv(dir.path() / "seq.tsv", a.sequences);
  write_manifest_json(dir.path() / "manifest.json", a.manifest);
  auto seqs = read_sequences_tsv(dir.path() / "seq.tsv");
  auto m = read_manifest_json(dir.path() / "manifest.json");

  CHECK(seqs == a.sequences);
  CHECK(m.l == a.manifest.l);
  CHECK(m.k == a.manifest.k);
  CHECK(m.used_set == a.manifest.used_set);
  CHECK(m.original_byte_length == a.manifest.original_byte_length);
  CHECK(m.pad_byte_count == a.manifest.pad_byte_count);
  CHECK(m.sequence_count == a.manifest.sequence_count);
  CHECK(m.file_digest == a.manifest.file_digest);

  auto r = decode_archive(seqs, m);
  CHECK(r.bytes == bytes);
  CHECK("sha256:" + sha256_hex(r.bytes) == m.file_digest);
}
