#include <doctest.h>

#include "helix/codec.hpp"
#include "helix/tokenizer.hpp"
#include "helix/tsv.hpp"

#include "testutil.hpp"

using namespace helix;

TEST_CASE("vocabulary layout") {
  CHECK(Vocabulary::kSize == 261);
  CHECK(Vocabulary::token_of("AAAA") == 5);
  CHECK(Vocabulary::token_of("AAAC") == 6);
  CHECK(Vocabulary::token_of("TTTT") == 260);
  for (int id = 5; id < 261; ++id)
    CHECK(Vocabulary::token_of(Vocabulary::kmer_of(id)) == id);
  CHECK_THROWS(Vocabulary::kmer_of(4));
  CHECK_THROWS(Vocabulary::token_of("ACG"));
}

TEST_CASE("vocabulary file dump") {
  testutil::TempDir dir("vocab");
  auto path = dir.path() / "vocab.txt";
  Vocabulary::dump(path);
  Vocabulary::validate_file(path);
  auto lines = read_lines(path);
  REQUIRE(lines.size() == 261);
  CHECK(lines[0] == "[PAD]");
  CHECK(lines[1] == "[UNUSED]");
  CHECK(lines[2] == "[EOS]");
  CHECK(lines[3] == "[CLS]");
  CHECK(lines[4] == "[MASK]");
  CHECK(lines[5] == "AAAA");
  CHECK(lines[260] == "TTTT");
}

TEST_CASE("kmerize") {
  CHECK(kmerize("ACGTA", 4) == std::vector<std::string>{"ACGT", "CGTA"});
  CHECK(kmerize("ACGT", 4) == std::vector<std::string>{"ACGT"});
  CHECK(kmerize("AC", 4) == std::vector<std::string>{"ACAA"});  // 'A'-padded

  Rng rng(3);
  for (int iter = 0; iter < 200; ++iter) {
    int k = 1 + static_cast<int>(rng.below(6));
    auto seq = testutil::random_dna(rng, rng.below(40));
    auto kmers = kmerize(seq, k);
    size_t expect =
        std::max(seq.size(), static_cast<size_t>(k)) - static_cast<size_t>(k) + 1;
    CHECK(kmers.size() == expect);
    for (const auto& km : kmers) CHECK(km.size() == static_cast<size_t>(k));
  }
  auto kmers = kmerize(testutil::random_dna(rng, 100), 4);
  CHECK(kmers.size() == 97);
}

TEST_CASE("encode_input") {
  const int l = 100, k = 4;
  CHECK(encoder_length(l, k) == 115);

  SUBCASE("empty read pads to one A-kmer") {
    auto ids = encode_input("", l, k);
    REQUIRE(ids.size() == 115);
    CHECK(ids[0] == Vocabulary::kCls);
    CHECK(ids[1] == Vocabulary::token_of("AAAA"));
    CHECK(ids[2] == Vocabulary::kEos);
    for (size_t i = 3; i < ids.size(); ++i) CHECK(ids[i] == Vocabulary::kPad);
  }
  SUBCASE("length-100 read gives 99 non-pad tokens") {
    Rng rng(9);
    auto ids = encode_input(testutil::random_dna(rng, 100), l, k);
    size_t non_pad = 0;
    for (int32_t id : ids) non_pad += (id != Vocabulary::kPad);
    CHECK(non_pad == 99);
  }
  SUBCASE("reads beyond the cap are truncated") {
    Rng rng(10);
    auto ids = encode_input(testutil::random_dna(rng, 120), l, k);
    REQUIRE(ids.size() == 115);
    size_t non_pad = 0;
    for (int32_t id : ids) non_pad += (id != Vocabulary::kPad);
    CHECK(non_pad == 115);  // 113 k-mers of a 116-base read + CLS + EOS
  }
}

TEST_CASE("encode_target and decode_output") {
  const int l = 100;
  std::string zeros;
  for (int i = 0; i < 25; ++i) zeros += "AAAA";

  auto target = encode_target(zeros, l);
  REQUIRE(target.size() == 26);
  for (int i = 0; i < 25; ++i) CHECK(target[static_cast<size_t>(i)] == 5);
  CHECK(target.back() == Vocabulary::kEos);
  CHECK(decode_output(target) == zeros);

  SUBCASE("round-trip on random valid sequences") {
    Rng rng(12);
    for (int iter = 0; iter < 300; ++iter) {
      auto seq = testutil::random_dna(rng, 100);
      CHECK(decode_output(encode_target(seq, l)) == seq);
    }
  }
  SUBCASE("EOS alone decodes to the empty string") {
    std::vector<int32_t> ids{Vocabulary::kEos};
    CHECK(decode_output(ids).empty());
  }
  SUBCASE("non-codeword token before EOS is malformed") {
    std::vector<int32_t> ids{5, Vocabulary::kMask, Vocabulary::kEos};
    CHECK_THROWS(decode_output(ids));
  }
  SUBCASE("wrong target length is rejected") {
    CHECK_THROWS(encode_target("ACGT", 100));
  }
}
