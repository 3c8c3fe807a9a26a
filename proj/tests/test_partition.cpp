#include <doctest.h>

#include <cmath>

#include "helix/errors.hpp"
#include "helix/partition.hpp"

#include "testutil.hpp"

using namespace helix;

namespace {

UsedSet all_codewords() {
  UsedSet u;
  u.mask.set();
  return u;
}

std::vector<std::string> small_codeword_set() {
  // 16 codewords: all 4-mers over {A,C} -- substitutions rarely stay valid
  std::vector<std::string> cws;
  for (int v = 0; v < 256; ++v) {
    auto cw = codeword_of_byte(static_cast<uint8_t>(v));
    if (cw.find_first_not_of("AC") == std::string::npos) cws.push_back(cw);
  }
  return cws;
}

}  // namespace

TEST_CASE("classify_read rules") {
  const int l = 100;
  Rng rng(3);
  auto used = all_codewords();

  CHECK(classify_read(testutil::random_dna(rng, 99), l, used) == ReadClass::SL);
  CHECK(classify_read(testutil::random_dna(rng, 101), l, used) == ReadClass::LL);
  // with all 256 codewords valid, CLBC is unreachable for length-l reads
  for (int iter = 0; iter < 200; ++iter)
    CHECK(classify_read(testutil::random_dna(rng, 100), l, used) ==
          ReadClass::CLGC);

  UsedSet partial = UsedSet::from_codewords(small_codeword_set());
  std::string read = testutil::random_valid_sequence(rng, l, small_codeword_set());
  CHECK(classify_read(read, l, partial) == ReadClass::CLGC);
  read[0] = 'T';  // TC.. codeword is outside {A,C}^4
  CHECK(classify_read(read, l, partial) == ReadClass::CLBC);
}

TEST_CASE("partition is exhaustive and exclusive") {
  Rng rng(5);
  const int l = 40;
  UsedSet used = UsedSet::from_codewords(small_codeword_set());
  std::vector<ReadRecord> reads;
  for (uint64_t i = 0; i < 500; ++i)
    reads.push_back({i, testutil::random_dna(rng, 36 + rng.below(9))});

  auto p = classify(reads, l, used);
  CHECK(p.total() == reads.size());
  // ids across classes must be exactly the input ids (each once)
  std::vector<uint64_t> ids;
  for (const auto* cls : {&p.sl, &p.ll, &p.clgc, &p.clbc})
    for (const auto& r : *cls) ids.push_back(r.sequence_id);
  std::sort(ids.begin(), ids.end());
  for (uint64_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == i);
  for (const auto& r : p.sl) CHECK(r.read.size() < l);
  for (const auto& r : p.ll) CHECK(r.read.size() > l);
  for (const auto& r : p.clgc) {
    CHECK(r.read.size() == l);
    CHECK(classify_read(r.read, l, used) == ReadClass::CLGC);
  }
}

TEST_CASE("inject_noise degenerate cases") {
  const int l = 40;
  Rng rng(7);
  auto cws = small_codeword_set();
  UsedSet used = UsedSet::from_codewords(cws);
  std::vector<ReadRecord> cleans;
  for (uint64_t i = 0; i < 10; ++i)
    cleans.push_back({i, testutil::random_valid_sequence(rng, l, cws)});

  SUBCASE("noiseless injection discards everything") {
    ErrorScheme zero{0, 0, 0, 1.0};
    auto corpus = inject_noise(cleans, zero, 3, 1, l, used);
    CHECK(corpus.total() == 0);
  }
  SUBCASE("near-total deletion lands every copy in SL") {
    ErrorScheme del{0.999999, 0, 0, 1.0};
    auto corpus = inject_noise(cleans, del, 4, 2, l, used);
    CHECK(corpus.pairs_sl.size() == 40);
    CHECK(corpus.pairs_ll.empty());
    CHECK(corpus.pairs_clbc.empty());
    for (const auto& p : corpus.pairs_sl) {
      CHECK(p.clean.size() == l);
      CHECK(classify_read(p.clean, l, used) == ReadClass::CLGC);
    }
  }
  SUBCASE("no clean reads aborts") {
    CHECK_THROWS_AS(inject_noise({}, default_error_scheme(), 4, 1, l, used),
                    PipelineError);
  }
  SUBCASE("deterministic under a fixed seed") {
    auto scheme = scale_scheme(default_error_scheme(), 10.0);
    auto c1 = inject_noise(cleans, scheme, 4, 99, l, used);
    auto c2 = inject_noise(cleans, scheme, 4, 99, l, used);
    REQUIRE(c1.pairs_sl.size() == c2.pairs_sl.size());
    for (size_t i = 0; i < c1.pairs_sl.size(); ++i)
      CHECK(c1.pairs_sl[i].noisy == c2.pairs_sl[i].noisy);
  }
}

TEST_CASE("corpus size matches the analytic corruption rate") {
  // 1000 cleans of length 100 at the default scheme, t=4: expected kept
  // copies = 4000 (1 - (1-0.0031)^100) minus the corrupted-yet-valid cases,
  // which are rare for a 16-codeword used set. Verified within +-10%.
  const int l = 100;
  Rng rng(11);
  auto cws = small_codeword_set();
  UsedSet used = UsedSet::from_codewords(cws);
  std::vector<ReadRecord> cleans;
  for (uint64_t i = 0; i < 1000; ++i)
    cleans.push_back({i, testutil::random_valid_sequence(rng, l, cws)});

  auto corpus = inject_noise(cleans, default_error_scheme(), 4, 31337, l, used);
  double expected = 4000.0 * (1.0 - std::pow(1.0 - 0.0031, 100));
  CHECK(std::abs(static_cast<double>(corpus.total()) - expected) <
        0.10 * expected);
}

TEST_CASE("partition and corpus tsv round-trips") {
  testutil::TempDir dir("partition");
  Rng rng(13);
  auto cws = small_codeword_set();
  UsedSet used = UsedSet::from_codewords(cws);

  std::vector<ReadRecord> reads;
  for (uint64_t i = 0; i < 200; ++i)
    reads.push_back({i, testutil::random_dna(rng, 38 + rng.below(5))});
  auto p = classify(reads, 40, used);
  write_partition_tsv(dir.path() / "p.tsv", p);
  auto p2 = read_partition_tsv(dir.path() / "p.tsv");
  CHECK(p2.sl.size() == p.sl.size());
  CHECK(p2.ll.size() == p.ll.size());
  CHECK(p2.clgc.size() == p.clgc.size());
  CHECK(p2.clbc.size() == p.clbc.size());

  std::vector<ReadRecord> cleans;
  for (uint64_t i = 0; i < 50; ++i)
    cleans.push_back({i, testutil::random_valid_sequence(rng, 40, cws)});
  auto corpus = inject_noise(cleans, scale_scheme(default_error_scheme(), 20.0),
                             3, 5, 40, used);
  write_corpus_tsv(dir.path() / "c.tsv", corpus);
  auto corpus2 = read_corpus_tsv(dir.path() / "c.tsv");
  CHECK(corpus2.pairs_sl.size() == corpus.pairs_sl.size());
  CHECK(corpus2.pairs_ll.size() == corpus.pairs_ll.size());
  CHECK(corpus2.pairs_clbc.size() == corpus.pairs_clbc.size());
  if (!corpus.pairs_sl.empty()) {
    CHECK(corpus2.pairs_sl[0].noisy == corpus.pairs_sl[0].noisy);
    CHECK(corpus2.pairs_sl[0].clean == corpus.pairs_sl[0].clean);
  }
}
