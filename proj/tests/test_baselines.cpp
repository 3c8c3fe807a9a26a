#include <doctest.h>

#include "helix/baselines.hpp"
#include "helix/channel.hpp"

#include "testutil.hpp"

using namespace helix;

TEST_CASE("identity_reconstruct") {
  ReadCluster c{7, {"ACGTACGT"}};
  CHECK(identity_reconstruct(c) == "ACGTACGT");
  ReadCluster shorter{8, {"ACGTACG", "TTTTTTTT"}};
  CHECK(identity_reconstruct(shorter) == "ACGTACG");  // first read as-is
}

TEST_CASE("bma hand traces") {
  SUBCASE("three identical reads") {
    ReadCluster c{0, {"ACGT", "ACGT", "ACGT"}};
    auto r = bma_reconstruct(c, 4);
    CHECK(r.sequence == "ACGT");
    CHECK_FALSE(r.pointers_exhausted);
  }
  SUBCASE("substitution outvoted") {
    ReadCluster c{0, {"ACGT", "ACGT", "AGGT"}};
    CHECK(bma_reconstruct(c, 4).sequence == "ACGT");
  }
  SUBCASE("deletion detected by lookahead, pointer held") {
    ReadCluster c{0, {"ACGT", "ACGT", "AGT"}};
    CHECK(bma_reconstruct(c, 4).sequence == "ACGT");
  }
  SUBCASE("insertion detected by lookahead, pointer skips") {
    ReadCluster c{0, {"ACGT", "ACGT", "ATCGT"}};
    CHECK(bma_reconstruct(c, 4).sequence == "ACGT");
  }
  SUBCASE("single read pads and truncates") {
    CHECK(bma_reconstruct({0, {"ACG"}}, 4).sequence == "ACGA");
    CHECK(bma_reconstruct({0, {"ACGTT"}}, 4).sequence == "ACGT");
  }
  SUBCASE("exhausted pointers fill with A and flag") {
    ReadCluster c{0, {"AC", "AC"}};
    auto r = bma_reconstruct(c, 6);
    CHECK(r.sequence == "ACAAAA");
    CHECK(r.pointers_exhausted);
  }
}

TEST_CASE("bma recovers the source from noiseless copies") {
  Rng rng(17);
  for (int iter = 0; iter < 1000; ++iter) {
    int l = 8 + 4 * static_cast<int>(rng.below(24));
    auto src = testutil::random_dna(rng, static_cast<size_t>(l));
    int t = 2 + static_cast<int>(rng.below(3));
    ReadCluster c{0, std::vector<std::string>(static_cast<size_t>(t), src)};
    auto r = bma_reconstruct(c, l);
    CHECK(r.sequence == src);
    CHECK_FALSE(r.pointers_exhausted);
  }
}

TEST_CASE("bma output always has length l") {
  Rng rng(19);
  auto scheme = scale_scheme(default_error_scheme(), 30.0);
  for (int iter = 0; iter < 300; ++iter) {
    auto src = testutil::random_dna(rng, 60);
    std::vector<std::string> reads;
    for (int j = 0; j < 3; ++j)
      reads.push_back(transmit(src, scheme, rng.next_u64()));
    auto r = bma_reconstruct({0, std::move(reads)}, 60);
    CHECK(r.sequence.size() == 60);
  }
}

TEST_CASE("success ordering identity(1) < bma(2) < bma(3) at default noise") {
  Rng rng(23);
  const int l = 100, n = 5000;
  auto scheme = default_error_scheme();
  int ok1 = 0, ok2 = 0, ok3 = 0;
  for (int i = 0; i < n; ++i) {
    auto src = testutil::random_dna(rng, static_cast<size_t>(l));
    std::vector<std::string> reads;
    for (int j = 0; j < 3; ++j)
      reads.push_back(transmit(src, scheme, mix_seed(900, static_cast<uint64_t>(i), static_cast<uint64_t>(j))));
    ok1 += (identity_reconstruct({0, {reads[0]}}) == src);
    ok2 += (bma_reconstruct({0, {reads[0], reads[1]}}, l).sequence == src);
    ok3 += (bma_reconstruct({0, reads}, l).sequence == src);
  }
  CHECK(ok1 < ok2);
  CHECK(ok2 < ok3);
}
