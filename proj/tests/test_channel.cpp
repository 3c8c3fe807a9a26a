#include <doctest.h>

#include <cmath>

#include "helix/channel.hpp"
#include "helix/errors.hpp"

#include "testutil.hpp"

using namespace helix;

TEST_CASE("transmit identities") {
  Rng rng(11);
  auto seq = testutil::random_dna(rng, 500);

  SUBCASE("all rates zero is the identity") {
    ErrorScheme zero{0, 0, 0, 1.0};
    for (uint64_t seed = 0; seed < 20; ++seed)
      CHECK(transmit(seq, zero, seed) == seq);
  }
  SUBCASE("full deletion empties the read") {
    ErrorScheme del{0.999999, 0, 0, 1.0};
    // p_del=1 exactly is outside the open total-rate bound; 1-1e-6 deletes
    // every base here with overwhelming probability
    CHECK(transmit(seq, del, 3).empty());
  }
  SUBCASE("deterministic for a fixed seed") {
    auto scheme = default_error_scheme();
    ErrorScheme heavy = scale_scheme(scheme, 50.0);
    CHECK(transmit(seq, heavy, 99) == transmit(seq, heavy, 99));
  }
  SUBCASE("invalid symbol is rejected") {
    CHECK_THROWS_AS(transmit("ACGU", default_error_scheme(), 1),
                    std::invalid_argument);
  }
}

TEST_CASE("substitution fraction matches a binomial bound") {
  // 10^6 bases, p_sub=0.003 only: positional mismatches are Bin(n, p).
  const size_t n = 1'000'000;
  ErrorScheme scheme{0, 0, 0.003, 1.0};
  Rng rng(5);
  auto seq = testutil::random_dna(rng, n);
  auto read = transmit(seq, scheme, 77);
  REQUIRE(read.size() == n);
  size_t mismatches = 0;
  for (size_t i = 0; i < n; ++i) mismatches += (read[i] != seq[i]);
  double frac = static_cast<double>(mismatches) / n;
  double bound = 4.0 * std::sqrt(0.003 * 0.997 / n);
  CHECK(std::abs(frac - 0.003) < bound);
}

TEST_CASE("expected length law") {
  // E[|read|] = |seq| (1 + f p_ins - f p_del), checked within 4 SE.
  ErrorScheme scheme{0.01, 0.02, 0.005, 1.0};
  const size_t n = 200'000;
  Rng rng(6);
  auto seq = testutil::random_dna(rng, n);
  auto read = transmit(seq, scheme, 123);
  double expected = static_cast<double>(n) * (1 + 0.02 - 0.01);
  // per-position length contribution has variance p_ins(1-p_ins)+p_del(1-p_del)
  double var = 0.02 * 0.98 + 0.01 * 0.99;
  double se = std::sqrt(var * n);
  CHECK(std::abs(static_cast<double>(read.size()) - expected) < 4 * se);
}

TEST_CASE("transmit_archive") {
  Rng rng(13);
  auto bytes = testutil::random_bytes(rng, 1000);
  auto archive = encode_file(bytes, 100);
  auto scheme = default_error_scheme();

  SUBCASE("one read per sequence with ids in order") {
    auto reads = transmit_archive(archive, scheme, 1, 42);
    REQUIRE(reads.size() == archive.sequences.size());
    for (size_t i = 0; i < reads.size(); ++i)
      CHECK(reads[i].sequence_id == i);
  }
  SUBCASE("same master seed reproduces the read set") {
    auto r1 = transmit_archive(archive, scheme, 3, 42);
    auto r2 = transmit_archive(archive, scheme, 3, 42);
    REQUIRE(r1.size() == r2.size());
    for (size_t i = 0; i < r1.size(); ++i) {
      CHECK(r1[i].sequence_id == r2[i].sequence_id);
      CHECK(r1[i].read == r2[i].read);
    }
  }
  SUBCASE("copies of one sequence differ") {
    auto reads = transmit_archive(archive, scale_scheme(scheme, 20.0), 2, 1);
    bool any_diff = false;
    for (size_t i = 0; i + 1 < reads.size(); i += 2)
      any_diff |= (reads[i].read != reads[i + 1].read);
    CHECK(any_diff);
  }
}

TEST_CASE("natural single-read success at calibrated default rates") {
  // fraction of unchanged length-100 reads ~ (1-0.0031)^100 = 0.733 +- 0.02
  Rng rng(17);
  auto bytes = testutil::random_bytes(rng, 5000 * 25);
  auto archive = encode_file(bytes, 100);
  REQUIRE(archive.sequences.size() == 5000);
  auto reads = transmit_archive(archive, default_error_scheme(), 1, 97);
  size_t clean = 0;
  for (size_t i = 0; i < reads.size(); ++i)
    clean += (reads[i].read == archive.sequences[i]);
  double frac = static_cast<double>(clean) / static_cast<double>(reads.size());
  CHECK(frac == doctest::Approx(0.733).epsilon(0.0273));  // +-0.02 absolute
}

TEST_CASE("scale_scheme") {
  auto scheme = default_error_scheme();
  SUBCASE("factor 1 is the identity") {
    auto s = scale_scheme(scheme, 1.0);
    CHECK(s.total() == doctest::Approx(0.0031));
    CHECK(s.noise_factor == 1.0);
  }
  SUBCASE("factor 4 quadruples the effective total") {
    auto s = scale_scheme(scheme, 4.0);
    CHECK(s.total() == doctest::Approx(0.0124));
    CHECK(s.p_sub == scheme.p_sub);  // base probabilities unchanged
  }
  SUBCASE("factor 400 exceeds the total-rate bound") {
    CHECK_THROWS_AS(scale_scheme(scheme, 400.0), ConfigError);
  }
}
