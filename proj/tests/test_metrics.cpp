#include <doctest.h>

#include <cmath>

#include "helix/metrics.hpp"
#include "helix/rng.hpp"
#include "helix/tsv.hpp"

#include "testutil.hpp"

using namespace helix;

TEST_CASE("edit distance basics") {
  CHECK(edit_distance("ACGT", "ACGT") == 0);
  CHECK(edit_distance("ACGT", "AGT") == 1);
  CHECK(edit_distance("", "ACGT") == 4);
  CHECK(edit_distance("AAAA", "TTTT") == 4);
  CHECK(edit_distance("ACGT", "TGCA") == edit_distance("TGCA", "ACGT"));
}

TEST_CASE("edit distance equals the exhaustive-recursion oracle") {
  Rng rng(23);
  for (int iter = 0; iter < 10'000; ++iter) {
    auto a = testutil::random_dna(rng, rng.below(8));
    auto b = testutil::random_dna(rng, rng.below(8));
    CHECK(edit_distance(a, b) == testutil::edit_distance_oracle(a, b));
  }
}

TEST_CASE("edit distance metric properties") {
  Rng rng(29);
  for (int iter = 0; iter < 10'000; ++iter) {
    auto x = testutil::random_dna(rng, rng.below(12));
    auto y = testutil::random_dna(rng, rng.below(12));
    auto z = testutil::random_dna(rng, rng.below(12));
    auto dxy = edit_distance(x, y);
    auto dyx = edit_distance(y, x);
    CHECK(dxy == dyx);
    CHECK(dxy >= 0);
    if (x == y) CHECK(dxy == 0);
    if (dxy == 0) CHECK(x == y);
    CHECK(dxy <= edit_distance(x, z) + edit_distance(z, y));
  }
}

TEST_CASE("hamming_l with truncation and sentinel padding") {
  CHECK(hamming_l("AAAA", "AATA", 4) == 1);
  CHECK(hamming_l("AAAA", "AAA", 4) == 1);
  CHECK(hamming_l("AAAA", "AAAAT", 4) == 0);  // truncated to l
  Rng rng(31);
  for (int iter = 0; iter < 100; ++iter) {
    auto x = testutil::random_dna(rng, rng.below(30));
    CHECK(hamming_l(x, x, static_cast<int>(x.size())) == 0);
    CHECK(hamming_l(x, x, static_cast<int>(x.size()) + 5) == 0);
  }
}

TEST_CASE("edit bounded by hamming plus length accounting") {
  Rng rng(37);
  const int l = 20;
  for (int iter = 0; iter < 2000; ++iter) {
    auto x = testutil::random_dna(rng, rng.below(30));
    auto y = testutil::random_dna(rng, rng.below(30));
    int64_t lx = static_cast<int64_t>(x.size()), ly = static_cast<int64_t>(y.size());
    CHECK(edit_distance(x, y) <=
          hamming_l(x, y, l) + std::abs(lx - l) + std::abs(ly - l));
  }
}

TEST_CASE("evaluate aggregates") {
  SUBCASE("perfect reconstruction") {
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"ACGTACGT", "ACGTACGT"}, {"AAAAAAAA", "AAAAAAAA"}};
    auto r = evaluate(pairs, 8);
    CHECK(r.success_rate == 1.0);
    CHECK(r.mean_edit_error_rate == 0.0);
    CHECK(r.mean_hamming_error_rate == 0.0);
    CHECK(r.cumulative_histogram == std::vector<double>{1.0});
  }
  SUBCASE("two pairs with distances 0 and 2 at l=100") {
    std::string orig(100, 'A');
    std::string two_subs = orig;
    two_subs[10] = 'C';
    two_subs[90] = 'G';
    std::vector<std::pair<std::string, std::string>> pairs = {
        {orig, orig}, {orig, two_subs}};
    auto r = evaluate(pairs, 100);
    CHECK(r.success_rate == doctest::Approx(0.5));
    CHECK(r.mean_edit_error_rate == doctest::Approx(0.01));
    REQUIRE(r.cumulative_histogram.size() == 3);
    CHECK(r.cumulative_histogram[0] == doctest::Approx(0.5));
    CHECK(r.cumulative_histogram[1] == doctest::Approx(0.5));
    CHECK(r.cumulative_histogram[2] == doctest::Approx(1.0));
  }
  SUBCASE("histogram is nondecreasing and saturates at 1") {
    Rng rng(41);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int i = 0; i < 200; ++i)
      pairs.emplace_back(testutil::random_dna(rng, 20),
                         testutil::random_dna(rng, 18 + rng.below(5)));
    auto r = evaluate(pairs, 20);
    for (size_t e = 1; e < r.cumulative_histogram.size(); ++e)
      CHECK(r.cumulative_histogram[e] >= r.cumulative_histogram[e - 1]);
    CHECK(r.cumulative_histogram.back() == doctest::Approx(1.0));
  }
}

TEST_CASE("report serialization") {
  testutil::TempDir dir("metrics");
  std::vector<std::pair<std::string, std::string>> pairs = {
      {"ACGTACGT", "ACGTACGT"}, {"ACGTACGT", "ACGAACGT"}};
  auto r = evaluate(pairs, 8);
  write_report_json(dir.path() / "report.json", r, "identity", 1);
  write_histogram_csv(dir.path() / "hist.csv", r);
  CHECK(std::filesystem::file_size(dir.path() / "report.json") > 0);
  auto lines = read_lines(dir.path() / "hist.csv");
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "edit_errors,cumulative_fraction");
}
