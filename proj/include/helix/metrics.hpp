#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace helix {

// Levenshtein distance (unit-cost insertions, deletions, substitutions).
int64_t edit_distance(std::string_view a, std::string_view b);

// Positionwise mismatch count after truncating/padding both strings to
// length l with a non-alphabet sentinel.
int64_t hamming_l(std::string_view a, std::string_view b, int l);

struct EvalReport {
  size_t n = 0;
  int l = 0;
  double success_rate = 0.0;            // fraction with edit distance 0
  double mean_edit_error_rate = 0.0;    // sum(d_e) / (n*l)
  double mean_hamming_error_rate = 0.0; // sum(d_H^l) / (n*l)
  double std_edit_rate = 0.0;           // sample std of per-sequence d_e/l
  double std_hamming_rate = 0.0;        // sample std of per-sequence d_H/l
  std::vector<int64_t> edit_distances;  // per sequence
  // cumulative_histogram[e] = fraction of sequences with at most e edit
  // errors, e = 0..max observed; last entry is 1.
  std::vector<double> cumulative_histogram;
};

// pairs are (original, reconstructed).
EvalReport evaluate(
    const std::vector<std::pair<std::string, std::string>>& pairs, int l);

void write_report_json(const std::filesystem::path& path, const EvalReport& r,
                       const std::string& algorithm, int copies);
void write_histogram_csv(const std::filesystem::path& path,
                         const EvalReport& r);

}  // namespace helix
