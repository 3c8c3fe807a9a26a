#include "helix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "helix/tsv.hpp"

namespace helix {

using json = nlohmann::ordered_json;

int64_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);  // keep the DP row short
  const size_t m = b.size();
  std::vector<int64_t> row(m + 1);
  for (size_t j = 0; j <= m; ++j) row[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    int64_t diag = row[0];
    row[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= m; ++j) {
      int64_t sub = diag + (a[i - 1] != b[j - 1]);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
    }
  }
  return row[m];
}

int64_t hamming_l(std::string_view a, std::string_view b, int l) {
  if (l < 0) throw std::invalid_argument("hamming_l: negative l");
  constexpr char kSentinel = '\x01';
  int64_t d = 0;
  for (int i = 0; i < l; ++i) {
    char ca = i < static_cast<int>(a.size()) ? a[i] : kSentinel;
    char cb = i < static_cast<int>(b.size()) ? b[i] : kSentinel;
    d += (ca != cb);
  }
  return d;
}

EvalReport evaluate(
    const std::vector<std::pair<std::string, std::string>>& pairs, int l) {
  if (pairs.empty()) throw std::invalid_argument("evaluate: no pairs");
  EvalReport r;
  r.n = pairs.size();
  r.l = l;
  r.edit_distances.reserve(pairs.size());

  int64_t edit_sum = 0, ham_sum = 0, successes = 0;
  std::vector<double> edit_rates, ham_rates;
  edit_rates.reserve(pairs.size());
  ham_rates.reserve(pairs.size());
  int64_t max_edit = 0;
  for (const auto& [orig, recon] : pairs) {
    int64_t de = edit_distance(orig, recon);
    int64_t dh = hamming_l(orig, recon, l);
    r.edit_distances.push_back(de);
    edit_sum += de;
    ham_sum += dh;
    successes += (de == 0);
    edit_rates.push_back(static_cast<double>(de) / l);
    ham_rates.push_back(static_cast<double>(dh) / l);
    max_edit = std::max(max_edit, de);
  }

  const double n = static_cast<double>(r.n);
  r.success_rate = static_cast<double>(successes) / n;
  r.mean_edit_error_rate = static_cast<double>(edit_sum) / (n * l);
  r.mean_hamming_error_rate = static_cast<double>(ham_sum) / (n * l);

  auto sample_std = [n](const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (n - 1));
  };
  r.std_edit_rate = sample_std(edit_rates, r.mean_edit_error_rate);
  r.std_hamming_rate = sample_std(ham_rates, r.mean_hamming_error_rate);

  std::vector<int64_t> counts(static_cast<size_t>(max_edit) + 1, 0);
  for (int64_t de : r.edit_distances) counts[static_cast<size_t>(de)]++;
  r.cumulative_histogram.resize(counts.size());
  int64_t running = 0;
  for (size_t e = 0; e < counts.size(); ++e) {
    running += counts[e];
    r.cumulative_histogram[e] = static_cast<double>(running) / n;
  }
  return r;
}

void write_report_json(const std::filesystem::path& path, const EvalReport& r,
                       const std::string& algorithm, int copies) {
  json j;
  j["algorithm"] = algorithm;
  j["copies"] = copies;
  j["n"] = r.n;
  j["l"] = r.l;
  j["success_rate"] = r.success_rate;
  j["mean_edit_error_rate"] = r.mean_edit_error_rate;
  j["mean_hamming_error_rate"] = r.mean_hamming_error_rate;
  j["std_edit_rate"] = r.std_edit_rate;
  j["std_hamming_rate"] = r.std_hamming_rate;
  j["edit_distances"] = r.edit_distances;
  j["cumulative_histogram"] = r.cumulative_histogram;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_histogram_csv(const std::filesystem::path& path,
                         const EvalReport& r) {
  auto out = open_out(path);
  out << "edit_errors,cumulative_fraction\n";
  for (size_t e = 0; e < r.cumulative_histogram.size(); ++e) {
    out << e << ',' << r.cumulative_histogram[e] << '\n';
  }
}

}  // namespace helix
