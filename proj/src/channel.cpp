#include "helix/channel.hpp"

#include <charconv>

#include "helix/dna.hpp"
#include "helix/errors.hpp"
#include "helix/rng.hpp"
#include "helix/tsv.hpp"

namespace helix {

void ErrorScheme::validate() const {
  if (p_del < 0 || p_ins < 0 || p_sub < 0)
    throw ConfigError("error scheme: probabilities must be nonnegative");
  if (noise_factor <= 0)
    throw ConfigError("error scheme: noise_factor must be positive");
  if (total() >= 1.0)
    throw ConfigError("error scheme: total per-base rate must be < 1, got " +
                      std::to_string(total()));
}

ErrorScheme default_error_scheme() {
  return ErrorScheme{0.0010, 0.0005, 0.0016, 1.0};
}

std::string transmit(std::string_view seq, const ErrorScheme& scheme,
                     uint64_t seed) {
  scheme.validate();
  require_dna(seq, "transmit");

  const double f = scheme.noise_factor;
  const double pi = f * scheme.p_ins;
  const double pd = f * scheme.p_del;
  const double ps = f * scheme.p_sub;

  Rng rng(seed);
  std::string out;
  out.reserve(seq.size() + 4);
  for (char c : seq) {
    if (pi > 0 && rng.uniform() < pi) out.push_back(kBases[rng.below(4)]);
    if (pd > 0 && rng.uniform() < pd) continue;
    if (ps > 0 && rng.uniform() < ps) {
      int cur = base_index(c);
      out.push_back(kBases[(cur + 1 + static_cast<int>(rng.below(3))) & 3]);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<ReadRecord> transmit_archive(const StoredArchive& archive,
                                         const ErrorScheme& scheme, int copies,
                                         uint64_t master_seed) {
  if (copies < 1) throw ConfigError("transmit_archive: copies must be >= 1");
  scheme.validate();
  std::vector<ReadRecord> reads;
  reads.reserve(archive.sequences.size() * static_cast<size_t>(copies));
  for (uint64_t id = 0; id < archive.sequences.size(); ++id) {
    for (int copy = 0; copy < copies; ++copy) {
      uint64_t seed = mix_seed(master_seed, id, static_cast<uint64_t>(copy));
      reads.push_back({id, transmit(archive.sequences[id], scheme, seed)});
    }
  }
  return reads;
}

ErrorScheme scale_scheme(const ErrorScheme& scheme, double factor) {
  if (factor <= 0) throw ConfigError("scale_scheme: factor must be positive");
  ErrorScheme s = scheme;
  s.noise_factor *= factor;
  s.validate();
  return s;
}

void write_reads_tsv(const std::filesystem::path& path,
                     const std::vector<ReadRecord>& reads) {
  auto out = open_out(path);
  for (const auto& r : reads) out << r.sequence_id << '\t' << r.read << '\n';
}

std::vector<ReadRecord> read_reads_tsv(const std::filesystem::path& path) {
  std::vector<ReadRecord> reads;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;  // a fully deleted read still has its id+tab
    auto fields = split_tsv(line);
    if (fields.size() != 2)
      throw ArtifactError(path.string() + ": malformed record: " + line);
    uint64_t id = 0;
    auto [p, ec] = std::from_chars(fields[0].data(),
                                   fields[0].data() + fields[0].size(), id);
    if (ec != std::errc())
      throw ArtifactError(path.string() + ": bad sequence id: " + fields[0]);
    reads.push_back({id, fields[1]});
  }
  return reads;
}

}  // namespace helix
