#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "helix/codec.hpp"

namespace helix {

// Per-base deletion/insertion/substitution probabilities with a scalar
// noise-factor multiplier applied to all three.
struct ErrorScheme {
  double p_del = 0.0;
  double p_ins = 0.0;
  double p_sub = 0.0;
  double noise_factor = 1.0;

  double total() const { return noise_factor * (p_del + p_ins + p_sub); }
  void validate() const;  // throws ConfigError when rates are out of range
};

// Default scheme calibrated against standard synthesis/sequencing conditions
// (per-base total 0.0031).
ErrorScheme default_error_scheme();

// One pass of a sequence through the DIS channel. Per input position,
// independently: a uniformly random base is inserted before it with
// probability f*p_ins, the base is deleted with probability f*p_del,
// otherwise it is substituted by a uniformly random different base with
// probability f*p_sub (f = noise_factor). Deterministic for a fixed seed.
std::string transmit(std::string_view seq, const ErrorScheme& scheme,
                     uint64_t seed);

struct ReadRecord {
  uint64_t sequence_id = 0;
  std::string read;
};

// `copies` reads per sequence; the read for (sequence_id, copy) is produced
// with seed mix_seed(master_seed, sequence_id, copy). Output is ordered by
// sequence id, then copy index.
std::vector<ReadRecord> transmit_archive(const StoredArchive& archive,
                                         const ErrorScheme& scheme, int copies,
                                         uint64_t master_seed);

// Returns the scheme with noise_factor multiplied by `factor`; base
// probabilities unchanged. Throws ConfigError when the scaled total rate
// leaves [0, 1).
ErrorScheme scale_scheme(const ErrorScheme& scheme, double factor);

void write_reads_tsv(const std::filesystem::path& path,
                     const std::vector<ReadRecord>& reads);
std::vector<ReadRecord> read_reads_tsv(const std::filesystem::path& path);

}  // namespace helix
