#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "helix/channel.hpp"
#include "helix/codec.hpp"

namespace helix {

enum class ReadClass { SL, LL, CLGC, CLBC };

const char* read_class_name(ReadClass c);
ReadClass read_class_from_name(const std::string& name);

// SL: length < l. LL: length > l. CLGC: length l with every aligned 4-gram
// codeword in the used set. CLBC: the remaining length-l reads.
ReadClass classify_read(const std::string& read, int l, const UsedSet& used);

struct ReadPartition {
  std::vector<ReadRecord> sl, ll, clgc, clbc;

  size_t total() const { return sl.size() + ll.size() + clgc.size() + clbc.size(); }
  const std::vector<ReadRecord>& of(ReadClass c) const;
};

ReadPartition classify(const std::vector<ReadRecord>& reads, int l,
                       const UsedSet& used);

struct TrainingPair {
  std::string noisy;
  std::string clean;  // a CLGC read (length l, valid codewords)
};

struct TrainingCorpus {
  std::vector<TrainingPair> pairs_sl, pairs_ll, pairs_clbc;

  size_t total() const {
    return pairs_sl.size() + pairs_ll.size() + pairs_clbc.size();
  }
};

// Produces t corrupted copies of every clean read through the DIS channel,
// re-classifies each copy, discards the copies that still classify as CLGC,
// and stores the rest as (noisy, clean) pairs in the matching class list.
// Throws PipelineError when clgc_reads is empty (cannot self-supervise).
TrainingCorpus inject_noise(const std::vector<ReadRecord>& clgc_reads,
                            const ErrorScheme& scheme, int t, uint64_t seed,
                            int l, const UsedSet& used);

// partition records: `<class><TAB><sequence_id><TAB><read>`
void write_partition_tsv(const std::filesystem::path& path,
                         const ReadPartition& p);
ReadPartition read_partition_tsv(const std::filesystem::path& path);

// corpus records: `<class><TAB><noisy><TAB><clean>`
void write_corpus_tsv(const std::filesystem::path& path,
                      const TrainingCorpus& c);
TrainingCorpus read_corpus_tsv(const std::filesystem::path& path);

}  // namespace helix
