#include "helix/partition.hpp"

#include <charconv>

#include "helix/errors.hpp"
#include "helix/rng.hpp"
#include "helix/tsv.hpp"

namespace helix {

const char* read_class_name(ReadClass c) {
  switch (c) {
    case ReadClass::SL: return "SL";
    case ReadClass::LL: return "LL";
    case ReadClass::CLGC: return "CLGC";
    case ReadClass::CLBC: return "CLBC";
  }
  return "?";
}

ReadClass read_class_from_name(const std::string& name) {
  if (name == "SL") return ReadClass::SL;
  if (name == "LL") return ReadClass::LL;
  if (name == "CLGC") return ReadClass::CLGC;
  if (name == "CLBC") return ReadClass::CLBC;
  throw ArtifactError("unknown read class: " + name);
}

ReadClass classify_read(const std::string& read, int l, const UsedSet& used) {
  if (read.size() < static_cast<size_t>(l)) return ReadClass::SL;
  if (read.size() > static_cast<size_t>(l)) return ReadClass::LL;
  for (size_t i = 0; i + 4 <= read.size(); i += 4) {
    if (!used.contains(std::string_view(read).substr(i, 4)))
      return ReadClass::CLBC;
  }
  return ReadClass::CLGC;
}

const std::vector<ReadRecord>& ReadPartition::of(ReadClass c) const {
  switch (c) {
    case ReadClass::SL: return sl;
    case ReadClass::LL: return ll;
    case ReadClass::CLGC: return clgc;
    case ReadClass::CLBC: return clbc;
  }
  return sl;
}

ReadPartition classify(const std::vector<ReadRecord>& reads, int l,
                       const UsedSet& used) {
  if (used.count() == 0) throw ConfigError("classify: used_set is empty");
  ReadPartition p;
  for (const auto& r : reads) {
    switch (classify_read(r.read, l, used)) {
      case ReadClass::SL: p.sl.push_back(r); break;
      case ReadClass::LL: p.ll.push_back(r); break;
      case ReadClass::CLGC: p.clgc.push_back(r); break;
      case ReadClass::CLBC: p.clbc.push_back(r); break;
    }
  }
  return p;
}

TrainingCorpus inject_noise(const std::vector<ReadRecord>& clgc_reads,
                            const ErrorScheme& scheme, int t, uint64_t seed,
                            int l, const UsedSet& used) {
  if (clgc_reads.empty())
    throw PipelineError(
        "inject_noise: no clean (CLGC) reads available; cannot build a "
        "self-supervised training corpus");
  if (t < 1) throw ConfigError("inject_noise: t must be >= 1");
  scheme.validate();

  TrainingCorpus corpus;
  for (size_t i = 0; i < clgc_reads.size(); ++i) {
    const std::string& clean = clgc_reads[i].read;
    for (int copy = 0; copy < t; ++copy) {
      uint64_t s = mix_seed(seed, i, static_cast<uint64_t>(copy));
      std::string noisy = transmit(clean, scheme, s);
      switch (classify_read(noisy, l, used)) {
        case ReadClass::CLGC: break;  // probably error-free; discard
        case ReadClass::SL:
          corpus.pairs_sl.push_back({std::move(noisy), clean});
          break;
        case ReadClass::LL:
          corpus.pairs_ll.push_back({std::move(noisy), clean});
          break;
        case ReadClass::CLBC:
          corpus.pairs_clbc.push_back({std::move(noisy), clean});
          break;
      }
    }
  }
  return corpus;
}

void write_partition_tsv(const std::filesystem::path& path,
                         const ReadPartition& p) {
  auto out = open_out(path);
  auto dump = [&](ReadClass c, const std::vector<ReadRecord>& reads) {
    for (const auto& r : reads)
      out << read_class_name(c) << '\t' << r.sequence_id << '\t' << r.read
          << '\n';
  };
  dump(ReadClass::SL, p.sl);
  dump(ReadClass::LL, p.ll);
  dump(ReadClass::CLGC, p.clgc);
  dump(ReadClass::CLBC, p.clbc);
}

ReadPartition read_partition_tsv(const std::filesystem::path& path) {
  ReadPartition p;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() != 3)
      throw ArtifactError(path.string() + ": malformed record: " + line);
    uint64_t id = 0;
    auto [ptr, ec] = std::from_chars(fields[1].data(),
                                     fields[1].data() + fields[1].size(), id);
    if (ec != std::errc())
      throw ArtifactError(path.string() + ": bad sequence id: " + fields[1]);
    ReadRecord rec{id, fields[2]};
    switch (read_class_from_name(fields[0])) {
      case ReadClass::SL: p.sl.push_back(std::move(rec)); break;
      case ReadClass::LL: p.ll.push_back(std::move(rec)); break;
      case ReadClass::CLGC: p.clgc.push_back(std::move(rec)); break;
      case ReadClass::CLBC: p.clbc.push_back(std::move(rec)); break;
    }
  }
  return p;
}

void write_corpus_tsv(const std::filesystem::path& path,
                      const TrainingCorpus& c) {
  auto out = open_out(path);
  auto dump = [&](const char* cls, const std::vector<TrainingPair>& pairs) {
    for (const auto& p : pairs)
      out << cls << '\t' << p.noisy << '\t' << p.clean << '\n';
  };
  dump("SL", c.pairs_sl);
  dump("LL", c.pairs_ll);
  dump("CLBC", c.pairs_clbc);
}

TrainingCorpus read_corpus_tsv(const std::filesystem::path& path) {
  TrainingCorpus c;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() != 3)
      throw ArtifactError(path.string() + ": malformed record: " + line);
    TrainingPair pair{fields[1], fields[2]};
    ReadClass cls = read_class_from_name(fields[0]);
    if (cls == ReadClass::SL) c.pairs_sl.push_back(std::move(pair));
    else if (cls == ReadClass::LL) c.pairs_ll.push_back(std::move(pair));
    else if (cls == ReadClass::CLBC) c.pairs_clbc.push_back(std::move(pair));
    else throw ArtifactError(path.string() + ": CLGC pairs are not stored");
  }
  return c;
}

}  // namespace helix
