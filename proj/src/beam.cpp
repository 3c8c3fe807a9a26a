#include "helix/beam.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "helix/errors.hpp"
#include "helix/metrics.hpp"
#include "helix/tokenizer.hpp"

namespace helix {

namespace {

// Stable log-softmax of one logits row restricted to the allowed ids.
std::vector<double> masked_log_probs(const Eigen::MatrixXf& logits, int row,
                                     const std::vector<int32_t>& ids) {
  float mx = logits.row(row).maxCoeff();
  double z = 0.0;
  for (int j = 0; j < logits.cols(); ++j)
    z += std::exp(static_cast<double>(logits(row, j)) - mx);
  double lz = std::log(z) + mx;
  std::vector<double> out(ids.size());
  for (size_t i = 0; i < ids.size(); ++i)
    out[i] = static_cast<double>(logits(row, ids[static_cast<size_t>(i)])) - lz;
  return out;
}

}  // namespace

std::vector<BeamCandidate> beam_search_constrained(
    const StepFn& step, int steps, const std::vector<int32_t>& allowed_tokens,
    int beam_size) {
  if (beam_size < 1) throw ConfigError("beam search: beam size must be >= 1");
  if (allowed_tokens.empty())
    throw ConfigError("beam search: no allowed tokens");

  struct Beam {
    std::vector<int32_t> prefix;  // starts with CLS
    double log_prob = 0.0;
  };
  std::vector<Beam> beams(1);
  beams[0].prefix = {Vocabulary::kCls};

  for (int s = 0; s < steps; ++s) {
    std::vector<std::vector<int32_t>> prefixes;
    prefixes.reserve(beams.size());
    for (const auto& b : beams) prefixes.push_back(b.prefix);
    Eigen::MatrixXf logits = step(prefixes);

    struct Ext {
      size_t parent;
      int32_t token;
      double score;
    };
    std::vector<Ext> exts;
    exts.reserve(beams.size() * allowed_tokens.size());
    for (size_t bi = 0; bi < beams.size(); ++bi) {
      auto lps = masked_log_probs(logits, static_cast<int>(bi), allowed_tokens);
      for (size_t ti = 0; ti < allowed_tokens.size(); ++ti)
        exts.push_back({bi, allowed_tokens[ti], beams[bi].log_prob + lps[ti]});
    }
    size_t keep = std::min(static_cast<size_t>(beam_size), exts.size());
    std::partial_sort(exts.begin(), exts.begin() + static_cast<long>(keep),
                      exts.end(), [](const Ext& a, const Ext& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Beam> next;
    next.reserve(keep);
    for (size_t i = 0; i < keep; ++i) {
      Beam nb;
      nb.prefix = beams[exts[i].parent].prefix;
      nb.prefix.push_back(exts[i].token);
      nb.log_prob = exts[i].score;
      next.push_back(std::move(nb));
    }
    beams = std::move(next);
  }

  // Force EOS and account for its probability.
  std::vector<std::vector<int32_t>> prefixes;
  prefixes.reserve(beams.size());
  for (const auto& b : beams) prefixes.push_back(b.prefix);
  Eigen::MatrixXf logits = step(prefixes);
  const std::vector<int32_t> eos_only{Vocabulary::kEos};

  std::vector<BeamCandidate> done;
  done.reserve(beams.size());
  for (size_t bi = 0; bi < beams.size(); ++bi) {
    auto lp = masked_log_probs(logits, static_cast<int>(bi), eos_only);
    BeamCandidate c;
    c.tokens.assign(beams[bi].prefix.begin() + 1, beams[bi].prefix.end());
    c.log_prob = beams[bi].log_prob + lp[0];
    done.push_back(std::move(c));
  }
  std::sort(done.begin(), done.end(),
            [](const BeamCandidate& a, const BeamCandidate& b) {
              if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
              return a.tokens < b.tokens;
            });
  return done;
}

std::string constrained_decode(const Seq2SeqModel<float>& model,
                               const std::string& read, const UsedSet& used,
                               int beam_size, int l) {
  if (used.count() == 0) throw ConfigError("constrained_decode: empty used_set");
  if (l <= 0 || l % 4 != 0)
    throw ConfigError("constrained_decode: l must be a positive multiple of 4");

  std::vector<int32_t> allowed;
  allowed.reserve(used.count());
  for (int v = 0; v < 256; ++v)
    if (used.contains_value(v)) allowed.push_back(Vocabulary::kFirstKmer + v);

  auto src = encode_input(read, l, model.config().k);
  typename Seq2SeqModel<float>::DecodeSession session(model, src);
  StepFn step = [&](const std::vector<std::vector<int32_t>>& prefixes) {
    return session.last_logits(prefixes);
  };

  auto candidates = beam_search_constrained(step, l / 4, allowed, beam_size);

  const BeamCandidate* best = nullptr;
  std::string best_seq;
  int64_t best_d = 0;
  for (const auto& c : candidates) {
    std::string seq = decode_output(c.tokens);
    int64_t d = edit_distance(seq, read);
    bool better = false;
    if (!best) better = true;
    else if (d != best_d) better = d < best_d;
    else if (c.log_prob != best->log_prob) better = c.log_prob > best->log_prob;
    else better = seq < best_seq;
    if (better) {
      best = &c;
      best_seq = std::move(seq);
      best_d = d;
    }
  }
  return best_seq;
}

std::string snap_to_valid(const std::string& read, int l, const UsedSet& used) {
  std::string out = read.substr(0, std::min(read.size(), static_cast<size_t>(l)));
  out.resize(static_cast<size_t>(l), 'A');
  for (size_t i = 0; i + 4 <= out.size(); i += 4) {
    std::string_view cw(out.data() + i, 4);
    if (!used.contains(cw)) {
      std::string repl = nearest_used_codeword(cw, used);
      out.replace(i, 4, repl);
    }
  }
  return out;
}

std::vector<ReadRecord> reconstruct_all(const ReadPartition& partition,
                                        const Ensemble& ensemble,
                                        const UsedSet& used, int beam_size,
                                        int l, int threads) {
  struct Job {
    const ReadRecord* read;
    const ClassModel* cm;
  };
  std::vector<Job> jobs;
  std::vector<ReadRecord> out;
  out.reserve(partition.total());

  for (const auto& r : partition.clgc) out.push_back(r);  // identity path
  for (ReadClass c : {ReadClass::SL, ReadClass::LL, ReadClass::CLBC})
    for (const auto& r : partition.of(c)) jobs.push_back({&r, &ensemble.of(c)});

  std::vector<ReadRecord> decoded(jobs.size());
  auto work = [&](size_t i) {
    const auto& [read, cm] = jobs[i];
    std::string seq =
        cm->identity_fallback
            ? snap_to_valid(read->read, l, used)
            : constrained_decode(*cm->model, read->read, used, beam_size, l);
    decoded[i] = {read->sequence_id, std::move(seq)};
  };

  if (threads <= 1 || jobs.size() < 2) {
    for (size_t i = 0; i < jobs.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    auto runner = [&] {
      for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1))
        work(i);
    };
    std::vector<std::thread> pool;
    int nt = std::min<int>(threads, static_cast<int>(jobs.size()));
    pool.reserve(static_cast<size_t>(nt));
    for (int t = 0; t < nt; ++t) pool.emplace_back(runner);
    for (auto& t : pool) t.join();
  }

  out.insert(out.end(), std::make_move_iterator(decoded.begin()),
             std::make_move_iterator(decoded.end()));
  std::stable_sort(out.begin(), out.end(),
                   [](const ReadRecord& a, const ReadRecord& b) {
                     return a.sequence_id < b.sequence_id;
                   });
  return out;
}

}  // namespace helix
