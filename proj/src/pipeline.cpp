#include "helix/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "helix/beam.hpp"
#include "helix/baselines.hpp"
#include "helix/digest.hpp"
#include "helix/errors.hpp"
#include "helix/rng.hpp"
#include "helix/tokenizer.hpp"
#include "helix/tsv.hpp"

namespace helix {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "helix 1.0.0";
constexpr int kRunFormatVersion = 1;

// Stage seed salts; all stage randomness derives from
// mix_seed(master_seed, salt).
constexpr uint64_t kSeedSimulate = 0x51;
constexpr uint64_t kSeedInject = 0x17;
constexpr uint64_t kSeedTrain = 0x7A;
constexpr uint64_t kSeedEvalSample = 0xE5;

json scheme_to_json(const ErrorScheme& s) {
  return json{{"p_del", s.p_del},
              {"p_ins", s.p_ins},
              {"p_sub", s.p_sub},
              {"noise_factor", s.noise_factor}};
}

ErrorScheme scheme_from_json(const json& j) {
  ErrorScheme s;
  s.p_del = j.at("p_del").get<double>();
  s.p_ins = j.at("p_ins").get<double>();
  s.p_sub = j.at("p_sub").get<double>();
  s.noise_factor = j.value("noise_factor", 1.0);
  return s;
}

json hyper_to_json(const TrainHyper& h) {
  return json{{"learning_rate", h.learning_rate},
              {"warmup_steps", h.warmup_steps},
              {"batch_size", h.batch_size},
              {"max_epochs", h.max_epochs},
              {"patience", h.patience},
              {"validation_fraction", h.validation_fraction}};
}

TrainHyper hyper_from_json(const json& j) {
  TrainHyper h;
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.warmup_steps = j.value("warmup_steps", h.warmup_steps);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.max_epochs = j.value("max_epochs", h.max_epochs);
  h.patience = j.value("patience", h.patience);
  h.validation_fraction = j.value("validation_fraction", h.validation_fraction);
  return h;
}

void require_artifact(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p))
    throw ArtifactError("missing artifact " + p.string() + "; run the '" +
                        stage + "' stage first");
}

// Stage manifest: relative paths and digests only, no timestamps, so that
// two runs with the same config and seed are digest-identical.
void write_stage_manifest(const RunPaths& run, const std::string& stage,
                          const json& params,
                          const std::vector<fs::path>& outputs) {
  json j;
  j["format_version"] = kRunFormatVersion;
  j["tool_version"] = kToolVersion;
  j["stage"] = stage;
  j["params"] = params;
  json outs = json::array();
  for (const auto& p : outputs) {
    outs.push_back({{"path", fs::relative(p, run.root).generic_string()},
                    {"sha256", sha256_file(p)}});
  }
  j["outputs"] = outs;
  auto out = open_out(run.stage_manifest(stage));
  out << j.dump(2) << '\n';
}

std::vector<uint64_t> read_eval_ids(const fs::path& path) {
  std::vector<uint64_t> ids;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    uint64_t id = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
    if (ec != std::errc())
      throw ArtifactError(path.string() + ": bad id: " + line);
    ids.push_back(id);
  }
  return ids;
}

// Evaluation ids are disjoint from the training corpus whenever the sample
// is a strict subset of the archive; sample size 0 means "evaluate all,
// exclude none".
bool disjoint_eval(const PipelineConfig& cfg, uint64_t n) {
  return cfg.evaluation_sample_size > 0 && cfg.evaluation_sample_size < n;
}

std::vector<uint64_t> compute_eval_ids(const PipelineConfig& cfg, uint64_t n) {
  std::vector<uint64_t> ids(n);
  for (uint64_t i = 0; i < n; ++i) ids[i] = i;
  if (!disjoint_eval(cfg, n)) {
    if (cfg.evaluation_sample_size >= n && cfg.evaluation_sample_size != 0)
      std::cerr << "warning: evaluation_sample_size >= sequence count; "
                   "evaluating all sequences without training exclusion\n";
    return ids;
  }
  Rng rng(mix_seed(cfg.master_seed, kSeedEvalSample));
  rng.shuffle(ids.begin(), ids.end());
  ids.resize(cfg.evaluation_sample_size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// reads.tsv holds `copies` reads per sequence, id-major copy-minor.
std::vector<std::vector<std::string>> group_reads(
    const std::vector<ReadRecord>& reads, uint64_t n) {
  std::vector<std::vector<std::string>> by_id(n);
  for (const auto& r : reads) {
    if (r.sequence_id >= n)
      throw ArtifactError("reads: sequence id out of range");
    by_id[r.sequence_id].push_back(r.read);
  }
  return by_id;
}

std::vector<ReadRecord> first_reads(const std::vector<ReadRecord>& reads,
                                    uint64_t n) {
  std::vector<ReadRecord> firsts;
  firsts.reserve(n);
  std::vector<bool> seen(n, false);
  for (const auto& r : reads) {
    if (r.sequence_id >= n)
      throw ArtifactError("reads: sequence id out of range");
    if (!seen[r.sequence_id]) {
      seen[r.sequence_id] = true;
      firsts.push_back(r);
    }
  }
  return firsts;
}

Ensemble load_ensemble(const RunPaths& run) {
  Ensemble e;
  auto load_one = [&](const std::string& cls) {
    auto path = run.checkpoint(cls);
    require_artifact(path, "train");
    auto lc = load_checkpoint(path);
    ClassModel cm;
    cm.identity_fallback = lc.identity_fallback;
    cm.model = lc.model;
    return cm;
  };
  e.sl = load_one("sl");
  e.ll = load_one("ll");
  e.clbc = load_one("clbc");
  return e;
}

}  // namespace

// ------------------------------------------------------------------ config

void PipelineConfig::validate() const {
  if (l <= 0 || l % 4 != 0)
    throw ConfigError("config: l must be a positive multiple of 4");
  if (k != 4) throw ConfigError("config: the 261-token vocabulary requires k=4");
  channel.validate();
  injection.validate();
  if (copies < 1) throw ConfigError("config: copies must be >= 1");
  if (t < 1) throw ConfigError("config: t must be >= 1");
  if (beam_size < 1) throw ConfigError("config: beam_size must be >= 1");
  if (decode_threads < 1) throw ConfigError("config: decode_threads must be >= 1");
  if (training.batch_size < 1 || training.max_epochs < 1 ||
      training.patience < 1)
    throw ConfigError("config: training knobs must be >= 1");
  if (training.validation_fraction < 0 || training.validation_fraction >= 1)
    throw ConfigError("config: validation_fraction must be in [0, 1)");
  ModelConfig::preset(model_preset, l, k);  // throws on unknown preset
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  PipelineConfig c;
  try {
    c.input_file = j.value("input_file", std::string{});
    c.l = j.value("l", 100);
    c.k = j.value("k", 4);
    c.channel = j.contains("channel") ? scheme_from_json(j.at("channel"))
                                      : default_error_scheme();
    c.injection = j.contains("injection") ? scheme_from_json(j.at("injection"))
                                          : c.channel;
    c.copies = j.value("copies", 3);
    c.t = j.value("t", 4);
    c.model_preset = j.value("model_preset", std::string("desk"));
    if (j.contains("training")) c.training = hyper_from_json(j.at("training"));
    c.beam_size = j.value("beam_size", 5);
    if (!j.contains("master_seed"))
      throw ConfigError("config: master_seed is required (explicit seeding)");
    c.master_seed = j.at("master_seed").get<uint64_t>();
    c.output_dir = j.value("output_dir", std::string{});
    c.evaluation_sample_size = j.value("evaluation_sample_size", uint64_t{5000});
    c.decode_threads = j.value("decode_threads", 2);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void PipelineConfig::save(const fs::path& path) const {
  json j;
  j["input_file"] = input_file.generic_string();
  j["l"] = l;
  j["k"] = k;
  j["channel"] = scheme_to_json(channel);
  j["injection"] = scheme_to_json(injection);
  j["copies"] = copies;
  j["t"] = t;
  j["model_preset"] = model_preset;
  j["training"] = hyper_to_json(training);
  j["beam_size"] = beam_size;
  j["master_seed"] = master_seed;
  j["output_dir"] = output_dir.generic_string();
  j["evaluation_sample_size"] = evaluation_sample_size;
  j["decode_threads"] = decode_threads;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

// ------------------------------------------------------------------ stages

void cmd_encode(const PipelineConfig& cfg, const RunPaths& run) {
  cfg.validate();
  if (cfg.input_file.empty()) throw ConfigError("config: input_file is required");
  if (!fs::exists(cfg.input_file))
    throw ArtifactError("input file not found: " + cfg.input_file.string());
  auto bytes = read_file_bytes(cfg.input_file);
  auto archive = encode_file(bytes, cfg.l);
  archive.manifest.k = cfg.k;
  write_sequences_tsv(run.sequences(), archive.sequences);
  write_manifest_json(run.manifest(), archive.manifest);
  write_stage_manifest(run, "encode",
                       json{{"input_file", cfg.input_file.filename().string()},
                            {"input_sha256", sha256_file(cfg.input_file)},
                            {"l", cfg.l}},
                       {run.sequences(), run.manifest()});
}

void cmd_simulate(const PipelineConfig& cfg, const RunPaths& run) {
  cfg.validate();
  require_artifact(run.sequences(), "encode");
  require_artifact(run.manifest(), "encode");
  StoredArchive archive;
  archive.manifest = read_manifest_json(run.manifest());
  archive.sequences = read_sequences_tsv(run.sequences());
  auto reads = transmit_archive(archive, cfg.channel, cfg.copies,
                                mix_seed(cfg.master_seed, kSeedSimulate));
  write_reads_tsv(run.reads(), reads);
  write_stage_manifest(run, "simulate",
                       json{{"channel", scheme_to_json(cfg.channel)},
                            {"copies", cfg.copies},
                            {"master_seed", cfg.master_seed}},
                       {run.reads()});
}

void cmd_classify(const PipelineConfig& cfg, const RunPaths& run) {
  cfg.validate();
  require_artifact(run.reads(), "simulate");
  require_artifact(run.manifest(), "encode");
  auto manifest = read_manifest_json(run.manifest());
  auto reads = read_reads_tsv(run.reads());
  auto singles = first_reads(reads, manifest.sequence_count);
  auto partition = classify(singles, manifest.l, manifest.used());
  write_partition_tsv(run.partition(), partition);

  auto eval_ids = compute_eval_ids(cfg, manifest.sequence_count);
  {
    auto out = open_out(run.eval_sample());
    for (uint64_t id : eval_ids) out << id << '\n';
  }
  write_stage_manifest(
      run, "classify",
      json{{"l", manifest.l},
           {"evaluation_sample_size", cfg.evaluation_sample_size},
           {"disjoint_eval", disjoint_eval(cfg, manifest.sequence_count)},
           {"class_sizes",
            {{"SL", partition.sl.size()},
             {"LL", partition.ll.size()},
             {"CLGC", partition.clgc.size()},
             {"CLBC", partition.clbc.size()}}}},
      {run.partition(), run.eval_sample()});
}

void cmd_gen_train(const PipelineConfig& cfg, const RunPaths& run) {
  cfg.validate();
  require_artifact(run.partition(), "classify");
  require_artifact(run.eval_sample(), "classify");
  require_artifact(run.manifest(), "encode");
  auto manifest = read_manifest_json(run.manifest());
  auto partition = read_partition_tsv(run.partition());

  std::vector<ReadRecord> cleans = partition.clgc;
  if (disjoint_eval(cfg, manifest.sequence_count)) {
    auto eval_ids = read_eval_ids(run.eval_sample());
    std::set<uint64_t> held(eval_ids.begin(), eval_ids.end());
    std::erase_if(cleans,
                  [&](const ReadRecord& r) { return held.count(r.sequence_id); });
  }
  auto corpus = inject_noise(cleans, cfg.injection, cfg.t,
                             mix_seed(cfg.master_seed, kSeedInject), manifest.l,
                             manifest.used());
  write_corpus_tsv(run.corpus(), corpus);
  write_stage_manifest(run, "gen_train",
                       json{{"injection", scheme_to_json(cfg.injection)},
                            {"t", cfg.t},
                            {"clean_reads", cleans.size()},
                            {"pairs",
                             {{"SL", corpus.pairs_sl.size()},
                              {"LL", corpus.pairs_ll.size()},
                              {"CLBC", corpus.pairs_clbc.size()}}}},
                       {run.corpus()});
}

void cmd_train(const PipelineConfig& cfg, const RunPaths& run) {
  cfg.validate();
  require_artifact(run.corpus(), "gen_train");
  auto corpus = read_corpus_tsv(run.corpus());
  auto model_cfg = ModelConfig::preset(cfg.model_preset, cfg.l, cfg.k);
  auto ensemble = train_ensemble(corpus, model_cfg, cfg.training, cfg.l,
                                 mix_seed(cfg.master_seed, kSeedTrain));
  Vocabulary::dump(run.vocab());

  json log;
  auto save_class = [&](ClassModel& cm, const std::string& cls) {
    auto path = run.checkpoint(cls);
    if (cm.identity_fallback) {
      save_identity_checkpoint(path, cls);
      log[cls] = {{"identity_fallback", true}};
      return;
    }
    save_checkpoint(path, *cm.model, cm.log.state, &cm.log.opt, "vocab.txt", cls);
    json hist = json::array();
    for (const auto& e : cm.log.history)
      hist.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss}});
    log[cls] = {{"identity_fallback", false},
                {"best_epoch", cm.log.best_epoch},
                {"best_val_loss", cm.log.state.best_val_loss},
                {"steps", cm.log.state.step},
                {"history", hist}};
  };
  save_class(ensemble.sl, "sl");
  save_class(ensemble.ll, "ll");
  save_class(ensemble.clbc, "clbc");
  {
    auto out = open_out(run.train_log());
    out << log.dump(2) << '\n';
  }
  write_stage_manifest(run, "train",
                       json{{"model_preset", cfg.model_preset},
                            {"training", hyper_to_json(cfg.training)},
                            {"master_seed", cfg.master_seed}},
                       {run.vocab(), run.checkpoint("sl"), run.checkpoint("ll"),
                        run.checkpoint("clbc"), run.train_log()});
}

void cmd_reconstruct(const PipelineConfig& cfg, const RunPaths& run,
                     ReconScope scope) {
  cfg.validate();
  require_artifact(run.partition(), "classify");
  require_artifact(run.manifest(), "encode");
  auto manifest = read_manifest_json(run.manifest());
  auto partition = read_partition_tsv(run.partition());

  if (scope == ReconScope::Eval &&
      disjoint_eval(cfg, manifest.sequence_count)) {
    require_artifact(run.eval_sample(), "classify");
    auto eval_ids = read_eval_ids(run.eval_sample());
    std::set<uint64_t> keep(eval_ids.begin(), eval_ids.end());
    auto filter = [&](std::vector<ReadRecord>& v) {
      std::erase_if(v,
                    [&](const ReadRecord& r) { return !keep.count(r.sequence_id); });
    };
    filter(partition.sl);
    filter(partition.ll);
    filter(partition.clgc);
    filter(partition.clbc);
  }

  auto ensemble = load_ensemble(run);
  auto recon = reconstruct_all(partition, ensemble, manifest.used(),
                               cfg.beam_size, manifest.l, cfg.decode_threads);
  write_reads_tsv(run.recon(), recon);
  write_stage_manifest(run, "reconstruct",
                       json{{"scope", scope == ReconScope::All ? "all" : "eval"},
                            {"beam_size", cfg.beam_size},
                            {"sequences", recon.size()}},
                       {run.recon()});
}

void cmd_decode(const PipelineConfig& cfg, const RunPaths& run) {
  cfg.validate();
  require_artifact(run.recon(), "reconstruct");
  require_artifact(run.manifest(), "encode");
  auto manifest = read_manifest_json(run.manifest());
  auto recon = read_reads_tsv(run.recon());
  if (recon.size() != manifest.sequence_count)
    throw ArtifactError(
        "decode: reconstruction covers " + std::to_string(recon.size()) +
        " of " + std::to_string(manifest.sequence_count) +
        " sequences; rerun 'reconstruct' with scope=all");
  std::vector<std::string> seqs(manifest.sequence_count);
  std::vector<bool> present(manifest.sequence_count, false);
  for (auto& r : recon) {
    if (r.sequence_id >= manifest.sequence_count || present[r.sequence_id])
      throw ArtifactError("decode: reconstruction ids must cover 0..n-1 once");
    present[r.sequence_id] = true;
    seqs[r.sequence_id] = std::move(r.read);
  }
  auto result = decode_archive(seqs, manifest);
  write_file_bytes(run.decoded(), result.bytes);
  bool match = "sha256:" + sha256_hex(result.bytes) == manifest.file_digest;

  json report;
  report["digest_match"] = match;
  report["decoded_bytes"] = result.bytes.size();
  report["issues"] = result.issues.size();
  {
    auto out = open_out(run.decode_report());
    out << report.dump(2) << '\n';
  }
  write_stage_manifest(run, "decode", json{{"digest_match", match}},
                       {run.decoded(), run.decode_report()});
}

EvalReport cmd_evaluate(const PipelineConfig& cfg, const RunPaths& run,
                        const std::string& algorithm, int copies) {
  cfg.validate();
  require_artifact(run.sequences(), "encode");
  require_artifact(run.manifest(), "encode");
  auto manifest = read_manifest_json(run.manifest());
  auto originals = read_sequences_tsv(run.sequences());

  std::vector<uint64_t> eval_ids;
  if (fs::exists(run.eval_sample())) {
    eval_ids = read_eval_ids(run.eval_sample());
  } else {
    eval_ids.resize(manifest.sequence_count);
    for (uint64_t i = 0; i < eval_ids.size(); ++i) eval_ids[i] = i;
  }

  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(eval_ids.size());
  std::string name = algorithm;

  if (algorithm == "identity" || algorithm == "bma") {
    require_artifact(run.reads(), "simulate");
    auto by_id = group_reads(read_reads_tsv(run.reads()), manifest.sequence_count);
    if (algorithm == "identity") copies = 1;
    if (copies < 1) throw ConfigError("evaluate: copies must be >= 1");
    for (uint64_t id : eval_ids) {
      if (by_id[id].size() < static_cast<size_t>(copies))
        throw ArtifactError(
            "evaluate: reads hold " + std::to_string(by_id[id].size()) +
            " copies; rerun 'simulate' with copies >= " + std::to_string(copies));
      ReadCluster cluster{id, {by_id[id].begin(), by_id[id].begin() + copies}};
      std::string recon = algorithm == "identity"
                              ? identity_reconstruct(cluster)
                              : bma_reconstruct(cluster, manifest.l).sequence;
      pairs.emplace_back(originals[id], std::move(recon));
    }
    if (algorithm == "bma") name = "bma_t" + std::to_string(copies);
  } else if (algorithm == "srr") {
    require_artifact(run.recon(), "reconstruct");
    copies = 1;
    auto recon = read_reads_tsv(run.recon());
    std::vector<std::string> by_id(manifest.sequence_count);
    std::vector<bool> present(manifest.sequence_count, false);
    for (auto& r : recon) {
      present[r.sequence_id] = true;
      by_id[r.sequence_id] = std::move(r.read);
    }
    for (uint64_t id : eval_ids) {
      if (!present[id])
        throw ArtifactError(
            "evaluate: reconstruction does not cover sequence " +
            std::to_string(id) + "; rerun 'reconstruct'");
      pairs.emplace_back(originals[id], by_id[id]);
    }
  } else {
    throw ConfigError("evaluate: unknown algorithm '" + algorithm +
                      "' (identity|bma|srr)");
  }

  auto report = evaluate(pairs, manifest.l);
  write_report_json(run.report(name), report, algorithm, copies);
  write_histogram_csv(run.histogram(name), report);
  write_stage_manifest(run, "evaluate_" + name,
                       json{{"algorithm", algorithm},
                            {"copies", copies},
                            {"n", report.n},
                            {"success_rate", report.success_rate},
                            {"mean_edit_error_rate", report.mean_edit_error_rate},
                            {"mean_hamming_error_rate",
                             report.mean_hamming_error_rate}},
                       {run.report(name), run.histogram(name)});
  return report;
}

void cmd_run(const PipelineConfig& cfg, const RunPaths& run) {
  cmd_encode(cfg, run);
  cmd_simulate(cfg, run);
  cmd_classify(cfg, run);
  cmd_gen_train(cfg, run);
  cmd_train(cfg, run);
  cmd_reconstruct(cfg, run, ReconScope::All);
  cmd_decode(cfg, run);
  cmd_evaluate(cfg, run, "identity", 1);
  cmd_evaluate(cfg, run, "srr", 1);
}

std::vector<SweepRow> cmd_sweep(const PipelineConfig& cfg, const RunPaths& run,
                                const std::vector<double>& factors) {
  cfg.validate();
  if (factors.empty()) throw ConfigError("sweep: no factors given");
  if (cfg.copies < 3)
    throw ConfigError("sweep: copies must be >= 3 for the bma baselines");

  std::vector<SweepRow> rows;
  for (size_t fi = 0; fi < factors.size(); ++fi) {
    double factor = factors[fi];
    PipelineConfig sub = cfg;
    sub.channel = scale_scheme(cfg.channel, factor);  // injection unchanged
    char label[32];
    std::snprintf(label, sizeof(label), "%g", factor);
    RunPaths sub_run{run.root / "sweep" / (std::string("factor_") + label)};

    cmd_encode(sub, sub_run);
    cmd_simulate(sub, sub_run);
    cmd_classify(sub, sub_run);
    cmd_gen_train(sub, sub_run);
    cmd_train(sub, sub_run);
    cmd_reconstruct(sub, sub_run, ReconScope::Eval);

    auto rep_id = cmd_evaluate(sub, sub_run, "identity", 1);
    auto rep_b2 = cmd_evaluate(sub, sub_run, "bma", 2);
    auto rep_b3 = cmd_evaluate(sub, sub_run, "bma", 3);
    auto rep_srr = cmd_evaluate(sub, sub_run, "srr", 1);

    auto norm = [&](double e) {
      if (rep_id.mean_edit_error_rate > 0) return e / rep_id.mean_edit_error_rate;
      return e == 0 ? 1.0 : std::numeric_limits<double>::infinity();
    };
    auto add = [&](const std::string& alg, int t, const EvalReport& r) {
      rows.push_back({factor, alg, t, r.success_rate, r.mean_edit_error_rate,
                      r.mean_hamming_error_rate, norm(r.mean_edit_error_rate)});
    };
    add("identity", 1, rep_id);
    add("bma", 2, rep_b2);
    add("bma", 3, rep_b3);
    add("srr", 1, rep_srr);
  }

  {
    auto out = open_out(run.sweep_csv());
    out << "factor,algorithm,t,S,E,H,E_normalized\n";
    for (const auto& r : rows)
      out << r.factor << ',' << r.algorithm << ',' << r.t << ',' << r.success
          << ',' << r.edit << ',' << r.hamming << ',' << r.edit_normalized
          << '\n';
  }
  json params;
  params["factors"] = factors;
  write_stage_manifest(run, "sweep", params, {run.sweep_csv()});
  return rows;
}

}  // namespace helix
