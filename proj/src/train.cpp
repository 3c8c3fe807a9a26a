#include "helix/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <iostream>

#include <nlohmann/json.hpp>

#include "helix/errors.hpp"
#include "helix/rng.hpp"
#include "helix/tokenizer.hpp"
#include "helix/tsv.hpp"

namespace helix {

using json = nlohmann::ordered_json;
using Batch = Seq2SeqModel<float>::Batch;

namespace {

struct Sample {
  std::vector<int32_t> src;     // fixed encoder length
  std::vector<int32_t> tgt_in;  // CLS + first l/4 target tokens
  std::vector<int32_t> tgt_out; // l/4 target tokens + EOS
};

Sample make_sample(const TrainingPair& p, int l, int k) {
  Sample s;
  s.src = encode_input(p.noisy, l, k);
  auto target = encode_target(p.clean, l);
  s.tgt_in.reserve(target.size());
  s.tgt_in.push_back(Vocabulary::kCls);
  s.tgt_in.insert(s.tgt_in.end(), target.begin(), target.end() - 1);
  s.tgt_out = std::move(target);
  return s;
}

Batch make_batch(const std::vector<Sample>& samples,
                 const std::vector<size_t>& order, size_t begin, size_t end) {
  Batch b;
  b.nseq = static_cast<int>(end - begin);
  b.src_len = static_cast<int>(samples[order[begin]].src.size());
  b.tgt_len = static_cast<int>(samples[order[begin]].tgt_in.size());
  b.src_ids.reserve(static_cast<size_t>(b.nseq) * b.src_len);
  b.tgt_in.reserve(static_cast<size_t>(b.nseq) * b.tgt_len);
  b.tgt_out.reserve(static_cast<size_t>(b.nseq) * b.tgt_len);
  for (size_t i = begin; i < end; ++i) {
    const Sample& s = samples[order[i]];
    b.src_ids.insert(b.src_ids.end(), s.src.begin(), s.src.end());
    b.tgt_in.insert(b.tgt_in.end(), s.tgt_in.begin(), s.tgt_in.end());
    b.tgt_out.insert(b.tgt_out.end(), s.tgt_out.begin(), s.tgt_out.end());
  }
  return b;
}

class Adam {
 public:
  Adam(Seq2SeqModel<float>& model, const TrainHyper& h) : hyper_(h) {
    for (auto& p : model.parameters()) {
      m_.push_back(Eigen::MatrixXf::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(Eigen::MatrixXf::Zero(p.value->rows(), p.value->cols()));
    }
  }

  OptState state() const { return OptState{m_, v_}; }

  void step(std::vector<Seq2SeqModel<float>::ParamRef>& params, int64_t t) {
    const double warm = hyper_.warmup_steps > 0
                            ? std::min(1.0, static_cast<double>(t) /
                                                hyper_.warmup_steps)
                            : 1.0;
    const float lr = static_cast<float>(hyper_.learning_rate * warm);
    const float b1 = static_cast<float>(hyper_.adam_beta1);
    const float b2 = static_cast<float>(hyper_.adam_beta2);
    const float eps = static_cast<float>(hyper_.adam_eps);
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& g = *params[i].grad;
      m_[i] = b1 * m_[i] + (1.0f - b1) * g;
      v_[i] = (b2 * v_[i].array() + (1.0f - b2) * g.array().square()).matrix();
      auto mhat = m_[i].array() / bc1;
      auto vhat = v_[i].array() / bc2;
      params[i].value->array() -= lr * mhat / (vhat.sqrt() + eps);
    }
  }

 private:
  TrainHyper hyper_;
  std::vector<Eigen::MatrixXf> m_, v_;
};

double dataset_loss(Seq2SeqModel<float>& model,
                    const std::vector<Sample>& samples,
                    const std::vector<size_t>& idx, int batch_size) {
  if (idx.empty()) return 0.0;
  double total = 0.0;
  size_t tokens = 0;
  for (size_t begin = 0; begin < idx.size();
       begin += static_cast<size_t>(batch_size)) {
    size_t end = std::min(idx.size(), begin + static_cast<size_t>(batch_size));
    Batch b = make_batch(samples, idx, begin, end);
    size_t n = b.tgt_out.size();
    total += model.forward_loss(b) * static_cast<double>(n);
    tokens += n;
  }
  return total / static_cast<double>(tokens);
}

}  // namespace

TrainResult train_model(Seq2SeqModel<float>& model,
                        const std::vector<TrainingPair>& pairs,
                        const TrainHyper& hyper, int l, uint64_t seed) {
  if (pairs.empty()) throw PipelineError("train_model: empty corpus");
  if (hyper.batch_size < 1 || hyper.max_epochs < 1 || hyper.patience < 1)
    throw ConfigError("train: batch_size, max_epochs and patience must be >= 1");
  const int k = model.config().k;

  std::vector<Sample> samples;
  samples.reserve(pairs.size());
  for (const auto& p : pairs) samples.push_back(make_sample(p, l, k));

  // Split by hashed clean target so duplicated targets land on one side.
  std::vector<size_t> train_idx, val_idx;
  const auto val_cut =
      static_cast<uint64_t>(hyper.validation_fraction * 10000.0);
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (fnv1a64(pairs[i].clean) % 10000 < val_cut)
      val_idx.push_back(i);
    else
      train_idx.push_back(i);
  }
  if (train_idx.empty()) {
    train_idx = std::move(val_idx);
    val_idx.clear();
  }
  const bool has_val = !val_idx.empty();

  model.init_parameters(mix_seed(seed, 0x1A17));
  Adam opt(model, hyper);
  auto params = model.parameters();

  TrainResult result;
  result.state.seed = seed;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXf> best_params;
  int best_epoch = 0;
  int stale_epochs = 0;
  int64_t step = 0;

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(seed, 0x00EF, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(train_idx.begin(), train_idx.end());

    double train_total = 0.0;
    size_t train_tokens = 0;
    for (size_t begin = 0; begin < train_idx.size();
         begin += static_cast<size_t>(hyper.batch_size)) {
      size_t end = std::min(train_idx.size(),
                            begin + static_cast<size_t>(hyper.batch_size));
      Batch b = make_batch(samples, train_idx, begin, end);
      model.zero_grads();
      ++step;
      double loss = model.forward_backward(
          b, mix_seed(seed, 0xD807, static_cast<uint64_t>(step)));
      if (!std::isfinite(loss))
        throw TrainingDiverged("training loss is not finite at step " +
                               std::to_string(step));
      opt.step(params, step);
      train_total += loss * static_cast<double>(b.tgt_out.size());
      train_tokens += b.tgt_out.size();
    }
    double train_loss = train_total / static_cast<double>(train_tokens);
    double val_loss = has_val
                          ? dataset_loss(model, samples, val_idx, hyper.batch_size)
                          : train_loss;
    if (!std::isfinite(val_loss))
      throw TrainingDiverged("validation loss is not finite");
    result.history.push_back({epoch, train_loss, val_loss});

    if (val_loss < best - 1e-6) {
      best = val_loss;
      best_epoch = epoch;
      stale_epochs = 0;
      best_params.clear();
      for (auto& p : params) best_params.push_back(*p.value);
    } else if (++stale_epochs >= hyper.patience) {
      break;
    }
  }

  if (!best_params.empty())
    for (size_t i = 0; i < params.size(); ++i) *params[i].value = best_params[i];

  result.state.step = step;
  result.state.best_val_loss = best;
  result.best_epoch = best_epoch;
  result.opt = opt.state();
  return result;
}

const ClassModel& Ensemble::of(ReadClass c) const {
  switch (c) {
    case ReadClass::SL: return sl;
    case ReadClass::LL: return ll;
    case ReadClass::CLBC: return clbc;
    default: throw std::invalid_argument("ensemble has no CLGC model");
  }
}

Ensemble train_ensemble(const TrainingCorpus& corpus, const ModelConfig& cfg,
                        const TrainHyper& hyper, int l, uint64_t seed) {
  cfg.validate();
  auto train_class = [&](const std::vector<TrainingPair>& pairs,
                         const char* name, uint64_t class_seed) {
    ClassModel cm;
    if (pairs.empty()) {
      std::cerr << "warning: class " << name
                << " has no training pairs; using identity fallback\n";
      return cm;
    }
    cm.identity_fallback = false;
    cm.model = std::make_shared<Seq2SeqModel<float>>(cfg);
    cm.log = train_model(*cm.model, pairs, hyper, l, class_seed);
    return cm;
  };

  auto f_sl = std::async(std::launch::async, train_class,
                         std::cref(corpus.pairs_sl), "SL", mix_seed(seed, 1));
  auto f_ll = std::async(std::launch::async, train_class,
                         std::cref(corpus.pairs_ll), "LL", mix_seed(seed, 2));
  auto f_clbc = std::async(std::launch::async, train_class,
                           std::cref(corpus.pairs_clbc), "CLBC",
                           mix_seed(seed, 3));
  Ensemble e;
  e.sl = f_sl.get();
  e.ll = f_ll.get();
  e.clbc = f_clbc.get();
  return e;
}

// ------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[8] = {'H', 'E', 'L', 'I', 'X', 'C', 'K', '1'};
constexpr int kCheckpointVersion = 1;

json config_to_json(const ModelConfig& c) {
  json j;
  j["num_layers"] = c.num_layers;
  j["hidden_size"] = c.hidden_size;
  j["ffn_size"] = c.ffn_size;
  j["num_heads"] = c.num_heads;
  j["vocab_size"] = c.vocab_size;
  j["max_encoder_positions"] = c.max_encoder_positions;
  j["max_decoder_positions"] = c.max_decoder_positions;
  j["dropout_rate"] = c.dropout_rate;
  j["k"] = c.k;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.num_layers = j.at("num_layers").get<int>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.ffn_size = j.at("ffn_size").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_encoder_positions = j.at("max_encoder_positions").get<int>();
  c.max_decoder_positions = j.at("max_decoder_positions").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.k = j.at("k").get<int>();
  return c;
}

}  // namespace

namespace {

void write_tensor_rows(std::ofstream& out, const Eigen::MatrixXf& m) {
  std::vector<float> row(static_cast<size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row[static_cast<size_t>(c)] = m(r, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

void read_tensor_rows(std::ifstream& in, Eigen::MatrixXf& m) {
  std::vector<float> row(static_cast<size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = row[static_cast<size_t>(c)];
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     Seq2SeqModel<float>& model, const TrainState& state,
                     const OptState* opt, const std::string& vocab_ref,
                     const std::string& class_name) {
  auto params = model.parameters();
  if (opt && (opt->m.size() != params.size() || opt->v.size() != params.size()))
    throw std::invalid_argument("save_checkpoint: optimizer state mismatch");

  json header;
  header["format_version"] = kCheckpointVersion;
  header["kind"] = "model";
  header["class"] = class_name;
  header["config"] = config_to_json(model.config());
  header["vocab_file"] = vocab_ref;
  header["dtype"] = "float32";
  header["train_state"] = {{"step", state.step},
                           {"best_val_loss", state.best_val_loss},
                           {"seed", state.seed}};
  json tensors = json::array();
  uint64_t offset = 0;
  auto add_tensor = [&](const std::string& name, const Eigen::MatrixXf& m) {
    uint64_t bytes = static_cast<uint64_t>(m.size()) * sizeof(float);
    tensors.push_back({{"name", name},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"offset", offset},
                       {"bytes", bytes}});
    offset += bytes;
  };
  for (auto& p : params) add_tensor(p.name, *p.value);
  if (opt) {
    for (size_t i = 0; i < params.size(); ++i)
      add_tensor("adam_m." + params[i].name, opt->m[i]);
    for (size_t i = 0; i < params.size(); ++i)
      add_tensor("adam_v." + params[i].name, opt->v[i]);
  }
  header["tensors"] = tensors;

  std::string hs = header.dump();
  auto out = open_out(path);
  out.write(kMagic, sizeof(kMagic));
  uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (auto& p : params) write_tensor_rows(out, *p.value);
  if (opt) {
    for (const auto& m : opt->m) write_tensor_rows(out, m);
    for (const auto& v : opt->v) write_tensor_rows(out, v);
  }
}

void save_identity_checkpoint(const std::filesystem::path& path,
                              const std::string& class_name) {
  json header;
  header["format_version"] = kCheckpointVersion;
  header["kind"] = "identity";
  header["class"] = class_name;
  std::string hs = header.dump();
  auto out = open_out(path);
  out.write(kMagic, sizeof(kMagic));
  uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw ArtifactError("not a checkpoint file: " + path.string());
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  json header = json::parse(hs);

  LoadedCheckpoint lc;
  int version = header.at("format_version").get<int>();
  if (version != kCheckpointVersion)
    throw ArtifactError("unsupported checkpoint version " +
                        std::to_string(version));
  lc.class_name = header.value("class", "");
  if (header.at("kind") == "identity") {
    lc.identity_fallback = true;
    return lc;
  }

  lc.config = config_from_json(header.at("config"));
  lc.vocab_ref = header.value("vocab_file", "");
  lc.state.step = header.at("train_state").at("step").get<int64_t>();
  lc.state.best_val_loss =
      header.at("train_state").at("best_val_loss").get<double>();
  lc.state.seed = header.at("train_state").at("seed").get<uint64_t>();
  lc.model = std::make_shared<Seq2SeqModel<float>>(lc.config);

  auto params = lc.model->parameters();
  const auto& tensors = header.at("tensors");
  const bool has_opt = tensors.size() == params.size() * 3;
  if (!has_opt && tensors.size() != params.size())
    throw ArtifactError("checkpoint tensor count mismatch");

  auto check_and_read = [&](size_t ti, const std::string& expect_name,
                            Eigen::MatrixXf& dst) {
    const auto& t = tensors[ti];
    if (t.at("name").get<std::string>() != expect_name)
      throw ArtifactError("checkpoint tensor order mismatch at " + expect_name);
    auto rows = t.at("rows").get<Eigen::Index>();
    auto cols = t.at("cols").get<Eigen::Index>();
    if (dst.size() == 0) dst.resize(rows, cols);
    if (rows != dst.rows() || cols != dst.cols())
      throw ArtifactError("checkpoint tensor shape mismatch at " + expect_name);
    read_tensor_rows(in, dst);
  };

  for (size_t i = 0; i < params.size(); ++i)
    check_and_read(i, params[i].name, *params[i].value);
  if (has_opt) {
    lc.opt.m.resize(params.size());
    lc.opt.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i)
      check_and_read(params.size() + i, "adam_m." + params[i].name, lc.opt.m[i]);
    for (size_t i = 0; i < params.size(); ++i)
      check_and_read(2 * params.size() + i, "adam_v." + params[i].name,
                     lc.opt.v[i]);
  }
  if (!in) throw ArtifactError("checkpoint truncated: " + path.string());
  return lc;
}

}  // namespace helix
