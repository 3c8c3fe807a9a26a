#include "helix/model.hpp"

#include <cmath>
#include <stdexcept>

#include "helix/errors.hpp"
#include "helix/rng.hpp"
#include "helix/tokenizer.hpp"

namespace helix {

void ModelConfig::validate() const {
  if (num_layers < 0) throw ConfigError("model: num_layers must be >= 0");
  if (hidden_size <= 0 || ffn_size <= 0)
    throw ConfigError("model: hidden_size and ffn_size must be positive");
  if (num_heads <= 0 || hidden_size % num_heads != 0)
    throw ConfigError("model: hidden_size must be divisible by num_heads");
  if (vocab_size != Vocabulary::kSize)
    throw ConfigError("model: vocab_size must be 261");
  if (max_encoder_positions <= 0 || max_decoder_positions <= 0)
    throw ConfigError("model: position limits must be positive");
  if (dropout_rate < 0 || dropout_rate >= 1)
    throw ConfigError("model: dropout_rate must be in [0, 1)");
}

ModelConfig ModelConfig::preset(const std::string& name, int l, int k) {
  ModelConfig c;
  c.k = k;
  c.max_encoder_positions = encoder_length(l, k);
  c.max_decoder_positions = l / 4 + 1;
  if (name == "desk") {
    c.num_layers = 4;
    c.hidden_size = 128;
    c.ffn_size = 512;
    c.num_heads = 4;
    c.dropout_rate = 0.1;
  } else if (name == "paper") {
    c.num_layers = 12;
    c.hidden_size = 768;
    c.ffn_size = 3072;
    c.num_heads = 12;
    c.dropout_rate = 0.1;
  } else if (name == "micro") {
    c.num_layers = 1;
    c.hidden_size = 16;
    c.ffn_size = 32;
    c.num_heads = 2;
    c.dropout_rate = 0.0;
  } else {
    throw ConfigError("unknown model preset: " + name);
  }
  c.validate();
  return c;
}

namespace {

template <typename S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using ColT = Eigen::Array<S, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------- blocks

template <typename S>
struct LinearP {
  MatT<S> w, dw;  // [in, out]
  MatT<S> b, db;  // [1, out]

  void init(int in, int out, Rng& rng, double std) {
    w.resize(in, out);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = static_cast<S>(rng.normal() * std);
    b = MatT<S>::Zero(1, out);
    dw = MatT<S>::Zero(in, out);
    db = MatT<S>::Zero(1, out);
  }
};

template <typename S>
struct NormP {
  MatT<S> g, dg, b, db;  // [1, H]

  void init(int h) {
    g = MatT<S>::Ones(1, h);
    b = MatT<S>::Zero(1, h);
    dg = MatT<S>::Zero(1, h);
    db = MatT<S>::Zero(1, h);
  }
};

template <typename S>
struct AttnP {
  LinearP<S> q, k, v, o;
};

template <typename S>
struct EncLayerP {
  NormP<S> ln1;
  AttnP<S> attn;
  NormP<S> ln2;
  LinearP<S> f1, f2;
};

template <typename S>
struct DecLayerP {
  NormP<S> ln1;
  AttnP<S> self;
  NormP<S> ln2;
  AttnP<S> cross;
  NormP<S> ln3;
  LinearP<S> f1, f2;
};

// ---------------------------------------------------------------- ops

template <typename S>
MatT<S> linear_fwd(const LinearP<S>& p, const MatT<S>& x) {
  MatT<S> y = x * p.w;
  y.rowwise() += p.b.row(0);
  return y;
}

template <typename S>
MatT<S> linear_bwd(LinearP<S>& p, const MatT<S>& x, const MatT<S>& dy) {
  p.dw.noalias() += x.transpose() * dy;
  p.db.row(0) += dy.colwise().sum();
  return dy * p.w.transpose();
}

template <typename S>
struct NormCache {
  MatT<S> xhat;
  ColT<S> inv_std;
};

template <typename S>
MatT<S> norm_fwd(const NormP<S>& p, const MatT<S>& x, NormCache<S>* c) {
  const S eps = static_cast<S>(1e-5);
  ColT<S> mu = x.rowwise().mean().array();
  MatT<S> xhat = x;
  xhat.array().colwise() -= mu;
  ColT<S> var = xhat.array().square().rowwise().mean();
  ColT<S> inv_std = (var + eps).rsqrt();
  xhat.array().colwise() *= inv_std;
  MatT<S> y = (xhat.array().rowwise() * p.g.row(0).array()).matrix();
  y.array().rowwise() += p.b.row(0).array();
  if (c) {
    c->xhat = std::move(xhat);
    c->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename S>
MatT<S> norm_bwd(NormP<S>& p, const MatT<S>& dy, const NormCache<S>& c) {
  p.dg.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  p.db.row(0) += dy.colwise().sum();
  MatT<S> dxh = (dy.array().rowwise() * p.g.row(0).array()).matrix();
  ColT<S> m1 = dxh.rowwise().mean().array();
  ColT<S> m2 = (dxh.array() * c.xhat.array()).rowwise().mean();
  MatT<S> dx = (dxh.array() - c.xhat.array().colwise() * m2).matrix();
  dx.array().colwise() -= m1;
  dx.array().colwise() *= c.inv_std;
  return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename S>
MatT<S> gelu_fwd(const MatT<S>& x, MatT<S>* tanh_cache) {
  const S c = static_cast<S>(kGeluC), a = static_cast<S>(kGeluA);
  MatT<S> t = (c * (x.array() + a * x.array().cube())).tanh().matrix();
  MatT<S> y = (static_cast<S>(0.5) * x.array() * (S(1) + t.array())).matrix();
  if (tanh_cache) *tanh_cache = std::move(t);
  return y;
}

template <typename S>
MatT<S> gelu_bwd(const MatT<S>& dy, const MatT<S>& x, const MatT<S>& t) {
  const S c = static_cast<S>(kGeluC), a = static_cast<S>(kGeluA);
  auto xa = x.array();
  auto ta = t.array();
  auto slope = S(0.5) * (S(1) + ta) +
               S(0.5) * xa * (S(1) - ta.square()) * (c * (S(1) + S(3) * a * xa.square()));
  return (dy.array() * slope).matrix();
}

// Inverted dropout in place; mask entries are 0 or 1/keep.
template <typename S>
void dropout_inplace(MatT<S>& x, double rate, Rng& rng, MatT<S>* mask) {
  if (rate <= 0.0) {
    if (mask) mask->resize(0, 0);
    return;
  }
  const double keep = 1.0 - rate;
  const S inv = static_cast<S>(1.0 / keep);
  mask->resize(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      (*mask)(i, j) = rng.uniform() < keep ? inv : S(0);
  x.array() *= mask->array();
}

template <typename S>
struct AttnCache {
  MatT<S> q, k, v, ctx;
  std::vector<MatT<S>> probs;  // nseq*heads entries, each [Sq, Sk]
};

// Xq: [nseq*Sq, H]; Xkv: [nseq*Sk, H]; key_valid: nullptr or nseq*Sk flags.
template <typename S>
MatT<S> attn_fwd(const AttnP<S>& p, const MatT<S>& xq, const MatT<S>& xkv,
                 int nseq, int sq, int sk, int heads, const uint8_t* key_valid,
                 bool causal, AttnCache<S>* cache,
                 std::vector<MatT<S>>* probs_out = nullptr) {
  const int h_total = static_cast<int>(p.q.w.cols());
  const int dh = h_total / heads;
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

  MatT<S> q = linear_fwd(p.q, xq);
  MatT<S> k = linear_fwd(p.k, xkv);
  MatT<S> v = linear_fwd(p.v, xkv);
  MatT<S> ctx(xq.rows(), h_total);

  std::vector<MatT<S>> probs;
  if (cache || probs_out) probs.reserve(static_cast<size_t>(nseq) * heads);

  for (int i = 0; i < nseq; ++i) {
    for (int head = 0; head < heads; ++head) {
      auto qb = q.block(i * sq, head * dh, sq, dh);
      auto kb = k.block(i * sk, head * dh, sk, dh);
      MatT<S> scores = qb * kb.transpose() * scale;
      if (key_valid) {
        for (int j = 0; j < sk; ++j)
          if (!key_valid[i * sk + j])
            scores.col(j).setConstant(static_cast<S>(-1e30));
      }
      if (causal) {
        for (int r = 0; r < sq; ++r)
          for (int j = r + 1; j < sk; ++j) scores(r, j) = static_cast<S>(-1e30);
      }
      for (int r = 0; r < sq; ++r) {
        S mx = scores.row(r).maxCoeff();
        Eigen::Array<S, 1, Eigen::Dynamic> er =
            (scores.row(r).array() - mx).exp();
        scores.row(r) = (er / er.sum()).matrix();
      }
      ctx.block(i * sq, head * dh, sq, dh).noalias() =
          scores * v.block(i * sk, head * dh, sk, dh);
      if (cache || probs_out) probs.push_back(std::move(scores));
    }
  }

  MatT<S> out = linear_fwd(p.o, ctx);
  if (probs_out) *probs_out = probs;
  if (cache) {
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->ctx = std::move(ctx);
    cache->probs = std::move(probs);
  }
  return out;
}

// Returns dXq; accumulates dXkv into *dxkv (which must be pre-sized; for
// self-attention pass the same matrix that receives dXq additions later).
template <typename S>
MatT<S> attn_bwd(AttnP<S>& p, const MatT<S>& dout, const MatT<S>& xq,
                 const MatT<S>& xkv, const AttnCache<S>& c, int nseq, int sq,
                 int sk, int heads, MatT<S>& dxkv) {
  const int h_total = static_cast<int>(p.q.w.cols());
  const int dh = h_total / heads;
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

  MatT<S> dctx = linear_bwd(p.o, c.ctx, dout);
  MatT<S> dq = MatT<S>::Zero(xq.rows(), h_total);
  MatT<S> dk = MatT<S>::Zero(xkv.rows(), h_total);
  MatT<S> dv = MatT<S>::Zero(xkv.rows(), h_total);

  for (int i = 0; i < nseq; ++i) {
    for (int head = 0; head < heads; ++head) {
      const MatT<S>& probs = c.probs[static_cast<size_t>(i) * heads + head];
      auto dctx_b = dctx.block(i * sq, head * dh, sq, dh);
      auto vb = c.v.block(i * sk, head * dh, sk, dh);
      MatT<S> dp = dctx_b * vb.transpose();
      dv.block(i * sk, head * dh, sk, dh).noalias() +=
          probs.transpose() * dctx_b;
      ColT<S> rs = (dp.array() * probs.array()).rowwise().sum();
      MatT<S> ds = (probs.array() * (dp.array().colwise() - rs)).matrix();
      ds *= scale;
      auto qb = c.q.block(i * sq, head * dh, sq, dh);
      auto kb = c.k.block(i * sk, head * dh, sk, dh);
      dq.block(i * sq, head * dh, sq, dh).noalias() = ds * kb;
      dk.block(i * sk, head * dh, sk, dh).noalias() += ds.transpose() * qb;
    }
  }

  dxkv += linear_bwd(p.k, xkv, dk);
  dxkv += linear_bwd(p.v, xkv, dv);
  return linear_bwd(p.q, xq, dq);
}

}  // namespace

// ------------------------------------------------------------------- Impl

template <typename Scalar>
struct Seq2SeqModel<Scalar>::Impl {
  using Mat = MatT<Scalar>;

  ModelConfig cfg;

  Mat enc_tok_emb, d_enc_tok_emb;
  Mat enc_pos_emb, d_enc_pos_emb;
  std::vector<EncLayerP<Scalar>> enc_layers;
  NormP<Scalar> enc_ln_f;

  Mat dec_tok_emb, d_dec_tok_emb;
  Mat dec_pos_emb, d_dec_pos_emb;
  std::vector<DecLayerP<Scalar>> dec_layers;
  NormP<Scalar> dec_ln_f;

  LinearP<Scalar> out;

  explicit Impl(const ModelConfig& c) : cfg(c) {
    cfg.validate();
    const int h = cfg.hidden_size, f = cfg.ffn_size, v = cfg.vocab_size;
    auto zeros = [](int r, int cc) { return Mat::Zero(r, cc); };
    enc_tok_emb = zeros(v, h);
    d_enc_tok_emb = zeros(v, h);
    enc_pos_emb = zeros(cfg.max_encoder_positions, h);
    d_enc_pos_emb = zeros(cfg.max_encoder_positions, h);
    dec_tok_emb = zeros(v, h);
    d_dec_tok_emb = zeros(v, h);
    dec_pos_emb = zeros(cfg.max_decoder_positions, h);
    d_dec_pos_emb = zeros(cfg.max_decoder_positions, h);

    Rng dummy(0);
    enc_layers.resize(static_cast<size_t>(cfg.num_layers));
    dec_layers.resize(static_cast<size_t>(cfg.num_layers));
    for (auto& L : enc_layers) {
      L.ln1.init(h);
      L.attn.q.init(h, h, dummy, 0);
      L.attn.k.init(h, h, dummy, 0);
      L.attn.v.init(h, h, dummy, 0);
      L.attn.o.init(h, h, dummy, 0);
      L.ln2.init(h);
      L.f1.init(h, f, dummy, 0);
      L.f2.init(f, h, dummy, 0);
    }
    enc_ln_f.init(h);
    for (auto& L : dec_layers) {
      L.ln1.init(h);
      L.self.q.init(h, h, dummy, 0);
      L.self.k.init(h, h, dummy, 0);
      L.self.v.init(h, h, dummy, 0);
      L.self.o.init(h, h, dummy, 0);
      L.ln2.init(h);
      L.cross.q.init(h, h, dummy, 0);
      L.cross.k.init(h, h, dummy, 0);
      L.cross.v.init(h, h, dummy, 0);
      L.cross.o.init(h, h, dummy, 0);
      L.ln3.init(h);
      L.f1.init(h, f, dummy, 0);
      L.f2.init(f, h, dummy, 0);
    }
    dec_ln_f.init(h);
    out.init(h, v, dummy, 0);
  }

  void init_params(uint64_t seed) {
    Rng rng(mix_seed(seed, 0x5EED));
    const double std = 0.02;
    auto fill = [&](Mat& m) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          m(i, j) = static_cast<Scalar>(rng.normal() * std);
    };
    fill(enc_tok_emb);
    fill(enc_pos_emb);
    fill(dec_tok_emb);
    fill(dec_pos_emb);
    auto fill_attn = [&](AttnP<Scalar>& a) {
      fill(a.q.w);
      fill(a.k.w);
      fill(a.v.w);
      fill(a.o.w);
    };
    for (auto& L : enc_layers) {
      fill_attn(L.attn);
      fill(L.f1.w);
      fill(L.f2.w);
    }
    for (auto& L : dec_layers) {
      fill_attn(L.self);
      fill_attn(L.cross);
      fill(L.f1.w);
      fill(L.f2.w);
    }
    fill(out.w);
  }

  // ------------- embedding

  Mat embed(const Mat& tok_emb, const Mat& pos_emb,
            std::span<const int32_t> ids, std::span<const int32_t> positions,
            int nseq, int slen) const {
    Mat x(nseq * slen, cfg.hidden_size);
    for (int r = 0; r < nseq * slen; ++r) {
      int32_t id = ids[static_cast<size_t>(r)];
      int32_t pos = positions.empty() ? r % slen : positions[static_cast<size_t>(r)];
      if (id < 0 || id >= cfg.vocab_size)
        throw std::invalid_argument("token id out of range");
      if (pos < 0 || pos >= static_cast<int32_t>(pos_emb.rows()))
        throw std::invalid_argument("position " + std::to_string(pos) +
                                    " exceeds the model's position limit");
      x.row(r) = tok_emb.row(id) + pos_emb.row(pos);
    }
    return x;
  }

  // ------------- caches for one training step

  struct EncLayerWs {
    Mat h1, drop1;
    NormCache<Scalar> n1;
    AttnCache<Scalar> att;
    Mat h2, z1, t1, a1, drop2;
    NormCache<Scalar> n2;
  };
  struct DecLayerWs {
    Mat h1, drop1;
    NormCache<Scalar> n1;
    AttnCache<Scalar> self;
    Mat h2, drop2;
    NormCache<Scalar> n2;
    AttnCache<Scalar> cross;
    Mat h3, z1, t1, a1, drop3;
    NormCache<Scalar> n3;
  };
  struct Workspace {
    Mat enc_emb_drop, dec_emb_drop;
    std::vector<EncLayerWs> enc;
    std::vector<DecLayerWs> dec;
    Mat enc_x_last, dec_y_last;  // inputs to the final norms
    NormCache<Scalar> enc_nf, dec_nf;
    Mat enc_states, dec_states;
  };

  Mat encoder_pass(std::span<const int32_t> ids,
                   std::span<const int32_t> positions, int nseq, int slen,
                   const std::vector<uint8_t>& valid, double rate, Rng* drop_rng,
                   Workspace* ws,
                   std::vector<std::vector<Mat>>* attn_probs) const {
    Mat x = embed(enc_tok_emb, enc_pos_emb, ids, positions, nseq, slen);
    if (drop_rng) {
      Mat mask;
      dropout_inplace(x, rate, *drop_rng, &mask);
      if (ws) ws->enc_emb_drop = std::move(mask);
    }
    if (ws) ws->enc.resize(enc_layers.size());
    if (attn_probs) attn_probs->resize(enc_layers.size());

    for (size_t li = 0; li < enc_layers.size(); ++li) {
      const auto& L = enc_layers[li];
      EncLayerWs* lw = ws ? &ws->enc[li] : nullptr;
      NormCache<Scalar> n1_tmp, n2_tmp;
      Mat h1 = norm_fwd(L.ln1, x, lw ? &lw->n1 : &n1_tmp);
      std::vector<Mat> probs;
      Mat ao = attn_fwd(L.attn, h1, h1, nseq, slen, slen, cfg.num_heads,
                        valid.data(), false, lw ? &lw->att : nullptr,
                        attn_probs ? &probs : nullptr);
      if (attn_probs) (*attn_probs)[li] = std::move(probs);
      if (drop_rng) {
        Mat mask;
        dropout_inplace(ao, rate, *drop_rng, &mask);
        if (lw) lw->drop1 = std::move(mask);
      }
      x += ao;
      if (lw) lw->h1 = std::move(h1);
      Mat h2 = norm_fwd(L.ln2, x, lw ? &lw->n2 : &n2_tmp);
      Mat z1 = linear_fwd(L.f1, h2);
      Mat t1;
      Mat a1 = gelu_fwd(z1, &t1);
      Mat fo = linear_fwd(L.f2, a1);
      if (drop_rng) {
        Mat mask;
        dropout_inplace(fo, rate, *drop_rng, &mask);
        if (lw) lw->drop2 = std::move(mask);
      }
      x += fo;
      if (lw) {
        lw->h2 = std::move(h2);
        lw->z1 = std::move(z1);
        lw->t1 = std::move(t1);
        lw->a1 = std::move(a1);
      }
    }
    if (ws) ws->enc_x_last = x;
    NormCache<Scalar> nf_tmp;
    Mat states = norm_fwd(enc_ln_f, x, ws ? &ws->enc_nf : &nf_tmp);
    if (ws) ws->enc_states = states;
    return states;
  }

  Mat decoder_pass(std::span<const int32_t> prev_ids, int nseq, int tlen,
                   const Mat& enc_states, const std::vector<uint8_t>& enc_valid,
                   int enc_len, double rate, Rng* drop_rng, Workspace* ws) const {
    Mat y = embed(dec_tok_emb, dec_pos_emb, prev_ids, {}, nseq, tlen);
    if (drop_rng) {
      Mat mask;
      dropout_inplace(y, rate, *drop_rng, &mask);
      if (ws) ws->dec_emb_drop = std::move(mask);
    }
    if (ws) ws->dec.resize(dec_layers.size());

    for (size_t li = 0; li < dec_layers.size(); ++li) {
      const auto& L = dec_layers[li];
      DecLayerWs* lw = ws ? &ws->dec[li] : nullptr;
      NormCache<Scalar> tmp;
      Mat h1 = norm_fwd(L.ln1, y, lw ? &lw->n1 : &tmp);
      Mat ao = attn_fwd(L.self, h1, h1, nseq, tlen, tlen, cfg.num_heads,
                        nullptr, true, lw ? &lw->self : nullptr);
      if (drop_rng) {
        Mat mask;
        dropout_inplace(ao, rate, *drop_rng, &mask);
        if (lw) lw->drop1 = std::move(mask);
      }
      y += ao;
      if (lw) lw->h1 = std::move(h1);
      Mat h2 = norm_fwd(L.ln2, y, lw ? &lw->n2 : &tmp);
      Mat co = attn_fwd(L.cross, h2, enc_states, nseq, tlen, enc_len,
                        cfg.num_heads, enc_valid.data(), false,
                        lw ? &lw->cross : nullptr);
      if (drop_rng) {
        Mat mask;
        dropout_inplace(co, rate, *drop_rng, &mask);
        if (lw) lw->drop2 = std::move(mask);
      }
      y += co;
      if (lw) lw->h2 = std::move(h2);
      Mat h3 = norm_fwd(L.ln3, y, lw ? &lw->n3 : &tmp);
      Mat z1 = linear_fwd(L.f1, h3);
      Mat t1;
      Mat a1 = gelu_fwd(z1, &t1);
      Mat fo = linear_fwd(L.f2, a1);
      if (drop_rng) {
        Mat mask;
        dropout_inplace(fo, rate, *drop_rng, &mask);
        if (lw) lw->drop3 = std::move(mask);
      }
      y += fo;
      if (lw) {
        lw->h3 = std::move(h3);
        lw->z1 = std::move(z1);
        lw->t1 = std::move(t1);
        lw->a1 = std::move(a1);
      }
    }
    if (ws) ws->dec_y_last = y;
    NormCache<Scalar> nf_tmp;
    Mat states = norm_fwd(dec_ln_f, y, ws ? &ws->dec_nf : &nf_tmp);
    if (ws) ws->dec_states = states;
    return states;
  }

  static void apply_dropout_mask_bwd(Mat& d, const Mat& mask) {
    if (mask.size() > 0) d.array() *= mask.array();
  }

  // Cross-entropy over counted rows; fills dlogits when requested.
  static double xent(const Mat& logits, std::span<const int32_t> targets,
                     Mat* dlogits) {
    int counted = 0;
    for (int32_t t : targets) counted += (t != Vocabulary::kPad);
    if (counted == 0) throw std::invalid_argument("loss: no counted tokens");
    if (dlogits) dlogits->setZero(logits.rows(), logits.cols());

    double loss = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      int32_t t = targets[static_cast<size_t>(r)];
      if (t == Vocabulary::kPad) continue;
      Scalar mx = logits.row(r).maxCoeff();
      Eigen::Array<Scalar, 1, Eigen::Dynamic> e =
          (logits.row(r).array() - mx).exp();
      Scalar z = e.sum();
      loss += -(static_cast<double>(logits(r, t)) - static_cast<double>(mx) -
                std::log(static_cast<double>(z)));
      if (dlogits) {
        dlogits->row(r) = (e / z).matrix() / static_cast<Scalar>(counted);
        (*dlogits)(r, t) -= Scalar(1) / static_cast<Scalar>(counted);
      }
    }
    return loss / counted;
  }

  double forward_backward(const Batch& b, uint64_t dropout_seed) {
    const double rate = cfg.dropout_rate;
    Rng drop_rng(mix_seed(dropout_seed, 0xD50));
    Workspace ws;

    std::vector<uint8_t> src_valid(b.src_ids.size());
    for (size_t i = 0; i < b.src_ids.size(); ++i)
      src_valid[i] = b.src_ids[i] != Vocabulary::kPad;

    Mat enc_states =
        encoder_pass(b.src_ids, {}, b.nseq, b.src_len, src_valid, rate,
                     rate > 0 ? &drop_rng : nullptr, &ws, nullptr);
    decoder_pass(b.tgt_in, b.nseq, b.tgt_len, enc_states, src_valid, b.src_len,
                 rate, rate > 0 ? &drop_rng : nullptr, &ws);

    Mat logits = linear_fwd(out, ws.dec_states);
    Mat dlogits;
    double loss = xent(logits, b.tgt_out, &dlogits);

    // ---- backward
    Mat d_dec_states = linear_bwd(out, ws.dec_states, dlogits);
    Mat dy = norm_bwd(dec_ln_f, d_dec_states, ws.dec_nf);
    Mat d_enc_states = Mat::Zero(enc_states.rows(), enc_states.cols());

    for (size_t li = dec_layers.size(); li-- > 0;) {
      auto& L = dec_layers[li];
      auto& lw = ws.dec[li];
      // ffn sublayer
      Mat d_fo = dy;
      apply_dropout_mask_bwd(d_fo, lw.drop3);
      Mat d_a1 = linear_bwd(L.f2, lw.a1, d_fo);
      Mat d_z1 = gelu_bwd(d_a1, lw.z1, lw.t1);
      Mat d_h3 = linear_bwd(L.f1, lw.h3, d_z1);
      dy += norm_bwd(L.ln3, d_h3, lw.n3);
      // cross-attention sublayer
      Mat d_co = dy;
      apply_dropout_mask_bwd(d_co, lw.drop2);
      Mat d_h2 = attn_bwd(L.cross, d_co, lw.h2, ws.enc_states, lw.cross,
                          b.nseq, b.tgt_len, b.src_len, cfg.num_heads,
                          d_enc_states);
      dy += norm_bwd(L.ln2, d_h2, lw.n2);
      // self-attention sublayer
      Mat d_ao = dy;
      apply_dropout_mask_bwd(d_ao, lw.drop1);
      Mat d_h1_kv = Mat::Zero(dy.rows(), dy.cols());
      Mat d_h1 = attn_bwd(L.self, d_ao, lw.h1, lw.h1, lw.self, b.nseq,
                          b.tgt_len, b.tgt_len, cfg.num_heads, d_h1_kv);
      d_h1 += d_h1_kv;
      dy += norm_bwd(L.ln1, d_h1, lw.n1);
    }
    apply_dropout_mask_bwd(dy, ws.dec_emb_drop);
    for (int r = 0; r < b.nseq * b.tgt_len; ++r) {
      d_dec_tok_emb.row(b.tgt_in[static_cast<size_t>(r)]) += dy.row(r);
      d_dec_pos_emb.row(r % b.tgt_len) += dy.row(r);
    }

    // encoder backward
    Mat dx = norm_bwd(enc_ln_f, d_enc_states, ws.enc_nf);
    for (size_t li = enc_layers.size(); li-- > 0;) {
      auto& L = enc_layers[li];
      auto& lw = ws.enc[li];
      Mat d_fo = dx;
      apply_dropout_mask_bwd(d_fo, lw.drop2);
      Mat d_a1 = linear_bwd(L.f2, lw.a1, d_fo);
      Mat d_z1 = gelu_bwd(d_a1, lw.z1, lw.t1);
      Mat d_h2 = linear_bwd(L.f1, lw.h2, d_z1);
      dx += norm_bwd(L.ln2, d_h2, lw.n2);
      Mat d_ao = dx;
      apply_dropout_mask_bwd(d_ao, lw.drop1);
      Mat d_h1_kv = Mat::Zero(dx.rows(), dx.cols());
      Mat d_h1 = attn_bwd(L.attn, d_ao, lw.h1, lw.h1, lw.att, b.nseq,
                          b.src_len, b.src_len, cfg.num_heads, d_h1_kv);
      d_h1 += d_h1_kv;
      dx += norm_bwd(L.ln1, d_h1, lw.n1);
    }
    apply_dropout_mask_bwd(dx, ws.enc_emb_drop);
    for (int r = 0; r < b.nseq * b.src_len; ++r) {
      d_enc_tok_emb.row(b.src_ids[static_cast<size_t>(r)]) += dx.row(r);
      d_enc_pos_emb.row(r % b.src_len) += dx.row(r);
    }
    return loss;
  }

  double forward_loss(const Batch& b) const {
    std::vector<uint8_t> src_valid(b.src_ids.size());
    for (size_t i = 0; i < b.src_ids.size(); ++i)
      src_valid[i] = b.src_ids[i] != Vocabulary::kPad;
    Mat enc_states = encoder_pass(b.src_ids, {}, b.nseq, b.src_len, src_valid,
                                  0.0, nullptr, nullptr, nullptr);
    Mat dec_states = decoder_pass(b.tgt_in, b.nseq, b.tgt_len, enc_states,
                                  src_valid, b.src_len, 0.0, nullptr, nullptr);
    Mat logits = linear_fwd(out, dec_states);
    return xent(logits, b.tgt_out, nullptr);
  }
};

// ----------------------------------------------------------------- facade

template <typename Scalar>
Seq2SeqModel<Scalar>::Seq2SeqModel(const ModelConfig& cfg)
    : cfg_(cfg), impl_(std::make_unique<Impl>(cfg)) {}

template <typename Scalar>
Seq2SeqModel<Scalar>::~Seq2SeqModel() = default;

template <typename Scalar>
void Seq2SeqModel<Scalar>::init_parameters(uint64_t seed) {
  impl_->init_params(seed);
}

template <typename Scalar>
std::vector<typename Seq2SeqModel<Scalar>::ParamRef>
Seq2SeqModel<Scalar>::parameters() {
  std::vector<ParamRef> ps;
  auto add = [&](const std::string& name, Mat& v, Mat& g) {
    ps.push_back({name, &v, &g});
  };
  auto add_linear = [&](const std::string& name, LinearP<Scalar>& p) {
    add(name + ".w", p.w, p.dw);
    add(name + ".b", p.b, p.db);
  };
  auto add_norm = [&](const std::string& name, NormP<Scalar>& p) {
    add(name + ".g", p.g, p.dg);
    add(name + ".b", p.b, p.db);
  };
  auto add_attn = [&](const std::string& name, AttnP<Scalar>& p) {
    add_linear(name + ".q", p.q);
    add_linear(name + ".k", p.k);
    add_linear(name + ".v", p.v);
    add_linear(name + ".o", p.o);
  };

  add("enc.tok_emb", impl_->enc_tok_emb, impl_->d_enc_tok_emb);
  add("enc.pos_emb", impl_->enc_pos_emb, impl_->d_enc_pos_emb);
  for (size_t i = 0; i < impl_->enc_layers.size(); ++i) {
    auto& L = impl_->enc_layers[i];
    std::string base = "enc.l" + std::to_string(i);
    add_norm(base + ".ln1", L.ln1);
    add_attn(base + ".attn", L.attn);
    add_norm(base + ".ln2", L.ln2);
    add_linear(base + ".f1", L.f1);
    add_linear(base + ".f2", L.f2);
  }
  add_norm("enc.ln_f", impl_->enc_ln_f);

  add("dec.tok_emb", impl_->dec_tok_emb, impl_->d_dec_tok_emb);
  add("dec.pos_emb", impl_->dec_pos_emb, impl_->d_dec_pos_emb);
  for (size_t i = 0; i < impl_->dec_layers.size(); ++i) {
    auto& L = impl_->dec_layers[i];
    std::string base = "dec.l" + std::to_string(i);
    add_norm(base + ".ln1", L.ln1);
    add_attn(base + ".self", L.self);
    add_norm(base + ".ln2", L.ln2);
    add_attn(base + ".cross", L.cross);
    add_norm(base + ".ln3", L.ln3);
    add_linear(base + ".f1", L.f1);
    add_linear(base + ".f2", L.f2);
  }
  add_norm("dec.ln_f", impl_->dec_ln_f);
  add_linear("out", impl_->out);
  return ps;
}

template <typename Scalar>
int64_t Seq2SeqModel<Scalar>::parameter_count() const {
  int64_t n = 0;
  for (auto& p : const_cast<Seq2SeqModel*>(this)->parameters())
    n += static_cast<int64_t>(p.value->size());
  return n;
}

template <typename Scalar>
double Seq2SeqModel<Scalar>::forward_backward(const Batch& batch,
                                              uint64_t dropout_seed) {
  return impl_->forward_backward(batch, dropout_seed);
}

template <typename Scalar>
double Seq2SeqModel<Scalar>::forward_loss(const Batch& batch) const {
  return impl_->forward_loss(batch);
}

template <typename Scalar>
void Seq2SeqModel<Scalar>::zero_grads() {
  for (auto& p : parameters()) p.grad->setZero();
}

template <typename Scalar>
typename Seq2SeqModel<Scalar>::Mat Seq2SeqModel<Scalar>::encoder_forward(
    std::span<const int32_t> ids, std::span<const int32_t> positions) const {
  return encoder_forward(ids, positions, nullptr);
}

template <typename Scalar>
typename Seq2SeqModel<Scalar>::Mat Seq2SeqModel<Scalar>::encoder_forward(
    std::span<const int32_t> ids, std::span<const int32_t> positions,
    EncoderTrace* trace) const {
  std::vector<uint8_t> valid(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) valid[i] = ids[i] != Vocabulary::kPad;
  std::vector<std::vector<Mat>> probs;
  Mat states = impl_->encoder_pass(ids, positions, 1, static_cast<int>(ids.size()),
                                   valid, 0.0, nullptr, nullptr,
                                   trace ? &probs : nullptr);
  if (trace) trace->attn = std::move(probs);
  return states;
}

template <typename Scalar>
typename Seq2SeqModel<Scalar>::Mat Seq2SeqModel<Scalar>::decoder_forward(
    std::span<const int32_t> prev_ids, const Mat& enc_states,
    std::span<const uint8_t> enc_valid) const {
  std::vector<uint8_t> valid(enc_valid.begin(), enc_valid.end());
  if (valid.empty()) valid.assign(static_cast<size_t>(enc_states.rows()), 1);
  Mat dec_states = impl_->decoder_pass(
      prev_ids, 1, static_cast<int>(prev_ids.size()), enc_states, valid,
      static_cast<int>(enc_states.rows()), 0.0, nullptr, nullptr);
  return linear_fwd(impl_->out, dec_states);
}

// ----------------------------------------------------------- DecodeSession

template <typename Scalar>
Seq2SeqModel<Scalar>::DecodeSession::DecodeSession(
    const Seq2SeqModel& model, std::span<const int32_t> src_ids)
    : model_(model) {
  enc_valid_.resize(src_ids.size());
  for (size_t i = 0; i < src_ids.size(); ++i)
    enc_valid_[i] = src_ids[i] != Vocabulary::kPad;
  enc_states_ = model.impl_->encoder_pass(
      src_ids, {}, 1, static_cast<int>(src_ids.size()), enc_valid_, 0.0,
      nullptr, nullptr, nullptr);
  enc_k_.reserve(model.impl_->dec_layers.size());
  enc_v_.reserve(model.impl_->dec_layers.size());
  for (const auto& L : model.impl_->dec_layers) {
    enc_k_.push_back(linear_fwd(L.cross.k, enc_states_));
    enc_v_.push_back(linear_fwd(L.cross.v, enc_states_));
  }
}

template <typename Scalar>
typename Seq2SeqModel<Scalar>::Mat
Seq2SeqModel<Scalar>::DecodeSession::last_logits(
    const std::vector<std::vector<int32_t>>& prefixes) const {
  const auto& impl = *model_.impl_;
  const int n = static_cast<int>(prefixes.size());
  if (n == 0) throw std::invalid_argument("last_logits: no prefixes");
  const int t = static_cast<int>(prefixes.front().size());
  for (const auto& p : prefixes)
    if (static_cast<int>(p.size()) != t)
      throw std::invalid_argument("last_logits: prefixes must share a length");

  std::vector<int32_t> flat(static_cast<size_t>(n) * t);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < t; ++j)
      flat[static_cast<size_t>(i) * t + j] = prefixes[static_cast<size_t>(i)][static_cast<size_t>(j)];

  const int heads = impl.cfg.num_heads;
  const int h_total = impl.cfg.hidden_size;
  const int dh = h_total / heads;
  const int sk = static_cast<int>(enc_states_.rows());
  const Scalar scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh)));

  Mat y = impl.embed(impl.dec_tok_emb, impl.dec_pos_emb, flat, {}, n, t);
  for (size_t li = 0; li < impl.dec_layers.size(); ++li) {
    const auto& L = impl.dec_layers[li];
    Mat h1 = norm_fwd(L.ln1, y, static_cast<NormCache<Scalar>*>(nullptr));
    y += attn_fwd(L.self, h1, h1, n, t, t, heads, nullptr, true,
                  static_cast<AttnCache<Scalar>*>(nullptr));
    Mat h2 = norm_fwd(L.ln2, y, static_cast<NormCache<Scalar>*>(nullptr));
    // cross-attention against the cached encoder keys/values
    Mat q = linear_fwd(L.cross.q, h2);
    Mat ctx(y.rows(), h_total);
    for (int i = 0; i < n; ++i) {
      for (int head = 0; head < heads; ++head) {
        auto qb = q.block(i * t, head * dh, t, dh);
        auto kb = enc_k_[li].block(0, head * dh, sk, dh);
        Mat scores = qb * kb.transpose() * scale;
        for (int j = 0; j < sk; ++j)
          if (!enc_valid_[static_cast<size_t>(j)])
            scores.col(j).setConstant(static_cast<Scalar>(-1e30));
        for (int r = 0; r < t; ++r) {
          Scalar mx = scores.row(r).maxCoeff();
          Eigen::Array<Scalar, 1, Eigen::Dynamic> e =
              (scores.row(r).array() - mx).exp();
          scores.row(r) = (e / e.sum()).matrix();
        }
        ctx.block(i * t, head * dh, t, dh).noalias() =
            scores * enc_v_[li].block(0, head * dh, sk, dh);
      }
    }
    y += linear_fwd(L.cross.o, ctx);
    Mat h3 = norm_fwd(L.ln3, y, static_cast<NormCache<Scalar>*>(nullptr));
    Mat z1 = linear_fwd(L.f1, h3);
    Mat a1 = gelu_fwd(z1, static_cast<Mat*>(nullptr));
    y += linear_fwd(L.f2, a1);
  }
  Mat yn = norm_fwd(impl.dec_ln_f, y, static_cast<NormCache<Scalar>*>(nullptr));

  Mat last(n, h_total);
  for (int i = 0; i < n; ++i) last.row(i) = yn.row(i * t + (t - 1));
  return linear_fwd(impl.out, last);
}

template class Seq2SeqModel<float>;
template class Seq2SeqModel<double>;

}  // namespace helix
