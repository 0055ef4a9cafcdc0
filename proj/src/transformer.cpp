#include "drdc/transformer.hpp"

#include <stdexcept>

namespace drdc {

namespace {

void add_inplace(Tensor& a, const Tensor& b) {
    for (int64_t i = 0; i < a.numel(); ++i) a[i] += b[i];
}

std::vector<int> iota_positions(int t) {
    std::vector<int> p(static_cast<size_t>(t));
    for (int i = 0; i < t; ++i) p[static_cast<size_t>(i)] = i;
    return p;
}

} // namespace

void TransformerConfig::validate() const {
    if (feat_channels < 1 || tokens < 1)
        throw std::invalid_argument("TransformerConfig: feature geometry unset");
    if (d_model % heads != 0)
        throw std::invalid_argument("TransformerConfig: heads must divide d_model");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("TransformerConfig: dropout out of range");
}

FeatureReconstructor::FeatureReconstructor(const TransformerConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
    cfg_.validate();
    RngStream rng(seed);
    in_proj_ = nn::Linear(cfg.feat_channels, cfg.d_model, rng, "base.in_proj");
    out_proj_ = nn::Linear(cfg.d_model, cfg.feat_channels, rng, "base.out_proj");

    query_embed_.name = "base.query_embed";
    query_embed_.value = nn::xavier_normal({cfg.tokens, cfg.d_model}, cfg.d_model,
                                           cfg.d_model, rng);
    query_embed_.init_buffers();
    query_embed_.weight_decay = false;

    pos_ = nn::sinusoidal_embedding(iota_positions(cfg.tokens), cfg.d_model);

    enc_.resize(static_cast<size_t>(cfg.enc_layers));
    for (int i = 0; i < cfg.enc_layers; ++i) {
        auto& l = enc_[static_cast<size_t>(i)];
        const std::string nm = "base.enc" + std::to_string(i);
        l.ln1 = nn::LayerNorm(cfg.d_model, nm + ".ln1");
        l.ln2 = nn::LayerNorm(cfg.d_model, nm + ".ln2");
        l.attn = nn::MultiHeadAttention(cfg.d_model, cfg.heads, rng, nm + ".attn");
        l.ffn1 = nn::Linear(cfg.d_model, cfg.ffn_dim, rng, nm + ".ffn1");
        l.ffn2 = nn::Linear(cfg.ffn_dim, cfg.d_model, rng, nm + ".ffn2");
        l.drop_attn = nn::Dropout(cfg.dropout);
        l.drop_ffn = nn::Dropout(cfg.dropout);
    }
    dec_.resize(static_cast<size_t>(cfg.dec_layers));
    for (int i = 0; i < cfg.dec_layers; ++i) {
        auto& l = dec_[static_cast<size_t>(i)];
        const std::string nm = "base.dec" + std::to_string(i);
        l.ln1 = nn::LayerNorm(cfg.d_model, nm + ".ln1");
        l.ln2 = nn::LayerNorm(cfg.d_model, nm + ".ln2");
        l.ln3 = nn::LayerNorm(cfg.d_model, nm + ".ln3");
        l.self_attn = nn::MultiHeadAttention(cfg.d_model, cfg.heads, rng, nm + ".self");
        l.cross_attn = nn::MultiHeadAttention(cfg.d_model, cfg.heads, rng, nm + ".cross");
        l.ffn1 = nn::Linear(cfg.d_model, cfg.ffn_dim, rng, nm + ".ffn1");
        l.ffn2 = nn::Linear(cfg.ffn_dim, cfg.d_model, rng, nm + ".ffn2");
        l.drop_self = nn::Dropout(cfg.dropout);
        l.drop_cross = nn::Dropout(cfg.dropout);
        l.drop_ffn = nn::Dropout(cfg.dropout);
    }
    enc_final_ln_ = nn::LayerNorm(cfg.d_model, "base.enc_ln");
    dec_final_ln_ = nn::LayerNorm(cfg.d_model, "base.dec_ln");
}

Tensor FeatureReconstructor::forward(const Tensor& tokens_in, int batch, bool training,
                                     RngStream* dropout_rng) {
    if (tokens_in.ndim() != 2 || tokens_in.dim(1) != cfg_.feat_channels ||
        tokens_in.dim(0) != batch * cfg_.tokens)
        throw std::invalid_argument("FeatureReconstructor: bad token tensor shape");
    if (training && dropout_rng == nullptr)
        throw std::invalid_argument("FeatureReconstructor: training needs a dropout stream");
    batch_ = batch;
    RngStream dummy(0);
    RngStream& drng = dropout_rng ? *dropout_rng : dummy;
    const int T = cfg_.tokens, d = cfg_.d_model;

    Tensor x = in_proj_.forward(tokens_in);
    for (int b = 0; b < batch; ++b)
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < d; ++j) x.at2(b * T + i, j) += pos_.at2(i, j);

    for (auto& l : enc_) {
        Tensor s = l.ln1.forward(x);
        Tensor a = l.drop_attn.forward(l.attn.forward(s, s, batch, T, T), training, drng);
        add_inplace(x, a);
        Tensor f = l.drop_ffn.forward(
            l.ffn2.forward(l.act.forward(l.ffn1.forward(l.ln2.forward(x)))), training, drng);
        add_inplace(x, f);
    }
    Tensor memory = enc_final_ln_.forward(x);

    Tensor q({batch * T, d});
    for (int b = 0; b < batch; ++b)
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < d; ++j) q.at2(b * T + i, j) = query_embed_.value.at2(i, j);

    for (auto& l : dec_) {
        Tensor s = l.ln1.forward(q);
        Tensor a = l.drop_self.forward(l.self_attn.forward(s, s, batch, T, T), training, drng);
        add_inplace(q, a);
        Tensor c = l.drop_cross.forward(
            l.cross_attn.forward(l.ln2.forward(q), memory, batch, T, T), training, drng);
        add_inplace(q, c);
        Tensor f = l.drop_ffn.forward(
            l.ffn2.forward(l.act.forward(l.ffn1.forward(l.ln3.forward(q)))), training, drng);
        add_inplace(q, f);
    }
    return out_proj_.forward(dec_final_ln_.forward(q));
}

void FeatureReconstructor::backward(const Tensor& gout) {
    const int T = cfg_.tokens;
    Tensor gq = dec_final_ln_.backward(out_proj_.backward(gout));
    Tensor gmem({batch_ * T, cfg_.d_model});

    for (auto it = dec_.rbegin(); it != dec_.rend(); ++it) {
        auto& l = *it;
        Tensor gf = l.ln3.backward(
            l.ffn1.backward(l.act.backward(l.ffn2.backward(l.drop_ffn.backward(gq)))));
        add_inplace(gq, gf);

        Tensor gkv;
        Tensor gc = l.cross_attn.backward(l.drop_cross.backward(gq), gkv);
        add_inplace(gmem, gkv);
        Tensor gq2 = l.ln2.backward(gc);
        add_inplace(gq, gq2);

        Tensor gkv_self;
        Tensor gs = l.self_attn.backward(l.drop_self.backward(gq), gkv_self);
        add_inplace(gs, gkv_self);
        Tensor gq3 = l.ln1.backward(gs);
        add_inplace(gq, gq3);
    }
    // query embedding gradient: sum over batch
    for (int b = 0; b < batch_; ++b)
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < cfg_.d_model; ++j)
                query_embed_.grad.at2(i, j) += gq.at2(b * T + i, j);

    Tensor gx = enc_final_ln_.backward(gmem);
    for (auto it = enc_.rbegin(); it != enc_.rend(); ++it) {
        auto& l = *it;
        Tensor gf = l.ln2.backward(
            l.ffn1.backward(l.act.backward(l.ffn2.backward(l.drop_ffn.backward(gx)))));
        add_inplace(gx, gf);
        Tensor gkv;
        Tensor ga = l.attn.backward(l.drop_attn.backward(gx), gkv);
        add_inplace(ga, gkv);
        Tensor gx2 = l.ln1.backward(ga);
        add_inplace(gx, gx2);
    }
    in_proj_.backward(gx); // position table is fixed
}

std::vector<nn::Param*> FeatureReconstructor::params() {
    std::vector<nn::Param*> out;
    in_proj_.collect(out);
    out.push_back(&query_embed_);
    for (auto& l : enc_) {
        l.ln1.collect(out);
        l.attn.collect(out);
        l.ln2.collect(out);
        l.ffn1.collect(out);
        l.ffn2.collect(out);
    }
    enc_final_ln_.collect(out);
    for (auto& l : dec_) {
        l.ln1.collect(out);
        l.self_attn.collect(out);
        l.ln2.collect(out);
        l.cross_attn.collect(out);
        l.ln3.collect(out);
        l.ffn1.collect(out);
        l.ffn2.collect(out);
    }
    dec_final_ln_.collect(out);
    out_proj_.collect(out);
    return out;
}

} // namespace drdc
