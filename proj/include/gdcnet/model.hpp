#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gdcnet/alignment.hpp"
#include "gdcnet/embedding.hpp"
#include "gdcnet/errors.hpp"
#include "gdcnet/fusion.hpp"
#include "gdcnet/gdrm.hpp"
#include "gdcnet/losses.hpp"
#include "gdcnet/tensor.hpp"

namespace gdcnet {

struct Dims {
    std::size_t d_t = 512;       // raw text features
    std::size_t d_v = 768;       // raw image features
    std::size_t d_z = 128;       // shared latent space
    std::size_t mlp_hidden = 64; // discrepancy MLP hidden layer
    std::size_t d_f = 128;       // discrepancy representation
    std::size_t d_fused = 128;   // fusion space
    std::size_t head_hidden = 16;
};

struct AblationFlags {
    bool no_gdrm = false;
    bool no_semd = false;
    bool no_send = false;
    bool symmetric_contrastive = false;
};

struct ModelParams {
    Dims dims;
    ProjectionHead text_head;   // d_t -> d_z, shared by text and caption
    ProjectionHead image_head;  // d_v -> d_z
    DiscrepancyMLP disc_mlp;
    FusionParams fusion;

    static ModelParams init(const Dims& dims, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        ModelParams p;
        p.dims = dims;
        p.text_head = ProjectionHead::init(dims.d_t, dims.d_z, Space::text_raw, Space::shared, rng);
        p.image_head = ProjectionHead::init(dims.d_v, dims.d_z, Space::image_raw, Space::shared, rng);
        p.disc_mlp = DiscrepancyMLP::init(dims.mlp_hidden, dims.d_f, rng);
        p.fusion = FusionParams::init(dims.d_z, dims.d_f, dims.d_fused, dims.head_hidden, rng);
        return p;
    }

    ModelParams zeros_like() const {
        ModelParams g = *this;
        g.visit([](const std::string&, Vec& v) { std::fill(v.begin(), v.end(), 0.0); });
        return g;
    }

    // Fixed-order traversal of every trainable tensor; scalars are exposed
    // through single-element vectors held by the structs themselves.
    template <typename Fn>
    void visit(Fn&& fn) {
        fn("text_head.weight", text_head.weight.data);
        fn("text_head.bias", text_head.bias);
        fn("image_head.weight", image_head.weight.data);
        fn("image_head.bias", image_head.bias);
        fn("disc_mlp.w1", disc_mlp.w1.data);
        fn("disc_mlp.b1", disc_mlp.b1);
        fn("disc_mlp.w2", disc_mlp.w2.data);
        fn("disc_mlp.b2", disc_mlp.b2);
        fn("fusion.proj_text", fusion.proj_text.data);
        fn("fusion.proj_text_b", fusion.proj_text_b);
        fn("fusion.proj_image", fusion.proj_image.data);
        fn("fusion.proj_image_b", fusion.proj_image_b);
        fn("fusion.proj_disc", fusion.proj_disc.data);
        fn("fusion.proj_disc_b", fusion.proj_disc_b);
        fn("fusion.gate_text", fusion.gate_text.data);
        fn("fusion.gate_image", fusion.gate_image.data);
        fn("fusion.gate_disc", fusion.gate_disc.data);
        fn("fusion.clf_text.w", fusion.clf_text.weight);
        fn("fusion.clf_image.w", fusion.clf_image.weight);
        fn("fusion.clf_disc.w", fusion.clf_disc.weight);
        fn("fusion.clf_fused.w", fusion.clf_fused.weight);
        fn("fusion.clf_bias", clf_bias_view());
        fn("fusion.head_w1", fusion.head_w1.data);
        fn("fusion.head_b1", fusion.head_b1);
        fn("fusion.head_w2", fusion.head_w2);
        fn("fusion.head_b2", head_b2_view());
        sync_scalar_views();
    }

    template <typename Fn>
    void visit(Fn&& fn) const {
        const_cast<ModelParams*>(this)->visit([&](const std::string& name, Vec& v) {
            fn(name, static_cast<const Vec&>(v));
        });
    }

private:
    // Scalar biases are packed into small vectors so the optimizer and the
    // checkpoint writer only ever deal in named tensors.
    mutable Vec clf_bias_buf_;
    mutable Vec head_b2_buf_;

    Vec& clf_bias_view() const {
        clf_bias_buf_ = {fusion.clf_text.bias, fusion.clf_image.bias,
                         fusion.clf_disc.bias, fusion.clf_fused.bias};
        return clf_bias_buf_;
    }
    Vec& head_b2_view() const {
        head_b2_buf_ = {fusion.head_b2};
        return head_b2_buf_;
    }
    void sync_scalar_views() {
        fusion.clf_text.bias = clf_bias_buf_[0];
        fusion.clf_image.bias = clf_bias_buf_[1];
        fusion.clf_disc.bias = clf_bias_buf_[2];
        fusion.clf_fused.bias = clf_bias_buf_[3];
        fusion.head_b2 = head_b2_buf_[0];
    }
};

// Precomputed, non-differentiable batch inputs.
struct BatchInput {
    std::vector<Vec> h_text;     // hashed text features, d_t
    std::vector<Vec> h_caption;  // hashed caption features, d_t
    std::vector<Vec> h_image;    // raw image features, d_v
    Vec d_sen;                   // lexicon sentiment discrepancy per sample
    Vec labels;

    std::size_t size() const { return h_text.size(); }
};

struct ForwardCache {
    std::size_t batch = 0;
    std::vector<Vec> z_text, z_caption, z_image;
    std::vector<DiscrepancyTriple> triples;
    std::vector<Vec> mlp_pre, mlp_hidden, f_disc_raw;
    std::vector<Vec> f_text, f_image, f_disc;
    std::vector<Vec> g_text, g_image, g_disc;
    std::vector<Vec> f_fused;
    std::vector<Vec> logits;    // (l_T, l_I, l_D, l_F)
    std::vector<Vec> head_pre, head_hidden;
    Vec probs;
    SimilarityMatrix sim;
    double loss_bce = 0.0;
    double loss_cont = 0.0;
    double loss_total = 0.0;
};

inline ForwardCache forward_batch(const ModelParams& p, const BatchInput& in,
                                  const AblationFlags& flags, double alpha, double margin) {
    const std::size_t b = in.size();
    ForwardCache c;
    c.batch = b;
    c.z_text.resize(b); c.z_caption.resize(b); c.z_image.resize(b);
    c.triples.resize(b);
    c.mlp_pre.resize(b); c.mlp_hidden.resize(b); c.f_disc_raw.resize(b);
    c.f_text.resize(b); c.f_image.resize(b); c.f_disc.resize(b);
    c.g_text.resize(b); c.g_image.resize(b); c.g_disc.resize(b);
    c.f_fused.resize(b);
    c.logits.resize(b);
    c.head_pre.resize(b); c.head_hidden.resize(b);
    c.probs.resize(b);

    for (std::size_t i = 0; i < b; ++i) {
        c.z_text[i] = matvec(p.text_head.weight, in.h_text[i]);
        add_inplace(c.z_text[i], p.text_head.bias);
        c.z_caption[i] = matvec(p.text_head.weight, in.h_caption[i]);
        add_inplace(c.z_caption[i], p.text_head.bias);
        c.z_image[i] = matvec(p.image_head.weight, in.h_image[i]);
        add_inplace(c.z_image[i], p.image_head.bias);

        DiscrepancyTriple d;
        d.d_sem = flags.no_semd ? 0.0 : semantic_discrepancy(c.z_text[i], c.z_caption[i]);
        d.d_sen = flags.no_send ? 0.0 : in.d_sen[i];
        d.d_fidelity = fidelity(c.z_image[i], c.z_caption[i]);
        c.triples[i] = d;

        const Vec dvec{d.d_sem, d.d_sen, d.d_fidelity};
        c.mlp_pre[i] = matvec(p.disc_mlp.w1, dvec);
        add_inplace(c.mlp_pre[i], p.disc_mlp.b1);
        c.mlp_hidden[i] = c.mlp_pre[i];
        for (double& x : c.mlp_hidden[i]) x = std::max(0.0, x);
        c.f_disc_raw[i] = matvec(p.disc_mlp.w2, c.mlp_hidden[i]);
        add_inplace(c.f_disc_raw[i], p.disc_mlp.b2);

        c.f_text[i] = matvec(p.fusion.proj_text, c.z_text[i]);
        add_inplace(c.f_text[i], p.fusion.proj_text_b);
        c.f_image[i] = matvec(p.fusion.proj_image, c.z_image[i]);
        add_inplace(c.f_image[i], p.fusion.proj_image_b);
        if (flags.no_gdrm) {
            c.f_disc[i] = Vec(p.dims.d_fused, 0.0);
        } else {
            c.f_disc[i] = matvec(p.fusion.proj_disc, c.f_disc_raw[i]);
            add_inplace(c.f_disc[i], p.fusion.proj_disc_b);
        }

        c.g_text[i] = gate(p.fusion.gate_text, c.f_text[i]);
        c.g_image[i] = gate(p.fusion.gate_image, c.f_image[i]);
        c.g_disc[i] = gate(p.fusion.gate_disc, c.f_disc[i]);
        c.f_fused[i] = Vec(p.dims.d_fused, 0.0);
        for (std::size_t k = 0; k < p.dims.d_fused; ++k) {
            c.f_fused[i][k] = c.g_text[i][k] * c.f_text[i][k] +
                              c.g_image[i][k] * c.f_image[i][k] +
                              c.g_disc[i][k] * c.f_disc[i][k];
        }

        c.logits[i] = Vec{
            p.fusion.clf_text.logit(c.f_text[i]),
            p.fusion.clf_image.logit(c.f_image[i]),
            flags.no_gdrm ? 0.0 : p.fusion.clf_disc.logit(c.f_disc[i]),
            p.fusion.clf_fused.logit(c.f_fused[i]),
        };
        c.head_pre[i] = matvec(p.fusion.head_w1, c.logits[i]);
        add_inplace(c.head_pre[i], p.fusion.head_b1);
        c.head_hidden[i] = c.head_pre[i];
        for (double& x : c.head_hidden[i]) x = std::max(0.0, x);
        c.probs[i] = sigmoid(dot(p.fusion.head_w2, c.head_hidden[i]) + p.fusion.head_b2);
    }

    c.loss_bce = bce_loss(c.probs, in.labels);
    if (b >= 2) {
        c.sim = similarity_matrix(c.z_image, c.z_text);
        c.loss_cont = contrastive_loss(c.sim, margin, flags.symmetric_contrastive);
    }
    c.loss_total = total_loss(c.loss_bce, c.loss_cont, alpha);
    return c;
}

// Reverse pass for the joint objective. Returns gradients in a ModelParams
// mirror. The lexicon sentiment input is treated as constant.
inline ModelParams backward_batch(const ModelParams& p, const ForwardCache& c,
                                  const BatchInput& in, const AblationFlags& flags,
                                  double alpha, double margin) {
    const std::size_t b = c.batch;
    ModelParams g = p.zeros_like();
    std::vector<Vec> dz_text(b, Vec(p.dims.d_z, 0.0));
    std::vector<Vec> dz_caption(b, Vec(p.dims.d_z, 0.0));
    std::vector<Vec> dz_image(b, Vec(p.dims.d_z, 0.0));

    for (std::size_t i = 0; i < b; ++i) {
        // BCE head
        const double d_out = (c.probs[i] - in.labels[i]) / static_cast<double>(b);
        for (std::size_t k = 0; k < p.dims.head_hidden; ++k) {
            g.fusion.head_w2[k] += d_out * c.head_hidden[i][k];
        }
        g.fusion.head_b2 += d_out;
        Vec d_hidden(p.dims.head_hidden);
        for (std::size_t k = 0; k < p.dims.head_hidden; ++k) {
            d_hidden[k] = d_out * p.fusion.head_w2[k] * (c.head_pre[i][k] > 0.0 ? 1.0 : 0.0);
        }
        outer_add(g.fusion.head_w1, d_hidden, c.logits[i]);
        add_inplace(g.fusion.head_b1, d_hidden);
        Vec d_logits(4, 0.0);
        matvec_transpose_add(p.fusion.head_w1, d_hidden, d_logits);
        if (flags.no_gdrm) d_logits[2] = 0.0;

        Vec d_f_text(p.dims.d_fused, 0.0);
        Vec d_f_image(p.dims.d_fused, 0.0);
        Vec d_f_disc(p.dims.d_fused, 0.0);
        Vec d_f_fused(p.dims.d_fused, 0.0);

        // classifier logits
        auto clf_back = [&](const LinearClassifier& clf, LinearClassifier& gclf, double dl,
                            const Vec& f, Vec& df) {
            for (std::size_t k = 0; k < f.size(); ++k) {
                gclf.weight[k] += dl * f[k];
                df[k] += dl * clf.weight[k];
            }
            gclf.bias += dl;
        };
        clf_back(p.fusion.clf_text, g.fusion.clf_text, d_logits[0], c.f_text[i], d_f_text);
        clf_back(p.fusion.clf_image, g.fusion.clf_image, d_logits[1], c.f_image[i], d_f_image);
        if (!flags.no_gdrm) {
            clf_back(p.fusion.clf_disc, g.fusion.clf_disc, d_logits[2], c.f_disc[i], d_f_disc);
        }
        clf_back(p.fusion.clf_fused, g.fusion.clf_fused, d_logits[3], c.f_fused[i], d_f_fused);

        // fused = sum g_X . f_X ; gates g_X = sigmoid(W_X f_X)
        auto gate_back = [&](const Mat& w, Mat& gw, const Vec& gate_out, const Vec& f, Vec& df) {
            Vec d_gate(f.size());
            Vec d_pre(f.size());
            for (std::size_t k = 0; k < f.size(); ++k) {
                d_gate[k] = d_f_fused[k] * f[k];
                df[k] += d_f_fused[k] * gate_out[k];
                d_pre[k] = d_gate[k] * gate_out[k] * (1.0 - gate_out[k]);
            }
            outer_add(gw, d_pre, f);
            matvec_transpose_add(w, d_pre, df);
        };
        gate_back(p.fusion.gate_text, g.fusion.gate_text, c.g_text[i], c.f_text[i], d_f_text);
        gate_back(p.fusion.gate_image, g.fusion.gate_image, c.g_image[i], c.f_image[i], d_f_image);
        gate_back(p.fusion.gate_disc, g.fusion.gate_disc, c.g_disc[i], c.f_disc[i], d_f_disc);

        // fusion-space projections
        outer_add(g.fusion.proj_text, d_f_text, c.z_text[i]);
        add_inplace(g.fusion.proj_text_b, d_f_text);
        matvec_transpose_add(p.fusion.proj_text, d_f_text, dz_text[i]);
        outer_add(g.fusion.proj_image, d_f_image, c.z_image[i]);
        add_inplace(g.fusion.proj_image_b, d_f_image);
        matvec_transpose_add(p.fusion.proj_image, d_f_image, dz_image[i]);

        Vec d_triple(3, 0.0);
        if (!flags.no_gdrm) {
            outer_add(g.fusion.proj_disc, d_f_disc, c.f_disc_raw[i]);
            add_inplace(g.fusion.proj_disc_b, d_f_disc);
            Vec d_f_disc_raw(p.dims.d_f, 0.0);
            matvec_transpose_add(p.fusion.proj_disc, d_f_disc, d_f_disc_raw);

            outer_add(g.disc_mlp.w2, d_f_disc_raw, c.mlp_hidden[i]);
            add_inplace(g.disc_mlp.b2, d_f_disc_raw);
            Vec d_hidden_mlp(p.dims.mlp_hidden, 0.0);
            matvec_transpose_add(p.disc_mlp.w2, d_f_disc_raw, d_hidden_mlp);
            for (std::size_t k = 0; k < p.dims.mlp_hidden; ++k) {
                if (c.mlp_pre[i][k] <= 0.0) d_hidden_mlp[k] = 0.0;
            }
            const Vec dvec{c.triples[i].d_sem, c.triples[i].d_sen, c.triples[i].d_fidelity};
            outer_add(g.disc_mlp.w1, d_hidden_mlp, dvec);
            add_inplace(g.disc_mlp.b1, d_hidden_mlp);
            matvec_transpose_add(p.disc_mlp.w1, d_hidden_mlp, d_triple);
        }

        // d_sem = 1 - cos(z_text, z_caption); d_fid = cos(z_image, z_caption)
        if (!flags.no_semd && d_triple[0] != 0.0) {
            cosine_grad_a(c.z_text[i], c.z_caption[i], -d_triple[0], dz_text[i]);
            cosine_grad_a(c.z_caption[i], c.z_text[i], -d_triple[0], dz_caption[i]);
        }
        if (d_triple[2] != 0.0) {
            cosine_grad_a(c.z_image[i], c.z_caption[i], d_triple[2], dz_image[i]);
            cosine_grad_a(c.z_caption[i], c.z_image[i], d_triple[2], dz_caption[i]);
        }
    }

    // contrastive term
    if (alpha > 0.0 && b >= 2) {
        const Mat ds = contrastive_loss_grad(c.sim, margin, flags.symmetric_contrastive);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < b; ++j) {
                const double w = alpha * ds(i, j);
                if (w == 0.0) continue;
                cosine_grad_a(c.z_image[i], c.z_text[j], w, dz_image[i]);
                cosine_grad_a(c.z_text[j], c.z_image[i], w, dz_text[j]);
            }
        }
    }

    // encoder projection heads
    for (std::size_t i = 0; i < b; ++i) {
        outer_add(g.text_head.weight, dz_text[i], in.h_text[i]);
        add_inplace(g.text_head.bias, dz_text[i]);
        outer_add(g.text_head.weight, dz_caption[i], in.h_caption[i]);
        add_inplace(g.text_head.bias, dz_caption[i]);
        outer_add(g.image_head.weight, dz_image[i], in.h_image[i]);
        add_inplace(g.image_head.bias, dz_image[i]);
    }
    return g;
}

// Global-norm gradient clipping; returns the pre-clip norm.
inline double clip_gradients(ModelParams& grads, double max_norm) {
    double sq = 0.0;
    grads.visit([&](const std::string&, Vec& v) {
        for (double x : v) sq += x * x;
    });
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        grads.visit([&](const std::string&, Vec& v) {
            for (double& x : v) x *= scale;
        });
    }
    return norm;
}

// Adam with L2 weight decay folded into the gradient. Two parameter
// groups exist in the schedule (task modules, encoder backbones); the
// desk-scale encoders expose no trainables, so the backbone group is
// empty and only the task rate applies here.
class AdamOptimizer {
public:
    AdamOptimizer(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ModelParams& params, const ModelParams& grads) {
        ++t_;
        std::vector<const Vec*> gvecs;
        grads.visit([&](const std::string&, const Vec& v) { gvecs.push_back(&v); });
        std::size_t slot = 0;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        params.visit([&](const std::string&, Vec& v) {
            const Vec& gv = *gvecs[slot];
            if (m_.size() <= slot) {
                m_.emplace_back(v.size(), 0.0);
                v_.emplace_back(v.size(), 0.0);
            }
            Vec& m = m_[slot];
            Vec& vv = v_[slot];
            for (std::size_t k = 0; k < v.size(); ++k) {
                const double grad = gv[k] + wd_ * v[k];
                m[k] = beta1_ * m[k] + (1.0 - beta1_) * grad;
                vv[k] = beta2_ * vv[k] + (1.0 - beta2_) * grad * grad;
                v[k] -= lr_ * (m[k] / bc1) / (std::sqrt(vv[k] / bc2) + eps_);
            }
            ++slot;
        });
    }

private:
    double lr_, wd_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Vec> m_, v_;
};

}  // namespace gdcnet
