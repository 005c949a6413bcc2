#pragma once

#include <string>
#include <vector>

#include "orthoseg/nn_ops.hpp"
#include "orthoseg/rng.hpp"
#include "orthoseg/tensor.hpp"

// Simplified U-Net with two output heads over the shared final feature map:
// an embedding branch (linear) and a distance regression branch (relu).
//
//   enc[i]:  conv3x3+relu, conv3x3+relu, then 2x2 maxpool      (i = 0..depth-1)
//   bott:    conv3x3+relu, conv3x3+relu
//   dec[i]:  upsample x2, concat enc[i] skip, conv3x3+relu, conv3x3+relu
//   heads:   conv3x3+relu, conv3x3 (embedding: linear, distance: relu)
//
// Channel widths double per encoder level from base_channels. All convs are
// 3x3/stride 1/pad 1, so spatial extent is preserved end to end.

namespace orthoseg {

struct NetworkSpec {
    int input_channels = 1;
    int base_channels = 16;
    int depth = 3;          // pooling levels
    int embedding_dim = 16; // D
    int head_channels = 32;

    void validate() const {
        if (input_channels < 1 || base_channels < 1 || head_channels < 1)
            throw error("NetworkSpec: channel counts must be >= 1");
        if (depth < 1) throw error("NetworkSpec: depth must be >= 1");
        if (embedding_dim < 2) throw error("NetworkSpec: embedding_dim must be >= 2");
    }

    int stride() const { return 1 << depth; }

    bool operator==(const NetworkSpec&) const = default;
};

struct ConvShape {
    std::string name;
    int in_c, out_c;
};

// Every convolution in fixed order; this order defines parameter layout,
// initialization draws and the checkpoint format.
inline std::vector<ConvShape> conv_table(const NetworkSpec& s) {
    std::vector<ConvShape> t;
    int c = s.input_channels;
    for (int i = 0; i < s.depth; ++i) {
        int oc = s.base_channels << i;
        t.push_back({"enc" + std::to_string(i) + ".conv1", c, oc});
        t.push_back({"enc" + std::to_string(i) + ".conv2", oc, oc});
        c = oc;
    }
    int bc = s.base_channels << s.depth;
    t.push_back({"bott.conv1", c, bc});
    t.push_back({"bott.conv2", bc, bc});
    c = bc;
    for (int i = s.depth - 1; i >= 0; --i) {
        int skip = s.base_channels << i;
        t.push_back({"dec" + std::to_string(i) + ".conv1", c + skip, skip});
        t.push_back({"dec" + std::to_string(i) + ".conv2", skip, skip});
        c = skip;
    }
    t.push_back({"emb.conv1", c, s.head_channels});
    t.push_back({"emb.conv2", s.head_channels, s.embedding_dim});
    t.push_back({"dist.conv1", c, s.head_channels});
    t.push_back({"dist.conv2", s.head_channels, 1});
    return t;
}

// He-style fan-in uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases
// zero. Deterministic given the seed.
template <typename T>
ParamSet<T> init_parameters(const NetworkSpec& spec, uint64_t seed) {
    spec.validate();
    Pcg32 rng(seed);
    ParamSet<T> p;
    for (const ConvShape& cs : conv_table(spec)) {
        Tensor<T> w({cs.out_c, cs.in_c, 3, 3});
        double bound = std::sqrt(6.0 / (cs.in_c * 9));
        for (T& v : w.v) v = static_cast<T>(rng.uniform(-bound, bound));
        p.add(cs.name + ".w", std::move(w));
        p.add(cs.name + ".b", Tensor<T>({cs.out_c}));
    }
    return p;
}

template <typename T>
struct ForwardTrace {
    NetworkSpec spec;
    int in_h = 0, in_w = 0;

    Raster<T> input;
    std::vector<Raster<T>> enc_a1, enc_a2, pooled;  // per level
    std::vector<std::vector<uint32_t>> pool_idx;
    Raster<T> bott_a1, bott_a2;
    std::vector<Raster<T>> dec_cat, dec_a1, dec_a2;  // indexed by level

    Raster<T> emb_hidden, dist_hidden;
    Raster<T> embedding;  // [D, H, W], linear
    Raster<T> distance;   // [1, H, W], relu (>= 0)
};

template <typename T>
ForwardTrace<T> forward(const NetworkSpec& spec, const ParamSet<T>& params, const Raster<T>& image) {
    spec.validate();
    if (image.channels() != spec.input_channels)
        throw error("forward: image channels do not match spec");
    if (image.height() % spec.stride() || image.width() % spec.stride())
        throw error("forward: spatial extent must be divisible by 2^depth");

    ForwardTrace<T> tr;
    tr.spec = spec;
    tr.in_h = image.height();
    tr.in_w = image.width();
    tr.input = image;
    tr.enc_a1.resize(spec.depth);
    tr.enc_a2.resize(spec.depth);
    tr.pooled.resize(spec.depth);
    tr.pool_idx.resize(spec.depth);
    tr.dec_cat.resize(spec.depth);
    tr.dec_a1.resize(spec.depth);
    tr.dec_a2.resize(spec.depth);

    auto conv = [&](const std::string& n, const Raster<T>& x) {
        return conv3x3_forward(x, params[n + ".w"], params[n + ".b"]);
    };

    const Raster<T>* cur = &tr.input;
    for (int i = 0; i < spec.depth; ++i) {
        std::string n = "enc" + std::to_string(i);
        tr.enc_a1[i] = relu_forward(conv(n + ".conv1", *cur));
        tr.enc_a2[i] = relu_forward(conv(n + ".conv2", tr.enc_a1[i]));
        tr.pooled[i] = maxpool2_forward(tr.enc_a2[i], tr.pool_idx[i]);
        cur = &tr.pooled[i];
    }

    tr.bott_a1 = relu_forward(conv("bott.conv1", *cur));
    tr.bott_a2 = relu_forward(conv("bott.conv2", tr.bott_a1));

    cur = &tr.bott_a2;
    for (int i = spec.depth - 1; i >= 0; --i) {
        std::string n = "dec" + std::to_string(i);
        tr.dec_cat[i] = concat_channels(upsample2_forward(*cur), tr.enc_a2[i]);
        tr.dec_a1[i] = relu_forward(conv(n + ".conv1", tr.dec_cat[i]));
        tr.dec_a2[i] = relu_forward(conv(n + ".conv2", tr.dec_a1[i]));
        cur = &tr.dec_a2[i];
    }

    tr.emb_hidden = relu_forward(conv("emb.conv1", *cur));
    tr.embedding = conv("emb.conv2", tr.emb_hidden);
    tr.dist_hidden = relu_forward(conv("dist.conv1", *cur));
    tr.distance = relu_forward(conv("dist.conv2", tr.dist_hidden));
    return tr;
}

// dL/dtheta for every parameter given dL/d(embedding) and dL/d(distance).
// Linear in the output gradients; mirrors forward() exactly.
template <typename T>
ParamSet<T> backward(const ForwardTrace<T>& tr, const ParamSet<T>& params,
                     const Raster<T>& grad_embedding, const Raster<T>& grad_distance) {
    const NetworkSpec& spec = tr.spec;
    if (!grad_embedding.same_shape(tr.embedding) || !grad_distance.same_shape(tr.distance))
        throw error("backward: gradient shape mismatch");

    ParamSet<T> g = params.zeros_like();
    auto conv_bwd = [&](const std::string& n, const Raster<T>& x, const Raster<T>& gy, Raster<T>* gx) {
        conv3x3_backward(x, params[n + ".w"], gy, gx, g[n + ".w"], g[n + ".b"]);
    };

    const Raster<T>& feat = tr.dec_a2[0];  // shared head input

    // embedding head (linear output)
    Raster<T> g_emb_hidden;
    conv_bwd("emb.conv2", tr.emb_hidden, grad_embedding, &g_emb_hidden);
    g_emb_hidden = relu_backward(tr.emb_hidden, std::move(g_emb_hidden));
    Raster<T> g_feat_emb;
    conv_bwd("emb.conv1", feat, g_emb_hidden, &g_feat_emb);

    // distance head (relu output)
    Raster<T> g_dist_pre = relu_backward(tr.distance, grad_distance);
    Raster<T> g_dist_hidden;
    conv_bwd("dist.conv2", tr.dist_hidden, g_dist_pre, &g_dist_hidden);
    g_dist_hidden = relu_backward(tr.dist_hidden, std::move(g_dist_hidden));
    Raster<T> g_feat_dist;
    conv_bwd("dist.conv1", feat, g_dist_hidden, &g_feat_dist);

    Raster<T> g_cur = std::move(g_feat_emb);
    for (size_t i = 0; i < g_cur.size(); ++i) g_cur.raw()[i] += g_feat_dist.raw()[i];

    // decoder, level 0 upward; each level hands a skip gradient to its encoder
    std::vector<Raster<T>> skip_grad(spec.depth);
    for (int i = 0; i < spec.depth; ++i) {
        std::string n = "dec" + std::to_string(i);
        g_cur = relu_backward(tr.dec_a2[i], std::move(g_cur));
        Raster<T> g_a1;
        conv_bwd(n + ".conv2", tr.dec_a1[i], g_cur, &g_a1);
        g_a1 = relu_backward(tr.dec_a1[i], std::move(g_a1));
        Raster<T> g_cat;
        conv_bwd(n + ".conv1", tr.dec_cat[i], g_a1, &g_cat);
        int up_c = tr.dec_cat[i].channels() - tr.enc_a2[i].channels();
        auto [g_up, g_skip] = split_channels(g_cat, up_c);
        skip_grad[i] = std::move(g_skip);
        g_cur = upsample2_backward(g_up);
    }

    // bottleneck
    g_cur = relu_backward(tr.bott_a2, std::move(g_cur));
    Raster<T> g_b1;
    conv_bwd("bott.conv2", tr.bott_a1, g_cur, &g_b1);
    g_b1 = relu_backward(tr.bott_a1, std::move(g_b1));
    Raster<T> g_pooled;
    conv_bwd("bott.conv1", tr.pooled[spec.depth - 1], g_b1, &g_pooled);

    // encoder, deepest level first; a2 collects pool and skip contributions
    for (int i = spec.depth - 1; i >= 0; --i) {
        std::string n = "enc" + std::to_string(i);
        Raster<T> g_a2 = maxpool2_backward(g_pooled, tr.pool_idx[i],
                                           tr.enc_a2[i].height(), tr.enc_a2[i].width());
        for (size_t j = 0; j < g_a2.size(); ++j) g_a2.raw()[j] += skip_grad[i].raw()[j];
        g_a2 = relu_backward(tr.enc_a2[i], std::move(g_a2));
        Raster<T> g_a1;
        conv_bwd(n + ".conv2", tr.enc_a1[i], g_a2, &g_a1);
        g_a1 = relu_backward(tr.enc_a1[i], std::move(g_a1));
        const Raster<T>& x = i == 0 ? tr.input : tr.pooled[i - 1];
        if (i == 0) {
            conv_bwd(n + ".conv1", x, g_a1, nullptr);
        } else {
            conv_bwd(n + ".conv1", x, g_a1, &g_pooled);
        }
    }
    return g;
}

}  // namespace orthoseg
