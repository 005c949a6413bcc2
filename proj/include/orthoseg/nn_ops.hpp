#pragma once

#include <Eigen/Core>
#include <cstring>
#include <vector>

#include "orthoseg/raster.hpp"
#include "orthoseg/tensor.hpp"

// Layer primitives for the fixed architecture: 3x3 stride-1 zero-padded
// convolution, relu, 2x2 max pooling, nearest-neighbor x2 upsampling and
// channel concatenation, each with a matching hand-derived backward pass.
// Convolutions are lowered to GEMM (im2col); Eigen supplies the kernel.

namespace orthoseg {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

// col is (in_c*9) x (h*w); row c*9 + (dy+1)*3 + (dx+1) holds the input plane c
// shifted by (dy, dx) with zero fill.
template <typename T>
void im2col3x3(const Raster<T>& x, AlignedVec<T>& col) {
    const int h = x.height(), w = x.width(), c = x.channels();
    const size_t hw = x.plane_size();
    col.assign(static_cast<size_t>(c) * 9 * hw, T(0));
    for (int ci = 0; ci < c; ++ci) {
        const T* src = x.plane(ci);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                T* dst = col.data() + (static_cast<size_t>(ci) * 9 + (dy + 1) * 3 + (dx + 1)) * hw;
                for (int y = 0; y < h; ++y) {
                    int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    if (x1 > x0)
                        std::memcpy(dst + static_cast<size_t>(y) * w + x0,
                                    src + static_cast<size_t>(sy) * w + x0 + dx,
                                    static_cast<size_t>(x1 - x0) * sizeof(T));
                }
            }
        }
    }
}

template <typename T>
void col2im3x3(const AlignedVec<T>& col, Raster<T>& gx) {
    const int h = gx.height(), w = gx.width(), c = gx.channels();
    const size_t hw = gx.plane_size();
    for (int ci = 0; ci < c; ++ci) {
        T* dst = gx.plane(ci);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const T* src = col.data() + (static_cast<size_t>(ci) * 9 + (dy + 1) * 3 + (dx + 1)) * hw;
                for (int y = 0; y < h; ++y) {
                    int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    T* drow = dst + static_cast<size_t>(sy) * w + dx;
                    const T* srow = src + static_cast<size_t>(y) * w;
                    for (int xx = x0; xx < x1; ++xx) drow[xx] += srow[xx];
                }
            }
        }
    }
}

}  // namespace detail

// y = w * x + b with w: [out_c, in_c, 3, 3], b: [out_c].
template <typename T>
Raster<T> conv3x3_forward(const Raster<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (w.dims.size() != 4 || w.dims[2] != 3 || w.dims[3] != 3)
        throw error("conv3x3: kernel must be [out_c, in_c, 3, 3]");
    if (w.dims[1] != x.channels())
        throw error("conv3x3: input channel mismatch");
    const int out_c = w.dims[0], in_c = w.dims[1];
    const size_t hw = x.plane_size();

    AlignedVec<T> col;
    detail::im2col3x3(x, col);

    Raster<T> y(x.height(), x.width(), out_c);
    Eigen::Map<const MatRM<T>> wm(w.data(), out_c, in_c * 9);
    Eigen::Map<const MatRM<T>> cm(col.data(), in_c * 9, static_cast<Eigen::Index>(hw));
    Eigen::Map<MatRM<T>> ym(y.data(), out_c, static_cast<Eigen::Index>(hw));
    ym.noalias() = wm * cm;
    for (int oc = 0; oc < out_c; ++oc)
        ym.row(oc).array() += b.v[oc];
    return y;
}

// Accumulates nothing: gx/gw/gb are written fresh. Pass nullptr for gx at the
// network input.
template <typename T>
void conv3x3_backward(const Raster<T>& x, const Tensor<T>& w, const Raster<T>& gy,
                      Raster<T>* gx, Tensor<T>& gw, Tensor<T>& gb) {
    const int out_c = w.dims[0], in_c = w.dims[1];
    const size_t hw = x.plane_size();

    AlignedVec<T> col;
    detail::im2col3x3(x, col);

    Eigen::Map<const MatRM<T>> gym(gy.data(), out_c, static_cast<Eigen::Index>(hw));
    Eigen::Map<const MatRM<T>> cm(col.data(), in_c * 9, static_cast<Eigen::Index>(hw));

    gw = Tensor<T>(w.dims);
    Eigen::Map<MatRM<T>> gwm(gw.data(), out_c, in_c * 9);
    gwm.noalias() = gym * cm.transpose();

    gb = Tensor<T>({out_c});
    for (int oc = 0; oc < out_c; ++oc) gb.v[oc] = gym.row(oc).sum();

    if (gx) {
        AlignedVec<T> gcol(static_cast<size_t>(in_c) * 9 * hw);
        Eigen::Map<const MatRM<T>> wm(w.data(), out_c, in_c * 9);
        Eigen::Map<MatRM<T>> gcm(gcol.data(), in_c * 9, static_cast<Eigen::Index>(hw));
        gcm.noalias() = wm.transpose() * gym;
        *gx = Raster<T>(x.height(), x.width(), in_c);
        detail::col2im3x3(gcol, *gx);
    }
}

template <typename T>
Raster<T> relu_forward(Raster<T> x) {
    for (T& v : x.raw())
        if (v < T(0)) v = T(0);
    return x;
}

// Masks the upstream gradient with (out > 0); the subgradient at 0 is 0.
template <typename T>
Raster<T> relu_backward(const Raster<T>& out, Raster<T> g) {
    for (size_t i = 0; i < g.size(); ++i)
        if (!(out.raw()[i] > T(0))) g.raw()[i] = T(0);
    return g;
}

// 2x2 max pooling, stride 2. idx records the argmax as a flat plane offset;
// ties go to the first element in (y, x) scan order, which keeps the backward
// pass deterministic.
template <typename T>
Raster<T> maxpool2_forward(const Raster<T>& x, std::vector<uint32_t>& idx) {
    if (x.height() % 2 || x.width() % 2)
        throw error("maxpool2: extent must be even");
    const int oh = x.height() / 2, ow = x.width() / 2, c = x.channels();
    Raster<T> y(oh, ow, c);
    idx.assign(static_cast<size_t>(c) * oh * ow, 0);
    for (int ci = 0; ci < c; ++ci) {
        const T* src = x.plane(ci);
        T* dst = y.plane(ci);
        uint32_t* id = idx.data() + static_cast<size_t>(ci) * oh * ow;
        for (int y0 = 0; y0 < oh; ++y0) {
            for (int x0 = 0; x0 < ow; ++x0) {
                T best = src[static_cast<size_t>(2 * y0) * x.width() + 2 * x0];
                uint32_t bi = static_cast<uint32_t>(2 * y0 * x.width() + 2 * x0);
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        uint32_t i = static_cast<uint32_t>((2 * y0 + dy) * x.width() + 2 * x0 + dx);
                        if (src[i] > best) {
                            best = src[i];
                            bi = i;
                        }
                    }
                dst[static_cast<size_t>(y0) * ow + x0] = best;
                id[static_cast<size_t>(y0) * ow + x0] = bi;
            }
        }
    }
    return y;
}

template <typename T>
Raster<T> maxpool2_backward(const Raster<T>& gy, const std::vector<uint32_t>& idx,
                            int in_h, int in_w) {
    const int c = gy.channels();
    Raster<T> gx(in_h, in_w, c, T(0));
    const size_t ohw = gy.plane_size();
    for (int ci = 0; ci < c; ++ci) {
        const T* g = gy.plane(ci);
        T* dst = gx.plane(ci);
        const uint32_t* id = idx.data() + static_cast<size_t>(ci) * ohw;
        for (size_t i = 0; i < ohw; ++i) dst[id[i]] += g[i];
    }
    return gx;
}

template <typename T>
Raster<T> upsample2_forward(const Raster<T>& x) {
    const int h = x.height(), w = x.width(), c = x.channels();
    Raster<T> y(h * 2, w * 2, c);
    for (int ci = 0; ci < c; ++ci) {
        const T* src = x.plane(ci);
        T* dst = y.plane(ci);
        for (int yy = 0; yy < 2 * h; ++yy) {
            const T* srow = src + static_cast<size_t>(yy / 2) * w;
            T* drow = dst + static_cast<size_t>(yy) * 2 * w;
            for (int xx = 0; xx < 2 * w; ++xx) drow[xx] = srow[xx / 2];
        }
    }
    return y;
}

template <typename T>
Raster<T> upsample2_backward(const Raster<T>& gy) {
    const int oh = gy.height() / 2, ow = gy.width() / 2, c = gy.channels();
    Raster<T> gx(oh, ow, c, T(0));
    for (int ci = 0; ci < c; ++ci) {
        const T* g = gy.plane(ci);
        T* dst = gx.plane(ci);
        for (int yy = 0; yy < gy.height(); ++yy)
            for (int xx = 0; xx < gy.width(); ++xx)
                dst[static_cast<size_t>(yy / 2) * ow + xx / 2] +=
                    g[static_cast<size_t>(yy) * gy.width() + xx];
    }
    return gx;
}

// [a; b] along channels, a first.
template <typename T>
Raster<T> concat_channels(const Raster<T>& a, const Raster<T>& b) {
    if (!a.same_extent(b)) throw error("concat_channels: extent mismatch");
    Raster<T> y(a.height(), a.width(), a.channels() + b.channels());
    std::memcpy(y.data(), a.data(), a.size() * sizeof(T));
    std::memcpy(y.data() + a.size(), b.data(), b.size() * sizeof(T));
    return y;
}

template <typename T>
std::pair<Raster<T>, Raster<T>> split_channels(const Raster<T>& g, int c_first) {
    Raster<T> a(g.height(), g.width(), c_first);
    Raster<T> b(g.height(), g.width(), g.channels() - c_first);
    std::memcpy(a.data(), g.data(), a.size() * sizeof(T));
    std::memcpy(b.data(), g.data() + a.size(), b.size() * sizeof(T));
    return {std::move(a), std::move(b)};
}

}  // namespace orthoseg
