#pragma once

#include <cmath>
#include <cstdint>
#include <new>
#include <stdexcept>
#include <vector>

namespace orthoseg {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 64-byte-aligned storage for everything that reaches a SIMD kernel. With
// plain malloc the alignment of a buffer varies run to run, and vectorized
// reductions then peel differently, breaking bit-for-bit reproducibility.
template <typename T, size_t Align = 64>
struct AlignedAllocator {
    using value_type = T;
    template <typename U>
    struct rebind {
        using other = AlignedAllocator<U, Align>;
    };

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U, Align>&) {}

    T* allocate(size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Align)));
    }
    void deallocate(T* p, size_t) { ::operator delete(p, std::align_val_t(Align)); }

    template <typename U>
    bool operator==(const AlignedAllocator<U, Align>&) const {
        return true;
    }
};

template <typename T>
using AlignedVec = std::vector<T, AlignedAllocator<T>>;

// A pixel embedding (or an object mean) collapsed to numerical zero; raised at
// the loss/postprocess boundary instead of silently clamping.
struct degenerate_embedding_error : error {
    using error::error;
};

// Planar raster: channel-major storage, each channel a contiguous row-major
// plane. Index of (c, y, x) is (c*height + y)*width + x.
template <typename T>
class Raster {
public:
    Raster() = default;

    Raster(int height, int width, int channels = 1, T fill = T(0))
        : height_(height), width_(width), channels_(channels) {
        if (height <= 0 || width <= 0 || channels <= 0)
            throw error("Raster: dimensions must be positive");
        data_.assign(static_cast<size_t>(height) * width * channels, fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    size_t size() const { return data_.size(); }
    size_t plane_size() const { return static_cast<size_t>(height_) * width_; }
    bool empty() const { return data_.empty(); }

    T& at(int c, int y, int x) {
        return data_[(static_cast<size_t>(c) * height_ + y) * width_ + x];
    }
    const T& at(int c, int y, int x) const {
        return data_[(static_cast<size_t>(c) * height_ + y) * width_ + x];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* plane(int c) { return data_.data() + static_cast<size_t>(c) * plane_size(); }
    const T* plane(int c) const { return data_.data() + static_cast<size_t>(c) * plane_size(); }

    AlignedVec<T>& raw() { return data_; }
    const AlignedVec<T>& raw() const { return data_; }

    bool same_shape(const Raster& o) const {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }
    bool same_extent(const Raster& o) const {
        return height_ == o.height_ && width_ == o.width_;
    }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Raster<U> cast() const {
        Raster<U> out(height_, width_, channels_);
        for (size_t i = 0; i < data_.size(); ++i)
            out.raw()[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    int height_ = 0, width_ = 0, channels_ = 0;
    AlignedVec<T> data_;
};

// Network input images, values in [0,1].
using ImageGrid = Raster<float>;
// Binary masks: nonzero = true.
using Mask = Raster<uint8_t>;

// Per-pixel instance ids. 0 is background, objects are positive; after
// relabel_sequential the positive ids present are exactly 1..K.
class LabelMap {
public:
    LabelMap() = default;

    LabelMap(int height, int width, uint32_t fill = 0)
        : height_(height), width_(width) {
        if (height <= 0 || width <= 0)
            throw error("LabelMap: dimensions must be positive");
        labels_.assign(static_cast<size_t>(height) * width, fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }

    uint32_t& at(int y, int x) { return labels_[static_cast<size_t>(y) * width_ + x]; }
    const uint32_t& at(int y, int x) const { return labels_[static_cast<size_t>(y) * width_ + x]; }

    uint32_t* data() { return labels_.data(); }
    const uint32_t* data() const { return labels_.data(); }
    std::vector<uint32_t>& raw() { return labels_; }
    const std::vector<uint32_t>& raw() const { return labels_; }

    bool same_extent(const LabelMap& o) const {
        return height_ == o.height_ && width_ == o.width_;
    }

    uint32_t max_label() const {
        uint32_t m = 0;
        for (uint32_t v : labels_) m = std::max(m, v);
        return m;
    }

    // Pixel count per id, indexed 0..max_label.
    std::vector<size_t> label_sizes() const {
        std::vector<size_t> sizes(max_label() + 1, 0);
        for (uint32_t v : labels_) ++sizes[v];
        return sizes;
    }

    bool operator==(const LabelMap& o) const {
        return height_ == o.height_ && width_ == o.width_ && labels_ == o.labels_;
    }

private:
    int height_ = 0, width_ = 0;
    std::vector<uint32_t> labels_;
};

// ---- shared geometry helpers (flips, rotations, padding) ----
// Used by augmentation; label-safe transforms only. The plane_* shims give
// uniform element access over Raster<T> and LabelMap.

template <typename T> inline int plane_count(const Raster<T>& r) { return r.channels(); }
inline int plane_count(const LabelMap&) { return 1; }
template <typename T> inline T& plane_at(Raster<T>& r, int c, int y, int x) { return r.at(c, y, x); }
template <typename T> inline const T& plane_at(const Raster<T>& r, int c, int y, int x) { return r.at(c, y, x); }
inline uint32_t& plane_at(LabelMap& m, int, int y, int x) { return m.at(y, x); }
inline const uint32_t& plane_at(const LabelMap& m, int, int y, int x) { return m.at(y, x); }

template <typename T> inline Raster<T> make_like(const Raster<T>&, int h, int w, int c) { return Raster<T>(h, w, c); }
inline LabelMap make_like(const LabelMap&, int h, int w, int) { return LabelMap(h, w); }

template <typename R>
R flip_horizontal(const R& in) {
    R out = in;
    for (int c = 0; c < plane_count(in); ++c)
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x)
                plane_at(out, c, y, x) = plane_at(in, c, y, in.width() - 1 - x);
    return out;
}

template <typename R>
R flip_vertical(const R& in) {
    R out = in;
    for (int c = 0; c < plane_count(in); ++c)
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x)
                plane_at(out, c, y, x) = plane_at(in, c, in.height() - 1 - y, x);
    return out;
}

// Counter-clockwise quarter turns: out(y, x) = in(x, H_out - 1 - y) for k=1.
template <typename R>
R rot90(const R& in, int quarter_turns) {
    int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return in;
    R tmp = in;
    for (int t = 0; t < k; ++t) {
        R out = make_like(tmp, tmp.width(), tmp.height(), plane_count(tmp));
        for (int c = 0; c < plane_count(tmp); ++c)
            for (int y = 0; y < out.height(); ++y)
                for (int x = 0; x < out.width(); ++x)
                    plane_at(out, c, y, x) = plane_at(tmp, c, x, out.height() - 1 - y);
        tmp = std::move(out);
    }
    return tmp;
}

// Pads on the bottom/right so both extents are multiples of m.
template <typename R>
R pad_to_multiple(const R& in, int m) {
    int h = (in.height() + m - 1) / m * m;
    int w = (in.width() + m - 1) / m * m;
    if (h == in.height() && w == in.width()) return in;
    R out = make_like(in, h, w, plane_count(in));
    for (int c = 0; c < plane_count(in); ++c)
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x)
                plane_at(out, c, y, x) = plane_at(in, c, y, x);
    return out;
}

template <typename R>
R crop_to(const R& in, int h, int w) {
    if (h > in.height() || w > in.width())
        throw error("crop_to: target larger than source");
    if (h == in.height() && w == in.width()) return in;
    R out = make_like(in, h, w, plane_count(in));
    for (int c = 0; c < plane_count(in); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                plane_at(out, c, y, x) = plane_at(in, c, y, x);
    return out;
}

}  // namespace orthoseg
