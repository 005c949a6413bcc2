#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "orthoseg/raster.hpp"

namespace orthoseg {

// Flat n-d tensor for network parameters (conv kernels are
// [out_c, in_c, kh, kw], biases [out_c]).
template <typename T>
struct Tensor {
    std::vector<int> dims;
    AlignedVec<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
        size_t n = 1;
        for (int x : dims) n *= static_cast<size_t>(x);
        v.assign(n, T(0));
    }

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }

    bool all_finite() const {
        for (const T& x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(dims);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

// Ordered, named parameter collection. Iteration order is fixed by
// construction and shared by the optimizer and the checkpoint format.
template <typename T>
struct ParamSet {
    std::vector<std::string> names;
    std::vector<Tensor<T>> tensors;

    size_t count() const { return tensors.size(); }

    void add(std::string name, Tensor<T> t) {
        names.push_back(std::move(name));
        tensors.push_back(std::move(t));
    }

    int index_of(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }

    Tensor<T>& operator[](const std::string& name) {
        int i = index_of(name);
        if (i < 0) throw error("ParamSet: unknown parameter " + name);
        return tensors[i];
    }
    const Tensor<T>& operator[](const std::string& name) const {
        int i = index_of(name);
        if (i < 0) throw error("ParamSet: unknown parameter " + name);
        return tensors[i];
    }

    ParamSet zeros_like() const {
        ParamSet z;
        z.names = names;
        z.tensors.reserve(tensors.size());
        for (const auto& t : tensors) z.tensors.emplace_back(t.dims);
        return z;
    }

    bool same_layout(const ParamSet& o) const {
        if (names != o.names) return false;
        for (size_t i = 0; i < tensors.size(); ++i)
            if (!tensors[i].same_shape(o.tensors[i])) return false;
        return true;
    }

    size_t scalar_count() const {
        size_t n = 0;
        for (const auto& t : tensors) n += t.size();
        return n;
    }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        out.names = names;
        out.tensors.reserve(tensors.size());
        for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
        return out;
    }
};

}  // namespace orthoseg
