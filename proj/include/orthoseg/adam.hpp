#pragma once

#include <cmath>

#include "orthoseg/tensor.hpp"

namespace orthoseg {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    ParamSet<T> m, v;
    int64_t t = 0;

    static AdamState init(const ParamSet<T>& params) {
        AdamState s;
        s.m = params.zeros_like();
        s.v = params.zeros_like();
        return s;
    }
};

// One Adam update with bias correction. Rejects non-finite gradients before
// touching the parameters, so a failed step leaves them intact.
template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, AdamState<T>& st,
               const AdamConfig& cfg) {
    if (!params.same_layout(grads)) throw error("adam_step: gradient layout mismatch");
    for (size_t i = 0; i < grads.tensors.size(); ++i)
        if (!grads.tensors[i].all_finite())
            throw error("adam_step: non-finite gradient in " + grads.names[i]);

    ++st.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    for (size_t i = 0; i < params.tensors.size(); ++i) {
        T* p = params.tensors[i].data();
        const T* g = grads.tensors[i].data();
        T* m = st.m.tensors[i].data();
        T* v = st.v.tensors[i].data();
        const size_t n = params.tensors[i].size();
        for (size_t j = 0; j < n; ++j) {
            double gj = static_cast<double>(g[j]);
            double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
            double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            double step = cfg.lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg.eps);
            p[j] = static_cast<T>(p[j] - step);
        }
    }
}

}  // namespace orthoseg
