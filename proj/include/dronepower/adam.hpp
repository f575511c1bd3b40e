#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dronepower/errors.hpp"
#include "dronepower/lstm.hpp"

namespace dronepower {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment estimates, one tensor per model parameter.
struct AdamState {
    std::int64_t step = 0;
    LstmModel m;  ///< first moments
    LstmModel v;  ///< second moments

    static AdamState init(const LstmModel& model) {
        AdamState s;
        s.m = zeros_like(model);
        s.v = zeros_like(model);
        return s;
    }
};

inline double global_grad_norm(const LstmModel& grads) {
    double sq = 0.0;
    for_each_param(grads, [&](const char*, const auto& tensor) { sq += tensor.squaredNorm(); });
    return std::sqrt(sq);
}

/// Scales all gradients so their global norm is at most `max_norm`.
inline void clip_gradients(LstmModel& grads, double max_norm) {
    const double norm = global_grad_norm(grads);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for_each_param(grads, [&](const char*, auto& tensor) { tensor *= scale; });
    }
}

/// One bias-corrected Adam update over every model parameter.
inline void adam_step(LstmModel& model, const LstmModel& grads, AdamState& state,
                      const AdamConfig& cfg) {
    if (!(cfg.learning_rate > 0)) {
        throw InvalidParameterError("adam_step: learning_rate must be > 0");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    struct Slot {
        double* w;
        const double* g;
        double* m;
        double* v;
        Eigen::Index n;
    };
    // Walk the four models in lockstep; for_each_param guarantees one order.
    std::vector<Slot> slots;
    for_each_param(model, [&](const char*, auto& t) {
        slots.push_back({t.data(), nullptr, nullptr, nullptr, t.size()});
    });
    std::size_t i = 0;
    for_each_param(grads, [&](const char*, const auto& t) { slots[i++].g = t.data(); });
    i = 0;
    for_each_param(state.m, [&](const char*, auto& t) { slots[i++].m = t.data(); });
    i = 0;
    for_each_param(state.v, [&](const char*, auto& t) { slots[i++].v = t.data(); });

    for (const Slot& s : slots) {
        for (Eigen::Index k = 0; k < s.n; ++k) {
            const double grad = s.g[k];
            s.m[k] = cfg.beta1 * s.m[k] + (1.0 - cfg.beta1) * grad;
            s.v[k] = cfg.beta2 * s.v[k] + (1.0 - cfg.beta2) * grad * grad;
            const double m_hat = s.m[k] / bc1;
            const double v_hat = s.v[k] / bc2;
            s.w[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

}  // namespace dronepower
