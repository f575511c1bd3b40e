#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "dronepower/errors.hpp"
#include "dronepower/rng.hpp"

namespace dronepower {

// ---------------------------------------------------------------------------
// Weights. Gate pre-activations are packed as 4H rows in the fixed order
// input, forget, cell, output.
// ---------------------------------------------------------------------------

struct LstmDirWeights {
    Eigen::MatrixXd wx;  ///< 4H x input_width
    Eigen::MatrixXd wh;  ///< 4H x H
    Eigen::VectorXd b;   ///< 4H
};

struct LstmLayerWeights {
    LstmDirWeights fwd;
    LstmDirWeights bwd;
    Eigen::Index hidden = 0;
    Eigen::Index input_width = 0;
};

struct DenseHead {
    Eigen::VectorXd w;  ///< 2 * hidden(layer2)
    Eigen::VectorXd b;  ///< size 1
};

/// Two stacked bidirectional LSTM layers, dropout at the second layer's
/// output, and a tanh dense head producing one scalar per window.
struct LstmModel {
    LstmLayerWeights layer1;  ///< input width = feature count
    LstmLayerWeights layer2;  ///< input width = 2 * layer1.hidden
    DenseHead dense;
    double dropout_rate = 0.0;

    Eigen::Index hidden() const { return layer1.hidden; }
    Eigen::Index input_width() const { return layer1.input_width; }
};

struct ModelConfig {
    Eigen::Index input_width = 21;
    Eigen::Index hidden = 128;
    double dropout_rate = 0.5;
};

/// Visits every parameter tensor in the documented fixed order; this order
/// defines checkpoint layout, Adam state layout and init draw order.
template <typename Model, typename Fn>
void for_each_param(Model& m, Fn&& fn) {
    fn("layer1.fwd.wx", m.layer1.fwd.wx);
    fn("layer1.fwd.wh", m.layer1.fwd.wh);
    fn("layer1.fwd.b", m.layer1.fwd.b);
    fn("layer1.bwd.wx", m.layer1.bwd.wx);
    fn("layer1.bwd.wh", m.layer1.bwd.wh);
    fn("layer1.bwd.b", m.layer1.bwd.b);
    fn("layer2.fwd.wx", m.layer2.fwd.wx);
    fn("layer2.fwd.wh", m.layer2.fwd.wh);
    fn("layer2.fwd.b", m.layer2.fwd.b);
    fn("layer2.bwd.wx", m.layer2.bwd.wx);
    fn("layer2.bwd.wh", m.layer2.bwd.wh);
    fn("layer2.bwd.b", m.layer2.bwd.b);
    fn("dense.w", m.dense.w);
    fn("dense.b", m.dense.b);
}

inline LstmModel zeros_like(const LstmModel& m) {
    LstmModel z = m;
    for_each_param(z, [](const char*, auto& tensor) { tensor.setZero(); });
    return z;
}

namespace detail {

inline void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = rng.uniform(-bound, bound);
        }
    }
}

inline void fill_uniform(Eigen::VectorXd& v, double bound, Rng& rng) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = rng.uniform(-bound, bound);
    }
}

inline LstmDirWeights make_dir_weights(Eigen::Index input_width, Eigen::Index hidden,
                                       Rng& rng) {
    LstmDirWeights w;
    w.wx.resize(4 * hidden, input_width);
    w.wh.resize(4 * hidden, hidden);
    w.b.resize(4 * hidden);
    fill_uniform(w.wx, std::sqrt(1.0 / static_cast<double>(input_width)), rng);
    fill_uniform(w.wh, std::sqrt(1.0 / static_cast<double>(hidden)), rng);
    fill_uniform(w.b, std::sqrt(1.0 / static_cast<double>(hidden)), rng);
    // Forget-gate bias shifted to +1 so early training keeps cell state.
    w.b.segment(hidden, hidden).array() += 1.0;
    return w;
}

}  // namespace detail

/// Seeded uniform init in +-sqrt(1/fan_in) per tensor, forget bias +1.
inline LstmModel make_lstm_model(const ModelConfig& cfg, Rng& rng) {
    if (cfg.input_width < 1 || cfg.hidden < 1) {
        throw InvalidParameterError("make_lstm_model: input_width and hidden must be >= 1");
    }
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
        throw InvalidParameterError("make_lstm_model: dropout_rate must be in [0, 1)");
    }
    LstmModel m;
    m.layer1.hidden = cfg.hidden;
    m.layer1.input_width = cfg.input_width;
    m.layer1.fwd = detail::make_dir_weights(cfg.input_width, cfg.hidden, rng);
    m.layer1.bwd = detail::make_dir_weights(cfg.input_width, cfg.hidden, rng);
    m.layer2.hidden = cfg.hidden;
    m.layer2.input_width = 2 * cfg.hidden;
    m.layer2.fwd = detail::make_dir_weights(2 * cfg.hidden, cfg.hidden, rng);
    m.layer2.bwd = detail::make_dir_weights(2 * cfg.hidden, cfg.hidden, rng);
    m.dense.w.resize(2 * cfg.hidden);
    m.dense.b.resize(1);
    detail::fill_uniform(m.dense.w, std::sqrt(1.0 / (2.0 * static_cast<double>(cfg.hidden))),
                         rng);
    detail::fill_uniform(m.dense.b, std::sqrt(1.0 / (2.0 * static_cast<double>(cfg.hidden))),
                         rng);
    m.dropout_rate = cfg.dropout_rate;
    return m;
}

// ---------------------------------------------------------------------------
// Forward pass. Batched over windows: every matrix below holds one window
// per column.
// ---------------------------------------------------------------------------

namespace detail {

inline double sigmoid_scalar(double v) {
    if (v >= 0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace detail

/// Per-direction cache, indexed by sequence position (not processing step).
struct DirCache {
    std::vector<Eigen::MatrixXd> gi, gf, gg, go;  ///< gate activations, H x B
    std::vector<Eigen::MatrixXd> c, tanh_c, h;    ///< cell/output state, H x B
};

struct ForwardCache {
    std::vector<Eigen::MatrixXd> x;       ///< T of F x B: layer-1 inputs
    DirCache l1f, l1b, l2f, l2b;
    std::vector<Eigen::MatrixXd> l1_out;  ///< T of 2H x B
    Eigen::MatrixXd l2_final;             ///< 2H x B, pre-dropout
    Eigen::MatrixXd dropped;              ///< 2H x B, dense input
    Eigen::MatrixXd mask;                 ///< 2H x B keep mask; empty when unused
    Eigen::VectorXd z;                    ///< B, dense pre-activation
    Eigen::VectorXd pred;                 ///< B, tanh(z)
    bool train_mode = false;
    double keep = 1.0;
};

enum class RunMode { kTrain, kEval };

namespace detail {

/// One batched LSTM step. A = wx*x + wh*h_prev + b, gates in i,f,g,o order.
inline void cell_step(const LstmDirWeights& w, Eigen::Index hidden,
                      const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                      const Eigen::MatrixXd& c_prev, Eigen::MatrixXd& gi,
                      Eigen::MatrixXd& gf, Eigen::MatrixXd& gg, Eigen::MatrixXd& go,
                      Eigen::MatrixXd& c, Eigen::MatrixXd& tanh_c, Eigen::MatrixXd& h) {
    Eigen::MatrixXd a(4 * hidden, x.cols());
    a.noalias() = w.wx * x;
    a.noalias() += w.wh * h_prev;
    a.colwise() += w.b;
    auto sig = [](double v) { return sigmoid_scalar(v); };
    gi = a.topRows(hidden).unaryExpr(sig);
    gf = a.middleRows(hidden, hidden).unaryExpr(sig);
    gg = a.middleRows(2 * hidden, hidden).array().tanh();
    go = a.bottomRows(hidden).unaryExpr(sig);
    c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    tanh_c = c.array().tanh();
    h = go.cwiseProduct(tanh_c);
}

/// Runs one direction over the whole sequence; `reverse` processes
/// positions T-1..0. Cache entries stay indexed by sequence position.
inline void run_direction(const LstmDirWeights& w, Eigen::Index hidden,
                          const std::vector<Eigen::MatrixXd>& x, bool reverse,
                          DirCache& cache) {
    const std::size_t seq_len = x.size();
    const Eigen::Index batch = x[0].cols();
    cache.gi.resize(seq_len);
    cache.gf.resize(seq_len);
    cache.gg.resize(seq_len);
    cache.go.resize(seq_len);
    cache.c.resize(seq_len);
    cache.tanh_c.resize(seq_len);
    cache.h.resize(seq_len);

    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(hidden, batch);
    for (std::size_t step = 0; step < seq_len; ++step) {
        const std::size_t t = reverse ? seq_len - 1 - step : step;
        const std::size_t tp = reverse ? t + 1 : t - 1;
        const Eigen::MatrixXd& h_prev = step == 0 ? zero : cache.h[tp];
        const Eigen::MatrixXd& c_prev = step == 0 ? zero : cache.c[tp];
        cell_step(w, hidden, x[t], h_prev, c_prev, cache.gi[t], cache.gf[t], cache.gg[t],
                  cache.go[t], cache.c[t], cache.tanh_c[t], cache.h[t]);
    }
}

}  // namespace detail

/// Single LSTM cell step (batch of one). Returns h_t and c_t; gate values
/// land in the cache entries.
inline void lstm_cell_forward(const LstmDirWeights& w, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                              Eigen::VectorXd& h, Eigen::VectorXd& c) {
    const Eigen::Index hidden = w.wh.cols();
    if (w.wx.cols() != x.size() || h_prev.size() != hidden || c_prev.size() != hidden) {
        throw ShapeError("lstm_cell_forward: inconsistent shapes");
    }
    Eigen::MatrixXd gi, gf, gg, go, cm, tc, hm;
    detail::cell_step(w, hidden, x, h_prev, c_prev, gi, gf, gg, go, cm, tc, hm);
    h = hm.col(0);
    c = cm.col(0);
}

/// Bidirectional layer over one sequence (rows = time steps). Output row t
/// is [forward_h_t, backward_h_t].
inline Eigen::MatrixXd bilstm_layer_forward(const LstmLayerWeights& layer,
                                            const Eigen::MatrixXd& seq) {
    if (seq.rows() < 1) {
        throw ShapeError("bilstm_layer_forward: sequence must have >= 1 step");
    }
    if (seq.cols() != layer.input_width) {
        throw ShapeError("bilstm_layer_forward: expected width " +
                         std::to_string(layer.input_width) + ", got " +
                         std::to_string(seq.cols()));
    }
    const auto seq_len = static_cast<std::size_t>(seq.rows());
    std::vector<Eigen::MatrixXd> x(seq_len);
    for (std::size_t t = 0; t < seq_len; ++t) {
        x[t] = seq.row(static_cast<Eigen::Index>(t)).transpose();
    }
    DirCache f, b;
    detail::run_direction(layer.fwd, layer.hidden, x, false, f);
    detail::run_direction(layer.bwd, layer.hidden, x, true, b);
    Eigen::MatrixXd out(seq.rows(), 2 * layer.hidden);
    for (std::size_t t = 0; t < seq_len; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        out.row(ti).head(layer.hidden) = f.h[t].col(0).transpose();
        out.row(ti).tail(layer.hidden) = b.h[t].col(0).transpose();
    }
    return out;
}

/// Batched forward pass over a set of windows (each T x input_width, all the
/// same shape). In train mode with dropout_rate > 0 an inverted-dropout mask
/// is drawn from `rng` at the dense input (one column per window, drawn
/// window-major then unit-major). With mean pooling instead of a final-step
/// head the mask would have to cover the full output sequence.
inline ForwardCache forward_batch(const LstmModel& m,
                                  const std::vector<const Eigen::MatrixXd*>& windows,
                                  RunMode mode, Rng* rng,
                                  const Eigen::MatrixXd* fixed_mask = nullptr) {
    if (windows.empty()) {
        throw ShapeError("forward_batch: empty batch");
    }
    const Eigen::Index seq_len = windows[0]->rows();
    const auto batch = static_cast<Eigen::Index>(windows.size());
    if (seq_len < 1) {
        throw ShapeError("forward_batch: empty window");
    }
    for (const auto* w : windows) {
        if (w->rows() != seq_len || w->cols() != m.input_width()) {
            throw ShapeError("forward_batch: window shape mismatch, expected " +
                             std::to_string(seq_len) + " x " +
                             std::to_string(m.input_width()));
        }
    }

    ForwardCache cache;
    cache.train_mode = mode == RunMode::kTrain;
    cache.x.resize(static_cast<std::size_t>(seq_len));
    for (Eigen::Index t = 0; t < seq_len; ++t) {
        auto& xt = cache.x[static_cast<std::size_t>(t)];
        xt.resize(m.input_width(), batch);
        for (Eigen::Index b = 0; b < batch; ++b) {
            xt.col(b) = windows[static_cast<std::size_t>(b)]->row(t).transpose();
        }
    }

    const Eigen::Index h1 = m.layer1.hidden;
    detail::run_direction(m.layer1.fwd, h1, cache.x, false, cache.l1f);
    detail::run_direction(m.layer1.bwd, h1, cache.x, true, cache.l1b);
    cache.l1_out.resize(static_cast<std::size_t>(seq_len));
    for (std::size_t t = 0; t < static_cast<std::size_t>(seq_len); ++t) {
        auto& out = cache.l1_out[t];
        out.resize(2 * h1, batch);
        out.topRows(h1) = cache.l1f.h[t];
        out.bottomRows(h1) = cache.l1b.h[t];
        if (!out.allFinite()) {
            throw NumericError("non-finite activation in layer 1 at step " + std::to_string(t));
        }
    }

    const Eigen::Index h2 = m.layer2.hidden;
    detail::run_direction(m.layer2.fwd, h2, cache.l1_out, false, cache.l2f);
    detail::run_direction(m.layer2.bwd, h2, cache.l1_out, true, cache.l2b);
    const auto last = static_cast<std::size_t>(seq_len - 1);
    cache.l2_final.resize(2 * h2, batch);
    cache.l2_final.topRows(h2) = cache.l2f.h[last];
    cache.l2_final.bottomRows(h2) = cache.l2b.h[last];
    if (!cache.l2_final.allFinite()) {
        throw NumericError("non-finite activation in layer 2 at step " + std::to_string(last));
    }

    const bool use_dropout = cache.train_mode && m.dropout_rate > 0.0;
    cache.keep = 1.0 - m.dropout_rate;
    if (use_dropout) {
        if (fixed_mask != nullptr) {
            if (fixed_mask->rows() != 2 * h2 || fixed_mask->cols() != batch) {
                throw ShapeError("forward_batch: fixed dropout mask shape mismatch");
            }
            cache.mask = *fixed_mask;
        } else {
            if (rng == nullptr) {
                throw InvalidParameterError(
                    "forward_batch: train mode with dropout requires an rng");
            }
            cache.mask.resize(2 * h2, batch);
            for (Eigen::Index b = 0; b < batch; ++b) {
                for (Eigen::Index j = 0; j < 2 * h2; ++j) {
                    cache.mask(j, b) = rng->uniform() < cache.keep ? 1.0 : 0.0;
                }
            }
        }
        cache.dropped = cache.l2_final.cwiseProduct(cache.mask) / cache.keep;
    } else {
        cache.dropped = cache.l2_final;
    }

    cache.z = cache.dropped.transpose() * m.dense.w;
    cache.z.array() += m.dense.b[0];
    cache.pred = cache.z.array().tanh();
    if (!cache.pred.allFinite()) {
        throw NumericError("non-finite activation in dense head");
    }
    return cache;
}

/// Convenience wrapper: one window in, one normalized scalar out.
inline double model_forward(const LstmModel& m, const Eigen::MatrixXd& window, RunMode mode,
                            Rng* rng = nullptr, ForwardCache* cache_out = nullptr) {
    std::vector<const Eigen::MatrixXd*> batch{&window};
    ForwardCache cache = forward_batch(m, batch, mode, rng);
    const double pred = cache.pred[0];
    if (cache_out != nullptr) {
        *cache_out = std::move(cache);
    }
    return pred;
}

/// Mean of squared residuals over the batch.
inline double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
    if (pred.size() == 0 || pred.size() != target.size()) {
        throw ShapeError("mse_loss: empty batch or length mismatch");
    }
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Backpropagation through time.
// ---------------------------------------------------------------------------

namespace detail {

/// BPTT over one direction. `dh_out[t]` is the loss gradient w.r.t. the
/// direction's output at sequence position t (empty matrix = zero). Input
/// gradients accumulate into `dx` when non-null.
inline void bptt_direction(const LstmDirWeights& w, Eigen::Index hidden,
                           const DirCache& cache, const std::vector<Eigen::MatrixXd>& x,
                           bool reverse, const std::vector<Eigen::MatrixXd>& dh_out,
                           LstmDirWeights& grad, std::vector<Eigen::MatrixXd>* dx) {
    const std::size_t seq_len = x.size();
    const Eigen::Index batch = x[0].cols();
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(hidden, batch);

    Eigen::MatrixXd dh_next = zero;
    Eigen::MatrixXd dc_next = zero;
    Eigen::MatrixXd da(4 * hidden, batch);
    for (std::size_t step = seq_len; step-- > 0;) {
        const std::size_t t = reverse ? seq_len - 1 - step : step;
        const std::size_t tp = reverse ? t + 1 : t - 1;
        const Eigen::MatrixXd& h_prev = step == 0 ? zero : cache.h[tp];
        const Eigen::MatrixXd& c_prev = step == 0 ? zero : cache.c[tp];

        Eigen::MatrixXd dh = dh_next;
        if (dh_out[t].size() > 0) {
            dh += dh_out[t];
        }
        const Eigen::MatrixXd dout = dh.cwiseProduct(cache.tanh_c[t]);
        Eigen::MatrixXd dc =
            dc_next + dh.cwiseProduct(cache.go[t])
                          .cwiseProduct((1.0 - cache.tanh_c[t].array().square()).matrix());
        const Eigen::MatrixXd di = dc.cwiseProduct(cache.gg[t]);
        const Eigen::MatrixXd dg = dc.cwiseProduct(cache.gi[t]);
        const Eigen::MatrixXd df = dc.cwiseProduct(c_prev);
        dc_next = dc.cwiseProduct(cache.gf[t]);

        da.topRows(hidden) =
            di.cwiseProduct(cache.gi[t])
                .cwiseProduct((1.0 - cache.gi[t].array()).matrix());
        da.middleRows(hidden, hidden) =
            df.cwiseProduct(cache.gf[t])
                .cwiseProduct((1.0 - cache.gf[t].array()).matrix());
        da.middleRows(2 * hidden, hidden) =
            dg.cwiseProduct((1.0 - cache.gg[t].array().square()).matrix());
        da.bottomRows(hidden) =
            dout.cwiseProduct(cache.go[t])
                .cwiseProduct((1.0 - cache.go[t].array()).matrix());

        grad.wx.noalias() += da * x[t].transpose();
        grad.wh.noalias() += da * h_prev.transpose();
        grad.b += da.rowwise().sum();
        dh_next.noalias() = w.wh.transpose() * da;
        if (dx != nullptr) {
            (*dx)[t].noalias() += w.wx.transpose() * da;
        }
    }
}

}  // namespace detail

/// Full BPTT through both layers and both directions; gradients accumulate
/// into `grads` (callers zero it first). `dpred` is dL/dpred per window.
/// The dropout mask recorded in the cache is replayed exactly.
inline void backward_batch(const LstmModel& m, const ForwardCache& cache,
                           const Eigen::VectorXd& dpred, LstmModel& grads) {
    if (!cache.train_mode) {
        throw InvalidParameterError("backward_batch: cache must come from a train-mode pass");
    }
    const std::size_t seq_len = cache.x.size();
    if (seq_len == 0 || cache.pred.size() == 0) {
        throw InvalidParameterError("backward_batch: stale or empty cache");
    }
    const Eigen::Index batch = cache.pred.size();
    if (dpred.size() != batch) {
        throw ShapeError("backward_batch: dpred length mismatch");
    }

    // Dense head and tanh.
    const Eigen::VectorXd dz =
        dpred.cwiseProduct((1.0 - cache.pred.array().square()).matrix());
    grads.dense.w.noalias() += cache.dropped * dz;
    grads.dense.b[0] += dz.sum();

    Eigen::MatrixXd ddropped = m.dense.w * dz.transpose();  // 2H x B
    Eigen::MatrixXd dl2_final;
    if (cache.mask.size() > 0) {
        dl2_final = ddropped.cwiseProduct(cache.mask) / cache.keep;
    } else {
        dl2_final = std::move(ddropped);
    }

    const Eigen::Index h2 = m.layer2.hidden;
    const std::size_t last = seq_len - 1;
    std::vector<Eigen::MatrixXd> dh2_f(seq_len), dh2_b(seq_len);
    dh2_f[last] = dl2_final.topRows(h2);
    dh2_b[last] = dl2_final.bottomRows(h2);

    std::vector<Eigen::MatrixXd> dl1_out(seq_len);
    for (std::size_t t = 0; t < seq_len; ++t) {
        dl1_out[t] = Eigen::MatrixXd::Zero(2 * m.layer1.hidden, batch);
    }
    detail::bptt_direction(m.layer2.fwd, h2, cache.l2f, cache.l1_out, false, dh2_f,
                           grads.layer2.fwd, &dl1_out);
    detail::bptt_direction(m.layer2.bwd, h2, cache.l2b, cache.l1_out, true, dh2_b,
                           grads.layer2.bwd, &dl1_out);

    const Eigen::Index h1 = m.layer1.hidden;
    std::vector<Eigen::MatrixXd> dh1_f(seq_len), dh1_b(seq_len);
    for (std::size_t t = 0; t < seq_len; ++t) {
        dh1_f[t] = dl1_out[t].topRows(h1);
        dh1_b[t] = dl1_out[t].bottomRows(h1);
    }
    detail::bptt_direction(m.layer1.fwd, h1, cache.l1f, cache.x, false, dh1_f,
                           grads.layer1.fwd, nullptr);
    detail::bptt_direction(m.layer1.bwd, h1, cache.l1b, cache.x, true, dh1_b,
                           grads.layer1.bwd, nullptr);
}

}  // namespace dronepower
