#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dronepower/adam.hpp"
#include "dronepower/errors.hpp"
#include "dronepower/io_util.hpp"
#include "dronepower/lstm.hpp"
#include "dronepower/windowing.hpp"

namespace dronepower {

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 128;
    int epochs = 50;
    double dropout_rate = 0.5;
    std::uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool clip_enabled = false;
    double clip_norm = 5.0;

    void validate() const {
        if (!(learning_rate > 0)) {
            throw InvalidParameterError("TrainConfig: learning_rate must be > 0");
        }
        if (batch_size < 1) {
            throw InvalidParameterError("TrainConfig: batch_size must be >= 1");
        }
        if (epochs < 1) {
            throw InvalidParameterError("TrainConfig: epochs must be >= 1");
        }
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
            throw InvalidParameterError("TrainConfig: dropout_rate must be in [0, 1)");
        }
        if (clip_enabled && !(clip_norm > 0)) {
            throw InvalidParameterError("TrainConfig: clip_norm must be > 0");
        }
    }
};

struct TrainReport {
    std::vector<double> train_loss;     ///< mean mini-batch loss per epoch
    std::vector<double> val_loss;       ///< eval-mode loss per epoch
    std::vector<double> epoch_seconds;  ///< wall clock per epoch
    std::string checkpoint_id;          ///< CRC-32 of the final weights
};

/// Gradient accumulation splits big Adam batches into bounded forward/
/// backward chunks; the reduce order (chunk 0, 1, ...) is fixed so seeded
/// runs reproduce bit-identically.
inline constexpr std::size_t kMicroBatch = 32;

namespace detail {

inline std::vector<const Eigen::MatrixXd*> window_ptrs(const WindowBatch& batch,
                                                       std::span<const std::size_t> idx) {
    std::vector<const Eigen::MatrixXd*> ptrs;
    ptrs.reserve(idx.size());
    for (const std::size_t i : idx) {
        ptrs.push_back(&batch.windows[i].features);
    }
    return ptrs;
}

}  // namespace detail

/// Eval-mode predictions for a subset of windows (normalized units).
inline Eigen::VectorXd predict_windows(const LstmModel& model, const WindowBatch& batch,
                                       std::span<const std::size_t> idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    std::size_t done = 0;
    while (done < idx.size()) {
        const std::size_t n = std::min(kMicroBatch, idx.size() - done);
        const auto ptrs = detail::window_ptrs(batch, idx.subspan(done, n));
        const ForwardCache cache = forward_batch(model, ptrs, RunMode::kEval, nullptr);
        out.segment(static_cast<Eigen::Index>(done), static_cast<Eigen::Index>(n)) =
            cache.pred;
        done += n;
    }
    return out;
}

/// Eval-mode MSE over a subset of windows (normalized units).
inline double evaluate_mse(const LstmModel& model, const WindowBatch& batch,
                           std::span<const std::size_t> idx) {
    if (idx.empty()) {
        throw DataError("evaluate_mse: empty index set");
    }
    const Eigen::VectorXd pred = predict_windows(model, batch, idx);
    Eigen::VectorXd target(pred.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        target[static_cast<Eigen::Index>(i)] = batch.windows[idx[i]].target;
    }
    return mse_loss(pred, target);
}

struct TrainResult {
    LstmModel model;
    TrainReport report;
};

namespace detail {

inline std::string weights_crc_hex(const LstmModel& model) {
    ByteWriter w;
    for_each_param(model, [&](const char*, const auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            w.f64(t.data()[i]);
        }
    });
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", crc32(w.buffer()));
    return std::string(buf);
}

}  // namespace detail

/// Trains a fresh model on the normalized training windows. Mini-batches
/// are re-shuffled every epoch from the config seed; validation loss is
/// computed in eval mode (dropout off). Weights from the final epoch are
/// returned; there is no early stopping.
inline TrainResult train(const WindowBatch& batch, const TrainConfig& config,
                         std::span<const std::size_t> train_idx,
                         std::span<const std::size_t> val_idx,
                         const ModelConfig& arch = ModelConfig{}) {
    config.validate();
    if (!batch.normalized) {
        throw InvalidParameterError("train: window batch must be normalized");
    }
    if (train_idx.empty() || val_idx.empty()) {
        throw DataError("train: train and validation splits must be non-empty");
    }
    for (const std::size_t i : train_idx) {
        if (i >= batch.windows.size()) {
            throw InvalidParameterError("train: train index out of range");
        }
    }
    for (const std::size_t i : val_idx) {
        if (i >= batch.windows.size()) {
            throw InvalidParameterError("train: validation index out of range");
        }
    }

    Rng rng(config.seed);
    ModelConfig cfg = arch;
    cfg.dropout_rate = config.dropout_rate;
    TrainResult result;
    result.model = make_lstm_model(cfg, rng);
    AdamState adam = AdamState::init(result.model);
    const AdamConfig adam_cfg{config.learning_rate, config.beta1, config.beta2,
                              config.epsilon};

    std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
    LstmModel grads = zeros_like(result.model);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        rng.shuffle(order);

        double epoch_loss_sum = 0.0;
        std::size_t epoch_loss_count = 0;
        for (std::size_t batch_start = 0, batch_no = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(config.batch_size), ++batch_no) {
            const std::size_t batch_n = std::min(static_cast<std::size_t>(config.batch_size),
                                                 order.size() - batch_start);
            for_each_param(grads, [](const char*, auto& t) { t.setZero(); });

            double batch_sq_sum = 0.0;
            std::size_t done = 0;
            while (done < batch_n) {
                const std::size_t n = std::min(kMicroBatch, batch_n - done);
                const std::span<const std::size_t> chunk(order.data() + batch_start + done, n);
                const auto ptrs = detail::window_ptrs(batch, chunk);
                const ForwardCache cache =
                    forward_batch(result.model, ptrs, RunMode::kTrain, &rng);

                Eigen::VectorXd target(static_cast<Eigen::Index>(n));
                for (std::size_t i = 0; i < n; ++i) {
                    target[static_cast<Eigen::Index>(i)] = batch.windows[chunk[i]].target;
                }
                const Eigen::VectorXd residual = cache.pred - target;
                batch_sq_sum += residual.squaredNorm();
                // d(mean sq err over the full mini-batch) / d pred
                const Eigen::VectorXd dpred =
                    2.0 * residual / static_cast<double>(batch_n);
                backward_batch(result.model, cache, dpred, grads);
                done += n;
            }

            const double batch_loss = batch_sq_sum / static_cast<double>(batch_n);
            if (!std::isfinite(batch_loss)) {
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_no));
            }
            epoch_loss_sum += batch_loss * static_cast<double>(batch_n);
            epoch_loss_count += batch_n;

            if (config.clip_enabled) {
                clip_gradients(grads, config.clip_norm);
            }
            adam_step(result.model, grads, adam, adam_cfg);
        }

        result.report.train_loss.push_back(epoch_loss_sum /
                                           static_cast<double>(epoch_loss_count));
        result.report.val_loss.push_back(evaluate_mse(result.model, batch, val_idx));
        const auto elapsed = std::chrono::steady_clock::now() - started;
        result.report.epoch_seconds.push_back(
            std::chrono::duration<double>(elapsed).count());
    }

    result.report.checkpoint_id = detail::weights_crc_hex(result.model);
    return result;
}

/// Per-sample power predictions for one flight, in watts. The first T-1
/// samples have no full history and are NaN.
struct PredictionSeries {
    std::size_t warmup = 0;            ///< count of leading unpredicted samples
    std::vector<double> watts;         ///< one entry per sample, NaN during warmup
    std::vector<double> time_seconds;  ///< sample timestamps
};

inline PredictionSeries predict_series(const FlightRecord& flight, const LstmModel& model,
                                       const Scaler& scaler, std::size_t window_len) {
    if (flight.samples.size() < window_len) {
        throw DataError("predict_series: flight " + flight.flight_id + " has " +
                        std::to_string(flight.samples.size()) + " samples, needs >= " +
                        std::to_string(window_len));
    }
    PredictionSeries series;
    series.warmup = window_len - 1;
    const std::size_t n = flight.samples.size();
    series.watts.assign(n, std::numeric_limits<double>::quiet_NaN());
    series.time_seconds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        series.time_seconds[i] = flight.samples[i].t;
    }

    // Normalized windows with stride 1, one per predictable sample.
    std::vector<Eigen::MatrixXd> windows;
    windows.reserve(n - window_len + 1);
    for (std::size_t start = 0; start + window_len <= n; ++start) {
        Eigen::MatrixXd w(static_cast<Eigen::Index>(window_len), kNumFeatures);
        for (std::size_t t = 0; t < window_len; ++t) {
            const auto row = feature_vector(flight.samples[start + t]);
            for (std::size_t j = 0; j < kNumFeatures; ++j) {
                w(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
                    scaler.apply_feature(j, row[j]);
            }
        }
        windows.push_back(std::move(w));
    }

    std::size_t done = 0;
    while (done < windows.size()) {
        const std::size_t chunk = std::min(kMicroBatch, windows.size() - done);
        std::vector<const Eigen::MatrixXd*> ptrs;
        ptrs.reserve(chunk);
        for (std::size_t i = 0; i < chunk; ++i) {
            ptrs.push_back(&windows[done + i]);
        }
        const ForwardCache cache = forward_batch(model, ptrs, RunMode::kEval, nullptr);
        for (std::size_t i = 0; i < chunk; ++i) {
            series.watts[done + i + window_len - 1] =
                scaler.invert_target(cache.pred[static_cast<Eigen::Index>(i)]);
        }
        done += chunk;
    }
    return series;
}

}  // namespace dronepower
