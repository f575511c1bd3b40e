#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "dronepower/errors.hpp"
#include "dronepower/io_util.hpp"
#include "dronepower/rng.hpp"
#include "dronepower/telemetry.hpp"

namespace dronepower {

/// Min-max normalization to [-1, 1], fitted on training rows only.
/// apply() clamps out-of-range values into [-1, 1]; invert() does not clamp.
struct Scaler {
    Eigen::VectorXd feat_min;
    Eigen::VectorXd feat_max;
    double target_min = 0.0;
    double target_max = 0.0;

    bool fitted() const { return feat_min.size() > 0; }

    double apply_feature(std::size_t idx, double x) const {
        const double lo = feat_min[static_cast<Eigen::Index>(idx)];
        const double hi = feat_max[static_cast<Eigen::Index>(idx)];
        return std::clamp(-1.0 + 2.0 * (x - lo) / (hi - lo), -1.0, 1.0);
    }

    double invert_feature(std::size_t idx, double y) const {
        const double lo = feat_min[static_cast<Eigen::Index>(idx)];
        const double hi = feat_max[static_cast<Eigen::Index>(idx)];
        return lo + (y + 1.0) * 0.5 * (hi - lo);
    }

    double apply_target(double watts) const {
        return std::clamp(-1.0 + 2.0 * (watts - target_min) / (target_max - target_min),
                          -1.0, 1.0);
    }

    double invert_target(double y) const {
        return target_min + (y + 1.0) * 0.5 * (target_max - target_min);
    }
};

/// One sliding window: T consecutive samples of one flight plus the power
/// label at the final step.
struct Window {
    Eigen::MatrixXd features;  ///< T x kNumFeatures
    double target = 0.0;       ///< watts when raw, [-1, 1] when normalized
    std::uint32_t flight_ordinal = 0;
    std::uint64_t end_sample = 0;  ///< index of the window's last sample in its flight
};

/// A set of windows plus the flight-id table the ordinals refer to.
/// `normalized` tells whether features/targets went through `scaler`.
struct WindowBatch {
    std::vector<Window> windows;
    std::vector<std::string> flight_ids;
    std::size_t window_len = 0;
    bool normalized = false;
    Scaler scaler;
};

/// Sliding windows over one flight: window i covers samples
/// [i*stride, i*stride + T); the target is the label at the final step.
/// Windows whose final sample is unlabeled are skipped. A record shorter
/// than T yields an empty result.
inline std::vector<Window> build_windows(const FlightRecord& record, std::size_t window_len,
                                         std::size_t stride = 1,
                                         std::uint32_t flight_ordinal = 0) {
    if (window_len == 0 || stride == 0) {
        throw InvalidParameterError("build_windows: window_len and stride must be >= 1");
    }
    std::vector<Window> out;
    const std::size_t n = record.samples.size();
    if (n < window_len) {
        return out;
    }
    for (std::size_t start = 0; start + window_len <= n; start += stride) {
        const FlightSample& last = record.samples[start + window_len - 1];
        if (!last.has_label()) {
            continue;
        }
        Window w;
        w.features.resize(static_cast<Eigen::Index>(window_len), kNumFeatures);
        for (std::size_t t = 0; t < window_len; ++t) {
            const auto row = feature_vector(record.samples[start + t]);
            for (std::size_t j = 0; j < kNumFeatures; ++j) {
                w.features(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = row[j];
            }
        }
        w.target = power_label(last);
        w.flight_ordinal = flight_ordinal;
        w.end_sample = start + window_len - 1;
        out.push_back(std::move(w));
    }
    return out;
}

/// Raw (unnormalized) windows over a list of flights. Windows never span a
/// flight boundary by construction.
inline WindowBatch build_window_batch(const std::vector<FlightRecord>& flights,
                                      std::size_t window_len, std::size_t stride = 1) {
    WindowBatch batch;
    batch.window_len = window_len;
    batch.normalized = false;
    for (std::size_t i = 0; i < flights.size(); ++i) {
        batch.flight_ids.push_back(flights[i].flight_id);
        std::vector<Window> w =
            build_windows(flights[i], window_len, stride, static_cast<std::uint32_t>(i));
        for (auto& win : w) {
            batch.windows.push_back(std::move(win));
        }
    }
    return batch;
}

/// Fits the scaler on raw feature rows and labeled targets of the training
/// flights only. A column with fewer than 2 distinct values is degenerate.
inline Scaler fit_scaler(const std::vector<FlightRecord>& train_flights) {
    Scaler s;
    s.feat_min = Eigen::VectorXd::Constant(kNumFeatures, std::numeric_limits<double>::infinity());
    s.feat_max = Eigen::VectorXd::Constant(kNumFeatures, -std::numeric_limits<double>::infinity());
    s.target_min = std::numeric_limits<double>::infinity();
    s.target_max = -std::numeric_limits<double>::infinity();

    std::size_t rows = 0;
    std::size_t labeled = 0;
    for (const FlightRecord& flight : train_flights) {
        for (const FlightSample& sample : flight.samples) {
            const auto row = feature_vector(sample);
            for (std::size_t j = 0; j < kNumFeatures; ++j) {
                const auto idx = static_cast<Eigen::Index>(j);
                s.feat_min[idx] = std::min(s.feat_min[idx], row[j]);
                s.feat_max[idx] = std::max(s.feat_max[idx], row[j]);
            }
            ++rows;
            if (sample.has_label()) {
                const double p = power_label(sample);
                s.target_min = std::min(s.target_min, p);
                s.target_max = std::max(s.target_max, p);
                ++labeled;
            }
        }
    }
    if (rows < 2) {
        throw DataError("fit_scaler: need at least 2 training rows, got " +
                        std::to_string(rows));
    }
    if (labeled < 2) {
        throw DataError("fit_scaler: need at least 2 labeled training rows");
    }
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        const auto idx = static_cast<Eigen::Index>(j);
        if (!(s.feat_max[idx] > s.feat_min[idx])) {
            throw DataError(std::string("fit_scaler: column '") + feature_names()[j] +
                            "' is constant, cannot scale");
        }
    }
    if (!(s.target_max > s.target_min)) {
        throw DataError("fit_scaler: target (power label) is constant, cannot scale");
    }
    return s;
}

/// Returns a normalized copy of a raw batch.
inline WindowBatch apply_scaler(const WindowBatch& raw, const Scaler& scaler) {
    if (raw.normalized) {
        throw InvalidParameterError("apply_scaler: batch is already normalized");
    }
    WindowBatch out = raw;
    out.normalized = true;
    out.scaler = scaler;
    for (Window& w : out.windows) {
        for (Eigen::Index t = 0; t < w.features.rows(); ++t) {
            for (Eigen::Index j = 0; j < w.features.cols(); ++j) {
                w.features(t, j) =
                    scaler.apply_feature(static_cast<std::size_t>(j), w.features(t, j));
            }
        }
        w.target = scaler.apply_target(w.target);
    }
    return out;
}

/// Splits [0, n) into k disjoint folds whose sizes differ by at most one.
/// Deterministic under a fixed seed. Callers that must avoid leakage split
/// over flight ids and expand to windows afterwards.
inline std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_items, std::size_t k,
                                                         std::uint64_t seed) {
    if (k < 2) {
        throw InvalidParameterError("kfold_split: k must be >= 2");
    }
    if (n_items < k) {
        throw InvalidParameterError("kfold_split: n_items (" + std::to_string(n_items) +
                                    ") must be >= k (" + std::to_string(k) + ")");
    }
    std::vector<std::size_t> indices(n_items);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(indices);

    std::vector<std::vector<std::size_t>> folds(k);
    const std::size_t base = n_items / k;
    const std::size_t extra = n_items % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds[f].assign(indices.begin() + static_cast<std::ptrdiff_t>(pos),
                        indices.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return folds;
}

// ---------------------------------------------------------------------------
// Window cache file.
//
// Layout (all integers and floats little-endian):
//   magic "DPWC" | u32 version | u32 window_len | u32 n_features |
//   u64 n_windows | u64 input_hash | u32 n_flights | n_flights x (u32 len, bytes) |
//   n_windows x u32 flight_ordinal | n_windows x u64 end_sample |
//   n_windows x window_len x n_features f64 (row-major, raw units) |
//   n_windows x f64 target (watts)
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kWindowCacheVersion = 1;

inline void save_window_cache(const std::filesystem::path& path, const WindowBatch& batch,
                              std::uint64_t input_hash) {
    if (batch.normalized) {
        throw InvalidParameterError("save_window_cache: cache stores raw windows only");
    }
    ByteWriter w;
    w.bytes("DPWC", 4);
    w.u32(kWindowCacheVersion);
    w.u32(static_cast<std::uint32_t>(batch.window_len));
    w.u32(static_cast<std::uint32_t>(kNumFeatures));
    w.u64(batch.windows.size());
    w.u64(input_hash);
    w.u32(static_cast<std::uint32_t>(batch.flight_ids.size()));
    for (const std::string& id : batch.flight_ids) {
        w.str(id);
    }
    for (const Window& win : batch.windows) {
        w.u32(win.flight_ordinal);
    }
    for (const Window& win : batch.windows) {
        w.u64(win.end_sample);
    }
    for (const Window& win : batch.windows) {
        for (Eigen::Index t = 0; t < win.features.rows(); ++t) {
            for (Eigen::Index j = 0; j < win.features.cols(); ++j) {
                w.f64(win.features(t, j));
            }
        }
    }
    for (const Window& win : batch.windows) {
        w.f64(win.target);
    }
    write_file_bytes(path, w.buffer());
}

struct WindowCache {
    WindowBatch batch;
    std::uint64_t input_hash = 0;
};

inline WindowCache load_window_cache(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::string_view(magic, 4) != "DPWC") {
        throw ParseError(path.string() + ": not a window cache file");
    }
    const std::uint32_t version = r.u32();
    if (version != kWindowCacheVersion) {
        throw VersionError(path.string() + ": unsupported cache version " +
                           std::to_string(version));
    }
    WindowCache cache;
    cache.batch.window_len = r.u32();
    const std::uint32_t n_features = r.u32();
    if (n_features != kNumFeatures) {
        throw SchemaError(path.string() + ": cache has " + std::to_string(n_features) +
                          " features, expected " + std::to_string(kNumFeatures));
    }
    const std::uint64_t n_windows = r.u64();
    cache.input_hash = r.u64();
    const std::uint32_t n_flights = r.u32();
    for (std::uint32_t i = 0; i < n_flights; ++i) {
        cache.batch.flight_ids.push_back(r.str());
    }
    cache.batch.windows.resize(n_windows);
    for (auto& win : cache.batch.windows) {
        win.flight_ordinal = r.u32();
    }
    for (auto& win : cache.batch.windows) {
        win.end_sample = r.u64();
    }
    for (auto& win : cache.batch.windows) {
        win.features.resize(static_cast<Eigen::Index>(cache.batch.window_len), kNumFeatures);
        for (Eigen::Index t = 0; t < win.features.rows(); ++t) {
            for (Eigen::Index j = 0; j < win.features.cols(); ++j) {
                win.features(t, j) = r.f64();
            }
        }
    }
    for (auto& win : cache.batch.windows) {
        win.target = r.f64();
    }
    if (r.remaining() != 0) {
        throw ParseError(path.string() + ": trailing bytes in cache file");
    }
    return cache;
}

}  // namespace dronepower
