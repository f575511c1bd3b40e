#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dronepower/analytic.hpp"
#include "dronepower/metrics.hpp"
#include "dronepower/telemetry.hpp"
#include "dronepower/train.hpp"
#include "dronepower/windowing.hpp"

namespace dronepower {

// ---------------------------------------------------------------------------
// Feeding the analytic models from telemetry.
// ---------------------------------------------------------------------------

struct AirspeedResult {
    double v_air = 0.0;  ///< m/s, horizontal airspeed magnitude
    double alpha = 0.0;  ///< rad, pitch extracted from the orientation quaternion
    bool quat_fallback = false;  ///< true when a degenerate quaternion forced alpha = 0
};

/// Wind vector in the horizontal plane (east, north), blowing toward
/// wind_angle measured clockwise from north.
inline std::pair<double, double> wind_vector(const FlightSample& s) {
    const double rad = s.wind_angle * M_PI / 180.0;
    return {s.wind_speed * std::sin(rad), s.wind_speed * std::cos(rad)};
}

/// Horizontal airspeed |v_ground - v_wind| and angle of attack from pitch.
inline AirspeedResult airspeed_from_sample(const FlightSample& s) {
    AirspeedResult r;
    const auto [wx, wy] = wind_vector(s);
    const double ax = s.velocity_x - wx;
    const double ay = s.velocity_y - wy;
    r.v_air = std::hypot(ax, ay);

    const double qx = s.orientation_x;
    const double qy = s.orientation_y;
    const double qz = s.orientation_z;
    const double qw = s.orientation_w;
    const double norm_sq = qx * qx + qy * qy + qz * qz + qw * qw;
    if (!(std::isfinite(norm_sq)) || norm_sq < 1e-6) {
        r.alpha = 0.0;
        r.quat_fallback = true;
        return r;
    }
    // Pitch of the aerospace yaw-pitch-roll decomposition.
    const double sin_pitch = std::clamp(2.0 * (qw * qy - qz * qx) / norm_sq, -1.0, 1.0);
    r.alpha = std::asin(sin_pitch);
    // Keep strictly inside the validity range of the induced-power model.
    constexpr double kAlphaLimit = M_PI / 2 - 1e-6;
    r.alpha = std::clamp(r.alpha, -kAlphaLimit, kAlphaLimit);
    return r;
}

/// Headwind component for the D'Andrea wind variant: positive when the wind
/// opposes the direction of travel. At (near) zero ground speed there is no
/// travel direction and the full wind magnitude is used.
inline double headwind_component(const FlightSample& s) {
    const auto [wx, wy] = wind_vector(s);
    const double vg = std::hypot(s.velocity_x, s.velocity_y);
    if (vg < 1e-9) {
        return std::hypot(wx, wy);
    }
    return -(wx * s.velocity_x + wy * s.velocity_y) / vg;
}

// ---------------------------------------------------------------------------
// Model comparison on one held-out flight.
// ---------------------------------------------------------------------------

struct ComparisonRow {
    std::string model;
    double rmse = 0.0;  ///< watts
    double mae = 0.0;   ///< watts
    std::size_t n = 0;  ///< samples scored
    bool ok = true;
    std::string note;  ///< failure reason when !ok
};

inline const std::vector<std::string>& comparison_model_names() {
    static const std::vector<std::string> names = {
        "dandrea", "dandrea_headwind", "dorling", "stolaroff",
        "kirchstein", "tseng", "lstm",
    };
    return names;
}

/// Seven prediction rows over one flight, scored against the power label on
/// the common horizon (samples T-1 .. end, labeled only) so all models see
/// identical timestamps. Analytic models run quasi-statically per sample
/// with the payload mass taken from telemetry; a model that throws yields a
/// row marked unavailable instead of aborting the comparison.
inline std::vector<ComparisonRow> compare_models(const FlightRecord& flight,
                                                 const DroneParams& params,
                                                 const LstmModel& model,
                                                 const Scaler& scaler,
                                                 std::size_t window_len) {
    if (flight.samples.size() < window_len) {
        throw DataError("compare_models: flight " + flight.flight_id + " is shorter than " +
                        std::to_string(window_len) + " samples");
    }

    // Common horizon: indices with a usable label, skipping the LSTM warm-up.
    std::vector<std::size_t> horizon;
    for (std::size_t i = window_len - 1; i < flight.samples.size(); ++i) {
        if (flight.samples[i].has_label()) {
            horizon.push_back(i);
        }
    }
    if (horizon.empty()) {
        throw DataError("compare_models: no labeled samples on the comparison horizon");
    }

    std::vector<double> truth;
    truth.reserve(horizon.size());
    for (const std::size_t i : horizon) {
        truth.push_back(power_label(flight.samples[i]));
    }

    auto score = [&](const std::string& name, auto&& predict_at) {
        ComparisonRow row;
        row.model = name;
        std::vector<double> pred;
        pred.reserve(horizon.size());
        try {
            for (const std::size_t i : horizon) {
                pred.push_back(predict_at(i));
            }
            row.rmse = rmse(pred, truth);
            row.mae = mae(pred, truth);
            row.n = horizon.size();
        } catch (const Error& e) {
            row.ok = false;
            row.note = e.what();
        }
        return row;
    };

    auto params_at = [&](std::size_t i) {
        DroneParams p = params;
        p.m_payload = flight.samples[i].payload / 1000.0;  // grams -> kg
        return p;
    };

    std::vector<ComparisonRow> rows;
    rows.push_back(score("dandrea", [&](std::size_t i) {
        return power_dandrea(params_at(i), airspeed_from_sample(flight.samples[i]).v_air);
    }));
    rows.push_back(score("dandrea_headwind", [&](std::size_t i) {
        const FlightSample& s = flight.samples[i];
        const double vg = std::hypot(s.velocity_x, s.velocity_y);
        return power_dandrea_headwind(params_at(i), vg, headwind_component(s));
    }));
    rows.push_back(score("dorling", [&](std::size_t i) { return power_dorling(params_at(i)); }));
    rows.push_back(score("stolaroff", [&](std::size_t i) {
        const AirspeedResult a = airspeed_from_sample(flight.samples[i]);
        return power_stolaroff(params_at(i), a.v_air, a.alpha);
    }));
    rows.push_back(score("kirchstein", [&](std::size_t i) {
        return power_kirchstein(params_at(i), airspeed_from_sample(flight.samples[i]).v_air);
    }));
    rows.push_back(score("tseng", [&](std::size_t i) {
        const FlightSample& s = flight.samples[i];
        return power_tseng(airspeed_from_sample(s).v_air, s.payload);
    }));

    ComparisonRow lstm_row;
    lstm_row.model = "lstm";
    try {
        const PredictionSeries series = predict_series(flight, model, scaler, window_len);
        std::vector<double> pred;
        pred.reserve(horizon.size());
        for (const std::size_t i : horizon) {
            pred.push_back(series.watts[i]);
        }
        lstm_row.rmse = rmse(pred, truth);
        lstm_row.mae = mae(pred, truth);
        lstm_row.n = horizon.size();
    } catch (const Error& e) {
        lstm_row.ok = false;
        lstm_row.note = e.what();
    }
    rows.push_back(std::move(lstm_row));
    return rows;
}

// ---------------------------------------------------------------------------
// Grid search with flight-level k-fold cross-validation.
// ---------------------------------------------------------------------------

struct GridPoint {
    double dropout_rate = 0.5;
    double learning_rate = 0.001;
    int batch_size = 128;
};

/// The six hyperparameter combinations evaluated in the reference study.
inline std::vector<GridPoint> default_grid() {
    return {
        {0.2, 0.001, 128}, {0.2, 0.0001, 128}, {0.5, 0.001, 128},
        {0.5, 0.0001, 128}, {0.5, 0.01, 128},  {0.5, 0.001, 64},
    };
}

struct GridResult {
    GridPoint point;
    double avg_rmse = 0.0;  ///< watts, mean over folds
    double avg_mae = 0.0;   ///< watts, mean over folds
    std::size_t folds = 0;
    std::vector<double> fold_rmse;
    std::vector<double> fold_mae;
    bool ok = true;
    std::string note;
};

/// Validation metrics (watts) of one train/validate run.
inline std::pair<double, double> validate_fold(const std::vector<FlightRecord>& flights,
                                               const std::vector<std::size_t>& train_flights,
                                               const std::vector<std::size_t>& val_flights,
                                               std::size_t window_len, std::size_t stride,
                                               const TrainConfig& config,
                                               const ModelConfig& arch) {
    std::vector<FlightRecord> train_set, val_set;
    for (const std::size_t i : train_flights) {
        train_set.push_back(flights[i]);
    }
    for (const std::size_t i : val_flights) {
        val_set.push_back(flights[i]);
    }

    const Scaler scaler = fit_scaler(train_set);
    const WindowBatch train_batch =
        apply_scaler(build_window_batch(train_set, window_len, stride), scaler);
    const WindowBatch val_batch =
        apply_scaler(build_window_batch(val_set, window_len, stride), scaler);
    if (train_batch.windows.empty() || val_batch.windows.empty()) {
        throw DataError("validate_fold: a fold produced no windows");
    }

    // In-fold validation split for the epoch-wise loss curve: the last 10%
    // of training windows (at least one).
    std::vector<std::size_t> train_idx(train_batch.windows.size());
    std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
    const std::size_t holdout = std::max<std::size_t>(1, train_idx.size() / 10);
    const std::vector<std::size_t> inner_val(train_idx.end() - static_cast<std::ptrdiff_t>(holdout),
                                             train_idx.end());
    train_idx.resize(train_idx.size() - holdout);
    if (train_idx.empty()) {
        throw DataError("validate_fold: not enough training windows");
    }

    const TrainResult trained = train(train_batch, config, train_idx, inner_val, arch);

    std::vector<std::size_t> val_idx(val_batch.windows.size());
    std::iota(val_idx.begin(), val_idx.end(), std::size_t{0});
    const Eigen::VectorXd pred_norm = predict_windows(trained.model, val_batch, val_idx);

    std::vector<double> pred_watts(val_idx.size());
    std::vector<double> truth_watts(val_idx.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
        pred_watts[i] = scaler.invert_target(pred_norm[static_cast<Eigen::Index>(i)]);
        truth_watts[i] = scaler.invert_target(val_batch.windows[i].target);
    }
    return {rmse(pred_watts, truth_watts), mae(pred_watts, truth_watts)};
}

/// Cross-validated grid search over flights. Folds are split by flight id
/// so no flight leaks between train and validation. Rows come back sorted
/// by avg MAE ascending (RMSE, then grid coordinates, break ties); a failed
/// cell is recorded and sorted last rather than aborting the others.
inline std::vector<GridResult> grid_search(const std::vector<GridPoint>& grid,
                                           const std::vector<FlightRecord>& flights,
                                           std::size_t k, std::size_t window_len,
                                           std::size_t stride, const TrainConfig& base_config,
                                           const ModelConfig& arch) {
    if (grid.empty()) {
        throw InvalidParameterError("grid_search: empty grid");
    }
    const auto folds = kfold_split(flights.size(), k, base_config.seed);

    std::vector<GridResult> results;
    for (const GridPoint& point : grid) {
        GridResult result;
        result.point = point;
        TrainConfig config = base_config;
        config.dropout_rate = point.dropout_rate;
        config.learning_rate = point.learning_rate;
        config.batch_size = point.batch_size;
        try {
            for (std::size_t f = 0; f < folds.size(); ++f) {
                std::vector<std::size_t> train_flights;
                for (std::size_t other = 0; other < folds.size(); ++other) {
                    if (other != f) {
                        train_flights.insert(train_flights.end(), folds[other].begin(),
                                             folds[other].end());
                    }
                }
                const auto [fold_rmse, fold_mae] =
                    validate_fold(flights, train_flights, folds[f], window_len, stride,
                                  config, arch);
                result.fold_rmse.push_back(fold_rmse);
                result.fold_mae.push_back(fold_mae);
            }
            result.folds = folds.size();
            double rmse_sum = 0.0, mae_sum = 0.0;
            for (std::size_t f = 0; f < result.fold_rmse.size(); ++f) {
                rmse_sum += result.fold_rmse[f];
                mae_sum += result.fold_mae[f];
            }
            result.avg_rmse = rmse_sum / static_cast<double>(result.fold_rmse.size());
            result.avg_mae = mae_sum / static_cast<double>(result.fold_mae.size());
        } catch (const Error& e) {
            result.ok = false;
            result.note = e.what();
        }
        results.push_back(std::move(result));
    }

    std::sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
        if (a.ok != b.ok) {
            return a.ok;
        }
        if (a.avg_mae != b.avg_mae) {
            return a.avg_mae < b.avg_mae;
        }
        if (a.avg_rmse != b.avg_rmse) {
            return a.avg_rmse < b.avg_rmse;
        }
        if (a.point.dropout_rate != b.point.dropout_rate) {
            return a.point.dropout_rate < b.point.dropout_rate;
        }
        if (a.point.learning_rate != b.point.learning_rate) {
            return a.point.learning_rate < b.point.learning_rate;
        }
        return a.point.batch_size < b.point.batch_size;
    });
    return results;
}

/// Index of the selected optimum: minimum avg MAE, RMSE as tiebreaker.
/// With rows already sorted that is the first healthy row.
inline std::size_t select_best(const std::vector<GridResult>& results) {
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].ok) {
            return i;
        }
    }
    throw DataError("select_best: every grid cell failed");
}

}  // namespace dronepower
