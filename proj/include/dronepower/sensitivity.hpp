#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dronepower/errors.hpp"
#include "dronepower/io_util.hpp"
#include "dronepower/telemetry.hpp"
#include "dronepower/windowing.hpp"

namespace dronepower {

inline constexpr std::array<const char*, 5> kStepLabels = {
    "Step-1", "Step-1/2", "Step 0", "Step+1/2", "Step+1",
};

/// Five perturbation levels for one feature: the dataset extremes, their
/// mean, and the midpoints between mean and extremes.
struct SensitivityGrid {
    std::string feature;
    std::array<double, 5> steps{};  ///< strictly increasing, physical units
};

inline SensitivityGrid make_grid(const std::string& feature, double min_value,
                                 double max_value) {
    if (!(max_value > min_value)) {
        throw InvalidParameterError("make_grid: max must be > min for feature '" + feature +
                                    "'");
    }
    const double mean = (min_value + max_value) / 2.0;
    SensitivityGrid grid;
    grid.feature = feature;
    grid.steps = {min_value, (min_value + mean) / 2.0, mean, (mean + max_value) / 2.0,
                  max_value};
    return grid;
}

struct SensitivityRow {
    std::string feature;
    std::string step_label;
    double step_value = 0.0;   ///< physical units
    double delta_watts = 0.0;  ///< vs the Step 0 baseline
};

/// Population-averaged perturbation response. For each grid step the
/// feature's column is overwritten (every time step of every baseline
/// window) with the normalized step value, predictions are averaged, and
/// the delta against the Step-0 overwrite is reported in watts. `predict`
/// maps one normalized T x 21 window to a normalized scalar.
template <typename Predictor>
std::vector<SensitivityRow> sensitivity_analysis(Predictor&& predict, const Scaler& scaler,
                                                 const std::vector<Window>& baseline_norm,
                                                 const std::vector<SensitivityGrid>& grids) {
    if (baseline_norm.empty()) {
        throw DataError("sensitivity_analysis: empty baseline window set");
    }
    if (!scaler.fitted()) {
        throw InvalidParameterError("sensitivity_analysis: scaler is not fitted");
    }

    auto mean_pred_watts = [&](std::size_t column, double normalized_value) {
        double sum = 0.0;
        Eigen::MatrixXd perturbed;
        for (const Window& w : baseline_norm) {
            perturbed = w.features;
            perturbed.col(static_cast<Eigen::Index>(column)).setConstant(normalized_value);
            sum += scaler.invert_target(predict(perturbed));
        }
        return sum / static_cast<double>(baseline_norm.size());
    };

    std::vector<SensitivityRow> rows;
    for (const SensitivityGrid& grid : grids) {
        const std::size_t column = feature_index(grid.feature);
        const double baseline =
            mean_pred_watts(column, scaler.apply_feature(column, grid.steps[2]));
        for (std::size_t s = 0; s < grid.steps.size(); ++s) {
            SensitivityRow row;
            row.feature = grid.feature;
            row.step_label = kStepLabels[s];
            row.step_value = grid.steps[s];
            row.delta_watts =
                s == 2 ? 0.0
                       : mean_pred_watts(column, scaler.apply_feature(column, grid.steps[s])) -
                             baseline;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

/// Writes the divergent-bar data file: one record per (feature, step),
/// signs preserved, full double precision so the file round-trips exactly.
inline void emit_divergent_bars(const std::vector<SensitivityRow>& rows,
                                const std::filesystem::path& path) {
    if (rows.empty() || rows.size() % kStepLabels.size() != 0) {
        throw InvalidParameterError("emit_divergent_bars: rows must cover all step labels");
    }
    std::string out = "feature,step_label,step_value,delta_watts\n";
    char buf[64];
    for (const SensitivityRow& row : rows) {
        out += row.feature;
        out += ',';
        out += row.step_label;
        out += ',';
        std::snprintf(buf, sizeof(buf), "%.17g", row.step_value);
        out += buf;
        out += ',';
        std::snprintf(buf, sizeof(buf), "%.17g", row.delta_watts);
        out += buf;
        out += '\n';
    }
    write_file_text(path, out);
}

inline std::vector<SensitivityRow> parse_divergent_bars(const std::filesystem::path& path) {
    const std::string text = read_file_text(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        detail::trim(line) != "feature,step_label,step_value,delta_watts") {
        throw SchemaError(path.string() + ": bad divergent-bar header");
    }
    std::vector<SensitivityRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split(line, ',');
        if (cells.size() != 4) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 4 fields");
        }
        SensitivityRow row;
        row.feature = detail::trim(cells[0]);
        row.step_label = detail::trim(cells[1]);
        row.step_value = detail::parse_double(cells[2], path.string());
        row.delta_watts = detail::parse_double(cells[3], path.string());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace dronepower
