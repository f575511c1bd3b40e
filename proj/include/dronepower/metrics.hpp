#pragma once

#include <cmath>
#include <span>

#include "dronepower/errors.hpp"

namespace dronepower {

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.empty() || pred.size() != truth.size()) {
        throw InvalidParameterError("rmse: empty input or length mismatch");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - truth[i];
        sq += r * r;
    }
    return std::sqrt(sq / static_cast<double>(pred.size()));
}

inline double mae(std::span<const double> pred, std::span<const double> truth) {
    if (pred.empty() || pred.size() != truth.size()) {
        throw InvalidParameterError("mae: empty input or length mismatch");
    }
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        abs_sum += std::abs(pred[i] - truth[i]);
    }
    return abs_sum / static_cast<double>(pred.size());
}

}  // namespace dronepower
