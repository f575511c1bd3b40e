#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dronepower/config.hpp"
#include "dronepower/errors.hpp"

namespace dronepower {

/// One telemetry row. Feature fields follow the 21-column model schema;
/// battery voltage/current carry the power label and are NaN when the row
/// is unlabeled.
struct FlightSample {
    double t = 0.0;  ///< seconds since flight start

    double wind_speed = 0.0;  ///< m/s
    double wind_angle = 0.0;  ///< degrees from north
    double position_x = 0.0;  ///< longitude, degrees
    double position_y = 0.0;  ///< latitude, degrees
    double position_z = 0.0;  ///< altitude, m
    double orientation_x = 0.0;
    double orientation_y = 0.0;
    double orientation_z = 0.0;
    double orientation_w = 1.0;
    double velocity_x = 0.0;  ///< m/s
    double velocity_y = 0.0;
    double velocity_z = 0.0;
    double angular_x = 0.0;  ///< rad/s
    double angular_y = 0.0;
    double angular_z = 0.0;
    double lin_accel_x = 0.0;  ///< m/s^2
    double lin_accel_y = 0.0;
    double lin_accel_z = 0.0;
    double cmd_speed = 0.0;     ///< commanded ground speed, m/s
    double payload = 0.0;       ///< grams
    double cmd_altitude = 0.0;  ///< commanded altitude, m

    double battery_voltage = std::numeric_limits<double>::quiet_NaN();  ///< V
    double battery_current = std::numeric_limits<double>::quiet_NaN();  ///< A

    bool has_label() const {
        return std::isfinite(battery_voltage) && std::isfinite(battery_current) &&
               battery_voltage > 0 && battery_current >= 0;
    }
};

inline constexpr std::size_t kNumFeatures = 21;

/// Canonical feature order; every tensor in the pipeline uses it.
inline const std::array<const char*, kNumFeatures>& feature_names() {
    static const std::array<const char*, kNumFeatures> names = {
        "wind_speed",     "wind_angle",    "position_x",  "position_y",
        "position_z",     "orientation_x", "orientation_y", "orientation_z",
        "orientation_w",  "velocity_x",    "velocity_y",  "velocity_z",
        "angular_x",      "angular_y",     "angular_z",   "linear_acceleration_x",
        "linear_acceleration_y", "linear_acceleration_z", "speed", "payload",
        "altitude",
    };
    return names;
}

inline std::array<double, kNumFeatures> feature_vector(const FlightSample& s) {
    return {s.wind_speed, s.wind_angle,  s.position_x,  s.position_y,  s.position_z,
            s.orientation_x, s.orientation_y, s.orientation_z, s.orientation_w,
            s.velocity_x,  s.velocity_y,  s.velocity_z,  s.angular_x,   s.angular_y,
            s.angular_z,   s.lin_accel_x, s.lin_accel_y, s.lin_accel_z, s.cmd_speed,
            s.payload,     s.cmd_altitude};
}

/// Index of a named feature in the canonical order.
inline std::size_t feature_index(const std::string& name) {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (name == names[i]) {
            return i;
        }
    }
    throw SchemaError("unknown feature '" + name + "'");
}

/// Instantaneous electrical power. The telemetry schema carries no other
/// energy signal; swap this function to change the label definition.
inline double power_label(const FlightSample& s) {
    if (!s.has_label()) {
        throw UnlabeledSampleError("sample has no usable voltage/current label");
    }
    return s.battery_voltage * s.battery_current;
}

/// One flight's time-ordered samples.
struct FlightRecord {
    std::string flight_id;
    std::vector<FlightSample> samples;
};

/// Binds semantic field names to CSV header names. `flight_id` may be the
/// sentinel "@filename" to derive the id from the file name instead of a
/// column (useful for one-flight-per-file layouts).
struct ColumnMap {
    std::map<std::string, std::string> columns;  ///< semantic -> header
    char delimiter = ',';

    static const std::vector<std::string>& semantic_fields() {
        static const std::vector<std::string> fields = [] {
            std::vector<std::string> f = {"flight_id", "time"};
            for (const char* name : feature_names()) {
                f.emplace_back(name);
            }
            f.emplace_back("battery_voltage");
            f.emplace_back("battery_current");
            return f;
        }();
        return fields;
    }

    static ColumnMap load(const KvDocument& doc) {
        std::set<std::string> allowed(semantic_fields().begin(), semantic_fields().end());
        allowed.insert("delimiter");
        doc.require_known_keys(allowed);

        ColumnMap map;
        if (doc.has("delimiter")) {
            const std::string d = doc.get_string("delimiter");
            if (d.size() != 1) {
                throw SchemaError(doc.origin() + ": delimiter must be a single character");
            }
            map.delimiter = d[0];
        }
        for (const std::string& field : semantic_fields()) {
            map.columns[field] = doc.get_string(field);
        }
        return map;
    }

    static ColumnMap load(const std::filesystem::path& path) {
        return load(KvDocument::parse_file(path));
    }
};

/// A rejected input row.
struct RowIssue {
    std::size_t line = 0;  ///< 1-based line number in the source file
    std::string message;
};

struct ParseResult {
    std::vector<FlightRecord> flights;
    std::vector<RowIssue> issues;
    std::size_t rows_parsed = 0;
    std::size_t rows_rejected = 0;
};

namespace detail {

/// Splits one CSV record. Fields may be double-quoted; "" inside quotes is
/// an escaped quote. No multi-line fields.
inline std::vector<std::string> split_csv_row(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::optional<double> try_parse_double(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) {
        return std::nullopt;
    }
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) {
        return std::nullopt;
    }
    return v;
}

}  // namespace detail

/// Parses a delimited telemetry file into per-flight records, sorted by
/// time. Structural problems (missing mapped columns) throw SchemaError;
/// per-row problems are collected as RowIssue entries, fatal only past
/// `bad_row_cap`.
inline ParseResult parse_flight_csv(const std::filesystem::path& path,
                                    const ColumnMap& map,
                                    std::size_t bad_row_cap = 100) {
    const std::string text = read_file_text(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError(path.string() + ": empty file, header row required");
    }

    const std::vector<std::string> header = detail::split_csv_row(line, map.delimiter);
    std::map<std::string, std::size_t> header_index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        header_index[detail::trim(header[i])] = i;
    }

    const bool flight_from_filename = map.columns.at("flight_id") == "@filename";
    std::map<std::string, std::size_t> semantic_index;  // semantic -> column index
    for (const auto& [semantic, column] : map.columns) {
        if (semantic == "flight_id" && flight_from_filename) {
            continue;
        }
        auto it = header_index.find(column);
        if (it == header_index.end()) {
            throw SchemaError(path.string() + ": mapped column '" + column + "' (for " +
                              semantic + ") not found in header");
        }
        semantic_index[semantic] = it->second;
    }

    ParseResult result;
    std::map<std::string, FlightRecord> by_flight;
    const std::string file_stem = path.stem().string();
    std::size_t lineno = 1;

    auto reject = [&](std::size_t ln, const std::string& msg) {
        result.issues.push_back({ln, msg});
        ++result.rows_rejected;
        if (result.issues.size() > bad_row_cap) {
            throw ParseError(path.string() + ": more than " + std::to_string(bad_row_cap) +
                             " bad rows, last at line " + std::to_string(ln) + ": " + msg);
        }
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) {
            continue;
        }
        const std::vector<std::string> cells = detail::split_csv_row(line, map.delimiter);
        if (cells.size() != header.size()) {
            reject(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(cells.size()));
            continue;
        }

        auto cell = [&](const std::string& semantic) -> const std::string& {
            return cells[semantic_index.at(semantic)];
        };
        auto num = [&](const std::string& semantic, bool& ok) {
            const auto v = detail::try_parse_double(cell(semantic));
            if (!v || !std::isfinite(*v)) {
                ok = false;
                return 0.0;
            }
            return *v;
        };

        FlightSample s;
        bool ok = true;
        std::string bad_field;
        auto field = [&](const std::string& semantic, double& out) {
            bool field_ok = true;
            out = num(semantic, field_ok);
            if (!field_ok && ok) {
                ok = false;
                bad_field = semantic;
            }
        };

        field("time", s.t);
        field("wind_speed", s.wind_speed);
        field("wind_angle", s.wind_angle);
        field("position_x", s.position_x);
        field("position_y", s.position_y);
        field("position_z", s.position_z);
        field("orientation_x", s.orientation_x);
        field("orientation_y", s.orientation_y);
        field("orientation_z", s.orientation_z);
        field("orientation_w", s.orientation_w);
        field("velocity_x", s.velocity_x);
        field("velocity_y", s.velocity_y);
        field("velocity_z", s.velocity_z);
        field("angular_x", s.angular_x);
        field("angular_y", s.angular_y);
        field("angular_z", s.angular_z);
        field("linear_acceleration_x", s.lin_accel_x);
        field("linear_acceleration_y", s.lin_accel_y);
        field("linear_acceleration_z", s.lin_accel_z);
        field("speed", s.cmd_speed);
        field("payload", s.payload);
        field("altitude", s.cmd_altitude);
        field("battery_voltage", s.battery_voltage);
        field("battery_current", s.battery_current);
        if (!ok) {
            reject(lineno, "unparseable numeric in column '" + map.columns.at(bad_field) + "'");
            continue;
        }

        if (s.wind_speed < 0) {
            reject(lineno, "wind_speed < 0");
            continue;
        }
        if (s.payload < 0) {
            reject(lineno, "payload < 0");
            continue;
        }
        const double qn = std::sqrt(s.orientation_x * s.orientation_x +
                                    s.orientation_y * s.orientation_y +
                                    s.orientation_z * s.orientation_z +
                                    s.orientation_w * s.orientation_w);
        if (std::abs(qn - 1.0) > 1e-2) {
            reject(lineno, "orientation quaternion norm " + std::to_string(qn) +
                               " outside [0.99, 1.01]");
            continue;
        }

        const std::string flight_id =
            flight_from_filename ? file_stem : detail::trim(cell("flight_id"));
        if (flight_id.empty()) {
            reject(lineno, "empty flight id");
            continue;
        }
        auto& record = by_flight[flight_id];
        record.flight_id = flight_id;
        record.samples.push_back(s);
        ++result.rows_parsed;
    }

    for (auto& [id, record] : by_flight) {
        std::stable_sort(record.samples.begin(), record.samples.end(),
                         [](const FlightSample& a, const FlightSample& b) { return a.t < b.t; });
        // Timestamps must be strictly increasing; duplicates are dropped.
        std::vector<FlightSample> dedup;
        dedup.reserve(record.samples.size());
        for (const FlightSample& s : record.samples) {
            if (!dedup.empty() && !(s.t > dedup.back().t)) {
                result.issues.push_back(
                    {0, "flight " + id + ": duplicate timestamp " + std::to_string(s.t)});
                ++result.rows_rejected;
                --result.rows_parsed;
                continue;
            }
            dedup.push_back(s);
        }
        record.samples = std::move(dedup);
        result.flights.push_back(std::move(record));
    }
    return result;
}

/// Accepts either one CSV file or a directory of *.csv files.
inline ParseResult parse_dataset(const std::filesystem::path& path, const ColumnMap& map,
                                 std::size_t bad_row_cap = 100) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
        if (files.empty()) {
            throw DataError(path.string() + ": no .csv files found");
        }
        std::sort(files.begin(), files.end());
        ParseResult all;
        for (const fs::path& file : files) {
            ParseResult one = parse_flight_csv(file, map, bad_row_cap);
            for (auto& flight : one.flights) {
                all.flights.push_back(std::move(flight));
            }
            all.issues.insert(all.issues.end(), one.issues.begin(), one.issues.end());
            all.rows_parsed += one.rows_parsed;
            all.rows_rejected += one.rows_rejected;
        }
        return all;
    }
    if (!fs::exists(path)) {
        throw IoError(path.string() + ": no such file or directory");
    }
    return parse_flight_csv(path, map, bad_row_cap);
}

}  // namespace dronepower
