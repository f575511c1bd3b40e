#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dronepower/errors.hpp"
#include "dronepower/io_util.hpp"
#include "dronepower/lstm.hpp"
#include "dronepower/windowing.hpp"

namespace dronepower {

// Checkpoint layout:
//   magic "DPCK" | u32 format version | u32 metadata length | metadata (UTF-8
//   JSON: architecture, dropout, window length, scaler) | weight arrays as
//   f64 little-endian in for_each_param order | u32 CRC-32 of all preceding
//   bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    LstmModel model;
    Scaler scaler;
    std::size_t window_len = 0;
};

inline void save_checkpoint(const std::filesystem::path& path, const LstmModel& model,
                            const Scaler& scaler, std::size_t window_len) {
    if (!scaler.fitted()) {
        throw InvalidParameterError("save_checkpoint: scaler is not fitted");
    }
    nlohmann::json meta;
    meta["schema_version"] = 1;
    meta["input_width"] = model.input_width();
    meta["hidden"] = model.hidden();
    meta["dropout_rate"] = model.dropout_rate;
    meta["window_len"] = window_len;
    meta["scaler"] = {
        {"feat_min", std::vector<double>(scaler.feat_min.data(),
                                         scaler.feat_min.data() + scaler.feat_min.size())},
        {"feat_max", std::vector<double>(scaler.feat_max.data(),
                                         scaler.feat_max.data() + scaler.feat_max.size())},
        {"target_min", scaler.target_min},
        {"target_max", scaler.target_max},
    };
    const std::string meta_str = meta.dump();

    ByteWriter w;
    w.bytes("DPCK", 4);
    w.u32(kCheckpointVersion);
    w.str(meta_str);
    for_each_param(model, [&](const char*, const auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            w.f64(t.data()[i]);
        }
    });
    std::vector<std::uint8_t> bytes = w.buffer();
    const std::uint32_t crc = crc32(bytes);
    ByteWriter tail;
    tail.u32(crc);
    bytes.insert(bytes.end(), tail.buffer().begin(), tail.buffer().end());
    write_file_bytes(path, bytes);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 12) {
        throw ChecksumError(path.string() + ": file too short to be a checkpoint");
    }

    // Verify the trailing CRC before trusting any field.
    const std::size_t body_len = bytes.size() - 4;
    const std::uint32_t stored =
        static_cast<std::uint32_t>(bytes[body_len]) |
        (static_cast<std::uint32_t>(bytes[body_len + 1]) << 8) |
        (static_cast<std::uint32_t>(bytes[body_len + 2]) << 16) |
        (static_cast<std::uint32_t>(bytes[body_len + 3]) << 24);
    const std::uint32_t actual = crc32(bytes.data(), body_len);
    if (stored != actual) {
        throw ChecksumError(path.string() + ": CRC mismatch, file is corrupt or truncated");
    }

    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::string_view(magic, 4) != "DPCK") {
        throw CheckpointError(path.string() + ": not a checkpoint file");
    }
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionError(path.string() + ": unsupported checkpoint version " +
                           std::to_string(version));
    }

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(r.str());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad checkpoint metadata: " + e.what());
    }

    Checkpoint out;
    out.window_len = meta.at("window_len").get<std::size_t>();
    const auto input_width = meta.at("input_width").get<Eigen::Index>();
    const auto hidden = meta.at("hidden").get<Eigen::Index>();
    const auto dropout = meta.at("dropout_rate").get<double>();

    const auto& sc = meta.at("scaler");
    const auto feat_min = sc.at("feat_min").get<std::vector<double>>();
    const auto feat_max = sc.at("feat_max").get<std::vector<double>>();
    if (feat_min.size() != feat_max.size()) {
        throw ParseError(path.string() + ": scaler min/max length mismatch");
    }
    out.scaler.feat_min =
        Eigen::Map<const Eigen::VectorXd>(feat_min.data(),
                                          static_cast<Eigen::Index>(feat_min.size()));
    out.scaler.feat_max =
        Eigen::Map<const Eigen::VectorXd>(feat_max.data(),
                                          static_cast<Eigen::Index>(feat_max.size()));
    out.scaler.target_min = sc.at("target_min").get<double>();
    out.scaler.target_max = sc.at("target_max").get<double>();

    // Rebuild tensors at the recorded shapes, then fill in param order.
    Rng dummy(0);
    ModelConfig cfg;
    cfg.input_width = input_width;
    cfg.hidden = hidden;
    cfg.dropout_rate = dropout;
    out.model = make_lstm_model(cfg, dummy);

    std::size_t expected = 0;
    for_each_param(out.model,
                   [&](const char*, const auto& t) { expected += static_cast<std::size_t>(t.size()); });
    const std::size_t available = (body_len - r.position()) / 8;
    if (available != expected) {
        throw ParseError(path.string() + ": weight payload holds " +
                         std::to_string(available) + " values, expected " +
                         std::to_string(expected));
    }
    for_each_param(out.model, [&](const char*, auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            t.data()[i] = r.f64();
        }
    });
    return out;
}

}  // namespace dronepower
