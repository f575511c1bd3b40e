#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "dronepower/analytic.hpp"
#include "dronepower/config.hpp"

namespace dronepower {

/// Loads a DroneParams profile from a flat `name = value` file. Every field
/// is required, unknown keys are rejected, and the result is validated.
/// A shipped reference profile lives in configs/reference_profile.conf.
inline DroneParams load_profile(const KvDocument& doc) {
    static const std::set<std::string> kKeys = {
        "m_body",      "m_battery",  "m_payload",    "eta",        "lift_to_drag",
        "avionics_power", "g",       "rho",          "n_rotors",   "rotor_area",
        "drag_coeffs", "ref_areas",  "kappa",        "kappa2",     "kappa3",
        "downwash",    "eta_charge",
    };
    doc.require_known_keys(kKeys);

    DroneParams p;
    p.m_body = doc.get_double("m_body");
    p.m_battery = doc.get_double("m_battery");
    p.m_payload = doc.get_double("m_payload");
    p.eta = doc.get_double("eta");
    p.lift_to_drag = doc.get_double("lift_to_drag");
    p.avionics_power = doc.get_double("avionics_power");
    p.g = doc.get_double("g");
    p.rho = doc.get_double("rho");
    p.n_rotors = static_cast<int>(doc.get_int("n_rotors"));
    p.rotor_area = doc.get_double("rotor_area");

    auto list3 = [&](const char* key, std::array<double, 3>& out) {
        const std::vector<double> v = doc.get_double_list(key);
        if (v.size() != 3) {
            throw SchemaError(doc.origin() + ": key '" + key +
                              "' must have exactly 3 comma-separated values");
        }
        out = {v[0], v[1], v[2]};
    };
    list3("drag_coeffs", p.drag_coeffs);
    list3("ref_areas", p.ref_areas);

    p.kappa = doc.get_double("kappa");
    p.kappa2 = doc.get_double("kappa2");
    p.kappa3 = doc.get_double("kappa3");
    p.downwash = doc.get_double("downwash");
    p.eta_charge = doc.get_double("eta_charge");

    p.validate();
    return p;
}

inline DroneParams load_profile(const std::filesystem::path& path) {
    return load_profile(KvDocument::parse_file(path));
}

}  // namespace dronepower
