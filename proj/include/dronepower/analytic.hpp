#pragma once

#include <array>
#include <cmath>
#include <string>

#include "dronepower/errors.hpp"

namespace dronepower {

/// Physical constants and masses of the modeled airframe. Index 0 of
/// drag_coeffs / ref_areas is the body, 1 the battery, 2 the payload,
/// mirroring the three mass components.
struct DroneParams {
    double m_body = 0.0;     ///< kg
    double m_battery = 0.0;  ///< kg
    double m_payload = 0.0;  ///< kg

    double eta = 0.5;             ///< power-transfer efficiency, in (0, 1]
    double lift_to_drag = 3.0;    ///< dimensionless
    double avionics_power = 0.0;  ///< W, shared by the D'Andrea and Kirchstein models

    double g = 9.81;     ///< m/s^2
    double rho = 1.225;  ///< kg/m^3
    int n_rotors = 4;
    double rotor_area = 0.1;  ///< m^2, per-rotor disk area

    std::array<double, 3> drag_coeffs{0.0, 0.0, 0.0};  ///< C_D per component
    std::array<double, 3> ref_areas{0.0, 0.0, 0.0};    ///< m^2 per component

    double kappa = 0.0;       ///< thrust-downwash power factor
    double kappa2 = 0.0;      ///< W / N^1.5
    double kappa3 = 0.0;      ///< W*s^2 / (N^0.5 * m^2)
    double downwash = 0.0;    ///< m/s
    double eta_charge = 1.0;  ///< battery charging efficiency, in (0, 1]

    double total_mass() const { return m_body + m_battery + m_payload; }

    double drag_area_sum() const {
        return drag_coeffs[0] * ref_areas[0] + drag_coeffs[1] * ref_areas[1] +
               drag_coeffs[2] * ref_areas[2];
    }

    /// Throws InvalidParameterError on the first violated invariant.
    void validate() const {
        auto fail = [](const std::string& msg) { throw InvalidParameterError("DroneParams: " + msg); };
        auto finite = [&](double v, const char* name) {
            if (!std::isfinite(v)) fail(std::string(name) + " is not finite");
        };
        finite(m_body, "m_body");
        finite(m_battery, "m_battery");
        finite(m_payload, "m_payload");
        if (m_body < 0 || m_battery < 0 || m_payload < 0) fail("masses must be >= 0");
        finite(eta, "eta");
        if (!(eta > 0 && eta <= 1)) fail("eta must be in (0, 1]");
        finite(eta_charge, "eta_charge");
        if (!(eta_charge > 0 && eta_charge <= 1)) fail("eta_charge must be in (0, 1]");
        finite(lift_to_drag, "lift_to_drag");
        if (!(lift_to_drag > 0)) fail("lift_to_drag must be > 0");
        finite(avionics_power, "avionics_power");
        if (avionics_power < 0) fail("avionics_power must be >= 0");
        finite(g, "g");
        if (!(g > 0)) fail("g must be > 0");
        finite(rho, "rho");
        if (!(rho > 0)) fail("rho must be > 0");
        if (n_rotors < 1) fail("n_rotors must be >= 1");
        finite(rotor_area, "rotor_area");
        if (!(rotor_area > 0)) fail("rotor_area must be > 0");
        for (int i = 0; i < 3; ++i) {
            finite(drag_coeffs[i], "drag_coeffs");
            finite(ref_areas[i], "ref_areas");
            if (drag_coeffs[i] < 0) fail("drag_coeffs must be >= 0");
            if (ref_areas[i] < 0) fail("ref_areas must be >= 0");
        }
        finite(kappa, "kappa");
        finite(kappa2, "kappa2");
        finite(kappa3, "kappa3");
        finite(downwash, "downwash");
    }
};

/// Aerodynamic state at one instant: airspeed, angle of attack, and the
/// derived thrust / induced-speed pair.
struct AirState {
    double v_air = 0.0;      ///< m/s, >= 0
    double alpha = 0.0;      ///< rad, |alpha| < pi/2
    double v_induced = 0.0;  ///< m/s, >= 0
    double thrust = 0.0;     ///< N, >= 0
};

namespace eq1 {
// The lift-to-drag formulation's 370 constant assumes speed in km/h and
// power in kW. The public API is SI: speed converts to km/h on the way in
// and the result converts from kW to W on the way out. Flip kUnitScale to
// 1.0 (and kSpeedScale to 1.0) to evaluate the equation in its raw units.
inline constexpr double kSpeedScale = 3.6;     // m/s -> km/h
inline constexpr double kUnitScale = 1000.0;   // kW -> W
}  // namespace eq1

namespace detail {

inline void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw InvalidParameterError(std::string(name) + " is not finite");
    }
}

inline void require_speed(double v_air) {
    require_finite(v_air, "v_air");
    if (v_air < 0) {
        throw InvalidParameterError("v_air must be >= 0");
    }
}

inline void require_alpha(double alpha) {
    require_finite(alpha, "alpha");
    if (!(std::abs(alpha) < M_PI / 2)) {
        throw InvalidParameterError("|alpha| must be < pi/2");
    }
}

}  // namespace detail

/// Lift-to-drag cruise power: mass * airspeed / (370 * eta * r) plus the
/// avionics floor. Monotone increasing in airspeed and in every mass.
inline double power_dandrea(const DroneParams& p, double v_air) {
    p.validate();
    detail::require_speed(v_air);
    const double v_kmh = v_air * eq1::kSpeedScale;
    const double core_kw = p.total_mass() * v_kmh / (370.0 * p.eta * p.lift_to_drag);
    return core_kw * eq1::kUnitScale + p.avionics_power;
}

/// Headwind variant: a positive headwind opposes travel and adds to the
/// ground speed; the effective airspeed is clamped at zero.
inline double power_dandrea_headwind(const DroneParams& p, double v_ground, double headwind) {
    detail::require_finite(v_ground, "v_ground");
    detail::require_finite(headwind, "headwind");
    if (v_ground < 0) {
        throw InvalidParameterError("v_ground must be >= 0");
    }
    return power_dandrea(p, std::max(v_ground + headwind, 0.0));
}

/// Hover power from helicopter momentum theory adapted to n rotors:
/// g * m^1.5 / sqrt(2 n rho zeta). Speed-independent.
inline double power_dorling(const DroneParams& p) {
    p.validate();
    const double denom_sq = 2.0 * p.n_rotors * p.rho * p.rotor_area;
    if (!(denom_sq > 0)) {
        throw SingularConfigError("power_dorling: n * rho * rotor_area must be > 0");
    }
    const double m = p.total_mass();
    return p.g * m * std::sqrt(m) / std::sqrt(denom_sq);
}

/// Total thrust: weight plus parasitic drag over the three components.
inline double thrust(const DroneParams& p, double v_air) {
    p.validate();
    detail::require_speed(v_air);
    return p.g * p.total_mass() + 0.5 * p.rho * p.drag_area_sum() * v_air * v_air;
}

/// Induced speed from actuator-disk momentum theory: the non-negative
/// fixed point of
///   v_i = T / (2 n rho zeta * sqrt((v cos a)^2 + (v sin a + v_i)^2)).
/// Damped fixed-point iteration with a bisection fallback; the hover case
/// (v_air = 0) short-circuits to the closed form sqrt(T / (2 n rho zeta)).
inline double induced_velocity(const DroneParams& p, double thrust_n, double v_air,
                               double alpha) {
    detail::require_finite(thrust_n, "thrust");
    if (thrust_n < 0) {
        throw InvalidParameterError("thrust must be >= 0");
    }
    detail::require_speed(v_air);
    detail::require_alpha(alpha);
    const double two_nrz = 2.0 * p.n_rotors * p.rho * p.rotor_area;
    if (!(two_nrz > 0)) {
        throw SingularConfigError("induced_velocity: n * rho * rotor_area must be > 0");
    }
    if (thrust_n == 0) {
        return 0.0;
    }
    const double hover_vi = std::sqrt(thrust_n / two_nrz);
    if (v_air == 0) {
        return hover_vi;
    }

    const double vx = v_air * std::cos(alpha);
    const double vz = v_air * std::sin(alpha);
    auto next = [&](double vi) {
        return thrust_n / (two_nrz * std::hypot(vx, vz + vi));
    };
    auto residual_at = [&](double vi) {
        return std::abs(vi * two_nrz * std::hypot(vx, vz + vi) - thrust_n);
    };

    constexpr int kMaxIter = 200;
    constexpr double kTol = 1e-10;
    double vi = hover_vi;
    bool converged = false;
    for (int it = 0; it < kMaxIter; ++it) {
        const double vi_next = 0.5 * (vi + next(vi));
        if (std::abs(vi_next - vi) <= kTol * std::max(1.0, std::abs(vi_next))) {
            vi = vi_next;
            converged = true;
            break;
        }
        vi = vi_next;
    }

    if (!converged || residual_at(vi) > 1e-9 * std::max(1.0, thrust_n)) {
        // Bisection on f(v) = v - next(v); f(0) < 0 and f grows without bound.
        double lo = 0.0;
        double hi = std::max(hover_vi, 1.0);
        int guard = 0;
        while (hi - next(hi) < 0 && guard++ < 200) {
            hi *= 2.0;
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid - next(mid) > 0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        vi = 0.5 * (lo + hi);
    }

    const double res = residual_at(vi);
    if (!std::isfinite(vi) || res > 1e-8 * std::max(1.0, thrust_n)) {
        throw NumericError("induced_velocity: fixed point did not converge, residual " +
                               std::to_string(res),
                           res);
    }
    return vi;
}

/// Thrust / induced-flow state for one flight condition.
inline AirState make_air_state(const DroneParams& p, double v_air, double alpha) {
    AirState s;
    s.v_air = v_air;
    s.alpha = alpha;
    s.thrust = thrust(p, v_air);
    s.v_induced = induced_velocity(p, s.thrust, v_air, alpha);
    return s;
}

/// Induced-power model: P = T (v_a sin(alpha) + v_i) / eta.
inline double power_stolaroff(const DroneParams& p, double v_air, double alpha) {
    detail::require_alpha(alpha);
    const AirState s = make_air_state(p, v_air, alpha);
    if (!(p.eta > 0)) {
        throw SingularConfigError("power_stolaroff: eta must be > 0");
    }
    return s.thrust * (v_air * std::sin(alpha) + s.v_induced) / p.eta;
}

/// Component model with downwash, parasitic, induced and profile terms
/// plus a separately metered avionics draw:
/// P = (kappa T w + 0.5 rho sum(C_D A) v^3 + kappa2 (g m)^1.5
///      + kappa3 (g m)^0.5 v^2) / eta + P_avio / eta_c.
inline double power_kirchstein(const DroneParams& p, double v_air) {
    p.validate();
    detail::require_speed(v_air);
    if (!(p.eta > 0) || !(p.eta_charge > 0)) {
        throw SingularConfigError("power_kirchstein: eta and eta_charge must be > 0");
    }
    const double t = thrust(p, v_air);
    const double gm = p.g * p.total_mass();
    const double core = p.kappa * t * p.downwash +
                        0.5 * p.rho * p.drag_area_sum() * v_air * v_air * v_air +
                        p.kappa2 * gm * std::sqrt(gm) +
                        p.kappa3 * std::sqrt(gm) * v_air * v_air;
    return core / p.eta + p.avionics_power / p.eta_charge;
}

/// Reduced 3DR Solo regression: airspeed in m/s, payload in grams.
inline double power_tseng(double v_air, double payload_g) {
    detail::require_speed(v_air);
    detail::require_finite(payload_g, "payload_g");
    if (payload_g < 0) {
        throw InvalidParameterError("payload_g must be >= 0");
    }
    return -2.595 * v_air + 0.197 * payload_g + 251.7;
}

}  // namespace dronepower
