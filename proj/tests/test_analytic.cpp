#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "dronepower/analytic.hpp"
#include "dronepower/profile.hpp"
#include "dronepower/rng.hpp"

using namespace dronepower;

namespace {

DroneParams simple_params() {
    DroneParams p;
    p.m_body = 1.0;
    p.m_battery = 0.0;
    p.m_payload = 0.0;
    p.eta = 1.0;
    p.lift_to_drag = 1.0;
    p.avionics_power = 0.0;
    p.g = 9.81;
    p.rho = 0.5;
    p.n_rotors = 1;
    p.rotor_area = 1.0;
    p.eta_charge = 1.0;
    return p;
}

DroneParams random_valid_params(Rng& rng) {
    DroneParams p;
    p.m_body = rng.uniform(0.2, 5.0);
    p.m_battery = rng.uniform(0.05, 1.5);
    p.m_payload = rng.uniform(0.0, 2.0);
    p.eta = rng.uniform(0.2, 1.0);
    p.lift_to_drag = rng.uniform(1.0, 10.0);
    p.avionics_power = rng.uniform(0.0, 30.0);
    p.g = 9.81;
    p.rho = rng.uniform(0.9, 1.3);
    p.n_rotors = 1 + static_cast<int>(rng.bounded(8));
    p.rotor_area = rng.uniform(0.01, 0.5);
    p.drag_coeffs = {rng.uniform(0.0, 2.5), rng.uniform(0.0, 2.5), rng.uniform(0.0, 2.5)};
    p.ref_areas = {rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1)};
    p.kappa = rng.uniform(0.0, 2.0);
    p.kappa2 = rng.uniform(0.0, 2.0);
    p.kappa3 = rng.uniform(0.0, 0.1);
    p.downwash = rng.uniform(0.0, 8.0);
    p.eta_charge = rng.uniform(0.5, 1.0);
    return p;
}

// Independent bisection oracle for the induced-velocity fixed point.
double bisect_induced_velocity(double thrust_n, double two_nrz, double v_air, double alpha) {
    auto f = [&](double vi) {
        const double vx = v_air * std::cos(alpha);
        const double vz = v_air * std::sin(alpha);
        return vi * two_nrz * std::sqrt(vx * vx + (vz + vi) * (vz + vi)) - thrust_n;
    };
    double lo = 0.0;
    double hi = std::max(1.0, std::sqrt(thrust_n / two_nrz));
    while (f(hi) < 0) {
        hi *= 2.0;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("dandrea identity construction cancels the 370 constant") {
    DroneParams p = simple_params();
    // v chosen so the internal km/h speed is exactly 370.
    const double v_ms = 370.0 / 3.6;
    REQUIRE_THAT(power_dandrea(p, v_ms), Catch::Matchers::WithinRel(1000.0, 1e-12));
}

TEST_CASE("dandrea zero mass leaves the avionics floor") {
    DroneParams p = simple_params();
    p.m_body = 0.0;
    p.avionics_power = 5.0;
    REQUIRE(power_dandrea(p, 0.0) == 5.0);
    REQUIRE(power_dandrea(p, 17.3) == 5.0);
}

TEST_CASE("dandrea hand-computed fixture") {
    DroneParams p = simple_params();
    p.m_body = 3.0;
    p.eta = 0.5;
    p.lift_to_drag = 3.0;
    p.avionics_power = 10.0;
    // 3 kg * 43.2 km/h / (370 * 0.5 * 3) = 0.23351... kW, plus 10 W avionics.
    REQUIRE_THAT(power_dandrea(p, 12.0),
                 Catch::Matchers::WithinRel(243.51351351351354, 1e-9));
}

TEST_CASE("dandrea is strictly increasing in airspeed and mass") {
    Rng rng(7101);
    for (int i = 0; i < 50; ++i) {
        DroneParams p = random_valid_params(rng);
        const double v = rng.uniform(0.0, 40.0);
        const double dv = rng.uniform(0.01, 5.0);
        REQUIRE(power_dandrea(p, v + dv) > power_dandrea(p, v));
        DroneParams heavier = p;
        heavier.m_payload += 0.5;
        if (v > 0) {
            REQUIRE(power_dandrea(heavier, v) > power_dandrea(p, v));
        }
    }
}

TEST_CASE("dandrea eta scaling is exactly reciprocal on the non-avionics term") {
    DroneParams p = simple_params();
    p.m_body = 2.5;
    p.avionics_power = 7.0;
    const double base = power_dandrea(p, 10.0) - p.avionics_power;
    DroneParams half = p;
    half.eta = 0.5;
    const double scaled = power_dandrea(half, 10.0) - p.avionics_power;
    REQUIRE_THAT(scaled, Catch::Matchers::WithinRel(2.0 * base, 1e-12));
}

TEST_CASE("dandrea rejects non-finite input") {
    DroneParams p = simple_params();
    REQUIRE_THROWS_AS(power_dandrea(p, std::numeric_limits<double>::quiet_NaN()),
                      InvalidParameterError);
    REQUIRE_THROWS_AS(power_dandrea(p, std::numeric_limits<double>::infinity()),
                      InvalidParameterError);
    p.m_body = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(power_dandrea(p, 1.0), InvalidParameterError);
}

TEST_CASE("dandrea headwind variant") {
    DroneParams p = simple_params();
    p.m_body = 2.0;

    SECTION("zero headwind degenerates to the base model") {
        REQUIRE(power_dandrea_headwind(p, 10.0, 0.0) == power_dandrea(p, 10.0));
    }
    SECTION("full cancellation clamps at zero airspeed") {
        REQUIRE(power_dandrea_headwind(p, 10.0, -10.0) == power_dandrea(p, 0.0));
        REQUIRE(power_dandrea_headwind(p, 10.0, -25.0) == power_dandrea(p, 0.0));
    }
    SECTION("positive headwind adds to ground speed") {
        REQUIRE(power_dandrea_headwind(p, 10.0, 5.0) == power_dandrea(p, 15.0));
    }
    SECTION("negative ground speed rejected") {
        REQUIRE_THROWS_AS(power_dandrea_headwind(p, -1.0, 0.0), InvalidParameterError);
    }
}

TEST_CASE("dorling hand-computed fixture") {
    DroneParams p = simple_params();
    // denominator sqrt(2 * 1 * 0.5 * 1) = 1
    REQUIRE_THAT(power_dorling(p), Catch::Matchers::WithinRel(9.81, 1e-12));
}

TEST_CASE("dorling zero mass gives zero power") {
    DroneParams p = simple_params();
    p.m_body = 0.0;
    REQUIRE(power_dorling(p) == 0.0);
}

TEST_CASE("dorling rotor count scaling law") {
    Rng rng(88);
    for (int i = 0; i < 20; ++i) {
        DroneParams p = random_valid_params(rng);
        DroneParams doubled = p;
        doubled.n_rotors = 2 * p.n_rotors;
        REQUIRE_THAT(power_dorling(doubled),
                     Catch::Matchers::WithinRel(power_dorling(p) / std::sqrt(2.0), 1e-12));
    }
}

TEST_CASE("dorling singular configuration") {
    DroneParams p = simple_params();
    p.rho = 0.0;  // invalid by construction; the model guards its denominator
    REQUIRE_THROWS_AS(power_dorling(p), Error);
}

TEST_CASE("thrust fixture and edge cases") {
    DroneParams p = simple_params();
    p.rho = 1.0;
    p.drag_coeffs = {2.0, 0.0, 0.0};
    p.ref_areas = {1.0, 0.0, 0.0};

    SECTION("pure weight at rest") {
        REQUIRE(thrust(p, 0.0) == 9.81);
    }
    SECTION("hand-computed fixture") {
        REQUIRE_THAT(thrust(p, 3.0), Catch::Matchers::WithinRel(18.81, 1e-12));
    }
    SECTION("no parasitic drag means speed independence") {
        p.drag_coeffs = {0.0, 0.0, 0.0};
        REQUIRE(thrust(p, 0.0) == thrust(p, 30.0));
    }
    SECTION("monotone in each mass") {
        DroneParams heavier = p;
        heavier.m_battery = 1.0;
        REQUIRE(thrust(heavier, 5.0) > thrust(p, 5.0));
    }
}

TEST_CASE("induced velocity: no thrust, no downwash") {
    DroneParams p = simple_params();
    REQUIRE(induced_velocity(p, 0.0, 10.0, 0.2) == 0.0);
}

TEST_CASE("induced velocity hover closed form") {
    DroneParams p = simple_params();
    // 2 n rho zeta = 1, so v_i = sqrt(T)
    REQUIRE_THAT(induced_velocity(p, 9.81, 0.0, 0.0),
                 Catch::Matchers::WithinRel(3.132091952673165, 1e-12));
}

TEST_CASE("induced velocity matches the bisection oracle in forward flight") {
    DroneParams p = simple_params();
    const double vi = induced_velocity(p, 9.81, 8.0, 0.1);
    const double oracle = bisect_induced_velocity(9.81, 1.0, 8.0, 0.1);
    REQUIRE_THAT(vi, Catch::Matchers::WithinAbs(oracle, 1e-8));
}

TEST_CASE("induced velocity residual invariant over random parameters") {
    Rng rng(424242);
    for (int i = 0; i < 100; ++i) {
        DroneParams p = random_valid_params(rng);
        const double v_air = rng.uniform(0.0, 25.0);
        const double alpha = rng.uniform(-0.6, 0.6);
        const double t = thrust(p, v_air);
        const double vi = induced_velocity(p, t, v_air, alpha);
        const double two_nrz = 2.0 * p.n_rotors * p.rho * p.rotor_area;
        const double vx = v_air * std::cos(alpha);
        const double vz = v_air * std::sin(alpha);
        const double residual =
            std::abs(vi * two_nrz * std::hypot(vx, vz + vi) - t);
        REQUIRE(residual < 1e-8 * std::max(1.0, t));
        REQUIRE(vi >= 0.0);
    }
}

TEST_CASE("stolaroff hover equals the closed-form chain") {
    DroneParams p = simple_params();
    REQUIRE_THAT(power_stolaroff(p, 0.0, 0.0),
                 Catch::Matchers::WithinRel(30.725822055723754, 1e-9));
}

TEST_CASE("stolaroff is exactly linear in 1/eta") {
    DroneParams p = simple_params();
    p.m_body = 2.0;
    const double base = power_stolaroff(p, 6.0, 0.05);
    DroneParams half = p;
    half.eta = 0.5;
    REQUIRE_THAT(power_stolaroff(half, 6.0, 0.05),
                 Catch::Matchers::WithinRel(2.0 * base, 1e-12));
}

TEST_CASE("stolaroff forward flight matches the composed oracle") {
    DroneParams p = simple_params();
    p.m_body = 2.2;
    p.drag_coeffs = {1.5, 1.0, 0.0};
    p.ref_areas = {0.03, 0.01, 0.0};
    p.eta = 0.7;
    const double v_air = 8.0;
    const double alpha = 0.1;

    // Oracle: independent thrust arithmetic + bisection for v_i + Eq. formula.
    const double t = p.g * p.total_mass() +
                     0.5 * p.rho * (1.5 * 0.03 + 1.0 * 0.01) * v_air * v_air;
    const double two_nrz = 2.0 * p.n_rotors * p.rho * p.rotor_area;
    const double vi = bisect_induced_velocity(t, two_nrz, v_air, alpha);
    const double expected = t * (v_air * std::sin(alpha) + vi) / p.eta;

    REQUIRE_THAT(power_stolaroff(p, v_air, alpha),
                 Catch::Matchers::WithinRel(expected, 1e-8));
}

TEST_CASE("kirchstein degenerate and avionics-only cases") {
    DroneParams p = simple_params();

    SECTION("all terms zeroed") {
        p.m_body = 0.0;
        REQUIRE(power_kirchstein(p, 12.0) == 0.0);
    }
    SECTION("avionics term only") {
        p.m_body = 0.0;
        p.avionics_power = 10.0;
        p.eta_charge = 0.8;
        REQUIRE_THAT(power_kirchstein(p, 0.0), Catch::Matchers::WithinRel(12.5, 1e-12));
    }
}

TEST_CASE("kirchstein matches the term-by-term oracle") {
    Rng rng(5150);
    for (int i = 0; i < 25; ++i) {
        DroneParams p = random_valid_params(rng);
        const double v = rng.uniform(0.0, 20.0);

        const double cda =
            p.drag_coeffs[0] * p.ref_areas[0] + p.drag_coeffs[1] * p.ref_areas[1] +
            p.drag_coeffs[2] * p.ref_areas[2];
        const double m = p.m_body + p.m_battery + p.m_payload;
        const double t = p.g * m + 0.5 * p.rho * cda * v * v;
        const double gm = p.g * m;
        const double term_downwash = p.kappa * t * p.downwash;
        const double term_parasite = 0.5 * p.rho * cda * v * v * v;
        const double term_induced = p.kappa2 * std::pow(gm, 1.5);
        const double term_profile = p.kappa3 * std::pow(gm, 0.5) * v * v;
        const double expected =
            (term_downwash + term_parasite + term_induced + term_profile) / p.eta +
            p.avionics_power / p.eta_charge;

        REQUIRE_THAT(power_kirchstein(p, v), Catch::Matchers::WithinRel(expected, 1e-9));
    }
}

TEST_CASE("tseng pinned regression values") {
    REQUIRE(power_tseng(0.0, 0.0) == 251.7);
    REQUIRE(power_tseng(10.0, 500.0) == 324.25);
    REQUIRE_THAT(power_tseng(10.0, 500.0), Catch::Matchers::WithinAbs(324.25, 1e-12));
}

TEST_CASE("tseng slope structure") {
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        const double v = rng.uniform(0.0, 20.0);
        const double m = rng.uniform(0.0, 750.0);
        // dP/dv constant at -2.595
        REQUIRE_THAT(power_tseng(v + 1.0, m) - power_tseng(v, m),
                     Catch::Matchers::WithinAbs(-2.595, 1e-9));
        // monotone: non-increasing in v, non-decreasing in payload
        REQUIRE(power_tseng(v + 0.5, m) < power_tseng(v, m));
        REQUIRE(power_tseng(v, m + 10.0) > power_tseng(v, m));
    }
}

TEST_CASE("all five models stay finite over the operating envelope") {
    Rng rng(31337);
    for (int i = 0; i < 60; ++i) {
        DroneParams p = random_valid_params(rng);
        const double v = rng.uniform(0.0, 50.0);
        REQUIRE(std::isfinite(power_dandrea(p, v)));
        REQUIRE(std::isfinite(power_dandrea_headwind(p, v, rng.uniform(-10.0, 10.0))));
        REQUIRE(std::isfinite(power_dorling(p)));
        REQUIRE(std::isfinite(power_stolaroff(p, v, rng.uniform(-0.5, 0.5))));
        REQUIRE(std::isfinite(power_kirchstein(p, v)));
        REQUIRE(std::isfinite(power_tseng(v, p.m_payload * 1000.0)));
    }
}

TEST_CASE("mass monotonicity of dorling and thrust") {
    Rng rng(2024);
    for (int i = 0; i < 30; ++i) {
        DroneParams p = random_valid_params(rng);
        DroneParams heavier = p;
        heavier.m_body += rng.uniform(0.01, 1.0);
        REQUIRE(power_dorling(heavier) > power_dorling(p));
        REQUIRE(thrust(heavier, 4.0) > thrust(p, 4.0));
    }
}

TEST_CASE("reference profile loads and validates") {
    const DroneParams p = load_profile(std::filesystem::path(DRONEPOWER_SOURCE_DIR) /
                                       "configs" / "reference_profile.conf");
    REQUIRE(p.g == 9.81);
    REQUIRE(p.rho == 1.225);
    REQUIRE(p.n_rotors == 4);
    REQUIRE(p.eta == 0.5);
    REQUIRE(std::isfinite(power_kirchstein(p, 10.0)));
    REQUIRE(std::isfinite(power_stolaroff(p, 10.0, 0.1)));
}
