#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dronepower/telemetry.hpp"
#include "test_support.hpp"

using namespace dronepower;
using namespace dronepower::testing;

TEST_CASE("two-row fixture parses to exact values") {
    TempDir tmp("parse");
    FlightSample a;
    a.wind_speed = 3.25;
    a.velocity_x = 5.5;
    a.payload = 250.0;
    a.cmd_altitude = 50.0;
    a.battery_voltage = 22.4;
    a.battery_current = 18.125;
    FlightSample b = a;
    b.velocity_x = -1.75;
    b.battery_current = 20.5;

    const std::string text = std::string(default_csv_header()) + "\n" +
                             csv_row("f1", 0.0, a) + "\n" + csv_row("f1", 0.2, b) + "\n";
    write_file_text(tmp.file("a.csv"), text);

    const ParseResult result = parse_flight_csv(tmp.file("a.csv"), default_column_map());
    REQUIRE(result.flights.size() == 1);
    REQUIRE(result.issues.empty());
    const FlightRecord& flight = result.flights[0];
    REQUIRE(flight.flight_id == "f1");
    REQUIRE(flight.samples.size() == 2);
    REQUIRE(flight.samples[0].wind_speed == 3.25);
    REQUIRE(flight.samples[0].velocity_x == 5.5);
    REQUIRE(flight.samples[0].payload == 250.0);
    REQUIRE(flight.samples[0].battery_voltage == 22.4);
    REQUIRE(flight.samples[0].battery_current == 18.125);
    REQUIRE(flight.samples[1].velocity_x == -1.75);
    REQUIRE(flight.samples[1].t == 0.2);
}

TEST_CASE("parse and re-serialize reproduces numeric fields exactly") {
    TempDir tmp("roundtrip");
    Rng rng(5);
    const FlightRecord flight = synthetic_flight("f9", 25, 8.0, 500.0, 75.0, rng);
    write_flights_csv(tmp.file("f.csv"), {flight});

    const ParseResult result = parse_flight_csv(tmp.file("f.csv"), default_column_map());
    REQUIRE(result.flights.size() == 1);
    REQUIRE(result.flights[0].samples.size() == flight.samples.size());
    for (std::size_t i = 0; i < flight.samples.size(); ++i) {
        const auto want = feature_vector(flight.samples[i]);
        const auto got = feature_vector(result.flights[0].samples[i]);
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            REQUIRE(want[j] == got[j]);
        }
        REQUIRE(flight.samples[i].battery_voltage == result.flights[0].samples[i].battery_voltage);
        REQUIRE(flight.samples[i].battery_current == result.flights[0].samples[i].battery_current);
    }
}

TEST_CASE("shuffled timestamps come out sorted ascending") {
    TempDir tmp("sort");
    FlightSample s;
    s.battery_voltage = 20.0;
    s.battery_current = 10.0;
    std::string text = std::string(default_csv_header()) + "\n";
    for (const double t : {4.0, 1.0, 3.0, 0.0, 2.0}) {
        text += csv_row("f1", t, s) + "\n";
    }
    write_file_text(tmp.file("s.csv"), text);

    const ParseResult result = parse_flight_csv(tmp.file("s.csv"), default_column_map());
    REQUIRE(result.flights[0].samples.size() == 5);
    for (std::size_t i = 0; i + 1 < 5; ++i) {
        REQUIRE(result.flights[0].samples[i].t < result.flights[0].samples[i + 1].t);
    }
}

TEST_CASE("one non-numeric voltage rejects exactly that row") {
    TempDir tmp("badrow");
    FlightSample s;
    s.battery_voltage = 20.0;
    s.battery_current = 10.0;
    std::string good0 = csv_row("f1", 0.0, s);
    std::string bad = csv_row("f1", 1.0, s);
    const auto pos = bad.rfind("20,");  // voltage field start
    bad.replace(pos, 2, "oops");
    std::string good2 = csv_row("f1", 2.0, s);

    write_file_text(tmp.file("b.csv"), std::string(default_csv_header()) + "\n" + good0 +
                                           "\n" + bad + "\n" + good2 + "\n");
    const ParseResult result = parse_flight_csv(tmp.file("b.csv"), default_column_map());
    REQUIRE(result.flights[0].samples.size() == 2);
    REQUIRE(result.issues.size() == 1);
    REQUIRE(result.issues[0].line == 3);
    REQUIRE(result.issues[0].message.find("battery_voltage") != std::string::npos);
}

TEST_CASE("missing mapped column is a schema error") {
    TempDir tmp("schema");
    write_file_text(tmp.file("h.csv"), "flight,time,only_two_columns\n");
    REQUIRE_THROWS_AS(parse_flight_csv(tmp.file("h.csv"), default_column_map()),
                      SchemaError);
}

TEST_CASE("row validation rules") {
    TempDir tmp("rules");
    FlightSample ok;
    ok.battery_voltage = 20.0;
    ok.battery_current = 5.0;

    SECTION("negative wind speed rejected") {
        FlightSample bad = ok;
        bad.wind_speed = -1.0;
        write_file_text(tmp.file("w.csv"), std::string(default_csv_header()) + "\n" +
                                               csv_row("f", 0.0, ok) + "\n" +
                                               csv_row("f", 1.0, bad) + "\n");
        const ParseResult r = parse_flight_csv(tmp.file("w.csv"), default_column_map());
        REQUIRE(r.flights[0].samples.size() == 1);
        REQUIRE(r.issues.size() == 1);
    }
    SECTION("bad quaternion norm rejected") {
        FlightSample bad = ok;
        bad.orientation_w = 2.0;
        write_file_text(tmp.file("q.csv"), std::string(default_csv_header()) + "\n" +
                                               csv_row("f", 0.0, bad) + "\n" +
                                               csv_row("f", 1.0, ok) + "\n");
        const ParseResult r = parse_flight_csv(tmp.file("q.csv"), default_column_map());
        REQUIRE(r.flights[0].samples.size() == 1);
        REQUIRE(r.issues.size() == 1);
        REQUIRE(r.issues[0].message.find("quaternion") != std::string::npos);
    }
    SECTION("duplicate timestamps dropped") {
        write_file_text(tmp.file("d.csv"), std::string(default_csv_header()) + "\n" +
                                               csv_row("f", 1.0, ok) + "\n" +
                                               csv_row("f", 1.0, ok) + "\n");
        const ParseResult r = parse_flight_csv(tmp.file("d.csv"), default_column_map());
        REQUIRE(r.flights[0].samples.size() == 1);
        REQUIRE(r.issues.size() == 1);
    }
    SECTION("bad-row cap is fatal") {
        std::string text = std::string(default_csv_header()) + "\n";
        FlightSample bad = ok;
        bad.wind_speed = -2.0;
        for (int i = 0; i < 5; ++i) {
            text += csv_row("f", i, bad) + "\n";
        }
        write_file_text(tmp.file("cap.csv"), text);
        REQUIRE_THROWS_AS(parse_flight_csv(tmp.file("cap.csv"), default_column_map(), 3),
                          ParseError);
    }
}

TEST_CASE("zero-voltage rows are kept but unlabeled") {
    TempDir tmp("unlabeled");
    FlightSample s;
    s.battery_voltage = 0.0;
    s.battery_current = 5.0;
    write_file_text(tmp.file("u.csv"), std::string(default_csv_header()) + "\n" +
                                           csv_row("f", 0.0, s) + "\n");
    const ParseResult r = parse_flight_csv(tmp.file("u.csv"), default_column_map());
    REQUIRE(r.flights[0].samples.size() == 1);
    REQUIRE_FALSE(r.flights[0].samples[0].has_label());
    REQUIRE_THROWS_AS(power_label(r.flights[0].samples[0]), UnlabeledSampleError);
}

TEST_CASE("power label definition") {
    FlightSample s;
    s.battery_voltage = 15.2;
    s.battery_current = 20.0;
    REQUIRE(power_label(s) == 304.0);
    s.battery_current = 0.0;
    REQUIRE(power_label(s) == 0.0);
}

TEST_CASE("fixture flight mean label is physically plausible") {
    Rng rng(11);
    const FlightRecord flight = synthetic_flight("f", 200, 8.0, 500.0, 75.0, rng);
    double sum = 0.0;
    for (const FlightSample& s : flight.samples) {
        sum += power_label(s);
    }
    const double mean = sum / static_cast<double>(flight.samples.size());
    REQUIRE(mean > 50.0);
    REQUIRE(mean < 1500.0);
}

TEST_CASE("directory datasets and @filename flight ids") {
    TempDir tmp("dir");
    FlightSample s;
    s.battery_voltage = 20.0;
    s.battery_current = 10.0;

    ColumnMap map = default_column_map();
    map.columns["flight_id"] = "@filename";

    // header without the flight column
    std::string header(default_csv_header());
    header = header.substr(header.find(',') + 1);
    auto row_without_flight = [&](double t) {
        std::string row = csv_row("x", t, s);
        return row.substr(row.find(',') + 1);
    };
    write_file_text(tmp.file("alpha.csv"),
                    header + "\n" + row_without_flight(0.0) + "\n" + row_without_flight(1.0) + "\n");
    write_file_text(tmp.file("beta.csv"), header + "\n" + row_without_flight(0.0) + "\n");

    const ParseResult r = parse_dataset(tmp.path(), map);
    REQUIRE(r.flights.size() == 2);
    REQUIRE(r.flights[0].flight_id == "alpha");
    REQUIRE(r.flights[1].flight_id == "beta");

    SECTION("empty directory is an explicit error") {
        TempDir empty("empty");
        REQUIRE_THROWS_AS(parse_dataset(empty.path(), map), DataError);
    }
}

TEST_CASE("feature schema order and lookup") {
    REQUIRE(feature_names().size() == kNumFeatures);
    REQUIRE(feature_index("wind_speed") == 0);
    REQUIRE(feature_index("speed") == 18);
    REQUIRE(feature_index("payload") == 19);
    REQUIRE(feature_index("altitude") == 20);
    REQUIRE_THROWS_AS(feature_index("bogus"), SchemaError);

    FlightSample s;
    s.cmd_speed = 7.0;
    s.payload = 125.0;
    s.cmd_altitude = 60.0;
    const auto row = feature_vector(s);
    REQUIRE(row[18] == 7.0);
    REQUIRE(row[19] == 125.0);
    REQUIRE(row[20] == 60.0);
}
