#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "engine_fixture.hpp"
#include "qsts/io/config.hpp"
#include "qsts/io/example.hpp"
#include "qsts/io/network_io.hpp"
#include "qsts/io/profiles.hpp"
#include "qsts/io/run_dir.hpp"
#include "qsts/io/timeutil.hpp"

using namespace qsts;
using namespace qsts::testing;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qsts_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("calendar arithmetic handles month, year and leap boundaries") {
    CHECK(add_minutes_iso("2035-01-01T00:00:00", 5) == "2035-01-01T00:05:00");
    CHECK(add_minutes_iso("2035-01-31T23:55:00", 5) == "2035-02-01T00:00:00");
    CHECK(add_minutes_iso("2035-12-31T23:59:00", 1) == "2036-01-01T00:00:00");
    CHECK(add_minutes_iso("2036-02-28T23:59:00", 1) == "2036-02-29T00:00:00");  // leap year
    CHECK(add_minutes_iso("2035-02-28T23:59:00", 1) == "2035-03-01T00:00:00");
    const CivilTime a = parse_iso("2035-01-01T00:00:00");
    const CivilTime b = parse_iso("2035-01-08T00:00:00");
    CHECK(minutes_between(a, b) == 7 * 24 * 60);
    CHECK_THROWS_AS(parse_iso("not-a-time"), IoError);
    CHECK_THROWS_AS(parse_iso("2035-13-01T00:00:00"), IoError);
}

TEST_CASE("profiles round-trip exactly through the wide CSV") {
    NetworkModel m = engine_net(true);
    auto ds = make_dataset(m, 5, 17,
                           {{"ld2", {250.0, 251.8030913153197}},
                            {"ld3", {100.0, 1.0 / 3.0}},
                            {"w1", {200.0, 0.1 + 0.2}}});
    TempDir dir;
    write_profiles(ds, dir.file("p.csv"));
    const auto back = load_profiles(dir.file("p.csv"), m);
    REQUIRE(back.series.size() == ds.series.size());
    CHECK(back.resolution_minutes == 5);
    CHECK(back.steps == ds.steps);
    for (std::size_t s = 0; s < ds.series.size(); ++s) {
        CHECK(back.series[s].device_id == ds.series[s].device_id);
        CHECK(back.series[s].values == ds.series[s].values);  // bit-exact
    }
}

TEST_CASE("profile loader reports gaps, unknown devices and bad spacing") {
    NetworkModel m = engine_net();
    TempDir dir;

    SUBCASE("a 288-row day at 5 minutes loads cleanly") {
        auto ds = make_dataset(m, 5, 288, {{"ld2", {250.0}}, {"w1", {200.0}}});
        write_profiles(ds, dir.file("ok.csv"));
        const auto back = load_profiles(dir.file("ok.csv"), m);
        CHECK(back.steps == 288);
        CHECK(back.resolution_minutes == 5);
    }

    SUBCASE("a missing row is a gap") {
        std::ofstream out(dir.file("gap.csv"));
        out << "timestamp,ld2\n2035-01-01T00:00:00,1\n2035-01-01T00:05:00,2\n"
               "2035-01-01T00:15:00,3\n";
        out.close();
        CHECK_THROWS_AS(load_profiles(dir.file("gap.csv"), m), GapDetected);
    }

    SUBCASE("irregular spacing is rejected") {
        std::ofstream out(dir.file("bad.csv"));
        out << "timestamp,ld2\n2035-01-01T00:00:00,1\n2035-01-01T00:05:00,2\n"
               "2035-01-01T00:12:00,3\n";
        out.close();
        CHECK_THROWS_AS(load_profiles(dir.file("bad.csv"), m), NonUniformSpacing);
    }

    SUBCASE("an unknown device column is named in the error") {
        std::ofstream out(dir.file("unk.csv"));
        out << "timestamp,wind_Z9\n2035-01-01T00:00:00,1\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_profiles(dir.file("unk.csv"), m),
                             doctest::Contains("wind_Z9"), UnknownDevice);
    }

    SUBCASE("bad numerics name file, column and row") {
        std::ofstream out(dir.file("num.csv"));
        out << "timestamp,ld2\n2035-01-01T00:00:00,banana\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_profiles(dir.file("num.csv"), m), doctest::Contains("ld2"),
                             IoError);
    }
}

TEST_CASE("network model survives a JSON round trip") {
    const NetworkModel m = example_network(true);
    TempDir dir;
    write_network(m, dir.file("net.json"));
    const NetworkModel back = load_network(dir.file("net.json"));
    CHECK(back.buses.size() == m.buses.size());
    CHECK(back.branches.size() == m.branches.size());
    CHECK(back.transformers.size() == m.transformers.size());
    CHECK(back.shunts.size() == m.shunts.size());
    CHECK(back.generators.size() == m.generators.size());
    CHECK(back.ess_units.size() == m.ess_units.size());
    CHECK(back.interties.size() == m.interties.size());
    CHECK(back.demand_resources.size() == m.demand_resources.size());
    CHECK(validate(back).ok());
    for (std::size_t i = 0; i < m.branches.size(); ++i) {
        CHECK(back.branches[i].reactance == m.branches[i].reactance);
        CHECK(back.branches[i].switchable == m.branches[i].switchable);
    }
    for (std::size_t i = 0; i < m.generators.size(); ++i)
        CHECK(back.generators[i].kind == m.generators[i].kind);
}

TEST_CASE("ohmic impedances convert on the from-bus voltage base") {
    const std::string doc = R"({
        "name": "ohm", "system_base_mva": 100.0, "impedance_units": "ohms",
        "buses": [
            {"id": "a", "base_kv": 735.0, "kind": "slack"},
            {"id": "b", "base_kv": 735.0}
        ],
        "branches": [{"id": "l", "from": "a", "to": "b", "r": 0.0, "x": 54.0225, "limit_mva": 100.0}]
    })";
    const NetworkModel m = parse_network(doc);
    // z_base = 735^2 / 100 = 5402.25 ohm, so 54.0225 ohm is 0.01 pu
    CHECK(m.branches[0].reactance == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("peak calendar round-trips and validates") {
    PeakCalendar peak = example_peak_calendar(5, 7);
    TempDir dir;
    write_peak_calendar(peak, 5, dir.file("peaks.csv"));
    const PeakCalendar back = load_peak_calendar(dir.file("peaks.csv"), 5);
    REQUIRE(back.intervals.size() == peak.intervals.size());
    for (std::size_t i = 0; i < peak.intervals.size(); ++i) {
        CHECK(back.intervals[i].start == peak.intervals[i].start);
        CHECK(back.intervals[i].end == peak.intervals[i].end);
    }
    // Monday 06:00 is inside, Saturday is not
    CHECK(back.in_peak(6 * 12));
    CHECK_FALSE(back.in_peak(5 * 288 + 7 * 12));
}

TEST_CASE("config loads with environment overrides for output and workers only") {
    TempDir dir;
    write_example(dir.file(""), 2, 60);
    setenv("QSTS_OUTPUT_DIR", "/tmp/qsts_env_out", 1);
    setenv("QSTS_WORKERS", "7", 1);
    const RunConfig cfg = load_config(dir.file("config_s2.json"));
    unsetenv("QSTS_OUTPUT_DIR");
    unsetenv("QSTS_WORKERS");
    CHECK(cfg.output_dir == "/tmp/qsts_env_out");
    CHECK(cfg.workers == 7);
    CHECK(cfg.mode == RunPlan::Mode::parallel);
    CHECK(cfg.periods.ranges.size() == 5);
    CHECK(cfg.config_hash != 0);
    const RunConfig again = load_config(dir.file("config_s2.json"));
    CHECK(again.config_hash == cfg.config_hash);
}

TEST_CASE("run directory round-trips states, actions and the ess trace") {
    TempDir dir;
    write_example(dir.file(""), 2, 60);
    RunConfig cfg = load_config(dir.file("config_s2_seq.json"));
    cfg.output_dir = dir.file("out");
    auto lc = load_case(cfg);
    RunPlan plan;
    plan.segments = {{0, 0, lc->sim.engine.horizon_steps, SegmentSpec::Init::chained, 0}};
    plan.mode = RunPlan::Mode::sequential;
    const AnnualResultStore store = execute(plan, lc->sim);
    REQUIRE(store.failures.empty());
    write_run_directory(cfg.output_dir, store, *lc, plan);

    const LoadedRun run = load_run_directory(cfg.output_dir);
    REQUIRE(run.store.states.size() == store.states.size());
    for (std::size_t i = 0; i < store.states.size(); ++i)
        CHECK(run.store.states[i] == store.states[i]);  // bit-exact through the binary store
    CHECK(run.store.actions.size() == store.actions.size());
    REQUIRE(run.store.ess_trace.size() == store.ess_trace.size());
    for (std::size_t i = 0; i < store.ess_trace.size(); ++i) {
        CHECK(run.store.ess_trace[i].power_mw == store.ess_trace[i].power_mw);
        CHECK(run.store.ess_trace[i].classification == store.ess_trace[i].classification);
    }
    CHECK(run.limits.size() == lc->sim.limits.size());

    SUBCASE("two identical runs produce byte-identical state stores") {
        const std::string second = dir.file("out2");
        const AnnualResultStore rerun = execute(plan, lc->sim);
        write_run_directory(second, rerun, *lc, plan);
        std::ifstream a(dir.file("out") + "/states.bin", std::ios::binary);
        std::ifstream b(second + "/states.bin", std::ios::binary);
        const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                                  std::istreambuf_iterator<char>());
        const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                                  std::istreambuf_iterator<char>());
        CHECK(bytes_a == bytes_b);
    }
}

TEST_CASE("missing referenced files fail before any simulation") {
    TempDir dir;
    std::ofstream out(dir.file("cfg.json"));
    out << R"({"network": "nope.json", "profiles": "nope.csv"})";
    out.close();
    const RunConfig cfg = load_config(dir.file("cfg.json"));
    CHECK_THROWS_AS(load_case(cfg), IoError);
}
