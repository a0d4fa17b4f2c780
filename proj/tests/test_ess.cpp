#include <doctest.h>

#include <cmath>
#include <random>

#include "qsts/ess/ess_control.hpp"

using namespace qsts;

namespace {

EssUnit table_unit() {
    EssUnit u;
    u.id = "bess1";
    u.bus = "w1";
    u.zone = "East";
    u.power_capacity_mw = 860.0;
    u.energy_capacity_mwh = 3440.0;
    u.soc_pct = 50.0;
    u.soc_balance_pct = 50.0;
    return u;
}

GenerationLimits limits_800_200() {
    GenerationLimits lim;
    lim.zone = "East";
    lim.period = 1;
    lim.gen_min_lim = 200.0;
    lim.gen_max_lim = 800.0;
    lim.mu = 500.0;
    lim.sigma = 200.0;
    return lim;
}

// Hand-derived decision table for the threshold policy: generation position
// relative to limits x peak flag x SOC relative to balance. This table is the
// oracle; select_mode must match every row.
enum class GenPos { below, at_min, inside, at_max, above };
enum class SocRel { lower, equal, higher };

struct TruthRow {
    GenPos gen;
    bool peak;
    SocRel soc;
    EssMode mode;
    EssClassification cls;
};

constexpr EssMode CH = EssMode::charging;
constexpr EssMode DI = EssMode::discharging;
constexpr EssMode SB = EssMode::standby;
constexpr EssClassification VM = EssClassification::variability_mitigation;
constexpr EssClassification BA = EssClassification::soc_balancing;
constexpr EssClassification NO = EssClassification::none;

const TruthRow kTruthTable[] = {
    // surplus (gen >= max): peak -> standby, otherwise charge, SOC ignored
    {GenPos::above, true, SocRel::lower, SB, NO},
    {GenPos::above, true, SocRel::equal, SB, NO},
    {GenPos::above, true, SocRel::higher, SB, NO},
    {GenPos::above, false, SocRel::lower, CH, VM},
    {GenPos::above, false, SocRel::equal, CH, VM},
    {GenPos::above, false, SocRel::higher, CH, VM},
    {GenPos::at_max, true, SocRel::lower, SB, NO},
    {GenPos::at_max, true, SocRel::equal, SB, NO},
    {GenPos::at_max, true, SocRel::higher, SB, NO},
    {GenPos::at_max, false, SocRel::lower, CH, VM},
    {GenPos::at_max, false, SocRel::equal, CH, VM},
    {GenPos::at_max, false, SocRel::higher, CH, VM},
    // shortage (gen <= min): discharge regardless of peak or SOC
    {GenPos::below, true, SocRel::lower, DI, VM},
    {GenPos::below, true, SocRel::equal, DI, VM},
    {GenPos::below, true, SocRel::higher, DI, VM},
    {GenPos::below, false, SocRel::lower, DI, VM},
    {GenPos::below, false, SocRel::equal, DI, VM},
    {GenPos::below, false, SocRel::higher, DI, VM},
    {GenPos::at_min, true, SocRel::lower, DI, VM},
    {GenPos::at_min, true, SocRel::equal, DI, VM},
    {GenPos::at_min, true, SocRel::higher, DI, VM},
    {GenPos::at_min, false, SocRel::lower, DI, VM},
    {GenPos::at_min, false, SocRel::equal, DI, VM},
    {GenPos::at_min, false, SocRel::higher, DI, VM},
    // inside the band: regulate SOC toward balance, peak flag ignored
    {GenPos::inside, true, SocRel::lower, CH, BA},
    {GenPos::inside, true, SocRel::equal, SB, NO},
    {GenPos::inside, true, SocRel::higher, DI, BA},
    {GenPos::inside, false, SocRel::lower, CH, BA},
    {GenPos::inside, false, SocRel::equal, SB, NO},
    {GenPos::inside, false, SocRel::higher, DI, BA},
};

double gen_value(GenPos pos, const GenerationLimits& lim) {
    switch (pos) {
        case GenPos::below: return lim.gen_min_lim - 100.0;
        case GenPos::at_min: return lim.gen_min_lim;
        case GenPos::inside: return 0.5 * (lim.gen_min_lim + lim.gen_max_lim);
        case GenPos::at_max: return lim.gen_max_lim;
        case GenPos::above: return lim.gen_max_lim + 100.0;
    }
    return 0.0;
}

double soc_value(SocRel rel, double balance) {
    switch (rel) {
        case SocRel::lower: return balance - 10.0;
        case SocRel::equal: return balance;
        case SocRel::higher: return balance + 10.0;
    }
    return balance;
}

}  // namespace

TEST_CASE("mode selection matches the hand-derived decision table on all 30 rows") {
    const GenerationLimits lim = limits_800_200();
    PeakCalendar peak;
    peak.add(100, 200);
    int row_no = 0;
    for (const TruthRow& row : kTruthTable) {
        CAPTURE(row_no);
        const long step = row.peak ? 150 : 50;
        const auto d = select_mode(gen_value(row.gen, lim), lim, soc_value(row.soc, 50.0), 50.0,
                                   step, peak);
        CHECK(d.mode == row.mode);
        CHECK(d.classification == row.cls);
        ++row_no;
    }
}

TEST_CASE("broader peak-block scope also stops balance charging in peak") {
    const GenerationLimits lim = limits_800_200();
    PeakCalendar peak;
    peak.add(100, 200);
    const auto listing = select_mode(500.0, lim, 40.0, 50.0, 150, peak,
                                     PeakChargingBlock::surplus_only);
    CHECK(listing.mode == EssMode::charging);
    const auto broad = select_mode(500.0, lim, 40.0, 50.0, 150, peak,
                                   PeakChargingBlock::all_charging);
    CHECK(broad.mode == EssMode::standby);
}

TEST_CASE("non-finite generation falls into the defensive standby arm") {
    const auto d = select_mode(std::nan(""), limits_800_200(), 50.0, 50.0, 0, PeakCalendar{});
    CHECK(d.mode == EssMode::standby);
    CHECK(d.branch == "non-finite-standby");
}

TEST_CASE("generation limits from the 1..5 sample match the hand computation") {
    std::map<std::string, std::vector<double>> hist{{"East", {1.0, 2.0, 3.0, 4.0, 5.0}}};
    const auto lims = compute_limits(hist, {1, 1, 1, 1, 1});
    REQUIRE(lims.size() == 1);
    CHECK(lims[0].mu == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(lims[0].sigma == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
    CHECK(lims[0].gen_max_lim == doctest::Approx(3.0 + 1.5 * std::sqrt(2.5)).epsilon(1e-9));
    CHECK(lims[0].gen_min_lim == doctest::Approx(3.0 - 1.5 * std::sqrt(2.5)).epsilon(1e-9));
    // 5.3717 / 0.6283 to four decimals
    CHECK(lims[0].gen_max_lim == doctest::Approx(5.3717).epsilon(1e-4));
    CHECK(lims[0].gen_min_lim == doctest::Approx(0.6283).epsilon(1e-4));
}

TEST_CASE("constant samples collapse both limits onto the mean") {
    std::map<std::string, std::vector<double>> hist{{"East", {500.0, 500.0, 500.0}}};
    const auto lims = compute_limits(hist, {1, 1, 1});
    CHECK(lims[0].sigma == 0.0);
    CHECK(lims[0].gen_max_lim == 500.0);
    CHECK(lims[0].gen_min_lim == 500.0);
}

TEST_CASE("limits scale homogeneously with the samples") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    const std::vector<double> base{120.0, 340.0, 80.0, 510.0, 260.0, 450.0};
    const auto ref = compute_limits({{"z", base}}, std::vector<int>(base.size(), 1));
    for (int i = 0; i < 100; ++i) {
        const double k = scale(rng);
        std::vector<double> scaled;
        for (double v : base) scaled.push_back(v * k);
        const auto lims = compute_limits({{"z", scaled}}, std::vector<int>(base.size(), 1));
        CHECK(lims[0].gen_max_lim == doctest::Approx(ref[0].gen_max_lim * k).epsilon(1e-9));
        CHECK(lims[0].gen_min_lim == doctest::Approx(ref[0].gen_min_lim * k).epsilon(1e-9));
    }
}

TEST_CASE("too few samples per period raise an error") {
    std::map<std::string, std::vector<double>> hist{{"East", {1.0, 2.0}}};
    CHECK_THROWS_WITH_AS(compute_limits(hist, {1, 2}), doctest::Contains("insufficient samples"),
                         Error);
}

TEST_CASE("surplus charging absorbs the excess above the upper limit") {
    const EssUnit unit = table_unit();
    const GenerationLimits lim = limits_800_200();
    EssDecision d;
    d.mode = EssMode::charging;
    d.classification = EssClassification::variability_mitigation;
    CHECK(dispatch_power(d, 900.0, lim, unit, 50.0, 5) == doctest::Approx(-100.0));

    // with 5 MWh of headroom the energy cap binds: 5 / (1/12 h) = 60 MW
    const double soc_low_headroom = 100.0 - 5.0 / unit.energy_capacity_mwh * 100.0;
    CHECK(dispatch_power(d, 900.0, lim, unit, soc_low_headroom, 5) == doctest::Approx(-60.0));
    // with 20 MWh headroom the cap is 240 MW and the 100 MW surplus applies
    const double soc_20 = 100.0 - 20.0 / unit.energy_capacity_mwh * 100.0;
    CHECK(dispatch_power(d, 900.0, lim, unit, soc_20, 5) == doctest::Approx(-100.0));
}

TEST_CASE("balance charging runs at rating when the one-step target exceeds it") {
    const EssUnit unit = table_unit();
    const GenerationLimits lim = limits_800_200();
    EssDecision d;
    d.mode = EssMode::charging;
    d.classification = EssClassification::soc_balancing;
    // 10% of 3440 MWh = 344 MWh needed; one 5-min step at 860 MW moves 71.67 MWh
    CHECK(dispatch_power(d, 500.0, lim, unit, 40.0, 5) == doctest::Approx(-860.0));
}

TEST_CASE("shortage discharging covers the deficit below the lower limit") {
    const EssUnit unit = table_unit();
    const GenerationLimits lim = limits_800_200();
    EssDecision d;
    d.mode = EssMode::discharging;
    d.classification = EssClassification::variability_mitigation;
    CHECK(dispatch_power(d, 100.0, lim, unit, 50.0, 5) == doctest::Approx(100.0));
    // empty storage cannot discharge
    CHECK(dispatch_power(d, 100.0, lim, unit, 0.0, 5) == doctest::Approx(0.0));
}

TEST_CASE("soc update arithmetic on the reference unit") {
    const EssUnit unit = table_unit();
    CHECK(update_soc(unit, 50.0, 0.0, 5).soc_pct == 50.0);
    // 860 MW charged for 1 h into 3440 MWh is 25 points
    const auto up = update_soc(unit, 50.0, -860.0, 60);
    CHECK(up.soc_pct == doctest::Approx(75.0).epsilon(1e-12));
    CHECK_FALSE(up.clipped);
    // a discharge crossing zero clips and reports it
    const auto down = update_soc(unit, 1.0, 860.0, 60);
    CHECK(down.soc_pct == 0.0);
    CHECK(down.clipped);
}

TEST_CASE("round-trip efficiency enters soc both ways") {
    EssUnit unit = table_unit();
    unit.charge_efficiency = 0.9;
    unit.discharge_efficiency = 0.8;
    const auto charged = update_soc(unit, 50.0, -344.0, 60);  // 344 MWh * 0.9 = 309.6 -> +9%
    CHECK(charged.soc_pct == doctest::Approx(59.0).epsilon(1e-12));
    const auto discharged = update_soc(unit, 50.0, 344.0, 60);  // 344/0.8 = 430 -> -12.5%
    CHECK(discharged.soc_pct == doctest::Approx(37.5).epsilon(1e-12));
}

TEST_CASE("energy ledger buckets and marketable ratio") {
    EnergyLedger ledger;
    EssDecision standby;
    ledger.accumulate(standby, 0.0, 5);
    CHECK(ledger.total_mwh() == 0.0);
    CHECK_FALSE(ledger.marketable_ratio().has_value());

    EssDecision mit;
    mit.mode = EssMode::charging;
    mit.classification = EssClassification::variability_mitigation;
    ledger.accumulate(mit, -100.0, 5);
    CHECK(ledger.mitigation.charge_mwh == doctest::Approx(100.0 / 12.0).epsilon(1e-12));

    EnergyLedger window;
    EssDecision bal = mit;
    bal.classification = EssClassification::soc_balancing;
    window.accumulate(mit, -70.0, 60);
    window.accumulate(bal, 30.0, 60);
    REQUIRE(window.marketable_ratio().has_value());
    CHECK(*window.marketable_ratio() == doctest::Approx(0.70).epsilon(1e-12));

    // ledgers merge associatively
    EnergyLedger merged = ledger;
    merged += window;
    CHECK(merged.total_mwh() == doctest::Approx(ledger.total_mwh() + window.total_mwh()));
}

TEST_CASE("soc conservation over a random dispatch walk") {
    EssUnit unit = table_unit();
    unit.charge_efficiency = 0.95;
    unit.discharge_efficiency = 0.92;
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> gen_dist(0.0, 1000.0);
    const GenerationLimits lim = limits_800_200();
    PeakCalendar peak;
    peak.add(72, 108);

    double soc = 50.0;
    double charged_mwh = 0.0, discharged_mwh = 0.0;
    const double start_energy = soc / 100.0 * unit.energy_capacity_mwh;
    for (long step = 0; step < 2000; ++step) {
        const double gen = gen_dist(rng);
        const auto d = select_mode(gen, lim, soc, unit.soc_balance_pct, step % 288, peak);
        const double p = dispatch_power(d, gen, lim, unit, soc, 5);
        const auto upd = update_soc(unit, soc, p, 5);
        CHECK_FALSE(upd.clipped);  // dispatch caps must prevent clipping
        soc = upd.soc_pct;
        CHECK(soc >= 0.0);
        CHECK(soc <= 100.0);
        if (p < 0.0)
            charged_mwh += -p / 12.0;
        else
            discharged_mwh += p / 12.0;
    }
    const double end_energy = soc / 100.0 * unit.energy_capacity_mwh;
    const double expected = start_energy + charged_mwh * unit.charge_efficiency -
                            discharged_mwh / unit.discharge_efficiency;
    CHECK(std::abs(end_energy - expected) < 1e-9);
}
