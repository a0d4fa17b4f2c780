#include <doctest.h>

#include <cmath>

#include "cases.hpp"
#include "qsts/operator/virtual_operator.hpp"

using namespace qsts;
using namespace qsts::testing;

namespace {

Generator dispatchable(std::string id, std::string bus, double p_min, double p_max, double opt,
                       double ramp = 50.0, bool agc = true, int priority = 0) {
    Generator g;
    g.id = std::move(id);
    g.bus = std::move(bus);
    g.p_min = p_min;
    g.p_max = p_max;
    g.q_min = -300.0;
    g.q_max = 300.0;
    g.ramp_up = g.ramp_down = ramp;
    g.agc_participant = agc;
    g.optimal_dispatch = opt;
    g.startup_priority = priority;
    return g;
}

/// Three-bus star: slack unit at b1 (not AGC), two AGC units at b2, load at b3.
NetworkModel balance_net(double load_mw) {
    NetworkModel m;
    m.name = "balance";
    m.buses.push_back(make_bus("b1", BusKind::slack));
    m.buses.push_back(make_bus("b2", BusKind::pv));
    m.buses.push_back(make_bus("b3", BusKind::pq));
    m.branches.push_back(make_line("l12", "b1", "b2", 0.0, 0.05));
    m.branches.push_back(make_line("l13", "b1", "b3", 0.0, 0.05));
    m.branches.push_back(make_line("l23", "b2", "b3", 0.0, 0.05));
    m.generators.push_back(dispatchable("gs", "b1", 0.0, 1000.0, 100.0, 50.0, false));
    m.generators.push_back(dispatchable("ga", "b2", 0.0, 200.0, 140.0));  // headroom set by state
    m.generators.push_back(dispatchable("gb", "b2", 0.0, 160.0, 120.0));
    m.loads.push_back({"ld", "b3", load_mw, 0.0});
    m.finalize();
    return m;
}

struct Rig {
    NetworkModel model;
    PowerFlowSettings settings;
    OperatorThresholds thresholds;
    PowerFlowSolver solver;
    OperatingContext ctx;
    VirtualOperator vo;
    SystemState state;

    explicit Rig(NetworkModel m, OperatorThresholds th = {})
        : model(std::move(m)),
          thresholds(th),
          solver(model),
          ctx(model, solver, settings, th.voltage_reduction_block_pu),
          vo(model, th) {
        state = SystemState::from_model(model);
    }

    void solve() { REQUIRE(ctx.resolve(state).converged); }
};

}  // namespace

TEST_CASE("zero residual leaves the dispatch untouched") {
    Rig rig(balance_net(360.0));
    // schedule exactly covers the (lossless) load
    rig.state.gen_p = {100.0, 140.0, 120.0};
    rig.solve();
    CHECK(std::abs(rig.state.swing_residual_mw) < 1e-6);
    const auto actions = rig.vo.restore_balance(rig.ctx, rig.state, 5);
    CHECK(actions.empty());
}

TEST_CASE("a deficit splits proportionally to headroom") {
    // 50 MW deficit against units with 60 and 40 MW of headroom
    Rig rig(balance_net(410.0));
    rig.state.gen_p = {100.0, 140.0, 120.0};
    rig.solve();
    CHECK(rig.state.swing_residual_mw == doctest::Approx(50.0).epsilon(1e-9));
    const auto actions = rig.vo.restore_balance(rig.ctx, rig.state, 5);
    REQUIRE(actions.size() == 2);
    CHECK(actions[0].device == "ga");
    CHECK(actions[0].after - actions[0].before == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(actions[1].device == "gb");
    CHECK(actions[1].after - actions[1].before == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(std::abs(rig.state.swing_residual_mw) < rig.thresholds.balance_threshold_mw);
}

TEST_CASE("ramp limits cap the split and escalate the remainder") {
    OperatorThresholds th;
    NetworkModel m = balance_net(410.0);
    m.generators[1].ramp_up = 2.0;  // 10 MW over a 5-minute step
    m.generators[2].ramp_up = 2.0;
    Rig rig(std::move(m), th);
    rig.state.gen_p = {100.0, 140.0, 120.0};
    rig.solve();
    double unresolved = 0.0;
    const auto actions = rig.vo.restore_balance(rig.ctx, rig.state, 5, &unresolved);
    REQUIRE(actions.size() == 2);
    CHECK(actions[0].after - actions[0].before == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(actions[1].after - actions[1].before == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(unresolved == doctest::Approx(30.0).epsilon(1e-6));
    // invariant: nobody beyond limits or ramp
    CHECK(rig.state.gen_p[1] <= 200.0);
    CHECK(rig.state.gen_p[2] <= 160.0);
}

TEST_CASE("units at their optimal dispatch trigger no commitment changes") {
    Rig rig(balance_net(360.0));
    rig.state.gen_p = {100.0, 140.0, 120.0};
    rig.solve();
    const auto actions = rig.vo.enforce_dguoo(rig.ctx, rig.state, 5);
    CHECK(actions.empty());
}

TEST_CASE("deviation exactly at the band is compliant (closed interval)") {
    OperatorThresholds th;
    th.dguoo_band_mw = 100.0;
    NetworkModel m = balance_net(460.0);
    Rig rig(std::move(m), th);
    rig.state.gen_p = {100.0, 240.0, 120.0};  // ga exactly +100 above optimal
    rig.solve();
    const auto actions = rig.vo.enforce_dguoo(rig.ctx, rig.state, 5);
    CHECK(actions.empty());
}

TEST_CASE("a unit far above optimal starts the next unit and both end inside the band") {
    OperatorThresholds th;
    th.dguoo_band_mw = 100.0;
    NetworkModel m;
    m.name = "dguoo";
    m.buses.push_back(make_bus("b1", BusKind::slack));
    m.buses.push_back(make_bus("b2", BusKind::pq));
    m.branches.push_back(make_line("l12", "b1", "b2", 0.0, 0.05));
    m.generators.push_back(dispatchable("ga", "b1", 50.0, 600.0, 300.0, 30.0, true, 1));
    Generator idle = dispatchable("gb", "b1", 50.0, 200.0, 100.0, 30.0, true, 2);
    idle.committed = false;
    m.generators.push_back(idle);
    m.loads.push_back({"ld", "b2", 420.0, 0.0});
    m.finalize();
    Rig rig(std::move(m), th);
    rig.state.gen_p[0] = 420.0;  // +120 above optimal
    rig.solve();

    const auto actions = rig.vo.enforce_dguoo(rig.ctx, rig.state, 5);
    bool started = false;
    for (const auto& a : actions) started |= a.kind == ActionKind::gen_start && a.device == "gb";
    CHECK(started);
    CHECK(rig.state.gen_committed[1] == 1);
    CHECK(std::abs(rig.state.gen_p[0] - 300.0) <= th.dguoo_band_mw + 1e-6);
    CHECK(std::abs(rig.state.gen_p[1] - 100.0) <= th.dguoo_band_mw + 1e-6);
}

TEST_CASE("agc reserve definition and commitment filter") {
    NetworkModel m = balance_net(360.0);
    m.generators[1].p_max = 100.0;  // (100, 70) committed
    m.generators[2].p_max = 50.0;   // (50, 50) committed
    Rig rig(std::move(m));
    rig.state.gen_p = {100.0, 70.0, 50.0};
    // committed AGC units only: (100-70) + (50-50) = 30
    CHECK(rig.vo.agc_reserve_mw(rig.state) == doctest::Approx(30.0));

    rig.state.gen_committed[2] = 0;
    rig.state.gen_p[2] = 0.0;
    CHECK(rig.vo.agc_reserve_mw(rig.state) == doctest::Approx(30.0));

    // no participants -> empty sum
    rig.state.gen_committed[1] = 0;
    CHECK(rig.vo.agc_reserve_mw(rig.state) == doctest::Approx(0.0));
}

TEST_CASE("reserve already adequate leaves the hierarchy idle") {
    OperatorThresholds th;
    th.agc_reserve_min_mw = 50.0;
    Rig rig(balance_net(360.0), th);
    rig.state.gen_p = {100.0, 140.0, 120.0};
    rig.solve();
    double shortfall = 1.0;
    const auto actions = rig.vo.corrective_hierarchy(rig.ctx, rig.state, 5, 0.0, &shortfall);
    CHECK(actions.empty());
    CHECK(shortfall == 0.0);
}

TEST_CASE("a start-up alone clears a 40 MW reserve gap") {
    OperatorThresholds th;
    th.agc_reserve_min_mw = 140.0;
    NetworkModel m = balance_net(360.0);
    Generator idle = dispatchable("gc", "b2", 5.0, 50.0, 25.0, 30.0, true, 3);
    idle.committed = false;
    m.generators.push_back(idle);
    Rig rig(std::move(m), th);
    rig.state.gen_p = {100.0, 140.0, 120.0};
    rig.state.gen_p.resize(4, 0.0);
    rig.solve();
    // committed reserve: (200-140)+(160-120) = 100 -> 40 short
    double shortfall = 0.0;
    const auto actions = rig.vo.corrective_hierarchy(rig.ctx, rig.state, 5, 0.0, &shortfall);
    REQUIRE_FALSE(actions.empty());
    CHECK(actions[0].kind == ActionKind::gen_start);
    CHECK(actions[0].device == "gc");
    CHECK(shortfall == 0.0);
    CHECK(rig.vo.agc_reserve_mw(rig.state) >= th.agc_reserve_min_mw);
}

TEST_CASE("exhausted stages report the remaining shortfall") {
    OperatorThresholds th;
    th.agc_reserve_min_mw = 160.0;  // 60 MW short of the committed 100
    NetworkModel m = balance_net(460.0);  // load = schedule + import, system balanced
    Intertie tie;
    tie.id = "imp";
    tie.bus = "b1";
    tie.direction = IntertieDirection::import;
    tie.schedule_limit_min = 0.0;
    tie.schedule_limit_max = 125.0;
    tie.current_schedule = 100.0;  // 25 MW of headroom
    m.interties.push_back(tie);
    Rig rig(std::move(m), th);
    rig.state.gen_p = {100.0, 140.0, 120.0};
    rig.state.tie_schedule = {100.0};
    rig.solve();

    double shortfall = 0.0;
    const auto actions = rig.vo.corrective_hierarchy(rig.ctx, rig.state, 5, 0.0, &shortfall);
    REQUIRE(actions.size() >= 1);
    bool tie_adjusted = false;
    for (const auto& a : actions)
        if (a.kind == ActionKind::intertie_adjust) {
            tie_adjusted = true;
            CHECK(a.after - a.before == doctest::Approx(25.0).epsilon(1e-6));
        }
    CHECK(tie_adjusted);
    // 25 MW of import lets balancing back the fleet down 25 MW; 35 remain
    CHECK(shortfall == doctest::Approx(35.0).epsilon(1e-3));
}

namespace {

/// Slack EHV bus feeding a low-voltage bus through a regulating transformer;
/// capacitor bank and load sit on the low side.
NetworkModel low_voltage_net(double load_mw, double load_mvar, double cap_step_mvar,
                             int cap_steps = 4) {
    NetworkModel m;
    m.name = "lowv";
    m.buses.push_back(make_bus("hv", BusKind::slack, 1.0));
    Bus lv = make_bus("lv", BusKind::pq, 1.0, VoltageClass::low);
    m.buses.push_back(lv);
    m.generators.push_back(dispatchable("g1", "hv", 0.0, 500.0, load_mw, 50.0, true));
    Transformer tr;
    tr.id = "tr";
    tr.from_bus = "hv";
    tr.to_bus = "lv";
    tr.reactance = 0.10;
    tr.tap_min = 0.9;
    tr.tap_max = 1.1;
    tr.tap_step = 0.0125;
    tr.tap_position = 0;
    tr.regulated_bus = "lv";
    tr.deadband = 0.02;
    m.transformers.push_back(tr);
    if (cap_steps > 0) {
        ShuntBank sh;
        sh.id = "cap";
        sh.bus = "lv";
        sh.kind = ShuntKind::capacitor;
        sh.step_mvar = cap_step_mvar;
        sh.steps_total = cap_steps;
        sh.steps_on = 0;
        m.shunts.push_back(sh);
    }
    m.loads.push_back({"ld", "lv", load_mw, load_mvar});
    m.finalize();
    return m;
}

}  // namespace

TEST_CASE("buses inside their deadband see no voltage actions") {
    Rig rig(low_voltage_net(20.0, 5.0, 5.0));
    rig.solve();
    REQUIRE(std::abs(rig.state.vm[1] - 1.0) < rig.thresholds.deadband_low_pu);
    std::vector<FictitiousAccount> accounts;
    std::vector<Violation> unresolved;
    const auto actions = rig.vo.control_voltage_low(rig.ctx, rig.state, &accounts, &unresolved);
    CHECK(actions.empty());
    CHECK(unresolved.empty());
}

TEST_CASE("an undervoltage is fixed by the capacitor sized for it") {
    // ~0.03 pu low; one 30 MVAr step is worth ~0.03 pu at x=0.1
    Rig rig(low_voltage_net(60.0, 30.0, 30.0));
    rig.solve();
    const double target = 1.0;
    REQUIRE(rig.state.vm[1] < target - rig.thresholds.deadband_low_pu);
    std::vector<FictitiousAccount> accounts;
    std::vector<Violation> unresolved;
    const auto actions = rig.vo.control_voltage_low(rig.ctx, rig.state, &accounts, &unresolved);
    REQUIRE_FALSE(actions.empty());
    CHECK(actions[0].kind == ActionKind::shunt_switch);
    CHECK(std::abs(rig.state.vm[1] - target) <= rig.thresholds.deadband_low_pu);
    CHECK(unresolved.empty());
    // fictitious bookkeeping: need = delivered + residual by construction,
    // and the chosen combination leaves less residual than doing nothing
    REQUIRE_FALSE(accounts.empty());
    const auto& acc = accounts[0];
    CHECK(acc.q_needed_mvar == doctest::Approx(acc.q_delivered_mvar + acc.residual_mvar));
    CHECK(std::abs(acc.residual_mvar) < std::abs(acc.q_needed_mvar));
}

TEST_CASE("with the shunt exhausted the tap steps until the band is reached") {
    NetworkModel m = low_voltage_net(60.0, 30.0, 5.0, 0);  // no capacitor at all
    Rig rig(std::move(m));
    rig.solve();
    REQUIRE(rig.state.vm[1] < 1.0 - rig.thresholds.deadband_low_pu);
    std::vector<Violation> unresolved;
    const auto actions = rig.vo.control_voltage_low(rig.ctx, rig.state, nullptr, &unresolved);
    REQUIRE_FALSE(actions.empty());
    for (const auto& a : actions) CHECK(a.kind == ActionKind::tap_step);
    // ratio moved down to lift the regulated side
    CHECK(rig.state.tap_position[0] < 0);
    CHECK(std::abs(rig.state.vm[1] - 1.0) <= rig.thresholds.deadband_low_pu);
    CHECK(unresolved.empty());
}

namespace {

/// Slack plus one EHV bus over long parallel switchable lines whose charging
/// lifts the far bus at light load; a reactor bank sits at the far bus.
NetworkModel high_voltage_net(bool with_reactor, bool line_out) {
    NetworkModel m;
    m.name = "highv";
    m.buses.push_back(make_bus("h1", BusKind::slack, 1.0));
    Bus h2 = make_bus("h2", BusKind::pq, 1.0);
    h2.v_max = 1.05;
    m.buses.push_back(h2);
    Branch a = make_line("la", "h1", "h2", 0.002, 0.15, 0.8, 1000.0, true);
    Branch b = make_line("lb", "h1", "h2", 0.002, 0.15, 0.8, 1000.0, true);
    b.in_service = !line_out;
    m.branches.push_back(a);
    m.branches.push_back(b);
    m.generators.push_back(dispatchable("g1", "h1", 0.0, 500.0, 60.0, 50.0, true));
    if (with_reactor) {
        ShuntBank sh;
        sh.id = "rx";
        sh.bus = "h2";
        sh.kind = ShuntKind::reactor;
        sh.step_mvar = 40.0;
        sh.steps_total = 2;
        sh.steps_on = 0;
        m.shunts.push_back(sh);
    }
    m.loads.push_back({"ld", "h2", 60.0, 10.0});
    m.finalize();
    return m;
}

}  // namespace

TEST_CASE("light-load overvoltage is absorbed by switching a reactor in") {
    OperatorThresholds th;
    th.deadband_high_pu = 0.02;
    NetworkModel m = high_voltage_net(true, false);
    m.loads[0].p_mw = 5.0;  // light load: line charging lifts the far bus
    m.loads[0].q_mvar = 0.0;
    Rig rig(std::move(m), th);
    rig.solve();
    REQUIRE(rig.state.vm[1] > 1.0 + th.deadband_high_pu);
    std::vector<Violation> unresolved;
    const auto actions = rig.vo.control_voltage_high(rig.ctx, rig.state, &unresolved);
    REQUIRE_FALSE(actions.empty());
    CHECK(actions[0].kind == ActionKind::shunt_switch);
    CHECK(actions[0].device == "rx");
    CHECK(rig.state.shunt_steps_on[0] > 0);
    CHECK(rig.state.vm[1] <= 1.0 + th.deadband_high_pu + 1e-9);
}

TEST_CASE("an undervoltage reconnects the available line first") {
    OperatorThresholds th;
    th.deadband_high_pu = 0.02;
    NetworkModel m = high_voltage_net(false, true);  // lb starts disconnected
    m.loads[0].p_mw = 150.0;
    m.loads[0].q_mvar = 80.0;
    Rig rig(std::move(m), th);
    rig.solve();
    REQUIRE(rig.state.vm[1] < 1.0 - th.deadband_high_pu);
    std::vector<Violation> unresolved;
    const auto actions = rig.vo.control_voltage_high(rig.ctx, rig.state, &unresolved);
    REQUIRE_FALSE(actions.empty());
    CHECK(actions[0].kind == ActionKind::line_reconnect);
    CHECK(actions[0].device == "lb");
    CHECK(rig.state.branch_in_service[1] == 1);
    CHECK(rig.state.vm[1] > 1.0 - th.deadband_high_pu);
}

TEST_CASE("a device in cooldown is skipped for the next remedy in the ladder") {
    OperatorThresholds th;
    th.deadband_high_pu = 0.02;
    th.switching_cooldown_steps = 3;
    NetworkModel m = high_voltage_net(true, false);
    m.loads[0].p_mw = 5.0;
    m.loads[0].q_mvar = 0.0;
    Rig rig(std::move(m), th);
    rig.state.time_index = 10;
    // the reactor acted (was switched out) one step ago: reversal locked
    const CooldownIndex slots(rig.model);
    rig.state.device_last_action[slots.shunt(0)] = 9;
    rig.state.device_last_direction[slots.shunt(0)] = +1;  // last move raised voltage
    rig.solve();
    REQUIRE(rig.state.vm[1] > 1.0 + th.deadband_high_pu);
    std::vector<Violation> unresolved;
    const auto actions = rig.vo.control_voltage_high(rig.ctx, rig.state, &unresolved);
    REQUIRE_FALSE(actions.empty());
    // not the reactor: the ladder moved on to line disconnection
    CHECK(actions[0].kind == ActionKind::line_disconnect);
    CHECK(rig.state.shunt_steps_on[0] == 0);
}

TEST_CASE("agc reserve is non-increasing in any unit's output") {
    Rig rig(balance_net(360.0));
    rig.state.gen_p = {100.0, 140.0, 120.0};
    const double base = rig.vo.agc_reserve_mw(rig.state);
    for (std::size_t gi = 1; gi <= 2; ++gi) {
        SystemState bumped = rig.state;
        bumped.gen_p[gi] += 15.0;
        CHECK(rig.vo.agc_reserve_mw(bumped) == doctest::Approx(base - 15.0));
        bumped.gen_p[gi] -= 40.0;
        CHECK(rig.vo.agc_reserve_mw(bumped) >= base);
    }
}
