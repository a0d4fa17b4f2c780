#include <doctest.h>

#include <cmath>

#include "engine_fixture.hpp"
#include "qsts/powerflow/security.hpp"

using namespace qsts;
using namespace qsts::testing;

TEST_CASE("step plan: no profile change means one sub-step of zero deltas") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(m, 5, 20, {{"ld2", {250.0}}, {"ld3", {100.0}}, {"w1", {200.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    const SystemState s0 = engine.initialize();
    const StepPlan plan = engine.plan_step(s0, 1);
    CHECK(plan.substeps == 1);
    CHECK(plan.max_bus_dp_mw == doctest::Approx(0.0));
}

TEST_CASE("step plan: sub-step count follows the worst per-bus swing") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(m, 5, 20,
                           {{"ld2", {250.0, 500.0}}, {"ld3", {100.0}}, {"w1", {200.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    const SystemState s0 = engine.initialize();

    SUBCASE("one load rising 250 MW against a 100 MW cap gives three fractions") {
        const StepPlan plan = engine.plan_step(s0, 1);
        CHECK(plan.substeps == 3);
        CHECK(plan.max_bus_dp_mw == doctest::Approx(250.0));
    }

    SUBCASE("a larger wind swing on another bus dominates") {
        auto ds2 = make_dataset(m, 5, 20,
                                {{"ld2", {250.0, 500.0}}, {"ld3", {100.0}}, {"w1", {450.0, 50.0}}});
        SimulationCase sim2 = make_case(m, ds2);
        QstsEngine engine2(sim2);
        const SystemState t0 = engine2.initialize();
        const StepPlan plan = engine2.plan_step(t0, 1);
        // b3 sees -400 of wind; b2 sees +250 of load
        CHECK(plan.substeps == 4);
        CHECK(plan.max_bus_dp_mw == doctest::Approx(400.0));
    }
}

TEST_CASE("missing profile coverage raises with device and step") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(m, 5, 3, {{"ld2", {250.0}}, {"ld3", {100.0}}, {"w1", {200.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    const SystemState s0 = engine.initialize();
    SystemState late = s0;
    late.time_index = 2;  // next step is 3, beyond the dataset
    CHECK_THROWS_AS((void)engine.plan_step(late, 3), MissingProfile);
}

TEST_CASE("constant profiles are an exact fixed point with zero operator actions") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(m, 5, 12, {{"ld2", {250.0}}, {"ld3", {100.0}}, {"w1", {200.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    SystemState state = engine.initialize();
    const SystemState first = state;
    for (int k = 0; k < 10; ++k) {
        StepOutcome out = engine.advance(state);
        REQUIRE_FALSE(out.failure.has_value());
        CHECK(out.actions.empty());
        state = out.state;
        CHECK(state.vm == first.vm);
        CHECK(state.va == first.va);
        CHECK(state.gen_p == first.gen_p);
        CHECK(state.shunt_steps_on == first.shunt_steps_on);
    }
}

TEST_CASE("final injections land exactly on the profile targets") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(
        m, 5, 10, {{"ld2", {250.0, 421.7, 380.1}}, {"ld3", {100.0, 163.3, 90.0}}, {"w1", {200.0, 37.9, 320.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    SystemState state = engine.initialize();
    for (int t = 1; t <= 2; ++t) {
        StepOutcome out = engine.advance(state);
        REQUIRE_FALSE(out.failure.has_value());
        state = out.state;
        CHECK(std::abs(state.load_p[0] - ds.series[0].values[t]) < 1e-12);
        CHECK(std::abs(state.load_p[1] - ds.series[1].values[t]) < 1e-12);
        CHECK(std::abs(state.gen_p[1] - ds.series[2].values[t]) < 1e-12);
    }
}

TEST_CASE("advance replays bit-identically from a recorded state") {
    NetworkModel m = engine_net(true);
    auto ds = make_dataset(m, 5, 10,
                           {{"ld2", {250.0, 300.0, 290.0, 410.0}},
                            {"ld3", {100.0, 120.0, 80.0, 60.0}},
                            {"w1", {200.0, 260.0, 410.0, 150.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    SystemState state = engine.initialize();
    std::vector<SystemState> recorded{state};
    for (int t = 1; t <= 3; ++t) {
        StepOutcome out = engine.advance(state);
        REQUIRE_FALSE(out.failure.has_value());
        state = out.state;
        recorded.push_back(state);
    }
    // independent engine instance, replay from each recorded point
    QstsEngine replay(sim);
    for (std::size_t k = 0; k + 1 < recorded.size(); ++k) {
        StepOutcome out = replay.advance(recorded[k]);
        REQUIRE_FALSE(out.failure.has_value());
        CHECK(out.state == recorded[k + 1]);
    }
}

TEST_CASE("sub-stepping keeps the intermediate swing residual at or below the full-step path") {
    NetworkModel m = engine_net();
    // one violent wind drop
    auto ds = make_dataset(m, 5, 6,
                           {{"ld2", {250.0}}, {"ld3", {100.0}}, {"w1", {450.0, 50.0, 50.0}}});

    SimulationCase substepped = make_case(m, ds);
    substepped.engine.max_injection_per_substep_mw = 100.0;  // J = 4
    QstsEngine engine_sub(substepped);
    SystemState s0 = engine_sub.initialize();
    StepOutcome sub = engine_sub.advance(s0);
    REQUIRE_FALSE(sub.failure.has_value());
    CHECK(sub.diagnostics.substeps == 4);

    SimulationCase full = make_case(m, ds);
    full.engine.max_injection_per_substep_mw = 1e9;  // single full injection
    QstsEngine engine_full(full);
    SystemState f0 = engine_full.initialize();
    StepOutcome one = engine_full.advance(f0);
    REQUIRE_FALSE(one.failure.has_value());
    CHECK(one.diagnostics.substeps == 1);

    CHECK(sub.diagnostics.worst_substep_residual_mw <=
          one.diagnostics.worst_substep_residual_mw + 1e-9);
    // both settle on the same operating point
    for (std::size_t i = 0; i < m.buses.size(); ++i)
        CHECK(std::abs(sub.state.vm[i] - one.state.vm[i]) < 1e-6);
}

TEST_CASE("doubling the sub-step cap does not move the accepted endpoint") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(m, 5, 6,
                           {{"ld2", {250.0, 430.0}}, {"ld3", {100.0, 170.0}}, {"w1", {200.0, 90.0}}});
    SimulationCase a = make_case(m, ds);
    a.engine.max_injection_per_substep_mw = 100.0;
    SimulationCase b = make_case(m, ds);
    b.engine.max_injection_per_substep_mw = 200.0;
    QstsEngine ea(a), eb(b);
    StepOutcome oa = ea.advance(ea.initialize());
    StepOutcome ob = eb.advance(eb.initialize());
    REQUIRE_FALSE(oa.failure.has_value());
    REQUIRE_FALSE(ob.failure.has_value());
    CHECK(oa.diagnostics.substeps != ob.diagnostics.substeps);
    for (std::size_t i = 0; i < m.buses.size(); ++i)
        CHECK(std::abs(oa.state.vm[i] - ob.state.vm[i]) < 1e-6);
    CHECK(std::abs(oa.state.gen_p[0] - ob.state.gen_p[0]) < 1e-6);
}

TEST_CASE("a profile step that sinks a low bus brings one capacitor step in") {
    NetworkModel m = engine_net(false, true);
    auto ds = make_dataset(m, 5, 6,
                           {{"ld2", {250.0}},
                            {"ld3", {100.0}},
                            {"w1", {200.0}},
                            {"ldlv", {40.0, 95.0}},
                            {"ldlv/q", {10.0, 45.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    SystemState state = engine.initialize();
    const int lv = m.bus_of("lv");
    StepOutcome out = engine.advance(state);
    REQUIRE_FALSE(out.failure.has_value());
    bool switched = false;
    for (const auto& a : out.actions)
        if (a.kind == ActionKind::shunt_switch && a.device == "cap") switched = true;
    CHECK(switched);
    CHECK(std::abs(out.state.vm[lv] - 1.0) <= sim.thresholds.deadband_low_pu + 1e-9);
}

TEST_CASE("run_segment counts and chaining") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(m, 60, 48, {{"ld2", {250.0}}, {"ld3", {100.0}}, {"w1", {200.0}}});
    SimulationCase sim = make_case(m, ds, 60);
    QstsEngine engine(sim);
    const SystemState s0 = engine.initialize();

    SUBCASE("one day at 60 minutes records 24 states") {
        SegmentResult seg = engine.run_segment(s0, 0, 24);
        REQUIRE_FALSE(seg.failure.has_value());
        CHECK(seg.states.size() == 24);
        CHECK(seg.states.front().time_index == 0);
        CHECK(seg.states.back().time_index == 23);
    }

    SUBCASE("a follow-on segment starts from the previous segment's last state") {
        SegmentResult first = engine.run_segment(s0, 0, 24);
        SegmentResult second = engine.run_segment(first.states.back(), 24, 48);
        REQUIRE_FALSE(second.failure.has_value());
        CHECK(second.states.size() == 24);
        CHECK(second.states.front().time_index == 24);
        // equivalent to one unpartitioned run
        SegmentResult whole = engine.run_segment(s0, 0, 48);
        CHECK(whole.states.size() == 48);
        CHECK(whole.states[24] == second.states[0]);
        CHECK(whole.states.back() == second.states.back());
    }
}

TEST_CASE("a failing step yields a partial segment with the failure recorded") {
    NetworkModel m = engine_net();
    // drive the b2 load beyond any feasible transfer at step 3
    auto ds = make_dataset(m, 5, 8,
                           {{"ld2", {250.0, 260.0, 270.0, 60000.0}},
                            {"ld3", {100.0}},
                            {"w1", {200.0}}});
    SimulationCase sim = make_case(m, ds);
    sim.engine.max_injection_per_substep_mw = 1e9;
    QstsEngine engine(sim);
    SystemState s0 = engine.initialize();
    SegmentResult seg = engine.run_segment(s0, 0, 8);
    REQUIRE(seg.failure.has_value());
    CHECK(seg.failure->time_index == 3);
    CHECK(seg.states.size() == 3);  // t = 0..2 survived
    CHECK_FALSE(seg.failure->trace.empty());
}

TEST_CASE("initialization failures carry diagnostics") {
    NetworkModel m = engine_net();
    // an unreachable voltage target: the only source cannot hold 1.4 pu
    m.buses[1].v_max = 1.45;
    m.buses[1].kind = BusKind::pv;
    m.buses[1].voltage_target = 1.40;
    Generator comp;
    comp.id = "sc2";
    comp.bus = "b2";
    comp.kind = GeneratorKind::compensator;
    comp.q_min = -5.0;
    comp.q_max = 5.0;  // far too small to hold the target
    m.generators.push_back(comp);
    m.finalize();
    auto ds = make_dataset(m, 5, 4, {{"ld2", {250.0}}, {"ld3", {100.0}}, {"w1", {200.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    CHECK_THROWS_AS((void)engine.initialize(), InitializationFailure);
}

TEST_CASE("zero-load model initializes at the targets with negligible losses") {
    NetworkModel m = engine_net();
    auto ds = make_dataset(m, 5, 4,
                           {{"ld2", {0.0}}, {"ld2/q", {0.0}}, {"ld3", {0.0}}, {"ld3/q", {0.0}},
                            {"w1", {0.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    SystemState s0 = engine.initialize();
    // line charging lifts the open network a hair above the targets
    for (double v : s0.vm) CHECK(std::abs(v - 1.0) < 2e-3);
    CHECK(total_loss(m, s0.topology(), s0.vm, s0.va) * m.system_base_mva < 0.01);
}

TEST_CASE("ess charges on a wind surplus and the trace records it") {
    NetworkModel m = engine_net(true);
    auto ds = make_dataset(m, 5, 6,
                           {{"ld2", {250.0}}, {"ld3", {100.0}}, {"w1", {200.0, 450.0}}});
    SimulationCase sim = make_case(m, ds);  // gen_max_lim 400
    QstsEngine engine(sim);
    SystemState s0 = engine.initialize();
    StepOutcome out = engine.advance(s0);
    REQUIRE_FALSE(out.failure.has_value());
    REQUIRE(out.ess_rows.size() == 1);
    CHECK(out.ess_rows[0].mode == EssMode::charging);
    CHECK(out.ess_rows[0].classification == EssClassification::variability_mitigation);
    CHECK(out.state.ess_power[0] == doctest::Approx(-50.0));  // 450 - 400
    CHECK(out.state.ess_soc[0] > 50.0);
    // net zone generation is back inside the band
    CHECK(out.state.gen_p[1] + out.state.ess_power[0] <= 400.0 + 1e-9);
}

TEST_CASE("states with unresolved findings carry the concession flag") {
    NetworkModel m = engine_net(false, true);
    // sink the low bus beyond what the capacitor bank and taps can restore
    auto ds = make_dataset(m, 5, 6,
                           {{"ld2", {250.0}},
                            {"ld3", {100.0}},
                            {"w1", {200.0}},
                            {"ldlv", {40.0, 170.0}},
                            {"ldlv/q", {10.0, 160.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    SystemState s0 = engine.initialize();
    StepOutcome out = engine.advance(s0);
    REQUIRE_FALSE(out.failure.has_value());
    CHECK(out.diagnostics.concession);
    CHECK(out.diagnostics.unresolved_violations > 0);
    bool named = false;
    for (const auto& v : out.diagnostics.violations) named |= v.device == "lv";
    CHECK(named);
}

namespace {

int action_stage(const OperatorAction& a) {
    if (a.trigger.rfind("balance", 0) == 0) return 0;
    if (a.trigger == "optimal-tracking redistribution" || a.trigger == "commitment rebalancing" ||
        a.trigger.rfind("fleet", 0) == 0)
        return 1;
    if (a.trigger == "reserve shortfall" || a.trigger == "corrective settling") return 2;
    return 3;  // voltage control
}

}  // namespace

TEST_CASE("within a step, actions follow the resolution-stage order per pass") {
    NetworkModel m = engine_net(false, true);
    // one step that needs both rebalancing and a capacitor switch
    auto ds = make_dataset(m, 5, 6,
                           {{"ld2", {250.0, 330.0}},
                            {"ld3", {100.0}},
                            {"w1", {200.0}},
                            {"ldlv", {40.0, 95.0}},
                            {"ldlv/q", {10.0, 45.0}}});
    SimulationCase sim = make_case(m, ds);
    QstsEngine engine(sim);
    StepOutcome out = engine.advance(engine.initialize());
    REQUIRE_FALSE(out.failure.has_value());
    REQUIRE(out.actions.size() >= 2);
    int stages_seen = 0;
    int wraparounds = 0;
    int prev = -1;
    for (const auto& a : out.actions) {
        const int stage = action_stage(a);
        if (stage < prev) ++wraparounds;  // a new resolution pass began
        prev = stage;
        stages_seen |= 1 << stage;
    }
    CHECK((stages_seen & 1) != 0);  // balancing fired
    CHECK((stages_seen & 8) != 0);  // voltage control fired
    // bounded iteration: at most one wraparound per additional pass/sub-step
    CHECK(wraparounds <= out.diagnostics.substeps * 2 - 1);
}
