#include "qsts/scheduler/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace qsts {

std::vector<SegmentSpec> partition(long horizon_steps, int resolution_minutes) {
    if (horizon_steps <= 0) throw ConfigError("empty horizon");
    const long steps_per_week = 7L * 24L * 60L / resolution_minutes;
    std::vector<SegmentSpec> segments;
    long t = 0;
    int index = 0;
    while (t < horizon_steps) {
        long t1 = t + steps_per_week;
        // a trailing partial week folds into the final segment
        if (horizon_steps - t1 < steps_per_week) t1 = horizon_steps;
        segments.push_back({index++, t, t1, SegmentSpec::Init::chained, 0});
        t = t1;
    }
    return segments;
}

RunPlan make_plan(long horizon_steps, int resolution_minutes, RunPlan::Mode mode, int worker_count,
                  long warm_in_steps) {
    RunPlan plan;
    plan.segments = partition(horizon_steps, resolution_minutes);
    plan.mode = mode;
    plan.worker_count = std::max(1, worker_count);
    plan.warm_in_steps = warm_in_steps;
    if (mode == RunPlan::Mode::parallel) {
        for (auto& seg : plan.segments) {
            if (seg.t0 == 0) continue;  // the first segment starts from the true t=0 point
            seg.initialization = SegmentSpec::Init::base_case;
            seg.warm_in_steps = std::min(warm_in_steps, seg.t0 - 1);
        }
    }
    return plan;
}

AnnualResultStore merge(std::vector<SegmentResult> segments, const SimulationCase& sim) {
    std::sort(segments.begin(), segments.end(),
              [](const SegmentResult& a, const SegmentResult& b) {
                  return a.segment_index < b.segment_index;
              });
    AnnualResultStore store;
    store.horizon_steps = sim.engine.horizon_steps;
    store.resolution_minutes = sim.engine.resolution_minutes;
    long last_step = -1;
    for (auto& seg : segments) {
        for (auto& st : seg.states) {
            if (st.time_index <= last_step)
                throw OverlapDetected("segment " + std::to_string(seg.segment_index) +
                                      " overlaps at step " + std::to_string(st.time_index));
            last_step = st.time_index;
            store.states.push_back(std::move(st));
        }
        store.actions.insert(store.actions.end(), seg.actions.begin(), seg.actions.end());
        store.diagnostics.insert(store.diagnostics.end(), seg.diagnostics.begin(),
                                 seg.diagnostics.end());
        store.ess_trace.insert(store.ess_trace.end(), seg.ess_trace.begin(), seg.ess_trace.end());
        if (seg.failure)
            store.failures.push_back({seg.segment_index, std::move(*seg.failure)});
    }
    return store;
}

namespace {

SegmentResult run_one(const SimulationCase& sim, const SegmentSpec& spec) {
    QstsEngine engine(sim);
    try {
        if (spec.t0 == 0) {
            const SystemState s0 = engine.initialize();
            return engine.run_segment(s0, spec.t0, spec.t1, spec.index);
        }
        const long start = spec.t0 - spec.warm_in_steps - 1;
        const SystemState from = engine.initialize_at(start);
        return engine.run_segment(from, spec.t0, spec.t1, spec.index, spec.warm_in_steps);
    } catch (const Error& e) {
        SegmentResult failed;
        failed.segment_index = spec.index;
        failed.first_step = spec.t0;
        failed.failure = StepFailure{spec.t0, 0, e.what(), {}};
        return failed;
    }
}

}  // namespace

AnnualResultStore execute(const RunPlan& plan, const SimulationCase& sim) {
    std::vector<SegmentResult> results(plan.segments.size());

    if (plan.mode == RunPlan::Mode::sequential) {
        QstsEngine engine(sim);
        SystemState state = engine.initialize();
        for (std::size_t k = 0; k < plan.segments.size(); ++k) {
            const SegmentSpec& spec = plan.segments[k];
            results[k] = engine.run_segment(state, spec.t0, spec.t1, spec.index);
            if (results[k].failure) break;  // downstream segments have no valid start
            state = *results[k].final_state;
        }
        return merge(std::move(results), sim);
    }

    // parallel: segments are independent tasks over shared immutable inputs;
    // a fixed-slot result vector keeps the outcome order-independent
    std::atomic<std::size_t> next{0};
    const int workers =
        std::max(1, std::min<int>(plan.worker_count, static_cast<int>(plan.segments.size())));
    auto work = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= plan.segments.size()) return;
            results[k] = run_one(sim, plan.segments[k]);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    return merge(std::move(results), sim);
}

}  // namespace qsts
