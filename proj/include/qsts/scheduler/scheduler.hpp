#pragma once

#include <optional>
#include <vector>

#include "qsts/engine/engine.hpp"

namespace qsts {

struct SegmentSpec {
    int index = 0;
    long t0 = 0;  // recorded range [t0, t1)
    long t1 = 0;
    enum class Init { base_case, chained } initialization = Init::chained;
    long warm_in_steps = 0;  // solved but discarded settling steps (base_case)
};

struct RunPlan {
    enum class Mode { parallel, sequential };
    std::vector<SegmentSpec> segments;
    int worker_count = 1;
    Mode mode = Mode::sequential;
    long warm_in_steps = 12;
};

/// Weekly segments over the horizon; a trailing partial week folds into the
/// final segment.
std::vector<SegmentSpec> partition(long horizon_steps, int resolution_minutes);

RunPlan make_plan(long horizon_steps, int resolution_minutes, RunPlan::Mode mode,
                  int worker_count, long warm_in_steps = 12);

/// The merged year: chronological states plus logs, diagnostics and any
/// per-segment failures (surviving segments still contribute).
struct AnnualResultStore {
    long horizon_steps = 0;
    int resolution_minutes = 5;
    std::vector<SystemState> states;
    ActionLog actions;
    std::vector<StepDiagnostics> diagnostics;
    std::vector<EssTraceRow> ess_trace;
    struct SegmentFailure {
        int segment_index = 0;
        StepFailure failure;
    };
    std::vector<SegmentFailure> failures;
    std::vector<SegmentSpec> plan_segments;
};

class OverlapDetected : public Error {
public:
    using Error::Error;
};

/// Runs the plan. Sequential mode chains segments exactly; parallel mode
/// starts every segment from the planned base case re-targeted to its first
/// profiles, discards the warm-in window, and merges in segment order. The
/// result is bitwise independent of worker_count.
AnnualResultStore execute(const RunPlan& plan, const SimulationCase& sim);

AnnualResultStore merge(std::vector<SegmentResult> segments, const SimulationCase& sim);

}  // namespace qsts
