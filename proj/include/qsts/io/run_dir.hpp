#pragma once

#include <string>

#include "qsts/io/config.hpp"
#include "qsts/scheduler/scheduler.hpp"

namespace qsts {

/// Writes the run directory:
///   manifest.json            config hash, schema versions, plan
///   inputs/                  copies of network/profiles/calendar/config
///   states.bin               columnar binary state matrix (schema v1)
///   actions.csv              step,kind,device,before,after,trigger
///   ess.csv                  step,unit,mode,power_mw,soc_pct,classification,clipped
///   diagnostics.csv          per-step solver and operator diagnostics
///   failures.csv             segment failures, when any
/// Re-running analysis needs nothing outside the directory.
void write_run_directory(const std::string& dir, const AnnualResultStore& store,
                         const LoadedCase& lc, const RunPlan& plan);

struct LoadedRun {
    NetworkModel model;
    AnnualResultStore store;
    RunConfig config;
    PeriodMap periods;
    std::vector<GenerationLimits> limits;
};

LoadedRun load_run_directory(const std::string& dir);

void write_states_bin(const std::string& path, const AnnualResultStore& store,
                      const NetworkModel& model, const std::string& start_timestamp);
void read_states_bin(const std::string& path, const NetworkModel& model,
                     AnnualResultStore& store);

}  // namespace qsts
