#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "qsts/engine/engine.hpp"
#include "qsts/scheduler/scheduler.hpp"

namespace qsts {

enum class LimitSource { computed, supplied };

/// One run configuration file, resolved: paths, engine settings, operator
/// thresholds, ESS limit policy, scheduler plan. The config file is
/// authoritative; only the output directory and worker count may be
/// overridden from the environment (QSTS_OUTPUT_DIR, QSTS_WORKERS).
struct RunConfig {
    std::string config_path;
    std::string network_path;
    std::string profiles_path;
    std::string peak_calendar_path;  // optional
    std::string output_dir = "run";
    unsigned seed = 1;  // reserved; runs are deterministic

    EngineConfig engine;
    PowerFlowSettings powerflow;
    OperatorThresholds thresholds;

    LimitSource limit_source = LimitSource::computed;
    std::string history_profiles_path;  // defaults to profiles_path
    SigmaEstimator sigma = SigmaEstimator::sample;
    std::vector<GenerationLimits> supplied_limits;
    PeriodMap periods;

    RunPlan::Mode mode = RunPlan::Mode::sequential;
    int workers = 1;
    long warm_in_steps = 12;

    std::vector<std::pair<std::string, std::vector<std::string>>> reserve_monitor_ids;

    std::uint64_t config_hash = 0;  // FNV-1a of the raw config bytes
};

RunConfig load_config(const std::string& path);
std::uint64_t fnv1a(const std::string& bytes);

/// Fully loaded run inputs, owning the model/profiles the SimulationCase
/// points into.
struct LoadedCase {
    NetworkModel model;
    TimeSeriesDataset profiles;
    RunConfig config;
    SimulationCase sim;  // wired to the members above
};

/// Loads the network and profiles, computes or adopts the generation limits,
/// builds the peak calendar, and wires a SimulationCase.
std::unique_ptr<LoadedCase> load_case(const RunConfig& config);

PeakCalendar load_peak_calendar(const std::string& path, int resolution_minutes);
void write_peak_calendar(const PeakCalendar& peak, int resolution_minutes,
                         const std::string& path);

/// Per-zone aggregate of wind generation series, used as the statistics
/// history for the generation limits.
std::map<std::string, std::vector<double>> zone_wind_history(const NetworkModel& model,
                                                             const TimeSeriesDataset& profiles);

/// Period assignment per sample of a dataset.
std::vector<int> sample_periods(const TimeSeriesDataset& profiles, const PeriodMap& periods);

}  // namespace qsts
