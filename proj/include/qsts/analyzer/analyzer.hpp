#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsts/scheduler/scheduler.hpp"

namespace qsts {

/// Half-open step range into the store.
struct MetricWindow {
    long t0 = 0;
    long t1 = 0;
    static MetricWindow all(const AnnualResultStore& store) {
        return {0, store.horizon_steps};
    }
    static MetricWindow day(const AnnualResultStore& store, int day) {
        const long spd = 24L * 60L / store.resolution_minutes;
        return {day * spd, (day + 1) * spd};
    }
    static MetricWindow week(const AnnualResultStore& store, int week) {
        const long spw = 7L * 24L * 60L / store.resolution_minutes;
        return {week * spw, (week + 1) * spw};
    }
    bool contains(long t) const { return t >= t0 && t < t1; }
};

struct LossSeries {
    std::vector<long> steps;
    std::vector<double> injection_mw;  // generation minus demand balance
    std::vector<double> branch_mw;     // sum of branch I^2 R
    double max_mw = 0.0;
    double mean_mw = 0.0;
};

/// Per-step system losses by both formulas; they must agree to solver
/// tolerance at every converged step.
LossSeries losses(const AnnualResultStore& store, const NetworkModel& model,
                  const MetricWindow& window);

struct DeviceSwitching {
    long disconnects = 0;
    long reconnects = 0;
    long tap_ops = 0;
    long shunt_ops = 0;
};

std::map<std::string, DeviceSwitching> switching_counts(const AnnualResultStore& store,
                                                        const MetricWindow& window);

struct VoltageStats {
    std::string bus;
    double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
    long excursions = 0;       // samples outside [v_min, v_max]
    long longest_run = 0;      // longest consecutive excursion
    long samples = 0;
};

std::vector<VoltageStats> voltage_statistics(const AnnualResultStore& store,
                                             const NetworkModel& model,
                                             const MetricWindow& window);

struct FlexibilitySeries {
    std::vector<long> steps;
    std::vector<double> pii_mw;  // import headroom
    std::vector<double> pde_mw;  // export reduction headroom
};

FlexibilitySeries flexibility(const AnnualResultStore& store, const NetworkModel& model,
                              const MetricWindow& window);

struct EssUtilization {
    std::string unit;
    EnergyLedger ledger;
    std::optional<double> marketable_ratio;
};

std::vector<EssUtilization> ess_utilization(const AnnualResultStore& store,
                                            const NetworkModel& model,
                                            const MetricWindow& window);

/// Daily ledgers per unit, for the peak/low-week bar charts.
std::map<std::pair<std::string, int>, EnergyLedger> ess_daily_ledgers(
    const AnnualResultStore& store, const NetworkModel& model, const MetricWindow& window);

struct DistributionSummary {
    std::string zone;
    int period = 0;
    double gen_max_lim = 0.0, gen_min_lim = 0.0;
    std::vector<double> quantiles_base;  // 1%,5%,25%,50%,75%,95%,99%
    std::vector<double> quantiles_net;
    std::vector<long> histogram_base;  // fixed-width bins over [lo, hi]
    std::vector<long> histogram_net;
    double bin_lo = 0.0, bin_hi = 0.0;
    long samples = 0;
    long base_above_max = 0;   // sample counts beyond the limits
    long net_above_max = 0;
    long base_below_min = 0;
    long net_below_min = 0;
    long capped_steps = 0;     // steps where the unit ran at rating or clipped
};

DistributionSummary generation_distribution(const AnnualResultStore& store,
                                            const NetworkModel& model, const std::string& zone,
                                            int period, const PeriodMap& periods,
                                            const GenerationLimits& limits,
                                            const MetricWindow& window);

struct LoadHeatmap {
    enum class Aggregate { daily_peak, daily_mean };
    std::vector<std::vector<double>> day_by_week;  // [7][weeks(+1)]
    Aggregate aggregate = Aggregate::daily_peak;
};

LoadHeatmap load_heatmap(const AnnualResultStore& store, const NetworkModel& model,
                         LoadHeatmap::Aggregate aggregate = LoadHeatmap::Aggregate::daily_peak);

/// Reactive capability still available for voltage support (artifact-defined:
/// committed controlling sources' q_max minus solved Q).
std::vector<double> reactive_margin_series(const AnnualResultStore& store,
                                           const NetworkModel& model, const MetricWindow& window);

struct ResolutionStudyRow {
    int resolution_minutes = 0;
    double wall_seconds = 0.0;
    double loss_mean_mw = 0.0;
    double loss_max_mw = 0.0;
    long steps = 0;
    bool failed = false;
};

/// Runs the same horizon at each resolution (native profiles downsampled by
/// stride) and reports wall time plus loss statistics side by side.
std::vector<ResolutionStudyRow> resolution_study(const SimulationCase& native,
                                                 const std::vector<int>& resolutions);

/// Linear-interpolation quantile on a copy of the data.
double quantile(std::vector<double> values, double p);

}  // namespace qsts
