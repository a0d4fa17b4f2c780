#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsts/common.hpp"
#include "qsts/network/model.hpp"

namespace qsts {

/// Per-zone, per-period generation thresholds mu +/- 1.5 sigma that trigger
/// storage charge/discharge.
struct GenerationLimits {
    std::string zone;
    int period = 0;
    double gen_max_lim = 0.0;  // MW
    double gen_min_lim = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
};

/// Day-of-horizon -> period number (1-based). Days not covered fall back to
/// period 1.
struct PeriodMap {
    struct Range {
        int period;
        int start_day;  // inclusive
        int end_day;    // inclusive
    };
    std::vector<Range> ranges;
    int period_of_day(int day) const;
};

/// Peak-load windows in step indices, assembled from per-day windows.
struct PeakCalendar {
    struct Interval {
        long start;  // inclusive
        long end;    // exclusive
    };
    std::vector<Interval> intervals;  // sorted, non-overlapping

    bool in_peak(long step) const;
    void add(long start, long end);
    void validate_within_day(long steps_per_day) const;
};

enum class EssMode { charging, discharging, standby };
enum class EssClassification { variability_mitigation, soc_balancing, none };

struct EssDecision {
    EssMode mode = EssMode::standby;
    double power_mw = 0.0;  // positive = discharging into the grid
    EssClassification classification = EssClassification::none;
    std::string branch;  // which rule fired, for the trace
};

enum class SigmaEstimator { sample, population };

/// How the peak-charging prohibition is scoped: exactly as the mode-selection
/// listing writes it (surplus branch only) or to every charging decision.
enum class PeakChargingBlock { surplus_only, all_charging };

/// mu/sigma generation limits per (zone, period) from historical zone
/// aggregates. Throws Error("insufficient samples...") below 2 samples.
std::vector<GenerationLimits> compute_limits(
    const std::map<std::string, std::vector<double>>& zone_history_mw,
    const std::vector<int>& sample_period,  // period per sample index
    SigmaEstimator estimator = SigmaEstimator::sample);

/// Threshold mode selection. Pure function of time-t inputs.
EssDecision select_mode(double gen_mw, const GenerationLimits& limits, double soc_pct,
                        double soc_balance_pct, long step, const PeakCalendar& peak,
                        PeakChargingBlock block_scope = PeakChargingBlock::surplus_only);

/// Applied power for a decision: mitigation moves net generation back inside
/// the limit band, balancing moves SOC toward its target in one step; both
/// capped by rating and by SOC feasibility including efficiency.
double dispatch_power(const EssDecision& decision, double gen_mw, const GenerationLimits& limits,
                      const EssUnit& unit, double soc_pct, int resolution_minutes);

struct SocUpdate {
    double soc_pct = 0.0;
    bool clipped = false;
};

/// SOC evolution over one step; clipping to [0, 100] is reported, not silent.
SocUpdate update_soc(const EssUnit& unit, double soc_pct, double applied_power_mw,
                     int resolution_minutes);

/// Energy bookkeeping split by direction and classification.
struct EnergyLedger {
    struct Bucket {
        double charge_mwh = 0.0;
        double discharge_mwh = 0.0;
    };
    Bucket mitigation;
    Bucket balancing;

    void accumulate(const EssDecision& decision, double applied_power_mw, int resolution_minutes);
    double total_mwh() const;
    double mitigation_mwh() const { return mitigation.charge_mwh + mitigation.discharge_mwh; }
    /// mitigation share of all energy moved; empty when nothing moved
    std::optional<double> marketable_ratio() const;
    EnergyLedger& operator+=(const EnergyLedger& other);
};

}  // namespace qsts
