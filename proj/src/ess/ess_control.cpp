#include "qsts/ess/ess_control.hpp"

#include <algorithm>
#include <cmath>

namespace qsts {

int PeriodMap::period_of_day(int day) const {
    for (const Range& r : ranges)
        if (day >= r.start_day && day <= r.end_day) return r.period;
    return 1;
}

bool PeakCalendar::in_peak(long step) const {
    auto it = std::upper_bound(intervals.begin(), intervals.end(), step,
                               [](long s, const Interval& iv) { return s < iv.start; });
    if (it == intervals.begin()) return false;
    --it;
    return step >= it->start && step < it->end;
}

void PeakCalendar::add(long start, long end) {
    intervals.push_back({start, end});
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
}

void PeakCalendar::validate_within_day(long steps_per_day) const {
    long prev_end = -1;
    for (const Interval& iv : intervals) {
        if (iv.start >= iv.end) throw ConfigError("empty peak interval");
        if (iv.start < prev_end) throw ConfigError("overlapping peak intervals");
        if (iv.start / steps_per_day != (iv.end - 1) / steps_per_day)
            throw ConfigError("peak interval crosses a day boundary");
        prev_end = iv.end;
    }
}

std::vector<GenerationLimits> compute_limits(
    const std::map<std::string, std::vector<double>>& zone_history_mw,
    const std::vector<int>& sample_period, SigmaEstimator estimator) {
    std::vector<GenerationLimits> out;
    for (const auto& [zone, samples] : zone_history_mw) {
        if (samples.size() != sample_period.size())
            throw Error("zone history and period assignment differ in length for zone " + zone);
        std::map<int, std::vector<double>> by_period;
        for (std::size_t i = 0; i < samples.size(); ++i)
            by_period[sample_period[i]].push_back(samples[i]);
        for (const auto& [period, values] : by_period) {
            if (values.size() < 2)
                throw Error("insufficient samples for zone " + zone + " period " +
                            std::to_string(period));
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            const double denom = estimator == SigmaEstimator::sample
                                     ? static_cast<double>(values.size() - 1)
                                     : static_cast<double>(values.size());
            const double sigma = std::sqrt(ss / denom);
            GenerationLimits lim;
            lim.zone = zone;
            lim.period = period;
            lim.mu = mean;
            lim.sigma = sigma;
            lim.gen_max_lim = mean + 1.5 * sigma;
            lim.gen_min_lim = mean - 1.5 * sigma;
            out.push_back(lim);
        }
    }
    return out;
}

EssDecision select_mode(double gen_mw, const GenerationLimits& limits, double soc_pct,
                        double soc_balance_pct, long step, const PeakCalendar& peak,
                        PeakChargingBlock block_scope) {
    EssDecision d;
    if (!std::isfinite(gen_mw)) {
        // unreachable for real-valued inputs; defensive arm
        d.branch = "non-finite-standby";
        return d;
    }
    const bool in_peak = peak.in_peak(step);
    if (gen_mw >= limits.gen_max_lim) {
        // surplus generation from the wind fleet
        if (in_peak) {
            d.mode = EssMode::standby;
            d.branch = "surplus-peak-standby";
        } else {
            d.mode = EssMode::charging;
            d.classification = EssClassification::variability_mitigation;
            d.branch = "surplus-charge";
        }
    } else if (gen_mw <= limits.gen_min_lim) {
        // generation shortage
        d.mode = EssMode::discharging;
        d.classification = EssClassification::variability_mitigation;
        d.branch = "shortage-discharge";
    } else {
        // within limits: regulate toward the balance level
        if (soc_pct < soc_balance_pct) {
            if (block_scope == PeakChargingBlock::all_charging && in_peak) {
                d.mode = EssMode::standby;
                d.branch = "balance-peak-standby";
            } else {
                d.mode = EssMode::charging;
                d.classification = EssClassification::soc_balancing;
                d.branch = "balance-charge";
            }
        } else if (soc_pct > soc_balance_pct) {
            d.mode = EssMode::discharging;
            d.classification = EssClassification::soc_balancing;
            d.branch = "balance-discharge";
        } else {
            d.mode = EssMode::standby;
            d.branch = "balance-hold";
        }
    }
    return d;
}

double dispatch_power(const EssDecision& decision, double gen_mw, const GenerationLimits& limits,
                      const EssUnit& unit, double soc_pct, int resolution_minutes) {
    if (decision.mode == EssMode::standby) return 0.0;
    const double hours = resolution_minutes / kMinutesPerHour;
    const double stored_mwh = soc_pct / 100.0 * unit.energy_capacity_mwh;
    const double headroom_mwh = (100.0 - soc_pct) / 100.0 * unit.energy_capacity_mwh;

    if (decision.mode == EssMode::charging) {
        double target;
        if (decision.classification == EssClassification::variability_mitigation)
            target = gen_mw - limits.gen_max_lim;  // absorb the excess
        else
            target = (unit.soc_balance_pct - soc_pct) / 100.0 * unit.energy_capacity_mwh /
                     (hours * unit.charge_efficiency);
        const double soc_cap = headroom_mwh / (hours * unit.charge_efficiency);
        const double p = std::min({std::max(target, 0.0), unit.power_capacity_mw, soc_cap});
        return -p;
    }

    double target;
    if (decision.classification == EssClassification::variability_mitigation)
        target = limits.gen_min_lim - gen_mw;  // cover the shortfall
    else
        target = (soc_pct - unit.soc_balance_pct) / 100.0 * unit.energy_capacity_mwh *
                 unit.discharge_efficiency / hours;
    const double soc_cap = stored_mwh * unit.discharge_efficiency / hours;
    return std::min({std::max(target, 0.0), unit.power_capacity_mw, soc_cap});
}

SocUpdate update_soc(const EssUnit& unit, double soc_pct, double applied_power_mw,
                     int resolution_minutes) {
    const double hours = resolution_minutes / kMinutesPerHour;
    double soc = soc_pct;
    if (applied_power_mw < 0.0)  // charging
        soc += -applied_power_mw * hours * unit.charge_efficiency / unit.energy_capacity_mwh * 100.0;
    else if (applied_power_mw > 0.0)
        soc -= applied_power_mw * hours / (unit.discharge_efficiency * unit.energy_capacity_mwh) * 100.0;
    SocUpdate upd;
    upd.clipped = soc < 0.0 || soc > 100.0;
    upd.soc_pct = std::clamp(soc, 0.0, 100.0);
    return upd;
}

void EnergyLedger::accumulate(const EssDecision& decision, double applied_power_mw,
                              int resolution_minutes) {
    if (applied_power_mw == 0.0) return;
    const double mwh = std::abs(applied_power_mw) * resolution_minutes / kMinutesPerHour;
    Bucket& b = decision.classification == EssClassification::variability_mitigation ? mitigation
                                                                                     : balancing;
    if (applied_power_mw < 0.0)
        b.charge_mwh += mwh;
    else
        b.discharge_mwh += mwh;
}

double EnergyLedger::total_mwh() const {
    return mitigation.charge_mwh + mitigation.discharge_mwh + balancing.charge_mwh +
           balancing.discharge_mwh;
}

std::optional<double> EnergyLedger::marketable_ratio() const {
    const double total = total_mwh();
    if (total == 0.0) return std::nullopt;
    return mitigation_mwh() / total;
}

EnergyLedger& EnergyLedger::operator+=(const EnergyLedger& other) {
    mitigation.charge_mwh += other.mitigation.charge_mwh;
    mitigation.discharge_mwh += other.mitigation.discharge_mwh;
    balancing.charge_mwh += other.balancing.charge_mwh;
    balancing.discharge_mwh += other.balancing.discharge_mwh;
    return *this;
}

}  // namespace qsts
