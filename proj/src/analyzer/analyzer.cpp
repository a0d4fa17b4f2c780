#include "qsts/analyzer/analyzer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "qsts/powerflow/security.hpp"

namespace qsts {

namespace {

/// Net supplied power per state: generation + storage + net imports + demand
/// relief, minus load. What is left is network loss.
double injection_balance_mw(const SystemState& st, const NetworkModel& m) {
    double total = 0.0;
    for (std::size_t gi = 0; gi < m.generators.size(); ++gi)
        if (st.gen_committed[gi]) total += st.gen_p[gi];
    for (double p : st.ess_power) total += p;
    for (std::size_t ti = 0; ti < m.interties.size(); ++ti)
        total += m.interties[ti].direction == IntertieDirection::import ? st.tie_schedule[ti]
                                                                        : -st.tie_schedule[ti];
    for (std::size_t di = 0; di < m.demand_resources.size(); ++di)
        if (st.dr_active[di]) total += m.demand_resources[di].capacity_mw;
    for (double p : st.load_p) total -= p;
    return total;
}

}  // namespace

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw Error("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

LossSeries losses(const AnnualResultStore& store, const NetworkModel& model,
                  const MetricWindow& window) {
    LossSeries out;
    double sum = 0.0;
    for (const SystemState& st : store.states) {
        if (!window.contains(st.time_index)) continue;
        const double inj = injection_balance_mw(st, model);
        const double br =
            total_loss(model, st.topology(), st.vm, st.va) * model.system_base_mva;
        out.steps.push_back(st.time_index);
        out.injection_mw.push_back(inj);
        out.branch_mw.push_back(br);
        out.max_mw = std::max(out.max_mw, inj);
        sum += inj;
    }
    if (!out.steps.empty()) out.mean_mw = sum / static_cast<double>(out.steps.size());
    return out;
}

std::map<std::string, DeviceSwitching> switching_counts(const AnnualResultStore& store,
                                                        const MetricWindow& window) {
    std::map<std::string, DeviceSwitching> out;
    for (const OperatorAction& a : store.actions) {
        if (!window.contains(a.time_index)) continue;
        switch (a.kind) {
            case ActionKind::line_disconnect: ++out[a.device].disconnects; break;
            case ActionKind::line_reconnect: ++out[a.device].reconnects; break;
            case ActionKind::tap_step: ++out[a.device].tap_ops; break;
            case ActionKind::shunt_switch: ++out[a.device].shunt_ops; break;
            default: break;
        }
    }
    return out;
}

std::vector<VoltageStats> voltage_statistics(const AnnualResultStore& store,
                                             const NetworkModel& model,
                                             const MetricWindow& window) {
    std::vector<VoltageStats> out;
    for (std::size_t bus = 0; bus < model.buses.size(); ++bus) {
        std::vector<double> samples;
        long excursions = 0, longest = 0, run = 0;
        for (const SystemState& st : store.states) {
            if (!window.contains(st.time_index)) continue;
            const double v = st.vm[bus];
            samples.push_back(v);
            if (v < model.buses[bus].v_min || v > model.buses[bus].v_max) {
                ++excursions;
                longest = std::max(longest, ++run);
            } else {
                run = 0;
            }
        }
        if (samples.empty()) continue;
        VoltageStats vs;
        vs.bus = model.buses[bus].id;
        vs.median = quantile(samples, 0.5);
        vs.q1 = quantile(samples, 0.25);
        vs.q3 = quantile(samples, 0.75);
        vs.min = *std::min_element(samples.begin(), samples.end());
        vs.max = *std::max_element(samples.begin(), samples.end());
        vs.excursions = excursions;
        vs.longest_run = longest;
        vs.samples = static_cast<long>(samples.size());
        out.push_back(std::move(vs));
    }
    return out;
}

FlexibilitySeries flexibility(const AnnualResultStore& store, const NetworkModel& model,
                              const MetricWindow& window) {
    FlexibilitySeries out;
    for (const SystemState& st : store.states) {
        if (!window.contains(st.time_index)) continue;
        double pii = 0.0, pde = 0.0;
        for (std::size_t ti = 0; ti < model.interties.size(); ++ti) {
            const Intertie& tie = model.interties[ti];
            if (tie.direction == IntertieDirection::import)
                pii += tie.schedule_limit_max - st.tie_schedule[ti];
            else
                pde += st.tie_schedule[ti] - tie.schedule_limit_min;
        }
        out.steps.push_back(st.time_index);
        out.pii_mw.push_back(pii);
        out.pde_mw.push_back(pde);
    }
    return out;
}

std::vector<EssUtilization> ess_utilization(const AnnualResultStore& store,
                                            const NetworkModel& model,
                                            const MetricWindow& window) {
    std::vector<EssUtilization> out(model.ess_units.size());
    for (std::size_t ei = 0; ei < model.ess_units.size(); ++ei)
        out[ei].unit = model.ess_units[ei].id;
    for (const EssTraceRow& row : store.ess_trace) {
        if (!window.contains(row.time_index)) continue;
        EssDecision d;
        d.classification = row.classification;
        out[row.unit].ledger.accumulate(d, row.power_mw, store.resolution_minutes);
    }
    for (auto& u : out) u.marketable_ratio = u.ledger.marketable_ratio();
    return out;
}

std::map<std::pair<std::string, int>, EnergyLedger> ess_daily_ledgers(
    const AnnualResultStore& store, const NetworkModel& model, const MetricWindow& window) {
    const long spd = 24L * 60L / store.resolution_minutes;
    std::map<std::pair<std::string, int>, EnergyLedger> out;
    for (const EssTraceRow& row : store.ess_trace) {
        if (!window.contains(row.time_index)) continue;
        EssDecision d;
        d.classification = row.classification;
        const int day = static_cast<int>(row.time_index / spd);
        out[{model.ess_units[row.unit].id, day}].accumulate(d, row.power_mw,
                                                            store.resolution_minutes);
    }
    return out;
}

DistributionSummary generation_distribution(const AnnualResultStore& store,
                                            const NetworkModel& model, const std::string& zone,
                                            int period, const PeriodMap& periods,
                                            const GenerationLimits& limits,
                                            const MetricWindow& window) {
    const long spd = 24L * 60L / store.resolution_minutes;
    DistributionSummary out;
    out.zone = zone;
    out.period = period;
    out.gen_max_lim = limits.gen_max_lim;
    out.gen_min_lim = limits.gen_min_lim;

    std::vector<double> base, net;
    for (const SystemState& st : store.states) {
        if (!window.contains(st.time_index)) continue;
        if (periods.period_of_day(static_cast<int>(st.time_index / spd)) != period) continue;
        double wind = 0.0, storage = 0.0;
        for (std::size_t gi = 0; gi < model.generators.size(); ++gi) {
            const Generator& g = model.generators[gi];
            if (g.kind != GeneratorKind::wind) continue;
            if (model.buses[model.bus_of(g.bus)].zone == zone) wind += st.gen_p[gi];
        }
        for (std::size_t ei = 0; ei < model.ess_units.size(); ++ei)
            if (model.ess_units[ei].zone == zone) storage += st.ess_power[ei];
        base.push_back(wind);
        net.push_back(wind + storage);
    }
    for (std::size_t ei = 0; ei < model.ess_units.size(); ++ei) {
        if (model.ess_units[ei].zone != zone) continue;
        for (const EssTraceRow& row : store.ess_trace) {
            if (row.unit != static_cast<int>(ei) || !window.contains(row.time_index)) continue;
            if (periods.period_of_day(static_cast<int>(row.time_index / spd)) != period) continue;
            if (row.clipped ||
                std::abs(row.power_mw) >= model.ess_units[ei].power_capacity_mw - 1e-9)
                ++out.capped_steps;
        }
    }

    out.samples = static_cast<long>(base.size());
    if (base.empty()) return out;
    const std::vector<double> ps{0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};
    for (double p : ps) {
        out.quantiles_base.push_back(quantile(base, p));
        out.quantiles_net.push_back(quantile(net, p));
    }
    out.bin_lo = std::min(*std::min_element(base.begin(), base.end()),
                          *std::min_element(net.begin(), net.end()));
    out.bin_hi = std::max(*std::max_element(base.begin(), base.end()),
                          *std::max_element(net.begin(), net.end()));
    const int bins = 40;
    out.histogram_base.assign(bins, 0);
    out.histogram_net.assign(bins, 0);
    const double width = (out.bin_hi - out.bin_lo) / bins;
    auto bin_of = [&](double x) {
        if (width <= 0.0) return 0;
        return std::min(bins - 1, static_cast<int>((x - out.bin_lo) / width));
    };
    for (double x : base) {
        ++out.histogram_base[bin_of(x)];
        if (x > limits.gen_max_lim) ++out.base_above_max;
        if (x < limits.gen_min_lim) ++out.base_below_min;
    }
    for (double x : net) {
        ++out.histogram_net[bin_of(x)];
        if (x > limits.gen_max_lim) ++out.net_above_max;
        if (x < limits.gen_min_lim) ++out.net_below_min;
    }
    return out;
}

LoadHeatmap load_heatmap(const AnnualResultStore& store, const NetworkModel& model,
                         LoadHeatmap::Aggregate aggregate) {
    (void)model;
    const long spd = 24L * 60L / store.resolution_minutes;
    std::map<long, std::pair<double, long>> per_day;  // day -> (agg, count)
    for (const SystemState& st : store.states) {
        double demand = 0.0;
        for (double p : st.load_p) demand += p;
        const long day = st.time_index / spd;
        auto& slot = per_day[day];
        if (aggregate == LoadHeatmap::Aggregate::daily_peak)
            slot.first = std::max(slot.first, demand);
        else
            slot.first += demand;
        ++slot.second;
    }
    LoadHeatmap out;
    out.aggregate = aggregate;
    const long days = per_day.empty() ? 0 : per_day.rbegin()->first + 1;
    const long weeks = (days + 6) / 7;
    out.day_by_week.assign(7, std::vector<double>(weeks, 0.0));
    for (const auto& [day, slot] : per_day) {
        const double value = aggregate == LoadHeatmap::Aggregate::daily_peak
                                 ? slot.first
                                 : slot.first / static_cast<double>(slot.second);
        out.day_by_week[day % 7][day / 7] = value;
    }
    return out;
}

std::vector<double> reactive_margin_series(const AnnualResultStore& store,
                                           const NetworkModel& model,
                                           const MetricWindow& window) {
    std::vector<double> out;
    for (const SystemState& st : store.states) {
        if (!window.contains(st.time_index)) continue;
        double margin = 0.0;
        for (std::size_t gi = 0; gi < model.generators.size(); ++gi) {
            const Generator& g = model.generators[gi];
            if (!g.controls_voltage() || !st.gen_committed[gi]) continue;
            margin += g.q_max - st.gen_q[gi];
        }
        out.push_back(margin);
    }
    return out;
}

std::vector<ResolutionStudyRow> resolution_study(const SimulationCase& native,
                                                 const std::vector<int>& resolutions) {
    std::vector<ResolutionStudyRow> rows;
    for (int res : resolutions) {
        ResolutionStudyRow row;
        row.resolution_minutes = res;
        if (res % native.engine.resolution_minutes != 0 || 60 % res != 0) {
            row.failed = true;
            rows.push_back(row);
            continue;
        }
        const int factor = res / native.engine.resolution_minutes;
        const TimeSeriesDataset ds = native.profiles->downsample(factor);
        SimulationCase sim = native;
        sim.profiles = &ds;
        sim.engine.resolution_minutes = res;
        sim.engine.horizon_steps = ds.steps;
        const auto start = std::chrono::steady_clock::now();
        try {
            RunPlan plan;
            plan.segments = {{0, 0, ds.steps, SegmentSpec::Init::chained, 0}};
            plan.mode = RunPlan::Mode::sequential;
            const AnnualResultStore store = execute(plan, sim);
            if (!store.failures.empty()) row.failed = true;
            const LossSeries ls = losses(store, *sim.model, MetricWindow::all(store));
            row.loss_mean_mw = ls.mean_mw;
            row.loss_max_mw = ls.max_mw;
            row.steps = static_cast<long>(store.states.size());
        } catch (const Error&) {
            row.failed = true;
        }
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace qsts
