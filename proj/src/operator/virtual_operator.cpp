#include "qsts/operator/virtual_operator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace qsts {

namespace {

struct ShuntMove {
    std::size_t shunt = 0;
    int delta = 0;       // steps switched (+in, -out)
    double q_mvar = 0.0; // estimated reactive effect at the bus
};

double shunt_step_q(const ShuntBank& sh, double vm) {
    const double sign = sh.kind == ShuntKind::capacitor ? 1.0 : -1.0;
    return sign * sh.step_mvar * vm * vm;
}

}  // namespace

VirtualOperator::VirtualOperator(const NetworkModel& model, const OperatorThresholds& thresholds)
    : model_(&model), thresholds_(thresholds), slots_(model) {}

bool VirtualOperator::cooldown_allows(const SystemState& state, std::size_t slot,
                                      int direction) const {
    const long last = state.device_last_action[slot];
    if (state.time_index - last >= thresholds_.switching_cooldown_steps) return true;
    // inside the window only same-direction continuations may proceed;
    // reversals wait the cooldown out
    return state.device_last_direction[slot] == static_cast<std::int8_t>(direction);
}

void VirtualOperator::mark_action(SystemState& state, std::size_t slot, int direction) const {
    state.device_last_action[slot] = state.time_index;
    state.device_last_direction[slot] = static_cast<std::int8_t>(direction);
}

double VirtualOperator::agc_reserve_mw(const SystemState& state) const {
    double reserve = 0.0;
    for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
        const Generator& g = model_->generators[gi];
        if (g.kind != GeneratorKind::dispatchable || !g.agc_participant) continue;
        if (!state.gen_committed[gi]) continue;
        reserve += g.p_max - state.gen_p[gi];
    }
    return reserve;
}

std::vector<OperatorAction> VirtualOperator::restore_balance(OperatingContext& ctx,
                                                             SystemState& state,
                                                             int resolution_minutes,
                                                             double* unresolved_deficit_mw) {
    std::vector<OperatorAction> actions;
    if (unresolved_deficit_mw) *unresolved_deficit_mw = 0.0;

    // ramp budget is per invocation: passes share it
    std::vector<double> moved(model_->generators.size(), 0.0);

    for (int pass = 0; pass < 3; ++pass) {
        const double residual = state.swing_residual_mw;
        if (std::abs(residual) <= thresholds_.balance_threshold_mw) break;
        const bool deficit = residual > 0.0;

        std::vector<std::size_t> units;
        std::vector<double> margins;
        double margin_sum = 0.0;
        for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
            const Generator& g = model_->generators[gi];
            if (g.kind != GeneratorKind::dispatchable || !g.agc_participant) continue;
            if (!state.gen_committed[gi]) continue;
            const double ramp_mw =
                (deficit ? g.ramp_up : g.ramp_down) * resolution_minutes - std::abs(moved[gi]);
            const double room = deficit ? g.p_max - state.gen_p[gi] : state.gen_p[gi] - g.p_min;
            const double margin = std::max(0.0, std::min(room, ramp_mw));
            if (margin <= 0.0) continue;
            units.push_back(gi);
            margins.push_back(margin);
            margin_sum += margin;
        }
        if (units.empty()) break;

        const double amount = std::min(std::abs(residual), margin_sum);
        const double sign = deficit ? 1.0 : -1.0;
        SystemState before = state;
        for (std::size_t k = 0; k < units.size(); ++k) {
            const double share = amount * margins[k] / margin_sum;
            if (share == 0.0) continue;
            const std::size_t gi = units[k];
            OperatorAction a;
            a.time_index = state.time_index;
            a.kind = ActionKind::gen_redispatch;
            a.device = model_->generators[gi].id;
            a.before = state.gen_p[gi];
            state.gen_p[gi] += sign * share;
            moved[gi] += sign * share;
            a.after = state.gen_p[gi];
            a.trigger = deficit ? "balance deficit" : "balance surplus";
            actions.push_back(std::move(a));
        }
        if (!ctx.resolve(state).converged) {
            state = std::move(before);  // keep the last solved point
            break;
        }
    }

    const double left = state.swing_residual_mw;
    if (unresolved_deficit_mw && left > thresholds_.balance_threshold_mw)
        *unresolved_deficit_mw = left;
    return actions;
}

std::vector<OperatorAction> VirtualOperator::redistribute_to_optimal(OperatingContext& ctx,
                                                                     SystemState& state,
                                                                     int resolution_minutes) {
    std::vector<OperatorAction> actions;
    std::vector<std::size_t> units;
    double total_p = 0.0, total_opt = 0.0;
    for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
        const Generator& g = model_->generators[gi];
        if (g.kind != GeneratorKind::dispatchable || !g.agc_participant) continue;
        if (!state.gen_committed[gi]) continue;
        units.push_back(gi);
        total_p += state.gen_p[gi];
        total_opt += g.optimal_dispatch;
    }
    if (units.empty()) return actions;

    const double fleet_dev = total_p - total_opt;
    double margin_sum = 0.0;
    std::vector<double> margins(units.size(), 0.0);
    for (std::size_t k = 0; k < units.size(); ++k) {
        const Generator& g = model_->generators[units[k]];
        margins[k] = fleet_dev >= 0.0 ? g.p_max - g.optimal_dispatch
                                      : g.optimal_dispatch - g.p_min;
        margin_sum += margins[k];
    }

    bool changed = false;
    for (std::size_t k = 0; k < units.size(); ++k) {
        const std::size_t gi = units[k];
        const Generator& g = model_->generators[gi];
        const double weight = margin_sum > 0.0 ? margins[k] / margin_sum
                                               : 1.0 / static_cast<double>(units.size());
        double target = g.optimal_dispatch + fleet_dev * weight;
        target = std::clamp(target, g.p_min, g.p_max);
        // ramp-limited approach to the target
        const double up = g.ramp_up * resolution_minutes;
        const double down = g.ramp_down * resolution_minutes;
        target = std::clamp(target, state.gen_p[gi] - down, state.gen_p[gi] + up);
        if (std::abs(target - state.gen_p[gi]) < 1e-9) continue;
        OperatorAction a;
        a.time_index = state.time_index;
        a.kind = ActionKind::gen_redispatch;
        a.device = g.id;
        a.before = state.gen_p[gi];
        a.after = target;
        a.trigger = "optimal-tracking redistribution";
        actions.push_back(std::move(a));
        state.gen_p[gi] = target;
        changed = true;
    }
    if (changed) ctx.resolve(state);
    return actions;
}

std::vector<OperatorAction> VirtualOperator::enforce_dguoo(OperatingContext& ctx,
                                                           SystemState& state,
                                                           int resolution_minutes,
                                                           bool* exhausted) {
    std::vector<OperatorAction> actions;
    if (exhausted) *exhausted = false;

    auto worst_dev = [&](double* max_dev, double* min_dev) {
        *max_dev = 0.0;
        *min_dev = 0.0;
        for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
            const Generator& g = model_->generators[gi];
            if (g.kind != GeneratorKind::dispatchable || !g.agc_participant) continue;
            if (!state.gen_committed[gi]) continue;
            const double dev = state.gen_p[gi] - g.optimal_dispatch;
            *max_dev = std::max(*max_dev, dev);
            *min_dev = std::min(*min_dev, dev);
        }
    };

    auto fleet_dev = [&]() {
        double total_p = 0.0, total_opt = 0.0;
        for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
            const Generator& g = model_->generators[gi];
            if (g.kind != GeneratorKind::dispatchable || !g.agc_participant) continue;
            if (!state.gen_committed[gi]) continue;
            total_p += state.gen_p[gi];
            total_opt += g.optimal_dispatch;
        }
        return total_p - total_opt;
    };

    for (int round = 0; round < 3; ++round) {
        double max_dev, min_dev;
        worst_dev(&max_dev, &min_dev);
        // closed interval: a deviation exactly at the band is compliant
        if (max_dev <= thresholds_.dguoo_band_mw && -min_dev <= thresholds_.dguoo_band_mw) return actions;

        auto moves = redistribute_to_optimal(ctx, state, resolution_minutes);
        actions.insert(actions.end(), moves.begin(), moves.end());
        worst_dev(&max_dev, &min_dev);
        if (max_dev <= thresholds_.dguoo_band_mw && -min_dev <= thresholds_.dguoo_band_mw) return actions;

        const double dev_now = fleet_dev();
        bool committed_something = false;
        if (max_dev > thresholds_.dguoo_band_mw) {
            // fleet pushed above its optimal: bring the next unit online, but
            // only if absorbing its share keeps the fleet at or above optimal
            int best = -1;
            for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
                const Generator& g = model_->generators[gi];
                if (g.kind != GeneratorKind::dispatchable || state.gen_committed[gi]) continue;
                if (!cooldown_allows(state, slots_.generator(gi), +1)) continue;
                if (dev_now + g.p_min - g.optimal_dispatch < 0.0) continue;  // would flip below
                if (best < 0 || g.startup_priority < model_->generators[best].startup_priority ||
                    (g.startup_priority == model_->generators[best].startup_priority &&
                     g.id < model_->generators[best].id))
                    best = static_cast<int>(gi);
            }
            if (best >= 0) {
                state.gen_committed[best] = 1;
                state.gen_p[best] = model_->generators[best].p_min;
                OperatorAction a;
                a.time_index = state.time_index;
                a.kind = ActionKind::gen_start;
                a.device = model_->generators[best].id;
                a.before = 0.0;
                a.after = state.gen_p[best];
                a.trigger = "fleet above optimal band";
                actions.push_back(std::move(a));
                mark_action(state, slots_.generator(best), +1);
                committed_something = true;
            }
        } else if (min_dev < -thresholds_.dguoo_band_mw) {
            // fleet pushed below: shed the lowest-priority running unit whose
            // output the rest can absorb without overshooting above optimal
            int best = -1;
            double shed_p = 0.0;
            for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
                const Generator& g = model_->generators[gi];
                if (g.kind != GeneratorKind::dispatchable || !g.agc_participant) continue;
                if (!state.gen_committed[gi]) continue;
                if (static_cast<int>(gi) == ctx.slack_unit()) continue;
                if (!cooldown_allows(state, slots_.generator(gi), -1)) continue;
                if (dev_now + g.optimal_dispatch > 0.0) continue;  // would flip above
                if (best < 0 || g.startup_priority > model_->generators[best].startup_priority ||
                    (g.startup_priority == model_->generators[best].startup_priority &&
                     g.id > model_->generators[best].id)) {
                    best = static_cast<int>(gi);
                    shed_p = state.gen_p[gi];
                }
            }
            if (best >= 0) {
                // the rest of the fleet must be able to carry the shed output
                double headroom = 0.0;
                for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
                    const Generator& g = model_->generators[gi];
                    if (g.kind != GeneratorKind::dispatchable || !g.agc_participant) continue;
                    if (!state.gen_committed[gi] || static_cast<int>(gi) == best) continue;
                    headroom += g.p_max - state.gen_p[gi];
                }
                if (headroom >= shed_p) {
                    OperatorAction a;
                    a.time_index = state.time_index;
                    a.kind = ActionKind::gen_stop;
                    a.device = model_->generators[best].id;
                    a.before = state.gen_p[best];
                    a.after = 0.0;
                    a.trigger = "fleet below optimal band";
                    actions.push_back(std::move(a));
                    state.gen_committed[best] = 0;
                    state.gen_p[best] = 0.0;
                    mark_action(state, slots_.generator(best), -1);
                    committed_something = true;
                }
            }
        }

        if (!committed_something) {
            if (exhausted) *exhausted = true;
            return actions;
        }
        // a commitment change always needs a fresh solution before the fleet
        // is rebalanced around it
        ctx.resolve(state);
        auto moves2 = redistribute_to_optimal(ctx, state, resolution_minutes);
        actions.insert(actions.end(), moves2.begin(), moves2.end());
        auto balance = restore_balance(ctx, state, resolution_minutes, nullptr);
        for (auto& a : balance) a.trigger = "commitment rebalancing";
        actions.insert(actions.end(), balance.begin(), balance.end());
    }
    double max_dev, min_dev;
    worst_dev(&max_dev, &min_dev);
    if (exhausted)
        *exhausted = max_dev > thresholds_.dguoo_band_mw || -min_dev > thresholds_.dguoo_band_mw;
    return actions;
}

std::vector<OperatorAction> VirtualOperator::corrective_hierarchy(OperatingContext& ctx,
                                                                  SystemState& state,
                                                                  int resolution_minutes,
                                                                  double extra_deficit_mw,
                                                                  double* shortfall_mw) {
    std::vector<OperatorAction> actions;
    auto need = [&]() {
        const double reserve_gap = thresholds_.agc_reserve_min_mw - agc_reserve_mw(state);
        return std::max(std::max(reserve_gap, extra_deficit_mw), 0.0);
    };
    auto settle = [&]() {
        auto moved = restore_balance(ctx, state, resolution_minutes, &extra_deficit_mw);
        for (auto& a : moved) a.trigger = "corrective settling";
        actions.insert(actions.end(), moved.begin(), moved.end());
    };
    if (shortfall_mw) *shortfall_mw = 0.0;
    if (need() <= 0.0) return actions;

    // stage 1: additional generator start-ups
    while (need() > 0.0) {
        int best = -1;
        for (std::size_t gi = 0; gi < model_->generators.size(); ++gi) {
            const Generator& g = model_->generators[gi];
            if (g.kind != GeneratorKind::dispatchable || state.gen_committed[gi]) continue;
            if (!cooldown_allows(state, slots_.generator(gi), +1)) continue;
            if (best < 0 || g.startup_priority < model_->generators[best].startup_priority ||
                (g.startup_priority == model_->generators[best].startup_priority &&
                 g.id < model_->generators[best].id))
                best = static_cast<int>(gi);
        }
        if (best < 0) break;
        state.gen_committed[best] = 1;
        state.gen_p[best] = model_->generators[best].p_min;
        OperatorAction a;
        a.time_index = state.time_index;
        a.kind = ActionKind::gen_start;
        a.device = model_->generators[best].id;
        a.before = 0.0;
        a.after = state.gen_p[best];
        a.trigger = "reserve shortfall";
        actions.push_back(std::move(a));
        mark_action(state, slots_.generator(best), +1);
        if (!ctx.resolve(state).converged) break;
        settle();
    }

    // stage 2: one controlled voltage-reduction block per step
    if (need() > 0.0) {
        for (std::size_t di = 0; di < model_->demand_resources.size(); ++di) {
            const DemandResource& dr = model_->demand_resources[di];
            if (dr.kind != DemandResourceKind::voltage_reduction_block) continue;
            if (state.dr_active[di] || state.dr_countdown[di] >= 0) continue;
            if (!cooldown_allows(state, slots_.demand_resource(di), +1)) continue;
            OperatorAction a;
            a.time_index = state.time_index;
            a.kind = ActionKind::voltage_reduction;
            a.device = dr.id;
            a.before = 0.0;
            a.after = 1.0;
            a.trigger = "reserve shortfall";
            actions.push_back(std::move(a));
            mark_action(state, slots_.demand_resource(di), +1);
            if (dr.activation_delay == 0) {
                state.dr_active[di] = 1;
                state.dr_remaining[di] = dr.max_duration;
            } else {
                state.dr_countdown[di] = dr.activation_delay;
            }
            if (ctx.resolve(state).converged) settle();
            break;  // at most one block per step
        }
    }

    // stage 3: interruptible demand
    if (need() > 0.0) {
        for (std::size_t di = 0; di < model_->demand_resources.size() && need() > 0.0; ++di) {
            const DemandResource& dr = model_->demand_resources[di];
            if (dr.kind != DemandResourceKind::interruptible_demand) continue;
            if (state.dr_active[di] || state.dr_countdown[di] >= 0) continue;
            if (!cooldown_allows(state, slots_.demand_resource(di), +1)) continue;
            OperatorAction a;
            a.time_index = state.time_index;
            a.kind = ActionKind::demand_activation;
            a.device = dr.id;
            a.before = 0.0;
            a.after = 1.0;
            a.trigger = "reserve shortfall";
            actions.push_back(std::move(a));
            mark_action(state, slots_.demand_resource(di), +1);
            if (dr.activation_delay == 0) {
                state.dr_active[di] = 1;
                state.dr_remaining[di] = dr.max_duration;
            } else {
                state.dr_countdown[di] = dr.activation_delay;
            }
            if (!ctx.resolve(state).converged) break;
            settle();
        }
    }

    // stage 4: import/export schedule adjustments
    if (need() > 0.0) {
        for (std::size_t ti = 0; ti < model_->interties.size() && need() > 0.0; ++ti) {
            const Intertie& tie = model_->interties[ti];
            const double headroom = tie.direction == IntertieDirection::import
                                        ? tie.schedule_limit_max - state.tie_schedule[ti]
                                        : state.tie_schedule[ti] - tie.schedule_limit_min;
            const double delta = std::min(need(), headroom);
            if (delta <= 0.0) continue;
            OperatorAction a;
            a.time_index = state.time_index;
            a.kind = ActionKind::intertie_adjust;
            a.device = tie.id;
            a.before = state.tie_schedule[ti];
            state.tie_schedule[ti] += tie.direction == IntertieDirection::import ? delta : -delta;
            a.after = state.tie_schedule[ti];
            a.trigger = "reserve shortfall";
            actions.push_back(std::move(a));
            if (!ctx.resolve(state).converged) break;
            settle();
        }
    }

    if (shortfall_mw) *shortfall_mw = need();
    return actions;
}

std::vector<OperatorAction> VirtualOperator::control_voltage_low(
    OperatingContext& ctx, SystemState& state, std::vector<FictitiousAccount>* accounts,
    std::vector<Violation>* unresolved) {
    std::vector<OperatorAction> actions;

    for (int pass = 0; pass < thresholds_.max_control_passes; ++pass) {
        bool acted = false;
        for (std::size_t bus = 0; bus < model_->buses.size(); ++bus) {
            if (model_->buses[bus].voltage_class != VoltageClass::low) continue;
            const double target = ctx.effective_setpoint(state, static_cast<int>(bus));
            if (std::abs(state.vm[bus] - target) <= thresholds_.deadband_low_pu) continue;

            // the fictitious hold tells us how much reactive power the bus wants
            const double q_needed =
                ctx.held_bus_q_mvar(state, static_cast<int>(bus), target);

            // discretize onto the local shunt banks: smallest residual wins,
            // fewest moved devices break ties, then device id
            std::vector<std::size_t> local;
            for (std::size_t si = 0; si < model_->shunts.size(); ++si)
                if (model_->bus_of(model_->shunts[si].bus) == static_cast<int>(bus))
                    local.push_back(si);

            std::vector<ShuntMove> best;
            double best_residual = std::abs(q_needed);
            int best_devices = 0;
            // per-shunt candidate deltas, explored jointly (locals are few)
            std::vector<std::vector<int>> options(local.size());
            for (std::size_t k = 0; k < local.size(); ++k) {
                const ShuntBank& sh = model_->shunts[local[k]];
                const int on = state.shunt_steps_on[local[k]];
                for (int d = -on; d <= sh.steps_total - on; ++d) {
                    if (d != 0) {
                        const double q_dir = shunt_step_q(sh, state.vm[bus]) * d;
                        const int dir = q_dir > 0.0 ? +1 : -1;
                        if (!cooldown_allows(state, slots_.shunt(local[k]), dir)) continue;
                    }
                    options[k].push_back(d);
                }
            }
            std::vector<int> pick(local.size(), 0);
            auto consider = [&]() {
                double q = 0.0;
                int devices = 0;
                for (std::size_t k = 0; k < local.size(); ++k) {
                    if (pick[k] == 0) continue;
                    q += shunt_step_q(model_->shunts[local[k]], state.vm[bus]) * pick[k];
                    ++devices;
                }
                const double residual = std::abs(q_needed - q);
                if (residual + 1e-9 < best_residual ||
                    (std::abs(residual - best_residual) <= 1e-9 && devices < best_devices)) {
                    best_residual = residual;
                    best_devices = devices;
                    best.clear();
                    for (std::size_t k = 0; k < local.size(); ++k)
                        if (pick[k] != 0)
                            best.push_back({local[k], pick[k],
                                            shunt_step_q(model_->shunts[local[k]], state.vm[bus]) *
                                                pick[k]});
                }
            };
            std::function<void(std::size_t)> walk = [&](std::size_t k) {
                if (k == local.size()) {
                    consider();
                    return;
                }
                for (int d : options[k]) {
                    pick[k] = d;
                    walk(k + 1);
                }
                pick[k] = 0;
            };
            walk(0);

            double delivered = 0.0;
            if (!best.empty()) {
                for (const ShuntMove& mv : best) {
                    const ShuntBank& sh = model_->shunts[mv.shunt];
                    OperatorAction a;
                    a.time_index = state.time_index;
                    a.kind = ActionKind::shunt_switch;
                    a.device = sh.id;
                    a.before = state.shunt_steps_on[mv.shunt];
                    state.shunt_steps_on[mv.shunt] += mv.delta;
                    a.after = state.shunt_steps_on[mv.shunt];
                    a.trigger = state.vm[bus] < target ? "low undervoltage" : "low overvoltage";
                    actions.push_back(std::move(a));
                    mark_action(state, slots_.shunt(mv.shunt), mv.q_mvar > 0.0 ? +1 : -1);
                    delivered += mv.q_mvar;
                }
                ctx.resolve(state);
                acted = true;
            }
            if (accounts)
                accounts->push_back({static_cast<int>(bus), q_needed, delivered,
                                     q_needed - delivered});

            // transformer taps pick up what the shunts could not
            if (std::abs(state.vm[bus] - target) > thresholds_.deadband_low_pu) {
                for (std::size_t ti = 0; ti < model_->transformers.size(); ++ti) {
                    const Transformer& tr = model_->transformers[ti];
                    if (model_->bus_of(tr.regulated_bus) != static_cast<int>(bus)) continue;
                    for (int move = 0; move < 8; ++move) {
                        const double err = state.vm[bus] - target;
                        if (std::abs(err) <= thresholds_.deadband_low_pu) break;
                        // ratio down lifts the regulated (to-side) voltage
                        const int dpos = err < 0.0 ? -1 : +1;
                        const int dir = err < 0.0 ? +1 : -1;  // voltage effect
                        const int next = state.tap_position[ti] + dpos;
                        if (next < tr.min_position() || next > tr.max_position()) break;
                        if (!cooldown_allows(state, slots_.transformer(ti), dir)) break;
                        OperatorAction a;
                        a.time_index = state.time_index;
                        a.kind = ActionKind::tap_step;
                        a.device = tr.id;
                        a.before = state.tap_position[ti];
                        state.tap_position[ti] = next;
                        a.after = next;
                        a.trigger = err < 0.0 ? "low undervoltage" : "low overvoltage";
                        actions.push_back(std::move(a));
                        mark_action(state, slots_.transformer(ti), dir);
                        ctx.resolve(state);
                        acted = true;
                    }
                }
            }
        }
        if (!acted) break;
    }

    if (unresolved) {
        for (std::size_t bus = 0; bus < model_->buses.size(); ++bus) {
            if (model_->buses[bus].voltage_class != VoltageClass::low) continue;
            const double target = ctx.effective_setpoint(state, static_cast<int>(bus));
            const double err = state.vm[bus] - target;
            if (std::abs(err) > thresholds_.deadband_low_pu)
                unresolved->push_back({"unresolved low voltage", model_->buses[bus].id, err, ""});
        }
    }
    return actions;
}

std::vector<OperatorAction> VirtualOperator::control_voltage_high(
    OperatingContext& ctx, SystemState& state, std::vector<Violation>* unresolved) {
    std::vector<OperatorAction> actions;

    auto new_violation_appeared = [&](const std::vector<Violation>& before,
                                      const std::vector<Violation>& after) {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& v : before) seen.insert({v.kind, v.device});
        for (const auto& v : after)
            if (!seen.count({v.kind, v.device})) return true;
        return false;
    };

    auto try_shunt_step = [&](std::size_t bus, bool absorb) -> bool {
        // absorb: reactor in / capacitor out. inject: capacitor in / reactor out.
        for (std::size_t si = 0; si < model_->shunts.size(); ++si) {
            const ShuntBank& sh = model_->shunts[si];
            if (model_->bus_of(sh.bus) != static_cast<int>(bus)) continue;
            int delta = 0;
            if (absorb) {
                if (sh.kind == ShuntKind::reactor && state.shunt_steps_on[si] < sh.steps_total)
                    delta = +1;
                else if (sh.kind == ShuntKind::capacitor && state.shunt_steps_on[si] > 0)
                    delta = -1;
            } else {
                if (sh.kind == ShuntKind::capacitor && state.shunt_steps_on[si] < sh.steps_total)
                    delta = +1;
                else if (sh.kind == ShuntKind::reactor && state.shunt_steps_on[si] > 0)
                    delta = -1;
            }
            if (delta == 0) continue;
            const int dir = absorb ? -1 : +1;  // voltage effect
            if (!cooldown_allows(state, slots_.shunt(si), dir)) continue;
            OperatorAction a;
            a.time_index = state.time_index;
            a.kind = ActionKind::shunt_switch;
            a.device = sh.id;
            a.before = state.shunt_steps_on[si];
            state.shunt_steps_on[si] += delta;
            a.after = state.shunt_steps_on[si];
            a.trigger = absorb ? "high overvoltage" : "high undervoltage";
            actions.push_back(std::move(a));
            mark_action(state, slots_.shunt(si), dir);
            ctx.resolve(state);
            return true;
        }
        return false;
    };

    auto try_line_switch = [&](std::size_t bus, bool disconnect) -> bool {
        for (std::size_t bi = 0; bi < model_->branches.size(); ++bi) {
            const Branch& br = model_->branches[bi];
            if (!br.switchable) continue;
            if (disconnect != static_cast<bool>(state.branch_in_service[bi])) continue;
            if (model_->bus_of(br.from_bus) != static_cast<int>(bus) &&
                model_->bus_of(br.to_bus) != static_cast<int>(bus))
                continue;
            const int dir = disconnect ? -1 : +1;
            if (!cooldown_allows(state, slots_.branch(bi), dir)) continue;

            const auto before_violations = ctx.security(state);
            SystemState saved = state;
            state.branch_in_service[bi] = disconnect ? 0 : 1;
            const auto result = ctx.resolve(state);
            // transfer capability must survive: the switch may not island the
            // system, break convergence or surface new violations elsewhere
            if (!result.converged ||
                new_violation_appeared(before_violations, ctx.security(state))) {
                state = std::move(saved);
                ctx.resolve(state);
                continue;
            }
            OperatorAction a;
            a.time_index = state.time_index;
            a.kind = disconnect ? ActionKind::line_disconnect : ActionKind::line_reconnect;
            a.device = br.id;
            a.before = disconnect ? 1.0 : 0.0;
            a.after = disconnect ? 0.0 : 1.0;
            a.trigger = disconnect ? "high overvoltage" : "high undervoltage";
            actions.push_back(std::move(a));
            mark_action(state, slots_.branch(bi), dir);
            return true;
        }
        return false;
    };

    auto try_compensator = [&](std::size_t bus, bool lower) -> bool {
        bool has_compensator = false;
        for (std::size_t gi = 0; gi < model_->generators.size(); ++gi)
            if (model_->generators[gi].kind == GeneratorKind::compensator &&
                state.gen_committed[gi] &&
                model_->bus_of(model_->generators[gi].bus) == static_cast<int>(bus))
                has_compensator = true;
        if (!has_compensator) return false;
        const int dir = lower ? -1 : +1;
        if (!cooldown_allows(state, slots_.compensator_bus(bus), dir)) return false;
        const double step = thresholds_.compensator_step_pu;
        const double next = state.v_setpoint[bus] + (lower ? -step : step);
        if (next < model_->buses[bus].v_min || next > model_->buses[bus].v_max) return false;
        OperatorAction a;
        a.time_index = state.time_index;
        a.kind = ActionKind::compensator_setpoint;
        a.device = model_->buses[bus].id;
        a.before = state.v_setpoint[bus];
        state.v_setpoint[bus] = next;
        a.after = next;
        a.trigger = lower ? "high overvoltage" : "high undervoltage";
        actions.push_back(std::move(a));
        mark_action(state, slots_.compensator_bus(bus), dir);
        ctx.resolve(state);
        return true;
    };

    for (int pass = 0; pass < thresholds_.max_control_passes; ++pass) {
        bool acted = false;
        for (std::size_t bus = 0; bus < model_->buses.size(); ++bus) {
            if (model_->buses[bus].voltage_class != VoltageClass::high) continue;
            const double target = ctx.effective_setpoint(state, static_cast<int>(bus));
            const double err = state.vm[bus] - target;
            if (std::abs(err) <= thresholds_.deadband_high_pu) continue;
            if (err > 0.0) {
                // overvoltage ladder: absorb locally, then drop a line, then
                // pull the compensator target down
                if (try_shunt_step(bus, true) || try_line_switch(bus, true) ||
                    try_compensator(bus, true))
                    acted = true;
            } else {
                // undervoltage ladder: restore transfer capability first
                if (try_line_switch(bus, false) || try_shunt_step(bus, false) ||
                    try_compensator(bus, false))
                    acted = true;
            }
        }
        if (!acted) break;
    }

    if (unresolved) {
        for (std::size_t bus = 0; bus < model_->buses.size(); ++bus) {
            if (model_->buses[bus].voltage_class != VoltageClass::high) continue;
            const double target = ctx.effective_setpoint(state, static_cast<int>(bus));
            const double err = state.vm[bus] - target;
            if (std::abs(err) > thresholds_.deadband_high_pu)
                unresolved->push_back({"unresolved high voltage", model_->buses[bus].id, err, ""});
        }
    }
    return actions;
}

SequenceReport VirtualOperator::run_sequence(OperatingContext& ctx, SystemState& state,
                                             int resolution_minutes) {
    SequenceReport rep;
    for (int pass = 0; pass < thresholds_.max_sequence_passes; ++pass) {
        const std::size_t before = rep.actions.size();

        double deficit = 0.0;
        auto balance = restore_balance(ctx, state, resolution_minutes, &deficit);
        rep.actions.insert(rep.actions.end(), balance.begin(), balance.end());

        auto commitment = enforce_dguoo(ctx, state, resolution_minutes, nullptr);
        rep.actions.insert(rep.actions.end(), commitment.begin(), commitment.end());

        double shortfall = 0.0;
        if (deficit > 0.0 || agc_reserve_mw(state) < thresholds_.agc_reserve_min_mw) {
            auto corrective =
                corrective_hierarchy(ctx, state, resolution_minutes, deficit, &shortfall);
            rep.actions.insert(rep.actions.end(), corrective.begin(), corrective.end());
        }
        rep.reserve_shortfall_mw = shortfall;
        rep.unresolved_deficit_mw =
            state.swing_residual_mw > thresholds_.balance_threshold_mw ? state.swing_residual_mw
                                                                       : 0.0;

        rep.unresolved_voltage.clear();
        auto low = control_voltage_low(ctx, state, &rep.fictitious, &rep.unresolved_voltage);
        rep.actions.insert(rep.actions.end(), low.begin(), low.end());
        auto high = control_voltage_high(ctx, state, &rep.unresolved_voltage);
        rep.actions.insert(rep.actions.end(), high.begin(), high.end());

        if (rep.actions.size() == before) break;  // quiescent pass
    }
    return rep;
}

}  // namespace qsts
