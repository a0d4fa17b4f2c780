#include "qsts/powerflow/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <queue>

#include "qsts/kernels/kernels.hpp"

namespace qsts {

namespace {

constexpr double kVmFloor = 0.05;  // keeps a diverging iterate out of the singularity at V=0
constexpr int kMaxQSwitchesPerBus = 4;

}  // namespace

BusSpec BusSpec::sized(std::size_t n) {
    BusSpec spec;
    spec.kind.assign(n, BusKind::pq);
    spec.p_inj.assign(n, 0.0);
    spec.q_inj.assign(n, 0.0);
    spec.v_setpoint.assign(n, 1.0);
    spec.q_min.assign(n, 0.0);
    spec.q_max.assign(n, 0.0);
    return spec;
}

PowerFlowSolver::PowerFlowSolver(const NetworkModel& model) : model_(&model) {
    set_topology(TopologyState::from_model(model));
}

void PowerFlowSolver::set_topology(const TopologyState& topo) {
    topo_ = topo;
    y_ = build_admittance(*model_, topo_);
    const std::size_t n = y_.n;
    cosd_.assign(n, 0.0);
    sind_.assign(n, 0.0);
    p_calc_.assign(n, 0.0);
    q_calc_.assign(n, 0.0);
    t_.assign(n * n, 0.0);
    u_.assign(n * n, 0.0);
}

VoltageSolution PowerFlowSolver::flat_start(const BusSpec& spec) const {
    const std::size_t n = y_.n;
    VoltageSolution v;
    v.vm.assign(n, 1.0);
    v.va.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (spec.kind[i] != BusKind::pq) v.vm[i] = spec.v_setpoint[i];
    return v;
}

std::string PowerFlowSolver::islanded_bus(const BusSpec& spec) const {
    const std::size_t n = y_.n;
    std::vector<std::vector<int>> adj(n);
    for (std::size_t bi = 0; bi < model_->branches.size(); ++bi) {
        if (!topo_.branch_in_service[bi]) continue;
        int f = model_->bus_of(model_->branches[bi].from_bus);
        int t = model_->bus_of(model_->branches[bi].to_bus);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    for (const auto& tr : model_->transformers) {
        int f = model_->bus_of(tr.from_bus);
        int t = model_->bus_of(tr.to_bus);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(spec.slack);
    seen[spec.slack] = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                q.push(w);
            }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i]) continue;
        if (spec.p_inj[i] != 0.0 || spec.q_inj[i] != 0.0 || spec.kind[i] != BusKind::pq)
            return model_->buses[i].id;
    }
    return {};
}

double PowerFlowSolver::evaluate(const BusSpec& spec, const std::vector<BusKind>& kind,
                                 const std::vector<double>& q_pinned,
                                 const std::vector<double>& vm, const std::vector<double>& va) {
    const std::size_t n = y_.n;
    for (std::size_t i = 0; i < n; ++i) {
        cosd_[i] = std::cos(va[i]);
        sind_[i] = std::sin(va[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        kernels::injection_terms_row(n, y_.g_row(i), y_.b_row(i), vm.data(), cosd_.data(),
                                     sind_.data(), vm[i], cosd_[i], sind_[i], t_.data() + i * n,
                                     u_.data() + i * n);
        p_calc_[i] = kernels::sum(t_.data() + i * n, n);
        q_calc_[i] = kernels::sum(u_.data() + i * n, n);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>(i) == spec.slack) continue;
        worst = std::max(worst, std::abs(spec.p_inj[i] - p_calc_[i]));
        if (kind[i] == BusKind::pq) {
            const double q_spec = spec.kind[i] == BusKind::pq ? spec.q_inj[i] : q_pinned[i];
            worst = std::max(worst, std::abs(q_spec - q_calc_[i]));
        }
    }
    return worst;
}

PowerFlowResult PowerFlowSolver::solve_newton(const BusSpec& spec, const VoltageSolution& initial,
                                              const PowerFlowSettings& settings, double damping,
                                              const std::string& stage) {
    const std::size_t n = y_.n;
    PowerFlowResult result;
    result.pv_switched_to_pq.assign(n, 0);

    if (std::string bus = islanded_bus(spec); !bus.empty()) {
        result.failure = "islanded bus " + bus;
        return result;
    }

    std::vector<double> vm = initial.vm;
    std::vector<double> va = initial.va;
    std::vector<BusKind> kind = spec.kind;    // effective kinds with Q-limit switching
    std::vector<double> q_pinned(n, 0.0);     // Q setpoint for switched pv buses
    std::vector<int> switch_count(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (kind[i] != BusKind::pq) vm[i] = spec.v_setpoint[i];

    // unknown ordering: angles of non-slack buses, then magnitudes of pq buses
    auto index_unknowns = [&](std::vector<int>& ang_of, std::vector<int>& vm_of) {
        ang_of.assign(n, -1);
        vm_of.assign(n, -1);
        int m = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (static_cast<int>(i) != spec.slack) ang_of[i] = m++;
        for (std::size_t i = 0; i < n; ++i)
            if (kind[i] == BusKind::pq) vm_of[i] = m++;
        return m;
    };

    std::vector<int> ang_of, vm_of;
    int m = index_unknowns(ang_of, vm_of);
    Eigen::MatrixXd jac;
    Eigen::VectorXd rhs;

    double worst = evaluate(spec, kind, q_pinned, vm, va);
    for (int iter = 1; iter <= settings.max_iterations; ++iter) {
        if (worst <= settings.tolerance) {
            bool switched = false;
            if (settings.enforce_q_limits) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (spec.kind[i] != BusKind::pv) continue;
                    if (kind[i] == BusKind::pv && switch_count[i] < kMaxQSwitchesPerBus) {
                        if (q_calc_[i] > spec.q_max[i] + settings.tolerance) {
                            kind[i] = BusKind::pq;
                            q_pinned[i] = spec.q_max[i];
                            ++switch_count[i];
                            switched = true;
                        } else if (q_calc_[i] < spec.q_min[i] - settings.tolerance) {
                            kind[i] = BusKind::pq;
                            q_pinned[i] = spec.q_min[i];
                            ++switch_count[i];
                            switched = true;
                        }
                    } else if (kind[i] == BusKind::pq && switch_count[i] < kMaxQSwitchesPerBus) {
                        // a limit-pinned bus returns to voltage control once the
                        // solved magnitude moves past its setpoint again
                        if ((q_pinned[i] == spec.q_max[i] && vm[i] > spec.v_setpoint[i]) ||
                            (q_pinned[i] == spec.q_min[i] && vm[i] < spec.v_setpoint[i])) {
                            kind[i] = BusKind::pv;
                            vm[i] = spec.v_setpoint[i];
                            ++switch_count[i];
                            switched = true;
                        }
                    }
                }
            }
            if (!switched) {
                result.converged = true;
                result.max_mismatch = worst;
                break;
            }
            m = index_unknowns(ang_of, vm_of);
            worst = evaluate(spec, kind, q_pinned, vm, va);
            if (worst <= settings.tolerance) {
                result.converged = true;
                result.max_mismatch = worst;
                break;
            }
        }

        jac.setZero(m, m);
        rhs.setZero(m);
        for (std::size_t i = 0; i < n; ++i) {
            const double* ti = t_.data() + i * n;
            const double* ui = u_.data() + i * n;
            const int pr = ang_of[i];  // P-equation row shares the angle index
            const int qr = vm_of[i] >= 0 ? vm_of[i] : -1;
            if (pr >= 0) rhs(pr) = spec.p_inj[i] - p_calc_[i];
            if (qr >= 0) {
                const double q_spec = spec.kind[i] == BusKind::pq ? spec.q_inj[i] : q_pinned[i];
                rhs(qr) = q_spec - q_calc_[i];
            }
            for (std::size_t k = 0; k < n; ++k) {
                const int ac = ang_of[k];
                const int vc = vm_of[k];
                double h, nn, mm, ll;
                if (i == k) {
                    h = -q_calc_[i] - y_.B(i, i) * vm[i] * vm[i];
                    nn = p_calc_[i] / vm[i] + y_.G(i, i) * vm[i];
                    mm = p_calc_[i] - y_.G(i, i) * vm[i] * vm[i];
                    ll = q_calc_[i] / vm[i] - y_.B(i, i) * vm[i];
                } else {
                    h = ui[k];
                    nn = ti[k] / vm[k];
                    mm = -ti[k];
                    ll = ui[k] / vm[k];
                }
                if (pr >= 0 && ac >= 0) jac(pr, ac) = h;
                if (pr >= 0 && vc >= 0) jac(pr, vc) = nn;
                if (qr >= 0 && ac >= 0) jac(qr, ac) = mm;
                if (qr >= 0 && vc >= 0) jac(qr, vc) = ll;
            }
        }

        Eigen::VectorXd dx = jac.partialPivLu().solve(rhs);
        if (!dx.allFinite()) {
            result.failure = "singular Jacobian at iteration " + std::to_string(iter);
            result.iterations = iter;
            return result;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (ang_of[i] >= 0) va[i] += damping * dx(ang_of[i]);
            if (vm_of[i] >= 0) vm[i] = std::max(kVmFloor, vm[i] + damping * dx(vm_of[i]));
        }
        worst = evaluate(spec, kind, q_pinned, vm, va);
        result.iterations = iter;
        result.trace.push_back({stage, iter, worst, damping});
        if (!std::isfinite(worst)) {
            result.failure = "diverged at iteration " + std::to_string(iter);
            return result;
        }
    }

    result.max_mismatch = worst;
    if (!result.converged) {
        if (worst <= settings.tolerance)
            result.converged = true;  // converged on the final iteration
        else
            result.failure = "no convergence after " + std::to_string(settings.max_iterations) +
                             " iterations, mismatch " + std::to_string(worst);
    }
    if (result.converged) {
        evaluate(spec, kind, q_pinned, vm, va);
        result.state.vm = std::move(vm);
        result.state.va = std::move(va);
        result.state.p_calc = p_calc_;
        result.state.q_calc = q_calc_;
        for (std::size_t i = 0; i < n; ++i)
            result.pv_switched_to_pq[i] = (spec.kind[i] == BusKind::pv && kind[i] == BusKind::pq);
    }
    return result;
}

PowerFlowResult PowerFlowSolver::solve_fast_decoupled(const BusSpec& spec,
                                                      const VoltageSolution& initial,
                                                      const PowerFlowSettings& settings) {
    const std::size_t n = y_.n;
    PowerFlowResult result;
    result.pv_switched_to_pq.assign(n, 0);
    if (std::string bus = islanded_bus(spec); !bus.empty()) {
        result.failure = "islanded bus " + bus;
        return result;
    }

    std::vector<double> vm = initial.vm;
    std::vector<double> va = initial.va;
    std::vector<BusKind> kind = spec.kind;
    std::vector<double> q_pinned(n, 0.0);
    std::vector<int> switch_count(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (kind[i] != BusKind::pq) vm[i] = spec.v_setpoint[i];

    // B' over non-slack buses from 1/x only (XB scheme)
    std::vector<int> ang_of(n, -1);
    int na = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (static_cast<int>(i) != spec.slack) ang_of[i] = na++;
    Eigen::MatrixXd bp = Eigen::MatrixXd::Zero(na, na);
    auto stamp_bp = [&](int f, int t, double x) {
        const double w = 1.0 / x;
        if (ang_of[f] >= 0) bp(ang_of[f], ang_of[f]) += w;
        if (ang_of[t] >= 0) bp(ang_of[t], ang_of[t]) += w;
        if (ang_of[f] >= 0 && ang_of[t] >= 0) {
            bp(ang_of[f], ang_of[t]) -= w;
            bp(ang_of[t], ang_of[f]) -= w;
        }
    };
    for (std::size_t bi = 0; bi < model_->branches.size(); ++bi)
        if (topo_.branch_in_service[bi])
            stamp_bp(model_->bus_of(model_->branches[bi].from_bus),
                     model_->bus_of(model_->branches[bi].to_bus), model_->branches[bi].reactance);
    for (const auto& tr : model_->transformers)
        stamp_bp(model_->bus_of(tr.from_bus), model_->bus_of(tr.to_bus), tr.reactance);
    Eigen::PartialPivLU<Eigen::MatrixXd> bp_lu(bp);

    auto factor_bpp = [&](const std::vector<BusKind>& kinds, std::vector<int>& vm_of) {
        vm_of.assign(n, -1);
        int nv = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (kinds[i] == BusKind::pq) vm_of[i] = nv++;
        Eigen::MatrixXd bpp = Eigen::MatrixXd::Zero(nv, nv);
        for (std::size_t i = 0; i < n; ++i) {
            if (vm_of[i] < 0) continue;
            for (std::size_t k = 0; k < n; ++k)
                if (vm_of[k] >= 0) bpp(vm_of[i], vm_of[k]) = -y_.B(i, k);
        }
        return Eigen::PartialPivLU<Eigen::MatrixXd>(bpp);
    };
    std::vector<int> vm_of;
    auto bpp_lu = factor_bpp(kind, vm_of);

    const int max_iter = settings.max_iterations * 4;
    double worst = evaluate(spec, kind, q_pinned, vm, va);
    for (int iter = 1; iter <= max_iter; ++iter) {
        if (worst <= settings.tolerance) {
            bool switched = false;
            if (settings.enforce_q_limits) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (spec.kind[i] != BusKind::pv || kind[i] != BusKind::pv) continue;
                    if (switch_count[i] >= kMaxQSwitchesPerBus) continue;
                    if (q_calc_[i] > spec.q_max[i] + settings.tolerance) {
                        kind[i] = BusKind::pq;
                        q_pinned[i] = spec.q_max[i];
                        ++switch_count[i];
                        switched = true;
                    } else if (q_calc_[i] < spec.q_min[i] - settings.tolerance) {
                        kind[i] = BusKind::pq;
                        q_pinned[i] = spec.q_min[i];
                        ++switch_count[i];
                        switched = true;
                    }
                }
            }
            if (!switched) {
                result.converged = true;
                break;
            }
            bpp_lu = factor_bpp(kind, vm_of);
            worst = evaluate(spec, kind, q_pinned, vm, va);
            continue;
        }

        Eigen::VectorXd dp(na);
        for (std::size_t i = 0; i < n; ++i)
            if (ang_of[i] >= 0) dp(ang_of[i]) = (spec.p_inj[i] - p_calc_[i]) / vm[i];
        Eigen::VectorXd da = bp_lu.solve(dp);
        for (std::size_t i = 0; i < n; ++i)
            if (ang_of[i] >= 0) va[i] += da(ang_of[i]);
        evaluate(spec, kind, q_pinned, vm, va);

        const int nv = static_cast<int>(bpp_lu.matrixLU().rows());
        if (nv > 0) {
            Eigen::VectorXd dq(nv);
            for (std::size_t i = 0; i < n; ++i)
                if (vm_of[i] >= 0) {
                    const double q_spec = spec.kind[i] == BusKind::pq ? spec.q_inj[i] : q_pinned[i];
                    dq(vm_of[i]) = (q_spec - q_calc_[i]) / vm[i];
                }
            Eigen::VectorXd dv = bpp_lu.solve(dq);
            for (std::size_t i = 0; i < n; ++i)
                if (vm_of[i] >= 0) vm[i] = std::max(kVmFloor, vm[i] + dv(vm_of[i]));
        }
        worst = evaluate(spec, kind, q_pinned, vm, va);
        result.iterations = iter;
        result.trace.push_back({"fast-decoupled", iter, worst, 1.0});
        if (!std::isfinite(worst)) {
            result.failure = "diverged at iteration " + std::to_string(iter);
            return result;
        }
    }

    result.max_mismatch = worst;
    if (!result.converged) {
        result.failure = "no convergence after " + std::to_string(max_iter) + " sweeps";
        return result;
    }
    evaluate(spec, kind, q_pinned, vm, va);
    result.state.vm = std::move(vm);
    result.state.va = std::move(va);
    result.state.p_calc = p_calc_;
    result.state.q_calc = q_calc_;
    const std::size_t nn = n;
    for (std::size_t i = 0; i < nn; ++i)
        result.pv_switched_to_pq[i] = (spec.kind[i] == BusKind::pv && kind[i] == BusKind::pq);
    return result;
}

PowerFlowResult PowerFlowSolver::solve(const BusSpec& spec, const VoltageSolution& initial,
                                       const PowerFlowSettings& settings) {
    if (settings.mode == PowerFlowSettings::Mode::fast_decoupled)
        return solve_fast_decoupled(spec, initial, settings);
    return solve_newton(spec, initial, settings, 1.0, "newton");
}

PowerFlowResult PowerFlowSolver::solve_with_fallbacks(const BusSpec& spec,
                                                      const VoltageSolution& initial,
                                                      const PowerFlowSettings& settings) {
    std::vector<IterationRecord> ladder_trace;
    auto attempt = [&](PowerFlowResult r, const std::string& rung) {
        ladder_trace.insert(ladder_trace.end(), r.trace.begin(), r.trace.end());
        r.trace = ladder_trace;
        r.rung = rung;
        return r;
    };

    PowerFlowResult r = solve_newton(spec, initial, settings, 1.0, "newton");
    if (r.converged) return attempt(std::move(r), "newton");
    ladder_trace.insert(ladder_trace.end(), r.trace.begin(), r.trace.end());

    for (double mult : settings.damping_schedule) {
        const std::string stage = "newton damped " + std::to_string(mult);
        PowerFlowResult d = solve_newton(spec, initial, settings, mult, stage);
        if (d.converged) return attempt(std::move(d), stage);
        ladder_trace.insert(ladder_trace.end(), d.trace.begin(), d.trace.end());
    }

    PowerFlowResult fd = solve_fast_decoupled(spec, initial, settings);
    if (fd.converged) return attempt(std::move(fd), "fast-decoupled");
    ladder_trace.insert(ladder_trace.end(), fd.trace.begin(), fd.trace.end());

    if (settings.enforce_q_limits) {
        PowerFlowSettings relaxed = settings;
        relaxed.enforce_q_limits = false;
        PowerFlowResult qr = solve_newton(spec, initial, relaxed, 1.0, "q-relaxed");
        if (qr.converged) {
            ladder_trace.insert(ladder_trace.end(), qr.trace.begin(), qr.trace.end());
            // re-tighten from the relaxed solution
            PowerFlowResult tight = solve_newton(spec, qr.state, settings, 1.0, "q-retightened");
            if (tight.converged) return attempt(std::move(tight), "q-relaxed");
        } else {
            ladder_trace.insert(ladder_trace.end(), qr.trace.begin(), qr.trace.end());
        }
    }

    PowerFlowResult fail;
    fail.pv_switched_to_pq.assign(y_.n, 0);
    fail.trace = std::move(ladder_trace);
    fail.failure = "fallback ladder exhausted: " + r.failure;
    fail.max_mismatch = r.max_mismatch;
    return fail;
}

}  // namespace qsts
