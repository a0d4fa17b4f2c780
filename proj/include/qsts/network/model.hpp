#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "qsts/common.hpp"

namespace qsts {

enum class BusKind { slack, pv, pq };
enum class VoltageClass { low, high };
enum class ShuntKind { capacitor, reactor };
enum class GeneratorKind { dispatchable, wind, compensator };
enum class IntertieDirection { import, export_ };
enum class DemandResourceKind { interruptible_demand, voltage_reduction_block };

struct Bus {
    std::string id;
    double base_kv = 0.0;
    BusKind kind = BusKind::pq;
    double voltage_target = 1.0;  // pu, meaningful for slack/pv and as deadband center
    double v_min = 0.9;
    double v_max = 1.1;
    VoltageClass voltage_class = VoltageClass::high;
    std::string zone;
};

struct Branch {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    double resistance = 0.0;   // pu on system base
    double reactance = 0.0;    // pu
    double charging = 0.0;     // total line charging susceptance, pu
    double thermal_limit_mva = 0.0;
    bool switchable = false;
    bool in_service = true;
};

struct Transformer {
    std::string id;
    std::string from_bus;      // tap side
    std::string to_bus;        // regulated side
    double resistance = 0.0;   // pu series impedance
    double reactance = 0.0;
    double tap_min = 0.9;      // ratio bounds
    double tap_max = 1.1;
    double tap_step = 0.0125;  // ratio increment per position
    int tap_position = 0;      // ratio = 1 + position*step
    std::string regulated_bus;
    double deadband = 0.02;    // pu

    double ratio(int position) const { return 1.0 + position * tap_step; }
    double ratio() const { return ratio(tap_position); }
    int min_position() const;
    int max_position() const;
};

struct ShuntBank {
    std::string id;
    std::string bus;
    ShuntKind kind = ShuntKind::capacitor;
    double step_mvar = 0.0;  // per step at nominal voltage
    int steps_total = 0;
    int steps_on = 0;
};

struct Generator {
    std::string id;
    std::string bus;
    GeneratorKind kind = GeneratorKind::dispatchable;
    double p_min = 0.0;   // MW
    double p_max = 0.0;
    double q_min = 0.0;   // MVAr
    double q_max = 0.0;
    double ramp_up = 0.0;   // MW per minute
    double ramp_down = 0.0;
    bool agc_participant = false;
    double optimal_dispatch = 0.0;  // MW
    bool committed = true;
    int startup_priority = 0;  // lower starts first, higher stops first

    bool controls_voltage() const { return kind != GeneratorKind::wind; }
};

struct Intertie {
    std::string id;
    std::string bus;
    IntertieDirection direction = IntertieDirection::import;
    double schedule_limit_min = 0.0;  // MW
    double schedule_limit_max = 0.0;
    double current_schedule = 0.0;    // MW, profile-driven initial value
};

struct DemandResource {
    std::string id;
    std::string bus;
    DemandResourceKind kind = DemandResourceKind::interruptible_demand;
    double capacity_mw = 0.0;
    int activation_delay = 0;  // steps
    int max_duration = 0;      // steps
    bool active = false;
};

struct Load {
    std::string id;
    std::string bus;
    double p_mw = 0.0;
    double q_mvar = 0.0;
};

struct EssUnit {
    std::string id;
    std::string bus;
    std::string zone;
    double power_capacity_mw = 0.0;
    double energy_capacity_mwh = 0.0;
    double soc_pct = 50.0;          // initial
    double soc_balance_pct = 50.0;
    double charge_efficiency = 1.0;
    double discharge_efficiency = 1.0;
};

/// Immutable grid description. Validate once, then share freely across
/// segment workers; all mutable operating quantities live in SystemState.
struct NetworkModel {
    std::string name;
    double system_base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Transformer> transformers;
    std::vector<ShuntBank> shunts;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    std::vector<EssUnit> ess_units;
    std::vector<Intertie> interties;
    std::vector<DemandResource> demand_resources;
    std::vector<std::string> zones;

    // filled by finalize(); -1 for unresolved references
    std::unordered_map<std::string, int> bus_index;

    int bus_of(const std::string& id) const {
        auto it = bus_index.find(id);
        return it == bus_index.end() ? -1 : it->second;
    }

    /// Builds lookup tables. Call after populating, before validate().
    void finalize();
};

struct Violation {
    std::string kind;     // e.g. "unresolved reference", "overvoltage"
    std::string device;   // offending bus/branch/... id
    double magnitude = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Structural validation: dangling references, island/slack coverage,
/// limit inversions, device-range violations. An empty report means the
/// model is usable.
ValidationReport validate(const NetworkModel& model);

enum class Quantity { mw, mvar, kv };

/// Physical value -> per-unit on the system/bus base. Throws ConfigError on
/// zero base.
double to_per_unit(const NetworkModel& model, Quantity q, double value, int bus = -1);
double from_per_unit(const NetworkModel& model, Quantity q, double value, int bus = -1);

}  // namespace qsts
