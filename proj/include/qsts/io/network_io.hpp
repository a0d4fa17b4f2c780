#pragma once

#include <string>

#include "qsts/network/model.hpp"

namespace qsts {

/// Hierarchical key-value (JSON) network document with sections for buses,
/// branches, transformers, shunts, generators, loads, ess, interties,
/// demand_resources and zones. Electrical quantities are MW/MVAr/kV; branch
/// impedances are per-unit by default, or ohms when the document sets
/// "impedance_units": "ohms".
NetworkModel load_network(const std::string& path);
NetworkModel parse_network(const std::string& json_text, const std::string& origin = "<memory>");
void write_network(const NetworkModel& model, const std::string& path);
std::string network_to_json(const NetworkModel& model);

}  // namespace qsts
