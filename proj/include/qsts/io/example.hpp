#pragma once

#include <string>

#include "qsts/ess/ess_control.hpp"
#include "qsts/io/profiles.hpp"
#include "qsts/network/model.hpp"

namespace qsts {

/// Bundled synthetic two-zone system: twelve 735 kV buses (northern hydro
/// complex, two long corridors, a southern ring, two wind-zone buses),
/// fourteen 25 kV distribution interfaces, eleven switchable lines, EHV
/// reactors and distribution capacitor banks, two storage aggregations and
/// two interties. with_storage selects the storage-equipped variant.
NetworkModel example_network(bool with_storage = true);

/// Deterministic synthetic year: seasonal/daily/weekday load shapes, two
/// phase-shifted wind regimes, scheduled interties. Formula-based, so any
/// build reproduces the same bytes.
TimeSeriesDataset example_profiles(const NetworkModel& model, int resolution_minutes, int days,
                                   unsigned seed = 1);

/// Weekday peak windows, two per day.
PeakCalendar example_peak_calendar(int resolution_minutes, int days);

/// Writes network_s1.json / network_s2.json, profiles.csv, peaks.csv and
/// ready-to-run config files into dir.
void write_example(const std::string& dir, int days, int resolution_minutes);

}  // namespace qsts
