#pragma once

#include <string>
#include <vector>

#include "qsts/common.hpp"
#include "qsts/network/model.hpp"

namespace qsts {

enum class ProfileKind { load_p, load_q, gen_p, intertie_schedule };

/// Synchronized per-device series over the horizon. Built by the CSV loader
/// or synthesized; device indices are resolved against the model up front.
struct TimeSeriesDataset {
    int resolution_minutes = 5;
    std::string start_timestamp;  // ISO-8601 of step 0
    long steps = 0;

    struct Series {
        std::string device_id;
        ProfileKind kind = ProfileKind::load_p;
        int device_index = -1;  // index into the model's load/generator/intertie vector
        std::vector<double> values;
    };
    std::vector<Series> series;

    double value(std::size_t series_index, long t) const {
        const Series& s = series[series_index];
        if (t < 0 || t >= static_cast<long>(s.values.size()))
            throw MissingProfile(s.device_id, t);
        return s.values[t];
    }

    /// Keeps every factor-th sample; used by the resolution study.
    TimeSeriesDataset downsample(int factor) const;

    void validate_against(const NetworkModel& model) const;
};

class GapDetected : public IoError {
public:
    using IoError::IoError;
};
class UnknownDevice : public IoError {
public:
    using IoError::IoError;
};
class NonUniformSpacing : public IoError {
public:
    using IoError::IoError;
};

/// Wide-CSV profile reader: first column ISO-8601 timestamps at uniform
/// spacing, one column per device id ("<id>" active power, "<id>/q"
/// reactive). Column ids must resolve against the model.
TimeSeriesDataset load_profiles(const std::string& path, const NetworkModel& model);

/// Inverse of load_profiles; round-trips exactly (17 significant digits).
void write_profiles(const TimeSeriesDataset& dataset, const std::string& path);

}  // namespace qsts
