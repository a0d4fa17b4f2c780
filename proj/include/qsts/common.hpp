#pragma once

#include <stdexcept>
#include <string>

namespace qsts {

/// Base class for all errors raised by the simulator.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised when a profiled device has no value at a requested step.
class MissingProfile : public Error {
public:
    MissingProfile(const std::string& device, long step)
        : Error("missing profile value for device '" + device + "' at step " + std::to_string(step)),
          device_id(device), time_index(step) {}
    std::string device_id;
    long time_index;
};

constexpr double kMinutesPerHour = 60.0;

inline double steps_to_hours(long steps, int resolution_minutes) {
    return static_cast<double>(steps) * resolution_minutes / kMinutesPerHour;
}

}  // namespace qsts
