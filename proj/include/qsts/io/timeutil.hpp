#pragma once

#include <string>

namespace qsts {

/// Minimal ISO-8601 ("YYYY-MM-DDTHH:MM:SS") calendar arithmetic; timestamps
/// are informational and timezone-free.
struct CivilTime {
    int year = 2035;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

CivilTime parse_iso(const std::string& iso);
std::string format_iso(const CivilTime& t);
CivilTime add_minutes(CivilTime t, long minutes);
std::string add_minutes_iso(const std::string& iso, long minutes);
/// Minutes from a to b (b - a).
long minutes_between(const CivilTime& a, const CivilTime& b);
bool is_leap_year(int year);

}  // namespace qsts
