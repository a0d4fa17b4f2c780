#include "qsts/io/timeutil.hpp"

#include <cstdio>

#include "qsts/common.hpp"

namespace qsts {

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

namespace {

int days_in_month(int year, int month) {
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return kDays[month - 1];
}

long days_from_civil(int y, int m, int d) {
    // days since 1970-01-01, Howard Hinnant's algorithm
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

}  // namespace

CivilTime parse_iso(const std::string& iso) {
    CivilTime t;
    char sep = 'T';
    if (std::sscanf(iso.c_str(), "%d-%d-%d%c%d:%d:%d", &t.year, &t.month, &t.day, &sep, &t.hour,
                    &t.minute, &t.second) < 3)
        throw IoError("invalid ISO-8601 timestamp '" + iso + "'");
    if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > days_in_month(t.year, t.month) ||
        t.hour < 0 || t.hour > 23 || t.minute < 0 || t.minute > 59 || t.second < 0 || t.second > 60)
        throw IoError("out-of-range timestamp '" + iso + "'");
    return t;
}

std::string format_iso(const CivilTime& t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", t.year, t.month, t.day, t.hour,
                  t.minute, t.second);
    return buf;
}

CivilTime add_minutes(CivilTime t, long minutes) {
    long total = t.hour * 60L + t.minute + minutes;
    long day_shift = total / (24 * 60);
    long rem = total % (24 * 60);
    if (rem < 0) {
        rem += 24 * 60;
        --day_shift;
    }
    t.hour = static_cast<int>(rem / 60);
    t.minute = static_cast<int>(rem % 60);
    t.day += static_cast<int>(day_shift);
    while (t.day > days_in_month(t.year, t.month)) {
        t.day -= days_in_month(t.year, t.month);
        if (++t.month > 12) {
            t.month = 1;
            ++t.year;
        }
    }
    while (t.day < 1) {
        if (--t.month < 1) {
            t.month = 12;
            --t.year;
        }
        t.day += days_in_month(t.year, t.month);
    }
    return t;
}

std::string add_minutes_iso(const std::string& iso, long minutes) {
    return format_iso(add_minutes(parse_iso(iso), minutes));
}

long minutes_between(const CivilTime& a, const CivilTime& b) {
    const long days = days_from_civil(b.year, b.month, b.day) -
                      days_from_civil(a.year, a.month, a.day);
    return days * 24 * 60 + (b.hour - a.hour) * 60L + (b.minute - a.minute);
}

}  // namespace qsts
