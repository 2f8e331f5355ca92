#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace flowcast {

// All timestamps are naive local time; the hourly index is hours since
// 1970-01-01T00:00.
using HourIndex = std::int64_t;
using DayIndex = std::int32_t;

struct CivilTime {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;
};

namespace detail {
inline std::chrono::sys_days to_sys_days(int y, int m, int d) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid calendar date " + std::to_string(y) + "-" +
                                    std::to_string(m) + "-" + std::to_string(d));
    }
    return sys_days{ymd};
}
}  // namespace detail

inline DayIndex day_index(int year, int month, int day) {
    return static_cast<DayIndex>(detail::to_sys_days(year, month, day).time_since_epoch().count());
}

inline HourIndex hour_index(int year, int month, int day, int hour) {
    return static_cast<HourIndex>(day_index(year, month, day)) * 24 + hour;
}

inline DayIndex day_of_hour(HourIndex h) {
    return static_cast<DayIndex>(h >= 0 ? h / 24 : (h - 23) / 24);
}

inline CivilTime civil_of_day(DayIndex d) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{d}}};
    CivilTime c;
    c.year = static_cast<int>(ymd.year());
    c.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    c.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
    return c;
}

inline CivilTime civil_of_hour(HourIndex h) {
    DayIndex d = day_of_hour(h);
    CivilTime c = civil_of_day(d);
    c.hour = static_cast<int>(h - static_cast<HourIndex>(d) * 24);
    return c;
}

/// ISO day of week, 1 = Monday .. 7 = Sunday.
inline int iso_weekday(DayIndex d) {
    using namespace std::chrono;
    return static_cast<int>(weekday{sys_days{days{d}}}.iso_encoding());
}

inline bool is_weekend(DayIndex d) {
    int w = iso_weekday(d);
    return w == 6 || w == 7;
}

/// Parses "YYYY-MM-DD" into a day index.
inline DayIndex parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (std::sscanf(std::string(s).c_str(), "%d-%d-%d", &y, &m, &d) != 3) {
        throw std::invalid_argument("malformed date: '" + std::string(s) + "'");
    }
    return day_index(y, m, d);
}

/// Parses "YYYY-MM-DD HH:MM:SS" (a 'T' separator is also accepted, seconds
/// optional) into seconds since epoch.
inline std::int64_t parse_timestamp_seconds(std::string_view s) {
    std::string buf(s);
    for (auto& ch : buf) {
        if (ch == 'T') ch = ' ';
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    int n = std::sscanf(buf.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &se);
    if (n < 5) {
        throw std::invalid_argument("malformed timestamp: '" + std::string(s) + "'");
    }
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60) {
        throw std::invalid_argument("timestamp out of range: '" + std::string(s) + "'");
    }
    std::int64_t days = detail::to_sys_days(y, mo, d).time_since_epoch().count();
    return ((days * 24 + h) * 60 + mi) * 60 + se;
}

inline HourIndex hour_of_seconds(std::int64_t seconds) {
    std::int64_t h = seconds >= 0 ? seconds / 3600 : (seconds - 3599) / 3600;
    return static_cast<HourIndex>(h);
}

inline std::string format_timestamp_seconds(std::int64_t seconds) {
    HourIndex h = hour_of_seconds(seconds);
    CivilTime c = civil_of_hour(h);
    std::int64_t rem = seconds - static_cast<std::int64_t>(h) * 3600;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", c.year, c.month, c.day,
                  c.hour, static_cast<int>(rem / 60), static_cast<int>(rem % 60));
    return buf;
}

inline std::string format_hour(HourIndex h) {
    return format_timestamp_seconds(static_cast<std::int64_t>(h) * 3600);
}

inline std::string format_day(DayIndex d) {
    CivilTime c = civil_of_day(d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

inline int year_of_hour(HourIndex h) { return civil_of_hour(h).year; }

}  // namespace flowcast
