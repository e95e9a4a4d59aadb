#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace limitlens {

// Calendar date with 1-day resolution. All tick timestamps are a Date plus a
// seconds-since-midnight offset; index bars use epoch seconds for cross-day
// arithmetic.
struct Date {
    std::int32_t year = 1970;
    std::uint8_t month = 1;
    std::uint8_t day = 1;

    auto operator<=>(const Date&) const = default;

    std::int64_t to_epoch_days() const {
        using namespace std::chrono;
        const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                 std::chrono::day{day}};
        return sys_days{ymd}.time_since_epoch().count();
    }

    std::int64_t to_epoch_seconds() const { return to_epoch_days() * 86400; }

    bool valid() const {
        using namespace std::chrono;
        return year_month_day{std::chrono::year{year}, std::chrono::month{month},
                              std::chrono::day{day}}
            .ok();
    }

    // Monday=1 .. Sunday=7
    int weekday() const {
        using namespace std::chrono;
        const weekday wd{sys_days{days{to_epoch_days()}}};
        return static_cast<int>(wd.iso_encoding());
    }

    Date add_days(int n) const {
        using namespace std::chrono;
        const year_month_day ymd{sys_days{days{to_epoch_days() + n}}};
        return Date{static_cast<std::int32_t>(static_cast<int>(ymd.year())),
                    static_cast<std::uint8_t>(static_cast<unsigned>(ymd.month())),
                    static_cast<std::uint8_t>(static_cast<unsigned>(ymd.day()))};
    }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, static_cast<unsigned>(month),
                      static_cast<unsigned>(day));
        return std::string(buf);
    }
};

// Seconds since midnight, local exchange time.
using TimeOfDay = std::int32_t;

inline constexpr TimeOfDay kSessionOpen = 9 * 3600 + 30 * 60;        // 09:30:00
inline constexpr TimeOfDay kMorningClose = 11 * 3600 + 30 * 60;      // 11:30:00
inline constexpr TimeOfDay kAfternoonOpen = 13 * 3600;               // 13:00:00
inline constexpr TimeOfDay kSessionClose = 15 * 3600;                // 15:00:00
inline constexpr TimeOfDay kRegressionStart = 9 * 3600 + 33 * 60;    // 09:33:00

inline std::string format_time_of_day(TimeOfDay t) {
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", t / 3600, (t / 60) % 60, t % 60);
    return std::string(buf);
}

namespace detail {

inline bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

}  // namespace detail

// "YYYY-MM-DD" -> Date; throws std::invalid_argument on malformed input.
inline Date parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !detail::parse_fixed_uint(s, 0, 4, y) ||
        !detail::parse_fixed_uint(s, 5, 2, m) || !detail::parse_fixed_uint(s, 8, 2, d)) {
        throw std::invalid_argument("bad date: '" + std::string(s) + "'");
    }
    const Date date{y, static_cast<std::uint8_t>(m), static_cast<std::uint8_t>(d)};
    if (!date.valid()) throw std::invalid_argument("bad date: '" + std::string(s) + "'");
    return date;
}

// "HH:MM:SS" -> seconds since midnight; throws std::invalid_argument on malformed input.
inline TimeOfDay parse_time_of_day(std::string_view s) {
    int h = 0, m = 0, sec = 0;
    if (s.size() != 8 || s[2] != ':' || s[5] != ':' || !detail::parse_fixed_uint(s, 0, 2, h) ||
        !detail::parse_fixed_uint(s, 3, 2, m) || !detail::parse_fixed_uint(s, 6, 2, sec) ||
        h > 23 || m > 59 || sec > 59) {
        throw std::invalid_argument("bad time: '" + std::string(s) + "'");
    }
    return h * 3600 + m * 60 + sec;
}

}  // namespace limitlens
