#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "limitlens/time.hpp"

namespace limitlens {

// Prices are held as exact integer hundredths (the minimum tick is 0.01), so
// limit computation and band checks never touch floating point.
using Ticks = std::int64_t;

enum class Exchange : std::uint8_t { SHSE, SZSE };

inline std::string to_string(Exchange e) { return e == Exchange::SHSE ? "SHSE" : "SZSE"; }

inline Exchange parse_exchange(std::string_view s) {
    if (s == "SHSE") return Exchange::SHSE;
    if (s == "SZSE") return Exchange::SZSE;
    throw std::invalid_argument("unknown exchange: " + std::string(s));
}

enum class StockClass : std::uint8_t { Common, SpecialTreatment };

inline std::string to_string(StockClass c) {
    return c == StockClass::Common ? "common" : "special_treatment";
}

inline StockClass parse_stock_class(std::string_view s) {
    if (s == "common") return StockClass::Common;
    if (s == "special_treatment") return StockClass::SpecialTreatment;
    throw std::invalid_argument("unknown stock_class: " + std::string(s));
}

// Parses a decimal price string into integer hundredths. At most two decimal
// places are accepted; anything finer cannot be an exchange price and is
// treated as malformed input.
inline Ticks price_to_ticks(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty price");
    std::size_t pos = 0;
    bool neg = false;
    if (s[0] == '-') {
        neg = true;
        pos = 1;
    }
    if (pos == s.size()) throw std::invalid_argument("malformed price: " + std::string(s));

    std::int64_t whole = 0;
    const char* begin = s.data() + pos;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(begin, end, whole);
    if (ec != std::errc() || p == begin) throw std::invalid_argument("malformed price: " + std::string(s));

    std::int64_t frac = 0;
    if (p != end) {
        if (*p != '.') throw std::invalid_argument("malformed price: " + std::string(s));
        ++p;
        const char* fbegin = p;
        std::size_t digits = static_cast<std::size_t>(end - fbegin);
        if (digits == 0 || digits > 2) throw std::invalid_argument("price has more than 2 decimals: " + std::string(s));
        for (; p != end; ++p) {
            if (*p < '0' || *p > '9') throw std::invalid_argument("malformed price: " + std::string(s));
            frac = frac * 10 + (*p - '0');
        }
        if (digits == 1) frac *= 10;
    }
    Ticks t = whole * 100 + frac;
    return neg ? -t : t;
}

inline std::string ticks_to_price_string(Ticks t) {
    bool neg = t < 0;
    if (neg) t = -t;
    std::string s = neg ? "-" : "";
    s += std::to_string(t / 100);
    s += '.';
    const Ticks f = t % 100;
    s += static_cast<char>('0' + f / 10);
    s += static_cast<char>('0' + f % 10);
    return s;
}

// ===== tick-level records =====

struct BookLevel {
    Ticks price = 0;
    std::int64_t volume = 0;

    bool operator==(const BookLevel&) const = default;
};

inline constexpr int kBookDepth = 5;

struct BookSide {
    std::array<BookLevel, kBookDepth> level{};
    int count = 0;  // number of populated levels, best first

    bool operator==(const BookSide&) const = default;
};

struct TradeTick {
    TimeOfDay time = 0;
    Ticks price = 0;
    std::int64_t volume = 0;
    BookSide bid;
    BookSide ask;

    bool has_quote() const { return bid.count > 0 && ask.count > 0; }
    Ticks best_bid() const { return bid.level[0].price; }
    Ticks best_ask() const { return ask.level[0].price; }

    bool operator==(const TradeTick&) const = default;
};

struct SessionKey {
    std::string stock_id;
    Exchange exchange = Exchange::SHSE;
    Date date;

    auto operator<=>(const SessionKey&) const = default;
};

// One stock-day of trade records plus the session metadata needed to place
// the limit band.
struct DailySession {
    SessionKey key;
    Ticks prev_close = 0;
    StockClass stock_class = StockClass::Common;
    std::vector<TradeTick> ticks;  // time-ordered
};

// ===== index minute bars =====

struct IndexBar {
    TimeOfDay time = 0;
    double level = 0.0;
};

// Minute bars for one exchange composite index on one date, time-ordered.
struct IndexDay {
    Date date;
    std::vector<IndexBar> bars;

    // Exact-minute lookup; returns nullptr when no bar exists at that time.
    const IndexBar* at(TimeOfDay t) const {
        auto it = std::lower_bound(bars.begin(), bars.end(), t,
                                   [](const IndexBar& b, TimeOfDay v) { return b.time < v; });
        if (it == bars.end() || it->time != t) return nullptr;
        return &*it;
    }
};

// Complete minute-bar history for one exchange composite index.
struct IndexSeries {
    Exchange exchange = Exchange::SHSE;
    std::vector<IndexDay> days;  // date-ordered

    const IndexDay* day(const Date& d) const {
        auto it = std::lower_bound(days.begin(), days.end(), d,
                                   [](const IndexDay& x, const Date& v) { return x.date < v; });
        if (it == days.end() || !(it->date == d)) return nullptr;
        return &*it;
    }
};

}  // namespace limitlens
