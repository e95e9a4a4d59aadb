#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitlens/marketdata.hpp"
#include "limitlens/time.hpp"

namespace limitlens {

// ===== rounding =====

// The exchange rule rounds the scaled previous close to the tick. The legal
// texts do not pin the half-case; half-away-from-zero is the default and
// half-even can be selected for sensitivity runs.
enum class RoundingMode : std::uint8_t { HalfAwayFromZero, HalfEven };

inline std::string to_string(RoundingMode m) {
    return m == RoundingMode::HalfAwayFromZero ? "half_away_from_zero" : "half_even";
}

inline RoundingMode parse_rounding_mode(std::string_view s) {
    if (s == "half_away_from_zero") return RoundingMode::HalfAwayFromZero;
    if (s == "half_even") return RoundingMode::HalfEven;
    throw std::invalid_argument("unknown rounding mode: " + std::string(s));
}

// Rounds num/den (both positive) to the nearest integer in exact integer
// arithmetic; the half-case follows the requested mode.
inline std::int64_t round_rational(std::int64_t num, std::int64_t den, RoundingMode mode) {
    if (num < 0 || den <= 0) throw std::invalid_argument("round_rational expects num >= 0, den > 0");
    const std::int64_t q = num / den;
    const std::int64_t rem2 = 2 * (num - q * den);
    if (rem2 < den) return q;
    if (rem2 > den) return q + 1;
    if (mode == RoundingMode::HalfAwayFromZero) return q + 1;
    return (q % 2 == 0) ? q : q + 1;  // half-even
}

// ===== daily limits =====

struct LimitPrices {
    Ticks up = 0;
    Ticks down = 0;

    bool operator==(const LimitPrices&) const = default;
};

inline int limit_rate_percent(StockClass c) { return c == StockClass::Common ? 10 : 5; }

// P± = R[prev_close × (1 ± r)] in ticks, computed as exact rationals
// prev_close·(100 ± r)/100 so no float ever touches the band.
inline LimitPrices compute_limits(Ticks prev_close, int rate_percent,
                                  RoundingMode mode = RoundingMode::HalfAwayFromZero) {
    if (prev_close <= 0) throw std::invalid_argument("prev_close must be positive");
    if (rate_percent <= 0 || rate_percent >= 100) throw std::invalid_argument("rate out of range");
    LimitPrices lim;
    lim.up = round_rational(prev_close * (100 + rate_percent), 100, mode);
    lim.down = round_rational(prev_close * (100 - rate_percent), 100, mode);
    return lim;
}

// ===== market-state calendar =====

enum class MarketState : std::uint8_t { Bullish, Bearish };

inline std::string to_string(MarketState s) { return s == MarketState::Bullish ? "bullish" : "bearish"; }

inline MarketState parse_market_state(std::string_view s) {
    if (s == "bullish") return MarketState::Bullish;
    if (s == "bearish") return MarketState::Bearish;
    throw std::invalid_argument("unknown market state: " + std::string(s));
}

struct CalendarInterval {
    Date start;
    Date end;  // inclusive
    MarketState state = MarketState::Bullish;
};

// Bull/bear segmentation of the study window. Intervals must be sorted,
// non-overlapping and contiguous; dates outside the window are an error.
class MarketCalendar {
  public:
    explicit MarketCalendar(std::vector<CalendarInterval> intervals)
        : intervals_(std::move(intervals)) {
        if (intervals_.empty()) throw std::invalid_argument("empty market calendar");
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            const auto& iv = intervals_[i];
            if (iv.end < iv.start)
                throw std::invalid_argument("calendar interval ends before it starts: " +
                                            iv.start.to_string());
            if (i > 0 && !(intervals_[i - 1].end.add_days(1) == iv.start))
                throw std::invalid_argument("calendar intervals not contiguous at " +
                                            iv.start.to_string());
        }
    }

    MarketState label(const Date& d) const {
        if (d < intervals_.front().start || intervals_.back().end < d)
            throw std::out_of_range("date outside calendar coverage: " + d.to_string());
        for (const auto& iv : intervals_) {
            if (!(d < iv.start) && !(iv.end < d)) return iv.state;
        }
        throw std::out_of_range("date outside calendar coverage: " + d.to_string());
    }

    const std::vector<CalendarInterval>& intervals() const { return intervals_; }

  private:
    std::vector<CalendarInterval> intervals_;
};

// The six bull/bear intervals of the 2000-2011 study window. These are data,
// not logic: a config-supplied calendar replaces them wholesale.
inline MarketCalendar default_calendar() {
    return MarketCalendar({
        {Date{2000, 1, 4}, Date{2001, 6, 13}, MarketState::Bullish},
        {Date{2001, 6, 14}, Date{2005, 6, 3}, MarketState::Bearish},
        {Date{2005, 6, 4}, Date{2007, 10, 16}, MarketState::Bullish},
        {Date{2007, 10, 17}, Date{2008, 10, 27}, MarketState::Bearish},
        {Date{2008, 10, 28}, Date{2009, 8, 4}, MarketState::Bullish},
        {Date{2009, 8, 5}, Date{2011, 12, 30}, MarketState::Bearish},
    });
}

// ===== hit detection =====

enum class Direction : std::uint8_t { Up, Down };

inline std::string to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }

inline Direction parse_direction(std::string_view s) {
    if (s == "up") return Direction::Up;
    if (s == "down") return Direction::Down;
    throw std::invalid_argument("unknown direction: " + std::string(s));
}

struct LimitHitEvent {
    const DailySession* session = nullptr;
    LimitPrices limits;
    Direction direction = Direction::Up;
    std::size_t hit_index = 0;  // index into session->ticks of the hitting trade
    MarketState market_state = MarketState::Bullish;
    bool opening_hit = false;

    TimeOfDay hit_time() const { return session->ticks[hit_index].time; }
    Ticks hit_price() const { return session->ticks[hit_index].price; }

    // Trades (volume > 0) from the open through the hit, hit included.
    std::size_t prehit_trade_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i <= hit_index; ++i)
            if (session->ticks[i].volume > 0) ++n;
        return n;
    }
};

// Scans the session in time order and returns the first trade printing at
// either limit. Quote rows never constitute a hit. A trade strictly outside
// the band is impossible under the exchange rule and raises an error.
inline std::optional<LimitHitEvent> detect_first_hit(const DailySession& session,
                                                     const LimitPrices& limits,
                                                     const MarketCalendar& calendar) {
    bool seen_trade = false;
    for (std::size_t i = 0; i < session.ticks.size(); ++i) {
        const TradeTick& t = session.ticks[i];
        if (t.volume <= 0) continue;  // book update only
        if (t.price > limits.up || t.price < limits.down)
            throw std::runtime_error("trade outside limit band: " + session.key.stock_id + " " +
                                     session.key.date.to_string() + " " + format_time_of_day(t.time) +
                                     " price " + ticks_to_price_string(t.price));
        if (t.price == limits.up || t.price == limits.down) {
            LimitHitEvent ev;
            ev.session = &session;
            ev.limits = limits;
            ev.direction = t.price == limits.up ? Direction::Up : Direction::Down;
            ev.hit_index = i;
            ev.market_state = calendar.label(session.key.date);
            ev.opening_hit = !seen_trade;
            return ev;
        }
        seen_trade = true;
    }
    return std::nullopt;
}

}  // namespace limitlens
