#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "limitlens/format.hpp"
#include "limitlens/limits.hpp"
#include "limitlens/marketdata.hpp"
#include "limitlens/time.hpp"

namespace limitlens {

// ===== scalar feature operations =====

// Binary response: did trade k move toward the limit? Ties at the previous
// price are broken against the quote midpoint.
inline int response_y(Ticks p, Ticks p_prev, Ticks a, Ticks b, Direction dir) {
    if (dir == Direction::Up) {
        if (p > p_prev) return 1;
        if (p == p_prev && 2 * p > a + b) return 1;
        return 0;
    }
    if (p < p_prev) return 1;
    if (p == p_prev && 2 * p < a + b) return 1;
    return 0;
}

// Trade-direction indicator; the midpoint itself falls on the -1 branch in
// both orientations.
inline int ibs(Ticks p, Ticks a, Ticks b, Direction dir) {
    if (dir == Direction::Up) return 2 * p > a + b ? 1 : -1;
    return 2 * p < a + b ? 1 : -1;
}

inline double log_size(std::int64_t volume) { return std::log(static_cast<double>(volume)); }

inline double yield_of(Ticks p, Ticks p_prev) {
    return std::log(static_cast<double>(p) / static_cast<double>(p_prev));
}

inline double spread_of(Ticks a, Ticks b) {
    return 2.0 * static_cast<double>(a - b) / static_cast<double>(a + b);
}

// Number of visible book levels: 3 before 2003-12-05, 5 afterwards.
inline int visible_levels(const Date& d) { return d < Date{2003, 12, 5} ? 3 : 5; }

// Signed log currency-value imbalance of the visible book. The raw imbalance
// is exact integer tick-shares; only the final log is floating point.
inline double depth_of(const BookSide& bid, const BookSide& ask, Direction dir, int levels) {
    std::int64_t s = 0;  // in tick-shares (currency value x 100)
    const int nb = std::min(levels, bid.count);
    for (int j = 0; j < nb; ++j)
        s += bid.level[static_cast<std::size_t>(j)].price * bid.level[static_cast<std::size_t>(j)].volume;
    const int na = std::min(levels, ask.count);
    for (int j = 0; j < na; ++j)
        s -= ask.level[static_cast<std::size_t>(j)].price * ask.level[static_cast<std::size_t>(j)].volume;
    if (dir == Direction::Down) s = -s;
    if (s == 0) return 0.0;
    const double mag = std::log(std::abs(static_cast<double>(s)) / 100.0);
    return s > 0 ? mag : -mag;
}

// Sub-optimal trade: printed strictly outside the prevailing best band.
inline int suboptimal_flag(Ticks p, Ticks a, Ticks b) { return (p < b || p > a) ? 1 : 0; }

// Excursion dummy at threshold m (permille of previous close), exact in
// integer arithmetic: up fires when (p_prev - close)/close >= m/1000.
inline int excursion_dummy(Ticks p_prev, Ticks prev_close, Direction dir, int m_permille) {
    const std::int64_t lhs = 1000 * (p_prev - prev_close);
    const std::int64_t rhs = static_cast<std::int64_t>(m_permille) * prev_close;
    if (dir == Direction::Up) return lhs >= rhs ? 1 : 0;
    return lhs <= -rhs ? 1 : 0;
}

// Display label for an m threshold stored in permille: 50 -> "5", 25 -> "2.5".
inline std::string m_label(int m_permille) {
    std::string s = std::to_string(m_permille / 10);
    if (m_permille % 10 != 0) {
        s += '.';
        s += static_cast<char>('0' + m_permille % 10);
    }
    return s;
}

// Log-returns over the last three completed minute bars strictly before the
// trade; needs four bar levels. Most recent return first.
inline std::optional<std::array<double, 3>> mkt_lags(TimeOfDay trade_time, const IndexDay& day) {
    auto ub = std::lower_bound(day.bars.begin(), day.bars.end(), trade_time,
                               [](const IndexBar& b, TimeOfDay v) { return b.time < v; });
    const auto n = static_cast<std::size_t>(ub - day.bars.begin());
    if (n < 4) return std::nullopt;
    std::array<double, 3> out{};
    for (std::size_t l = 1; l <= 3; ++l)
        out[l - 1] = std::log(day.bars[n - l].level / day.bars[n - l - 1].level);
    return out;
}

// ===== per-event regression rows =====

enum class Variant : std::uint8_t { Base, Suboptimal, Conditional };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::Base: return "base";
        case Variant::Suboptimal: return "suboptimal";
        default: return "conditional";
    }
}

inline Variant parse_variant(std::string_view s) {
    if (s == "base") return Variant::Base;
    if (s == "suboptimal") return Variant::Suboptimal;
    if (s == "conditional") return Variant::Conditional;
    throw std::invalid_argument("unknown variant: " + std::string(s));
}

struct FeatureRow {
    std::size_t k = 0;  // 0-based trade index within the pre-hit slice
    int y = 0;
    double dt = 0.0;
    std::array<double, 3> dirvol{};  // V_{k-l} * IBS_{k-l}, l = 1..3
    double yield_prev = 0.0;
    std::array<double, 3> mkt{};  // most recent first
    double spread_prev = 0.0;
    double depth_prev = 0.0;
    int is_prev = 0;
    Ticks p_prev = 0;  // previous trade price; drives the excursion dummies
};

struct RowDropCounts {
    std::uint64_t missing_quote = 0;
    std::uint64_t missing_index = 0;

    std::uint64_t total() const { return missing_quote + missing_index; }
};

struct FeatureOptions {
    std::int64_t gap_clamp_seconds = 0;  // 0 = raw clock seconds across gaps
};

// Variant-independent rows for one event; per-variant design matrices are
// assembled from these without recomputation.
struct FeatureTable {
    std::vector<FeatureRow> rows;
    RowDropCounts drops;
    std::size_t n_prehit_trades = 0;  // trades from open through the hit
};

namespace detail {

// The prevailing quote for a trade is the book of the tick-stream row
// immediately before the print; the trade row's own book already embeds the
// trade's impact.
struct TradeRef {
    std::size_t tick_index = 0;
    const BookSide* bid = nullptr;  // nullptr when no usable prior snapshot
    const BookSide* ask = nullptr;

    bool has_quote() const { return bid != nullptr; }
};

inline std::vector<TradeRef> collect_prehit_trades(const LimitHitEvent& ev) {
    const auto& ticks = ev.session->ticks;
    std::vector<TradeRef> trades;
    for (std::size_t i = 0; i <= ev.hit_index; ++i) {
        if (ticks[i].volume <= 0) continue;
        TradeRef ref;
        ref.tick_index = i;
        if (i > 0 && ticks[i - 1].bid.count > 0 && ticks[i - 1].ask.count > 0) {
            ref.bid = &ticks[i - 1].bid;
            ref.ask = &ticks[i - 1].ask;
        }
        trades.push_back(ref);
    }
    return trades;
}

}  // namespace detail

// Builds one row per trade k in the pre-hit slice with time strictly after
// 09:33 and three fully-resolved lags; rows with a missing quote snapshot or
// missing index bars are dropped and counted.
inline FeatureTable build_feature_table(const LimitHitEvent& ev, const IndexSeries& index,
                                        const FeatureOptions& opts = {}) {
    FeatureTable out;
    const auto& ticks = ev.session->ticks;
    const auto trades = detail::collect_prehit_trades(ev);
    out.n_prehit_trades = trades.size();
    const IndexDay* index_day = index.day(ev.session->key.date);
    const int levels = visible_levels(ev.session->key.date);

    for (std::size_t k = 3; k < trades.size(); ++k) {
        const auto& tr = trades[k];
        const TradeTick& tk = ticks[tr.tick_index];
        if (tk.time <= kRegressionStart) continue;

        bool quotes_ok = true;
        for (std::size_t l = 0; l <= 3; ++l)
            if (!trades[k - l].has_quote()) quotes_ok = false;
        if (!quotes_ok) {
            ++out.drops.missing_quote;
            continue;
        }
        std::optional<std::array<double, 3>> mkt;
        if (index_day) mkt = mkt_lags(tk.time, *index_day);
        if (!mkt) {
            ++out.drops.missing_index;
            continue;
        }

        const auto& t1 = trades[k - 1];
        const auto& t2 = trades[k - 2];
        const TradeTick& tk1 = ticks[t1.tick_index];
        const TradeTick& tk2 = ticks[t2.tick_index];

        FeatureRow row;
        row.k = k;
        row.y = response_y(tk.price, tk1.price, tr.ask->level[0].price, tr.bid->level[0].price,
                           ev.direction);
        row.dt = static_cast<double>(tk.time - tk1.time);
        if (opts.gap_clamp_seconds > 0)
            row.dt = std::min(row.dt, static_cast<double>(opts.gap_clamp_seconds));
        for (std::size_t l = 1; l <= 3; ++l) {
            const auto& tl = trades[k - l];
            const TradeTick& tt = ticks[tl.tick_index];
            row.dirvol[l - 1] =
                log_size(tt.volume) *
                ibs(tt.price, tl.ask->level[0].price, tl.bid->level[0].price, ev.direction);
        }
        row.yield_prev = yield_of(tk1.price, tk2.price);
        row.mkt = *mkt;
        row.spread_prev = spread_of(t1.ask->level[0].price, t1.bid->level[0].price);
        row.depth_prev = depth_of(*t1.bid, *t1.ask, ev.direction, levels);
        row.is_prev = suboptimal_flag(tk1.price, t1.ask->level[0].price, t1.bid->level[0].price);
        row.p_prev = tk1.price;
        out.rows.push_back(row);
    }
    return out;
}

// ===== design matrices =====

struct FeatureMatrix {
    Variant variant = Variant::Base;
    int m_permille = 0;  // conditional models only
    std::vector<std::string> columns;
    std::vector<double> x;  // row-major, n x columns.size()
    std::vector<int> y;
    bool dummy_dropped = false;  // conditional: IR^m constant, beta6 column dropped

    std::size_t n_rows() const { return y.size(); }
    std::size_t n_cols() const { return columns.size(); }
};

// Assembles the design matrix for one model variant from the shared rows.
// Conditional models whose dummy is constant over the event lose the
// interaction column (it would be all-zero or collinear with yield).
inline FeatureMatrix build_matrix(const FeatureTable& table, const LimitHitEvent& ev, Variant variant,
                                  int m_permille = 0) {
    FeatureMatrix out;
    out.variant = variant;
    out.m_permille = variant == Variant::Conditional ? m_permille : 0;

    std::vector<int> ir;
    bool include_interaction = variant != Variant::Base;
    if (variant == Variant::Conditional) {
        ir.reserve(table.rows.size());
        for (const auto& row : table.rows)
            ir.push_back(excursion_dummy(row.p_prev, ev.session->prev_close, ev.direction, m_permille));
        bool constant = true;
        for (std::size_t i = 1; i < ir.size(); ++i)
            if (ir[i] != ir[0]) constant = false;
        if (constant && !ir.empty()) {
            out.dummy_dropped = true;
            include_interaction = false;
        }
    }

    out.columns = {"intercept", "dt", "dirvol_l1", "dirvol_l2", "dirvol_l3", "yield_prev"};
    if (include_interaction)
        out.columns.push_back(variant == Variant::Suboptimal ? "is_yield_prev" : "ir_yield_prev");
    out.columns.insert(out.columns.end(), {"mkt_l1", "mkt_l2", "mkt_l3", "spread_prev", "depth_prev"});

    out.x.reserve(table.rows.size() * out.columns.size());
    out.y.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        out.y.push_back(row.y);
        out.x.push_back(1.0);
        out.x.push_back(row.dt);
        out.x.push_back(row.dirvol[0]);
        out.x.push_back(row.dirvol[1]);
        out.x.push_back(row.dirvol[2]);
        out.x.push_back(row.yield_prev);
        if (include_interaction) {
            const double flag = variant == Variant::Suboptimal ? static_cast<double>(row.is_prev)
                                                               : static_cast<double>(ir[i]);
            out.x.push_back(flag * row.yield_prev);
        }
        out.x.push_back(row.mkt[0]);
        out.x.push_back(row.mkt[1]);
        out.x.push_back(row.mkt[2]);
        out.x.push_back(row.spread_prev);
        out.x.push_back(row.depth_prev);
    }
    return out;
}

// One-file-per-event CSV export of a design matrix for external cross-checks.
inline void write_feature_csv(std::ostream& out, const FeatureTable& table, const FeatureMatrix& m) {
    out << "k,y";
    for (std::size_t c = 1; c < m.columns.size(); ++c) out << ',' << m.columns[c];
    out << '\n';
    const std::size_t p = m.n_cols();
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
        out << table.rows[i].k << ',' << m.y[i];
        for (std::size_t c = 1; c < p; ++c) out << ',' << format_double(m.x[i * p + c]);
        out << '\n';
    }
}

}  // namespace limitlens
