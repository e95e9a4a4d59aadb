#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitlens/features.hpp"
#include "limitlens/limits.hpp"
#include "limitlens/marketdata.hpp"
#include "limitlens/rng.hpp"
#include "limitlens/time.hpp"

namespace limitlens {

// ===== regression-schema dataset (direct GLM oracle) =====

struct GlmSynthConfig {
    std::uint64_t seed = 1;
    std::size_t n = 2000;
    std::vector<double> beta;  // 11 coefficients, Eq.-11 column order
};

struct GlmDataset {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<std::string> columns;
    std::vector<double> x;  // row-major, intercept first
    std::vector<int> y;
    std::vector<double> true_beta;
};

// Draws a design with the base-model column schema at realistic magnitudes
// (yield/MKT/spread ~ 1e-3, dirvol ~ +-10) and Bernoulli responses from the
// logit link at true_beta.
inline GlmDataset gen_glm_dataset(const GlmSynthConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("gen_glm_dataset: n must be >= 1");
    GlmDataset out;
    out.columns = {"intercept", "dt",     "dirvol_l1", "dirvol_l2", "dirvol_l3", "yield_prev",
                   "mkt_l1",    "mkt_l2", "mkt_l3",    "spread_prev", "depth_prev"};
    out.n = cfg.n;
    out.p = out.columns.size();
    if (cfg.beta.size() != out.p)
        throw std::invalid_argument("gen_glm_dataset: true_beta must have 11 coefficients");
    out.true_beta = cfg.beta;
    out.x.reserve(out.n * out.p);
    out.y.reserve(out.n);

    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < out.n; ++i) {
        double row[11];
        row[0] = 1.0;
        row[1] = rng.exponential(20.0);  // dt seconds
        for (int l = 0; l < 3; ++l) {
            const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            row[2 + l] = sign * rng.normal(9.0, 1.0);  // log-size x direction
        }
        row[5] = rng.normal(0.0, 1e-3);  // yield
        for (int l = 0; l < 3; ++l) row[6 + l] = rng.normal(0.0, 5e-4);  // index returns
        row[9] = 2e-3 * std::exp(rng.normal(0.0, 0.3));                  // relative spread
        row[10] = rng.normal(0.0, 8.0);                                  // signed log depth

        double eta = 0.0;
        for (std::size_t j = 0; j < out.p; ++j) eta += cfg.beta[j] * row[j];
        const double mu = eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
        out.y.push_back(rng.bernoulli(mu) ? 1 : 0);
        out.x.insert(out.x.end(), row, row + out.p);
    }
    return out;
}

// ===== tick-level session generator =====

struct SynthConfig {
    std::uint64_t seed = 42;
    int n_stocks = 5;
    int n_days = 20;
    Date start_date{2006, 1, 4};  // sessions walk forward over weekdays
    double st_fraction = 0.2;     // per-stock chance of special treatment

    // hit injection policy
    double p_up_hit = 0.15;    // per stock-day
    double p_down_hit = 0.15;  // per stock-day
    double p_opening_hit = 0.05;  // conditional on a hit being injected
    double hit_frac_lo = 0.35;    // hit time as a fraction of trading seconds
    double hit_frac_hi = 0.95;
    int post_hit_trades = 25;

    // tick process
    double arrival_mean_seconds = 20.0;
    double size_mu = 9.0;  // lognormal trade size (shares)
    double size_sigma = 1.0;

    // step process: P(step toward up) = sigma(c0 + c_rev * (-yield) + c_ibs * ibs)
    double step_c0 = 0.0;
    double step_c_rev = 400.0;
    double step_c_ibs = 0.35;
    double p_flat = 0.25;   // zero-tick step
    double p_step2 = 0.20;  // |step| = 2 ticks (given a move)
    double p_step3 = 0.05;  // |step| = 3 ticks (given a move)
    double p_wide_spread = 0.25;  // half-spread 2 ticks instead of 1

    double index_vol = 5e-4;  // sd of one-minute index log-returns
};

struct InjectedHit {
    SessionKey key;
    StockClass stock_class = StockClass::Common;
    Direction direction = Direction::Up;
    std::size_t tick_index = 0;  // into the session's tick vector
    TimeOfDay time = 0;
    bool opening_hit = false;
};

struct SynthOutput {
    std::vector<DailySession> sessions;  // sorted by SessionKey
    std::vector<IndexSeries> index;      // one per exchange, SHSE first
    std::vector<InjectedHit> hits;       // ground truth, session order
};

namespace detail {

// Session trading seconds: 0..7199 morning, 7200..14399 afternoon.
inline constexpr std::int64_t kSessionSeconds = 14400;

inline TimeOfDay session_second(std::int64_t s) {
    return s < 7200 ? kSessionOpen + static_cast<TimeOfDay>(s)
                    : kAfternoonOpen + static_cast<TimeOfDay>(s - 7200);
}

// RNG stream tags; distinct per purpose so streams never collide.
inline constexpr std::uint64_t kTagStock = 0x53544bULL;
inline constexpr std::uint64_t kTagDay = 0x444159ULL;
inline constexpr std::uint64_t kTagIndex = 0x494458ULL;

inline std::string synth_stock_id(int i, Exchange e) {
    std::string tail = std::to_string(i);
    while (tail.size() < 4) tail.insert(tail.begin(), '0');
    return (e == Exchange::SHSE ? "60" : "00") + tail;
}

struct BookDraw {
    BookSide bid;
    BookSide ask;
};

// Book around the current price, truncated at the limit band so quotes never
// leave it; near a limit one side may carry fewer than 5 levels.
inline BookDraw draw_book(Rng& rng, Ticks price, const LimitPrices& lim, int half_spread) {
    BookDraw b;
    for (int j = 0; j < kBookDepth; ++j) {
        const Ticks bp = price - half_spread - j;
        if (bp < lim.down) break;
        b.bid.level[static_cast<std::size_t>(j)] = {
            bp, 100 + static_cast<std::int64_t>(std::lround(rng.lognormal(8.0, 0.8)))};
        ++b.bid.count;
    }
    for (int j = 0; j < kBookDepth; ++j) {
        const Ticks ap = price + half_spread + j;
        if (ap > lim.up) break;
        b.ask.level[static_cast<std::size_t>(j)] = {
            ap, 100 + static_cast<std::int64_t>(std::lround(rng.lognormal(8.0, 0.8)))};
        ++b.ask.count;
    }
    return b;
}

inline std::int64_t draw_trade_size(Rng& rng, const SynthConfig& cfg) {
    const double v = rng.lognormal(cfg.size_mu, cfg.size_sigma);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(v)));
}

}  // namespace detail

// Generates the configured stock-day grid. Independent RNG substreams per
// (stock, day) mean adding stocks or days never perturbs existing output.
inline SynthOutput gen_sessions(const SynthConfig& cfg) {
    if (cfg.n_stocks < 1 || cfg.n_days < 1) throw std::invalid_argument("empty synth grid");
    if (cfg.hit_frac_lo < 0 || cfg.hit_frac_hi > 1 || cfg.hit_frac_lo >= cfg.hit_frac_hi)
        throw std::invalid_argument("bad hit time window");

    SynthOutput out;

    // Trading dates: consecutive weekdays from start_date.
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(cfg.n_days));
    Date d = cfg.start_date;
    while (static_cast<int>(dates.size()) < cfg.n_days) {
        if (d.weekday() <= 5) dates.push_back(d);
        d = d.add_days(1);
    }

    // Per-stock static draws.
    struct StockInfo {
        Exchange exchange;
        std::string id;
        StockClass cls;
        Ticks prev_close;
    };
    std::vector<StockInfo> stocks;
    stocks.reserve(static_cast<std::size_t>(cfg.n_stocks));
    for (int s = 0; s < cfg.n_stocks; ++s) {
        Rng rng(substream(cfg.seed, detail::kTagStock, static_cast<std::uint64_t>(s)));
        StockInfo info;
        info.exchange = s % 2 == 0 ? Exchange::SHSE : Exchange::SZSE;
        info.id = detail::synth_stock_id(s, info.exchange);
        info.cls = rng.bernoulli(cfg.st_fraction) ? StockClass::SpecialTreatment : StockClass::Common;
        info.prev_close = info.cls == StockClass::Common
                              ? static_cast<Ticks>(rng.uniform_int(500, 3000))
                              : static_cast<Ticks>(rng.uniform_int(200, 800));
        stocks.push_back(std::move(info));
    }

    for (int s = 0; s < cfg.n_stocks; ++s) {
        StockInfo& stock = stocks[static_cast<std::size_t>(s)];
        for (int day = 0; day < cfg.n_days; ++day) {
            Rng rng(substream(cfg.seed, detail::kTagDay, static_cast<std::uint64_t>(s),
                              static_cast<std::uint64_t>(day)));
            DailySession session;
            session.key = {stock.id, stock.exchange, dates[static_cast<std::size_t>(day)]};
            session.prev_close = stock.prev_close;
            session.stock_class = stock.cls;
            const LimitPrices lim = compute_limits(stock.prev_close, limit_rate_percent(stock.cls));

            // Hit script for the day.
            const double u = rng.uniform();
            const bool want_up = u < cfg.p_up_hit;
            const bool want_down = !want_up && u < cfg.p_up_hit + cfg.p_down_hit;
            const bool want_hit = want_up || want_down;
            const Direction hit_dir = want_up ? Direction::Up : Direction::Down;
            const Ticks hit_price = want_up ? lim.up : lim.down;
            const bool opening = want_hit && rng.bernoulli(cfg.p_opening_hit);
            const std::int64_t hit_second =
                want_hit && !opening
                    ? static_cast<std::int64_t>(rng.uniform(cfg.hit_frac_lo, cfg.hit_frac_hi) *
                                                static_cast<double>(detail::kSessionSeconds))
                    : -1;

            // Interior band for the reflected pre-hit walk.
            const Ticks lo = lim.down + 1;
            const Ticks hi = lim.up - 1;
            Ticks price = std::clamp(stock.prev_close, lo, hi);
            Ticks p_prev2 = price;  // price two trades back, for the yield signal
            int last_ibs = 0;
            bool hit_done = false;
            std::size_t hit_tick_index = 0;
            TimeOfDay hit_time = 0;
            int post_hit_left = -1;

            std::int64_t t = 0;
            if (opening) {
                // Quote row, then the first trade prints at the limit.
                const auto book = detail::draw_book(rng, price, lim, 1);
                TradeTick quote;
                quote.time = detail::session_second(0);
                quote.price = price;
                quote.volume = 0;
                quote.bid = book.bid;
                quote.ask = book.ask;
                session.ticks.push_back(quote);

                TradeTick trade;
                trade.time = detail::session_second(1);
                trade.price = hit_price;
                trade.volume = detail::draw_trade_size(rng, cfg);
                const auto after = detail::draw_book(rng, hit_price, lim, 1);
                trade.bid = after.bid;
                trade.ask = after.ask;
                hit_tick_index = session.ticks.size();
                hit_time = trade.time;
                session.ticks.push_back(trade);

                price = hit_price;
                hit_done = true;
                post_hit_left = cfg.post_hit_trades;
                t = 1;
            }

            while (true) {
                t += 1 + static_cast<std::int64_t>(rng.exponential(cfg.arrival_mean_seconds));
                if (t >= detail::kSessionSeconds) break;
                if (post_hit_left == 0) break;

                const bool scripted_hit = !hit_done && hit_second >= 0 && t >= hit_second;

                // Prevailing book, stamped one second before the print when
                // the clock allows it.
                const int half_spread = rng.bernoulli(cfg.p_wide_spread) ? 2 : 1;
                const auto book = detail::draw_book(rng, price, lim, half_spread);
                const TimeOfDay trade_time = detail::session_second(t);
                TimeOfDay quote_time = detail::session_second(std::max<std::int64_t>(0, t - 1));
                if (!session.ticks.empty() && quote_time < session.ticks.back().time)
                    quote_time = session.ticks.back().time;
                TradeTick quote;
                quote.time = quote_time;
                quote.price = price;
                quote.volume = 0;
                quote.bid = book.bid;
                quote.ask = book.ask;
                session.ticks.push_back(quote);

                Ticks new_price;
                if (scripted_hit) {
                    new_price = hit_price;
                } else if (hit_done) {
                    // Drift near the touched limit without leaving the band.
                    const Ticks base = hit_dir == Direction::Up ? lim.up : lim.down;
                    const Ticks off = static_cast<Ticks>(rng.uniform_int(0, 2));
                    new_price = hit_dir == Direction::Up ? std::max(base - off, lim.down)
                                                         : std::min(base + off, lim.up);
                } else {
                    // Logistic step direction driven by the lagged yield and
                    // trade-direction signals; this is the regression's truth.
                    const double yield_prev =
                        std::log(static_cast<double>(price) / static_cast<double>(p_prev2));
                    const double eta = cfg.step_c0 + cfg.step_c_rev * (-yield_prev) +
                                       cfg.step_c_ibs * static_cast<double>(last_ibs);
                    const double p_up = 1.0 / (1.0 + std::exp(-eta));
                    const bool up = rng.bernoulli(p_up);
                    Ticks step = 0;
                    if (!rng.bernoulli(cfg.p_flat)) {
                        const double su = rng.uniform();
                        step = su < cfg.p_step3 ? 3 : (su < cfg.p_step3 + cfg.p_step2 ? 2 : 1);
                    }
                    new_price = up ? price + step : price - step;
                    if (new_price > hi) new_price = 2 * hi - new_price;
                    if (new_price < lo) new_price = 2 * lo - new_price;
                }

                TradeTick trade;
                trade.time = trade_time;
                trade.price = new_price;
                trade.volume = detail::draw_trade_size(rng, cfg);
                const auto after = detail::draw_book(rng, new_price, lim, half_spread);
                trade.bid = after.bid;
                trade.ask = after.ask;

                // Direction of this trade against the prevailing quote, in the
                // up orientation, for the next step's signal.
                last_ibs = 2 * new_price > book.bid.level[0].price + book.ask.level[0].price ? 1 : -1;

                if (scripted_hit) {
                    hit_done = true;
                    hit_tick_index = session.ticks.size();
                    hit_time = trade_time;
                    post_hit_left = cfg.post_hit_trades;
                } else if (post_hit_left > 0) {
                    --post_hit_left;
                }
                p_prev2 = price;
                price = new_price;
                session.ticks.push_back(trade);
            }

            if (hit_done) {
                out.hits.push_back(InjectedHit{session.key, stock.cls, hit_dir, hit_tick_index,
                                               hit_time, opening});
            }
            if (!session.ticks.empty()) {
                // Next day's band hangs off today's close.
                for (auto it = session.ticks.rbegin(); it != session.ticks.rend(); ++it) {
                    if (it->volume > 0) {
                        stock.prev_close = it->price;
                        break;
                    }
                }
            }
            out.sessions.push_back(std::move(session));
        }
    }

    std::sort(out.sessions.begin(), out.sessions.end(),
              [](const DailySession& a, const DailySession& b) { return a.key < b.key; });
    std::sort(out.hits.begin(), out.hits.end(),
              [](const InjectedHit& a, const InjectedHit& b) { return a.key < b.key; });

    // Index minute bars per exchange: 09:30-11:30 and 13:00-15:00 inclusive,
    // log-level random walk chained across days.
    for (int e = 0; e < 2; ++e) {
        IndexSeries series;
        series.exchange = e == 0 ? Exchange::SHSE : Exchange::SZSE;
        double log_level = std::log(e == 0 ? 3000.0 : 9000.0);
        for (int day = 0; day < cfg.n_days; ++day) {
            Rng rng(substream(cfg.seed, detail::kTagIndex, static_cast<std::uint64_t>(e),
                              static_cast<std::uint64_t>(day)));
            IndexDay idx_day;
            idx_day.date = dates[static_cast<std::size_t>(day)];
            auto emit_range = [&](TimeOfDay from, TimeOfDay to) {
                for (TimeOfDay tm = from; tm <= to; tm += 60) {
                    idx_day.bars.push_back(IndexBar{tm, std::exp(log_level)});
                    log_level += rng.normal(0.0, cfg.index_vol);
                }
            };
            emit_range(kSessionOpen, kMorningClose);
            emit_range(kAfternoonOpen, kSessionClose);
            series.days.push_back(std::move(idx_day));
        }
        out.index.push_back(std::move(series));
    }
    return out;
}

}  // namespace limitlens
