#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "limitlens/features.hpp"
#include "limitlens/format.hpp"
#include "limitlens/glm.hpp"
#include "limitlens/limits.hpp"
#include "limitlens/marketdata.hpp"
#include "limitlens/parallel.hpp"
#include "limitlens/stats.hpp"

namespace limitlens {

inline constexpr std::string_view kVersion = "0.1.0";

using ordered_json = nlohmann::ordered_json;

struct StudyConfig {
    double alpha = 0.05;
    std::vector<int> m_grid_common = {50, 60, 70, 80, 90};  // permille
    std::vector<int> m_grid_st = {25, 30, 35, 40, 45};
    int prehit_window_common = 16;
    int prehit_window_st = 20;
    std::size_t min_rows = 30;
    RoundingMode rounding = RoundingMode::HalfAwayFromZero;
    int workers = 0;  // 0 = all cores
    FeatureOptions feature_opts{};
    double hist_bin_width = 0.005;
    // model filters (empty = run everything)
    std::optional<Variant> only_variant;
    std::optional<int> only_m;  // permille, conditional models
    std::optional<Link> only_link;

    const std::vector<int>& m_grid(StockClass c) const {
        return c == StockClass::Common ? m_grid_common : m_grid_st;
    }
    int prehit_window(StockClass c) const {
        return c == StockClass::Common ? prehit_window_common : prehit_window_st;
    }
};

struct EventRecord {
    LimitHitEvent ev;
    std::size_t prehit_trades = 0;
};

// One fit attempt (or skip) for one event and model; self-contained so
// aggregation can also run from a parsed fits.jsonl without the sessions.
struct FitRecord {
    std::string stock_id;
    Exchange exchange = Exchange::SHSE;
    Date date;
    StockClass stock_class = StockClass::Common;
    MarketState market_state = MarketState::Bullish;
    Direction direction = Direction::Up;
    Variant variant = Variant::Base;
    int m_permille = 0;
    Link link = Link::Logit;
    std::string status;  // "fit" | "failed" | "skipped"
    std::string reason;
    std::size_t n_rows = 0;
    bool dummy_dropped = false;
    std::vector<std::string> columns;
    GlmFit fit;  // populated unless status == "skipped"
};

struct SuboptRow {
    std::string stock_id;
    Exchange exchange = Exchange::SHSE;
    Date date;
    StockClass stock_class = StockClass::Common;
    MarketState market_state = MarketState::Bullish;
    Direction direction = Direction::Up;
    std::size_t n_trades = 0;  // pre-hit trades, hit included
    double w_ratio = 0.0;      // trade-count ratio
    double wt_ratio = 0.0;     // volume ratio
};

struct StudyResult {
    std::vector<EventRecord> events;  // session pointers stay valid while inputs live
    std::vector<FitRecord> fits;
    std::vector<SuboptRow> suboptimal;
    std::vector<double> delta_accuracy;  // per paired base logit/probit event
    std::uint64_t unpaired_events = 0;   // twins planned but not both converged
    std::uint64_t n_opening_hits = 0;
    RowDropCounts drops;
    std::uint64_t rows_total = 0;  // usable regression rows across events
};

// ===== detection =====

inline std::vector<EventRecord> detect_events(const std::vector<DailySession>& sessions,
                                              const MarketCalendar& calendar, RoundingMode rounding) {
    std::vector<EventRecord> out;
    for (const auto& s : sessions) {
        const LimitPrices lim = compute_limits(s.prev_close, limit_rate_percent(s.stock_class), rounding);
        if (auto hit = detect_first_hit(s, lim, calendar)) {
            out.push_back(EventRecord{*hit, hit->prehit_trade_count()});
        }
    }
    std::sort(out.begin(), out.end(), [](const EventRecord& a, const EventRecord& b) {
        return a.ev.session->key < b.ev.session->key;
    });
    return out;
}

// ===== per-event computations =====

namespace detail {

struct PlannedModel {
    Variant variant = Variant::Base;
    int m_permille = 0;
    Link link = Link::Logit;
};

inline std::vector<PlannedModel> plan_models(StockClass cls, const StudyConfig& cfg) {
    std::vector<PlannedModel> plan;
    auto add = [&](Variant v, int m, Link l) {
        if (cfg.only_variant && *cfg.only_variant != v) return;
        if (cfg.only_link && *cfg.only_link != l) return;
        if (v == Variant::Conditional && cfg.only_m && *cfg.only_m != m) return;
        plan.push_back(PlannedModel{v, m, l});
    };
    add(Variant::Base, 0, Link::Logit);
    add(Variant::Base, 0, Link::Probit);
    add(Variant::Suboptimal, 0, Link::Logit);
    for (int m : cfg.m_grid(cls)) add(Variant::Conditional, m, Link::Logit);
    return plan;
}

inline const IndexSeries* series_for(const std::vector<IndexSeries>& index, Exchange e) {
    for (const auto& s : index)
        if (s.exchange == e) return &s;
    return nullptr;
}

// Mean over a sorted copy: identical result under any input permutation.
inline double sorted_mean(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

// Sub-optimal trade ratios over the pre-hit slice (hit trade included);
// trades without a prevailing two-sided quote count as optimal.
inline SuboptRow suboptimal_ratios(const EventRecord& er) {
    const auto& ev = er.ev;
    const auto trades = detail::collect_prehit_trades(ev);
    const auto& ticks = ev.session->ticks;
    std::uint64_t n_sub = 0;
    std::int64_t vol_total = 0, vol_sub = 0;
    for (const auto& tr : trades) {
        const TradeTick& t = ticks[tr.tick_index];
        int is = 0;
        if (tr.has_quote())
            is = suboptimal_flag(t.price, tr.ask->level[0].price, tr.bid->level[0].price);
        n_sub += static_cast<std::uint64_t>(is);
        vol_total += t.volume;
        vol_sub += is ? t.volume : 0;
    }
    SuboptRow row;
    row.stock_id = ev.session->key.stock_id;
    row.exchange = ev.session->key.exchange;
    row.date = ev.session->key.date;
    row.stock_class = ev.session->stock_class;
    row.market_state = ev.market_state;
    row.direction = ev.direction;
    row.n_trades = trades.size();
    row.w_ratio = trades.empty() ? 0.0
                                 : static_cast<double>(n_sub) / static_cast<double>(trades.size());
    row.wt_ratio = vol_total == 0 ? 0.0
                                  : static_cast<double>(vol_sub) / static_cast<double>(vol_total);
    return row;
}

// ===== the study =====

inline StudyResult run_study(const std::vector<DailySession>& sessions,
                             const std::vector<IndexSeries>& index, const MarketCalendar& calendar,
                             const StudyConfig& cfg) {
    StudyResult res;
    res.events = detect_events(sessions, calendar, cfg.rounding);

    struct Slot {
        std::vector<FitRecord> fits;
        std::optional<SuboptRow> subopt;
        std::optional<double> delta;
        bool unpaired = false;
        RowDropCounts drops;
        std::uint64_t rows = 0;
    };
    std::vector<Slot> slots(res.events.size());

    parallel_for(res.events.size(), cfg.workers, [&](std::size_t i) {
        const EventRecord& er = res.events[i];
        const auto& ev = er.ev;
        Slot& slot = slots[i];

        FitRecord proto;
        proto.stock_id = ev.session->key.stock_id;
        proto.exchange = ev.session->key.exchange;
        proto.date = ev.session->key.date;
        proto.stock_class = ev.session->stock_class;
        proto.market_state = ev.market_state;
        proto.direction = ev.direction;

        const auto plan = detail::plan_models(ev.session->stock_class, cfg);

        if (ev.opening_hit) {
            for (const auto& pm : plan) {
                FitRecord rec = proto;
                rec.variant = pm.variant;
                rec.m_permille = pm.m_permille;
                rec.link = pm.link;
                rec.status = "skipped";
                rec.reason = "opening_hit";
                slot.fits.push_back(std::move(rec));
            }
            return;
        }

        slot.subopt = suboptimal_ratios(er);

        const IndexSeries* series = detail::series_for(index, ev.session->key.exchange);
        static const IndexSeries kEmptySeries{};
        const FeatureTable table =
            build_feature_table(ev, series ? *series : kEmptySeries, cfg.feature_opts);
        slot.drops = table.drops;
        slot.rows = table.rows.size();

        // Matrices are shared across links of the same (variant, m).
        std::map<std::pair<Variant, int>, FeatureMatrix> matrices;
        const GlmFit* base_logit = nullptr;
        const GlmFit* base_probit = nullptr;
        bool base_logit_planned = false, base_probit_planned = false;

        for (const auto& pm : plan) {
            FitRecord rec = proto;
            rec.variant = pm.variant;
            rec.m_permille = pm.m_permille;
            rec.link = pm.link;
            rec.n_rows = table.rows.size();

            if (table.rows.size() < cfg.min_rows) {
                rec.status = "skipped";
                rec.reason = "too_few_rows";
                slot.fits.push_back(std::move(rec));
                continue;
            }

            auto key = std::make_pair(pm.variant, pm.m_permille);
            auto it = matrices.find(key);
            if (it == matrices.end())
                it = matrices.emplace(key, build_matrix(table, ev, pm.variant, pm.m_permille)).first;
            const FeatureMatrix& mat = it->second;
            rec.dummy_dropped = mat.dummy_dropped;
            rec.columns = mat.columns;

            GlmOptions opts;
            opts.alpha = cfg.alpha;
            try {
                rec.fit = fit_glm(pm.link, mat.n_rows(), mat.n_cols(), mat.x.data(), mat.y.data(), opts);
                rec.status = rec.fit.converged ? "fit" : "failed";
                rec.reason = rec.fit.reason;
            } catch (const std::invalid_argument& e) {
                rec.status = "failed";
                rec.reason = e.what();
            }
            slot.fits.push_back(std::move(rec));

            const FitRecord& stored = slot.fits.back();
            if (pm.variant == Variant::Base && pm.link == Link::Logit) {
                base_logit_planned = true;
                if (stored.status == "fit") base_logit = &stored.fit;
            }
            if (pm.variant == Variant::Base && pm.link == Link::Probit) {
                base_probit_planned = true;
                if (stored.status == "fit") base_probit = &stored.fit;
            }
        }

        if (base_logit_planned && base_probit_planned) {
            if (base_logit && base_probit)
                slot.delta = base_logit->accuracy - base_probit->accuracy;
            else
                slot.unpaired = true;
        }
    });

    for (std::size_t i = 0; i < slots.size(); ++i) {
        Slot& slot = slots[i];
        if (res.events[i].ev.opening_hit) ++res.n_opening_hits;
        for (auto& rec : slot.fits) res.fits.push_back(std::move(rec));
        if (slot.subopt) res.suboptimal.push_back(*slot.subopt);
        if (slot.delta) res.delta_accuracy.push_back(*slot.delta);
        if (slot.unpaired) ++res.unpaired_events;
        res.drops.missing_quote += slot.drops.missing_quote;
        res.drops.missing_index += slot.drops.missing_index;
        res.rows_total += slot.rows;
    }
    return res;
}

// ===== aggregation =====

struct AggRow {
    StockClass stock_class = StockClass::Common;
    MarketState market_state = MarketState::Bullish;
    Direction direction = Direction::Up;
    Link link = Link::Logit;
    int m_permille = 0;
    std::string coef;
    std::uint64_t n_events = 0;  // fit records in the cell (one per event)
    std::uint64_t n_converged = 0;
    std::uint64_t n_failed = 0;
    std::uint64_t n_skipped = 0;
    std::uint64_t n_pos = 0, n_neg = 0, n_zero = 0, n_na = 0;
    bool has_stats = false;
    double mean = 0.0, median = 0.0;
    bool has_odds = false;
    double odds_of_mean = 0.0;  // odds_effect(mean, 0.001)
};

// Canonical column list per variant (interaction included for the two
// extended models, whether or not a given event kept it).
inline std::vector<std::string> variant_columns(Variant v) {
    std::vector<std::string> cols = {"intercept", "dt",     "dirvol_l1", "dirvol_l2",
                                     "dirvol_l3", "yield_prev"};
    if (v == Variant::Suboptimal) cols.push_back("is_yield_prev");
    if (v == Variant::Conditional) cols.push_back("ir_yield_prev");
    cols.insert(cols.end(), {"mkt_l1", "mkt_l2", "mkt_l3", "spread_prev", "depth_prev"});
    return cols;
}

inline bool coef_gets_odds(const std::string& coef) {
    return coef == "yield_prev" || coef == "is_yield_prev" || coef == "ir_yield_prev" ||
           coef == "yield_plus_interaction";
}

inline std::vector<AggRow> aggregate(const std::vector<FitRecord>& fits, Variant variant) {
    const auto canonical = variant_columns(variant);
    using CellKey = std::tuple<StockClass, MarketState, Direction, Link, int>;
    struct Cell {
        std::uint64_t n_events = 0, n_converged = 0, n_failed = 0, n_skipped = 0;
        std::map<std::string, std::vector<double>> values;
        std::map<std::string, std::array<std::uint64_t, 3>> sig;  // +, -, 0
        std::map<std::string, std::uint64_t> na;
        std::vector<double> combo;  // beta5 + beta6 for conditional fits
        std::uint64_t combo_na = 0;
    };
    std::map<CellKey, Cell> cells;

    for (const auto& rec : fits) {
        if (rec.variant != variant) continue;
        Cell& cell = cells[{rec.stock_class, rec.market_state, rec.direction, rec.link, rec.m_permille}];
        ++cell.n_events;
        if (rec.status == "skipped") {
            ++cell.n_skipped;
            continue;
        }
        if (rec.status != "fit") {
            ++cell.n_failed;
            continue;
        }
        ++cell.n_converged;
        for (const auto& coef : canonical) {
            auto it = std::find(rec.columns.begin(), rec.columns.end(), coef);
            if (it == rec.columns.end()) {
                ++cell.na[coef];
                continue;
            }
            const auto j = static_cast<std::size_t>(it - rec.columns.begin());
            cell.values[coef].push_back(rec.fit.beta[j]);
            const char s = rec.fit.significance[j];
            ++cell.sig[coef][s == '+' ? 0 : (s == '-' ? 1 : 2)];
        }
        if (variant == Variant::Conditional) {
            auto yi = std::find(rec.columns.begin(), rec.columns.end(), "yield_prev");
            auto ii = std::find(rec.columns.begin(), rec.columns.end(), "ir_yield_prev");
            if (yi != rec.columns.end() && ii != rec.columns.end()) {
                cell.combo.push_back(rec.fit.beta[static_cast<std::size_t>(yi - rec.columns.begin())] +
                                     rec.fit.beta[static_cast<std::size_t>(ii - rec.columns.begin())]);
            } else {
                ++cell.combo_na;
            }
        }
    }

    std::vector<AggRow> rows;
    for (const auto& [key, cell] : cells) {
        auto emit = [&](const std::string& coef, const std::vector<double>* vals,
                        const std::array<std::uint64_t, 3>* sig, std::uint64_t na) {
            AggRow row;
            std::tie(row.stock_class, row.market_state, row.direction, row.link, row.m_permille) = key;
            row.coef = coef;
            row.n_events = cell.n_events;
            row.n_converged = cell.n_converged;
            row.n_failed = cell.n_failed;
            row.n_skipped = cell.n_skipped;
            row.n_na = na;
            if (sig) {
                row.n_pos = (*sig)[0];
                row.n_neg = (*sig)[1];
                row.n_zero = (*sig)[2];
            }
            if (vals && !vals->empty()) {
                row.has_stats = true;
                row.mean = detail::sorted_mean(*vals);
                row.median = median(*vals);
                if (coef_gets_odds(coef)) {
                    row.has_odds = true;
                    row.odds_of_mean = odds_effect(row.mean, 0.001);
                }
            }
            rows.push_back(std::move(row));
        };

        for (const auto& coef : canonical) {
            auto vi = cell.values.find(coef);
            auto si = cell.sig.find(coef);
            auto ni = cell.na.find(coef);
            emit(coef, vi != cell.values.end() ? &vi->second : nullptr,
                 si != cell.sig.end() ? &si->second : nullptr,
                 ni != cell.na.end() ? ni->second : 0);
        }
        if (variant == Variant::Conditional)
            emit("yield_plus_interaction", cell.combo.empty() ? nullptr : &cell.combo, nullptr,
                 cell.combo_na);
    }
    return rows;
}

// ===== pre-hit descriptive table =====

struct PrehitRow {
    StockClass stock_class = StockClass::Common;
    MarketState market_state = MarketState::Bullish;
    Direction direction = Direction::Up;
    int k = 0;  // 1 = trade immediately before the hit
    std::string quantity;
    std::uint64_t n = 0;
    double mean = 0.0;
    double median = 0.0;
};

inline std::vector<PrehitRow> prehit_summary(const StudyResult& res, const StudyConfig& cfg) {
    using Key = std::tuple<StockClass, MarketState, Direction, int, int>;  // last: quantity id
    static const char* kQuantities[] = {"V", "yield", "volatility", "spread", "depth"};
    std::map<Key, std::vector<double>> cells;

    for (const auto& er : res.events) {
        const auto& ev = er.ev;
        const auto trades = detail::collect_prehit_trades(ev);
        const auto& ticks = ev.session->ticks;
        const int window = cfg.prehit_window(ev.session->stock_class);
        const int levels = visible_levels(ev.session->key.date);
        // trades.back() is the hit; k counts backwards from it.
        const auto n_before = static_cast<int>(trades.size()) - 1;
        for (int k = 1; k <= std::min(window, n_before); ++k) {
            const auto j = static_cast<std::size_t>(n_before - k);
            const auto& tr = trades[j];
            const TradeTick& t = ticks[tr.tick_index];
            auto put = [&](int q, double v) {
                cells[{ev.session->stock_class, ev.market_state, ev.direction, k, q}].push_back(v);
            };
            put(0, log_size(t.volume));
            if (j >= 1) {
                const double y = yield_of(t.price, ticks[trades[j - 1].tick_index].price);
                put(1, y);
                put(2, std::abs(y));
            }
            if (tr.has_quote()) {
                put(3, spread_of(tr.ask->level[0].price, tr.bid->level[0].price));
                put(4, depth_of(*tr.bid, *tr.ask, ev.direction, levels));
            }
        }
    }

    std::vector<PrehitRow> rows;
    for (const auto& [key, vals] : cells) {
        PrehitRow row;
        int q = 0;
        std::tie(row.stock_class, row.market_state, row.direction, row.k, q) = key;
        row.quantity = kQuantities[q];
        row.n = vals.size();
        row.mean = detail::sorted_mean(vals);
        row.median = median(vals);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ===== delta-accuracy histogram =====

struct HistBin {
    std::int64_t index = 0;  // bin covers [index*w, (index+1)*w)
    std::uint64_t count = 0;
};

inline std::vector<HistBin> delta_histogram(const std::vector<double>& deltas, double width) {
    if (!(width > 0)) throw std::invalid_argument("histogram bin width must be positive");
    std::map<std::int64_t, std::uint64_t> bins;
    for (double d : deltas) ++bins[static_cast<std::int64_t>(std::floor(d / width))];
    std::vector<HistBin> out;
    out.reserve(bins.size());
    for (const auto& [k, c] : bins) out.push_back(HistBin{k, c});
    return out;
}

// ===== report writers =====

inline void write_events_csv(std::ostream& out, const StudyResult& res) {
    out << "stock_id,exchange,date,stock_class,prev_close,up_limit,down_limit,direction,"
           "market_state,opening_hit,hit_tick_index,hit_time,hit_price,prehit_trades\n";
    for (const auto& er : res.events) {
        const auto& ev = er.ev;
        const auto& s = *ev.session;
        out << s.key.stock_id << ',' << to_string(s.key.exchange) << ',' << s.key.date.to_string()
            << ',' << to_string(s.stock_class) << ',' << ticks_to_price_string(s.prev_close) << ','
            << ticks_to_price_string(ev.limits.up) << ',' << ticks_to_price_string(ev.limits.down)
            << ',' << to_string(ev.direction) << ',' << to_string(ev.market_state) << ','
            << (ev.opening_hit ? 1 : 0) << ',' << ev.hit_index << ','
            << format_time_of_day(ev.hit_time()) << ',' << ticks_to_price_string(ev.hit_price())
            << ',' << er.prehit_trades << '\n';
    }
}

inline ordered_json fit_to_json(const GlmFit& fit) {
    ordered_json j;
    j["link"] = to_string(fit.link);
    j["beta"] = fit.beta;
    j["se"] = fit.se;
    j["z"] = fit.z;
    std::vector<std::string> sig;
    sig.reserve(fit.significance.size());
    for (char c : fit.significance) sig.emplace_back(1, c);
    j["significance"] = sig;
    j["cov"] = fit.cov;
    j["loglik"] = fit.loglik;
    j["loglik_null"] = fit.loglik_null;
    j["rho2"] = fit.rho2;
    j["accuracy"] = fit.accuracy;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["reason"] = fit.reason;
    j["ridge_used"] = fit.ridge_used;
    if (std::isfinite(fit.condition_number))
        j["condition_number"] = fit.condition_number;
    else
        j["condition_number"] = "inf";
    return j;
}

inline void write_fits_jsonl(std::ostream& out, const std::vector<FitRecord>& fits) {
    for (const auto& rec : fits) {
        ordered_json j;
        j["stock_id"] = rec.stock_id;
        j["exchange"] = to_string(rec.exchange);
        j["date"] = rec.date.to_string();
        j["stock_class"] = to_string(rec.stock_class);
        j["market_state"] = to_string(rec.market_state);
        j["direction"] = to_string(rec.direction);
        j["variant"] = to_string(rec.variant);
        if (rec.variant == Variant::Conditional)
            j["m"] = m_label(rec.m_permille);
        else
            j["m"] = nullptr;
        j["link"] = to_string(rec.link);
        j["status"] = rec.status;
        j["reason"] = rec.reason;
        j["n_rows"] = rec.n_rows;
        j["dummy_dropped"] = rec.dummy_dropped;
        j["columns"] = rec.columns;
        if (rec.status == "skipped")
            j["fit"] = nullptr;
        else
            j["fit"] = fit_to_json(rec.fit);
        out << j.dump() << '\n';
    }
}

// Reads fits.jsonl back; only the fields aggregation and the robustness
// histogram need are restored.
inline std::vector<FitRecord> parse_fits_jsonl(std::istream& in) {
    std::vector<FitRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("fits.jsonl:" + std::to_string(lineno) + ": " + e.what());
        }
        FitRecord rec;
        rec.stock_id = j.at("stock_id").get<std::string>();
        rec.exchange = parse_exchange(j.at("exchange").get<std::string>());
        rec.date = parse_date(j.at("date").get<std::string>());
        rec.stock_class = parse_stock_class(j.at("stock_class").get<std::string>());
        rec.market_state = parse_market_state(j.at("market_state").get<std::string>());
        rec.direction = parse_direction(j.at("direction").get<std::string>());
        rec.variant = parse_variant(j.at("variant").get<std::string>());
        if (!j.at("m").is_null()) {
            const std::string label = j.at("m").get<std::string>();
            const auto dot = label.find('.');
            rec.m_permille = dot == std::string::npos
                                 ? std::stoi(label) * 10
                                 : std::stoi(label.substr(0, dot)) * 10 + (label[dot + 1] - '0');
        }
        rec.link = parse_link(j.at("link").get<std::string>());
        rec.status = j.at("status").get<std::string>();
        rec.reason = j.at("reason").get<std::string>();
        rec.n_rows = j.at("n_rows").get<std::size_t>();
        rec.dummy_dropped = j.at("dummy_dropped").get<bool>();
        rec.columns = j.at("columns").get<std::vector<std::string>>();
        if (!j.at("fit").is_null()) {
            const auto& f = j.at("fit");
            rec.fit.link = parse_link(f.at("link").get<std::string>());
            rec.fit.beta = f.at("beta").get<std::vector<double>>();
            rec.fit.se = f.at("se").get<std::vector<double>>();
            rec.fit.z = f.at("z").get<std::vector<double>>();
            rec.fit.significance.clear();
            for (const auto& s : f.at("significance")) rec.fit.significance.push_back(s.get<std::string>()[0]);
            rec.fit.cov = f.at("cov").get<std::vector<double>>();
            rec.fit.loglik = f.at("loglik").get<double>();
            rec.fit.loglik_null = f.at("loglik_null").get<double>();
            rec.fit.rho2 = f.at("rho2").get<double>();
            rec.fit.accuracy = f.at("accuracy").get<double>();
            rec.fit.converged = f.at("converged").get<bool>();
            rec.fit.iterations = f.at("iterations").get<int>();
            rec.fit.reason = f.at("reason").get<std::string>();
            rec.fit.ridge_used = f.at("ridge_used").get<bool>();
            rec.fit.condition_number = f.at("condition_number").is_string()
                                           ? std::numeric_limits<double>::infinity()
                                           : f.at("condition_number").get<double>();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggRow>& rows) {
    out << "stock_class,market_state,direction,link,m,coef,n_events,n_converged,n_failed,"
           "n_skipped,n_pos,n_neg,n_zero,n_na,mean,median,odds_of_mean\n";
    for (const auto& r : rows) {
        out << to_string(r.stock_class) << ',' << to_string(r.market_state) << ','
            << to_string(r.direction) << ',' << to_string(r.link) << ','
            << (r.m_permille > 0 ? m_label(r.m_permille) : "") << ',' << r.coef << ',' << r.n_events
            << ',' << r.n_converged << ',' << r.n_failed << ',' << r.n_skipped << ',' << r.n_pos
            << ',' << r.n_neg << ',' << r.n_zero << ',' << r.n_na << ','
            << (r.has_stats ? format_double(r.mean) : "") << ','
            << (r.has_stats ? format_double(r.median) : "") << ','
            << (r.has_odds ? format_double(r.odds_of_mean) : "") << '\n';
    }
}

inline void write_prehit_csv(std::ostream& out, const std::vector<PrehitRow>& rows) {
    out << "stock_class,market_state,direction,k,quantity,n,mean,median,display\n";
    for (const auto& r : rows) {
        out << to_string(r.stock_class) << ',' << to_string(r.market_state) << ','
            << to_string(r.direction) << ',' << r.k << ',' << r.quantity << ',' << r.n << ','
            << format_double(r.mean) << ',' << format_double(r.median) << ','
            << format_double(r.mean) << '(' << format_double(r.median) << ')' << '\n';
    }
}

inline void write_suboptimal_csv(std::ostream& out, const StudyResult& res) {
    out << "stock_id,exchange,date,stock_class,market_state,direction,n_trades,w_ratio,wt_ratio\n";
    for (const auto& r : res.suboptimal) {
        out << r.stock_id << ',' << to_string(r.exchange) << ',' << r.date.to_string() << ','
            << to_string(r.stock_class) << ',' << to_string(r.market_state) << ','
            << to_string(r.direction) << ',' << r.n_trades << ',' << format_double(r.w_ratio) << ','
            << format_double(r.wt_ratio) << '\n';
    }
}

inline void write_delta_hist_csv(std::ostream& out, const std::vector<double>& deltas, double width) {
    out << "bin_lo,bin_hi,count\n";
    for (const auto& bin : delta_histogram(deltas, width)) {
        out << format_double(static_cast<double>(bin.index) * width) << ','
            << format_double(static_cast<double>(bin.index + 1) * width) << ',' << bin.count << '\n';
    }
}

// Per-model tallies for the run manifest.
inline ordered_json fit_counts_json(const std::vector<FitRecord>& fits) {
    using Key = std::tuple<Variant, int, Link>;
    struct C {
        std::uint64_t attempted = 0, converged = 0, failed = 0, skipped = 0;
    };
    std::map<Key, C> counts;
    for (const auto& rec : fits) {
        C& c = counts[{rec.variant, rec.m_permille, rec.link}];
        ++c.attempted;
        if (rec.status == "fit") ++c.converged;
        if (rec.status == "failed") ++c.failed;
        if (rec.status == "skipped") ++c.skipped;
    }
    ordered_json out = ordered_json::array();
    for (const auto& [key, c] : counts) {
        ordered_json j;
        j["variant"] = to_string(std::get<0>(key));
        j["m"] = std::get<0>(key) == Variant::Conditional ? ordered_json(m_label(std::get<1>(key)))
                                                          : ordered_json(nullptr);
        j["link"] = to_string(std::get<2>(key));
        j["attempted"] = c.attempted;
        j["converged"] = c.converged;
        j["failed"] = c.failed;
        j["skipped"] = c.skipped;
        out.push_back(std::move(j));
    }
    return out;
}

inline ordered_json run_manifest_json(const StudyResult& res, std::size_t n_sessions,
                                      const ordered_json& config_echo, const ordered_json& inputs) {
    ordered_json m;
    m["tool"] = "limitlens";
    m["version"] = std::string(kVersion);
    m["config"] = config_echo;
    m["inputs"] = inputs;
    ordered_json c;
    c["sessions"] = n_sessions;
    c["events"] = res.events.size();
    c["opening_hits"] = res.n_opening_hits;
    c["regression_rows"] = res.rows_total;
    c["rows_dropped_missing_quote"] = res.drops.missing_quote;
    c["rows_dropped_missing_index"] = res.drops.missing_index;
    c["delta_accuracy_pairs"] = res.delta_accuracy.size();
    c["unpaired_events"] = res.unpaired_events;
    c["fits"] = fit_counts_json(res.fits);
    m["counts"] = c;
    return m;
}

}  // namespace limitlens
