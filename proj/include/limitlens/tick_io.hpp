#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "limitlens/format.hpp"
#include "limitlens/marketdata.hpp"
#include "limitlens/time.hpp"

namespace limitlens {

// Hard parse failure: malformed rows abort with the offending location.
// Semantic invariant violations (crossed book etc.) do not throw; they are
// counted per category in the ValidationReport and the row is skipped.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

  private:
    std::string file_;
    std::size_t line_;
};

struct ValidationReport {
    std::uint64_t rows_total = 0;
    std::uint64_t rows_accepted = 0;
    std::map<std::string, std::uint64_t> rejected;      // category -> count
    std::vector<std::string> flagged_sessions;          // e.g. unsorted timestamps

    std::uint64_t rejected_total() const {
        std::uint64_t n = 0;
        for (const auto& [_, c] : rejected) n += c;
        return n;
    }
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline std::int64_t parse_volume(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty volume");
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 0)
        throw std::invalid_argument("malformed volume: " + std::string(s));
    return v;
}

inline double parse_level_value(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty level");
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::invalid_argument("malformed level: " + std::string(s));
    return v;
}

// Book side from 10 alternating price/volume fields; absent levels are fully
// empty pairs and must trail the populated ones.
inline BookSide parse_book_side(const std::vector<std::string_view>& f, std::size_t base) {
    BookSide side;
    bool ended = false;
    for (int j = 0; j < kBookDepth; ++j) {
        std::string_view ps = f[base + 2 * static_cast<std::size_t>(j)];
        std::string_view vs = f[base + 2 * static_cast<std::size_t>(j) + 1];
        if (ps.empty() != vs.empty())
            throw std::invalid_argument("book level has price xor volume");
        if (ps.empty()) {
            ended = true;
            continue;
        }
        if (ended) throw std::invalid_argument("book level after a gap");
        side.level[static_cast<std::size_t>(j)] = {price_to_ticks(ps), parse_volume(vs)};
        ++side.count;
    }
    return side;
}

// Returns the rejection category for a parsed tick, or nullptr if it is valid.
inline const char* tick_reject_reason(const TradeTick& t) {
    if (t.bid.count > 0 && t.ask.count > 0 && t.best_bid() >= t.best_ask()) return "crossed_book";
    for (int j = 1; j < t.bid.count; ++j)
        if (t.bid.level[static_cast<std::size_t>(j)].price >=
            t.bid.level[static_cast<std::size_t>(j - 1)].price)
            return "level_order";
    for (int j = 1; j < t.ask.count; ++j)
        if (t.ask.level[static_cast<std::size_t>(j)].price <=
            t.ask.level[static_cast<std::size_t>(j - 1)].price)
            return "level_order";
    for (int j = 0; j < t.bid.count; ++j)
        if (t.bid.level[static_cast<std::size_t>(j)].volume <= 0) return "level_volume";
    for (int j = 0; j < t.ask.count; ++j)
        if (t.ask.level[static_cast<std::size_t>(j)].volume <= 0) return "level_volume";
    return nullptr;
}

}  // namespace detail

inline constexpr std::string_view kTickCsvHeader =
    "stock_id,exchange,date,time,price,volume,"
    "bid1,bidvol1,bid2,bidvol2,bid3,bidvol3,bid4,bidvol4,bid5,bidvol5,"
    "ask1,askvol1,ask2,askvol2,ask3,askvol3,ask4,askvol4,ask5,askvol5";
inline constexpr std::string_view kSessionCsvHeader = "stock_id,exchange,date,prev_close,stock_class";
inline constexpr std::string_view kIndexCsvHeader = "exchange,date,time,level";

// Parses a tick CSV into sessions grouped by (stock_id, exchange, date), each
// time-sorted. Rows violating book invariants are dropped and counted; rows
// that cannot be parsed at all raise ParseError. Sessions carry no metadata
// yet; prev_close / stock_class are attached from the session-metadata file.
inline std::vector<DailySession> parse_tick_file(std::istream& in, ValidationReport& report,
                                                 const std::string& filename = "<tick csv>") {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(filename, 1, "empty file (header required)");
    ++lineno;
    if (detail::strip_cr(line) != kTickCsvHeader)
        throw ParseError(filename, lineno, "unexpected header");

    std::map<SessionKey, std::vector<TradeTick>> by_key;
    std::map<SessionKey, bool> unsorted;

    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        ++report.rows_total;

        auto f = detail::split_csv(sv);
        if (f.size() != 26) throw ParseError(filename, lineno, "expected 26 fields");

        SessionKey key;
        TradeTick t;
        try {
            key.stock_id = std::string(f[0]);
            if (key.stock_id.empty()) throw std::invalid_argument("empty stock_id");
            key.exchange = parse_exchange(f[1]);
            key.date = parse_date(f[2]);
            t.time = parse_time_of_day(f[3]);
            t.price = price_to_ticks(f[4]);
            if (t.price < 0) throw std::invalid_argument("negative price");
            t.volume = detail::parse_volume(f[5]);
            t.bid = detail::parse_book_side(f, 6);
            t.ask = detail::parse_book_side(f, 16);
        } catch (const std::invalid_argument& e) {
            throw ParseError(filename, lineno, e.what());
        }

        if (const char* reason = detail::tick_reject_reason(t)) {
            ++report.rejected[reason];
            continue;
        }

        auto& ticks = by_key[key];
        if (!ticks.empty() && t.time < ticks.back().time) unsorted[key] = true;
        ticks.push_back(t);
        ++report.rows_accepted;
    }

    std::vector<DailySession> sessions;
    sessions.reserve(by_key.size());
    for (auto& [key, ticks] : by_key) {
        if (unsorted[key]) {
            std::stable_sort(ticks.begin(), ticks.end(),
                             [](const TradeTick& a, const TradeTick& b) { return a.time < b.time; });
            report.flagged_sessions.push_back(key.stock_id + "/" + to_string(key.exchange) + "/" +
                                              key.date.to_string() + ": unsorted timestamps");
        }
        DailySession s;
        s.key = key;
        s.ticks = std::move(ticks);
        sessions.push_back(std::move(s));
    }
    return sessions;
}

struct SessionMeta {
    Ticks prev_close = 0;
    StockClass stock_class = StockClass::Common;
};

// Session metadata keyed by (stock_id, exchange, date).
inline std::map<SessionKey, SessionMeta> parse_session_file(std::istream& in,
                                                            const std::string& filename = "<session csv>") {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(filename, 1, "empty file (header required)");
    ++lineno;
    if (detail::strip_cr(line) != kSessionCsvHeader)
        throw ParseError(filename, lineno, "unexpected header");

    std::map<SessionKey, SessionMeta> out;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto f = detail::split_csv(sv);
        if (f.size() != 5) throw ParseError(filename, lineno, "expected 5 fields");
        try {
            SessionKey key{std::string(f[0]), parse_exchange(f[1]), parse_date(f[2])};
            SessionMeta meta{price_to_ticks(f[3]), parse_stock_class(f[4])};
            if (meta.prev_close <= 0) throw std::invalid_argument("prev_close must be positive");
            if (!out.emplace(std::move(key), meta).second)
                throw std::invalid_argument("duplicate session metadata");
        } catch (const std::invalid_argument& e) {
            throw ParseError(filename, lineno, e.what());
        }
    }
    return out;
}

// Joins parsed ticks with their session metadata. Sessions lacking metadata
// are dropped and counted under "missing_metadata" (one count per session).
inline std::vector<DailySession> attach_metadata(std::vector<DailySession> sessions,
                                                 const std::map<SessionKey, SessionMeta>& meta,
                                                 ValidationReport& report) {
    std::vector<DailySession> out;
    out.reserve(sessions.size());
    for (auto& s : sessions) {
        auto it = meta.find(s.key);
        if (it == meta.end()) {
            ++report.rejected["missing_metadata"];
            continue;
        }
        s.prev_close = it->second.prev_close;
        s.stock_class = it->second.stock_class;
        out.push_back(std::move(s));
    }
    return out;
}

// Parses the index minute-bar CSV. One series per exchange present in the
// file; within an exchange, (date, time) must be strictly increasing.
inline std::vector<IndexSeries> parse_index_file(std::istream& in,
                                                 const std::string& filename = "<index csv>") {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(filename, 1, "empty file (header required)");
    ++lineno;
    if (detail::strip_cr(line) != kIndexCsvHeader)
        throw ParseError(filename, lineno, "unexpected header");

    std::map<Exchange, IndexSeries> by_exch;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto f = detail::split_csv(sv);
        if (f.size() != 4) throw ParseError(filename, lineno, "expected 4 fields");

        Exchange exch;
        Date date;
        TimeOfDay time;
        double level;
        try {
            exch = parse_exchange(f[0]);
            date = parse_date(f[1]);
            time = parse_time_of_day(f[2]);
            level = detail::parse_level_value(f[3]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(filename, lineno, e.what());
        }
        if (!(level > 0.0))
            throw ParseError(filename, lineno, "non-positive index level at " + date.to_string() +
                                                   " " + format_time_of_day(time));

        auto& series = by_exch[exch];
        series.exchange = exch;
        if (!series.days.empty()) {
            const IndexDay& last = series.days.back();
            if (date < last.date ||
                (date == last.date && !last.bars.empty() && time <= last.bars.back().time)) {
                std::string what = (date == last.date && time == last.bars.back().time)
                                       ? "duplicate minute at "
                                       : "unsorted index bars at ";
                throw ParseError(filename, lineno, what + date.to_string() + " " + format_time_of_day(time));
            }
        }
        if (series.days.empty() || !(series.days.back().date == date))
            series.days.push_back(IndexDay{date, {}});
        series.days.back().bars.push_back(IndexBar{time, level});
    }

    std::vector<IndexSeries> out;
    out.reserve(by_exch.size());
    for (auto& [_, series] : by_exch) out.push_back(std::move(series));
    return out;
}

// ===== canonical serialization =====

namespace detail {

inline void append_book_side(std::string& row, const BookSide& side) {
    for (int j = 0; j < kBookDepth; ++j) {
        row += ',';
        if (j < side.count) {
            row += ticks_to_price_string(side.level[static_cast<std::size_t>(j)].price);
            row += ',';
            row += std::to_string(side.level[static_cast<std::size_t>(j)].volume);
        } else {
            row += ',';
        }
    }
}

}  // namespace detail

inline void write_tick_csv(std::ostream& out, const std::vector<DailySession>& sessions) {
    out << kTickCsvHeader << '\n';
    for (const auto& s : sessions) {
        for (const auto& t : s.ticks) {
            std::string row;
            row += s.key.stock_id;
            row += ',';
            row += to_string(s.key.exchange);
            row += ',';
            row += s.key.date.to_string();
            row += ',';
            row += format_time_of_day(t.time);
            row += ',';
            row += ticks_to_price_string(t.price);
            row += ',';
            row += std::to_string(t.volume);
            detail::append_book_side(row, t.bid);
            detail::append_book_side(row, t.ask);
            out << row << '\n';
        }
    }
}

inline void write_session_csv(std::ostream& out, const std::vector<DailySession>& sessions) {
    out << kSessionCsvHeader << '\n';
    for (const auto& s : sessions) {
        out << s.key.stock_id << ',' << to_string(s.key.exchange) << ',' << s.key.date.to_string()
            << ',' << ticks_to_price_string(s.prev_close) << ',' << to_string(s.stock_class) << '\n';
    }
}

inline void write_index_csv(std::ostream& out, const std::vector<IndexSeries>& series) {
    out << kIndexCsvHeader << '\n';
    for (const auto& s : series) {
        for (const auto& day : s.days) {
            for (const auto& bar : day.bars) {
                out << to_string(s.exchange) << ',' << day.date.to_string() << ','
                    << format_time_of_day(bar.time) << ',' << format_double(bar.level) << '\n';
            }
        }
    }
}

// ===== file-path convenience wrappers =====

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

}  // namespace detail

inline std::vector<DailySession> load_sessions(const std::string& tick_path,
                                               const std::string& session_path,
                                               ValidationReport& report) {
    auto tin = detail::open_input(tick_path);
    auto sessions = parse_tick_file(tin, report, tick_path);
    auto min = detail::open_input(session_path);
    auto meta = parse_session_file(min, session_path);
    return attach_metadata(std::move(sessions), meta, report);
}

inline std::vector<IndexSeries> load_index(const std::string& index_path) {
    auto in = detail::open_input(index_path);
    return parse_index_file(in, index_path);
}

}  // namespace limitlens
