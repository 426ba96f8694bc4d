#include "liqguard/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace liqguard::ingest {

namespace {

const char* kExpectedHeader =
    "timestamp,user_id,event_type,asset,amount,amount_usd,price_usd,"
    "liq_debt_repaid_usd,liq_collateral_seized_usd";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_timestamp(const std::string& s, Timestamp& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) return false;
    out = static_cast<Timestamp>(v);
    return true;
}

}  // namespace

void EventLog::rebuild_index() {
    by_user.clear();
    liquidation_times.clear();
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_user[records[i].user_id].push_back(i);
        if (records[i].event_type == EventType::liquidation)
            liquidation_times.push_back(records[i].timestamp);
    }
    std::sort(liquidation_times.begin(), liquidation_times.end());
}

std::vector<TxRecord> EventLog::user_events(const std::string& user_id) const {
    std::vector<TxRecord> out;
    auto it = by_user.find(user_id);
    if (it == by_user.end()) return out;
    out.reserve(it->second.size());
    for (std::size_t i : it->second) out.push_back(records[i]);
    return out;
}

std::size_t EventLog::market_liquidations_between(Timestamp after, Timestamp upto) const {
    auto lo = std::upper_bound(liquidation_times.begin(), liquidation_times.end(), after);
    auto hi = std::upper_bound(liquidation_times.begin(), liquidation_times.end(), upto);
    return static_cast<std::size_t>(hi - lo);
}

EventLog log_from_records(std::vector<TxRecord> records) {
    EventLog log;
    log.records = std::move(records);
    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const TxRecord& a, const TxRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    log.rebuild_index();
    return log;
}

std::pair<EventLog, ParseReport> parse_transactions(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open transactions file: " + path);

    ParseReport report;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) fail(ErrorKind::data, "empty transactions file: " + path);
    ++line_no;
    {
        std::string header = line;
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header != kExpectedHeader)
            fail(ErrorKind::data, "unexpected CSV header in " + path);
    }

    std::vector<TxRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv(line);
        auto row_error = [&](const std::string& reason) {
            report.errors.push_back({line_no, reason});
        };
        if (fields.size() != 9) {
            row_error("expected 9 fields, got " + std::to_string(fields.size()));
            continue;
        }

        TxRecord rec;
        if (!parse_timestamp(fields[0], rec.timestamp)) {
            row_error("malformed timestamp");
            continue;
        }
        rec.user_id = fields[1];
        if (rec.user_id.empty()) {
            row_error("empty user_id");
            continue;
        }
        auto etype = event_type_from(fields[2]);
        if (!etype) {
            row_error("unknown event type: " + fields[2]);
            continue;
        }
        rec.event_type = *etype;
        rec.asset = fields[3];
        if (rec.asset.empty()) {
            row_error("empty asset");
            continue;
        }
        try {
            rec.amount = Amount::parse(fields[4]);
        } catch (const Error&) {
            row_error("malformed amount");
            continue;
        }
        if (rec.amount.is_negative()) {
            row_error("negative amount");
            continue;
        }
        if (!parse_double(fields[5], rec.amount_usd) || rec.amount_usd < 0.0) {
            row_error("malformed amount_usd");
            continue;
        }
        if (!parse_double(fields[6], rec.price_usd) || rec.price_usd <= 0.0) {
            row_error("malformed price_usd");
            continue;
        }
        if (rec.event_type == EventType::liquidation) {
            double repaid = 0.0, seized = 0.0;
            if (!parse_double(fields[7], repaid) || !parse_double(fields[8], seized)) {
                row_error("liquidation row missing liq_* fields");
                continue;
            }
            rec.liq_debt_repaid_usd = repaid;
            rec.liq_collateral_seized_usd = seized;
        } else {
            double v = 0.0;
            if (parse_double(fields[7], v)) rec.liq_debt_repaid_usd = v;
            if (parse_double(fields[8], v)) rec.liq_collateral_seized_usd = v;
        }

        // amount_usd should agree with amount * price within 0.1%.
        double implied = rec.amount.to_double() * rec.price_usd;
        double scale = std::max({1e-12, std::abs(implied), std::abs(rec.amount_usd)});
        if (std::abs(implied - rec.amount_usd) / scale > 1e-3) ++report.warnings;

        records.push_back(std::move(rec));
    }

    // Count out-of-order rows before sorting.
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].timestamp < records[i - 1].timestamp) ++report.warnings;
    }

    report.rows = records.size();
    return {log_from_records(std::move(records)), report};
}

PriceHistoryResult build_price_history(const EventLog& log) {
    if (log.empty()) fail(ErrorKind::data, "cannot build price history from an empty log");

    PriceHistoryResult out;
    // records are globally time-ordered, so per-asset series come out sorted.
    for (const auto& rec : log.records) {
        if (rec.price_usd <= 0.0) continue;
        auto& series = out.oracle.series[rec.asset];
        if (!series.empty() && series.back().first == rec.timestamp) {
            if (series.back().second != rec.price_usd) {
                series.back().second = rec.price_usd;  // last seen wins
                ++out.conflicts;
            }
            continue;  // exact duplicate or resolved conflict
        }
        series.emplace_back(rec.timestamp, rec.price_usd);
    }

    for (auto it = out.oracle.series.begin(); it != out.oracle.series.end();) {
        if (it->second.empty()) {
            out.excluded_assets.push_back(it->first);
            it = out.oracle.series.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

std::map<std::string, Amount> infer_wallet_balances(const std::vector<TxRecord>& user_events,
                                                    const Amount& safety_factor) {
    if (safety_factor < Amount::from_int(1))
        fail(ErrorKind::domain, "safety factor must be >= 1");

    std::map<std::string, Amount> running;   // current wallet delta per asset
    std::map<std::string, Amount> min_seen;  // most negative running balance

    for (const auto& rec : user_events) {
        switch (rec.event_type) {
            case EventType::deposit:
            case EventType::repay:
                running[rec.asset] -= rec.amount;
                break;
            case EventType::withdraw:
            case EventType::borrow:
                running[rec.asset] += rec.amount;
                break;
            case EventType::liquidation:
                continue;  // settled by the liquidator, not the wallet
        }
        auto& lo = min_seen[rec.asset];
        if (running[rec.asset] < lo) lo = running[rec.asset];
    }

    std::map<std::string, Amount> out;
    for (const auto& [asset, lo] : min_seen) {
        Amount required = lo.is_negative() ? -lo : Amount{};
        // Round up so the scaled balance never undershoots the requirement.
        out[asset] = required.mul(safety_factor, Amount::Round::up);
    }
    return out;
}

}  // namespace liqguard::ingest
