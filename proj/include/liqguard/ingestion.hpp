#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liqguard/decimal.hpp"
#include "liqguard/events.hpp"
#include "liqguard/lending_core.hpp"

// Transaction-log ingestion: CSV parsing with per-row diagnostics, global
// price-history reconstruction, and external wallet balance inference.
namespace liqguard::ingest {

struct TxRecord {
    Timestamp timestamp = 0;
    std::string user_id;
    EventType event_type = EventType::deposit;
    std::string asset;
    Amount amount;           // native units
    double amount_usd = 0.0;
    double price_usd = 0.0;  // USD per native unit
    std::optional<double> liq_debt_repaid_usd;
    std::optional<double> liq_collateral_seized_usd;
};

struct RowError {
    std::size_t line = 0;
    std::string reason;
};

struct ParseReport {
    std::size_t rows = 0;       // valid rows accepted
    std::vector<RowError> errors;
    std::size_t warnings = 0;   // out-of-order rows + USD/price mismatches
    std::size_t conflicts = 0;  // same-timestamp price conflicts (price history)
};

struct EventLog {
    std::vector<TxRecord> records;  // sorted by timestamp, ties keep input order
    std::map<std::string, std::vector<std::size_t>> by_user;
    std::vector<Timestamp> liquidation_times;  // sorted, across all users

    void rebuild_index();
    std::vector<TxRecord> user_events(const std::string& user_id) const;
    std::size_t market_liquidations_between(Timestamp after, Timestamp upto) const;
    bool empty() const { return records.empty(); }
};

// Stable-sorts the records by timestamp and builds the indexes. Test helper
// and programmatic construction path.
EventLog log_from_records(std::vector<TxRecord> records);

// Parses the transaction CSV (header required, columns named exactly as the
// TxRecord fields). Malformed rows are collected as per-line errors; rows out
// of timestamp order are sorted and counted as warnings.
std::pair<EventLog, ParseReport> parse_transactions(const std::string& path);

struct PriceHistoryResult {
    lending::PriceOracle oracle;
    std::size_t conflicts = 0;  // same-timestamp differing prices (last wins)
    std::vector<std::string> excluded_assets;
};

// Deduplicated global (timestamp, price) series per asset across all users,
// so every per-user simulation sees the identical market state.
PriceHistoryResult build_price_history(const EventLog& log);

// Minimum initial wallet balances that make the event sequence feasible,
// scaled by the safety factor (>= 1). Chronological scan per asset:
// deposit/repay consume wallet funds, withdraw/borrow add them, liquidation
// rows never touch the wallet.
std::map<std::string, Amount> infer_wallet_balances(const std::vector<TxRecord>& user_events,
                                                    const Amount& safety_factor);

}  // namespace liqguard::ingest
