#pragma once

#include <span>
#include <string>
#include <vector>

#include "liqguard/events.hpp"
#include "liqguard/ingestion.hpp"

// Builds FinSurvival-style (index event -> outcome event) survival records
// from the event log, including self-transitions and liquidation-as-index,
// plus the fixed-order feature vectors they carry.
namespace liqguard::surv {

struct EventPairTask {
    EventType index_event = EventType::deposit;
    EventType outcome_event = EventType::borrow;

    std::string name() const;  // "<index>:<outcome>"
};

EventPairTask task_from_name(const std::string& name);

struct SurvivalRecord {
    std::string user_id;
    Timestamp index_time = 0;
    double duration_days = 0.0;
    int event = 0;  // 1 = outcome observed, 0 = censored at window end
    std::vector<double> features;
};

struct FeatureParams {
    double days_since_cap = 365.0;  // cap for "days since last <event>"
};

// Names of the feature vector entries, in vector order.
const std::vector<std::string>& feature_names();

void write_feature_manifest(const std::string& path);

// Feature vector at time t for the transaction `current_tx`. `user_history`
// holds the user's earlier events (timestamps <= t, excluding current_tx);
// `market` supplies market-wide aggregates. Never looks past t.
std::vector<double> build_features(std::span<const ingest::TxRecord> user_history,
                                   const ingest::EventLog& market, Timestamp t,
                                   const ingest::TxRecord& current_tx,
                                   const FeatureParams& params = {});

// One record per occurrence of the index event strictly before window_end;
// duration runs to the user's next outcome event strictly after the index
// time, else censored at window_end. Same-timestamp outcomes are skipped as
// degenerate (durations must be positive).
std::vector<SurvivalRecord> extract_pairs(const ingest::EventLog& log,
                                          const EventPairTask& task, Timestamp window_end,
                                          const FeatureParams& params = {});

void write_records_csv(const std::string& path, const std::vector<SurvivalRecord>& records);

}  // namespace liqguard::surv
