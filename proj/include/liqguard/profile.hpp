#pragma once

#include <map>
#include <string>
#include <vector>

#include "liqguard/hazard_engine.hpp"
#include "liqguard/ingestion.hpp"
#include "liqguard/lending_core.hpp"
#include "liqguard/survival_data.hpp"

namespace liqguard {

// Shared market inputs for per-user simulation: reserve configs, the global
// price oracle, initial reserve states, and the full event log for
// market-level features.
struct MarketContext {
    lending::ReserveConfigMap configs;
    lending::PriceOracle oracle;
    std::map<std::string, lending::ReserveState> initial_reserves;
    const ingest::EventLog* market_log = nullptr;
    surv::FeatureParams feature_params;
};

// One evaluation checkpoint for one user: everything known at t_rec plus the
// recorded future used for replay.
struct UserProfile {
    std::string user_id;
    Timestamp t_rec = 0;
    EventType index_event = EventType::deposit;  // type of the checkpoint tx
    std::vector<ingest::TxRecord> history;       // user events <= t_rec, checkpoint last
    std::vector<ingest::TxRecord> future;        // user events > t_rec
    std::map<std::string, Amount> wallet0;       // inferred initial wallet balances
};

// Fitted engines for the five outcome events of one index event type.
using EngineMap = std::map<EventType, hazard::HazardEngine>;

}  // namespace liqguard
