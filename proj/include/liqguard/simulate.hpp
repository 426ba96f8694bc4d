#pragma once

#include "liqguard/profile.hpp"

// Per-user simulation state machine shared by the agent and the replay
// harness: reconstructs positions from history and advances interest
// indexes, applying recorded transactions along the way.
namespace liqguard::sim {

struct SimState {
    lending::UserPosition position;
    lending::WalletState wallet;
    std::map<std::string, lending::ReserveState> reserves;
    // Per-asset index values at the position's last sync.
    std::map<std::string, double> borrow_index_snap;
    std::map<std::string, double> liquidity_index_snap;
    Timestamp now = 0;
    Timestamp last_interaction = 0;
};

// Accrues all reserves to t and grows position balances by the index ratios.
void advance_to(SimState& s, const MarketContext& market, Timestamp t);

// Applies one recorded transaction at s.now. Liquidation rows are applied as
// recorded (USD amounts against the largest balances) only when
// apply_liquidation_rows is set; user actions go through the protocol rules.
lending::ActionOutcome apply_tx(SimState& s, const MarketContext& market,
                                const ingest::TxRecord& tx, bool apply_liquidation_rows);

// Replays the profile's history from the inferred wallet balances up to
// t_rec (recorded liquidations applied).
SimState reconstruct_at(const UserProfile& profile, const MarketContext& market);

lending::SpotPrices spot_for_state(const SimState& s, const MarketContext& market);

}  // namespace liqguard::sim
