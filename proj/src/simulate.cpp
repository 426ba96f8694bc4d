#include "liqguard/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace liqguard::sim {

namespace {

void sync_index_snaps(SimState& s) {
    for (const auto& [asset, rs] : s.reserves) {
        s.borrow_index_snap[asset] = rs.borrow_index;
        s.liquidity_index_snap[asset] = rs.liquidity_index;
    }
}

std::vector<std::string> position_assets(const lending::UserPosition& pos) {
    std::vector<std::string> assets;
    for (const auto& [a, v] : pos.collateral) assets.push_back(a);
    for (const auto& [a, v] : pos.debt)
        if (std::find(assets.begin(), assets.end(), a) == assets.end()) assets.push_back(a);
    return assets;
}

}  // namespace

void advance_to(SimState& s, const MarketContext& market, Timestamp t) {
    if (t < s.now) fail(ErrorKind::time_travel, "simulation time moved backwards");
    if (t == s.now) return;

    for (auto& [asset, rs] : s.reserves) {
        auto cfg = market.configs.find(asset);
        if (cfg == market.configs.end()) continue;
        lending::accrue(rs, cfg->second, t);
    }
    // Grow user balances by the index ratios since the last sync.
    for (auto& [asset, amt] : s.position.debt) {
        auto rs = s.reserves.find(asset);
        if (rs == s.reserves.end() || !amt.is_positive()) continue;
        double prev = s.borrow_index_snap.count(asset) ? s.borrow_index_snap[asset] : 1.0;
        if (prev > 0.0 && rs->second.borrow_index != prev)
            amt = Amount::from_double(amt.to_double() * rs->second.borrow_index / prev);
    }
    for (auto& [asset, amt] : s.position.collateral) {
        auto rs = s.reserves.find(asset);
        if (rs == s.reserves.end() || !amt.is_positive()) continue;
        double prev = s.liquidity_index_snap.count(asset) ? s.liquidity_index_snap[asset] : 1.0;
        if (prev > 0.0 && rs->second.liquidity_index != prev)
            amt = Amount::from_double(amt.to_double() * rs->second.liquidity_index / prev);
    }
    sync_index_snaps(s);
    s.now = t;
    s.position.last_update = t;
}

lending::SpotPrices spot_for_state(const SimState& s, const MarketContext& market) {
    return market.oracle.spot_at(s.now, position_assets(s.position));
}

lending::ActionOutcome apply_tx(SimState& s, const MarketContext& market,
                                const ingest::TxRecord& tx, bool apply_liquidation_rows) {
    if (tx.event_type == EventType::liquidation) {
        if (!apply_liquidation_rows) return {false, "recorded liquidation not applied"};
        // Settle the recorded USD amounts against the largest balances.
        double repaid = tx.liq_debt_repaid_usd.value_or(tx.amount_usd);
        double seized = tx.liq_collateral_seized_usd.value_or(0.0);
        auto reduce = [&](std::map<std::string, Amount>& side, double usd) {
            while (usd > lending::kUsdEps && !side.empty()) {
                auto best = side.begin();
                double best_usd = 0.0;
                for (auto it = side.begin(); it != side.end(); ++it) {
                    double v = it->second.to_double() *
                               market.oracle.price_at(it->first, s.now);
                    if (v > best_usd) {
                        best_usd = v;
                        best = it;
                    }
                }
                if (best_usd <= lending::kUsdEps) break;
                double px = market.oracle.price_at(best->first, s.now);
                Amount cut = min(best->second, Amount::from_double(usd / px));
                best->second -= cut;
                usd -= cut.to_double() * px;
                if (!best->second.is_positive()) side.erase(best);
            }
        };
        reduce(s.position.debt, repaid);
        reduce(s.position.collateral, seized);
        return {true, {}};
    }

    lending::UserAction action{tx.event_type, tx.asset, tx.amount};
    // Price the action's assets plus whatever the HF check needs.
    auto assets = position_assets(s.position);
    if (std::find(assets.begin(), assets.end(), tx.asset) == assets.end())
        assets.push_back(tx.asset);
    auto prices = market.oracle.spot_at(s.now, assets);
    auto outcome = lending::apply_user_action(s.position, s.wallet, action, prices,
                                              market.configs);
    if (outcome.applied) {
        // The user's own flow perturbs pool totals.
        auto rs = s.reserves.find(tx.asset);
        if (rs != s.reserves.end()) {
            double usd = tx.amount.to_double() * market.oracle.price_at(tx.asset, s.now);
            switch (tx.event_type) {
                case EventType::deposit:  rs->second.total_liquidity += usd; break;
                case EventType::withdraw: rs->second.total_liquidity -= usd; break;
                case EventType::borrow:
                    rs->second.total_debt += usd;
                    rs->second.total_liquidity -= usd;
                    break;
                case EventType::repay:
                    rs->second.total_debt -= usd;
                    rs->second.total_liquidity += usd;
                    break;
                default: break;
            }
            rs->second.total_liquidity = std::max(0.0, rs->second.total_liquidity);
            rs->second.total_debt = std::max(0.0, rs->second.total_debt);
        }
        s.last_interaction = s.now;
    }
    return outcome;
}

SimState reconstruct_at(const UserProfile& profile, const MarketContext& market) {
    SimState s;
    s.reserves = market.initial_reserves;
    s.wallet.balances = profile.wallet0;
    s.now = profile.history.empty() ? profile.t_rec : profile.history.front().timestamp;
    for (auto& [asset, rs] : s.reserves) rs.last_accrual = s.now;
    s.last_interaction = s.now;
    sync_index_snaps(s);

    for (const auto& tx : profile.history) {
        advance_to(s, market, tx.timestamp);
        apply_tx(s, market, tx, /*apply_liquidation_rows=*/true);
    }
    advance_to(s, market, profile.t_rec);
    return s;
}

}  // namespace liqguard::sim
