#include "liqguard/lending_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace liqguard::lending {

namespace {

using nlohmann::json;

// Largest-USD asset of a balance map; ties resolve to the lexicographically
// first asset (map order). Empty string for an all-zero map.
std::string largest_usd(const std::map<std::string, Amount>& balances,
                        const SpotPrices& prices) {
    std::string best;
    double best_usd = 0.0;
    for (const auto& [asset, amt] : balances) {
        double usd = amt.to_double() * price_of(prices, asset);
        if (best.empty() || usd > best_usd + kUsdEps) {
            best = asset;
            best_usd = usd;
        }
    }
    if (best_usd <= kUsdEps) return {};
    return best;
}

}  // namespace

void ReserveConfig::validate() const {
    if (asset.empty()) fail(ErrorKind::config, "reserve config without asset symbol");
    auto bad = [&](const std::string& what) {
        fail(ErrorKind::config, "reserve " + asset + ": " + what);
    };
    if (!(ltv >= 0.0 && ltv <= 1.0)) bad("ltv outside [0,1]");
    if (!(liquidation_threshold >= ltv)) bad("ltv exceeds liquidation threshold");
    if (!(liquidation_threshold < 1.0)) bad("liquidation threshold must be < 1");
    if (!(liquidation_bonus >= 0.0)) bad("negative liquidation bonus");
    if (!(close_factor > 0.0 && close_factor <= 1.0)) bad("close factor outside (0,1]");
    if (!(dust_threshold_usd > 0.0)) bad("dust threshold must be positive");
    const auto& r = rate_params;
    if (!(r.optimal_utilization > 0.0 && r.optimal_utilization < 1.0))
        bad("optimal utilization outside (0,1)");
    if (r.base_rate < 0.0 || r.slope1 < 0.0 || r.slope2 < 0.0) bad("negative rate");
}

ReserveConfigMap load_reserve_configs(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open reserve config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail(ErrorKind::data, "reserve config parse error: " + std::string(e.what()));
    }
    if (!doc.is_array()) fail(ErrorKind::data, "reserve config must be a JSON array");

    ReserveConfigMap out;
    for (const auto& item : doc) {
        ReserveConfig cfg;
        cfg.asset = item.at("asset").get<std::string>();
        cfg.ltv = item.at("ltv").get<double>();
        cfg.liquidation_threshold = item.at("liquidation_threshold").get<double>();
        cfg.liquidation_bonus = item.value("liquidation_bonus", 0.05);
        cfg.close_factor = item.value("close_factor", 0.50);
        cfg.dust_threshold_usd = item.value("dust_threshold_usd", 1.0);
        if (item.contains("rate_params")) {
            const auto& rp = item.at("rate_params");
            cfg.rate_params.base_rate = rp.value("base_rate", 0.0);
            cfg.rate_params.slope1 = rp.value("slope1", 0.04);
            cfg.rate_params.slope2 = rp.value("slope2", 0.60);
            cfg.rate_params.optimal_utilization = rp.value("optimal_utilization", 0.80);
        }
        cfg.compound_debt = item.value("compound_debt", true);
        cfg.validate();
        out[cfg.asset] = cfg;
    }
    return out;
}

double ReserveState::utilization() const {
    if (total_debt <= 0.0) return 0.0;
    double denom = total_liquidity + total_debt;
    if (denom <= 0.0) return 0.0;
    return std::min(1.0, total_debt / denom);
}

double borrow_rate(double utilization, const RateParams& p) {
    if (!(utilization >= 0.0 && utilization <= 1.0))
        fail(ErrorKind::domain, "utilization outside [0,1]");
    if (utilization <= p.optimal_utilization)
        return p.base_rate + p.slope1 * (utilization / p.optimal_utilization);
    return p.base_rate + p.slope1 +
           p.slope2 * (utilization - p.optimal_utilization) / (1.0 - p.optimal_utilization);
}

void accrue(ReserveState& s, const ReserveConfig& c, Timestamp now) {
    if (now < s.last_accrual) fail(ErrorKind::time_travel, "accrual time before last accrual");
    if (now == s.last_accrual) return;

    double years = static_cast<double>(now - s.last_accrual) / kSecondsPerYear;
    double u = s.utilization();
    double rate = borrow_rate(u, c.rate_params);

    if (c.compound_debt) {
        s.borrow_index *= std::exp(rate * years);
    } else {
        s.borrow_index += rate * years;
    }
    s.liquidity_index += rate * u * years;
    s.last_accrual = now;
}

bool UserPosition::has_debt() const {
    for (const auto& [asset, amt] : debt)
        if (amt.is_positive()) return true;
    return false;
}

Amount WalletState::balance(const std::string& asset) const {
    auto it = balances.find(asset);
    return it == balances.end() ? Amount{} : it->second;
}

void WalletState::credit(const std::string& asset, const Amount& a) {
    balances[asset] += a;
}

void WalletState::debit(const std::string& asset, const Amount& a) {
    balances[asset] -= a;
}

double price_of(const SpotPrices& prices, const std::string& asset) {
    auto it = prices.find(asset);
    if (it == prices.end()) fail(ErrorKind::data, "no price for asset " + asset);
    return it->second;
}

double PriceOracle::price_at(const std::string& asset, Timestamp t) const {
    auto it = series.find(asset);
    if (it == series.end() || it->second.empty())
        fail(ErrorKind::data, "no price history for asset " + asset);
    const auto& s = it->second;
    if (t < s.front().first)
        fail(ErrorKind::data, "price query for " + asset + " before first observation");
    auto pos = std::upper_bound(
        s.begin(), s.end(), t,
        [](Timestamp lhs, const std::pair<Timestamp, double>& rhs) { return lhs < rhs.first; });
    return std::prev(pos)->second;
}

SpotPrices PriceOracle::spot_at(Timestamp t, const std::vector<std::string>& assets) const {
    SpotPrices out;
    for (const auto& a : assets) out[a] = price_at(a, t);
    return out;
}

std::vector<Timestamp> PriceOracle::updates_between(const std::vector<std::string>& assets,
                                                    Timestamp after, Timestamp upto) const {
    std::vector<Timestamp> out;
    for (const auto& a : assets) {
        auto it = series.find(a);
        if (it == series.end()) continue;
        for (const auto& [ts, px] : it->second) {
            if (ts > after && ts <= upto) out.push_back(ts);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

HealthFactor health_factor(const UserPosition& pos, const SpotPrices& prices,
                           const ReserveConfigMap& configs) {
    double weighted_collateral = 0.0;
    for (const auto& [asset, amt] : pos.collateral) {
        if (amt.is_zero()) continue;
        auto cfg = configs.find(asset);
        if (cfg == configs.end()) fail(ErrorKind::data, "no reserve config for asset " + asset);
        weighted_collateral +=
            amt.to_double() * price_of(prices, asset) * cfg->second.liquidation_threshold;
    }
    double total_debt = 0.0;
    for (const auto& [asset, amt] : pos.debt) {
        if (amt.is_zero()) continue;
        if (configs.find(asset) == configs.end())
            fail(ErrorKind::data, "no reserve config for asset " + asset);
        total_debt += amt.to_double() * price_of(prices, asset);
    }
    if (total_debt <= 0.0) return HealthFactor{true, std::numeric_limits<double>::infinity()};
    return HealthFactor{false, weighted_collateral / total_debt};
}

ActionOutcome apply_user_action(UserPosition& pos, WalletState& wallet,
                                const UserAction& action, const SpotPrices& prices,
                                const ReserveConfigMap& configs) {
    if (!action.amount.is_positive()) return {false, "non-positive amount"};

    switch (action.kind) {
        case EventType::deposit: {
            if (wallet.balance(action.asset) < action.amount)
                return {false, "insufficient wallet balance"};
            wallet.debit(action.asset, action.amount);
            pos.collateral[action.asset] += action.amount;
            return {true, {}};
        }
        case EventType::withdraw: {
            auto it = pos.collateral.find(action.asset);
            if (it == pos.collateral.end() || it->second < action.amount)
                return {false, "insufficient collateral"};
            UserPosition probe = pos;
            probe.collateral[action.asset] -= action.amount;
            HealthFactor hf = health_factor(probe, prices, configs);
            if (hf.below(1.0)) return {false, "withdraw would push health factor below 1"};
            it->second -= action.amount;
            wallet.credit(action.asset, action.amount);
            return {true, {}};
        }
        case EventType::borrow: {
            pos.debt[action.asset] += action.amount;
            wallet.credit(action.asset, action.amount);
            return {true, {}};
        }
        case EventType::repay: {
            auto it = pos.debt.find(action.asset);
            Amount outstanding = (it == pos.debt.end()) ? Amount{} : it->second;
            if (!outstanding.is_positive()) return {false, "no outstanding debt"};
            Amount repaid = min(action.amount, outstanding);
            if (wallet.balance(action.asset) < repaid)
                return {false, "insufficient wallet balance"};
            wallet.debit(action.asset, repaid);
            it->second -= repaid;
            return {true, {}};
        }
        case EventType::liquidation:
            return {false, "liquidation is not a user action"};
    }
    return {false, "unknown action"};
}

double collateral_value_usd(const UserPosition& pos, const SpotPrices& prices) {
    double usd = 0.0;
    for (const auto& [asset, amt] : pos.collateral)
        usd += amt.to_double() * price_of(prices, asset);
    return usd;
}

double debt_value_usd(const UserPosition& pos, const SpotPrices& prices) {
    double usd = 0.0;
    for (const auto& [asset, amt] : pos.debt)
        usd += amt.to_double() * price_of(prices, asset);
    return usd;
}

double position_value_usd(const UserPosition& pos, const SpotPrices& prices) {
    return collateral_value_usd(pos, prices) + debt_value_usd(pos, prices);
}

double position_dust_threshold(const UserPosition& pos, const ReserveConfigMap& configs) {
    double thr = 0.0;
    auto consider = [&](const std::string& asset) {
        auto it = configs.find(asset);
        if (it != configs.end()) thr = std::max(thr, it->second.dust_threshold_usd);
    };
    for (const auto& [asset, amt] : pos.collateral) consider(asset);
    for (const auto& [asset, amt] : pos.debt) consider(asset);
    return thr;
}

LiquidationResult execute_liquidation(UserPosition& pos, const SpotPrices& prices,
                                      const ReserveConfigMap& configs,
                                      double effective_threshold) {
    double debt_usd = debt_value_usd(pos, prices);
    double total_usd = position_value_usd(pos, prices);
    double dust_thr = position_dust_threshold(pos, configs);
    HealthFactor hf = health_factor(pos, prices, configs);

    bool dust = debt_usd > 0.0 && total_usd < dust_thr;
    if (!hf.below(effective_threshold) && !dust)
        fail(ErrorKind::protocol, "liquidation on a healthy non-dust position");

    LiquidationResult res;

    if (dust) {
        // Administrative full close: all debt cleared, all collateral seized.
        res.debt_repaid_usd = debt_usd;
        res.collateral_seized_usd = collateral_value_usd(pos, prices);
        res.full_close = true;
        res.debt_to_cover_ratio = 1.0;
        pos.debt.clear();
        pos.collateral.clear();
        return res;
    }

    res.debt_asset = largest_usd(pos.debt, prices);
    if (res.debt_asset.empty())
        fail(ErrorKind::protocol, "liquidation on a position without debt");
    const ReserveConfig& debt_cfg = configs.at(res.debt_asset);
    double debt_price = price_of(prices, res.debt_asset);
    Amount& debt_bal = pos.debt[res.debt_asset];
    double target_debt_usd = debt_bal.to_double() * debt_price;
    double repaid_usd = debt_cfg.close_factor * target_debt_usd;

    res.collateral_asset = largest_usd(pos.collateral, prices);
    double bonus = 0.0;
    double avail_usd = 0.0;
    double coll_price = 1.0;
    if (!res.collateral_asset.empty()) {
        bonus = configs.at(res.collateral_asset).liquidation_bonus;
        coll_price = price_of(prices, res.collateral_asset);
        avail_usd = pos.collateral[res.collateral_asset].to_double() * coll_price;
    }

    double seize_usd = repaid_usd * (1.0 + bonus);
    if (seize_usd > avail_usd + kUsdEps) {
        // Not enough collateral: scale the repay down to what the seizure
        // can pay for.
        seize_usd = avail_usd;
        repaid_usd = avail_usd / (1.0 + bonus);
    }

    // Mutate balances in native units, clamped to what exists.
    Amount repaid_native = min(debt_bal, Amount::from_double(repaid_usd / debt_price));
    debt_bal -= repaid_native;
    res.debt_repaid_usd = repaid_native.to_double() * debt_price;

    if (!res.collateral_asset.empty()) {
        Amount& coll_bal = pos.collateral[res.collateral_asset];
        Amount seized_native = min(coll_bal, Amount::from_double(seize_usd / coll_price));
        coll_bal -= seized_native;
        res.collateral_seized_usd = seized_native.to_double() * coll_price;
    }

    res.debt_to_cover_ratio = debt_usd > 0.0 ? res.debt_repaid_usd / debt_usd : 0.0;
    res.full_close = !pos.has_debt();
    return res;
}

}  // namespace liqguard::lending
