#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "liqguard/decimal.hpp"
#include "liqguard/errors.hpp"
#include "liqguard/events.hpp"

// Protocol-faithful model of an over-collateralized lending pool: per-asset
// reserves with a kinked two-slope rate curve, index-based interest accrual,
// user positions, health factors and liquidation execution.
namespace liqguard::lending {

// USD comparisons in liquidation paths tolerate this much float noise.
constexpr double kUsdEps = 1e-9;

struct RateParams {
    double base_rate = 0.0;             // annual fraction at zero utilization
    double slope1 = 0.04;               // slope below the kink
    double slope2 = 0.60;               // slope above the kink
    double optimal_utilization = 0.80;  // kink position
};

struct ReserveConfig {
    std::string asset;
    double ltv = 0.75;
    double liquidation_threshold = 0.80;
    double liquidation_bonus = 0.05;
    double close_factor = 0.50;
    double dust_threshold_usd = 1.0;
    RateParams rate_params;
    bool compound_debt = true;  // false: debt index accrues linearly too

    void validate() const;  // throws Error(config) on violated invariants
};

using ReserveConfigMap = std::map<std::string, ReserveConfig>;

ReserveConfigMap load_reserve_configs(const std::string& path);

struct ReserveState {
    double total_liquidity = 0.0;  // un-borrowed liquidity, USD equivalent
    double total_debt = 0.0;       // outstanding debt, USD equivalent
    double liquidity_index = 1.0;
    double borrow_index = 1.0;
    Timestamp last_accrual = 0;

    // debt / (liquidity + debt); zero for an empty reserve. Always in [0,1].
    double utilization() const;
};

// Kinked two-slope borrow rate, continuous at the kink.
double borrow_rate(double utilization, const RateParams& p);

// Advances the interest indexes to `now`. The borrow index compounds
// per-second (exponential form); the liquidity index accrues simple interest
// (a flat increment per unit index), which keeps accrual exactly associative
// over arbitrary time splits at constant rates. Pool totals are not touched.
void accrue(ReserveState& s, const ReserveConfig& c, Timestamp now);

struct UserPosition {
    std::map<std::string, Amount> collateral;  // native units
    std::map<std::string, Amount> debt;        // native units
    Timestamp last_update = 0;

    bool has_debt() const;
};

struct WalletState {
    std::map<std::string, Amount> balances;

    Amount balance(const std::string& asset) const;
    void credit(const std::string& asset, const Amount& a);
    void debit(const std::string& asset, const Amount& a);
};

using SpotPrices = std::map<std::string, double>;

double price_of(const SpotPrices& prices, const std::string& asset);

struct PriceOracle {
    // per asset: (timestamp, usd price), strictly increasing timestamps
    std::map<std::string, std::vector<std::pair<Timestamp, double>>> series;

    // Step-function lookup: last observation at or before t.
    double price_at(const std::string& asset, Timestamp t) const;

    // Spot snapshot of the given assets at t.
    SpotPrices spot_at(Timestamp t, const std::vector<std::string>& assets) const;

    // Update timestamps for `assets` in (after, upto], merged and sorted.
    std::vector<Timestamp> updates_between(const std::vector<std::string>& assets,
                                           Timestamp after, Timestamp upto) const;
};

struct HealthFactor {
    bool no_debt = false;  // no outstanding debt: infinitely safe
    double value = std::numeric_limits<double>::infinity();

    bool below(double threshold) const { return !no_debt && value < threshold; }
};

// HF = sum(collateral_usd_i * LT_i) / sum(debt_usd_j).
HealthFactor health_factor(const UserPosition& pos, const SpotPrices& prices,
                           const ReserveConfigMap& configs);

struct UserAction {
    EventType kind = EventType::deposit;  // deposit/withdraw/borrow/repay
    std::string asset;
    Amount amount;
};

struct ActionOutcome {
    bool applied = false;
    std::string reason;  // rejection reason when not applied
};

// Applies one user action against position and wallet. Rejections (bad
// amount, insufficient balance/collateral, unsafe withdraw) leave both
// untouched and carry a reason. Repay above the outstanding debt repays
// exactly the debt.
ActionOutcome apply_user_action(UserPosition& pos, WalletState& wallet,
                                const UserAction& action, const SpotPrices& prices,
                                const ReserveConfigMap& configs);

struct LiquidationResult {
    double debt_repaid_usd = 0.0;
    double collateral_seized_usd = 0.0;
    bool full_close = false;
    double debt_to_cover_ratio = 0.0;  // repaid / total debt before
    std::string debt_asset;
    std::string collateral_asset;
};

// Executes one liquidation against the position. Standard case repays
// close_factor of the largest-USD debt and seizes bonus-priced collateral
// from the largest-USD collateral asset; positions whose total value is
// under the dust threshold are fully closed regardless of HF. Throws
// Error(protocol) when called on a healthy non-dust position.
LiquidationResult execute_liquidation(UserPosition& pos, const SpotPrices& prices,
                                      const ReserveConfigMap& configs,
                                      double effective_threshold = 1.0);

double collateral_value_usd(const UserPosition& pos, const SpotPrices& prices);
double debt_value_usd(const UserPosition& pos, const SpotPrices& prices);
double position_value_usd(const UserPosition& pos, const SpotPrices& prices);

// Dust threshold applying to a position: the largest per-asset threshold
// among the assets it touches (0 for an empty position).
double position_dust_threshold(const UserPosition& pos, const ReserveConfigMap& configs);

}  // namespace liqguard::lending
