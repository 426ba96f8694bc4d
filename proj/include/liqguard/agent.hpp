#pragma once

#include <optional>

#include "liqguard/profile.hpp"
#include "liqguard/simulate.hpp"
#include "liqguard/trend.hpp"

// Risk identification across the five event types and the counterfactual
// minimum-viable-intervention search, with wallet-feasibility enforcement.
namespace liqguard::agent {

struct AgentParams {
    double multiplier = 2.0;  // probe amount growth factor
    Amount alpha_min = Amount::parse("0.000001");
    int history_depth = 8;    // trailing checkpoints feeding the trend series
    double horizon_days = 7.0;
};

struct RiskAssessment {
    std::map<EventType, double> t_ret;              // return period, days
    std::map<EventType, trend::TrendScore> v;       // trend scores
    // (checkpoint time in days, return period) series per event.
    std::map<EventType, std::vector<std::pair<double, double>>> series;
    bool at_risk = false;
};

// at_risk iff liquidation has the minimal return period (ties count) or the
// minimal trend score among the non-degenerate ones. The trend branch needs
// at least one live non-liquidation score to compare against; degenerate
// (zero-variance) series never force an intervention.
bool risk_predicate(const std::map<EventType, double>& t_ret,
                    const std::map<EventType, trend::TrendScore>& v);

enum class ActionKind { none, repay, deposit };

std::string_view to_string(ActionKind k);

struct Recommendation {
    ActionKind action_kind = ActionKind::none;
    std::string asset;      // asset spent from the wallet
    Amount amount;
    bool capped_at_max = false;
    int iterations = 0;
    bool infeasible = false;
    std::string reason;
    std::vector<std::string> adjustments;  // feasibility substitutions/upsizes
    RiskAssessment before;
    std::optional<RiskAssessment> after;   // assessment at the accepted probe
};

// Return periods and trend scores for every event type at t_rec, using the
// per-event engines for the profile's index event type.
RiskAssessment assess_risk(const UserProfile& profile, const MarketContext& market,
                           const EngineMap& engines, const trend::TrendParams& trend_params,
                           const AgentParams& params);

// Assessment of the counterfactual state where (kind, asset, amount) is
// applied at t_rec: features are rebuilt on the hypothetically extended
// history and the new return periods are appended to the trend series.
RiskAssessment assess_counterfactual(const UserProfile& profile, const MarketContext& market,
                                     const EngineMap& engines,
                                     const trend::TrendParams& trend_params,
                                     const AgentParams& params, const RiskAssessment& base,
                                     ActionKind kind, const std::string& asset,
                                     const Amount& amount);

// Doubling search for the minimum viable intervention. Not-at-risk profiles
// get a zero-amount advisory; exhausted searches recommend the feasible
// maximum, capped.
Recommendation recommend(const UserProfile& profile, const MarketContext& market,
                         const EngineMap& engines, const RiskAssessment& assessment,
                         const trend::TrendParams& trend_params, const AgentParams& params,
                         const sim::SimState& state);

// Wallet feasibility (largest-holding substitution sweep) and atomic dust
// clearance (up-size repays that would leave dust-sized residual debt).
Recommendation validate_feasibility(Recommendation rec, const lending::WalletState& wallet,
                                    const lending::UserPosition& position,
                                    const lending::SpotPrices& prices, double dust_threshold);

// Fraction of profiles whose at_risk flag survives uniform relative
// perturbation of the trend parameters, averaged over seeded trials.
double sensitivity_stability(const std::vector<RiskAssessment>& profiles,
                             const trend::TrendParams& params, double perturbation,
                             int trials, std::uint64_t seed);

}  // namespace liqguard::agent
