#pragma once

#include <optional>

#include "liqguard/agent.hpp"
#include "liqguard/detection.hpp"
#include "liqguard/profile.hpp"

// Paired baseline/intervention counterfactual replay of user trajectories,
// exclusion filters, and cohort metrics. Both legs share the price oracle,
// the accrual schedule and the recorded future; only the injected action may
// make them diverge.
namespace liqguard::replay {

struct LiquidationHit {
    Timestamp time = 0;
    detect::LiquidationClass classification = detect::LiquidationClass::insolvency;
    double hf_at_detection = 0.0;
    double debt_to_cover_ratio = 0.0;
};

struct ReplayLeg {
    bool liquidated = false;
    std::vector<LiquidationHit> liquidations;
    std::size_t skipped_futures = 0;      // recorded txs infeasible in this leg
    bool zero_debt_artifact = false;      // recorded liquidation row with no debt
    double consensus_agreement = 1.0;     // mean over detection rounds
    std::vector<std::pair<Timestamp, double>> hf_checkpoints;  // post-event HFs
};

struct ReplayConfig {
    detect::DetectionParams detection;
    double block_time_s = 2.0;
    double min_lead_s = 2.0;  // liquidations closer than this to t_rec are unactionable
    Timestamp window_end = 0;
};

// One replay leg: reconstructs the state at t_rec, optionally injects the
// recommendation, then replays the recorded future with continuous
// detection. Confirmed liquidations execute protocol mechanics and the
// replay continues from the post-liquidation state.
ReplayLeg fork_and_replay(const UserProfile& profile, const MarketContext& market,
                          const ReplayConfig& config,
                          const std::optional<agent::Recommendation>& action);

struct ReplayOutcome {
    std::string user_id;
    Timestamp t_rec = 0;
    std::optional<std::string> excluded;  // dust_only | too_fast | zero_debt_artifact
    ReplayLeg baseline;
    ReplayLeg intervention;
    agent::Recommendation action;
    detect::LiquidationClass baseline_classification = detect::LiquidationClass::none;
    detect::LiquidationClass intervention_classification = detect::LiquidationClass::none;
};

// Sets the exclusion reasons in place: dust-only baselines, liquidations
// inside the actionable lead time, and zero-debt artifacts. Idempotent.
void apply_exclusions(std::vector<ReplayOutcome>& outcomes, double block_time_s,
                      double min_lead_s);

struct CohortMetrics {
    std::size_t n_evaluated = 0;
    std::map<std::string, std::size_t> n_excluded;
    std::optional<double> salvage_rate;  // empty when no baseline liquidation (N/A)
    double worsening_rate = 0.0;
    std::size_t dust_avoided = 0;
    double consensus_agreement = 1.0;
    std::size_t baseline_liquidated = 0;
    std::size_t rescued = 0;
    std::size_t worsened = 0;
};

CohortMetrics compute_metrics(const std::vector<ReplayOutcome>& outcomes);

struct CohortResult {
    CohortMetrics metrics;
    std::vector<ReplayOutcome> outcomes;  // sorted by (user_id, t_rec)
    std::vector<std::string> errors;      // per-profile failures, cohort continues
};

// Full pipeline per profile: baseline replay, exclusion filters, assessment,
// recommendation, feasibility validation, intervention replay. Profiles run
// in parallel with a deterministic reduction order.
CohortResult evaluate_cohort(const std::vector<UserProfile>& profiles,
                             const MarketContext& market,
                             const std::map<EventType, EngineMap>& engines_by_index,
                             const trend::TrendParams& trend_params,
                             const agent::AgentParams& agent_params,
                             const ReplayConfig& config, int workers);

struct SamplingParams {
    double window_start_pct = 0.4;
    double window_end_pct = 0.8;
    std::size_t per_pair = 300;
};

// Stratified checkpoint sampling: uniform per event pair, shortest
// time-to-event for pairs ending in liquidation. Wallet balances inferred
// over each user's full history.
std::vector<UserProfile> sample_cohort(const ingest::EventLog& log, const SamplingParams& params,
                                       const Amount& safety_factor, std::uint64_t seed);

}  // namespace liqguard::replay
