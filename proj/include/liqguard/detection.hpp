#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "liqguard/lending_core.hpp"

// Six parallel liquidation-detection strategies over a no-action position
// trajectory, unanimity consensus, dynamic-margin thresholds, and
// dust/insolvency classification. Each strategy contributes its own probe
// schedule; any straddled crossing is then refined to 1-second resolution,
// so strategies differ in which crossings they catch, not in where they
// place them.
namespace liqguard::detect {

enum class Strategy {
    event_driven,
    adaptive,
    binary_search,
    hybrid,
    model_based,
    interest_milestones,
};

inline constexpr std::array<Strategy, 6> kStrategies = {
    Strategy::event_driven, Strategy::adaptive,    Strategy::binary_search,
    Strategy::hybrid,       Strategy::model_based, Strategy::interest_milestones,
};

std::string_view to_string(Strategy s);
Strategy strategy_from(std::string_view name);

enum class LiquidationClass { none, insolvency, dust };

std::string_view to_string(LiquidationClass c);

struct MarginPolicy {
    double base = 1.0;
    double per_day_increment = 0.02;  // HF units per day of interaction gap
    double cap = 1.10;
};

// min(cap, base + per_day_increment * gap_days)
double effective_threshold(const MarginPolicy& policy, double gap_days);

struct LiquidationEvent {
    Timestamp time = 0;
    double hf_at_detection = 0.0;
    LiquidationClass classification = LiquidationClass::insolvency;
    double debt_to_cover_ratio = 0.0;
    std::set<Strategy> detected_by;
};

struct DetectionParams {
    MarginPolicy margin;
    double consensus_tolerance_s = 2.0;
    double hybrid_period_s = 3600.0;
    double adaptive_base_s = 3600.0;
    double milestone_rel_step = 0.001;  // relative debt growth per check
};

// Deterministic evolution of a position over [t_start, t_end] with no user
// actions: prices step at oracle update times, interest accrues between
// them. Built once per detection window; all strategies share it read-only.
class PositionTrajectory {
public:
    struct Inputs {
        lending::UserPosition position;  // state at t_start
        std::map<std::string, lending::ReserveState> reserves;
        const lending::ReserveConfigMap* configs = nullptr;
        const lending::PriceOracle* oracle = nullptr;
        Timestamp t_start = 0;
        Timestamp t_end = 0;
        Timestamp last_interaction = 0;  // for the margin gap
        double dust_threshold_usd = 1.0;
    };

    explicit PositionTrajectory(Inputs in);

    const std::vector<Timestamp>& checkpoints() const { return checkpoints_; }
    const std::vector<Timestamp>& price_updates() const { return updates_; }
    Timestamp t_start() const { return in_.t_start; }
    Timestamp t_end() const { return in_.t_end; }
    double dust_threshold() const { return in_.dust_threshold_usd; }

    lending::UserPosition position_at(Timestamp t) const;
    lending::SpotPrices prices_at(Timestamp t) const;
    lending::HealthFactor hf_at(Timestamp t) const;
    double total_value_usd_at(Timestamp t) const;
    double gap_days_at(Timestamp t) const;

    // HF below the margin threshold, or a dust-sized position with debt.
    bool liquidatable_at(Timestamp t, const MarginPolicy& policy) const;

    // Times at which accrued debt has grown by multiples of rel_step.
    std::vector<Timestamp> debt_milestones(double rel_step) const;

    const lending::ReserveConfigMap& configs() const { return *in_.configs; }

private:
    Inputs in_;
    std::vector<Timestamp> checkpoints_;  // t_start, updates..., t_end
    std::vector<Timestamp> updates_;      // oracle update times in (t_start, t_end]
    std::vector<std::string> assets_;
};

// Detection events for one strategy; multiple entries when the position
// recovers and crosses again.
std::vector<LiquidationEvent> detect(Strategy strategy, const PositionTrajectory& trajectory,
                                     const DetectionParams& params);

struct ConsensusResult {
    std::vector<LiquidationEvent> confirmed;    // detected by all six
    std::vector<LiquidationEvent> unconfirmed;  // detected by a strict subset
    double agreement = 1.0;  // confirmed / candidates, 1.0 when no candidates
};

// Merges events within time_tolerance_s into candidates; a candidate is
// confirmed only on unanimity. Requires exactly six inputs.
ConsensusResult consensus(const std::vector<std::vector<LiquidationEvent>>& results,
                          double time_tolerance_s);

// Detection report for one trajectory:
// {candidates: [{t, hf, detected_by, classification}], confirmed: [...], agreement}
std::string detection_report_json(const ConsensusResult& result);

// Dust iff the total position value is under the dust threshold AND the
// liquidation covered (almost) the whole debt; insolvency otherwise.
LiquidationClass classify(const LiquidationEvent& event, const lending::UserPosition& position,
                          const lending::SpotPrices& prices, double dust_threshold);

}  // namespace liqguard::detect
