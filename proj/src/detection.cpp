#include "liqguard/detection.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace liqguard::detect {

namespace {

constexpr double kDustRatioCutoff = 0.99;

// Bisects (ok, below] down to 1-second resolution. The predicate is monotone
// between checkpoints: debt accrues faster than collateral and the margin
// threshold never shrinks with the gap.
Timestamp refine_crossing(const PositionTrajectory& traj, const MarginPolicy& policy,
                          Timestamp ok, Timestamp below) {
    while (below - ok > 1) {
        Timestamp mid = ok + (below - ok) / 2;
        if (traj.liquidatable_at(mid, policy)) {
            below = mid;
        } else {
            ok = mid;
        }
    }
    return below;
}

// Shared scan: walk the probe sequence in order, report the refined entry
// point of every above->below transition.
std::vector<LiquidationEvent> scan_probes(Strategy strategy, const PositionTrajectory& traj,
                                          const DetectionParams& params,
                                          const std::vector<Timestamp>& probes) {
    std::vector<LiquidationEvent> events;
    bool below_prev = false;
    bool have_prev = false;
    Timestamp last_ok = traj.t_start();

    for (Timestamp p : probes) {
        bool below = traj.liquidatable_at(p, params.margin);
        if (below && (!have_prev || !below_prev)) {
            Timestamp at = have_prev ? refine_crossing(traj, params.margin, last_ok, p) : p;
            LiquidationEvent ev;
            ev.time = at;
            auto hf = traj.hf_at(at);
            ev.hf_at_detection = hf.no_debt ? std::numeric_limits<double>::infinity() : hf.value;
            ev.detected_by.insert(strategy);
            events.push_back(std::move(ev));
        }
        if (!below) last_ok = p;
        below_prev = below;
        have_prev = true;
    }
    return events;
}

std::vector<Timestamp> periodic_probes(Timestamp t0, Timestamp t1, double period_s) {
    std::vector<Timestamp> out;
    auto step = std::max<Timestamp>(1, static_cast<Timestamp>(period_s));
    for (Timestamp t = t0; t < t1; t += step) out.push_back(t);
    out.push_back(t1);
    return out;
}

std::vector<Timestamp> merge_sorted(std::vector<Timestamp> a, const std::vector<Timestamp>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::event_driven:        return "event_driven";
        case Strategy::adaptive:            return "adaptive";
        case Strategy::binary_search:       return "binary_search";
        case Strategy::hybrid:              return "hybrid";
        case Strategy::model_based:         return "model_based";
        case Strategy::interest_milestones: return "interest_milestones";
    }
    return "?";
}

Strategy strategy_from(std::string_view name) {
    for (Strategy s : kStrategies)
        if (to_string(s) == name) return s;
    fail(ErrorKind::config, "unknown detection strategy: " + std::string(name));
}

std::string_view to_string(LiquidationClass c) {
    switch (c) {
        case LiquidationClass::none:       return "none";
        case LiquidationClass::insolvency: return "insolvency";
        case LiquidationClass::dust:       return "dust";
    }
    return "?";
}

double effective_threshold(const MarginPolicy& policy, double gap_days) {
    if (gap_days < 0.0) fail(ErrorKind::domain, "negative interaction gap");
    return std::min(policy.cap, policy.base + policy.per_day_increment * gap_days);
}

PositionTrajectory::PositionTrajectory(Inputs in) : in_(std::move(in)) {
    if (in_.configs == nullptr || in_.oracle == nullptr)
        fail(ErrorKind::config, "trajectory needs reserve configs and a price oracle");
    if (in_.t_end < in_.t_start) fail(ErrorKind::domain, "trajectory window inverted");

    for (const auto& [asset, amt] : in_.position.collateral) assets_.push_back(asset);
    for (const auto& [asset, amt] : in_.position.debt) {
        if (std::find(assets_.begin(), assets_.end(), asset) == assets_.end())
            assets_.push_back(asset);
    }

    updates_ = in_.oracle->updates_between(assets_, in_.t_start, in_.t_end);
    checkpoints_.push_back(in_.t_start);
    for (Timestamp t : updates_) checkpoints_.push_back(t);
    if (checkpoints_.back() != in_.t_end) checkpoints_.push_back(in_.t_end);
}

lending::UserPosition PositionTrajectory::position_at(Timestamp t) const {
    lending::UserPosition pos = in_.position;
    double dt_years = static_cast<double>(t - in_.t_start) / kSecondsPerYear;
    if (dt_years <= 0.0) return pos;

    for (auto& [asset, amt] : pos.debt) {
        auto rs = in_.reserves.find(asset);
        if (rs == in_.reserves.end()) continue;
        const auto& cfg = in_.configs->at(asset);
        double rate = lending::borrow_rate(rs->second.utilization(), cfg.rate_params);
        double factor = cfg.compound_debt
                            ? std::exp(rate * dt_years)
                            : (rs->second.borrow_index + rate * dt_years) / rs->second.borrow_index;
        amt = Amount::from_double(amt.to_double() * factor);
    }
    for (auto& [asset, amt] : pos.collateral) {
        auto rs = in_.reserves.find(asset);
        if (rs == in_.reserves.end()) continue;
        const auto& cfg = in_.configs->at(asset);
        double u = rs->second.utilization();
        double supply = lending::borrow_rate(u, cfg.rate_params) * u;
        double factor =
            (rs->second.liquidity_index + supply * dt_years) / rs->second.liquidity_index;
        amt = Amount::from_double(amt.to_double() * factor);
    }
    return pos;
}

lending::SpotPrices PositionTrajectory::prices_at(Timestamp t) const {
    return in_.oracle->spot_at(t, assets_);
}

lending::HealthFactor PositionTrajectory::hf_at(Timestamp t) const {
    return lending::health_factor(position_at(t), prices_at(t), *in_.configs);
}

double PositionTrajectory::total_value_usd_at(Timestamp t) const {
    return lending::position_value_usd(position_at(t), prices_at(t));
}

double PositionTrajectory::gap_days_at(Timestamp t) const {
    return std::max(0.0, static_cast<double>(t - in_.last_interaction) / kSecondsPerDay);
}

bool PositionTrajectory::liquidatable_at(Timestamp t, const MarginPolicy& policy) const {
    lending::UserPosition pos = position_at(t);
    if (!pos.has_debt()) return false;
    auto prices = prices_at(t);
    auto hf = lending::health_factor(pos, prices, *in_.configs);
    if (hf.below(effective_threshold(policy, gap_days_at(t)))) return true;
    return lending::position_value_usd(pos, prices) < in_.dust_threshold_usd;
}

std::vector<Timestamp> PositionTrajectory::debt_milestones(double rel_step) const {
    std::vector<Timestamp> out;
    double max_rate = 0.0;
    for (const auto& [asset, amt] : in_.position.debt) {
        if (!amt.is_positive()) continue;
        auto rs = in_.reserves.find(asset);
        if (rs == in_.reserves.end()) continue;
        max_rate = std::max(max_rate, lending::borrow_rate(rs->second.utilization(),
                                                           in_.configs->at(asset).rate_params));
    }
    if (max_rate <= 0.0 || rel_step <= 0.0) return out;

    // Compound growth: debt multiplies by (1+step)^k at
    // t_k = t0 + k * ln(1+step)/rate years.
    double step_years = std::log1p(rel_step) / max_rate;
    auto step_s = static_cast<Timestamp>(step_years * kSecondsPerYear);
    if (step_s < 1) step_s = 1;
    for (Timestamp t = in_.t_start + step_s; t <= in_.t_end; t += step_s) {
        out.push_back(t);
        if (out.size() > 100000) break;  // window too long for this rate; probes suffice
    }
    return out;
}

std::vector<LiquidationEvent> detect(Strategy strategy, const PositionTrajectory& traj,
                                     const DetectionParams& params) {
    const Timestamp t0 = traj.t_start();
    const Timestamp t1 = traj.t_end();
    std::vector<Timestamp> probes;

    switch (strategy) {
        case Strategy::event_driven: {
            // Price updates only. Deliberately blind between updates: slow
            // interest bleeds with no further update go unseen.
            probes.push_back(t0);
            for (Timestamp t : traj.price_updates()) probes.push_back(t);
            break;
        }
        case Strategy::adaptive: {
            // Sparse when HF is far from 1, second-by-second when close.
            Timestamp t = t0;
            const auto base = static_cast<double>(params.adaptive_base_s);
            while (t < t1) {
                probes.push_back(t);
                auto hf = traj.hf_at(t);
                double dist = hf.no_debt ? 1.0 : std::abs(hf.value - 1.0);
                double interval = std::clamp(base * dist / 0.5, 1.0, base);
                t += std::max<Timestamp>(1, static_cast<Timestamp>(interval));
            }
            probes.push_back(t1);
            break;
        }
        case Strategy::binary_search:
            // Checkpoint endpoints; the shared refinement is the bisection.
            probes = traj.checkpoints();
            break;
        case Strategy::hybrid:
            probes = merge_sorted(traj.checkpoints(),
                                  periodic_probes(t0, t1, params.hybrid_period_s));
            break;
        case Strategy::model_based: {
            // Coarse checkpoints plus probes at linearly extrapolated
            // threshold crossings from the last two samples.
            std::vector<Timestamp> coarse = traj.checkpoints();
            std::optional<std::pair<Timestamp, double>> prev;
            for (std::size_t i = 0; i < coarse.size(); ++i) {
                Timestamp t = coarse[i];
                auto hf = traj.hf_at(t);
                double v = hf.no_debt ? std::numeric_limits<double>::infinity() : hf.value;
                probes.push_back(t);
                if (prev && std::isfinite(v) && std::isfinite(prev->second) &&
                    v < prev->second && t > prev->first) {
                    double thr = effective_threshold(params.margin, traj.gap_days_at(t));
                    if (v > thr) {
                        double slope = (v - prev->second) /
                                       static_cast<double>(t - prev->first);
                        double eta_s = (thr - v) / slope;  // slope < 0, thr < v
                        Timestamp pred = t + static_cast<Timestamp>(std::ceil(eta_s));
                        Timestamp next = (i + 1 < coarse.size()) ? coarse[i + 1] : t1;
                        if (pred > t && pred <= next) probes.push_back(pred);
                    }
                }
                prev = {t, v};
            }
            std::sort(probes.begin(), probes.end());
            probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
            break;
        }
        case Strategy::interest_milestones: {
            probes.push_back(t0);
            for (Timestamp t : traj.debt_milestones(params.milestone_rel_step))
                probes.push_back(t);
            probes.push_back(t1);
            std::sort(probes.begin(), probes.end());
            probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
            break;
        }
    }

    return scan_probes(strategy, traj, params, probes);
}

ConsensusResult consensus(const std::vector<std::vector<LiquidationEvent>>& results,
                          double time_tolerance_s) {
    if (results.size() != kStrategies.size())
        fail(ErrorKind::config, "consensus requires exactly six detection outputs, got " +
                                    std::to_string(results.size()));

    struct Entry {
        Timestamp time;
        double hf;
        Strategy strategy;
    };
    std::vector<Entry> entries;
    for (const auto& list : results) {
        for (const auto& ev : list) {
            for (Strategy s : ev.detected_by) entries.push_back({ev.time, ev.hf_at_detection, s});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.time != b.time) return a.time < b.time;
        return static_cast<int>(a.strategy) < static_cast<int>(b.strategy);
    });

    ConsensusResult out;
    std::size_t i = 0;
    std::size_t candidates = 0;
    const auto tol = static_cast<Timestamp>(time_tolerance_s);
    while (i < entries.size()) {
        Timestamp anchor = entries[i].time;
        LiquidationEvent ev;
        ev.time = anchor;
        ev.hf_at_detection = entries[i].hf;
        while (i < entries.size() && entries[i].time - anchor <= tol) {
            ev.detected_by.insert(entries[i].strategy);
            ++i;
        }
        ++candidates;
        if (ev.detected_by.size() == kStrategies.size()) {
            out.confirmed.push_back(std::move(ev));
        } else {
            out.unconfirmed.push_back(std::move(ev));
        }
    }
    out.agreement = candidates == 0
                        ? 1.0
                        : static_cast<double>(out.confirmed.size()) /
                              static_cast<double>(candidates);
    return out;
}

std::string detection_report_json(const ConsensusResult& result) {
    nlohmann::json doc;
    auto event_json = [](const LiquidationEvent& ev) {
        nlohmann::json e;
        e["t"] = ev.time;
        e["hf"] = ev.hf_at_detection;
        e["classification"] = std::string(to_string(ev.classification));
        std::vector<std::string> by;
        for (Strategy s : ev.detected_by) by.emplace_back(to_string(s));
        e["detected_by"] = by;
        return e;
    };
    auto candidates = nlohmann::json::array();
    for (const auto& ev : result.confirmed) candidates.push_back(event_json(ev));
    for (const auto& ev : result.unconfirmed) candidates.push_back(event_json(ev));
    doc["candidates"] = candidates;
    auto confirmed = nlohmann::json::array();
    for (const auto& ev : result.confirmed) confirmed.push_back(event_json(ev));
    doc["confirmed"] = confirmed;
    doc["agreement"] = result.agreement;
    return doc.dump(2);
}

LiquidationClass classify(const LiquidationEvent& event, const lending::UserPosition& position,
                          const lending::SpotPrices& prices, double dust_threshold) {
    double total = lending::position_value_usd(position, prices);
    if (total < dust_threshold && event.debt_to_cover_ratio >= kDustRatioCutoff)
        return LiquidationClass::dust;
    return LiquidationClass::insolvency;
}

}  // namespace liqguard::detect
