#include "liqguard/agent.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace liqguard::agent {

namespace {

// Return period at one checkpoint: features built from the events strictly
// before it, the checkpoint transaction itself as the current one.
double checkpoint_return_period(const hazard::HazardEngine& engine,
                                const std::vector<ingest::TxRecord>& history,
                                std::size_t checkpoint_idx, const MarketContext& market,
                                const std::string& user_id, double horizon_days,
                                const surv::FeatureParams& fp) {
    const auto& tx = history[checkpoint_idx];
    std::span<const ingest::TxRecord> before(history.data(), checkpoint_idx);
    auto features = surv::build_features(before, *market.market_log, tx.timestamp, tx, fp);

    double eta = 0.0;
    if (engine.model.kind == hazard::ModelKind::external_scores) {
        surv::SurvivalRecord key;
        key.user_id = user_id;
        key.index_time = tx.timestamp;
        eta = engine.model.predict(key);
    } else {
        eta = engine.model.predict(std::span<const double>(features));
    }
    return hazard::return_period(engine.baseline, eta, horizon_days);
}

std::vector<std::size_t> trailing_checkpoints(const UserProfile& profile, int depth) {
    std::vector<std::size_t> idx;
    std::size_t n = profile.history.size();
    std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, depth)));
    for (std::size_t i = n - take; i < n; ++i) idx.push_back(i);
    return idx;
}

trend::TrendScore score_series(const std::vector<std::pair<double, double>>& series,
                               const trend::TrendParams& params) {
    trend::TrendScore degenerate;
    degenerate.degenerate = true;
    if (series.size() < 2) return degenerate;  // too short to carry a trend
    std::vector<double> t, y;
    t.reserve(series.size());
    y.reserve(series.size());
    for (const auto& [ti, yi] : series) {
        t.push_back(ti);
        y.push_back(yi);
    }
    // Checkpoints can share a timestamp (a counterfactual probe appended at
    // t_rec): no time spread means no trend.
    if (t.back() == t.front()) return degenerate;
    return trend::trend_score(t, y, params);
}

}  // namespace

std::string_view to_string(ActionKind k) {
    switch (k) {
        case ActionKind::none:    return "none";
        case ActionKind::repay:   return "repay";
        case ActionKind::deposit: return "deposit";
    }
    return "?";
}

bool risk_predicate(const std::map<EventType, double>& t_ret,
                    const std::map<EventType, trend::TrendScore>& v) {
    auto t_liq = t_ret.find(EventType::liquidation);
    if (t_liq == t_ret.end()) fail(ErrorKind::config, "missing liquidation return period");

    double t_min = std::numeric_limits<double>::infinity();
    for (const auto& [e, t] : t_ret) t_min = std::min(t_min, t);
    bool time_branch = t_liq->second <= t_min;

    bool trend_branch = false;
    auto v_liq = v.find(EventType::liquidation);
    if (v_liq != v.end() && !v_liq->second.degenerate) {
        // Degenerate (zero-variance) scores are excluded from the minimum;
        // the branch needs at least one other live score to compare against,
        // so a lone liquidation series cannot force interventions vacuously.
        double min_other = std::numeric_limits<double>::infinity();
        bool any_other = false;
        for (const auto& [e, s] : v) {
            if (e == EventType::liquidation || s.degenerate) continue;
            any_other = true;
            min_other = std::min(min_other, s.value);
        }
        trend_branch = any_other && v_liq->second.value <= min_other;
    }
    return time_branch || trend_branch;
}

RiskAssessment assess_risk(const UserProfile& profile, const MarketContext& market,
                           const EngineMap& engines, const trend::TrendParams& trend_params,
                           const AgentParams& params) {
    if (profile.history.empty())
        fail(ErrorKind::input, "profile without a historical checkpoint");
    if (market.market_log == nullptr)
        fail(ErrorKind::config, "market context without an event log");
    for (EventType e : kEventTypes) {
        if (engines.find(e) == engines.end())
            fail(ErrorKind::config,
                 "missing hazard engine for event " + std::string(to_string(e)));
    }

    RiskAssessment out;
    auto checkpoints = trailing_checkpoints(profile, params.history_depth);

    for (EventType e : kEventTypes) {
        const auto& engine = engines.at(e);
        std::vector<std::pair<double, double>> series;
        series.reserve(checkpoints.size());
        for (std::size_t idx : checkpoints) {
            double t_days =
                static_cast<double>(profile.history[idx].timestamp) / kSecondsPerDay;
            double t_ret = checkpoint_return_period(engine, profile.history, idx, market,
                                                    profile.user_id, params.horizon_days,
                                                    market.feature_params);
            series.emplace_back(t_days, t_ret);
        }
        out.t_ret[e] = series.back().second;  // current checkpoint is the last
        out.v[e] = score_series(series, trend_params);
        out.series[e] = std::move(series);
    }
    out.at_risk = risk_predicate(out.t_ret, out.v);
    return out;
}

RiskAssessment assess_counterfactual(const UserProfile& profile, const MarketContext& market,
                                     const EngineMap& engines,
                                     const trend::TrendParams& trend_params,
                                     const AgentParams& params, const RiskAssessment& base,
                                     ActionKind kind, const std::string& asset,
                                     const Amount& amount) {
    if (kind == ActionKind::none) return base;

    // Hypothetical transaction at t_rec extending the history.
    ingest::TxRecord probe;
    probe.timestamp = profile.t_rec;
    probe.user_id = profile.user_id;
    probe.event_type = kind == ActionKind::repay ? EventType::repay : EventType::deposit;
    probe.asset = asset;
    probe.amount = amount;
    probe.price_usd = market.oracle.price_at(asset, profile.t_rec);
    probe.amount_usd = amount.to_double() * probe.price_usd;

    std::vector<ingest::TxRecord> extended = profile.history;
    extended.push_back(probe);
    std::size_t probe_idx = extended.size() - 1;

    RiskAssessment out;
    double t_days = static_cast<double>(profile.t_rec) / kSecondsPerDay;
    for (EventType e : kEventTypes) {
        const auto& engine = engines.at(e);
        double t_ret = checkpoint_return_period(engine, extended, probe_idx, market,
                                                profile.user_id, params.horizon_days,
                                                market.feature_params);
        auto series = base.series.at(e);
        series.emplace_back(t_days, t_ret);
        out.t_ret[e] = t_ret;
        out.v[e] = score_series(series, trend_params);
        out.series[e] = std::move(series);
    }
    out.at_risk = risk_predicate(out.t_ret, out.v);
    return out;
}

Recommendation recommend(const UserProfile& profile, const MarketContext& market,
                         const EngineMap& engines, const RiskAssessment& assessment,
                         const trend::TrendParams& trend_params, const AgentParams& params,
                         const sim::SimState& state) {
    Recommendation rec;
    rec.before = assessment;

    if (!assessment.at_risk) {
        // Organic deposit advisory; nothing to size.
        rec.action_kind = ActionKind::none;
        rec.reason = "not at risk; deposit advisory only";
        return rec;
    }

    double t_repay = assessment.t_ret.at(EventType::repay);
    double t_deposit = assessment.t_ret.at(EventType::deposit);
    ActionKind kind = t_repay < t_deposit ? ActionKind::repay : ActionKind::deposit;

    auto prices = sim::spot_for_state(state, market);
    // Price every wallet asset too: sizing may consult any holding.
    for (const auto& [asset, bal] : state.wallet.balances) {
        if (!prices.count(asset) && bal.is_positive())
            prices[asset] = market.oracle.price_at(asset, state.now);
    }

    std::string asset;
    Amount feasible_max;
    if (kind == ActionKind::repay) {
        // Largest-USD debt; total wallet value bounds the sizing since the
        // feasibility pass may sweep other holdings into the repay.
        double best_usd = 0.0;
        for (const auto& [a, amt] : state.position.debt) {
            double usd = amt.to_double() * lending::price_of(prices, a);
            if (usd > best_usd) {
                best_usd = usd;
                asset = a;
            }
        }
        if (asset.empty()) {
            rec.action_kind = kind;
            rec.infeasible = true;
            rec.reason = "no outstanding debt to repay";
            return rec;
        }
        double wallet_usd = 0.0;
        for (const auto& [a, bal] : state.wallet.balances) {
            if (bal.is_positive()) wallet_usd += bal.to_double() * lending::price_of(prices, a);
        }
        double px = lending::price_of(prices, asset);
        Amount debt_amt = state.position.debt.at(asset);
        feasible_max = min(debt_amt, Amount::from_double(wallet_usd / px));
    } else {
        // Largest-USD wallet holding, deposited directly.
        double best_usd = 0.0;
        for (const auto& [a, bal] : state.wallet.balances) {
            if (!bal.is_positive()) continue;
            double usd = bal.to_double() * lending::price_of(prices, a);
            if (usd > best_usd) {
                best_usd = usd;
                asset = a;
            }
        }
        if (asset.empty()) {
            rec.action_kind = kind;
            rec.infeasible = true;
            rec.reason = "empty wallet; no deposit possible";
            return rec;
        }
        feasible_max = state.wallet.balance(asset);
    }

    rec.action_kind = kind;
    rec.asset = asset;
    if (!feasible_max.is_positive()) {
        rec.infeasible = true;
        rec.reason = "feasible maximum is zero";
        return rec;
    }

    Amount alpha = params.alpha_min;
    Amount m = Amount::from_double(params.multiplier);
    while (alpha <= feasible_max) {
        ++rec.iterations;
        auto probe = assess_counterfactual(profile, market, engines, trend_params, params,
                                           assessment, kind, asset, alpha);
        if (!probe.at_risk) {
            rec.amount = alpha;
            rec.after = std::move(probe);
            return rec;
        }
        alpha = alpha.mul(m);
    }

    rec.amount = feasible_max;
    rec.capped_at_max = true;
    return rec;
}

Recommendation validate_feasibility(Recommendation rec, const lending::WalletState& wallet,
                                    const lending::UserPosition& position,
                                    const lending::SpotPrices& prices, double dust_threshold) {
    if (rec.infeasible || rec.action_kind == ActionKind::none || !rec.amount.is_positive())
        return rec;

    auto holding_usd = [&](const std::string& a, const Amount& bal) {
        auto it = prices.find(a);
        return it == prices.end() ? 0.0 : bal.to_double() * it->second;
    };

    // (1) Wallet feasibility: substitute the largest-USD holding, swept.
    if (wallet.balance(rec.asset) < rec.amount) {
        std::string best;
        Amount best_bal;
        double best_usd = 0.0;
        for (const auto& [a, bal] : wallet.balances) {
            if (!bal.is_positive()) continue;
            double usd = holding_usd(a, bal);
            if (usd > best_usd) {
                best_usd = usd;
                best = a;
                best_bal = bal;
            }
        }
        if (best.empty()) {
            rec.infeasible = true;
            rec.reason = "no wallet asset with positive balance";
            return rec;
        }
        Amount swept = best_bal;
        if (rec.action_kind == ActionKind::repay) {
            // Cap the sweep at the outstanding debt, valued at spot.
            double debt_usd = lending::debt_value_usd(position, prices);
            double px = prices.count(best) ? prices.at(best) : 0.0;
            if (px > 0.0) swept = min(swept, Amount::from_double(debt_usd / px));
        }
        rec.adjustments.push_back("substituted " + rec.asset + " with largest holding " +
                                  best + " (sweep " + swept.to_string() + ")");
        rec.asset = best;
        rec.amount = swept;
    }

    // (2) Atomic dust clearance: a repay must not leave dust-sized debt.
    if (rec.action_kind == ActionKind::repay) {
        double px = prices.count(rec.asset) ? prices.at(rec.asset) : 0.0;
        double debt_usd = lending::debt_value_usd(position, prices);
        double repay_usd = rec.amount.to_double() * px;
        double residual = debt_usd - repay_usd;
        if (residual > 0.0 && residual < dust_threshold && px > 0.0) {
            Amount full = Amount::from_double(debt_usd / px);
            if (wallet.balance(rec.asset) >= full) {
                rec.adjustments.push_back("up-sized repay to full debt closure (residual " +
                                          std::to_string(residual) + " USD below dust)");
                rec.amount = full;
            }
        }
    }
    return rec;
}

double sensitivity_stability(const std::vector<RiskAssessment>& profiles,
                             const trend::TrendParams& params, double perturbation,
                             int trials, std::uint64_t seed) {
    if (profiles.empty()) fail(ErrorKind::input, "no profiles for sensitivity analysis");
    if (!(perturbation > 0.0)) fail(ErrorKind::domain, "perturbation must be positive");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-perturbation, perturbation);

    double total_fraction = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        trend::TrendParams p;
        p.omega = params.omega * (1.0 + noise(rng));
        p.lambda = params.lambda * (1.0 + noise(rng));
        p.gamma = params.gamma * (1.0 + noise(rng));

        std::size_t unchanged = 0;
        for (const auto& prof : profiles) {
            std::map<EventType, trend::TrendScore> v;
            for (const auto& [e, series] : prof.series) v[e] = score_series(series, p);
            bool flag = risk_predicate(prof.t_ret, v);
            if (flag == prof.at_risk) ++unchanged;
        }
        total_fraction += static_cast<double>(unchanged) / static_cast<double>(profiles.size());
    }
    return total_fraction / static_cast<double>(trials);
}

}  // namespace liqguard::agent
