#include "liqguard/replay.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace liqguard::replay {

namespace {

// Applies the validated recommendation at t_rec. Repays may spend a wallet
// asset different from the debt asset: the spent value converts at spot
// prices into the largest-USD debt (no slippage modelled).
void apply_recommendation(sim::SimState& s, const MarketContext& market,
                          const agent::Recommendation& rec) {
    if (rec.action_kind == agent::ActionKind::none || rec.infeasible ||
        !rec.amount.is_positive())
        return;

    Amount spend = min(rec.amount, s.wallet.balance(rec.asset));
    if (!spend.is_positive()) return;

    if (rec.action_kind == agent::ActionKind::deposit) {
        s.wallet.debit(rec.asset, spend);
        s.position.collateral[rec.asset] += spend;
        s.last_interaction = s.now;
        return;
    }

    // Repay. Direct when the spent asset is the debt asset, value-converted
    // into the largest-USD debt otherwise.
    auto direct = s.position.debt.find(rec.asset);
    if (direct != s.position.debt.end() && direct->second.is_positive()) {
        Amount repaid = min(spend, direct->second);
        s.wallet.debit(rec.asset, repaid);
        direct->second -= repaid;
        s.last_interaction = s.now;
        return;
    }

    double spend_px = market.oracle.price_at(rec.asset, s.now);
    double budget_usd = spend.to_double() * spend_px;
    std::string target;
    double target_usd = 0.0;
    for (const auto& [a, amt] : s.position.debt) {
        double usd = amt.to_double() * market.oracle.price_at(a, s.now);
        if (usd > target_usd) {
            target_usd = usd;
            target = a;
        }
    }
    if (target.empty()) return;
    double repay_usd = std::min(budget_usd, target_usd);
    double target_px = market.oracle.price_at(target, s.now);
    Amount repaid = min(s.position.debt[target], Amount::from_double(repay_usd / target_px));
    Amount spent = min(spend, Amount::from_double(repay_usd / spend_px));
    s.position.debt[target] -= repaid;
    s.wallet.debit(rec.asset, spent);
    s.last_interaction = s.now;
}

// Detection sweep over (s.now, seg_end]: builds the no-action trajectory,
// runs the six strategies, and executes every confirmed liquidation in turn.
// Returns the number of detection rounds run; stops when the segment is
// clear or the position is terminal.
std::size_t detect_segment(sim::SimState& s, const MarketContext& market,
                           const ReplayConfig& config, Timestamp seg_end, ReplayLeg& leg) {
    std::size_t rounds = 0;
    while (s.now < seg_end) {
        detect::PositionTrajectory::Inputs in;
        in.position = s.position;
        in.reserves = s.reserves;
        in.configs = &market.configs;
        in.oracle = &market.oracle;
        in.t_start = s.now;
        in.t_end = seg_end;
        in.last_interaction = s.last_interaction;
        in.dust_threshold_usd = lending::position_dust_threshold(s.position, market.configs);
        detect::PositionTrajectory traj(std::move(in));

        std::vector<std::vector<detect::LiquidationEvent>> results;
        results.reserve(detect::kStrategies.size());
        for (auto strategy : detect::kStrategies)
            results.push_back(detect::detect(strategy, traj, config.detection));
        auto cons = detect::consensus(results, config.detection.consensus_tolerance_s);

        ++rounds;
        leg.consensus_agreement += cons.agreement;  // normalized by the caller
        auto hf_now = traj.hf_at(s.now);
        leg.hf_checkpoints.emplace_back(
            s.now, hf_now.no_debt ? std::numeric_limits<double>::infinity() : hf_now.value);

        if (cons.confirmed.empty()) {
            sim::advance_to(s, market, seg_end);
            return rounds;
        }

        Timestamp t_liq = cons.confirmed.front().time;
        sim::advance_to(s, market, t_liq);
        auto prices = sim::spot_for_state(s, market);
        double gap_days =
            std::max(0.0, static_cast<double>(t_liq - s.last_interaction) / kSecondsPerDay);
        double thr = detect::effective_threshold(config.detection.margin, gap_days);

        lending::UserPosition before = s.position;
        // The detector and the executor advance balances through different
        // arithmetic paths; the epsilon absorbs their last-ulp disagreement
        // at an exact threshold crossing.
        auto result =
            lending::execute_liquidation(s.position, prices, market.configs,
                                         thr + lending::kUsdEps);

        LiquidationHit hit;
        hit.time = t_liq;
        hit.hf_at_detection = cons.confirmed.front().hf_at_detection;
        hit.debt_to_cover_ratio = result.debt_to_cover_ratio;
        detect::LiquidationEvent ev = cons.confirmed.front();
        ev.debt_to_cover_ratio = result.debt_to_cover_ratio;
        hit.classification = detect::classify(
            ev, before, prices, lending::position_dust_threshold(before, market.configs));
        leg.liquidations.push_back(hit);
        leg.liquidated = true;

        // Terminal when nothing is left to seize: further detection cannot
        // make economic progress against a bad-debt stub.
        if (lending::collateral_value_usd(s.position, prices) <= lending::kUsdEps &&
            s.position.has_debt()) {
            sim::advance_to(s, market, seg_end);
            return rounds;
        }
        if (s.now >= seg_end) return rounds;
    }
    return rounds;
}

ReplayOutcome make_outcome(const UserProfile& profile) {
    ReplayOutcome out;
    out.user_id = profile.user_id;
    out.t_rec = profile.t_rec;
    return out;
}

}  // namespace

ReplayLeg fork_and_replay(const UserProfile& profile, const MarketContext& market,
                          const ReplayConfig& config,
                          const std::optional<agent::Recommendation>& action) {
    if (config.window_end <= profile.t_rec)
        fail(ErrorKind::input, "profile has no future window beyond t_rec");

    ReplayLeg leg;
    leg.consensus_agreement = 0.0;
    std::size_t rounds = 0;

    sim::SimState s = sim::reconstruct_at(profile, market);
    if (action) apply_recommendation(s, market, *action);

    for (const auto& tx : profile.future) {
        if (tx.timestamp > config.window_end) break;
        rounds += detect_segment(s, market, config, tx.timestamp, leg);

        if (tx.event_type == EventType::liquidation) {
            // Recorded liquidations are ground-truth markers; the simulator
            // finds its own. Zero reconstructed debt here flags an artifact.
            if (!s.position.has_debt()) leg.zero_debt_artifact = true;
            continue;
        }
        auto outcome = sim::apply_tx(s, market, tx, /*apply_liquidation_rows=*/false);
        if (!outcome.applied) ++leg.skipped_futures;
    }
    rounds += detect_segment(s, market, config, config.window_end, leg);

    leg.consensus_agreement =
        rounds == 0 ? 1.0 : leg.consensus_agreement / static_cast<double>(rounds);
    return leg;
}

void apply_exclusions(std::vector<ReplayOutcome>& outcomes, double block_time_s,
                      double min_lead_s) {
    double lead = min_lead_s > 0.0 ? min_lead_s : block_time_s;
    for (auto& out : outcomes) {
        out.excluded.reset();
        const auto& base = out.baseline;
        bool all_dust = base.liquidated;
        for (const auto& hit : base.liquidations) {
            if (hit.classification != detect::LiquidationClass::dust) all_dust = false;
        }
        if (base.liquidated && all_dust) {
            out.excluded = "dust_only";
            continue;
        }
        if (base.liquidated &&
            static_cast<double>(base.liquidations.front().time - out.t_rec) < lead) {
            out.excluded = "too_fast";
            continue;
        }
        if (base.zero_debt_artifact) {
            out.excluded = "zero_debt_artifact";
            continue;
        }
    }
}

CohortMetrics compute_metrics(const std::vector<ReplayOutcome>& outcomes) {
    CohortMetrics m;
    double agreement_sum = 0.0;
    std::size_t agreement_n = 0;

    for (const auto& out : outcomes) {
        if (out.excluded) {
            ++m.n_excluded[*out.excluded];
            if (*out.excluded == "dust_only") ++m.dust_avoided;
            continue;
        }
        ++m.n_evaluated;
        agreement_sum += out.baseline.consensus_agreement + out.intervention.consensus_agreement;
        agreement_n += 2;
        if (out.baseline.liquidated) {
            ++m.baseline_liquidated;
            if (!out.intervention.liquidated) ++m.rescued;
        } else if (out.intervention.liquidated) {
            ++m.worsened;
        }
    }
    if (m.baseline_liquidated > 0)
        m.salvage_rate =
            static_cast<double>(m.rescued) / static_cast<double>(m.baseline_liquidated);
    m.worsening_rate = m.n_evaluated == 0
                           ? 0.0
                           : static_cast<double>(m.worsened) / static_cast<double>(m.n_evaluated);
    m.consensus_agreement =
        agreement_n == 0 ? 1.0 : agreement_sum / static_cast<double>(agreement_n);
    return m;
}

CohortResult evaluate_cohort(const std::vector<UserProfile>& profiles,
                             const MarketContext& market,
                             const std::map<EventType, EngineMap>& engines_by_index,
                             const trend::TrendParams& trend_params,
                             const agent::AgentParams& agent_params,
                             const ReplayConfig& config, int workers) {
    struct Slot {
        ReplayOutcome outcome;
        std::string error;
        bool failed = false;
    };
    std::vector<Slot> slots(profiles.size());

    auto run_one = [&](std::size_t i) {
        const auto& profile = profiles[i];
        Slot& slot = slots[i];
        slot.outcome = make_outcome(profile);
        try {
            slot.outcome.baseline = fork_and_replay(profile, market, config, std::nullopt);

            // Exclusion check on the baseline only; excluded profiles never
            // reach the agent.
            std::vector<ReplayOutcome> probe{slot.outcome};
            apply_exclusions(probe, config.block_time_s, config.min_lead_s);
            if (probe.front().excluded) {
                slot.outcome.excluded = probe.front().excluded;
                return;
            }

            auto engines_it = engines_by_index.find(profile.index_event);
            if (engines_it == engines_by_index.end())
                fail(ErrorKind::config, "no engines for index event " +
                                            std::string(to_string(profile.index_event)));
            const EngineMap& engines = engines_it->second;

            auto state = sim::reconstruct_at(profile, market);
            auto assessment =
                agent::assess_risk(profile, market, engines, trend_params, agent_params);
            auto rec = agent::recommend(profile, market, engines, assessment, trend_params,
                                        agent_params, state);
            auto prices = sim::spot_for_state(state, market);
            for (const auto& [asset, bal] : state.wallet.balances) {
                if (!prices.count(asset) && bal.is_positive())
                    prices[asset] = market.oracle.price_at(asset, state.now);
            }
            rec = agent::validate_feasibility(
                rec, state.wallet, state.position, prices,
                lending::position_dust_threshold(state.position, market.configs));
            slot.outcome.action = rec;

            std::optional<agent::Recommendation> injected;
            if (!rec.infeasible && rec.action_kind != agent::ActionKind::none &&
                rec.amount.is_positive())
                injected = rec;
            slot.outcome.intervention = fork_and_replay(profile, market, config, injected);

            if (!slot.outcome.baseline.liquidations.empty())
                slot.outcome.baseline_classification =
                    slot.outcome.baseline.liquidations.front().classification;
            if (!slot.outcome.intervention.liquidations.empty())
                slot.outcome.intervention_classification =
                    slot.outcome.intervention.liquidations.front().classification;
        } catch (const Error& e) {
            slot.failed = true;
            slot.error = profile.user_id + "@" + std::to_string(profile.t_rec) + ": " + e.what();
        }
    };

    int n_workers = workers > 0
                        ? workers
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (n_workers <= 1 || profiles.size() <= 1) {
        for (std::size_t i = 0; i < profiles.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= profiles.size()) return;
                    run_one(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    CohortResult result;
    for (auto& slot : slots) {
        if (slot.failed) {
            result.errors.push_back(std::move(slot.error));
        } else {
            result.outcomes.push_back(std::move(slot.outcome));
        }
    }
    std::sort(result.outcomes.begin(), result.outcomes.end(),
              [](const ReplayOutcome& a, const ReplayOutcome& b) {
                  if (a.user_id != b.user_id) return a.user_id < b.user_id;
                  return a.t_rec < b.t_rec;
              });
    std::sort(result.errors.begin(), result.errors.end());
    result.metrics = compute_metrics(result.outcomes);
    return result;
}

std::vector<UserProfile> sample_cohort(const ingest::EventLog& log, const SamplingParams& params,
                                       const Amount& safety_factor, std::uint64_t seed) {
    if (log.empty()) return {};
    const auto& records = log.records;
    auto pct_time = [&](double pct) {
        auto idx = static_cast<std::size_t>(pct * static_cast<double>(records.size() - 1));
        return records[std::min(idx, records.size() - 1)].timestamp;
    };
    Timestamp t_lo = pct_time(params.window_start_pct);
    Timestamp t_hi = pct_time(params.window_end_pct);
    Timestamp global_end = records.back().timestamp;

    struct Candidate {
        std::string user_id;
        std::size_t position;  // index within the user's event list
        Timestamp t_rec;
        double dt_to_outcome = std::numeric_limits<double>::infinity();
    };

    std::mt19937_64 rng(seed);
    std::map<std::pair<std::string, Timestamp>, Candidate> selected;

    for (EventType index_event : kEventTypes) {
        for (EventType outcome_event : kEventTypes) {
            std::vector<Candidate> pool;
            for (const auto& [user, indices] : log.by_user) {
                for (std::size_t i = 0; i < indices.size(); ++i) {
                    const auto& rec = records[indices[i]];
                    if (rec.event_type != index_event) continue;
                    if (rec.timestamp < t_lo || rec.timestamp > t_hi) continue;
                    if (rec.timestamp >= global_end) continue;  // needs a future window
                    Candidate c;
                    c.user_id = user;
                    c.position = i;
                    c.t_rec = rec.timestamp;
                    for (std::size_t j = i + 1; j < indices.size(); ++j) {
                        const auto& next = records[indices[j]];
                        if (next.event_type == outcome_event &&
                            next.timestamp > rec.timestamp) {
                            c.dt_to_outcome =
                                static_cast<double>(next.timestamp - rec.timestamp);
                            break;
                        }
                    }
                    pool.push_back(std::move(c));
                }
            }
            if (pool.empty()) continue;

            if (outcome_event == EventType::liquidation) {
                // Most imminent liquidations first.
                std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
                    if (a.dt_to_outcome != b.dt_to_outcome)
                        return a.dt_to_outcome < b.dt_to_outcome;
                    if (a.user_id != b.user_id) return a.user_id < b.user_id;
                    return a.t_rec < b.t_rec;
                });
            } else {
                std::shuffle(pool.begin(), pool.end(), rng);
            }
            std::size_t take = std::min(params.per_pair, pool.size());
            for (std::size_t i = 0; i < take; ++i) {
                auto key = std::make_pair(pool[i].user_id, pool[i].t_rec);
                selected.emplace(key, pool[i]);
            }
        }
    }

    std::vector<UserProfile> cohort;
    cohort.reserve(selected.size());
    for (const auto& [key, cand] : selected) {
        UserProfile p;
        p.user_id = cand.user_id;
        p.t_rec = cand.t_rec;
        auto events = log.user_events(cand.user_id);
        p.index_event = events[cand.position].event_type;
        for (std::size_t i = 0; i <= cand.position; ++i) p.history.push_back(events[i]);
        for (std::size_t i = cand.position + 1; i < events.size(); ++i)
            p.future.push_back(events[i]);
        p.wallet0 = ingest::infer_wallet_balances(events, safety_factor);
        cohort.push_back(std::move(p));
    }
    return cohort;
}

}  // namespace liqguard::replay
