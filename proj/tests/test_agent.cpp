#include <doctest.h>

#include <cmath>

#include "liqguard/agent.hpp"
#include "synthetic.hpp"

using namespace liqguard;
using namespace liqguard::agent;
using synthetic::kDay;

namespace {

trend::TrendScore degenerate_score() {
    trend::TrendScore s;
    s.degenerate = true;
    return s;
}

trend::TrendScore score_of(double v) {
    trend::TrendScore s;
    s.value = v;
    return s;
}

// Borrower profile: one borrow of `debt` USDC at t_rec funded into the
// wallet, nothing else. Wallet at t_rec holds exactly `debt` USDC.
UserProfile borrower_profile(Timestamp t_rec, double debt) {
    UserProfile p;
    p.user_id = "u1";
    p.t_rec = t_rec;
    p.index_event = EventType::borrow;
    p.history = {synthetic::tx(t_rec, "u1", EventType::borrow, "USDC", debt, 1.0)};
    return p;
}

synthetic::World borrower_world(const UserProfile& profile) {
    lending::PriceOracle oracle;
    oracle.series["WETH"] = {{0, 2000.0}};
    oracle.series["USDC"] = {{0, 1.0}};
    return synthetic::World(profile.history, std::move(oracle));
}

double flat_t_ret(double h) { return 7.0 / (1.0 - std::exp(-h)); }

}  // namespace

TEST_CASE("risk_predicate") {
    std::map<EventType, trend::TrendScore> degenerate_v;
    for (EventType e : kEventTypes) degenerate_v[e] = degenerate_score();

    SUBCASE("liquidation as strict time minimum is at risk regardless of V") {
        std::map<EventType, double> t{{EventType::liquidation, 2.0},
                                      {EventType::repay, 5.0},
                                      {EventType::deposit, 10.0},
                                      {EventType::withdraw, 8.0},
                                      {EventType::borrow, 20.0}};
        CHECK(risk_predicate(t, degenerate_v));
    }

    SUBCASE("trend branch alone can trigger") {
        std::map<EventType, double> t{{EventType::liquidation, 50.0},
                                      {EventType::repay, 5.0},
                                      {EventType::deposit, 10.0},
                                      {EventType::withdraw, 8.0},
                                      {EventType::borrow, 20.0}};
        std::map<EventType, trend::TrendScore> v;
        for (EventType e : kEventTypes) v[e] = score_of(1.0);
        v[EventType::liquidation] = score_of(-2.0);  // strictly lowest
        CHECK(risk_predicate(t, v));
    }

    SUBCASE("neither branch: not at risk") {
        std::map<EventType, double> t{{EventType::liquidation, 50.0},
                                      {EventType::repay, 5.0},
                                      {EventType::deposit, 10.0},
                                      {EventType::withdraw, 8.0},
                                      {EventType::borrow, 20.0}};
        std::map<EventType, trend::TrendScore> v;
        for (EventType e : kEventTypes) v[e] = score_of(1.0);
        v[EventType::liquidation] = score_of(2.0);
        CHECK_FALSE(risk_predicate(t, v));
    }

    SUBCASE("ties count as minimum") {
        std::map<EventType, double> t{{EventType::liquidation, 5.0},
                                      {EventType::repay, 5.0},
                                      {EventType::deposit, 10.0},
                                      {EventType::withdraw, 8.0},
                                      {EventType::borrow, 20.0}};
        CHECK(risk_predicate(t, degenerate_v));
    }

    SUBCASE("degenerate liquidation trend disables the trend branch") {
        std::map<EventType, double> t{{EventType::liquidation, 50.0},
                                      {EventType::repay, 5.0},
                                      {EventType::deposit, 10.0},
                                      {EventType::withdraw, 8.0},
                                      {EventType::borrow, 20.0}};
        auto v = degenerate_v;
        v[EventType::repay] = score_of(10.0);
        CHECK_FALSE(risk_predicate(t, v));
    }

    SUBCASE("at-risk flag is invariant under monotone transforms of T") {
        std::map<EventType, double> t{{EventType::liquidation, 3.0},
                                      {EventType::repay, 5.0},
                                      {EventType::deposit, 10.0},
                                      {EventType::withdraw, 8.0},
                                      {EventType::borrow, 20.0}};
        bool base = risk_predicate(t, degenerate_v);
        for (auto transform : {+[](double x) { return 2.0 * x + 1.0; },
                               +[](double x) { return std::log(x); },
                               +[](double x) { return x * x; }}) {
            auto mapped = t;
            for (auto& [e, val] : mapped) val = transform(val);
            CHECK(risk_predicate(mapped, degenerate_v) == base);
        }
    }
}

TEST_CASE("assess_risk on a one-checkpoint borrower") {
    auto profile = borrower_profile(10 * kDay, 1000.0);
    auto world = borrower_world(profile);
    auto engines = synthetic::never_flip_engines();

    auto a = assess_risk(profile, world.market, engines, {}, {});
    CHECK(a.at_risk);
    CHECK(a.t_ret.at(EventType::liquidation) == doctest::Approx(flat_t_ret(5.0)));
    CHECK(a.t_ret.at(EventType::deposit) == doctest::Approx(flat_t_ret(0.5)));
    // single checkpoint: every trend series is degenerate
    for (EventType e : kEventTypes) CHECK(a.v.at(e).degenerate);

    SUBCASE("missing engine is a configuration error") {
        engines.erase(EventType::borrow);
        CHECK_THROWS_AS(assess_risk(profile, world.market, engines, {}, {}), Error);
    }
}

TEST_CASE("recommend") {
    AgentParams params;
    params.alpha_min = Amount::from_int(1);
    trend::TrendParams tp;

    SUBCASE("not at risk: zero-amount advisory, no sizing loop") {
        auto profile = borrower_profile(10 * kDay, 1000.0);
        auto world = borrower_world(profile);
        auto engines = synthetic::safe_engines();
        auto state = sim::reconstruct_at(profile, world.market);
        auto a = assess_risk(profile, world.market, engines, tp, params);
        CHECK_FALSE(a.at_risk);
        auto rec = recommend(profile, world.market, engines, a, tp, params, state);
        CHECK(rec.action_kind == ActionKind::none);
        CHECK(rec.iterations == 0);
        CHECK(rec.amount.is_zero());
    }

    SUBCASE("risk flips at the first probe") {
        auto profile = borrower_profile(10 * kDay, 1000.0);
        auto world = borrower_world(profile);
        // beta = +1 anchored at the 1000 USD borrow: any small probe looks
        // far safer than the anchor, so the first rung already clears.
        auto engines = synthetic::flip_engines(1.0, 1000.0);
        auto state = sim::reconstruct_at(profile, world.market);
        auto a = assess_risk(profile, world.market, engines, tp, params);
        REQUIRE(a.at_risk);
        auto rec = recommend(profile, world.market, engines, a, tp, params, state);
        CHECK(rec.action_kind == ActionKind::repay);
        CHECK(rec.amount == params.alpha_min);
        CHECK(rec.iterations == 1);
        CHECK_FALSE(rec.capped_at_max);
        REQUIRE(rec.after.has_value());
        CHECK_FALSE(rec.after->at_risk);
    }

    SUBCASE("ladder exhausts against an 800 USDC wallet and caps") {
        auto profile = borrower_profile(10 * kDay, 800.0);
        auto world = borrower_world(profile);
        auto engines = synthetic::never_flip_engines();  // beta = 0: probes never flip
        auto state = sim::reconstruct_at(profile, world.market);
        CHECK(state.wallet.balance("USDC") == Amount::from_int(800));
        auto a = assess_risk(profile, world.market, engines, tp, params);
        REQUIRE(a.at_risk);
        auto rec = recommend(profile, world.market, engines, a, tp, params, state);
        CHECK(rec.action_kind == ActionKind::repay);  // T_repay 8.1d < T_deposit 17.8d
        CHECK(rec.capped_at_max);
        CHECK(rec.amount == Amount::from_int(800));
        CHECK(rec.iterations == 10);  // probes 1,2,...,512
    }

    SUBCASE("flip mid-ladder and within-factor-m minimality") {
        // Earlier 10k borrow funds the wallet; the checkpoint borrow of
        // 1000 USD anchors the liquidation engine. With beta = -1 the flag
        // clears when exp(log1p(anchor) - log1p(alpha)) * 5 < 2, i.e. at
        // log1p(alpha) > log1p(1000) + ln 2.5: first rung 4096.
        UserProfile profile;
        profile.user_id = "u1";
        profile.t_rec = 10 * kDay;
        profile.index_event = EventType::borrow;
        profile.history = {
            synthetic::tx(9 * kDay, "u1", EventType::borrow, "USDC", 10000.0, 1.0),
            synthetic::tx(10 * kDay, "u1", EventType::borrow, "USDC", 1000.0, 1.0)};
        auto world = borrower_world(profile);
        auto engines = synthetic::flip_engines(-1.0, 1000.0);
        AgentParams shallow = params;
        shallow.history_depth = 1;  // single checkpoint: trend stays degenerate
        auto state = sim::reconstruct_at(profile, world.market);
        auto a = assess_risk(profile, world.market, engines, tp, shallow);
        REQUIRE(a.at_risk);
        auto rec = recommend(profile, world.market, engines, a, tp, shallow, state);
        CHECK(rec.amount == Amount::from_int(4096));
        CHECK(rec.iterations == 13);  // probes 1,2,...,4096
        CHECK_FALSE(rec.capped_at_max);

        // the previous rung still shows risk
        Amount prev = Amount::from_int(2048);
        auto probe = assess_counterfactual(profile, world.market, engines, tp, shallow, a,
                                           ActionKind::repay, "USDC", prev);
        CHECK(probe.at_risk);
    }

    SUBCASE("debt with an empty wallet yields an infeasible result") {
        UserProfile profile;
        profile.user_id = "broke";
        profile.t_rec = 10 * kDay;
        profile.index_event = EventType::deposit;
        // the borrow funds the deposit; the wallet ends empty with open debt
        profile.history = {
            synthetic::tx(9 * kDay, "broke", EventType::borrow, "USDC", 500.0, 1.0),
            synthetic::tx(10 * kDay, "broke", EventType::deposit, "USDC", 500.0, 1.0)};

        lending::PriceOracle oracle;
        oracle.series["WETH"] = {{0, 2000.0}};
        oracle.series["USDC"] = {{0, 1.0}};
        synthetic::World world(profile.history, std::move(oracle));
        auto engines = synthetic::never_flip_engines();
        auto state = sim::reconstruct_at(profile, world.market);
        CHECK(state.wallet.balance("USDC").is_zero());
        auto a = assess_risk(profile, world.market, engines, tp, params);
        REQUIRE(a.at_risk);
        auto rec = recommend(profile, world.market, engines, a, tp, params, state);
        CHECK(rec.infeasible);
    }
}

TEST_CASE("validate_feasibility") {
    lending::SpotPrices prices{{"WETH", 2000.0}, {"USDC", 1.0}};

    SUBCASE("wallet shortfall substitutes the largest holding, swept and capped at debt") {
        Recommendation rec;
        rec.action_kind = ActionKind::repay;
        rec.asset = "USDC";
        rec.amount = Amount::from_int(500);
        lending::WalletState wallet;
        wallet.balances["USDC"] = Amount::from_int(200);
        wallet.balances["WETH"] = Amount::from_int(1);  // $2000, the largest holding
        lending::UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(5000);

        auto out = validate_feasibility(rec, wallet, pos, prices, 1.0);
        CHECK(out.asset == "WETH");
        CHECK(out.amount == Amount::from_int(1));  // full sweep, debt is larger
        CHECK(out.adjustments.size() == 1);
    }

    SUBCASE("repay leaving dust is up-sized to full closure") {
        Recommendation rec;
        rec.action_kind = ActionKind::repay;
        rec.asset = "USDC";
        rec.amount = Amount::parse("49.50");
        lending::WalletState wallet;
        wallet.balances["USDC"] = Amount::from_int(100);
        lending::UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(50);

        auto out = validate_feasibility(rec, wallet, pos, prices, 1.0);
        CHECK(out.amount == Amount::from_int(50));
        CHECK(out.adjustments.size() == 1);
    }

    SUBCASE("feasible non-dust recommendation passes through unchanged") {
        Recommendation rec;
        rec.action_kind = ActionKind::repay;
        rec.asset = "USDC";
        rec.amount = Amount::from_int(100);
        lending::WalletState wallet;
        wallet.balances["USDC"] = Amount::from_int(500);
        lending::UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(400);

        auto out = validate_feasibility(rec, wallet, pos, prices, 1.0);
        CHECK(out.asset == "USDC");
        CHECK(out.amount == Amount::from_int(100));
        CHECK(out.adjustments.empty());
    }

    SUBCASE("no positive balance at all is infeasible") {
        Recommendation rec;
        rec.action_kind = ActionKind::repay;
        rec.asset = "USDC";
        rec.amount = Amount::from_int(10);
        lending::WalletState wallet;
        lending::UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(50);
        auto out = validate_feasibility(rec, wallet, pos, prices, 1.0);
        CHECK(out.infeasible);
    }
}

TEST_CASE("sensitivity_stability") {
    // Profile whose risk comes from the parameter-free time branch.
    RiskAssessment time_bound;
    for (EventType e : kEventTypes) {
        time_bound.t_ret[e] = e == EventType::liquidation ? 2.0 : 10.0;
        time_bound.series[e] = {{0.0, 10.0}, {1.0, 11.0}, {2.0, 9.0}, {3.0, 12.0}};
    }
    time_bound.at_risk = true;

    SUBCASE("time-branch profiles are stable at any perturbation") {
        std::vector<RiskAssessment> profiles{time_bound};
        CHECK(sensitivity_stability(profiles, {}, 0.5, 50, 7) == doctest::Approx(1.0));
    }

    SUBCASE("vanishing perturbation approaches full stability") {
        RiskAssessment trendy;
        for (EventType e : kEventTypes) {
            trendy.t_ret[e] = 10.0;  // tie across events: time branch true
            trendy.series[e] = {{0.0, 5.0}, {1.0, 6.0}, {2.0, 4.0}};
        }
        trendy.at_risk = true;
        std::vector<RiskAssessment> profiles{time_bound, trendy};
        CHECK(sensitivity_stability(profiles, {}, 1e-9, 20, 7) == doctest::Approx(1.0));
    }

    SUBCASE("input validation") {
        CHECK_THROWS_AS(sensitivity_stability({}, {}, 0.1, 10, 7), Error);
        std::vector<RiskAssessment> profiles{time_bound};
        CHECK_THROWS_AS(sensitivity_stability(profiles, {}, 0.0, 10, 7), Error);
    }
}
