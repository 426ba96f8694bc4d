#include <doctest.h>

#include <cmath>
#include <random>

#include "liqguard/lending_core.hpp"

using namespace liqguard;
using namespace liqguard::lending;

namespace {

ReserveConfigMap two_asset_configs() {
    ReserveConfigMap configs;
    ReserveConfig weth;
    weth.asset = "WETH";
    weth.ltv = 0.75;
    weth.liquidation_threshold = 0.80;
    weth.liquidation_bonus = 0.05;
    configs["WETH"] = weth;
    ReserveConfig usdc;
    usdc.asset = "USDC";
    usdc.ltv = 0.80;
    usdc.liquidation_threshold = 0.85;
    configs["USDC"] = usdc;
    return configs;
}

}  // namespace

TEST_CASE("borrow_rate: kinked two-slope curve") {
    RateParams p{0.0, 0.04, 0.60, 0.80};
    CHECK(borrow_rate(0.0, p) == doctest::Approx(0.0));
    CHECK(borrow_rate(0.80, p) == doctest::Approx(0.04));
    CHECK(borrow_rate(0.90, p) == doctest::Approx(0.34));  // 0.04 + 0.60*(0.10/0.20)
    // continuity at the kink
    CHECK(borrow_rate(0.80 - 1e-12, p) == doctest::Approx(borrow_rate(0.80 + 1e-12, p)));
    CHECK_THROWS_AS(borrow_rate(-0.1, p), Error);
    CHECK_THROWS_AS(borrow_rate(1.1, p), Error);
}

TEST_CASE("accrue: compounded debt index, linear supply index") {
    ReserveConfig cfg;
    cfg.asset = "USDC";
    cfg.rate_params = {0.10, 0.0, 0.0, 0.80};  // flat 10%/yr regardless of utilization

    SUBCASE("zero elapsed time leaves state unchanged") {
        ReserveState s;
        s.last_accrual = 1000;
        ReserveState before = s;
        accrue(s, cfg, 1000);
        CHECK(s.borrow_index == before.borrow_index);
        CHECK(s.liquidity_index == before.liquidity_index);
    }

    SUBCASE("one year at 10 percent compounds e^0.1") {
        ReserveState s;
        s.total_liquidity = 50.0;
        s.total_debt = 50.0;  // utilization 0.5
        s.last_accrual = 0;
        accrue(s, cfg, static_cast<Timestamp>(kSecondsPerYear));
        CHECK(s.borrow_index == doctest::Approx(std::exp(0.1)).epsilon(1e-12));
        // supply rate = 0.10 * 0.5 = 0.05 linear
        CHECK(s.liquidity_index == doctest::Approx(1.05).epsilon(1e-12));
    }

    SUBCASE("time travel is rejected") {
        ReserveState s;
        s.last_accrual = 500;
        CHECK_THROWS_AS(accrue(s, cfg, 400), Error);
    }

    SUBCASE("associativity over random splits") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<Timestamp> span(1, 86400 * 400);
        for (int trial = 0; trial < 50; ++trial) {
            ReserveState one, two;
            one.total_liquidity = two.total_liquidity = 30.0;
            one.total_debt = two.total_debt = 70.0;
            Timestamp t1 = span(rng);
            Timestamp t2 = t1 + span(rng);
            accrue(one, cfg, t2);
            accrue(two, cfg, t1);
            accrue(two, cfg, t2);
            CHECK(std::abs(one.borrow_index - two.borrow_index) /
                      one.borrow_index < 1e-9);
            CHECK(std::abs(one.liquidity_index - two.liquidity_index) /
                      one.liquidity_index < 1e-9);
        }
    }

    SUBCASE("indexes never decrease") {
        ReserveState s;
        s.total_liquidity = 20.0;
        s.total_debt = 80.0;
        double prev_b = s.borrow_index, prev_l = s.liquidity_index;
        for (Timestamp t = 3600; t <= 360000; t += 3600) {
            accrue(s, cfg, t);
            CHECK(s.borrow_index >= prev_b);
            CHECK(s.liquidity_index >= prev_l);
            prev_b = s.borrow_index;
            prev_l = s.liquidity_index;
        }
    }
}

TEST_CASE("health_factor") {
    auto configs = two_asset_configs();

    SUBCASE("single-asset textbook case: 10k at LT 0.80 against 6k debt") {
        UserPosition pos;
        pos.collateral["WETH"] = Amount::from_int(5);  // 5 WETH @ $2000
        pos.debt["USDC"] = Amount::from_int(6000);
        SpotPrices prices{{"WETH", 2000.0}, {"USDC", 1.0}};
        auto hf = health_factor(pos, prices, configs);
        CHECK_FALSE(hf.no_debt);
        CHECK(hf.value == doctest::Approx(8000.0 / 6000.0).epsilon(1e-12));
        CHECK(std::abs(hf.value - 1.3333) < 1e-3);
    }

    SUBCASE("zero debt is the NO_DEBT sentinel") {
        UserPosition pos;
        pos.collateral["WETH"] = Amount::from_int(1);
        SpotPrices prices{{"WETH", 2000.0}};
        auto hf = health_factor(pos, prices, configs);
        CHECK(hf.no_debt);
        CHECK_FALSE(hf.below(1.0));
    }

    SUBCASE("mixed collateral") {
        UserPosition pos;
        pos.collateral["USDC"] = Amount::from_int(5000);  // LT 0.85
        pos.collateral["WETH"] = Amount::from_int(1);     // LT 0.80 @ $2000
        pos.debt["USDC"] = Amount::from_int(3000);
        SpotPrices prices{{"WETH", 2000.0}, {"USDC", 1.0}};
        auto hf = health_factor(pos, prices, configs);
        CHECK(hf.value == doctest::Approx(1.95).epsilon(1e-12));  // (4250+1600)/3000
    }

    SUBCASE("missing price is a data error naming the asset") {
        UserPosition pos;
        pos.collateral["WETH"] = Amount::from_int(1);
        pos.debt["USDC"] = Amount::from_int(10);
        SpotPrices prices{{"WETH", 2000.0}};
        CHECK_THROWS_WITH_AS(health_factor(pos, prices, configs),
                             doctest::Contains("USDC"), Error);
    }

    SUBCASE("scale invariance: HF unchanged under uniform price scaling") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> amt(0.1, 100.0);
        std::uniform_real_distribution<double> scale(0.01, 100.0);
        for (int trial = 0; trial < 100; ++trial) {
            UserPosition pos;
            pos.collateral["WETH"] = Amount::from_double(amt(rng));
            pos.collateral["USDC"] = Amount::from_double(amt(rng) * 100);
            pos.debt["USDC"] = Amount::from_double(amt(rng) * 50);
            SpotPrices prices{{"WETH", 1800.0}, {"USDC", 1.0}};
            double c = scale(rng);
            SpotPrices scaled{{"WETH", 1800.0 * c}, {"USDC", 1.0 * c}};
            auto a = health_factor(pos, prices, two_asset_configs());
            auto b = health_factor(pos, scaled, two_asset_configs());
            CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
        }
    }
}

TEST_CASE("apply_user_action") {
    auto configs = two_asset_configs();
    SpotPrices prices{{"WETH", 2000.0}, {"USDC", 1.0}};

    SUBCASE("deposit moves funds from wallet to collateral") {
        UserPosition pos;
        WalletState wallet;
        wallet.balances["USDC"] = Amount::from_int(150);
        auto out = apply_user_action(pos, wallet,
                                     {EventType::deposit, "USDC", Amount::from_int(100)},
                                     prices, configs);
        CHECK(out.applied);
        CHECK(pos.collateral["USDC"] == Amount::from_int(100));
        CHECK(wallet.balance("USDC") == Amount::from_int(50));
    }

    SUBCASE("deposit with insufficient wallet is rejected") {
        UserPosition pos;
        WalletState wallet;
        wallet.balances["USDC"] = Amount::from_int(10);
        auto out = apply_user_action(pos, wallet,
                                     {EventType::deposit, "USDC", Amount::from_int(100)},
                                     prices, configs);
        CHECK_FALSE(out.applied);
        CHECK(pos.collateral.empty());
        CHECK(wallet.balance("USDC") == Amount::from_int(10));
    }

    SUBCASE("repay above debt repays exactly the debt") {
        UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(300);
        WalletState wallet;
        wallet.balances["USDC"] = Amount::from_int(1000);
        auto out = apply_user_action(pos, wallet,
                                     {EventType::repay, "USDC", Amount::from_int(500)},
                                     prices, configs);
        CHECK(out.applied);
        CHECK(pos.debt["USDC"].is_zero());
        CHECK(wallet.balance("USDC") == Amount::from_int(700));  // only 300 spent
    }

    SUBCASE("withdraw that would push HF below 1 is rejected") {
        UserPosition pos;
        pos.collateral["WETH"] = Amount::from_int(1);  // $2000, LT 0.80 -> 1600
        pos.debt["USDC"] = Amount::from_int(1300);     // HF ~1.23
        WalletState wallet;
        auto out = apply_user_action(pos, wallet,
                                     {EventType::withdraw, "WETH", Amount::parse("0.3")},
                                     prices, configs);
        CHECK_FALSE(out.applied);  // 0.7 WETH -> HF = 1120/1300 < 1
        CHECK(pos.collateral["WETH"] == Amount::from_int(1));
        auto ok = apply_user_action(pos, wallet,
                                    {EventType::withdraw, "WETH", Amount::parse("0.1")},
                                    prices, configs);
        CHECK(ok.applied);  // 0.9 WETH -> HF = 1440/1300 > 1
    }

    SUBCASE("repay and deposit strictly improve HF, borrow and withdraw weakly worsen") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> amt(1.0, 500.0);
        for (int trial = 0; trial < 100; ++trial) {
            UserPosition pos;
            pos.collateral["WETH"] = Amount::from_int(2);
            pos.debt["USDC"] = Amount::from_double(800.0 + amt(rng));
            WalletState wallet;
            wallet.balances["USDC"] = Amount::from_int(10000);
            wallet.balances["WETH"] = Amount::from_int(10);

            auto hf0 = health_factor(pos, prices, configs);

            UserPosition p1 = pos;
            WalletState w1 = wallet;
            apply_user_action(p1, w1, {EventType::repay, "USDC", Amount::from_double(amt(rng))},
                              prices, configs);
            auto hf1 = health_factor(p1, prices, configs);
            CHECK((hf1.no_debt || hf1.value > hf0.value));

            UserPosition p2 = pos;
            WalletState w2 = wallet;
            apply_user_action(p2, w2, {EventType::deposit, "WETH", Amount::parse("0.5")},
                              prices, configs);
            CHECK(health_factor(p2, prices, configs).value > hf0.value);

            UserPosition p3 = pos;
            WalletState w3 = wallet;
            apply_user_action(p3, w3, {EventType::borrow, "USDC", Amount::from_double(amt(rng))},
                              prices, configs);
            CHECK(health_factor(p3, prices, configs).value <= hf0.value);
        }
    }
}

TEST_CASE("execute_liquidation") {
    auto configs = two_asset_configs();

    SUBCASE("standard close-factor liquidation with bonus") {
        UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(1000);
        pos.collateral["WETH"] = Amount::from_int(1);
        SpotPrices prices{{"WETH", 1100.0}, {"USDC", 1.0}};  // HF = 880/1000 = 0.88
        auto res = execute_liquidation(pos, prices, configs);
        CHECK(res.debt_repaid_usd == doctest::Approx(500.0).epsilon(1e-9));
        CHECK(res.collateral_seized_usd == doctest::Approx(525.0).epsilon(1e-9));
        CHECK(pos.collateral["WETH"].to_double() ==
              doctest::Approx(1.0 - 0.4772727272727).epsilon(1e-9));
        CHECK_FALSE(res.full_close);
        CHECK(res.debt_to_cover_ratio == doctest::Approx(0.5).epsilon(1e-9));
    }

    SUBCASE("dust position closes fully regardless of HF") {
        UserPosition pos;
        pos.debt["USDC"] = Amount::parse("0.50");
        pos.collateral["WETH"] = Amount::parse("0.0001");  // $0.20
        SpotPrices prices{{"WETH", 2000.0}, {"USDC", 1.0}};
        auto res = execute_liquidation(pos, prices, configs);
        CHECK(res.full_close);
        CHECK(res.debt_to_cover_ratio == doctest::Approx(1.0));
        CHECK_FALSE(pos.has_debt());
        CHECK(pos.collateral.empty());
    }

    SUBCASE("healthy non-dust position is a protocol error") {
        UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(1000);
        pos.collateral["WETH"] = Amount::from_int(2);
        SpotPrices prices{{"WETH", 2500.0}, {"USDC", 1.0}};  // HF = 4.0, value $6000
        CHECK_THROWS_AS(execute_liquidation(pos, prices, configs), Error);
    }

    SUBCASE("never seizes more than exists nor repays more than owed") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> debt_amt(100.0, 5000.0);
        std::uniform_real_distribution<double> coll_amt(0.001, 0.4);
        for (int trial = 0; trial < 200; ++trial) {
            UserPosition pos;
            double d = debt_amt(rng);
            double c = coll_amt(rng);
            pos.debt["USDC"] = Amount::from_double(d);
            pos.collateral["WETH"] = Amount::from_double(c);
            SpotPrices prices{{"WETH", 1000.0}, {"USDC", 1.0}};
            auto hf = health_factor(pos, prices, configs);
            double value = position_value_usd(pos, prices);
            if (!hf.below(1.0) && value >= 1.0) continue;
            auto res = execute_liquidation(pos, prices, configs);
            CHECK(res.debt_repaid_usd <= d * (1 + 1e-9));
            CHECK(res.collateral_seized_usd <= c * 1000.0 * (1 + 1e-9));
            CHECK_FALSE(pos.debt["USDC"].is_negative());
            for (auto& [a, amt] : pos.collateral) CHECK_FALSE(amt.is_negative());
        }
    }
}

TEST_CASE("price_at: step-function oracle") {
    PriceOracle oracle;
    oracle.series["WETH"] = {{100, 2000.0}, {200, 1800.0}};
    CHECK(oracle.price_at("WETH", 150) == doctest::Approx(2000.0));
    CHECK(oracle.price_at("WETH", 200) == doctest::Approx(1800.0));
    CHECK(oracle.price_at("WETH", 10'000) == doctest::Approx(1800.0));
    CHECK_THROWS_AS(oracle.price_at("WETH", 50), Error);
    CHECK_THROWS_AS(oracle.price_at("WBTC", 150), Error);
}
