#include <doctest.h>

#include <cmath>

#include "liqguard/detection.hpp"

using namespace liqguard;
using namespace liqguard::detect;

namespace {

constexpr Timestamp kDay = 86400;

lending::ReserveConfigMap configs_with_rates(double base, double slope1) {
    lending::ReserveConfigMap configs;
    lending::ReserveConfig weth;
    weth.asset = "WETH";
    weth.liquidation_threshold = 0.80;
    weth.ltv = 0.75;
    weth.rate_params = {base, slope1, 0.0, 0.80};
    configs["WETH"] = weth;
    lending::ReserveConfig usdc;
    usdc.asset = "USDC";
    usdc.liquidation_threshold = 0.85;
    usdc.ltv = 0.80;
    usdc.rate_params = {base, slope1, 0.0, 0.80};
    configs["USDC"] = usdc;
    return configs;
}

// Reserve pair: WETH pool idle (no supply growth), USDC pool at the kink
// so the USDC borrow rate equals base + slope1.
std::map<std::string, lending::ReserveState> standard_reserves() {
    std::map<std::string, lending::ReserveState> reserves;
    lending::ReserveState weth;
    weth.total_liquidity = 100.0;
    weth.total_debt = 0.0;
    reserves["WETH"] = weth;
    lending::ReserveState usdc;
    usdc.total_liquidity = 20.0;
    usdc.total_debt = 80.0;  // utilization 0.8
    reserves["USDC"] = usdc;
    return reserves;
}

struct Scenario {
    lending::ReserveConfigMap configs;
    std::map<std::string, lending::ReserveState> reserves;
    lending::PriceOracle oracle;

    PositionTrajectory trajectory(lending::UserPosition pos, Timestamp t0, Timestamp t1,
                                  double dust = 1.0) const {
        PositionTrajectory::Inputs in;
        in.position = std::move(pos);
        in.reserves = reserves;
        in.configs = &configs;
        in.oracle = &oracle;
        in.t_start = t0;
        in.t_end = t1;
        in.last_interaction = t0;
        in.dust_threshold_usd = dust;
        return PositionTrajectory(in);
    }
};

DetectionParams strict_params() {
    DetectionParams p;
    p.margin.per_day_increment = 0.0;  // strict HF < 1.0
    return p;
}

lending::UserPosition simple_position(double weth, double usdc_debt) {
    lending::UserPosition pos;
    pos.collateral["WETH"] = Amount::from_double(weth);
    pos.debt["USDC"] = Amount::from_double(usdc_debt);
    return pos;
}

}  // namespace

TEST_CASE("effective_threshold") {
    MarginPolicy policy;  // base 1.0, 0.02/day, cap 1.10
    CHECK(effective_threshold(policy, 0.0) == doctest::Approx(1.00));
    CHECK(effective_threshold(policy, 3.0) == doctest::Approx(1.06));
    CHECK(effective_threshold(policy, 30.0) == doctest::Approx(1.10));
    CHECK_THROWS_AS(effective_threshold(policy, -1.0), Error);
}

TEST_CASE("detect: healthy flat trajectory fires nothing") {
    Scenario sc;
    sc.configs = configs_with_rates(0.0, 0.0);  // no interest at all
    sc.reserves = standard_reserves();
    sc.oracle.series["WETH"] = {{0, 1500.0}};
    sc.oracle.series["USDC"] = {{0, 1.0}};
    auto traj = sc.trajectory(simple_position(1.0, 800.0), 0, 10 * kDay);  // HF 1.5

    for (Strategy s : kStrategies) {
        CHECK(detect::detect(s, traj, strict_params()).empty());
    }
}

TEST_CASE("detect: single price drop is located exactly") {
    const Timestamp t_star = 3 * kDay + 12345;
    Scenario sc;
    sc.configs = configs_with_rates(0.0, 0.0);
    sc.reserves = standard_reserves();
    sc.oracle.series["WETH"] = {{0, 1500.0}, {t_star, 1000.0}};  // HF 1.2 -> 0.8
    sc.oracle.series["USDC"] = {{0, 1.0}};
    auto traj = sc.trajectory(simple_position(1.0, 1000.0), 0, 7 * kDay);

    auto ev = detect::detect(Strategy::event_driven, traj, strict_params());
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].time == t_star);
    CHECK(ev[0].hf_at_detection == doctest::Approx(0.8));

    auto bs = detect::detect(Strategy::binary_search, traj, strict_params());
    REQUIRE(bs.size() == 1);
    CHECK(std::abs(bs[0].time - t_star) <= 1);

    // every strategy agrees within the block tolerance after refinement
    std::vector<std::vector<LiquidationEvent>> results;
    for (Strategy s : kStrategies) results.push_back(detect::detect(s, traj, strict_params()));
    auto cons = consensus(results, 2.0);
    CHECK(cons.agreement == doctest::Approx(1.0));
    REQUIRE(cons.confirmed.size() == 1);
    CHECK(std::abs(cons.confirmed[0].time - t_star) <= 1);
}

TEST_CASE("detect: slow interest bleed between price updates") {
    // USDC debt compounds at base+slope1 = 5%/yr; WETH pool idle so the
    // collateral stays flat. Crossing when D*e^{rt} = 0.8*C.
    Scenario sc;
    sc.configs = configs_with_rates(0.0, 0.05);
    sc.reserves = standard_reserves();
    sc.oracle.series["WETH"] = {{0, 1250.0}};  // no update after t=0
    sc.oracle.series["USDC"] = {{0, 1.0}};
    auto pos = simple_position(1.0, 990.0);  // HF = 1000/990 at t0

    double rate = 0.05;
    double tau_years = std::log(0.8 * 1250.0 / 990.0) / rate;
    auto t_cross = static_cast<Timestamp>(tau_years * kSecondsPerYear);
    Timestamp t_end = t_cross + 30 * kDay;
    auto traj = sc.trajectory(pos, 0, t_end);

    // sanity: the analytic crossing matches the trajectory
    CHECK(traj.hf_at(t_cross - 10).value >= 1.0);
    CHECK(traj.hf_at(t_cross + 10).value < 1.0);

    auto milestones = detect::detect(Strategy::interest_milestones, traj, strict_params());
    REQUIRE(milestones.size() == 1);
    CHECK(std::abs(milestones[0].time - t_cross) <= 2);

    // event-driven has no probe after the crossing: it misses the bleed
    CHECK(detect::detect(Strategy::event_driven, traj, strict_params()).empty());

    // hybrid's periodic safeguard catches it
    auto hybrid = detect::detect(Strategy::hybrid, traj, strict_params());
    REQUIRE(hybrid.size() == 1);
    CHECK(std::abs(hybrid[0].time - t_cross) <= 2);
}

TEST_CASE("detect: binary search within 1s of an interest-driven crossing") {
    Scenario sc;
    sc.configs = configs_with_rates(0.0, 0.05);
    sc.reserves = standard_reserves();
    sc.oracle.series["WETH"] = {{0, 1250.0}, {200 * kDay, 1250.0}};
    sc.oracle.series["USDC"] = {{0, 1.0}};
    auto traj = sc.trajectory(simple_position(1.0, 990.0), 0, 200 * kDay);

    double tau_years = std::log(0.8 * 1250.0 / 990.0) / 0.05;
    auto t_cross = static_cast<Timestamp>(tau_years * kSecondsPerYear);

    auto bs = detect::detect(Strategy::binary_search, traj, strict_params());
    REQUIRE(bs.size() == 1);
    CHECK(std::abs(bs[0].time - t_cross) <= 1);
}

TEST_CASE("detect: dynamic margin flags a gap liquidation the strict rule misses") {
    // HF sits at ~1.05 forever; with a growing interaction gap the margin
    // threshold reaches it, the strict 1.0 rule never does.
    Scenario sc;
    sc.configs = configs_with_rates(0.0, 0.0);
    sc.reserves = standard_reserves();
    sc.oracle.series["WETH"] = {{0, 1500.0}};
    sc.oracle.series["USDC"] = {{0, 1.0}};
    auto traj = sc.trajectory(simple_position(1.0, 1142.85), 0, 30 * kDay);  // HF ~1.05

    DetectionParams margin;  // defaults: +0.02/day capped at 1.10
    DetectionParams strict = strict_params();

    auto flagged = detect::detect(Strategy::hybrid, traj, margin);
    REQUIRE(flagged.size() == 1);
    // threshold reaches the HF at gap = (HF - 1) / 0.02 days
    double hf = 1200.0 / 1142.85;
    auto t_expect = static_cast<Timestamp>((hf - 1.0) / 0.02 * kDay);
    CHECK(std::abs(flagged[0].time - t_expect) <= 2);
    CHECK(detect::detect(Strategy::hybrid, traj, strict).empty());
}

TEST_CASE("detect: dust-sized position with debt is flagged") {
    Scenario sc;
    sc.configs = configs_with_rates(0.0, 0.0);
    sc.reserves = standard_reserves();
    sc.oracle.series["WETH"] = {{0, 2000.0}};
    sc.oracle.series["USDC"] = {{0, 1.0}};
    lending::UserPosition pos;
    pos.collateral["WETH"] = Amount::parse("0.0001");  // $0.20
    pos.debt["USDC"] = Amount::parse("0.30");          // total $0.50 < $1
    auto traj = sc.trajectory(pos, 0, kDay);

    auto ev = detect::detect(Strategy::hybrid, traj, strict_params());
    REQUIRE_FALSE(ev.empty());
    CHECK(ev[0].time == 0);  // dust from the start

    // zero-debt positions are never liquidatable
    lending::UserPosition no_debt;
    no_debt.collateral["WETH"] = Amount::parse("0.0001");
    auto safe = sc.trajectory(no_debt, 0, kDay);
    CHECK(detect::detect(Strategy::hybrid, safe, strict_params()).empty());
}

TEST_CASE("detect: unknown strategy name is a configuration error") {
    CHECK_THROWS_AS(strategy_from("simulated_annealing"), Error);
    CHECK(strategy_from("event_driven") == Strategy::event_driven);
}

TEST_CASE("consensus") {
    auto ev = [](Timestamp t, Strategy s) {
        LiquidationEvent e;
        e.time = t;
        e.hf_at_detection = 0.9;
        e.detected_by.insert(s);
        return e;
    };

    SUBCASE("unanimous within tolerance confirms") {
        std::vector<std::vector<LiquidationEvent>> results;
        Timestamp base = 1000;
        int i = 0;
        for (Strategy s : kStrategies) {
            results.push_back({ev(base + (i % 2), s)});
            ++i;
        }
        auto cons = consensus(results, 2.0);
        CHECK(cons.confirmed.size() == 1);
        CHECK(cons.agreement == doctest::Approx(1.0));
    }

    SUBCASE("five of six leaves the candidate unconfirmed") {
        std::vector<std::vector<LiquidationEvent>> results(6);
        int i = 0;
        for (Strategy s : kStrategies) {
            if (i < 5) results[static_cast<std::size_t>(i)] = {ev(1000, s)};
            ++i;
        }
        auto cons = consensus(results, 2.0);
        CHECK(cons.confirmed.empty());
        REQUIRE(cons.unconfirmed.size() == 1);
        CHECK(cons.unconfirmed[0].detected_by.size() == 5);
        CHECK(cons.agreement == doctest::Approx(0.0));
    }

    SUBCASE("no candidates is vacuous full agreement") {
        std::vector<std::vector<LiquidationEvent>> results(6);
        auto cons = consensus(results, 2.0);
        CHECK(cons.confirmed.empty());
        CHECK(cons.agreement == doctest::Approx(1.0));
    }

    SUBCASE("requires exactly six inputs") {
        std::vector<std::vector<LiquidationEvent>> five(5);
        CHECK_THROWS_AS(consensus(five, 2.0), Error);
    }

    SUBCASE("permutation invariance") {
        std::vector<std::vector<LiquidationEvent>> results;
        Timestamp base = 5000;
        int i = 0;
        for (Strategy s : kStrategies) {
            results.push_back({ev(base + i, s)});  // spread over 5s: two clusters
            ++i;
        }
        auto cons1 = consensus(results, 2.0);
        std::reverse(results.begin(), results.end());
        auto cons2 = consensus(results, 2.0);
        CHECK(cons1.confirmed.size() == cons2.confirmed.size());
        CHECK(cons1.unconfirmed.size() == cons2.unconfirmed.size());
        CHECK(cons1.agreement == doctest::Approx(cons2.agreement));
    }
}

TEST_CASE("classify") {
    lending::SpotPrices prices{{"WETH", 2000.0}, {"USDC", 1.0}};
    LiquidationEvent full;
    full.debt_to_cover_ratio = 1.0;
    LiquidationEvent half;
    half.debt_to_cover_ratio = 0.5;

    SUBCASE("tiny full close is dust") {
        lending::UserPosition pos;
        pos.debt["USDC"] = Amount::parse("0.40");
        CHECK(classify(full, pos, prices, 1.0) == LiquidationClass::dust);
    }
    SUBCASE("large close-factor liquidation is insolvency") {
        lending::UserPosition pos;
        pos.debt["USDC"] = Amount::from_int(2500);
        pos.collateral["WETH"] = Amount::parse("1.25");
        CHECK(classify(half, pos, prices, 1.0) == LiquidationClass::insolvency);
    }
    SUBCASE("tiny but partial cover is insolvency") {
        lending::UserPosition pos;
        pos.debt["USDC"] = Amount::parse("0.80");
        CHECK(classify(half, pos, prices, 1.0) == LiquidationClass::insolvency);
    }
}

TEST_CASE("detection report JSON shape") {
    LiquidationEvent ev;
    ev.time = 12345;
    ev.hf_at_detection = 0.93;
    ev.detected_by = {Strategy::event_driven, Strategy::binary_search};
    ConsensusResult res;
    res.unconfirmed.push_back(ev);
    res.agreement = 0.0;
    auto text = detection_report_json(res);
    CHECK(text.find("\"candidates\"") != std::string::npos);
    CHECK(text.find("\"confirmed\"") != std::string::npos);
    CHECK(text.find("\"agreement\"") != std::string::npos);
    CHECK(text.find("binary_search") != std::string::npos);
    CHECK(text.find("12345") != std::string::npos);
}
