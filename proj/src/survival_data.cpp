#include "liqguard/survival_data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

namespace liqguard::surv {

namespace {

constexpr double kMarketWindowDays = 30.0;

std::vector<std::string> make_feature_names() {
    std::vector<std::string> names;
    auto title = [](EventType e) {
        std::string s(to_string(e));
        s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s;
    };
    for (EventType e : kEventTypes) {
        names.push_back("user" + title(e) + "Count");
        names.push_back("user" + title(e) + "SumUSD");
        names.push_back("daysSinceUser" + title(e));
    }
    names.push_back("log1pAmountUSD");
    names.push_back("marketLiquidationCount30d");
    names.push_back("sinTimeOfDay");
    names.push_back("cosTimeOfDay");
    names.push_back("sinDayOfWeek");
    names.push_back("cosDayOfWeek");
    return names;
}

}  // namespace

std::string EventPairTask::name() const {
    return std::string(to_string(index_event)) + ":" + std::string(to_string(outcome_event));
}

EventPairTask task_from_name(const std::string& name) {
    auto colon = name.find(':');
    if (colon == std::string::npos) fail(ErrorKind::config, "bad task name: " + name);
    auto idx = event_type_from(name.substr(0, colon));
    auto out = event_type_from(name.substr(colon + 1));
    if (!idx || !out) fail(ErrorKind::config, "bad task name: " + name);
    return {*idx, *out};
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = make_feature_names();
    return names;
}

void write_feature_manifest(const std::string& path) {
    nlohmann::json doc;
    doc["features"] = feature_names();
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write feature manifest: " + path);
    out << doc.dump(2) << "\n";
}

std::vector<double> build_features(std::span<const ingest::TxRecord> user_history,
                                   const ingest::EventLog& market, Timestamp t,
                                   const ingest::TxRecord& current_tx,
                                   const FeatureParams& params) {
    std::array<double, 5> counts{};
    std::array<double, 5> sums{};
    std::array<Timestamp, 5> last_seen{};
    std::array<bool, 5> seen{};

    for (const auto& rec : user_history) {
        if (rec.timestamp > t) continue;  // guard against stray lookahead
        auto i = static_cast<std::size_t>(rec.event_type);
        counts[i] += 1.0;
        sums[i] += rec.amount_usd;
        last_seen[i] = rec.timestamp;
        seen[i] = true;
    }

    std::vector<double> x;
    x.reserve(feature_names().size());
    for (std::size_t i = 0; i < kEventTypes.size(); ++i) {
        x.push_back(counts[i]);
        x.push_back(sums[i]);
        double days = params.days_since_cap;
        if (seen[i])
            days = std::min(params.days_since_cap,
                            static_cast<double>(t - last_seen[i]) / kSecondsPerDay);
        x.push_back(days);
    }

    x.push_back(std::log1p(std::max(0.0, current_tx.amount_usd)));

    Timestamp lookback = t - static_cast<Timestamp>(kMarketWindowDays * kSecondsPerDay);
    x.push_back(static_cast<double>(market.market_liquidations_between(lookback, t)));

    // UTC cyclical time features; phase 0 at midnight / at the week anchor.
    double sec_of_day = static_cast<double>(((t % 86400) + 86400) % 86400);
    double day_phase = 2.0 * std::numbers::pi * sec_of_day / 86400.0;
    x.push_back(std::sin(day_phase));
    x.push_back(std::cos(day_phase));
    std::int64_t days_since_epoch = t / 86400 - (t % 86400 < 0 ? 1 : 0);
    double weekday = static_cast<double>(((days_since_epoch + 4) % 7 + 7) % 7);  // 0 = Sunday
    double week_phase = 2.0 * std::numbers::pi * weekday / 7.0;
    x.push_back(std::sin(week_phase));
    x.push_back(std::cos(week_phase));

    return x;
}

std::vector<SurvivalRecord> extract_pairs(const ingest::EventLog& log,
                                          const EventPairTask& task, Timestamp window_end,
                                          const FeatureParams& params) {
    std::vector<SurvivalRecord> out;
    for (const auto& [user, indices] : log.by_user) {
        const auto n = indices.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& rec = log.records[indices[i]];
            if (rec.event_type != task.index_event) continue;
            if (rec.timestamp >= window_end) continue;

            SurvivalRecord sr;
            sr.user_id = user;
            sr.index_time = rec.timestamp;
            sr.event = 0;
            sr.duration_days =
                static_cast<double>(window_end - rec.timestamp) / kSecondsPerDay;
            for (std::size_t j = i + 1; j < n; ++j) {
                const auto& next = log.records[indices[j]];
                if (next.event_type != task.outcome_event) continue;
                if (next.timestamp <= rec.timestamp) continue;  // degenerate pair
                if (next.timestamp > window_end) break;
                sr.event = 1;
                sr.duration_days =
                    static_cast<double>(next.timestamp - rec.timestamp) / kSecondsPerDay;
                break;
            }

            // Earlier events of this user, in log order, strictly before this row.
            std::vector<ingest::TxRecord> history;
            history.reserve(i);
            for (std::size_t j = 0; j < i; ++j) history.push_back(log.records[indices[j]]);
            sr.features = build_features(history, log, rec.timestamp, rec, params);
            out.push_back(std::move(sr));
        }
    }
    return out;
}

void write_records_csv(const std::string& path, const std::vector<SurvivalRecord>& records) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write records csv: " + path);
    out << "user_id,index_time,duration_days,event";
    const auto k = records.empty() ? feature_names().size() : records.front().features.size();
    for (std::size_t i = 0; i < k; ++i) out << ",f" << i;
    out << "\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.user_id << "," << r.index_time << "," << r.duration_days << "," << r.event;
        for (double f : r.features) out << "," << f;
        out << "\n";
    }
}

}  // namespace liqguard::surv
