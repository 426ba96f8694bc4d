#include "liqguard/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "liqguard/version.hpp"

namespace liqguard::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ------------------------------ config ------------------------------

json config_to_json(const RunConfig& c) {
    json doc;
    doc["paths"] = {{"transactions", c.transactions_path},
                    {"reserves", c.reserves_path},
                    {"output_dir", c.output_dir}};
    doc["horizon_days"] = c.horizon_days;
    doc["trend"] = {{"omega", c.trend_params.omega},
                    {"lambda", c.trend_params.lambda},
                    {"gamma", c.trend_params.gamma}};
    doc["agent"] = {{"multiplier", c.agent_params.multiplier},
                    {"alpha_min", c.agent_params.alpha_min.to_string()},
                    {"history_depth", c.agent_params.history_depth}};
    doc["detection"] = {{"margin_base", c.detection_params.margin.base},
                        {"margin_per_day", c.detection_params.margin.per_day_increment},
                        {"margin_cap", c.detection_params.margin.cap},
                        {"consensus_tolerance_s", c.detection_params.consensus_tolerance_s},
                        {"hybrid_period_s", c.detection_params.hybrid_period_s},
                        {"adaptive_base_s", c.detection_params.adaptive_base_s},
                        {"milestone_rel_step", c.detection_params.milestone_rel_step}};
    doc["replay"] = {{"block_time_s", c.block_time_s},
                     {"min_lead_s", c.min_lead_s},
                     {"dust_threshold_usd", c.dust_threshold_usd},
                     {"safety_factor", c.safety_factor}};
    doc["sampling"] = {{"window_start_pct", c.sampling.window_start_pct},
                       {"window_end_pct", c.sampling.window_end_pct},
                       {"per_pair", c.sampling.per_pair}};
    doc["features"] = {{"days_since_cap", c.feature_params.days_since_cap}};
    doc["hazard"] = {{"ridge", c.ridge},
                     {"epsilon", c.epsilon},
                     {"min_records_per_task", c.min_records_per_task},
                     {"external_scores", c.external_scores}};
    doc["market"] = {{"initial_pool_liquidity_usd", c.initial_pool_liquidity_usd},
                     {"initial_pool_debt_usd", c.initial_pool_debt_usd}};
    doc["sensitivity"] = {{"perturbation", c.sensitivity_perturbation},
                          {"trials", c.sensitivity_trials}};
    doc["workers"] = c.workers;
    doc["seed"] = c.seed;
    return doc;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void apply_override(json& doc, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
        fail(ErrorKind::config, "--set expects key=value, got: " + kv);
    std::string dotted = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);

    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        auto dot = dotted.find('.', start);
        std::string key = dotted.substr(start, dot - start);
        if (key.empty()) fail(ErrorKind::config, "empty key segment in: " + dotted);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

RunConfig config_from_json(const json& doc) {
    RunConfig c;
    const auto& paths = doc.at("paths");
    c.transactions_path = paths.at("transactions").get<std::string>();
    c.reserves_path = paths.at("reserves").get<std::string>();
    c.output_dir = paths.at("output_dir").get<std::string>();

    c.horizon_days = doc.value("horizon_days", 7.0);
    if (doc.contains("trend")) {
        const auto& t = doc["trend"];
        c.trend_params.omega = t.value("omega", 0.8);
        c.trend_params.lambda = t.value("lambda", 0.6);
        c.trend_params.gamma = t.value("gamma", 0.3);
    }
    if (doc.contains("agent")) {
        const auto& a = doc["agent"];
        c.agent_params.multiplier = a.value("multiplier", 2.0);
        if (a.contains("alpha_min"))
            c.agent_params.alpha_min =
                a["alpha_min"].is_string()
                    ? Amount::parse(a["alpha_min"].get<std::string>())
                    : Amount::from_double(a["alpha_min"].get<double>());
        c.agent_params.history_depth = a.value("history_depth", 8);
    }
    c.agent_params.horizon_days = c.horizon_days;
    if (doc.contains("detection")) {
        const auto& d = doc["detection"];
        c.detection_params.margin.base = d.value("margin_base", 1.0);
        c.detection_params.margin.per_day_increment = d.value("margin_per_day", 0.02);
        c.detection_params.margin.cap = d.value("margin_cap", 1.10);
        c.detection_params.consensus_tolerance_s = d.value("consensus_tolerance_s", 2.0);
        c.detection_params.hybrid_period_s = d.value("hybrid_period_s", 3600.0);
        c.detection_params.adaptive_base_s = d.value("adaptive_base_s", 3600.0);
        c.detection_params.milestone_rel_step = d.value("milestone_rel_step", 0.001);
    }
    if (doc.contains("replay")) {
        const auto& r = doc["replay"];
        c.block_time_s = r.value("block_time_s", 2.0);
        c.min_lead_s = r.value("min_lead_s", c.block_time_s);
        c.dust_threshold_usd = r.value("dust_threshold_usd", 1.0);
        if (r.contains("safety_factor"))
            c.safety_factor = r["safety_factor"].is_string()
                                  ? r["safety_factor"].get<std::string>()
                                  : std::to_string(r["safety_factor"].get<double>());
    }
    if (doc.contains("sampling")) {
        const auto& s = doc["sampling"];
        c.sampling.window_start_pct = s.value("window_start_pct", 0.4);
        c.sampling.window_end_pct = s.value("window_end_pct", 0.8);
        c.sampling.per_pair = s.value("per_pair", std::size_t{300});
    }
    if (doc.contains("features"))
        c.feature_params.days_since_cap = doc["features"].value("days_since_cap", 365.0);
    if (doc.contains("hazard")) {
        const auto& h = doc["hazard"];
        c.ridge = h.value("ridge", 1e-4);
        c.epsilon = h.value("epsilon", 1e-12);
        c.min_records_per_task = h.value("min_records_per_task", std::size_t{10});
        if (h.contains("external_scores") && h["external_scores"].is_object())
            c.external_scores =
                h["external_scores"].get<std::map<std::string, std::string>>();
    }
    if (doc.contains("market")) {
        c.initial_pool_liquidity_usd =
            doc["market"].value("initial_pool_liquidity_usd", 1e7);
        c.initial_pool_debt_usd = doc["market"].value("initial_pool_debt_usd", 4e7);
    }
    if (doc.contains("sensitivity")) {
        c.sensitivity_perturbation = doc["sensitivity"].value("perturbation", 0.10);
        c.sensitivity_trials = doc["sensitivity"].value("trials", 100);
    }
    c.workers = doc.value("workers", 0);
    c.seed = doc.value("seed", std::uint64_t{42});
    return c;
}

// ------------------------------ artifacts ------------------------------

struct ArtifactIo {
    fs::path dir;
    std::string config_hash;

    fs::path path(const std::string& name) const { return dir / name; }

    bool fresh(const std::string& name) const {
        std::ifstream in(path(name));
        if (!in) return false;
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) return false;
        return doc.value("config_hash", "") == config_hash;
    }

    void write_json(const std::string& name, json doc) const {
        doc["config_hash"] = config_hash;
        doc["tool_version"] = kToolVersion;
        std::ofstream out(path(name));
        if (!out) fail(ErrorKind::io, "cannot write artifact: " + path(name).string());
        out << doc.dump(2) << "\n";
    }

    json read_json(const std::string& name, const std::string& stage) const {
        std::ifstream in(path(name));
        if (!in) fail(ErrorKind::pipeline, "missing stage: " + stage);
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded())
            fail(ErrorKind::pipeline, "corrupt artifact for stage: " + stage);
        return doc;
    }

    std::ofstream open_csv(const std::string& name) const {
        std::ofstream out(path(name));
        if (!out) fail(ErrorKind::io, "cannot write artifact: " + path(name).string());
        out << "# config_hash=" << config_hash << " tool_version=" << kToolVersion << "\n";
        return out;
    }
};

// Shared pipeline state assembled from artifacts + raw inputs.
struct Pipeline {
    RunConfig cfg;
    ArtifactIo io;
    ingest::EventLog log;
    ingest::ParseReport report;
    MarketContext market;

    void load_inputs() {
        auto [l, r] = ingest::parse_transactions(cfg.transactions_path);
        log = std::move(l);
        report = r;
        market.configs = lending::load_reserve_configs(cfg.reserves_path);
        auto prices = ingest::build_price_history(log);
        report.conflicts = prices.conflicts;
        market.oracle = std::move(prices.oracle);
        market.market_log = &log;
        market.feature_params = cfg.feature_params;
        for (const auto& [asset, rc] : market.configs) {
            lending::ReserveState rs;
            rs.total_liquidity = cfg.initial_pool_liquidity_usd;
            rs.total_debt = cfg.initial_pool_debt_usd;
            market.initial_reserves[asset] = rs;
        }
    }
};

std::vector<surv::EventPairTask> all_tasks() {
    std::vector<surv::EventPairTask> tasks;
    for (EventType i : kEventTypes)
        for (EventType o : kEventTypes) tasks.push_back({i, o});
    return tasks;
}

Timestamp percentile_time(const ingest::EventLog& log, double pct) {
    const auto& r = log.records;
    auto idx = static_cast<std::size_t>(pct * static_cast<double>(r.size() - 1));
    return r[std::min(idx, r.size() - 1)].timestamp;
}

// ------------------------------ stages ------------------------------

void stage_ingest(Pipeline& p, bool force) {
    if (!force && p.io.fresh("parse_report.json")) {
        std::cout << "ingest: up to date\n";
        return;
    }
    json doc;
    doc["rows"] = p.report.rows;
    json errs = json::array();
    for (const auto& e : p.report.errors) errs.push_back({{"line", e.line}, {"reason", e.reason}});
    doc["errors"] = errs;
    doc["warnings"] = p.report.warnings;
    doc["conflicts"] = p.report.conflicts;
    p.io.write_json("parse_report.json", doc);

    json prices;
    for (const auto& [asset, series] : p.market.oracle.series) {
        json s = json::array();
        for (const auto& [t, px] : series) s.push_back({t, px});
        prices[asset] = s;
    }
    p.io.write_json("prices.json", json{{"series", prices}});

    json wallets;
    Amount factor = Amount::parse(p.cfg.safety_factor);
    for (const auto& [user, idx] : p.log.by_user) {
        auto inferred = ingest::infer_wallet_balances(p.log.user_events(user), factor);
        json w;
        for (const auto& [asset, amt] : inferred) w[asset] = amt.to_string();
        wallets[user] = w;
    }
    p.io.write_json("wallets.json", json{{"wallets", wallets}});
    std::cout << "ingest: " << p.report.rows << " rows, " << p.report.errors.size()
              << " errors, " << p.report.warnings << " warnings\n";
}

void require_stage(const Pipeline& p, const std::string& artifact, const std::string& stage) {
    if (!fs::exists(p.io.path(artifact))) fail(ErrorKind::pipeline, "missing stage: " + stage);
}

void stage_fit(Pipeline& p, bool force) {
    require_stage(p, "parse_report.json", "ingest");
    if (!force && p.io.fresh("models.json")) {
        std::cout << "fit: up to date\n";
        return;
    }

    Timestamp window_end = percentile_time(p.log, p.cfg.sampling.window_end_pct);
    surv::write_feature_manifest(p.io.path("feature_manifest.json").string());
    fs::create_directories(p.io.path("records"));

    json models;
    std::size_t fitted = 0, skipped = 0;
    for (const auto& task : all_tasks()) {
        auto records = surv::extract_pairs(p.log, task, window_end, p.cfg.feature_params);
        surv::write_records_csv((p.io.path("records") / (task.name() + ".csv")).string(),
                                records);

        std::size_t events = 0;
        for (const auto& r : records)
            if (r.event == 1) ++events;

        json entry;
        entry["index"] = std::string(to_string(task.index_event));
        entry["outcome"] = std::string(to_string(task.outcome_event));
        entry["n_records"] = records.size();
        entry["n_events"] = events;

        auto ext = p.cfg.external_scores.find(task.name());
        try {
            hazard::HazardModel model;
            if (ext != p.cfg.external_scores.end()) {
                model = hazard::load_external_scores(ext->second);
                entry["kind"] = "external_scores";
                entry["scores_path"] = ext->second;
            } else {
                if (records.size() < p.cfg.min_records_per_task || events == 0) {
                    entry["kind"] = "unavailable";
                    entry["why"] = "too few records or no events";
                    models[task.name()] = entry;
                    ++skipped;
                    continue;
                }
                hazard::FitOptions opt;
                opt.ridge = p.cfg.ridge;
                model = hazard::fit_cox(records, opt);
                entry["kind"] = "linear_cox";
                entry["beta"] = model.beta;
            }
            auto baseline = hazard::estimate_baseline(model, records, p.cfg.epsilon);
            entry["baseline"] = json::parse(hazard::baseline_to_json(baseline));
            ++fitted;
        } catch (const Error& e) {
            entry["kind"] = "unavailable";
            entry["why"] = e.what();
            ++skipped;
        }
        models[task.name()] = entry;
    }
    p.io.write_json("models.json", json{{"tasks", models}, {"window_end", window_end}});
    std::cout << "fit: " << fitted << " tasks fitted, " << skipped << " unavailable\n";
}

std::map<EventType, EngineMap> engines_from_models(const json& models) {
    std::map<EventType, EngineMap> by_index;
    for (EventType i : kEventTypes) {
        EngineMap engines;
        bool complete = true;
        for (EventType o : kEventTypes) {
            surv::EventPairTask task{i, o};
            auto it = models["tasks"].find(task.name());
            if (it == models["tasks"].end() || (*it)["kind"] == "unavailable") {
                complete = false;
                break;
            }
            hazard::HazardEngine engine;
            if ((*it)["kind"] == "external_scores") {
                engine.model =
                    hazard::load_external_scores((*it)["scores_path"].get<std::string>());
            } else {
                engine.model.kind = hazard::ModelKind::linear_cox;
                engine.model.beta = (*it)["beta"].get<std::vector<double>>();
            }
            engine.baseline = hazard::baseline_from_json((*it)["baseline"].dump());
            engines[o] = std::move(engine);
        }
        if (complete) by_index[i] = std::move(engines);
    }
    return by_index;
}

std::vector<UserProfile> build_cohort(Pipeline& p) {
    Amount factor = Amount::parse(p.cfg.safety_factor);
    return replay::sample_cohort(p.log, p.cfg.sampling, factor, p.cfg.seed);
}

void stage_assess(Pipeline& p, bool force) {
    require_stage(p, "models.json", "fit");
    if (!force && p.io.fresh("assessments.json")) {
        std::cout << "assess: up to date\n";
        return;
    }
    auto models = p.io.read_json("models.json", "fit");
    auto engines_by_index = engines_from_models(models);
    auto cohort = build_cohort(p);

    json out = json::array();
    auto series_csv = p.io.open_csv("hazard_series.csv");
    series_csv << "user_id,t_rec,event,checkpoint_t,return_period_days\n";
    std::size_t assessed = 0, skipped = 0;
    for (const auto& profile : cohort) {
        auto engines = engines_by_index.find(profile.index_event);
        if (engines == engines_by_index.end()) {
            ++skipped;
            continue;
        }
        try {
            auto a = agent::assess_risk(profile, p.market, engines->second, p.cfg.trend_params,
                                        p.cfg.agent_params);
            json entry;
            entry["user_id"] = profile.user_id;
            entry["t_rec"] = profile.t_rec;
            entry["index_event"] = std::string(to_string(profile.index_event));
            entry["at_risk"] = a.at_risk;
            json t, v;
            for (EventType e : kEventTypes) {
                t[std::string(to_string(e))] = a.t_ret.at(e);
                v[std::string(to_string(e))] =
                    a.v.at(e).degenerate ? json(nullptr) : json(a.v.at(e).value);
                for (const auto& [td, tr] : a.series.at(e)) {
                    series_csv << profile.user_id << "," << profile.t_rec << ","
                               << to_string(e) << "," << td << "," << tr << "\n";
                }
            }
            entry["T"] = t;
            entry["V"] = v;
            out.push_back(std::move(entry));
            ++assessed;
        } catch (const Error& e) {
            json entry;
            entry["user_id"] = profile.user_id;
            entry["t_rec"] = profile.t_rec;
            entry["error"] = e.what();
            out.push_back(std::move(entry));
        }
    }
    p.io.write_json("assessments.json", json{{"assessments", out}});
    std::cout << "assess: " << assessed << " profiles assessed, " << skipped
              << " without engines\n";
}

json recommendation_to_json(const agent::Recommendation& rec) {
    json r;
    r["action"] = std::string(agent::to_string(rec.action_kind));
    r["asset"] = rec.asset;
    r["amount"] = rec.amount.to_string();
    r["iterations"] = rec.iterations;
    r["capped_at_max"] = rec.capped_at_max;
    r["infeasible"] = rec.infeasible;
    if (!rec.reason.empty()) r["reason"] = rec.reason;
    r["adjustments"] = rec.adjustments;
    return r;
}

void stage_recommend(Pipeline& p, bool force) {
    require_stage(p, "models.json", "fit");
    if (!force && p.io.fresh("recommendations.json")) {
        std::cout << "recommend: up to date\n";
        return;
    }
    auto models = p.io.read_json("models.json", "fit");
    auto engines_by_index = engines_from_models(models);
    auto cohort = build_cohort(p);

    json out = json::array();
    std::size_t n = 0;
    for (const auto& profile : cohort) {
        auto engines = engines_by_index.find(profile.index_event);
        if (engines == engines_by_index.end()) continue;
        try {
            auto state = sim::reconstruct_at(profile, p.market);
            auto a = agent::assess_risk(profile, p.market, engines->second, p.cfg.trend_params,
                                        p.cfg.agent_params);
            auto rec = agent::recommend(profile, p.market, engines->second, a,
                                        p.cfg.trend_params, p.cfg.agent_params, state);
            auto prices = sim::spot_for_state(state, p.market);
            for (const auto& [asset, bal] : state.wallet.balances) {
                if (!prices.count(asset) && bal.is_positive())
                    prices[asset] = p.market.oracle.price_at(asset, state.now);
            }
            rec = agent::validate_feasibility(
                rec, state.wallet, state.position, prices,
                lending::position_dust_threshold(state.position, p.market.configs));

            json entry = recommendation_to_json(rec);
            entry["user_id"] = profile.user_id;
            entry["t_rec"] = profile.t_rec;
            entry["at_risk"] = a.at_risk;
            json t, v;
            for (EventType e : kEventTypes) {
                t[std::string(to_string(e))] = a.t_ret.at(e);
                v[std::string(to_string(e))] =
                    a.v.at(e).degenerate ? json(nullptr) : json(a.v.at(e).value);
            }
            entry["T"] = t;
            entry["V"] = v;
            out.push_back(std::move(entry));
            ++n;
        } catch (const Error& e) {
            out.push_back(json{{"user_id", profile.user_id},
                               {"t_rec", profile.t_rec},
                               {"error", e.what()}});
        }
    }
    p.io.write_json("recommendations.json", json{{"recommendations", out}});
    std::cout << "recommend: " << n << " recommendations\n";
}

replay::ReplayConfig replay_config(const Pipeline& p) {
    replay::ReplayConfig rc;
    rc.detection = p.cfg.detection_params;
    rc.block_time_s = p.cfg.block_time_s;
    rc.min_lead_s = p.cfg.min_lead_s;
    rc.window_end = p.log.records.empty() ? 0 : p.log.records.back().timestamp;
    return rc;
}

void write_cohort_outputs(const Pipeline& p, const replay::CohortResult& result) {
    const auto& m = result.metrics;
    json doc;
    doc["n_profiles"] = result.outcomes.size();
    doc["n_evaluated"] = m.n_evaluated;
    doc["n_excluded"] = m.n_excluded;
    doc["baseline_liquidated"] = m.baseline_liquidated;
    doc["rescued"] = m.rescued;
    doc["worsened"] = m.worsened;
    doc["salvage_rate"] = m.salvage_rate ? json(*m.salvage_rate) : json("N/A");
    doc["worsening_rate"] = m.worsening_rate;
    doc["dust_avoided"] = m.dust_avoided;
    doc["consensus_agreement"] = m.consensus_agreement;
    doc["errors"] = result.errors;
    p.io.write_json("cohort_report.json", doc);

    auto csv = p.io.open_csv("cohort_profiles.csv");
    csv << "user_id,t_rec,excluded_reason,baseline_liq,intervention_liq,action_kind,asset,"
           "amount,iterations,skipped_futures\n";
    for (const auto& out : result.outcomes) {
        csv << out.user_id << "," << out.t_rec << ","
            << (out.excluded ? *out.excluded : "") << ","
            << (out.excluded ? "" : (out.baseline.liquidated ? "1" : "0")) << ","
            << (out.excluded ? "" : (out.intervention.liquidated ? "1" : "0")) << ","
            << agent::to_string(out.action.action_kind) << "," << out.action.asset << ","
            << out.action.amount.to_string() << "," << out.action.iterations << ","
            << out.intervention.skipped_futures << "\n";
    }
}

void stage_replay(Pipeline& p, bool force) {
    require_stage(p, "models.json", "fit");
    if (!force && p.io.fresh("cohort_report.json")) {
        std::cout << "replay: up to date\n";
        return;
    }
    auto models = p.io.read_json("models.json", "fit");
    auto engines_by_index = engines_from_models(models);
    auto cohort = build_cohort(p);

    // Only profiles whose index event has a complete engine set replay.
    std::vector<UserProfile> ready;
    for (auto& profile : cohort) {
        if (engines_by_index.count(profile.index_event)) ready.push_back(std::move(profile));
    }

    auto result = replay::evaluate_cohort(ready, p.market, engines_by_index,
                                          p.cfg.trend_params, p.cfg.agent_params,
                                          replay_config(p), p.cfg.workers);
    write_cohort_outputs(p, result);
    std::cout << "replay: " << result.metrics.n_evaluated << " evaluated, salvage="
              << (result.metrics.salvage_rate
                      ? std::to_string(*result.metrics.salvage_rate)
                      : std::string("N/A"))
              << " worsening=" << result.metrics.worsening_rate << "\n";
}

void stage_report(Pipeline& p, bool force) {
    auto cohort = p.io.read_json("cohort_report.json", "replay");
    (void)force;
    json summary;
    summary["salvage_rate"] = cohort["salvage_rate"];
    summary["worsening_rate"] = cohort["worsening_rate"];
    summary["dust_avoided"] = cohort["dust_avoided"];
    summary["consensus_agreement"] = cohort["consensus_agreement"];
    summary["n_evaluated"] = cohort["n_evaluated"];
    summary["n_excluded"] = cohort["n_excluded"];
    p.io.write_json("summary.json", summary);
    std::cout << "report: summary written\n";
}

void stage_sensitivity(Pipeline& p, bool force) {
    require_stage(p, "models.json", "fit");
    if (!force && p.io.fresh("stability.json")) {
        std::cout << "sensitivity: up to date\n";
        return;
    }
    auto models = p.io.read_json("models.json", "fit");
    auto engines_by_index = engines_from_models(models);
    auto cohort = build_cohort(p);

    std::vector<agent::RiskAssessment> assessments;
    for (const auto& profile : cohort) {
        auto engines = engines_by_index.find(profile.index_event);
        if (engines == engines_by_index.end()) continue;
        try {
            assessments.push_back(agent::assess_risk(profile, p.market, engines->second,
                                                     p.cfg.trend_params, p.cfg.agent_params));
        } catch (const Error&) {
            // profiles without usable assessments drop out of the study
        }
    }
    if (assessments.empty()) fail(ErrorKind::data, "no assessable profiles for sensitivity");

    double stability = agent::sensitivity_stability(assessments, p.cfg.trend_params,
                                                    p.cfg.sensitivity_perturbation,
                                                    p.cfg.sensitivity_trials, p.cfg.seed);
    p.io.write_json("stability.json",
                    json{{"stability", stability},
                         {"perturbation", p.cfg.sensitivity_perturbation},
                         {"trials", p.cfg.sensitivity_trials},
                         {"profiles", assessments.size()}});
    std::cout << "sensitivity: stability=" << stability << "\n";
}

}  // namespace

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::config, "cannot open config: " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) fail(ErrorKind::config, "config is not valid JSON: " + path);
    for (const auto& kv : overrides) apply_override(doc, kv);

    RunConfig cfg = config_from_json(doc);
    if (!fs::exists(cfg.transactions_path))
        fail(ErrorKind::config, "transactions file does not exist: " + cfg.transactions_path);
    if (!fs::exists(cfg.reserves_path))
        fail(ErrorKind::config, "reserves file does not exist: " + cfg.reserves_path);
    for (const auto& [task, scores_path] : cfg.external_scores) {
        surv::task_from_name(task);
        if (!fs::exists(scores_path))
            fail(ErrorKind::config, "external scores file does not exist: " + scores_path);
    }
    cfg.config_hash = fnv1a_hex(config_to_json(cfg).dump());
    return cfg;
}

int run(const std::string& command, const RunConfig& config, bool force) {
    try {
        Pipeline p;
        p.cfg = config;
        p.io.dir = config.output_dir;
        p.io.config_hash = config.config_hash;
        fs::create_directories(p.io.dir);
        p.load_inputs();

        if (command == "ingest") {
            stage_ingest(p, force);
        } else if (command == "fit") {
            stage_fit(p, force);
        } else if (command == "assess") {
            stage_assess(p, force);
        } else if (command == "recommend") {
            stage_recommend(p, force);
        } else if (command == "replay") {
            stage_replay(p, force);
        } else if (command == "report") {
            stage_report(p, force);
        } else if (command == "sensitivity") {
            stage_sensitivity(p, force);
        } else {
            std::cerr << "unknown command: " << command << "\n";
            return 1;
        }
        return 0;
    } catch (const Error& e) {
        json err{{"error", e.what()}};
        try {
            std::ofstream out(fs::path(config.output_dir) / "error.json");
            out << err.dump(2) << "\n";
        } catch (...) {
        }
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::data:
            case ErrorKind::io:
                return 2;
            default:
                return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace liqguard::cli
