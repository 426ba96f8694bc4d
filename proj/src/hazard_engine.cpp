#include "liqguard/hazard_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace liqguard::hazard {

namespace {

// Shifted log-risks are clamped to keep exp() and the downstream risk-set
// sums inside double range even for extreme training scores; the median
// shift centers typical data, the clamp covers the tails.
constexpr double kMaxLogRisk = 700.0;

double shifted_risk(double eta, double shift) {
    return std::exp(std::clamp(eta - shift, -kMaxLogRisk, kMaxLogRisk));
}

double lower_median(std::vector<double> values) {
    if (values.empty()) fail(ErrorKind::input, "median of empty set");
    std::size_t k = (values.size() - 1) / 2;  // lower median for even counts
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k),
                     values.end());
    return values[k];
}

void check_finite_features(const surv::SurvivalRecord& r) {
    for (std::size_t j = 0; j < r.features.size(); ++j) {
        if (!std::isfinite(r.features[j]))
            fail(ErrorKind::input,
                 "non-finite feature " + std::to_string(j) + " for user " + r.user_id);
    }
}

// Shared state for one Newton pass: log-likelihood, gradient and Hessian of
// the Breslow partial likelihood (penalty excluded), computed with a single
// reverse sweep over records sorted by descending duration.
struct BreslowPass {
    double loglik = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;  // negative semi-definite part (no penalty)
};

BreslowPass breslow_pass(const std::vector<surv::SurvivalRecord>& records,
                         const std::vector<std::size_t>& order_desc,
                         const Eigen::VectorXd& beta, bool want_derivatives) {
    const auto p = static_cast<std::size_t>(beta.size());
    const auto n = records.size();

    std::vector<double> eta(n);
    double eta_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = records[i].features;
        double v = 0.0;
        for (std::size_t j = 0; j < p; ++j) v += beta[static_cast<Eigen::Index>(j)] * f[j];
        eta[i] = v;
        eta_max = std::max(eta_max, v);
    }

    BreslowPass out;
    out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    out.hess = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    Eigen::MatrixXd s2 =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));

    std::size_t i = 0;
    while (i < order_desc.size()) {
        double t = records[order_desc[i]].duration_days;
        // Add every record with this duration to the risk set.
        std::size_t group_begin = i;
        while (i < order_desc.size() && records[order_desc[i]].duration_days == t) {
            const auto& rec = records[order_desc[i]];
            double w = std::exp(eta[order_desc[i]] - eta_max);
            s0 += w;
            if (want_derivatives) {
                Eigen::Map<const Eigen::VectorXd> x(rec.features.data(),
                                                    static_cast<Eigen::Index>(p));
                s1 += w * x;
                s2 += w * (x * x.transpose());
            }
            ++i;
        }
        // Contribution of events at this duration (all share one risk set).
        double d = 0.0;
        double eta_sum = 0.0;
        Eigen::VectorXd x_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
        for (std::size_t k = group_begin; k < i; ++k) {
            const auto& rec = records[order_desc[k]];
            if (rec.event != 1) continue;
            d += 1.0;
            eta_sum += eta[order_desc[k]];
            if (want_derivatives) {
                Eigen::Map<const Eigen::VectorXd> x(rec.features.data(),
                                                    static_cast<Eigen::Index>(p));
                x_sum += x;
            }
        }
        if (d == 0.0) continue;
        out.loglik += eta_sum - d * (eta_max + std::log(s0));
        if (want_derivatives) {
            Eigen::VectorXd mu = s1 / s0;
            out.grad += x_sum - d * mu;
            out.hess -= d * (s2 / s0 - mu * mu.transpose());
        }
    }
    return out;
}

}  // namespace

double HazardModel::predict(const surv::SurvivalRecord& record) const {
    if (kind == ModelKind::external_scores) {
        auto it = scores.find({record.user_id, record.index_time});
        if (it == scores.end())
            fail(ErrorKind::data, "no external score for user " + record.user_id + " at " +
                                      std::to_string(record.index_time));
        return it->second;
    }
    return predict(std::span<const double>(record.features));
}

double HazardModel::predict(std::span<const double> features) const {
    if (kind != ModelKind::linear_cox)
        fail(ErrorKind::config, "external-score model cannot score raw feature vectors");
    if (features.size() != beta.size())
        fail(ErrorKind::input, "feature vector length " + std::to_string(features.size()) +
                                   " does not match model (" + std::to_string(beta.size()) + ")");
    double v = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        if (!std::isfinite(features[j]))
            fail(ErrorKind::input, "non-finite feature " + std::to_string(j));
        v += beta[j] * features[j];
    }
    return v;
}

HazardModel fit_cox(const std::vector<surv::SurvivalRecord>& records,
                    const FitOptions& options) {
    if (records.size() < 2) fail(ErrorKind::fit, "need at least 2 records to fit");
    std::size_t n_events = 0;
    for (const auto& r : records) {
        check_finite_features(r);
        if (r.duration_days <= 0.0) fail(ErrorKind::fit, "non-positive duration");
        if (r.event == 1) ++n_events;
    }
    if (n_events == 0) fail(ErrorKind::fit, "no observed events");

    const auto p = records.front().features.size();
    for (const auto& r : records) {
        if (r.features.size() != p) fail(ErrorKind::fit, "inconsistent feature lengths");
    }

    std::vector<std::size_t> order_desc(records.size());
    std::iota(order_desc.begin(), order_desc.end(), std::size_t{0});
    std::sort(order_desc.begin(), order_desc.end(), [&](std::size_t a, std::size_t b) {
        return records[a].duration_days > records[b].duration_days;
    });

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    auto penalized = [&](const BreslowPass& pass, const Eigen::VectorXd& b) {
        return pass.loglik - 0.5 * options.ridge * b.squaredNorm();
    };

    BreslowPass pass = breslow_pass(records, order_desc, beta, true);
    double ll = penalized(pass, beta);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        Eigen::VectorXd grad = pass.grad - options.ridge * beta;
        if (!grad.allFinite()) {
            for (Eigen::Index j = 0; j < grad.size(); ++j)
                if (!std::isfinite(grad[j]))
                    fail(ErrorKind::fit, "non-finite likelihood gradient at feature " +
                                             std::to_string(j));
        }
        double grad_norm = grad.lpNorm<Eigen::Infinity>();
        if (grad_norm < options.grad_tol) break;

        Eigen::MatrixXd neg_hess = -pass.hess;
        neg_hess.diagonal().array() += options.ridge;
        // Small diagonal lift keeps the solve well-posed when columns are
        // constant and the ridge is zero.
        neg_hess.diagonal().array() += 1e-12;
        Eigen::VectorXd step = neg_hess.ldlt().solve(grad);

        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            Eigen::VectorXd cand = beta + scale * step;
            BreslowPass cand_pass = breslow_pass(records, order_desc, cand, true);
            double cand_ll = penalized(cand_pass, cand);
            // Near the optimum the quadratic gain drops below the double
            // resolution of the log-likelihood; a halved gradient certifies
            // progress where the LL comparison cannot.
            double cand_grad_norm =
                (cand_pass.grad - options.ridge * cand).lpNorm<Eigen::Infinity>();
            bool better_ll = std::isfinite(cand_ll) && cand_ll >= ll - 1e-13;
            bool better_grad = std::isfinite(cand_ll) && cand_grad_norm < 0.5 * grad_norm;
            if (better_ll || better_grad) {
                beta = cand;
                pass = cand_pass;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;  // no improving step, treat current point as optimum
    }

    if (!beta.allFinite()) fail(ErrorKind::fit, "non-finite coefficients");

    HazardModel model;
    model.kind = ModelKind::linear_cox;
    model.beta.assign(beta.data(), beta.data() + beta.size());
    return model;
}

double BaselineHazard::value_at(double t_days) const {
    if (grid.empty() || t_days < grid.front()) return 0.0;
    auto it = std::upper_bound(grid.begin(), grid.end(), t_days);
    return cumhaz[static_cast<std::size_t>(it - grid.begin()) - 1];
}

BaselineHazard estimate_baseline(const HazardModel& model,
                                 const std::vector<surv::SurvivalRecord>& records,
                                 double epsilon) {
    if (records.empty()) fail(ErrorKind::input, "no records for baseline estimation");

    const auto n = records.size();
    std::vector<double> eta(n);
    for (std::size_t i = 0; i < n; ++i) eta[i] = model.predict(records[i]);

    BaselineHazard base;
    base.epsilon = epsilon;
    base.shift = lower_median(eta);

    std::vector<double> risk(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(eta[i])) fail(ErrorKind::numeric, "non-finite log-hazard score");
        risk[i] = shifted_risk(eta[i], base.shift);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].duration_days < records[b].duration_days;
    });

    // Group by unique duration (ascending), then one reverse cumulative sweep
    // turns per-group risk sums into risk-set sums R(t_k).
    struct Group {
        double t = 0.0;
        double risk_sum = 0.0;
        double events = 0.0;
    };
    std::vector<Group> groups;
    for (std::size_t i = 0; i < n;) {
        Group g;
        g.t = records[order[i]].duration_days;
        while (i < n && records[order[i]].duration_days == g.t) {
            g.risk_sum += risk[order[i]];
            if (records[order[i]].event == 1) g.events += 1.0;
            ++i;
        }
        groups.push_back(g);
    }

    std::vector<double> risk_set(groups.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = groups.size(); k-- > 0;) {
        acc += groups[k].risk_sum;
        risk_set[k] = acc;
    }

    double h = 0.0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (groups[k].events == 0.0) continue;
        if (!(risk_set[k] > 0.0))
            fail(ErrorKind::numeric, "empty risk set at an event time");
        h += groups[k].events / risk_set[k];
        base.grid.push_back(groups[k].t);
        base.cumhaz.push_back(h);
    }
    return base;
}

double return_period(const BaselineHazard& baseline, double eta_new, double horizon_days) {
    if (!(horizon_days > 0.0)) fail(ErrorKind::domain, "horizon must be positive");
    if (!std::isfinite(eta_new)) fail(ErrorKind::input, "non-finite log-hazard score");
    double r_new = shifted_risk(eta_new, baseline.shift);
    double h = baseline.value_at(horizon_days);
    double p = -std::expm1(-h * r_new);  // 1 - exp(-h*r), accurate near zero
    return horizon_days / std::max(p, baseline.epsilon);
}

double return_period(const HazardModel& model, const BaselineHazard& baseline,
                     std::span<const double> x_new, double horizon_days) {
    return return_period(baseline, model.predict(x_new), horizon_days);
}

std::string baseline_to_json(const BaselineHazard& baseline) {
    nlohmann::json doc;
    doc["shift"] = baseline.shift;
    doc["epsilon"] = baseline.epsilon;
    doc["grid"] = baseline.grid;
    doc["cumhaz"] = baseline.cumhaz;
    return doc.dump(2);
}

BaselineHazard baseline_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::data, "baseline parse error: " + std::string(e.what()));
    }
    BaselineHazard base;
    base.shift = doc.at("shift").get<double>();
    base.epsilon = doc.at("epsilon").get<double>();
    base.grid = doc.at("grid").get<std::vector<double>>();
    base.cumhaz = doc.at("cumhaz").get<std::vector<double>>();
    if (base.grid.size() != base.cumhaz.size())
        fail(ErrorKind::data, "baseline grid/cumhaz length mismatch");
    return base;
}

HazardModel load_external_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open external scores: " + path);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::data, "empty external scores file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "user_id,index_time,eta")
        fail(ErrorKind::data, "unexpected header in external scores: " + path);

    HazardModel model;
    model.kind = ModelKind::external_scores;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream ss(line);
        std::string user, ts, eta;
        if (!std::getline(ss, user, ',') || !std::getline(ss, ts, ',') ||
            !std::getline(ss, eta))
            fail(ErrorKind::data,
                 "malformed external score at line " + std::to_string(line_no));
        try {
            model.scores[{user, static_cast<Timestamp>(std::stoll(ts))}] = std::stod(eta);
        } catch (const std::exception&) {
            fail(ErrorKind::data,
                 "malformed external score at line " + std::to_string(line_no));
        }
    }
    return model;
}

}  // namespace liqguard::hazard
