#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liqguard/events.hpp"
#include "liqguard/survival_data.hpp"

// Per-task hazard modelling: a ridge-penalized linear Cox fit (or externally
// supplied log-hazard scores), a numerically stable Breslow baseline with a
// median stability shift, and the horizon-normalized return-period metric.
namespace liqguard::hazard {

enum class ModelKind { linear_cox, external_scores };

struct HazardModel {
    ModelKind kind = ModelKind::linear_cox;
    std::vector<double> beta;  // linear_cox coefficients (feature order)
    std::map<std::pair<std::string, Timestamp>, double> scores;  // external table

    // Log-hazard score for a record. External models look up
    // (user_id, index_time) and fail on a missing key.
    double predict(const surv::SurvivalRecord& record) const;
    // Linear models only.
    double predict(std::span<const double> features) const;
};

struct FitOptions {
    double ridge = 1e-4;
    int max_iter = 100;
    double grad_tol = 1e-8;
};

// Maximizes the Breslow-approximation log partial likelihood minus
// ridge*||beta||^2/2 by Newton ascent with step halving. Requires at least
// two records and one observed event.
HazardModel fit_cox(const std::vector<surv::SurvivalRecord>& records,
                    const FitOptions& options = {});

struct BaselineHazard {
    double shift = 0.0;     // median training log-hazard (stability shift S)
    double epsilon = 1e-12; // probability floor
    std::vector<double> grid;    // unique event times, days, ascending
    std::vector<double> cumhaz;  // cumulative baseline hazard on the grid

    // Step lookup: 0 before the first event time, flat beyond the last.
    double value_at(double t_days) const;
};

// Breslow baseline per the stability recipe: shift log-hazards by their
// median, exponentiate, group records by unique duration, and compute the
// risk-set sums with one reverse cumulative sweep.
BaselineHazard estimate_baseline(const HazardModel& model,
                                 const std::vector<surv::SurvivalRecord>& records,
                                 double epsilon = 1e-12);

// T_ret = dt / max(P, eps) with P = 1 - exp(-H0(dt) * exp(eta - S)).
// Always within [dt, dt/eps].
double return_period(const BaselineHazard& baseline, double eta_new, double horizon_days);
double return_period(const HazardModel& model, const BaselineHazard& baseline,
                     std::span<const double> x_new, double horizon_days);

std::string baseline_to_json(const BaselineHazard& baseline);
BaselineHazard baseline_from_json(const std::string& text);

// External scores CSV: header "user_id,index_time,eta".
HazardModel load_external_scores(const std::string& path);

struct HazardEngine {
    HazardModel model;
    BaselineHazard baseline;
};

}  // namespace liqguard::hazard
