#pragma once

#include <span>

// Dimensionless, volatility-adjusted trend scoring of return-period series.
namespace liqguard::trend {

struct TrendParams {
    double omega = 0.8;   // acceleration weight
    double lambda = 0.6;  // volatility penalty weight
    double gamma = 0.3;   // momentum scalar
};

struct OlsLine {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares line through (times, values). Throws Error(input) for fewer
// than two points or zero time variance.
OlsLine ols_fit(std::span<const double> times, std::span<const double> values);

struct TrendScore {
    double value = 0.0;
    bool degenerate = false;       // zero-variance series: score pinned to 0
    bool past_flagged = false;     // past sub-slope unavailable (term = 0)
    bool recent_flagged = false;   // recent sub-slope unavailable (term = 0)
    bool momentum_flagged = false; // zero mean: momentum factor pinned to 1
};

// V = (Z_slope + omega*Z_accel - lambda*Z_vol) * (1 + gamma*Rel), with all Z
// terms normalized by the population standard deviation of the values and by
// each segment's own time span.
TrendScore trend_score(std::span<const double> times, std::span<const double> values,
                       const TrendParams& params = {});

}  // namespace liqguard::trend
