#include "liqguard/trend.hpp"

#include <cmath>
#include <cstddef>

#include "liqguard/errors.hpp"

namespace liqguard::trend {

namespace {

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Sub-slope normalized by its own span; 0 with flag when the segment has
// fewer than two points or no time spread.
double sub_z(std::span<const double> t, std::span<const double> y, double sigma,
             bool& flagged) {
    if (t.size() < 2) {
        flagged = true;
        return 0.0;
    }
    double span = t.back() - t.front();
    if (span == 0.0) {
        flagged = true;
        return 0.0;
    }
    double var = 0.0;
    double tm = mean(t);
    for (double x : t) var += (x - tm) * (x - tm);
    if (var == 0.0) {
        flagged = true;
        return 0.0;
    }
    OlsLine line = ols_fit(t, y);
    return line.slope * span / sigma;
}

}  // namespace

OlsLine ols_fit(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) fail(ErrorKind::input, "times/values length mismatch");
    if (times.size() < 2) fail(ErrorKind::input, "need at least 2 points for a fit");
    double tm = mean(times);
    double ym = mean(values);
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        stt += (times[i] - tm) * (times[i] - tm);
        sty += (times[i] - tm) * (values[i] - ym);
    }
    if (stt == 0.0) fail(ErrorKind::input, "zero time variance");
    OlsLine line;
    line.slope = sty / stt;
    line.intercept = ym - line.slope * tm;
    return line;
}

TrendScore trend_score(std::span<const double> times, std::span<const double> values,
                       const TrendParams& params) {
    const std::size_t n = times.size();
    if (n != values.size()) fail(ErrorKind::input, "times/values length mismatch");
    if (n < 2) fail(ErrorKind::input, "need at least 2 points for a trend score");

    TrendScore score;
    double sigma = population_std(values);
    if (sigma == 0.0) {
        score.degenerate = true;
        return score;
    }

    OlsLine line = ols_fit(times, values);
    double span = times.back() - times.front();
    double z_slope = line.slope * span / sigma;

    // Split: recent = last k points with k = max(2, floor(n/2)); past = rest.
    std::size_t k = std::max<std::size_t>(2, n / 2);
    std::size_t past_len = n - k;
    double z_past = sub_z(times.subspan(0, past_len), values.subspan(0, past_len), sigma,
                          score.past_flagged);
    double z_recent = sub_z(times.subspan(past_len), values.subspan(past_len), sigma,
                            score.recent_flagged);
    double z_accel = z_recent - z_past;

    double resid_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = values[i] - (line.slope * times[i] + line.intercept);
        resid_sq += r * r;
    }
    double z_vol = std::sqrt(resid_sq / static_cast<double>(n)) / sigma;

    double composite = z_slope + params.omega * z_accel - params.lambda * z_vol;

    double m = mean(values);
    double momentum = 1.0;
    if (m == 0.0) {
        score.momentum_flagged = true;
    } else {
        momentum = 1.0 + params.gamma * (values.back() - m) / std::abs(m);
    }
    score.value = composite * momentum;
    return score;
}

}  // namespace liqguard::trend
