#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ews/core.hpp"
#include "ews/timeseries.hpp"

namespace ews {

// ---------------------------------------------------------------------------
// Scalar series statistics.

struct SummaryStats {
    double mu = 0.0;    // mean
    double sd = 0.0;    // sample standard deviation, divisor n-1
    double var = 0.0;   // population variance, divisor n
};

inline Maybe<SummaryStats> summary_stats(std::span<const double> z) {
    const std::size_t n = z.size();
    if (n < 2) return Maybe<SummaryStats>::null(NullReason::too_short);
    double mu = 0.0;
    for (double v : z) mu += v;
    mu /= double(n);
    double ss = 0.0;
    for (double v : z) ss += (v - mu) * (v - mu);
    SummaryStats s;
    s.mu = mu;
    s.sd = std::sqrt(ss / double(n - 1));
    s.var = ss / double(n);
    return Maybe<SummaryStats>::ok(s);
}

/// Lag-1 autocorrelation: mean of (z_t - mu)(z_{t+1} - mu) over the n-1
/// adjacent pairs, divided by the population variance, clamped to [-1, 1].
/// One global mean, no bias correction.
inline IndicatorValue lag1_autocorrelation(std::span<const double> z) {
    const std::size_t n = z.size();
    if (n < 3) return IndicatorValue::null(NullReason::too_short);
    auto st = summary_stats(z);
    if (st->var <= 0.0) return IndicatorValue::null(NullReason::sigma_zero);
    double num = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) num += (z[t] - st->mu) * (z[t + 1] - st->mu);
    num /= double(n - 1);
    return IndicatorValue::ok(std::clamp(num / st->var, -1.0, 1.0));
}

inline IndicatorValue coefficient_of_variation(std::span<const double> z) {
    if (z.size() < 2) return IndicatorValue::null(NullReason::too_short);
    auto st = summary_stats(z);
    if (st->mu == 0.0) return IndicatorValue::null(NullReason::zero_mean);
    return IndicatorValue::ok(st->sd / st->mu);
}

enum class SkewVariant { standard, paper_literal };

/// Third-moment asymmetry. `standard` normalizes by m2^{3/2}; `paper_literal`
/// divides by sqrt(m2) only, i.e. one power of sigma.
inline IndicatorValue skewness(std::span<const double> z, SkewVariant variant = SkewVariant::standard) {
    const std::size_t n = z.size();
    if (n < 3) return IndicatorValue::null(NullReason::too_short);
    double mu = 0.0;
    for (double v : z) mu += v;
    mu /= double(n);
    double m2 = 0.0, m3 = 0.0;
    for (double v : z) {
        double d = v - mu;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= double(n);
    m3 /= double(n);
    if (m2 <= 0.0) return IndicatorValue::null(NullReason::sigma_zero);
    double denom = variant == SkewVariant::standard ? m2 * std::sqrt(m2) : std::sqrt(m2);
    return IndicatorValue::ok(m3 / denom);
}

// ---------------------------------------------------------------------------
// Return rate: 1 - dominant eigenvalue modulus of a first-order linear
// autoregressive operator fitted column-to-column by least squares after
// removing row means. High return rate = fast recovery from disturbances.

struct Ar1Fit {
    double lambda = 0.0;        // dominant eigenvalue modulus
    double residual_rms = 0.0;  // bytes
};

struct ReturnRate {
    double rate = 0.0;          // 1 - min(lambda, 1)
    Ar1Fit fit;
};

inline constexpr double kRidgeFactor = 1e-6;  // scaled by mean row variance
inline constexpr std::size_t kMinReturnRateCols = 10;

namespace detail {

inline Maybe<ReturnRate> return_rate_cols(const ObservableMatrix& m, std::size_t c0, std::size_t c1) {
    const std::size_t rows = m.rows();
    const std::size_t n = c1 - c0;
    if (rows < 1 || n < kMinReturnRateCols)
        return Maybe<ReturnRate>::null(NullReason::too_short);

    // demean rows over the slice
    Eigen::MatrixXd x(rows, n);
    bool any_var = false;
    for (std::size_t r = 0; r < rows; ++r) {
        double mu = 0.0;
        for (std::size_t c = 0; c < n; ++c) mu += m.at(r, c0 + c);
        mu /= double(n);
        for (std::size_t c = 0; c < n; ++c) {
            x(r, c) = m.at(r, c0 + c) - mu;
            if (x(r, c) != 0.0) any_var = true;
        }
    }
    if (!any_var) return Maybe<ReturnRate>::null(NullReason::degenerate_matrix);

    ReturnRate out;
    if (rows == 1) {
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c + 1 < n; ++c) {
            num += x(0, c) * x(0, c + 1);
            den += x(0, c) * x(0, c);
        }
        if (den <= 0.0) return Maybe<ReturnRate>::null(NullReason::ill_conditioned);
        double slope = num / den;
        out.fit.lambda = std::abs(slope);
        double rss = 0.0;
        for (std::size_t c = 0; c + 1 < n; ++c) {
            double e = x(0, c + 1) - slope * x(0, c);
            rss += e * e;
        }
        out.fit.residual_rms = std::sqrt(rss / double(n - 1));
    } else {
        auto x0 = x.leftCols(n - 1);
        auto x1 = x.rightCols(n - 1);
        double mean_row_var = x.squaredNorm() / double(rows * n);
        double ridge = kRidgeFactor * mean_row_var;
        Eigen::MatrixXd g = x0 * x0.transpose();
        g.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            return Maybe<ReturnRate>::null(NullReason::ill_conditioned);
        Eigen::MatrixXd c = x1 * x0.transpose();
        Eigen::MatrixXd a = ldlt.solve(c.transpose()).transpose();
        if (!a.allFinite()) return Maybe<ReturnRate>::null(NullReason::ill_conditioned);
        Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
        if (es.info() != Eigen::Success)
            return Maybe<ReturnRate>::null(NullReason::ill_conditioned);
        out.fit.lambda = es.eigenvalues().cwiseAbs().maxCoeff();
        out.fit.residual_rms = std::sqrt((x1 - a * x0).squaredNorm() / double(rows * (n - 1)));
    }
    out.rate = 1.0 - std::min(out.fit.lambda, 1.0);
    return Maybe<ReturnRate>::ok(out);
}

}  // namespace detail

inline Maybe<ReturnRate> return_rate(const ObservableMatrix& m) {
    return detail::return_rate_cols(m, 0, m.cols);
}

// ---------------------------------------------------------------------------
// Rolling sub-window trajectories.

struct TrajectoryConfig {
    double sub_len = 10.0;     // seconds
    double sub_stride = 1.0;   // seconds
    double bin_width = 0.1;    // seconds
    Aggregation agg = Aggregation::mean_size;
    SkewVariant skew_variant = SkewVariant::standard;
    std::size_t min_samples = 10;
    bool detrend = false;
};

/// Indicator values at one sub-window position. Any of the four may be null
/// with a reason; samples are never dropped.
struct IndicatorSample {
    double t_mid = 0.0;
    IndicatorValue return_rate;
    IndicatorValue ac1;
    IndicatorValue cv;
    IndicatorValue skewness;
};

namespace detail {

/// Subtracts the least-squares line, preserving nothing but the residuals.
inline void linear_detrend(std::span<double> z) {
    const std::size_t n = z.size();
    if (n < 2) return;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += double(i);
        sy += z[i];
        sxx += double(i) * double(i);
        sxy += double(i) * z[i];
    }
    double d = double(n) * sxx - sx * sx;
    if (d == 0.0) return;
    double b = (double(n) * sxy - sx * sy) / d;
    double a = (sy - b * sx) / double(n);
    for (std::size_t i = 0; i < n; ++i) z[i] -= a + b * double(i);
}

inline std::vector<IndicatorSample> trajectory_from_matrix(const ObservableMatrix* m,
                                                           double window_start, double window_span,
                                                           const TrajectoryConfig& cfg) {
    const auto len_bins = static_cast<std::size_t>(std::llround(cfg.sub_len / cfg.bin_width));
    const auto str_bins = static_cast<std::size_t>(std::llround(cfg.sub_stride / cfg.bin_width));
    const std::size_t total_bins =
        m ? m->cols : static_cast<std::size_t>(std::ceil(window_span / cfg.bin_width - 1e-9));

    std::vector<IndicatorSample> out;

    std::vector<double> agg;
    if (m) {
        auto series = extract_series(*m, SeriesMode::aggregate);
        agg = std::move(series.front().z);
    }

    std::vector<double> sub;
    for (std::size_t p = 0; p * str_bins + len_bins <= total_bins; ++p) {
        std::size_t c0 = p * str_bins;
        std::size_t c1 = c0 + len_bins;
        IndicatorSample s;
        s.t_mid = window_start + (double(c0) + double(len_bins) / 2.0) * cfg.bin_width;
        if (!m) {
            s.return_rate = IndicatorValue::null(NullReason::empty_window);
            s.ac1 = IndicatorValue::null(NullReason::empty_window);
            s.cv = IndicatorValue::null(NullReason::empty_window);
            s.skewness = IndicatorValue::null(NullReason::empty_window);
            out.push_back(s);
            continue;
        }

        sub.assign(agg.begin() + c0, agg.begin() + c1);
        double mu_orig = 0.0;
        for (double v : sub) mu_orig += v;
        mu_orig /= double(sub.size());

        if (cfg.detrend) linear_detrend(sub);

        s.ac1 = lag1_autocorrelation(sub);
        s.skewness = skewness(sub, cfg.skew_variant);
        if (cfg.detrend) {
            // deviations from the detrended residuals, dispersion against the original level
            auto st = summary_stats(sub);
            if (!st.has_value())
                s.cv = IndicatorValue::null(st.reason);
            else if (mu_orig == 0.0)
                s.cv = IndicatorValue::null(NullReason::zero_mean);
            else
                s.cv = IndicatorValue::ok(st->sd / mu_orig);
        } else {
            s.cv = coefficient_of_variation(sub);
        }

        if (cfg.detrend) {
            ObservableMatrix dm;
            dm.dests = m->dests;
            dm.bin_width = m->bin_width;
            dm.cols = len_bins;
            dm.values.resize(m->rows() * len_bins);
            for (std::size_t r = 0; r < m->rows(); ++r) {
                auto row = m->row(r);
                std::copy(row.begin() + c0, row.begin() + c1, dm.values.begin() + r * len_bins);
                linear_detrend({dm.values.data() + r * len_bins, len_bins});
            }
            auto rr = return_rate(dm);
            s.return_rate = rr.has_value() ? IndicatorValue::ok(rr->rate)
                                           : IndicatorValue::null(rr.reason);
        } else {
            auto rr = detail::return_rate_cols(*m, c0, c1);
            s.return_rate = rr.has_value() ? IndicatorValue::ok(rr->rate)
                                           : IndicatorValue::null(rr.reason);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace detail

/// Rolling indicators within one window: scalar indicators on the aggregate
/// series, return rate on the sub-matrix. An empty window (no qualifying
/// destination) yields samples that are all null(EmptyWindow).
inline std::vector<IndicatorSample> indicator_trajectory(const Window& w, const TrajectoryConfig& cfg) {
    if (!(cfg.sub_len > 0.0) || !(cfg.sub_stride > 0.0) || !(cfg.bin_width > 0.0))
        throw BadConfigError("sub_len, sub_stride and bin_width must be positive");
    if (cfg.sub_len >= w.span())
        throw BadConfigError("sub_len must be smaller than the window span");
    if (cfg.sub_len < 2.0 * cfg.bin_width)
        throw BadConfigError("sub_len must cover at least two bins");

    auto m = build_observable_matrix(w, cfg.bin_width, cfg.agg, cfg.min_samples);
    return detail::trajectory_from_matrix(m ? &*m : nullptr, w.start_t, w.span(), cfg);
}

}  // namespace ews
