#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srga/error.hpp"

namespace srga {

/// Zero-mean generalized Gaussian
///   p(x) = alpha / (2 beta Gamma(1/alpha)) * exp(-(|x| / beta)^alpha),
///   beta = sigma * sqrt(Gamma(1/alpha) / Gamma(3/alpha)),
/// so sigma is the standard deviation and alpha the shape (1 Laplace, 2 Gaussian).
struct GgdParams {
    double alpha = 2.0;
    double sigma = 1.0;

    double log_beta() const {
        return std::log(sigma) + 0.5 * (std::lgamma(1.0 / alpha) - std::lgamma(3.0 / alpha));
    }
    double beta() const { return std::exp(log_beta()); }

    bool operator==(const GgdParams&) const = default;
};

/// Shape search interval of the moment-matching estimator.
inline constexpr double kAlphaMin = 0.05;
inline constexpr double kAlphaMax = 20.0;
inline constexpr double kAlphaTolerance = 1e-8;
inline constexpr std::size_t kRecommendedSamples = 1000;

inline void check_params(const GgdParams& p) {
    if (!(p.alpha >= kAlphaMin && p.alpha <= kAlphaMax)) {
        throw ParameterError("GGD shape " + std::to_string(p.alpha) + " outside supported range [0.05, 20]");
    }
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
        throw ParameterError("GGD scale must be positive and finite, got " + std::to_string(p.sigma));
    }
}

inline double ggd_log_pdf(const GgdParams& p, double x) {
    const double log_beta = p.log_beta();
    const double log_norm = std::log(p.alpha) - std::log(2.0) - log_beta - std::lgamma(1.0 / p.alpha);
    if (x == 0.0) return log_norm;
    return log_norm - std::exp(p.alpha * (std::log(std::abs(x)) - log_beta));
}

inline double ggd_pdf(const GgdParams& p, double x) { return std::exp(ggd_log_pdf(p, x)); }

/// r(alpha) = Gamma(2/alpha)^2 / (Gamma(1/alpha) Gamma(3/alpha)) = E|x|^2 / E[x^2].
/// Strictly increasing, from 0 towards 3/4.
inline double ratio_fn(double alpha) {
    return std::exp(2.0 * std::lgamma(2.0 / alpha) - std::lgamma(1.0 / alpha) - std::lgamma(3.0 / alpha));
}

/// Moment-matching estimate together with what happened along the way.
struct GgdFit {
    GgdParams params;
    std::size_t n_samples = 0;
    double mean = 0.0;
    double target_ratio = 0.0;
    bool ratio_clamped = false;
    std::vector<std::string> warnings;
};

/// Inverts ratio_fn by bisection on [kAlphaMin, kAlphaMax]. Targets outside
/// the range of r are clamped to the nearest end.
inline double solve_alpha(double target, bool* clamped = nullptr) {
    double lo = kAlphaMin, hi = kAlphaMax;
    if (clamped) *clamped = false;
    if (target <= ratio_fn(lo)) {
        if (clamped) *clamped = true;
        return lo;
    }
    if (target >= ratio_fn(hi)) {
        if (clamped) *clamped = true;
        return hi;
    }
    while (hi - lo > kAlphaTolerance) {
        const double mid = 0.5 * (lo + hi);
        (ratio_fn(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// sigma^ = sqrt(mean x^2); alpha^ solves r(alpha) = (mean |x|)^2 / mean x^2.
/// The sample mean is not subtracted: inputs are PCA coefficients that were
/// centered upstream.
template <typename T>
GgdFit fit_ggd_detailed(std::span<const T> samples) {
    GgdFit fit;
    fit.n_samples = samples.size();
    if (samples.empty()) throw DegenerateError("cannot fit a GGD to zero samples");

    long double sum = 0, sum_abs = 0, sum_sq = 0;
    for (T v : samples) {
        const long double x = static_cast<long double>(v);
        sum += x;
        sum_abs += std::abs(x);
        sum_sq += x * x;
    }
    const long double n = static_cast<long double>(samples.size());
    const double mean = static_cast<double>(sum / n);
    const double mean_abs = static_cast<double>(sum_abs / n);
    const double mean_sq = static_cast<double>(sum_sq / n);
    fit.mean = mean;

    bool all_equal = true;
    for (T v : samples) {
        if (v != samples.front()) {
            all_equal = false;
            break;
        }
    }
    if (all_equal || !(mean_sq > 0.0)) {
        throw DegenerateError("degenerate distribution: all " + std::to_string(samples.size()) +
                              " samples are equal");
    }

    fit.params.sigma = std::sqrt(mean_sq);
    fit.target_ratio = mean_abs * mean_abs / mean_sq;
    fit.params.alpha = solve_alpha(fit.target_ratio, &fit.ratio_clamped);

    if (samples.size() < kRecommendedSamples) {
        fit.warnings.push_back("only " + std::to_string(samples.size()) + " samples (>= 1000 recommended)");
    }
    if (std::abs(mean) > 1e-3 * fit.params.sigma) {
        fit.warnings.push_back("samples are not centered: |mean| = " + std::to_string(std::abs(mean)) +
                               " exceeds 1e-3 sigma = " + std::to_string(1e-3 * fit.params.sigma));
    }
    if (fit.ratio_clamped) {
        fit.warnings.push_back("moment ratio " + std::to_string(fit.target_ratio) +
                               " outside the estimator range; shape clamped to " + std::to_string(fit.params.alpha));
    }
    return fit;
}

/// Same as fit_ggd_detailed, forwarding warnings to the warning handler.
template <typename T>
GgdParams fit_ggd(std::span<const T> samples) {
    auto fit = fit_ggd_detailed(samples);
    for (const auto& w : fit.warnings) warn(w);
    return fit.params;
}

inline GgdParams fit_ggd(const std::vector<double>& samples) { return fit_ggd(std::span<const double>(samples)); }

/// Closed-form KL(p || q) between two zero-mean GGDs:
///   ln(a1 b2 G(1/a2) / (a2 b1 G(1/a1))) + (b1/b2)^a2 G((a2+1)/a1) / G(1/a1) - 1/a1
/// with b the GGD width beta. Evaluated with log-gamma; depends on the scales
/// only through sigma1 / sigma2.
inline double ggd_kld(const GgdParams& p, const GgdParams& q) {
    check_params(p);
    check_params(q);
    const double a1 = p.alpha, a2 = q.alpha;
    const double lg1 = std::lgamma(1.0 / a1), lg2 = std::lgamma(1.0 / a2);
    // ln(b1 / b2) = ln(s1 / s2) + (ln G(1/a1) - ln G(3/a1) - ln G(1/a2) + ln G(3/a2)) / 2
    const double log_beta_ratio =
        std::log(p.sigma / q.sigma) + 0.5 * (lg1 - std::lgamma(3.0 / a1) - lg2 + std::lgamma(3.0 / a2));

    const double log_term = std::log(a1 / a2) - log_beta_ratio + lg2 - lg1;
    const double moment_term = std::exp(a2 * log_beta_ratio + std::lgamma((a2 + 1.0) / a1) - lg1);
    double d = log_term + moment_term - 1.0 / a1;
    if (d < 0.0) {
        if (d < -1e-12) throw std::logic_error("negative KL divergence " + std::to_string(d));
        d = 0.0;
    }
    return d;
}

inline nlohmann::json to_json(const GgdParams& p) { return {{"alpha", p.alpha}, {"sigma", p.sigma}}; }

inline GgdParams ggd_params_from_json(const nlohmann::json& j) {
    return {j.at("alpha").get<double>(), j.at("sigma").get<double>()};
}

}  // namespace srga
