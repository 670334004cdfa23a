#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "csbm/errors.hpp"
#include "csbm/graph.hpp"
#include "csbm/params.hpp"
#include "csbm/propagation.hpp"
#include "csbm/structure.hpp"

// Closed-form mixing/denoising quantities for linear message passing on the
// two-class CSBM. Everything here is a pure function of CsbmParams (plus the
// graph for variance_limit). Products of the form x^n y^{2n-2k} are evaluated
// in log space: (Np)^n alone overflows a double near n = 180 at Np = 22.8.

namespace csbm {

/// Thrown when a lower bound exceeds the matching upper bound inside the
/// model's regime.
class BoundInconsistencyError : public Error {
public:
    using Error::Error;
};

/// Unspecified constants of the concentration statements, user supplied.
struct ConcentrationConfig {
    double r_exponent = 1.0;
    double constant_C = 1.0;
    std::size_t horizon_K = 8;

    void validate() const {
        if (!(r_exponent > 0.0) || !(constant_C > 0.0) || horizon_K == 0)
            throw InvalidArgument("concentration config fields must be positive");
    }
};

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

/// Standard normal CDF via the C library's erfc (glibc's implementation is a
/// piecewise rational approximation from Sun's fdlibm s_erf.c, relative error
/// below 1 ulp), so the absolute error is far below 1e-12 everywhere.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x), computed without cancellation.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Bayes error 1 - Phi((sqrt(d)/2) * gap / sigma) of the two-class Gaussian
/// model with isotropic features in d dimensions.
inline double bayes_error(double mean_gap, double sigma, std::size_t d) {
    if (!(sigma > 0.0))
        throw InvalidArgument("bayes_error requires sigma > 0");
    if (d == 0)
        throw InvalidArgument("bayes_error requires d >= 1");
    return normal_sf(std::sqrt(static_cast<double>(d)) / 2.0 * mean_gap / sigma);
}

// ---------------------------------------------------------------------------
// Random-walk convolution
// ---------------------------------------------------------------------------

/// Contraction factor (p - q)/(p + q) of the class-mean gap per convolution.
inline double mixing_ratio(const CsbmParams &params) {
    return (params.p_intra - params.q_inter) / (params.p_intra + params.q_inter);
}

/// ((p - q)/(p + q))^n (mu2 - mu1).
inline double mean_gap(const CsbmParams &params, std::size_t n) {
    params.validate();
    return std::pow(mixing_ratio(params), static_cast<double>(n)) * (params.mu2 - params.mu1);
}

/// Radius C / sqrt(N(p + q)) of the high-probability band around mean_gap.
inline double mean_gap_error(const CsbmParams &params, const ConcentrationConfig &cfg) {
    params.validate();
    cfg.validate();
    const double n = static_cast<double>(params.n_nodes);
    return cfg.constant_C / std::sqrt(n * (params.p_intra + params.q_inter));
}

struct VarianceBounds {
    double lower = 0.0;
    double upper = 0.0;
    /// Upper-bound series before the [1/N, 1] clamp, in units of sigma2.
    double upper_series = 0.0;
    /// The series fell below the universal 1/N floor and was raised to it.
    bool upper_floored = false;

    bool consistent() const noexcept { return lower <= upper; }
};

namespace detail {

inline double log_sum_exp(const std::vector<double> &terms) {
    if (terms.empty())
        return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(top))
        return top;
    double s = 0.0;
    for (double t : terms)
        s += std::exp(t - top);
    return top + std::log(s);
}

inline void require_depth_range(const CsbmParams &params, std::size_t n, const char *what) {
    if (n > params.n_nodes)
        throw PreconditionError(std::string(what) + ": depth " + std::to_string(n)
                                + " exceeds N = " + std::to_string(params.n_nodes));
}

// log of sum_{k=0}^{floor(n/2)} (9/m)(n-2k+1)^{2k} (Np)^{n-2k} (2/(N(p+q)))^{2n-2k}.
inline double log_variance_series(const CsbmParams &params, std::size_t n) {
    const double big_n = static_cast<double>(params.n_nodes);
    const double log_np = std::log(params.np());
    const double log_inv_deg = std::log(2.0 / (big_n * (params.p_intra + params.q_inter)));
    const double log_c = std::log(9.0 / capped_a(params));
    std::vector<double> terms;
    terms.reserve(n / 2 + 1);
    for (std::size_t k = 0; 2 * k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double rest = static_cast<double>(n - 2 * k);
        terms.push_back(log_c + 2.0 * kk * std::log(rest + 1.0) + rest * log_np
                        + (2.0 * static_cast<double>(n) - 2.0 * kk) * log_inv_deg);
    }
    return log_sum_exp(terms);
}

} // namespace detail

/// Lower and upper bounds on the within-class variance after n random-walk
/// convolutions. Depth 0 is the identity (sigma2, sigma2).
///
/// lower = max{ (min{a,2}/10) (Np)^{-n}, 1/N } sigma2
/// upper = min{ max{ S_n, 1/N }, 1 } sigma2,  S_n the neighbourhood series.
///
/// No node variance can fall below sigma2/N, so S_n is floored there; for
/// the default parameters the raw series crosses 1/N at n = 5.
inline VarianceBounds variance_bounds(const CsbmParams &params, std::size_t n) {
    params.validate();
    detail::require_depth_range(params, n, "variance_bounds");
    const double s2 = params.sigma2;
    if (n == 0)
        return {s2, s2, 1.0, false};

    const double inv_n = 1.0 / static_cast<double>(params.n_nodes);
    const double m = capped_a(params);
    const double lower_term =
        std::exp(std::log(m / 10.0) - static_cast<double>(n) * std::log(params.np()));

    VarianceBounds b;
    b.lower = std::max(lower_term, inv_n) * s2;
    b.upper_series = std::exp(detail::log_variance_series(params, n));
    b.upper_floored = b.upper_series < inv_n;
    b.upper = std::min(std::max(b.upper_series, inv_n), 1.0) * s2;
    return b;
}

/// Fixed-horizon upper bound (C_K / min{a,2}) (N(p+q))^{-n} sigma2, capped at sigma2.
inline double variance_bounds_fixedK(const CsbmParams &params, std::size_t n, double c_k) {
    params.validate();
    if (!(c_k > 0.0))
        throw InvalidArgument("C_K must be positive");
    const double big_n = static_cast<double>(params.n_nodes);
    const double log_term = std::log(c_k / capped_a(params))
                            - static_cast<double>(n) * std::log(big_n * (params.p_intra + params.q_inter));
    return std::min(std::exp(log_term), 1.0) * params.sigma2;
}

struct ZScoreBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// z_lower = gap / (2 sqrt(var_upper)), z_upper = gap / (2 sqrt(var_lower)).
inline ZScoreBounds zscore_bounds(const CsbmParams &params, std::size_t n) {
    const double gap = mean_gap(params, n);
    const auto vb = variance_bounds(params, n);
    return {gap / (2.0 * std::sqrt(vb.upper)), gap / (2.0 * std::sqrt(vb.lower))};
}

/// z-score of the raw features, (mu2 - mu1) / (2 sigma).
inline double zscore_input(const CsbmParams &params) {
    return (params.mu2 - params.mu1) / (2.0 * params.sigma());
}

// ---------------------------------------------------------------------------
// Personalized PageRank propagation
// ---------------------------------------------------------------------------

namespace detail {
inline void require_alpha(double alpha, bool allow_zero) {
    if (!(alpha <= 1.0 && (allow_zero ? alpha >= 0.0 : alpha > 0.0)))
        throw InvalidArgument("teleportation alpha out of range");
}
} // namespace detail

/// (p + q) / (p + ((2 - alpha)/alpha) q) (mu2 - mu1).
inline double ppnp_mean_gap(const CsbmParams &params, double alpha) {
    params.validate();
    detail::require_alpha(alpha, false);
    const double p = params.p_intra, q = params.q_inter;
    return (p + q) / (p + (2.0 - alpha) / alpha * q) * (params.mu2 - params.mu1);
}

/// Mean gap after n APPNP layers: the PPNP limit plus a transient that decays
/// as ((1 - alpha)(p - q)/(p + q))^n. Evaluated with the alpha-multiplied
/// form of the first coefficient so that alpha = 0 reduces to mean_gap.
inline double appnp_mean_gap(const CsbmParams &params, double alpha, std::size_t n) {
    params.validate();
    detail::require_alpha(alpha, true);
    const double p = params.p_intra, q = params.q_inter;
    const double denom = alpha * p + (2.0 - alpha) * q;
    const double stationary = alpha * (p + q) / denom;
    const double transient = (2.0 - 2.0 * alpha) * q / denom;
    const double decay = std::pow((1.0 - alpha) * mixing_ratio(params), static_cast<double>(n));
    return (stationary + transient * decay) * (params.mu2 - params.mu1);
}

struct PpnpVarianceBounds {
    double lower = 0.0;
    double upper = 0.0;
    /// The alpha-series term exceeds sigma2 and therefore sets the upper bound.
    bool series_exceeds_sigma2 = false;
};

/// PPNP variance bounds with K retained series terms:
/// lower = max{ alpha^2 min{a,2}/10, 1/N } sigma2
/// upper = max{ alpha^2 (sum_{k<=K} (1-alpha)^k sqrt(var_upper(k)) + (1-alpha)^{K+1} sigma / alpha)^2, sigma2 }
/// The outer max with sigma2 is kept as stated, which makes the upper bound at least sigma2.
inline PpnpVarianceBounds ppnp_variance_bounds(const CsbmParams &params, double alpha,
                                               std::size_t truncation) {
    params.validate();
    detail::require_alpha(alpha, false);
    if (truncation < 1)
        throw PreconditionError("ppnp_variance_bounds requires K >= 1");
    detail::require_depth_range(params, truncation, "ppnp_variance_bounds");
    const double s2 = params.sigma2;
    const double inv_n = 1.0 / static_cast<double>(params.n_nodes);

    double series = 0.0;
    double weight = 1.0;
    for (std::size_t k = 0; k <= truncation; ++k) {
        series += weight * std::sqrt(variance_bounds(params, k).upper);
        weight *= 1.0 - alpha;
    }
    series += weight / alpha * params.sigma();
    const double alpha_term = alpha * alpha * series * series;

    PpnpVarianceBounds b;
    b.lower = std::max(alpha * alpha * capped_a(params) / 10.0, inv_n) * s2;
    b.upper = std::max(alpha_term, s2);
    b.series_exceeds_sigma2 = alpha_term > s2;
    return b;
}

/// APPNP variance bounds after n layers (depth 0 is the identity):
/// lower = max{ (min{a,2}/10)(alpha^2 + (1-alpha)^{2n} / (Np)^n), 1/N } sigma2
/// upper = min{ (alpha sum_{k<n} (1-alpha)^k sqrt(vu(k)) + (1-alpha)^n sqrt(vu(n)))^2, sigma2 }
inline VarianceBounds appnp_variance_bounds(const CsbmParams &params, double alpha,
                                            std::size_t n) {
    params.validate();
    detail::require_alpha(alpha, true);
    detail::require_depth_range(params, n, "appnp_variance_bounds");
    const double s2 = params.sigma2;
    if (n == 0)
        return {s2, s2, 1.0, false};
    const double inv_n = 1.0 / static_cast<double>(params.n_nodes);
    const double m = capped_a(params);
    const double nn = static_cast<double>(n);

    const double walk_term =
        std::exp(2.0 * nn * std::log1p(-alpha) - nn * std::log(params.np()));
    const double lower = std::max(m / 10.0 * (alpha * alpha + walk_term), inv_n) * s2;

    double series = 0.0;
    double weight = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        series += weight * std::sqrt(variance_bounds(params, k).upper);
        weight *= 1.0 - alpha;
    }
    const auto last = variance_bounds(params, n);
    const double root = alpha * series + weight * std::sqrt(last.upper);

    VarianceBounds b;
    b.lower = lower;
    b.upper = std::min(root * root, s2);
    b.upper_series = last.upper_series;
    b.upper_floored = last.upper_floored;
    return b;
}

// ---------------------------------------------------------------------------
// Neighbourhood sizes and depth scale
// ---------------------------------------------------------------------------

/// log N / log(log N) in the given base (e for natural logs).
inline double depth_scale(double n_nodes, double log_base = std::numbers::e) {
    if (!(n_nodes >= 3.0))
        throw InvalidArgument("depth_scale requires N >= 3");
    if (!(log_base > 0.0) || log_base == 1.0)
        throw InvalidArgument("invalid logarithm base");
    const double lb = std::log(log_base);
    const double log_n = std::log(n_nodes) / lb;
    return log_n / (std::log(log_n) / lb);
}

/// Ball-size bound |N_n| <= (10 / min{a,2}) (Np)^n.
inline double neighborhood_bound(const CsbmParams &params, std::size_t n) {
    params.validate();
    return std::exp(std::log(10.0 / capped_a(params)) + static_cast<double>(n) * std::log(params.np()));
}

/// Shell-size bound |Gamma_j| <= (9 / min{a,2}) (Np)^j.
inline double shell_bound(const CsbmParams &params, std::size_t j) {
    params.validate();
    return std::exp(std::log(9.0 / capped_a(params)) + static_cast<double>(j) * std::log(params.np()));
}

/// neighborhood_bound clipped to the graph size.
inline double neighborhood_bound_capped(const CsbmParams &params, std::size_t n) {
    return std::min(neighborhood_bound(params, n), static_cast<double>(params.n_nodes));
}

/// Limit of every node's random-walk variance (in units of sigma2):
/// ||d||_2^2 / ||d||_1^2. Requires a connected, non-bipartite graph.
inline double variance_limit(const Graph &g) {
    if (g.num_nodes() == 0)
        throw PreconditionError("variance_limit: empty graph");
    if (!is_connected(g))
        throw PreconditionError("variance_limit: graph is disconnected");
    if (is_bipartite(g))
        throw PreconditionError("variance_limit: graph is bipartite");
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        const double d = static_cast<double>(g.degree(v));
        sum += d;
        sum_sq += d * d;
    }
    return sum_sq / (sum * sum);
}

// ---------------------------------------------------------------------------
// Per-depth curves
// ---------------------------------------------------------------------------

struct TheoryBounds {
    std::size_t depth = 0;
    double mean_gap = 0.0;
    double var_lower = 0.0;
    double var_upper = 0.0;
    double z_lower = 0.0;
    double z_upper = 0.0;
    /// Pairs with z_upper (smaller error); bayes_err_upper pairs with z_lower.
    double bayes_err_lower = 0.0;
    double bayes_err_upper = 0.0;
    bool upper_floored = false;
    bool ppnp_series_exceeds_sigma2 = false;

    bool consistent() const noexcept { return var_lower <= var_upper && z_lower <= z_upper; }
};

namespace detail {
inline TheoryBounds make_row(std::size_t depth, double gap, double var_lower, double var_upper,
                             std::size_t dim) {
    TheoryBounds row;
    row.depth = depth;
    row.mean_gap = gap;
    row.var_lower = var_lower;
    row.var_upper = var_upper;
    row.z_lower = gap / (2.0 * std::sqrt(var_upper));
    row.z_upper = gap / (2.0 * std::sqrt(var_lower));
    row.bayes_err_lower = bayes_error(gap, std::sqrt(var_lower), dim);
    row.bayes_err_upper = bayes_error(gap, std::sqrt(var_upper), dim);
    return row;
}
} // namespace detail

/// Theory rows for depths 0..n_max. Symmetric convolution has no closed form
/// on the CSBM and is rejected. A crossing of lower and upper bounds raises
/// BoundInconsistencyError when the parameters satisfy the model regime and
/// is left in the row (consistent() == false) otherwise.
inline std::vector<TheoryBounds> theory_curve(const CsbmParams &params, const OperatorSpec &op,
                                              std::size_t n_max) {
    params.validate();
    op.validate();
    if (op.kind == OperatorKind::Symmetric)
        throw InvalidArgument("no closed-form theory for the symmetric operator");
    const std::size_t dim = params.feature_dim;
    const double s2 = params.sigma2;

    std::vector<TheoryBounds> rows;
    rows.reserve(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        TheoryBounds row;
        switch (op.kind) {
        case OperatorKind::RandomWalk: {
            const auto vb = variance_bounds(params, n);
            row = detail::make_row(n, mean_gap(params, n), vb.lower, vb.upper, dim);
            row.upper_floored = vb.upper_floored;
            break;
        }
        case OperatorKind::Appnp: {
            const auto vb = appnp_variance_bounds(params, op.alpha, n);
            row = detail::make_row(n, appnp_mean_gap(params, op.alpha, n), vb.lower, vb.upper, dim);
            row.upper_floored = vb.upper_floored;
            break;
        }
        case OperatorKind::Ppnp: {
            if (n == 0) {
                row = detail::make_row(0, params.mu2 - params.mu1, s2, s2, dim);
                break;
            }
            const auto vb = ppnp_variance_bounds(params, op.alpha, op.truncation);
            row = detail::make_row(n, ppnp_mean_gap(params, op.alpha), vb.lower, vb.upper, dim);
            row.ppnp_series_exceeds_sigma2 = vb.series_exceeds_sigma2;
            break;
        }
        case OperatorKind::Symmetric: break;
        }
        if (!row.consistent() && check_regime(params).regime_ok)
            throw BoundInconsistencyError("variance bounds cross at depth " + std::to_string(n));
        rows.push_back(row);
    }
    return rows;
}

} // namespace csbm
