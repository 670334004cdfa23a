#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>

#include "csbm/errors.hpp"

namespace csbm {

/// Generative specification of a two-class contextual stochastic block model.
///
/// Class 1 occupies node indices [0, N/2), class 2 occupies [N/2, N). Node
/// features are d independent draws from Normal(mu_i, sigma2).
///
/// validate() enforces the structural invariants (even N, probabilities in
/// [0,1], sigma2 > 0, mu1 < mu2). The modelling assumption 0 < q < p is not
/// enforced here; check_regime() reports it, so that degenerate corner cases
/// such as p = q = 1 remain constructible.
struct CsbmParams {
    std::size_t n_nodes = 2000;
    double p_intra = 0.0114;
    double q_inter = 0.0038;
    double mu1 = 1.0;
    double mu2 = 1.5;
    double sigma2 = 1.0;
    std::size_t feature_dim = 1;
    std::uint64_t seed = 0;

    std::size_t class_size() const noexcept { return n_nodes / 2; }
    double sigma() const noexcept { return std::sqrt(sigma2); }
    double np() const noexcept { return static_cast<double>(n_nodes) * p_intra; }
    /// Expected degree N(p+q)/2.
    double mean_degree() const noexcept {
        return static_cast<double>(n_nodes) * (p_intra + q_inter) / 2.0;
    }

    void validate() const {
        if (n_nodes < 2 || n_nodes % 2 != 0)
            throw InvalidArgument("n_nodes must be a positive even integer, got "
                                  + std::to_string(n_nodes));
        if (!(p_intra >= 0.0 && p_intra <= 1.0) || !(q_inter >= 0.0 && q_inter <= 1.0))
            throw InvalidArgument("edge probabilities must lie in [0, 1]");
        if (p_intra + q_inter <= 0.0)
            throw InvalidArgument("p + q must be positive");
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw InvalidArgument("sigma2 must be positive and finite");
        if (!(mu1 < mu2))
            throw InvalidArgument("class means must satisfy mu1 < mu2");
        if (feature_dim == 0)
            throw InvalidArgument("feature_dim must be positive");
    }
};

struct RegimeReport {
    double np_over_log_n = 0.0;
    double nq_over_log_n = 0.0;
    /// a = Np / ln N.
    double a_parameter = 0.0;
    bool homophilous = false;
    bool regime_ok = false;
};

/// Density scale a = Np / log N (natural log).
inline double a_parameter(const CsbmParams &params) {
    return params.np() / std::log(static_cast<double>(params.n_nodes));
}

/// min{a, 2}, the constant that appears throughout the variance bounds.
inline double capped_a(const CsbmParams &params) { return std::min(a_parameter(params), 2.0); }

/// Checks p, q >= log N / N and p > q > 0.
inline RegimeReport check_regime(const CsbmParams &params) {
    const double n = static_cast<double>(params.n_nodes);
    const double log_n = std::log(n);
    RegimeReport r;
    r.np_over_log_n = n * params.p_intra / log_n;
    r.nq_over_log_n = n * params.q_inter / log_n;
    r.a_parameter = r.np_over_log_n;
    r.homophilous = params.p_intra > params.q_inter && params.q_inter > 0.0;
    r.regime_ok = r.homophilous && r.np_over_log_n >= 1.0 && r.nq_over_log_n >= 1.0;
    return r;
}

/// The two nonzero eigenvalues of E[D]^{-1} E[A]: 1 and (p - q)/(p + q).
inline std::pair<double, double> expected_operator_spectrum(const CsbmParams &params) {
    params.validate();
    return {1.0, (params.p_intra - params.q_inter) / (params.p_intra + params.q_inter)};
}

} // namespace csbm
