#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "csbm/errors.hpp"
#include "csbm/params.hpp"
#include "csbm/theory.hpp"

namespace csbm {

/// Which branch of the z-score procedure applied.
///  AllBelow:       z_upper(n) < z(0) for every n, so no convolution helps.
///  UpperCrossOnly: some z_upper(n) >= z(0) but every z_lower(n) < z(0).
///  LowerCrossToo:  some z_lower(n) >= z(0).
enum class DepthScenario { AllBelow, UpperCrossOnly, LowerCrossToo };

inline const char *to_string(DepthScenario s) {
    switch (s) {
    case DepthScenario::AllBelow: return "AllBelow";
    case DepthScenario::UpperCrossOnly: return "UpperCrossOnly";
    case DepthScenario::LowerCrossToo: return "LowerCrossToo";
    }
    return "?";
}

struct DepthInterval {
    std::size_t lo = 0;
    std::size_t hi = 0;

    bool contains(std::size_t n) const noexcept { return lo <= n && n <= hi; }
    bool operator==(const DepthInterval &) const = default;
};

struct DepthFlags {
    /// z_upper was still above z(0) at the horizon; right ends are capped.
    bool horizon_exhausted = false;
    /// No n < n*_floor had z_upper <= z_lower(n*_floor); left end fell back to 0.
    bool nstar_left_fallback = false;
    /// No n > n*_floor had z_upper <= z_lower(n*_floor); right end fell back to the horizon.
    bool nstar_right_fallback = false;

    bool operator==(const DepthFlags &) const = default;
};

struct DepthPrediction {
    DepthScenario scenario = DepthScenario::AllBelow;
    DepthInterval n0_interval;
    DepthInterval nstar_interval;
    /// argmax of z_lower (LowerCrossToo only, 0 otherwise).
    std::size_t nstar_floor = 0;
    std::size_t horizon = 0;
    DepthFlags flags;
    /// z(0) = (mu2 - mu1) / (2 sigma); the same 1/2 factor is used on every curve.
    double z_input = 0.0;
    std::vector<ZScoreBounds> z_curve;  // index n = 0..horizon, entry 0 is (z(0), z(0))

    bool operator==(const DepthPrediction &o) const {
        return scenario == o.scenario && n0_interval == o.n0_interval
               && nstar_interval == o.nstar_interval && nstar_floor == o.nstar_floor
               && horizon == o.horizon && flags == o.flags;
    }
};

/// Maps the random-walk z-score bound curves over depths 1..horizon to
/// interval predictions for n0 (break-even depth) and n* (optimal depth).
///
/// n_hat is the first depth from which z_upper stays at or below z(0) through
/// the horizon. In LowerCrossToo the n* interval is bracketed by the nearest
/// depths on either side of n*_floor whose z_upper does not exceed
/// z_lower(n*_floor); n*_floor itself is excluded from both searches because
/// z_upper(n*_floor) >= z_lower(n*_floor) always holds.
inline DepthPrediction predict_depth(const CsbmParams &params, std::size_t horizon) {
    params.validate();
    if (horizon < 1)
        throw InvalidArgument("predict_depth requires horizon >= 1");
    if (horizon > params.n_nodes)
        throw InvalidArgument("predict_depth horizon exceeds N");

    DepthPrediction out;
    out.horizon = horizon;
    out.z_input = zscore_input(params);
    out.z_curve.reserve(horizon + 1);
    out.z_curve.push_back({out.z_input, out.z_input});
    for (std::size_t n = 1; n <= horizon; ++n)
        out.z_curve.push_back(zscore_bounds(params, n));

    const double z0 = out.z_input;
    const auto &z = out.z_curve;

    bool upper_reaches = false, lower_reaches = false;
    for (std::size_t n = 1; n <= horizon; ++n) {
        upper_reaches |= z[n].upper >= z0;
        lower_reaches |= z[n].lower >= z0;
    }

    if (!upper_reaches) {
        out.scenario = DepthScenario::AllBelow;
        return out;
    }

    std::size_t n_hat = horizon;
    if (z[horizon].upper > z0) {
        out.flags.horizon_exhausted = true;
    } else {
        while (n_hat > 1 && z[n_hat - 1].upper <= z0)
            --n_hat;
    }
    out.n0_interval = {0, n_hat};

    if (!lower_reaches) {
        out.scenario = DepthScenario::UpperCrossOnly;
        out.nstar_interval = {0, n_hat};
        return out;
    }

    out.scenario = DepthScenario::LowerCrossToo;
    std::size_t floor = 1;
    for (std::size_t n = 2; n <= horizon; ++n)
        if (z[n].lower > z[floor].lower)
            floor = n;
    out.nstar_floor = floor;
    const double target = z[floor].lower;

    std::size_t left = 0;
    out.flags.nstar_left_fallback = true;
    for (std::size_t n = floor; n-- > 1;) {
        if (z[n].upper <= target) {
            left = n;
            out.flags.nstar_left_fallback = false;
            break;
        }
    }
    std::size_t right = horizon;
    out.flags.nstar_right_fallback = true;
    for (std::size_t n = floor + 1; n <= horizon; ++n) {
        if (z[n].upper <= target) {
            right = n;
            out.flags.nstar_right_fallback = false;
            break;
        }
    }
    out.nstar_interval = {left, right};
    return out;
}

} // namespace csbm
