#pragma once

/// Residual of the weak formulation evaluated on a stored trajectory.

#include "blowuplab/cutoffs.hpp"
#include "blowuplab/duhamel.hpp"

#include <cmath>
#include <utility>

namespace blowuplab {

/// Absolute residuals of
///   ∫∫ |v|^p φ + ∫∫ t^σ w1 φ = -∫∫ u Δφ - ∫∫ u φ_t
/// and its mirror for the second component. Time integrals use the
/// trapezoid rule on the history nodes, space integrals the grid sum, and
/// Δφ the spectral Laplacian.
inline std::pair<double, double> verify_weak_identity(const SolutionState& state, const TestFunctionSpec& spec)
{
    spec.validate();
    detail::require(!state.history.empty(), "weak identity needs a solution history (keep_history)");
    detail::require(spec.t_start > 0.0 && spec.t_start + spec.T < state.t,
                    "test function support must lie strictly inside (0, t)");
    const Grid& g = state.u.grid();
    if (!spec.uniform_space()) {
        const double support = std::sqrt(2.0 * spec.space_scale());
        detail::require(support < 0.5 * g.length, "spatial support of the test function must fit in the torus");
    }

    Field phi2(g);
    for (std::size_t i = 0; i < phi2.size(); ++i) phi2[i] = spec.space_factor(g.radius_squared(i)).v;
    const Field lap = laplacian(phi2);

    auto dot = [&](const Field& a, const Field& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s * g.cell_volume();
    };
    const double w1_phi = dot(state.origin.w1.profile, phi2);
    const double w2_phi = dot(state.origin.w2.profile, phi2);
    const double sigma = state.origin.w1.exponent, gamma = state.origin.w2.exponent;
    const double p = state.config.p, q = state.config.q;

    auto integrand = [&](const Snapshot& s) {
        const auto [f1, df1] = spec.time_factor(s.t);
        if (f1 == 0.0 && df1 == 0.0) return std::pair{0.0, 0.0};
        const double r1 = f1 * (dot(detail::nonlinearity(s.v, p), phi2) + std::pow(s.t, sigma) * w1_phi + dot(s.u, lap)) +
                          df1 * dot(s.u, phi2);
        const double r2 = f1 * (dot(detail::nonlinearity(s.u, q), phi2) + std::pow(s.t, gamma) * w2_phi + dot(s.v, lap)) +
                          df1 * dot(s.v, phi2);
        return std::pair{r1, r2};
    };

    double res1 = 0.0, res2 = 0.0;
    auto prev = integrand(state.history.front());
    for (std::size_t j = 1; j < state.history.size(); ++j) {
        const auto cur = integrand(state.history[j]);
        const double h = state.history[j].t - state.history[j - 1].t;
        res1 += 0.5 * h * (prev.first + cur.first);
        res2 += 0.5 * h * (prev.second + cur.second);
        prev = cur;
    }
    return {std::abs(res1), std::abs(res2)};
}

} // namespace blowuplab
