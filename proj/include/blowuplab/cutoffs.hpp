#pragma once

/// Smooth cutoffs for test functions φ(t,x) = ξ1(t/T)^ℓ ξ2(|x|²/T)^ℓ and a
/// second-order forward-mode jet used to differentiate them.

#include "blowuplab/errors.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace blowuplab {

/// Value with first and second derivative along one variable.
struct Jet2 {
    double v = 0, d = 0, dd = 0;

    static Jet2 variable(double x) { return {x, 1.0, 0.0}; }
    static Jet2 constant(double c) { return {c, 0.0, 0.0}; }
};

inline Jet2 operator+(Jet2 a, Jet2 b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet2 operator-(Jet2 a, Jet2 b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet2 operator-(double c, Jet2 a) { return {c - a.v, -a.d, -a.dd}; }
inline Jet2 operator-(Jet2 a, double c) { return {a.v - c, a.d, a.dd}; }
inline Jet2 operator*(Jet2 a, Jet2 b) { return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2 * a.d * b.d + a.v * b.dd}; }
inline Jet2 operator*(double c, Jet2 a) { return {c * a.v, c * a.d, c * a.dd}; }

inline Jet2 reciprocal(Jet2 a)
{
    const double r = 1.0 / a.v;
    return {r, -a.d * r * r, (2.0 * a.d * a.d * r - a.dd) * r * r};
}
inline Jet2 operator/(Jet2 a, Jet2 b) { return a * reciprocal(b); }

inline Jet2 exp(Jet2 a)
{
    const double e = std::exp(a.v);
    return {e, e * a.d, e * (a.dd + a.d * a.d)};
}

/// ξ1(s) = exp(-1/(s(1-s))) on (0,1), zero elsewhere.
inline Jet2 xi1(Jet2 s)
{
    if (s.v <= 0.0 || s.v >= 1.0) return {};
    return exp(-1.0 * reciprocal(s * (1.0 - s)));
}

/// e^{-1/x} for x > 0, zero otherwise.
inline Jet2 smooth_ramp(Jet2 x)
{
    if (x.v <= 0.0) return {};
    return exp(-1.0 * reciprocal(x));
}

/// Smooth step: 1 on [0,1], 0 on [2,∞), monotone in between.
inline Jet2 xi2(Jet2 s)
{
    if (s.v <= 1.0) return Jet2::constant(1.0);
    if (s.v >= 2.0) return {};
    const Jet2 a = smooth_ramp(2.0 - s), b = smooth_ramp(s - 1.0);
    return a / (a + b);
}

inline double xi1(double s) { return xi1(Jet2::constant(s)).v; }
inline double xi2(double s) { return xi2(Jet2::constant(s)).v; }

/// φ(t,x) = ξ1((t - t_start)/T)^ℓ · ξ2(|x|²/S)^ℓ with S = T, or S = R² in the
/// fixed-radius variant. The "uniform" spatial profile replaces ξ2 by 1.
struct TestFunctionSpec {
    int ell = 8;
    std::string xi1_profile = "exp-bump";
    std::string xi2_profile = "smooth-step";
    double T = 1.0;
    std::optional<double> R;
    double t_start = 0.0;

    void validate() const
    {
        detail::require(ell >= 2, "cutoff power ell must be >= 2");
        detail::require(xi1_profile == "exp-bump", "unknown time cutoff profile '" + xi1_profile + "'");
        detail::require(xi2_profile == "smooth-step" || xi2_profile == "uniform",
                        "unknown space cutoff profile '" + xi2_profile + "'");
        detail::require(std::isfinite(T) && T > 0.0, "test-function time scale T must be positive");
        detail::require(!R || (std::isfinite(*R) && *R > 0.0), "test-function radius R must be positive");
        detail::require(std::isfinite(t_start) && t_start >= 0.0, "test-function start must be >= 0");
    }

    [[nodiscard]] bool uniform_space() const { return xi2_profile == "uniform"; }
    [[nodiscard]] double space_scale() const { return R ? *R * *R : T; }

    /// φ1(t) and φ1'(t).
    [[nodiscard]] std::pair<double, double> time_factor(double t) const
    {
        const Jet2 s{(t - t_start) / T, 1.0 / T, 0.0};
        const Jet2 x = xi1(s);
        if (x.v == 0.0) return {0.0, 0.0};
        const double pw = std::pow(x.v, ell - 1);
        return {pw * x.v, ell * pw * x.d};
    }

    /// φ2 as a function of ρ = |x|²: value, d/dρ, d²/dρ².
    [[nodiscard]] Jet2 space_factor(double rho) const
    {
        if (uniform_space()) return Jet2::constant(1.0);
        const double S = space_scale();
        const Jet2 x = xi2(Jet2{rho / S, 1.0 / S, 0.0});
        if (x.v == 0.0) return {};
        const double pm2 = std::pow(x.v, ell - 2);
        return {pm2 * x.v * x.v, ell * pm2 * x.v * x.d, ell * pm2 * ((ell - 1) * x.d * x.d + x.v * x.dd)};
    }

    /// Radial Laplacian of φ2 in dimension N: 4ρ g'' + 2N g'.
    [[nodiscard]] double space_laplacian(double rho, int N) const
    {
        const Jet2 g = space_factor(rho);
        return 4.0 * rho * g.dd + 2.0 * N * g.d;
    }
};

} // namespace blowuplab
