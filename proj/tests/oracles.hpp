#pragma once

// Independent reference computations used as test oracles. Nothing here
// calls into the library except for plain data types.

#include "blowuplab/exponents.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using blowuplab::ProblemParams;

struct Exps {
    double d1, d2, k1, k2, th1, th2;
};

// Written from the formulas in factored form, not copied from the library.
inline Exps exponents(const ProblemParams& P)
{
    const double N = P.dim, p = P.p, q = P.q;
    const double pq1 = p * q - 1.0;
    Exps e{};
    e.d1 = 0.5 * N * pq1 / (p + 1.0);
    e.d2 = 0.5 * N * pq1 / (q + 1.0);
    e.k1 = 0.5 * N / ((1.0 + P.sigma) + (p + 1.0) / pq1);
    e.k2 = 0.5 * N / ((1.0 + P.gamma) + (q + 1.0) / pq1);
    e.th1 = 0.5 * N - (p * q + p) / pq1 - P.sigma;
    e.th2 = 0.5 * N - (p * q + q) / pq1 - P.gamma;
    return e;
}

inline bool c3(const ProblemParams& P)
{
    const double pq1 = P.p * P.q - 1.0;
    const double a1 = P.sigma + 1.0 + (P.p + 1.0) / pq1;
    const double a2 = P.gamma + 1.0 + (P.q + 1.0) / pq1;
    return P.dim / 2.0 >= std::max(a1, a2);
}

inline bool cetr(const ProblemParams& P)
{
    return P.p > std::max(P.sigma / P.gamma, 1.0) && P.q > std::max(P.gamma / P.sigma, 1.0);
}

// All strict constraints of the pair region at (a, b), no tolerance.
inline bool in_region(const ProblemParams& P, const Exps& e, double a, double b)
{
    const double N = P.dim, p = P.p, q = P.q;
    const bool chain_a = 1.0 / (q * e.d2) < a && 1.0 / e.k1 - 2.0 / N < a && a < 1.0 / e.d1 && a < 1.0 / q;
    const bool chain_b = 1.0 / (p * e.d1) < b && 1.0 / e.k2 - 2.0 / N < b && b < 1.0 / e.d2 && b < 1.0 / p;
    const double s = p * b - a, t = q * a - b;
    return chain_a && chain_b && s > 0.0 && s < 2.0 / N && t > 0.0 && t < 2.0 / N;
}

// Dense cell-centred grid search over the box spanned by the one-sided chain
// bounds; returns true as soon as one grid point satisfies every constraint.
inline bool region_nonempty(const ProblemParams& P, int n = 200)
{
    const Exps e = exponents(P);
    const double N = P.dim;
    const double alo = std::max(1.0 / (P.q * e.d2), 1.0 / e.k1 - 2.0 / N);
    const double ahi = std::min(1.0 / e.d1, 1.0 / P.q);
    const double blo = std::max(1.0 / (P.p * e.d1), 1.0 / e.k2 - 2.0 / N);
    const double bhi = std::min(1.0 / e.d2, 1.0 / P.p);
    if (!(alo < ahi && blo < bhi)) return false;
    for (int i = 0; i < n; ++i) {
        const double a = alo + (ahi - alo) * (i + 0.5) / n;
        for (int j = 0; j < n; ++j) {
            const double b = blo + (bhi - blo) * (j + 0.5) / n;
            if (in_region(P, e, a, b)) return true;
        }
    }
    return false;
}

// Random tuple with sigma, gamma in (-1,0) satisfying C3 and CETR.
inline ProblemParams random_global_params(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_real_distribution<double> exp(1.05, 8.0);
    std::uniform_real_distribution<double> neg(-0.95, -0.05);
    for (;;) {
        ProblemParams P;
        P.dim = dim(rng);
        P.p = exp(rng);
        P.q = exp(rng);
        P.sigma = neg(rng);
        P.gamma = neg(rng);
        if (c3(P) && cetr(P)) return P;
    }
}

// Reference for the spatially uniform system U' = |V|^p + c1 t^σ, V' = |U|^q + c2 t^γ.
// The singular forcing is integrated analytically, leaving a smooth ODE for
// (U - c1 t^{σ+1}/(σ+1), V - c2 t^{γ+1}/(γ+1)) solved by adaptive dopri5.
struct OdeCase {
    double p, q, sigma, gamma, u0, v0, c1, c2;
};

inline std::array<double, 2> ode_solution(const OdeCase& c, double t_end)
{
    using State = std::array<double, 2>;
    namespace ode = boost::numeric::odeint;
    auto F1 = [&](double t) { return c.c1 * std::pow(t, c.sigma + 1.0) / (c.sigma + 1.0); };
    auto F2 = [&](double t) { return c.c2 * std::pow(t, c.gamma + 1.0) / (c.gamma + 1.0); };
    State y{c.u0, c.v0};
    if (t_end == 0.0) return y;
    auto rhs = [&](const State& z, State& dz, double t) {
        const double U = z[0] + F1(t), V = z[1] + F2(t);
        dz[0] = std::pow(std::abs(V), c.p);
        dz[1] = std::pow(std::abs(U), c.q);
    };
    auto stepper = ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<State>());
    ode::integrate_adaptive(stepper, rhs, y, 0.0, t_end, 1e-6);
    return {y[0] + F1(t_end), y[1] + F2(t_end)};
}

// ∫_a^b s^e exp(-λ(b-s)) ds by product trapezoid: on each of n uniform panels
// the exponential is replaced by its linear interpolant and integrated
// exactly against s^e. One Richardson step on (n, 2n) removes the h² term.
// ∫_0^h (s0+x)^e x^j dx for j = 0, 1; a binomial series when h << s0 avoids
// the cancellation of the closed form.
inline std::array<double, 2> shifted_moments(double e, double s0, double h)
{
    if (s0 > 10.0 * h) {
        std::array<double, 2> m{0.0, 0.0};
        double coef = 1.0; // binom(e, k) (h/s0)^k
        for (int k = 0; k < 40; ++k) {
            m[0] += coef * h / (k + 1.0);
            m[1] += coef * h * h / (k + 2.0);
            coef *= (e - k) / (k + 1.0) * (h / s0);
            if (std::abs(coef) < 1e-20) break;
        }
        const double w = std::pow(s0, e);
        return {m[0] * w, m[1] * w};
    }
    const double s1 = s0 + h;
    const double m0 = (std::pow(s1, e + 1.0) - std::pow(s0, e + 1.0)) / (e + 1.0);
    const double m1 = (std::pow(s1, e + 2.0) - std::pow(s0, e + 2.0)) / (e + 2.0);
    return {m0, m1 - s0 * m0};
}

// ∫_a^b s^e F(s) ds with F replaced on each of n uniform panels by its linear
// interpolant, integrated exactly against s^e.
template <class F>
double product_trapezoid(double e, const F& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double total = 0.0;
    double f0 = f(a);
    for (int i = 0; i < n; ++i) {
        const double s0 = a + i * h;
        const double f1 = f(s0 + h);
        const auto m = shifted_moments(e, s0, h);
        total += f0 * m[0] + (f1 - f0) / h * m[1];
        f0 = f1;
    }
    return total;
}

// One Richardson step on (n, 2n) removes the h² term.
template <class F>
double product_trapezoid_richardson(double e, const F& f, double a, double b, int n)
{
    const double coarse = product_trapezoid(e, f, a, b, n);
    const double fine = product_trapezoid(e, f, a, b, 2 * n);
    return (4.0 * fine - coarse) / 3.0;
}

// ∫_a^b s^e exp(-λ(b-s)) ds.
inline double graded_heat_integral(double e, double lambda, double a, double b, int n)
{
    n = std::max(n, static_cast<int>(50.0 * lambda * (b - a)));
    return product_trapezoid_richardson(e, [&](double s) { return std::exp(-lambda * (b - s)); }, a, b, n);
}

// ∫_0^t s^e [S(t-s) g](x) ds for the free-space Gaussian g = exp(-|x|²/(4a)),
// using the closed-form heat evolution of g.
inline double gaussian_forcing_reference(double e, double a, int dim, double r2, double t, int n)
{
    auto F = [&](double s) {
        const double b = a + t - s;
        return std::pow(a / b, 0.5 * dim) * std::exp(-r2 / (4.0 * b));
    };
    return product_trapezoid_richardson(e, F, 0.0, t, n);
}

} // namespace oracle
