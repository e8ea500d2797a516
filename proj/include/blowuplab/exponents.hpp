#pragma once

/// Exponent calculus for the forced system
///   u_t - Δu = |v|^p + t^σ w1(x),   v_t - Δv = |u|^q + t^γ w2(x)   on R^N.
///
/// Everything here is a pure function of ProblemParams: the Lebesgue
/// exponents of the small-data theory, the blow-up scaling exponents, the
/// critical dimension, the regime decision and the construction of an
/// integrability pair (q1, q2) together with its time-decay weights.

#include "blowuplab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

namespace blowuplab {

/// Absolute tolerance for comparisons of dimensionless exponents.
inline constexpr double kExponentTol = 1e-12;

struct ProblemParams {
    int dim = 1;
    double p = 2.0;
    double q = 2.0;
    double sigma = -0.5;
    double gamma = -0.5;
    bool w1_integral_positive = true;
    bool w2_integral_positive = true;

    void validate() const
    {
        detail::require(dim >= 1, "dimension N must be >= 1");
        detail::require(std::isfinite(p) && p > 1.0, "p must be > 1");
        detail::require(std::isfinite(q) && q > 1.0, "q must be > 1");
        detail::require(std::isfinite(sigma) && sigma > -1.0 && sigma != 0.0,
                        "sigma must lie in (-1, inf) and differ from 0");
        detail::require(std::isfinite(gamma) && gamma > -1.0 && gamma != 0.0,
                        "gamma must lie in (-1, inf) and differ from 0");
    }

    /// Exchanges the roles of the two components: (p, σ, w1) <-> (q, γ, w2).
    [[nodiscard]] ProblemParams swapped() const
    {
        ProblemParams s = *this;
        std::swap(s.p, s.q);
        std::swap(s.sigma, s.gamma);
        std::swap(s.w1_integral_positive, s.w2_integral_positive);
        return s;
    }

    [[nodiscard]] bool both_forcing_exponents_negative() const { return sigma < 0.0 && gamma < 0.0; }
};

/// Time-decay weights β1..β6 attached to an integrability pair.
using BetaWeights = std::array<double, 6>;

struct DerivedExponents {
    double d1 = 0, d2 = 0;          ///< initial-data exponents
    double k1 = 0, k2 = 0;          ///< forcing exponents
    double theta1 = 0, theta2 = 0;  ///< blow-up scaling exponents
    std::optional<double> n_star;   ///< critical dimension, only when σ = γ
    std::optional<double> q1, q2;   ///< integrability pair, once folded in
    std::optional<BetaWeights> beta;
};

enum class RegimeKind { BlowUp, GlobalCandidate, Open };

/// Which clause of the theory decided the regime.
enum class RegimeReason {
    PositiveSigma,       ///< σ > 0 with positive forcing mass
    PositiveGamma,       ///< γ > 0 with positive forcing mass
    SubcriticalC1,       ///< σ,γ < 0 and N/2 below the threshold max
    SupercriticalC3,     ///< σ,γ < 0, N/2 at or above the threshold, ratio condition holds
    OpenRatioSigma,      ///< -1 < σ < γ < 0 and p <= σ/γ
    OpenRatioGamma,      ///< -1 < γ < σ < 0 and q <= γ/σ
    NoPositiveForcing,   ///< blow-up clause applies but a forcing mass is not positive
};

struct Regime {
    RegimeKind kind = RegimeKind::Open;
    RegimeReason reason = RegimeReason::NoPositiveForcing;
    bool boundary = false;
};

inline const char* to_string(RegimeKind k)
{
    switch (k) {
    case RegimeKind::BlowUp: return "BlowUp";
    case RegimeKind::GlobalCandidate: return "GlobalCandidate";
    case RegimeKind::Open: return "Open";
    }
    return "?";
}

/// Short condition tag printed next to the regime kind.
inline const char* tag(RegimeReason r)
{
    switch (r) {
    case RegimeReason::PositiveSigma: return "sigma>0";
    case RegimeReason::PositiveGamma: return "gamma>0";
    case RegimeReason::SubcriticalC1: return "C1";
    case RegimeReason::SupercriticalC3: return "C3+CETR";
    case RegimeReason::OpenRatioSigma: return "open:p<=sigma/gamma";
    case RegimeReason::OpenRatioGamma: return "open:q<=gamma/sigma";
    case RegimeReason::NoPositiveForcing: return "no-positive-forcing";
    }
    return "?";
}

inline std::string describe(const Regime& r)
{
    std::string s = std::string(to_string(r.kind)) + " (" + tag(r.reason) + ")";
    if (r.boundary) s += " [boundary]";
    return s;
}

// ---------------------------------------------------------------------------
// Closed-form exponents
// ---------------------------------------------------------------------------

/// Threshold values whose max is compared against N/2:
///   A1 = ((σ+1)(pq-1)+p+1)/(pq-1),  A2 = ((γ+1)(pq-1)+q+1)/(pq-1).
inline std::array<double, 2> critical_thresholds(const ProblemParams& P)
{
    const double m = P.p * P.q - 1.0;
    return {((P.sigma + 1.0) * m + P.p + 1.0) / m, ((P.gamma + 1.0) * m + P.q + 1.0) / m};
}

inline double critical_threshold_max(const ProblemParams& P)
{
    const auto a = critical_thresholds(P);
    return std::max(a[0], a[1]);
}

/// N* = 2(σ + 1 + (max{p,q}+1)/(pq-1)); defined only for σ = γ.
inline double critical_dimension(const ProblemParams& P)
{
    P.validate();
    if (P.sigma != P.gamma)
        throw InvalidArgument("critical dimension is only defined for sigma == gamma");
    const double alpha = std::max(P.p, P.q);
    return 2.0 * (P.sigma + 1.0 + (alpha + 1.0) / (P.p * P.q - 1.0));
}

inline DerivedExponents derive_exponents(const ProblemParams& P)
{
    P.validate();
    const double N = P.dim;
    const double m = P.p * P.q - 1.0;
    DerivedExponents d;
    d.d1 = N * m / (2.0 * (P.p + 1.0));
    d.d2 = N * m / (2.0 * (P.q + 1.0));
    d.k1 = N * m / (2.0 * (m * (1.0 + P.sigma) + P.p + 1.0));
    d.k2 = N * m / (2.0 * (m * (1.0 + P.gamma) + P.q + 1.0));
    d.theta1 = N / 2.0 - P.p * (P.q + 1.0) / m - P.sigma;
    d.theta2 = N / 2.0 - P.q * (P.p + 1.0) / m - P.gamma;
    if (P.sigma == P.gamma) d.n_star = critical_dimension(P);
    return d;
}

/// Ratio condition: p > max{σ/γ, 1} and q > max{γ/σ, 1}.
inline bool ratio_condition(const ProblemParams& P)
{
    return P.p > std::max(P.sigma / P.gamma, 1.0) && P.q > std::max(P.gamma / P.sigma, 1.0);
}

/// N/2 >= max{A1, A2} (with tolerance on the equality side).
inline bool supercritical_condition(const ProblemParams& P)
{
    return P.dim / 2.0 >= critical_threshold_max(P) - kExponentTol;
}

inline Regime classify_regime(const ProblemParams& P)
{
    P.validate();
    const bool forcing_positive = P.w1_integral_positive && P.w2_integral_positive;
    Regime r;

    if (P.sigma > 0.0 || P.gamma > 0.0) {
        if (forcing_positive) {
            r.kind = RegimeKind::BlowUp;
            r.reason = P.sigma > 0.0 ? RegimeReason::PositiveSigma : RegimeReason::PositiveGamma;
        }
        return r;
    }

    const double half_n = P.dim / 2.0;
    const double threshold = critical_threshold_max(P);
    r.boundary = std::abs(half_n - threshold) <= kExponentTol;

    if (half_n < threshold - kExponentTol) {
        if (forcing_positive) {
            r.kind = RegimeKind::BlowUp;
            r.reason = RegimeReason::SubcriticalC1;
        }
        return r;
    }

    if (ratio_condition(P)) {
        r.kind = RegimeKind::GlobalCandidate;
        r.reason = RegimeReason::SupercriticalC3;
    } else {
        r.kind = RegimeKind::Open;
        r.reason = P.sigma < P.gamma ? RegimeReason::OpenRatioSigma : RegimeReason::OpenRatioGamma;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Auxiliary inequalities used by the feasibility construction
// ---------------------------------------------------------------------------

struct SignedValue {
    double value = 0;
    bool satisfied = false; ///< value < 0
};

/// Left-hand sides of the six auxiliary inequalities. The first three belong
/// to the family driven by the v-threshold, the last three are their mirror
/// images under (p,σ) <-> (q,γ).
struct LemmaInequalities {
    SignedValue first_sigma;      ///< 2q[σ(pq-1)+p+1] - N(pq-1)
    SignedValue first_mixed;      ///< 2q(p+1) - (N+2q)(pq-1)
    SignedValue first_gamma;      ///< 2q[γp(pq-1)+p+1] - N(pq-1)
    SignedValue second_gamma;     ///< 2p[γ(pq-1)+q+1] - N(pq-1)
    SignedValue second_mixed;     ///< 2p(q+1) - (N+2p)(pq-1)
    SignedValue second_sigma;     ///< 2p[σq(pq-1)+q+1] - N(pq-1)
    bool first_hypotheses = false;  ///< N >= 2[(pq-1)(1+γ)+q+1]/(pq-1) and q > max{γ/σ,1}
    bool second_hypotheses = false; ///< N >= 2[(pq-1)(1+σ)+p+1]/(pq-1) and p > max{σ/γ,1}

    [[nodiscard]] std::array<SignedValue, 6> all() const
    {
        return {first_sigma, first_mixed, first_gamma, second_gamma, second_mixed, second_sigma};
    }
};

inline LemmaInequalities check_lemma_inequalities(const ProblemParams& P)
{
    P.validate();
    if (!P.both_forcing_exponents_negative())
        throw InvalidArgument("auxiliary inequalities require sigma, gamma in (-1, 0)");
    const double N = P.dim, p = P.p, q = P.q, s = P.sigma, g = P.gamma;
    const double m = p * q - 1.0;
    auto sv = [](double v) { return SignedValue{v, v < 0.0}; };

    LemmaInequalities L;
    L.first_sigma = sv(2.0 * q * (s * m + p + 1.0) - N * m);
    L.first_mixed = sv(2.0 * q * (p + 1.0) - (N + 2.0 * q) * m);
    L.first_gamma = sv(2.0 * q * (g * p * m + p + 1.0) - N * m);
    L.second_gamma = sv(2.0 * p * (g * m + q + 1.0) - N * m);
    L.second_mixed = sv(2.0 * p * (q + 1.0) - (N + 2.0 * p) * m);
    L.second_sigma = sv(2.0 * p * (s * q * m + q + 1.0) - N * m);

    const auto thr = critical_thresholds(P);
    L.first_hypotheses = N >= 2.0 * thr[1] - kExponentTol && q > std::max(g / s, 1.0);
    L.second_hypotheses = N >= 2.0 * thr[0] - kExponentTol && p > std::max(s / g, 1.0);
    return L;
}

// ---------------------------------------------------------------------------
// Integrability pair (q1, q2)
// ---------------------------------------------------------------------------

struct FeasiblePairReport {
    double alpha1 = 0, alpha2 = 0, alpha3 = 0, alpha4 = 0;
    int case_id = 0;   ///< which corner configuration produced the point (1..4)
    int diagnosed_case = 0;
    double inv_q1 = 0; ///< a = 1/q1
    double inv_q2 = 0; ///< b = 1/q2
    bool constraints_ok = false;

    [[nodiscard]] double q1() const { return 1.0 / inv_q1; }
    [[nodiscard]] double q2() const { return 1.0 / inv_q2; }
};

/// Residuals of the constraint system at a candidate point (a, b). Every
/// entry is a margin that must be strictly positive (beyond tolerance).
struct PairMargins {
    std::array<double, 12> margins{};

    [[nodiscard]] bool ok(double tol = kExponentTol) const
    {
        return std::all_of(margins.begin(), margins.end(), [tol](double m) { return m > tol; });
    }
};

inline PairMargins pair_margins(const ProblemParams& P, const DerivedExponents& D, double a, double b)
{
    const double N = P.dim, p = P.p, q = P.q;
    PairMargins m;
    // lower/upper bounds on a = 1/q1
    m.margins[0] = a - 1.0 / (q * D.d2);
    m.margins[1] = a - (1.0 / D.k1 - 2.0 / N);
    m.margins[2] = 1.0 / D.d1 - a;
    m.margins[3] = 1.0 / q - a;
    // lower/upper bounds on b = 1/q2
    m.margins[4] = b - 1.0 / (p * D.d1);
    m.margins[5] = b - (1.0 / D.k2 - 2.0 / N);
    m.margins[6] = 1.0 / D.d2 - b;
    m.margins[7] = 1.0 / p - b;
    // band conditions 0 < pb - a < 2/N and 0 < qa - b < 2/N
    m.margins[8] = p * b - a;
    m.margins[9] = 2.0 / N - (p * b - a);
    m.margins[10] = q * a - b;
    m.margins[11] = 2.0 / N - (q * a - b);
    return m;
}

namespace detail {

struct Corners {
    double a1, a2, a3, a4;
};

inline Corners corners(const ProblemParams& P, const DerivedExponents& D)
{
    const double N = P.dim, p = P.p, q = P.q;
    return {std::max(1.0 / (q * D.d2), 1.0 / D.k1 - 2.0 / N), std::min(1.0 / D.d1, 1.0 / q),
            std::max(1.0 / (p * D.d1), 1.0 / D.k2 - 2.0 / N), std::min(1.0 / D.d2, 1.0 / p)};
}

/// Midpoint of the explicit open interval given for each corner case.
inline std::array<double, 2> case_point(int id, const ProblemParams& P, const Corners& c)
{
    const double N = P.dim, p = P.p, q = P.q;
    const double two_n = 2.0 / N;
    const double lo_a = std::max(c.a1, p * c.a4 - two_n);
    const double lo_b = std::max(c.a3, q * c.a2 - two_n);
    switch (id) {
    case 1: {
        const double a = 0.5 * ((N * c.a3 + 2.0) / (N * q) + (N * c.a1 + 2.0 * (p + 1.0)) / (N * p * q));
        const double b = 0.5 * ((N * c.a1 + 2.0) / (N * p) + (N * c.a3 + 2.0 * (q + 1.0)) / (N * p * q));
        return {a, b};
    }
    case 2: return {0.5 * (lo_a + c.a2), 0.5 * (lo_b + c.a4)};
    case 3: {
        const double b = 0.5 * (std::max(c.a3, q * lo_a - two_n) + c.a4);
        return {0.5 * (lo_a + (N * b + 2.0) / (N * q)), b};
    }
    case 4: {
        const double a = 0.5 * (std::max(c.a1, p * lo_b - two_n) + c.a2);
        return {a, 0.5 * (lo_b + (N * a + 2.0) / (N * p))};
    }
    default: return {0.0, 0.0};
    }
}

inline int diagnose_case(const ProblemParams& P, const DerivedExponents& D, const Corners& c)
{
    const double N = P.dim, p = P.p, q = P.q;
    if (std::abs(c.a2 - 1.0 / D.d1) <= kExponentTol && std::abs(c.a4 - 1.0 / D.d2) <= kExponentTol) return 1;
    const bool below_a = c.a2 < (N * c.a4 + 2.0) / (N * q);
    const bool below_b = c.a4 < (N * c.a2 + 2.0) / (N * p);
    if (below_a && below_b) return 2;
    if (!below_a && below_b) return 3;
    if (below_a && !below_b) return 4;
    return 0;
}

} // namespace detail

/// Picks (1/q1, 1/q2) inside the intersection of the rectangle of admissible
/// integrability exponents and the band region. The diagnosed corner case is
/// tried first; on failure the remaining cases are tried in order 1..4. The
/// first candidate that passes every strict constraint is returned.
inline FeasiblePairReport feasible_pair(const ProblemParams& P)
{
    P.validate();
    if (!P.both_forcing_exponents_negative())
        throw InvalidArgument("feasible pair requires sigma, gamma in (-1, 0)");
    if (!supercritical_condition(P) || !ratio_condition(P))
        throw InvalidArgument("feasible pair requires the supercritical and ratio conditions");

    const DerivedExponents D = derive_exponents(P);
    const detail::Corners c = detail::corners(P, D);

    FeasiblePairReport rep;
    rep.alpha1 = c.a1;
    rep.alpha2 = c.a2;
    rep.alpha3 = c.a3;
    rep.alpha4 = c.a4;
    rep.diagnosed_case = detail::diagnose_case(P, D, c);

    std::array<int, 5> order{rep.diagnosed_case, 1, 2, 3, 4};
    for (int id : order) {
        if (id == 0) continue;
        const auto [a, b] = detail::case_point(id, P, c);
        if (pair_margins(P, D, a, b).ok()) {
            rep.case_id = id;
            rep.inv_q1 = a;
            rep.inv_q2 = b;
            rep.constraints_ok = true;
            return rep;
        }
    }
    throw InfeasibleRegion("no corner-case selection satisfies the pair constraints");
}

/// β1..β6 for a given pair (a, b) = (1/q1, 1/q2).
inline BetaWeights beta_weights(const ProblemParams& P, const DerivedExponents& D, double a, double b)
{
    const double h = P.dim / 2.0;
    return {h * (1.0 / D.d1 - a), h * (1.0 / D.d2 - b), h * (P.p * b - a),
            h * (P.q * a - b),    h * (1.0 / D.k1 - a), h * (1.0 / D.k2 - b)};
}

/// Folds an integrability pair into the exponent ledger.
inline DerivedExponents with_pair(const ProblemParams& P, DerivedExponents D, const FeasiblePairReport& rep)
{
    D.q1 = rep.q1();
    D.q2 = rep.q2();
    D.beta = beta_weights(P, D, rep.inv_q1, rep.inv_q2);
    return D;
}

/// The four balance identities satisfied by the weights (each should be 0):
///   β1+σ-β5+1, β2+γ-β6+1, β1-β3-pβ2+1, β2-β4-qβ1+1.
inline std::array<double, 4> beta_identity_residuals(const ProblemParams& P, const BetaWeights& b)
{
    return {b[0] + P.sigma - b[4] + 1.0, b[1] + P.gamma - b[5] + 1.0, b[0] - b[2] - b[1] * P.p + 1.0,
            b[1] - b[3] - b[0] * P.q + 1.0};
}

/// Bounds every pair must produce: 0<β1,β2; 0<β3..β6<1; qβ1<1; pβ2<1.
inline bool beta_bounds_hold(const ProblemParams& P, const BetaWeights& b)
{
    if (!(b[0] > 0.0 && b[1] > 0.0)) return false;
    for (int i = 2; i < 6; ++i)
        if (!(b[i] > 0.0 && b[i] < 1.0)) return false;
    return b[0] * P.q < 1.0 && b[1] * P.p < 1.0;
}

/// Ordering chain q1 > q, q1 > d1 > k1 >= 1 and q2 > p, q2 > d2 > k2 >= 1.
inline bool pair_ordering_holds(const ProblemParams& P, const DerivedExponents& D, double q1, double q2)
{
    const double t = kExponentTol;
    return q1 > P.q && q1 > D.d1 && D.d1 > D.k1 && D.k1 >= 1.0 - t && q2 > P.p && q2 > D.d2 && D.d2 > D.k2 &&
           D.k2 >= 1.0 - t;
}

} // namespace blowuplab
