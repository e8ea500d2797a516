#pragma once

/// Mild (Duhamel) solutions of the forced system on the periodic grid.
///
/// Time stepping works per spectral mode. On a mesh t_0 < ... < t_n the
/// nonlinear source is interpolated linearly between nodes and integrated
/// exactly against exp(-λ(t_j - s)) (exponential trapezoid); the forcing
/// s^σ w is integrated with SingularHeatIntegrator, one call per distinct
/// |ξ|² and mesh step. Picard sweeps act on whole windows.

#include "blowuplab/errors.hpp"
#include "blowuplab/field.hpp"
#include "blowuplab/quadrature.hpp"
#include "blowuplab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace blowuplab {

struct ForcingTerm {
    Field profile;
    double exponent = -0.5;

    void validate() const
    {
        detail::require(std::isfinite(exponent) && exponent > -1.0 && exponent != 0.0,
                        "forcing exponent must lie in (-1, inf) and differ from 0");
        detail::require(profile.all_finite(), "forcing profile contains non-finite values");
    }
};

struct SolverConfig {
    double p = 2.0;
    double q = 2.0;
    int quad_nodes = 16;        ///< Gauss nodes per forcing panel
    double picard_tol = 1e-12;  ///< relative to max(1, window sup)
    int picard_max_iter = 60;
    int substeps = 16;          ///< mesh steps per window
    double max_window = 1.0;
    double first_window_grading = 2.0; ///< t_j = T (j/n)^g on [0,T] when a forcing exponent is negative
    double overflow_guard = 1e8;
    double min_window = 1e-10;
    double trace_q1 = 2.0;
    double trace_q2 = 2.0;
    bool keep_history = false;

    void validate() const
    {
        detail::require(std::isfinite(p) && p > 1.0, "p must be > 1");
        detail::require(std::isfinite(q) && q > 1.0, "q must be > 1");
        detail::require(quad_nodes >= 8 && quad_nodes <= 128, "quad_nodes must lie in [8, 128]");
        detail::require(picard_tol > 0.0, "picard_tol must be positive");
        detail::require(picard_max_iter >= 1, "picard_max_iter must be positive");
        detail::require(substeps >= 4, "substeps must be >= 4");
        detail::require(max_window > 0.0, "max_window must be positive");
        detail::require(first_window_grading >= 1.0, "first_window_grading must be >= 1");
        detail::require(overflow_guard > 0.0, "overflow_guard must be positive");
        detail::require(min_window > 0.0 && min_window < max_window, "min_window must lie in (0, max_window)");
        detail::require(trace_q1 >= 1.0 && trace_q2 >= 1.0, "trace exponents must be >= 1");
    }
};

struct TraceSample {
    double t = 0;
    double sup_u = 0, sup_v = 0;
    double lq1_u = 0, lq2_v = 0;

    [[nodiscard]] double sup() const { return std::max(sup_u, sup_v); }
};

struct Snapshot {
    double t = 0;
    Field u, v;
};

struct OriginData {
    Field u0, v0;
    ForcingTerm w1, w2;
};

/// Diagnostics of the most recent window solve.
struct PicardStats {
    int iterations = 0;
    std::vector<double> distances;  ///< sup distance between successive iterates
    double contraction_bound = 0;   ///< M = δ∞(u,w1) + δ∞(v,w2) at window start
    double window = 0;
};

struct SolutionState {
    double t = 0;
    Field u, v;
    std::vector<TraceSample> trace;
    OriginData origin;
    SolverConfig config;
    std::vector<Snapshot> history; ///< every mesh node, only with config.keep_history
    PicardStats last_solve;
};

/// Values of (u, v) on the nodes of one window; index 0 is the window start.
struct Trajectory {
    std::vector<double> t;
    std::vector<Field> u, v;
};

namespace detail {

/// ∫_0^1 y e^{-zy} dy and ∫_0^1 (1-y) e^{-zy} dy.
inline std::pair<double, double> trapezoid_weights(double z)
{
    if (z < 0.5) {
        double a = 0.0, b = 0.0, term = 1.0; // term = (-z)^k / k!
        for (int k = 0; k < 24; ++k) {
            a += term / (k + 2.0);
            b += term / ((k + 1.0) * (k + 2.0));
            term *= -z / (k + 1.0);
        }
        return {a, b};
    }
    const double e = std::exp(-z);
    return {(1.0 - (1.0 + z) * e) / (z * z), (z - 1.0 + e) / (z * z)};
}

inline TraceSample sample(double t, const Field& u, const Field& v, const SolverConfig& cfg)
{
    return {t, u.max_abs(), v.max_abs(), lp_norm(u, cfg.trace_q1), lp_norm(v, cfg.trace_q2)};
}

inline Field nonlinearity(const Field& f, double power)
{
    Field out(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = abs_pow(f[i], power);
    return out;
}

} // namespace detail

/// ∫_{t0}^{t} s^e S(t-s) w ds for the forcing profile w.
inline Field forcing_integral(const ForcingTerm& w, double t0, double t, int quad_nodes = 16)
{
    w.validate();
    detail::require(t0 >= 0.0 && t > t0, "forcing window must satisfy 0 <= t0 < t");
    const auto plan = spectral_plan(w.profile.grid());
    const SingularHeatIntegrator integ(w.exponent, quad_nodes);
    std::vector<double> G(plan->class_count());
    for (std::size_t c = 0; c < G.size(); ++c) G[c] = integ.integrate(plan->class_lambda(static_cast<int>(c)), t0, t);
    auto coeffs = plan->forward(w.profile);
    for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] *= G[plan->mode_class(k)];
    return plan->inverse(coeffs);
}

/// M = δ∞(u, w1) + δ∞(v, w2).
inline double contraction_bound(const Field& u, const Field& v, const ForcingTerm& w1, const ForcingTerm& w2)
{
    return std::max(u.max_abs(), w1.profile.max_abs()) + std::max(v.max_abs(), w2.profile.max_abs());
}

/// The two window conditions of the local theory on [t0, t0+tau]:
/// the self-map bound with ∫_{t0}^{t0+tau} s^σ ds in place of T^{σ+1}/(σ+1),
/// and 2 max{2^{p-1} p M^{p-1}, 2^{q-1} q M^{q-1}} tau < 1.
inline bool window_admissible(const SolverConfig& cfg, double M, double t0, double tau, double sigma, double gamma)
{
    auto forcing_mass = [&](double e) {
        return (std::pow(t0 + tau, e + 1.0) - std::pow(t0, e + 1.0)) / (e + 1.0);
    };
    const double self1 = std::pow(2.0, cfg.p) * tau * std::pow(M, cfg.p - 1.0) + forcing_mass(sigma);
    const double self2 = std::pow(2.0, cfg.q) * tau * std::pow(M, cfg.q - 1.0) + forcing_mass(gamma);
    const double lip = 2.0 * std::max(std::pow(2.0, cfg.p - 1.0) * cfg.p * std::pow(M, cfg.p - 1.0),
                                      std::pow(2.0, cfg.q - 1.0) * cfg.q * std::pow(M, cfg.q - 1.0));
    return std::max(self1, self2) <= 0.5 && lip * tau < 1.0;
}

/// Largest upper·2^{-k} (k >= 0) satisfying window_admissible, or 0 when
/// it would drop below cfg.min_window.
inline double choose_window(const SolverConfig& cfg, double M, double t0, double upper, double sigma, double gamma)
{
    for (double tau = upper; tau >= cfg.min_window; tau *= 0.5)
        if (window_admissible(cfg, M, t0, tau, sigma, gamma)) return tau;
    return 0.0;
}

inline std::vector<double> window_nodes(double t0, double tau, int n, double grading = 1.0)
{
    std::vector<double> t(n + 1);
    for (int j = 0; j <= n; ++j) t[j] = t0 + tau * std::pow(static_cast<double>(j) / n, grading);
    t[n] = t0 + tau;
    return t;
}

/// The discrete Picard map Ψ on a fixed window mesh. Construction tabulates
/// the per-mode propagators; apply() is one sweep.
class PicardMap {
public:
    PicardMap(const Field& u_start, const Field& v_start, const ForcingTerm& w1, const ForcingTerm& w2,
              std::vector<double> nodes, const SolverConfig& cfg)
        : plan_(spectral_plan(u_start.grid())), t_(std::move(nodes)), p_(cfg.p), q_(cfg.q)
    {
        detail::require(u_start.grid() == v_start.grid() && u_start.grid() == w1.profile.grid() &&
                            u_start.grid() == w2.profile.grid(),
                        "all data must live on the same grid");
        detail::require(t_.size() >= 2, "window mesh needs at least two nodes");
        for (std::size_t j = 1; j < t_.size(); ++j) detail::require(t_[j] > t_[j - 1], "window mesh must increase");
        detail::require(t_[0] >= 0.0, "window must start at t >= 0");
        w1.validate();
        w2.validate();

        u_start_ = u_start;
        v_start_ = v_start;
        uhat0_ = plan_->forward(u_start);
        vhat0_ = plan_->forward(v_start);
        fhat0_ = plan_->forward(detail::nonlinearity(v_start, p_));
        ghat0_ = plan_->forward(detail::nonlinearity(u_start, q_));
        w1hat_ = plan_->forward(w1.profile);
        w2hat_ = plan_->forward(w2.profile);
        has_w1_ = w1.profile.max_abs() > 0.0;
        has_w2_ = w2.profile.max_abs() > 0.0;

        const std::size_t C = plan_->class_count();
        const std::size_t n = steps();
        E_.resize(n * C);
        A_.resize(n * C);
        B_.resize(n * C);
        G1_.assign(n * C, 0.0);
        G2_.assign(n * C, 0.0);
        const SingularHeatIntegrator i1(w1.exponent, cfg.quad_nodes);
        const SingularHeatIntegrator i2(w2.exponent, cfg.quad_nodes);
        for (std::size_t j = 0; j < n; ++j) {
            const double a = t_[j], b = t_[j + 1], h = b - a;
            for (std::size_t c = 0; c < C; ++c) {
                const double lam = plan_->class_lambda(static_cast<int>(c));
                const auto [wa, wb] = detail::trapezoid_weights(lam * h);
                E_[j * C + c] = std::exp(-lam * h);
                A_[j * C + c] = h * wa;
                B_[j * C + c] = h * wb;
                if (has_w1_) G1_[j * C + c] = i1.integrate(lam, a, b);
                if (has_w2_) G2_[j * C + c] = i2.integrate(lam, a, b);
            }
        }
    }

    [[nodiscard]] const std::vector<double>& nodes() const { return t_; }
    [[nodiscard]] std::size_t steps() const { return t_.size() - 1; }

    /// Ψ with the nonlinear sources switched off: heat flow plus forcing.
    [[nodiscard]] Trajectory linear_part() const { return sweep(nullptr); }

    /// One application of Ψ to the iterate x (x.u[0], x.v[0] are ignored).
    [[nodiscard]] Trajectory apply(const Trajectory& x) const
    {
        detail::require(x.u.size() == t_.size() && x.v.size() == t_.size(), "iterate does not match the mesh");
        return sweep(&x);
    }

private:
    Trajectory sweep(const Trajectory* x) const
    {
        const std::size_t n = steps(), C = plan_->class_count(), S = plan_->spectral_size();
        Trajectory out;
        out.t = t_;
        out.u.reserve(n + 1);
        out.v.reserve(n + 1);
        out.u.push_back(u_start_);
        out.v.push_back(v_start_);

        std::vector<Complex> uh = uhat0_, vh = vhat0_;
        std::vector<Complex> f_prev = fhat0_, g_prev = ghat0_;
        std::vector<Complex> f_cur(S), g_cur(S);
        for (std::size_t j = 0; j < n; ++j) {
            if (x) {
                f_cur = plan_->forward(detail::nonlinearity(x->v[j + 1], p_));
                g_cur = plan_->forward(detail::nonlinearity(x->u[j + 1], q_));
            }
            const std::size_t row = j * C;
            for (std::size_t k = 0; k < S; ++k) {
                const std::size_t c = row + plan_->mode_class(k);
                uh[k] *= E_[c];
                vh[k] *= E_[c];
                if (x) {
                    uh[k] += A_[c] * f_prev[k] + B_[c] * f_cur[k];
                    vh[k] += A_[c] * g_prev[k] + B_[c] * g_cur[k];
                }
                if (has_w1_) uh[k] += G1_[c] * w1hat_[k];
                if (has_w2_) vh[k] += G2_[c] * w2hat_[k];
            }
            if (x) {
                std::swap(f_prev, f_cur);
                std::swap(g_prev, g_cur);
            }
            out.u.push_back(plan_->inverse(uh));
            out.v.push_back(plan_->inverse(vh));
            if (!out.u.back().all_finite() || !out.v.back().all_finite())
                throw NonFiniteField("non-finite field in Picard sweep at t=" + std::to_string(t_[j + 1]));
        }
        return out;
    }

    std::shared_ptr<const SpectralPlan> plan_;
    std::vector<double> t_;
    double p_, q_;
    Field u_start_, v_start_;
    std::vector<Complex> uhat0_, vhat0_, fhat0_, ghat0_, w1hat_, w2hat_;
    bool has_w1_ = false, has_w2_ = false;
    std::vector<double> E_, A_, B_, G1_, G2_;
};

/// max_j ‖a.u_j - b.u_j‖∞ + max_j ‖a.v_j - b.v_j‖∞.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b)
{
    double du = 0.0, dv = 0.0;
    for (std::size_t j = 0; j < a.u.size(); ++j) {
        du = std::max(du, (a.u[j] - b.u[j]).max_abs());
        dv = std::max(dv, (a.v[j] - b.v[j]).max_abs());
    }
    return du + dv;
}

inline double trajectory_sup(const Trajectory& a)
{
    double su = 0.0, sv = 0.0;
    for (std::size_t j = 0; j < a.u.size(); ++j) {
        su = std::max(su, a.u[j].max_abs());
        sv = std::max(sv, a.v[j].max_abs());
    }
    return su + sv;
}

struct WindowSolution {
    Trajectory trajectory;
    PicardStats stats;
};

/// Picard iteration on one window, started from the linear part.
inline WindowSolution solve_window(const Field& u_start, const Field& v_start, const ForcingTerm& w1,
                                   const ForcingTerm& w2, std::vector<double> nodes, const SolverConfig& cfg)
{
    cfg.validate();
    const PicardMap psi(u_start, v_start, w1, w2, std::move(nodes), cfg);
    WindowSolution out;
    out.stats.contraction_bound = contraction_bound(u_start, v_start, w1, w2);
    out.stats.window = psi.nodes().back() - psi.nodes().front();

    Trajectory x = psi.linear_part();
    for (int it = 1; it <= cfg.picard_max_iter; ++it) {
        Trajectory y = psi.apply(x);
        const double d = trajectory_distance(y, x);
        out.stats.distances.push_back(d);
        out.stats.iterations = it;
        x = std::move(y);
        if (d <= cfg.picard_tol * std::max(1.0, trajectory_sup(x))) {
            out.trajectory = std::move(x);
            return out;
        }
    }
    throw NoConvergence("Picard iteration did not converge in " + std::to_string(cfg.picard_max_iter) +
                        " sweeps (last distance " + std::to_string(out.stats.distances.back()) + ")");
}

namespace detail {

inline void append_window(SolutionState& s, const Trajectory& tr, bool include_start)
{
    for (std::size_t j = include_start ? 0 : 1; j < tr.t.size(); ++j) {
        s.trace.push_back(sample(tr.t[j], tr.u[j], tr.v[j], s.config));
        if (s.config.keep_history) s.history.push_back({tr.t[j], tr.u[j], tr.v[j]});
    }
    s.t = tr.t.back();
    s.u = tr.u.back();
    s.v = tr.v.back();
}

} // namespace detail

/// Solves on [0, T] with T the largest max_window·2^{-k} meeting the
/// window conditions at M = δ∞(u0,w1) + δ∞(v0,w2).
inline SolutionState local_solve(const Field& u0, const Field& v0, const ForcingTerm& w1, const ForcingTerm& w2,
                                 const SolverConfig& cfg)
{
    cfg.validate();
    w1.validate();
    w2.validate();
    detail::require(u0.grid() == v0.grid(), "u0 and v0 must share a grid");
    detail::require(u0.all_finite() && v0.all_finite(), "initial data contain non-finite values");

    const double M = contraction_bound(u0, v0, w1, w2);
    const double T = choose_window(cfg, M, 0.0, cfg.max_window, w1.exponent, w2.exponent);
    if (T == 0.0) throw NoConvergence("no admissible local window above min_window");
    const double grading = (w1.exponent < 0.0 || w2.exponent < 0.0) ? cfg.first_window_grading : 1.0;

    SolutionState s;
    s.config = cfg;
    s.origin = {u0, v0, w1, w2};
    auto sol = solve_window(u0, v0, w1, w2, window_nodes(0.0, T, cfg.substeps, grading), cfg);
    s.last_solve = sol.stats;
    detail::append_window(s, sol.trajectory, true);
    return s;
}

/// Least-squares zero crossing of 1/max(sup_u, sup_v) against t over the
/// last `samples` trace entries; empty when the fit does not decrease.
inline std::optional<double> extrapolate_tmax(const std::vector<TraceSample>& trace, std::size_t samples = 10)
{
    if (trace.size() < samples || samples < 2) return std::nullopt;
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double t_ref = trace.back().t;
    for (std::size_t i = trace.size() - samples; i < trace.size(); ++i) {
        const double sup = trace[i].sup();
        if (!(sup > 0.0) || !std::isfinite(sup)) return std::nullopt;
        const double t = trace[i].t - t_ref, y = 1.0 / sup;
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double n = static_cast<double>(samples);
    const double den = n * stt - st * st;
    if (den <= 0.0) return std::nullopt;
    const double slope = (n * sty - st * sy) / den;
    const double icept = (sy - slope * st) / n;
    if (!(slope < 0.0)) return std::nullopt;
    return t_ref - icept / slope;
}

enum class AdvanceOutcome { ReachedHorizon, BlowUpDetected };

struct AdvanceResult {
    SolutionState state;
    AdvanceOutcome outcome = AdvanceOutcome::ReachedHorizon;
    bool stalled = false;               ///< window fell below min_window
    std::optional<double> t_max_estimate;
    int windows = 0;
    int rejected_windows = 0;
};

/// Continues the solution window by window with the restart form
///   u(t0+τ) = S(τ)u(t0) + ∫ S(τ-s)|v(t0+s)|^p ds + ∫_{t0}^{t0+τ} s^σ S(t0+τ-s) w1 ds.
/// A window is halved on Picard failure, non-finite values, or when the sup
/// norm more than doubles (relative to max(sup, 1)) inside it.
inline AdvanceResult advance(SolutionState state, double horizon, double max_step)
{
    const SolverConfig& cfg = state.config;
    cfg.validate();
    detail::require(horizon > state.t, "horizon must exceed the current time");
    detail::require(max_step > 0.0, "max_step must be positive");

    AdvanceResult res;
    const auto& o = state.origin;
    double last_ok = max_step;
    const double t_end_tol = 1e-13 * std::max(1.0, horizon);

    while (state.t < horizon - t_end_tol) {
        if (state.trace.back().sup() > cfg.overflow_guard) {
            res.outcome = AdvanceOutcome::BlowUpDetected;
            break;
        }
        const double M = contraction_bound(state.u, state.v, o.w1, o.w2);
        const double sup_c = std::max(state.u.max_abs(), state.v.max_abs());
        double tau = choose_window(cfg, M, state.t, std::min(max_step, 2.0 * last_ok), o.w1.exponent, o.w2.exponent);
        bool accepted = false;
        while (tau >= cfg.min_window) {
            const double len = std::min(tau, horizon - state.t);
            try {
                auto sol = solve_window(state.u, state.v, o.w1, o.w2,
                                        window_nodes(state.t, len, cfg.substeps), cfg);
                double sup_w = 0.0;
                for (std::size_t j = 1; j < sol.trajectory.t.size(); ++j)
                    sup_w = std::max({sup_w, sol.trajectory.u[j].max_abs(), sol.trajectory.v[j].max_abs()});
                if (sup_w > 2.0 * std::max(sup_c, 1.0) && sup_w <= cfg.overflow_guard) {
                    ++res.rejected_windows;
                    tau *= 0.5;
                    continue;
                }
                state.last_solve = sol.stats;
                detail::append_window(state, sol.trajectory, false);
                last_ok = tau;
                accepted = true;
                ++res.windows;
                break;
            } catch (const NoConvergence&) {
            } catch (const NonFiniteField&) {
            }
            ++res.rejected_windows;
            tau *= 0.5;
        }
        if (!accepted) {
            res.stalled = true;
            res.outcome = AdvanceOutcome::BlowUpDetected;
            break;
        }
    }
    if (res.outcome == AdvanceOutcome::ReachedHorizon && state.trace.back().sup() > cfg.overflow_guard)
        res.outcome = AdvanceOutcome::BlowUpDetected;
    if (res.outcome == AdvanceOutcome::BlowUpDetected) res.t_max_estimate = extrapolate_tmax(state.trace);
    res.state = std::move(state);
    return res;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceSample>& trace)
{
    os << "t,sup_u,sup_v,lq1_u,lq2_v\n";
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& s : trace) os << s.t << ',' << s.sup_u << ',' << s.sup_v << ',' << s.lq1_u << ',' << s.lq2_v << '\n';
    os.precision(old);
}

} // namespace blowuplab
