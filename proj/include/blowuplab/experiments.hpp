#pragma once

/// Prediction against observation: single runs, sweeps, blow-up detection,
/// weighted decay probes and test-function scaling probes.

#include "blowuplab/config.hpp"
#include "blowuplab/cutoffs.hpp"
#include "blowuplab/duhamel.hpp"
#include "blowuplab/exponents.hpp"
#include "blowuplab/quadrature.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <thread>

namespace blowuplab {

enum class ObservedKind { BlewUp, BoundedToHorizon, Failed };

inline const char* to_string(ObservedKind k)
{
    switch (k) {
    case ObservedKind::BlewUp: return "BlewUp";
    case ObservedKind::BoundedToHorizon: return "BoundedToHorizon";
    case ObservedKind::Failed: return "Failed";
    }
    return "?";
}

struct Observed {
    ObservedKind kind = ObservedKind::Failed;
    std::optional<double> t_max_estimate;
    double max_sup = 0;
    double t_end = 0;
    std::optional<double> weighted_q1_sup; ///< sup t^{β1} ‖u‖_{q1}, t >= 0.01
    std::optional<double> weighted_q2_sup;
    std::optional<double> weighted_sum_sup;
};

struct RunRecord {
    RunConfig config;
    std::string config_id;
    Regime predicted;
    Observed observed;
    DerivedExponents derived;
    std::vector<TraceSample> trace;
    bool stalled = false;
    std::string notes;
};

/// true/false for a BlowUp or GlobalCandidate prediction; empty when the
/// prediction is Open or the run failed.
inline std::optional<bool> agreement(const RunRecord& r)
{
    if (r.observed.kind == ObservedKind::Failed) return std::nullopt;
    switch (r.predicted.kind) {
    case RegimeKind::BlowUp: return r.observed.kind == ObservedKind::BlewUp;
    case RegimeKind::GlobalCandidate: return r.observed.kind == ObservedKind::BoundedToHorizon;
    case RegimeKind::Open: return std::nullopt;
    }
    return std::nullopt;
}

struct BlowupVerdict {
    bool blew_up = false;
    std::optional<double> t_max_estimate;
};

/// Blow-up iff the final sup norm reached `guard` or continuation stalled
/// below the minimum window; the estimate is the 1/sup extrapolation.
inline BlowupVerdict detect_blowup(const std::vector<TraceSample>& trace, double guard = 1e8, bool stalled = false)
{
    if (trace.size() < 10)
        throw InsufficientTrace("blow-up detection needs at least 10 samples, got " + std::to_string(trace.size()));
    BlowupVerdict v;
    v.blew_up = stalled || !(trace.back().sup() < guard);
    if (v.blew_up) v.t_max_estimate = extrapolate_tmax(trace).value_or(trace.back().t);
    return v;
}

inline constexpr double kDecayProbeTmin = 0.01;

/// sup over t >= t_min of (t^{β1} ‖u‖_{q1}, t^{β2} ‖v‖_{q2}, their sum).
inline std::array<double, 3> weighted_sups(const std::vector<TraceSample>& trace, double beta1, double beta2,
                                           double t_min = kDecayProbeTmin)
{
    std::array<double, 3> s{0.0, 0.0, 0.0};
    for (const auto& x : trace) {
        if (x.t < t_min) continue;
        const double a = std::pow(x.t, beta1) * x.lq1_u, b = std::pow(x.t, beta2) * x.lq2_v;
        s = {std::max(s[0], a), std::max(s[1], b), std::max(s[2], a + b)};
    }
    return s;
}

/// Classifies, simulates to the horizon (or blow-up) and records the outcome.
inline RunRecord run_case(const RunConfig& config)
{
    config.validate();
    RunRecord rec;
    rec.config = config;
    rec.config_id = config.config_id();

    const Grid& g = config.grid;
    const Field u0 = config.data.build(g, config.eps);
    const ForcingTerm w1{config.forcing1.build(g, config.eps), config.params.sigma};
    const ForcingTerm w2{config.forcing2.build(g, config.eps), config.params.gamma};

    ProblemParams P = config.params;
    P.w1_integral_positive = w1.profile.integral() > 0.0;
    P.w2_integral_positive = w2.profile.integral() > 0.0;
    rec.predicted = classify_regime(P);
    rec.derived = derive_exponents(P);
    try {
        rec.derived = with_pair(P, rec.derived, feasible_pair(P));
    } catch (const InvalidArgument&) {
    } catch (const InfeasibleRegion&) {
    }

    SolverConfig cfg = config.solver;
    cfg.p = P.p;
    cfg.q = P.q;
    cfg.trace_q1 = rec.derived.q1.value_or(2.0);
    cfg.trace_q2 = rec.derived.q2.value_or(2.0);
    if (config.horizon < cfg.max_window && config.horizon > cfg.min_window) cfg.max_window = config.horizon;

    SolutionState state = local_solve(u0, u0, w1, w2, cfg);
    if (state.t < config.horizon) {
        AdvanceResult res = advance(std::move(state), config.horizon, config.max_step);
        rec.stalled = res.stalled;
        state = std::move(res.state);
    }
    rec.trace = std::move(state.trace);

    Observed& obs = rec.observed;
    obs.t_end = rec.trace.back().t;
    for (const auto& s : rec.trace) obs.max_sup = std::max(obs.max_sup, s.sup());
    const bool blew_up = rec.trace.size() >= 10 ? detect_blowup(rec.trace, cfg.overflow_guard, rec.stalled).blew_up
                                                : rec.stalled || !(rec.trace.back().sup() < cfg.overflow_guard);
    if (blew_up) {
        obs.kind = ObservedKind::BlewUp;
        obs.t_max_estimate = rec.trace.size() >= 10 ? detect_blowup(rec.trace, cfg.overflow_guard, rec.stalled).t_max_estimate
                                                    : std::optional<double>(obs.t_end);
        if (rec.stalled) rec.notes = "continuation stalled below min_window";
    } else {
        obs.kind = ObservedKind::BoundedToHorizon;
        if (rec.derived.beta) {
            const auto w = weighted_sups(rec.trace, (*rec.derived.beta)[0], (*rec.derived.beta)[1]);
            obs.weighted_q1_sup = w[0];
            obs.weighted_q2_sup = w[1];
            obs.weighted_sum_sup = w[2];
        }
    }
    return rec;
}

/// Ξ-membership probe: sup_{t >= 0.01} t^{β1}‖u‖_{q1} + t^{β2}‖v‖_{q2} <= k.
inline bool decay_probe(const RunRecord& record, const FeasiblePairReport& pair, double k)
{
    detail::require(record.observed.kind == ObservedKind::BoundedToHorizon, "decay probe needs a bounded run");
    detail::require(record.derived.q1 && std::abs(*record.derived.q1 - pair.q1()) <= 1e-12 * pair.q1() &&
                        record.derived.q2 && std::abs(*record.derived.q2 - pair.q2()) <= 1e-12 * pair.q2(),
                    "trace norms were not recorded in the pair's exponents");
    ProblemParams P = record.config.params;
    const auto beta = beta_weights(P, derive_exponents(P), pair.inv_q1, pair.inv_q2);
    return weighted_sups(record.trace, beta[0], beta[1])[2] <= k;
}

struct EpsSearch {
    bool found = false;
    double eps = 0;
    RunRecord record;
    std::vector<std::pair<double, ObservedKind>> attempts;
};

/// Halves eps from config.eps until the run is BoundedToHorizon and, when
/// weighted norms are available, their summed sup is below `weighted_below`.
inline EpsSearch search_small_eps(RunConfig config, int max_halvings = 20,
                                  double weighted_below = std::numeric_limits<double>::infinity())
{
    EpsSearch out;
    for (int i = 0; i <= max_halvings; ++i) {
        RunRecord rec = run_case(config);
        out.attempts.emplace_back(config.eps, rec.observed.kind);
        const bool small = !rec.observed.weighted_sum_sup || *rec.observed.weighted_sum_sup < weighted_below;
        if (rec.observed.kind == ObservedKind::BoundedToHorizon && small) {
            out.found = true;
            out.eps = config.eps;
            out.record = std::move(rec);
            return out;
        }
        config.eps *= 0.5;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepSummary {
    int agree = 0, disagree = 0, undetermined = 0, failed = 0;
};

struct SweepResult {
    std::vector<RunRecord> records; ///< in input order
    SweepSummary summary;
};

inline unsigned sweep_threads(std::size_t jobs)
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BLOWUPLAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

/// Runs every config; runtime errors are recorded per case as Failed.
inline SweepResult sweep(const std::vector<RunConfig>& configs)
{
    detail::require(!configs.empty(), "sweep needs at least one config");
    for (const auto& c : configs) c.validate();

    SweepResult out;
    out.records.resize(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            try {
                out.records[i] = run_case(configs[i]);
            } catch (const std::exception& e) {
                RunRecord r;
                r.config = configs[i];
                r.config_id = configs[i].config_id();
                r.observed.kind = ObservedKind::Failed;
                r.notes = e.what();
                out.records[i] = std::move(r);
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = sweep_threads(configs.size());
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& r : out.records) {
        if (r.observed.kind == ObservedKind::Failed) ++out.summary.failed;
        else if (const auto a = agreement(r); !a) ++out.summary.undetermined;
        else if (*a) ++out.summary.agree;
        else ++out.summary.disagree;
    }
    return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<RunRecord>& records)
{
    using detail::fmt_double;
    auto opt = [](const std::optional<double>& x) { return x ? fmt_double(*x) : std::string(); };
    os << "config_id,N,p,q,sigma,gamma,eps,predicted,observed,t_max_est,max_sup,weighted_q1_sup,weighted_q2_sup\n";
    for (const auto& r : records) {
        const auto& P = r.config.params;
        os << r.config_id << ',' << P.dim << ',' << fmt_double(P.p) << ',' << fmt_double(P.q) << ','
           << fmt_double(P.sigma) << ',' << fmt_double(P.gamma) << ',' << fmt_double(r.config.eps) << ','
           << (r.observed.kind == ObservedKind::Failed ? "" : to_string(r.predicted.kind)) << ','
           << to_string(r.observed.kind) << ',' << opt(r.observed.t_max_estimate) << ','
           << fmt_double(r.observed.max_sup) << ',' << opt(r.observed.weighted_q1_sup) << ','
           << opt(r.observed.weighted_q2_sup) << '\n';
    }
}

/// Writes summary.csv, index.json and runs/<config_id>/{config.txt,trace.csv}
/// under `dir`. When `source_config` is given it is copied to config.txt.
inline void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir,
                                const std::string& source_config = {})
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "summary.csv");
        write_summary_csv(os, result.records);
    }
    if (!source_config.empty()) std::ofstream(dir / "config.txt") << source_config;

    nlohmann::json index;
    index["summary_csv"] = "summary.csv";
    if (!source_config.empty()) index["config"] = "config.txt";
    index["counts"] = {{"agree", result.summary.agree},
                       {"disagree", result.summary.disagree},
                       {"undetermined", result.summary.undetermined},
                       {"failed", result.summary.failed}};
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : result.records) {
        const fs::path rel = fs::path("runs") / r.config_id;
        fs::create_directories(dir / rel);
        std::ofstream(dir / rel / "config.txt") << r.config.to_text();
        nlohmann::json entry{{"config_id", r.config_id},
                             {"config", (rel / "config.txt").generic_string()},
                             {"observed", to_string(r.observed.kind)},
                             {"notes", r.notes}};
        if (r.observed.kind != ObservedKind::Failed) {
            std::ofstream os(dir / rel / "trace.csv");
            write_trace_csv(os, r.trace);
            entry["trace"] = (rel / "trace.csv").generic_string();
            entry["predicted"] = describe(r.predicted);
        }
        runs.push_back(std::move(entry));
    }
    index["runs"] = std::move(runs);
    std::ofstream(dir / "index.json") << index.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Test-function scaling probes
// ---------------------------------------------------------------------------

namespace detail {

template <class F>
double composite_gauss(F&& f, double a, double b, int panels, const QuadratureRule& rule)
{
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    }
    return 0.5 * h * s;
}

/// Surface area of the unit sphere in R^N.
inline double sphere_area(int N) { return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N); }

/// ∫_{R^N} f(|x|²) dx for f supported in |x|² <= 2S and constant on |x|² <= S.
template <class F>
double radial_integral(F&& f, int N, double S, int panels, const QuadratureRule& rule)
{
    auto g = [&](double r) { return f(r * r) * std::pow(r, N - 1); };
    const double r1 = std::sqrt(S), r2 = std::sqrt(2.0 * S);
    return sphere_area(N) * (composite_gauss(g, 0.0, r1, panels, rule) + composite_gauss(g, r1, r2, panels, rule));
}

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline void check_probe_inputs(const TestFunctionSpec& spec, const std::vector<double>& T_values)
{
    spec.validate();
    detail::require(!spec.uniform_space(), "scaling probe needs a compactly supported space cutoff");
    detail::require(T_values.size() >= 2, "scaling probe needs at least two T values");
    for (double T : T_values) detail::require(std::isfinite(T) && T > 0.0, "T values must be positive");
    const auto [lo, hi] = std::minmax_element(T_values.begin(), T_values.end());
    detail::require(*hi >= 100.0 * *lo, "T values must span at least two decades");
}

} // namespace detail

struct ScalingProbeResult {
    std::vector<double> T;
    std::vector<double> time_term;      ///< (∫∫ φ^{-1/(r-1)} |φ_t|^{r/(r-1)})^{(r-1)/r}
    std::vector<double> laplacian_term; ///< (∫∫ φ^{-1/(r-1)} |Δφ|^{r/(r-1)})^{(r-1)/r}
    std::vector<double> space_mass;     ///< ∫ φ2 dx
    double time_slope = 0, laplacian_slope = 0, space_slope = 0;
};

/// Evaluates the two scaled test-function integrals in physical variables
/// for each T (spec.T is replaced) and fits log-value against log T.
inline ScalingProbeResult test_function_scaling_probe(int N, double r, TestFunctionSpec spec,
                                                      const std::vector<double>& T_values, int panels = 64,
                                                      int nodes = 16)
{
    detail::require(N >= 1, "dimension N must be >= 1");
    detail::require(std::isfinite(r) && r > 1.0, "r must be > 1");
    const double kappa = r / (r - 1.0);
    if (spec.ell < 2.0 * kappa)
        throw UnboundedIntegrand("cutoff power ell=" + std::to_string(spec.ell) + " is below 2r/(r-1)=" +
                                 std::to_string(2.0 * kappa));
    spec.t_start = 0.0;
    detail::check_probe_inputs(spec, T_values);
    const auto rule = gauss_legendre(nodes);
    const double ell = spec.ell;

    ScalingProbeResult out;
    for (double T : T_values) {
        spec.T = T;
        const double S = spec.space_scale();
        auto time_ratio = [&](double t) {
            const Jet2 x = xi1(Jet2{t / T, 1.0 / T, 0.0});
            if (x.v == 0.0) return 0.0;
            return std::pow(ell, kappa) * std::pow(x.v, ell - kappa) * std::pow(std::abs(x.d), kappa);
        };
        auto time_mass = [&](double t) { return std::pow(xi1(t / T), ell); };
        auto space_mass = [&](double rho) { return spec.space_factor(rho).v; };
        auto lap_ratio = [&](double rho) {
            const Jet2 x = xi2(Jet2{rho / S, 1.0 / S, 0.0});
            if (x.v == 0.0) return 0.0;
            const double K = 4.0 * rho * ((ell - 1.0) * x.d * x.d + x.v * x.dd) + 2.0 * N * x.v * x.d;
            return std::pow(ell, kappa) * std::pow(x.v, ell - 2.0 * kappa) * std::pow(std::abs(K), kappa);
        };
        const double It = detail::composite_gauss(time_ratio, 0.0, T, panels, rule);
        const double Mt = detail::composite_gauss(time_mass, 0.0, T, panels, rule);
        const double Ms = detail::radial_integral(space_mass, N, S, panels, rule);
        const double Il = detail::radial_integral(lap_ratio, N, S, panels, rule);
        out.T.push_back(T);
        out.time_term.push_back(std::pow(It * Ms, 1.0 / kappa));
        out.laplacian_term.push_back(std::pow(Mt * Il, 1.0 / kappa));
        out.space_mass.push_back(Ms);
    }
    out.time_slope = detail::ls_slope(out.T, out.time_term);
    out.laplacian_slope = detail::ls_slope(out.T, out.laplacian_term);
    out.space_slope = detail::ls_slope(out.T, out.space_mass);
    return out;
}

/// N/2 (r-1)/r - 1/r, the slope of both terms in the |x|²/T scaling.
inline double expected_scaling_slope(int N, double r) { return 0.5 * N * (r - 1.0) / r - 1.0 / r; }

struct ForcingProbeResult {
    std::vector<double> T, value;
    double slope = 0;
};

/// ∫_0^T t^σ φ1(t) dt · ∫ w φ2 dx with w = exp(-|x|²/(4a)); slope in T.
inline ForcingProbeResult forcing_scaling_probe(double sigma, int N, TestFunctionSpec spec,
                                                const std::vector<double>& T_values, double a = 0.25,
                                                int panels = 64, int nodes = 16)
{
    detail::require(std::isfinite(sigma) && sigma > -1.0, "sigma must exceed -1");
    detail::require(N >= 1, "dimension N must be >= 1");
    detail::require(a > 0.0, "forcing width must be positive");
    spec.t_start = 0.0;
    detail::check_probe_inputs(spec, T_values);
    const auto rule = gauss_legendre(nodes);

    ForcingProbeResult out;
    for (double T : T_values) {
        spec.T = T;
        auto f = [&](double t) { return std::pow(t, sigma) * spec.time_factor(t).first; };
        auto g = [&](double rho) { return std::exp(-rho / (4.0 * a)) * spec.space_factor(rho).v; };
        out.T.push_back(T);
        out.value.push_back(detail::composite_gauss(f, 0.0, T, panels, rule) *
                            detail::radial_integral(g, N, spec.space_scale(), panels, rule));
    }
    out.slope = detail::ls_slope(out.T, out.value);
    return out;
}

/// Slopes of A (r = q) and B (r = p) terms combine through A^{pq/(pq-1)}
/// B^{p/(pq-1)} and the T^{σ+1} forcing bound into four T exponents,
/// ordered (time,time), (laplacian,time), (time,laplacian), (laplacian,laplacian).
inline std::array<double, 4> combine_fixed_radius_exponents(double p, double q, double sigma,
                                                           std::array<double, 2> a_slopes,
                                                           std::array<double, 2> b_slopes)
{
    const double m = p * q - 1.0;
    auto e = [&](double a, double b) { return -(sigma + 1.0) + p * q / m * a + p / m * b; };
    return {e(a_slopes[0], b_slopes[0]), e(a_slopes[1], b_slopes[0]), e(a_slopes[0], b_slopes[1]),
            e(a_slopes[1], b_slopes[1])};
}

/// Closed-form T exponents of the fixed-radius bound on ∫ w1, same order.
inline std::array<double, 4> fixed_radius_exponents(const ProblemParams& P)
{
    const double p = P.p, q = P.q, s = P.sigma, m = p * q - 1.0;
    return {-s - p * (q + 1.0) / m, -s - p / m, -s - p * q / m, -s};
}

} // namespace blowuplab
