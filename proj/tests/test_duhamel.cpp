#include "blowuplab/duhamel.hpp"
#include "blowuplab/weak_form.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace blowuplab;

namespace {

Grid line(int M = 8, double L = 10.0) { return Grid{1, L, M}; }

ForcingTerm forcing(const Field& f, double e) { return ForcingTerm{f, e}; }

Field bump(const Grid& g, double radius, double amp, double c = 0.0)
{
    const double ctr[3] = {c, 0.0, 0.0};
    return make_bump(g, std::span<const double>(ctr, g.dim), radius, amp);
}

Field gaussian(const Grid& g, double a, double amp)
{
    const double ctr[3] = {0.0, 0.0, 0.0};
    return make_gaussian(g, std::span<const double>(ctr, g.dim), a, amp);
}

double sup_diff(const Field& a, const Field& b) { return (a - b).max_abs(); }

} // namespace

TEST(TrapezoidWeights, SeriesMatchesClosedForm)
{
    for (double z : {0.49999, 0.5, 0.50001}) {
        const auto s = detail::trapezoid_weights(z);
        const double e = std::exp(-z);
        EXPECT_NEAR(s.first, (1.0 - (1.0 + z) * e) / (z * z), 1e-14);
        EXPECT_NEAR(s.second, (z - 1.0 + e) / (z * z), 1e-14);
    }
    const auto zero = detail::trapezoid_weights(0.0);
    EXPECT_DOUBLE_EQ(zero.first, 0.5);
    EXPECT_DOUBLE_EQ(zero.second, 0.5);
}

TEST(ForcingIntegral, ConstantProfiles)
{
    const auto g = line(16);
    const Field c(g, 1.75);
    auto f = forcing_integral(forcing(c, -0.5), 0.0, 1.0);
    for (double v : f.values()) EXPECT_NEAR(v / (2.0 * 1.75), 1.0, 1e-10);
    f = forcing_integral(forcing(c, 0.5), 0.0, 2.0);
    for (double v : f.values()) EXPECT_NEAR(v / (1.75 * std::pow(2.0, 1.5) / 1.5), 1.0, 1e-10);
    EXPECT_THROW(forcing_integral(forcing(c, 0.5), 1.0, 1.0), InvalidArgument);
}

TEST(ForcingIntegral, GaussianMatchesGradedReference)
{
    const double a = 0.5, sigma = -0.5;
    const Grid g{1, 30.0, 128};
    const auto w = gaussian(g, a, 1.0);
    const auto f = forcing_integral(forcing(w, sigma), 0.0, 1.0);
    double err = 0.0, ref_max = 0.0;
    for (int i = 0; i < g.points; i += 2) {
        const double x = g.coordinate(i);
        const double ref = oracle::gaussian_forcing_reference(sigma, a, 1, x * x, 1.0, 50000);
        err = std::max(err, std::abs(f[i] - ref));
        ref_max = std::max(ref_max, std::abs(ref));
    }
    EXPECT_LT(err / ref_max, 1e-6);
}

TEST(PicardMap, ZeroIsFixed)
{
    const auto g = line(16);
    const Field z(g);
    SolverConfig cfg;
    const PicardMap psi(z, z, forcing(z, -0.5), forcing(z, 0.3), window_nodes(0.0, 0.5, 8, 2.0), cfg);
    const auto lin = psi.linear_part();
    const auto y = psi.apply(lin);
    for (std::size_t j = 0; j < y.u.size(); ++j) {
        EXPECT_EQ(y.u[j].max_abs(), 0.0);
        EXPECT_EQ(y.v[j].max_abs(), 0.0);
    }
}

TEST(PicardMap, UniformDataMatchIntegralForm)
{
    // Iterate V(s) = 1 + s, U(s) = 2 - s with matching start values.
    const auto g = line(8);
    const double p = 2.5, q = 1.5, sigma = -0.4, gamma = 0.7, u0 = 2.0, v0 = 1.0, c1 = 1.2, c2 = 0.8;
    SolverConfig cfg;
    cfg.p = p;
    cfg.q = q;
    const auto nodes = window_nodes(0.0, 0.2, 512);
    const PicardMap psi(Field(g, u0), Field(g, v0), forcing(Field(g, c1), sigma), forcing(Field(g, c2), gamma),
                        nodes, cfg);
    Trajectory x;
    x.t = nodes;
    for (double t : nodes) {
        x.u.emplace_back(g, 2.0 - t);
        x.v.emplace_back(g, 1.0 + t);
    }
    const auto y = psi.apply(x);
    for (std::size_t j = 0; j < nodes.size(); j += 37) {
        const double t = nodes[j];
        const double U = u0 + (std::pow(1.0 + t, p + 1.0) - 1.0) / (p + 1.0) + c1 * std::pow(t, sigma + 1.0) / (sigma + 1.0);
        const double V = v0 + (std::pow(2.0, q + 1.0) - std::pow(2.0 - t, q + 1.0)) / (q + 1.0) +
                         c2 * std::pow(t, gamma + 1.0) / (gamma + 1.0);
        EXPECT_NEAR(y.u[j][3], U, 1e-8);
        EXPECT_NEAR(y.v[j][5], V, 1e-8);
    }
}

TEST(PicardMap, NonnegativeDataStayNonnegative)
{
    const Grid g{1, 20.0, 128};
    SolverConfig cfg;
    const PicardMap psi(gaussian(g, 0.5, 1.0), gaussian(g, 1.0, 0.5), forcing(gaussian(g, 0.3, 2.0), -0.5),
                        forcing(gaussian(g, 0.8, 1.0), 0.5), window_nodes(0.0, 0.1, 8, 2.0), cfg);
    Trajectory x = psi.linear_part();
    for (int k = 0; k < 3; ++k) x = psi.apply(x);
    for (std::size_t j = 0; j < x.u.size(); ++j) {
        EXPECT_GE(x.u[j].min(), -1e-12);
        EXPECT_GE(x.v[j].min(), -1e-12);
    }
}

TEST(LocalSolve, ZeroDataGiveZero)
{
    const auto g = line(16);
    const Field z(g);
    const auto s = local_solve(z, z, forcing(z, -0.5), forcing(z, -0.5), SolverConfig{});
    EXPECT_EQ(s.last_solve.iterations, 1);
    EXPECT_EQ(s.u.max_abs(), 0.0);
    EXPECT_EQ(s.v.max_abs(), 0.0);
    EXPECT_EQ(s.trace.front().t, 0.0);
    for (std::size_t i = 1; i < s.trace.size(); ++i) EXPECT_GT(s.trace[i].t, s.trace[i - 1].t);
}

TEST(LocalSolve, WindowSatisfiesBothConditions)
{
    const Grid g{1, 20.0, 64};
    SolverConfig cfg;
    cfg.p = 3.0;
    cfg.q = 2.0;
    const auto u0 = bump(g, 3.0, 1.5), v0 = bump(g, 2.0, 0.7);
    const auto w1 = forcing(bump(g, 2.5, 2.0), -0.5), w2 = forcing(bump(g, 2.5, 0.5), 0.4);
    const auto s = local_solve(u0, v0, w1, w2, cfg);
    const double M = 2.0 + 0.7;
    EXPECT_NEAR(s.last_solve.contraction_bound, M, 1e-12);
    const double T = s.t;
    EXPECT_TRUE(window_admissible(cfg, M, 0.0, T, -0.5, 0.4));
    EXPECT_FALSE(T < cfg.max_window && window_admissible(cfg, M, 0.0, 2.0 * T, -0.5, 0.4));
}

TEST(LocalSolve, ContractionAndFixedPointResidual)
{
    const Grid g{1, 20.0, 64};
    SolverConfig cfg;
    const auto u0 = bump(g, 3.0, 1.0), v0 = bump(g, 2.0, 0.5, 1.0);
    const auto w1 = forcing(bump(g, 2.5, 1.0), -0.5), w2 = forcing(gaussian(g, 0.5, 0.8), -0.3);
    const auto s = local_solve(u0, v0, w1, w2, cfg);
    const auto& d = s.last_solve.distances;
    ASSERT_GE(d.size(), 2u);
    for (std::size_t k = 0; k + 1 < d.size(); ++k) EXPECT_LE(d[k + 1], 0.5 * d[k] + 1e-12);

    // re-solve the same window and apply Ψ once more to the converged iterate
    std::vector<double> nodes;
    for (const auto& tr : s.trace) nodes.push_back(tr.t);
    const PicardMap psi(u0, v0, w1, w2, nodes, cfg);
    const auto sol = solve_window(u0, v0, w1, w2, nodes, cfg);
    const auto again = psi.apply(sol.trajectory);
    EXPECT_LE(trajectory_distance(again, sol.trajectory), 2.0 * cfg.picard_tol * std::max(1.0, trajectory_sup(sol.trajectory)));
}

TEST(LocalSolve, UniformDataMatchOde)
{
    const std::vector<oracle::OdeCase> cases = {
        {2.0, 2.0, 0.5, 0.5, 0.5, 0.5, 1.0, 1.0},   {3.0, 2.0, -0.5, -0.5, 0.2, 0.3, 1.0, 0.5},
        {2.0, 3.0, 0.5, -0.5, 0.4, 0.1, 0.7, 1.3},  {1.5, 2.5, -0.8, 0.3, 0.3, 0.3, 0.5, 0.9},
        {2.0, 2.0, -0.3, -0.7, 0.0, 0.0, 1.0, 1.0}, {4.0, 1.5, 1.5, -0.2, 0.6, 0.2, 0.4, 0.6},
    };
    const auto g = line(8);
    for (const auto& c : cases) {
        SolverConfig cfg;
        cfg.p = c.p;
        cfg.q = c.q;
        const auto s = local_solve(Field(g, c.u0), Field(g, c.v0), forcing(Field(g, c.c1), c.sigma),
                                   forcing(Field(g, c.c2), c.gamma), cfg);
        double err = 0.0;
        for (const auto& tr : s.trace) {
            const auto ref = oracle::ode_solution(c, tr.t);
            err = std::max({err, std::abs(tr.sup_u - std::abs(ref[0])), std::abs(tr.sup_v - std::abs(ref[1]))});
        }
        EXPECT_LT(err, 1e-6) << "p=" << c.p << " q=" << c.q << " sigma=" << c.sigma << " gamma=" << c.gamma;
    }
}

TEST(LocalSolve, SwapSymmetryIsExact)
{
    const Grid g{1, 20.0, 64};
    SolverConfig cfg;
    cfg.p = 2.5;
    cfg.q = 1.7;
    const auto u0 = bump(g, 3.0, 1.0), v0 = gaussian(g, 0.7, 0.4);
    const auto w1 = forcing(bump(g, 2.0, 0.6), -0.5), w2 = forcing(gaussian(g, 0.5, 0.8), 0.6);
    const auto a = local_solve(u0, v0, w1, w2, cfg);
    std::swap(cfg.p, cfg.q);
    const auto b = local_solve(v0, u0, w2, w1, cfg);
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.u, b.v);
    EXPECT_EQ(a.v, b.u);
}

TEST(SolveWindow, RestartConsistency)
{
    // Same uniform mesh solved as one window or as two consecutive windows.
    const Grid g{1, 20.0, 64};
    SolverConfig cfg;
    const auto u0 = bump(g, 3.0, 0.8), v0 = bump(g, 2.0, 0.5);
    const auto w1 = forcing(bump(g, 2.5, 0.5), 0.5), w2 = forcing(gaussian(g, 0.5, 0.6), -0.5);
    const double T = 0.1;
    const auto whole = solve_window(u0, v0, w1, w2, window_nodes(0.0, T, 32), cfg);
    const auto first = solve_window(u0, v0, w1, w2, window_nodes(0.0, T / 2, 16), cfg);
    const auto second = solve_window(first.trajectory.u.back(), first.trajectory.v.back(), w1, w2,
                                     window_nodes(T / 2, T / 2, 16), cfg);
    EXPECT_LE(sup_diff(whole.trajectory.u.back(), second.trajectory.u.back()), 10.0 * cfg.picard_tol);
    EXPECT_LE(sup_diff(whole.trajectory.v.back(), second.trajectory.v.back()), 10.0 * cfg.picard_tol);

    // spatially uniform data
    const auto h = line(8);
    const Field one(h, 1.0), half(h, 0.5);
    const auto wu = solve_window(one, half, forcing(half, 0.5), forcing(one, 0.5), window_nodes(0.0, T, 32), cfg);
    const auto f1 = solve_window(one, half, forcing(half, 0.5), forcing(one, 0.5), window_nodes(0.0, T / 2, 16), cfg);
    const auto f2 = solve_window(f1.trajectory.u.back(), f1.trajectory.v.back(), forcing(half, 0.5),
                                 forcing(one, 0.5), window_nodes(T / 2, T / 2, 16), cfg);
    EXPECT_LE(sup_diff(wu.trajectory.u.back(), f2.trajectory.u.back()), 10.0 * cfg.picard_tol);
}

TEST(Advance, PositivityWithNonnegativeData)
{
    const Grid g{1, 30.0, 128};
    SolverConfig cfg;
    const auto u0 = gaussian(g, 0.5, 0.5), v0 = gaussian(g, 1.0, 0.3);
    auto s = local_solve(u0, v0, forcing(gaussian(g, 0.4, 0.5), -0.5), forcing(gaussian(g, 0.6, 0.4), -0.5), cfg);
    cfg.keep_history = true;
    s.config = cfg;
    const auto r = advance(s, 1.0, 0.25);
    EXPECT_EQ(r.outcome, AdvanceOutcome::ReachedHorizon);
    for (const auto& snap : r.state.history) {
        EXPECT_GE(snap.u.min(), -1e-10);
        EXPECT_GE(snap.v.min(), -1e-10);
    }
    EXPECT_NEAR(r.state.t, 1.0, 1e-12);
}

TEST(Advance, LinearRegimeTracksHeatFlow)
{
    const Grid g{1, 40.0, 128};
    SolverConfig cfg;
    cfg.p = cfg.q = 3.0;
    const auto u0 = gaussian(g, 1.0, 1e-6);
    const Field z(g);
    auto s = local_solve(u0, u0, forcing(z, 0.5), forcing(z, 0.5), cfg);
    const auto r = advance(s, 1.0, 0.25);
    const auto heat = heat_propagate(u0, 1.0);
    EXPECT_LT(sup_diff(r.state.u, heat) / heat.max_abs(), 1e-6);
}

TEST(Advance, RiccatiBlowUp)
{
    const auto g = line(8);
    const Field one(g, 1.0), z(g);
    SolverConfig cfg;
    auto s = local_solve(one, one, forcing(z, 0.5), forcing(z, 0.5), cfg);
    const auto r = advance(s, 5.0, 0.25);
    EXPECT_EQ(r.outcome, AdvanceOutcome::BlowUpDetected);
    ASSERT_TRUE(r.t_max_estimate.has_value());
    EXPECT_GE(*r.t_max_estimate, 0.95);
    EXPECT_LE(*r.t_max_estimate, 1.05);
    EXPECT_GE(r.state.trace.back().sup(), cfg.overflow_guard);
}

TEST(Advance, PositiveSigmaForcingBlowsUp)
{
    const Grid g{1, 40.0, 128};
    SolverConfig cfg;
    const Field z(g);
    const auto w = bump(g, 2.0, 1.0);
    auto s = local_solve(z, z, forcing(w, 0.5), forcing(w, 0.5), cfg);
    const auto r = advance(s, 50.0, 0.5);
    EXPECT_EQ(r.outcome, AdvanceOutcome::BlowUpDetected);
    const auto& tr = r.state.trace;
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GE(tr[i].sup(), tr[i - 1].sup() * (1.0 - 1e-12));
}

TEST(Advance, GridRefinementConverges)
{
    SolverConfig cfg;
    auto run = [&](int M) {
        const Grid g{1, 20.0, M};
        auto s = local_solve(bump(g, 3.0, 0.5), bump(g, 2.5, 0.5), forcing(bump(g, 2.0, 0.5), -0.5),
                             forcing(bump(g, 2.0, 0.5), -0.5), cfg);
        return advance(s, 0.5, 0.125).state.u;
    };
    const auto a = run(16), b = run(32), c = run(64);
    double e1 = 0.0, e2 = 0.0;
    for (int i = 0; i < 16; ++i) e1 = std::max(e1, std::abs(a[i] - b[2 * i]));
    for (int i = 0; i < 32; ++i) e2 = std::max(e2, std::abs(b[i] - c[2 * i]));
    EXPECT_LT(e2, e1);
}

TEST(ExtrapolateTmax, ExactRiccatiSamples)
{
    std::vector<TraceSample> tr;
    for (int i = 0; i < 30; ++i) {
        const double t = 0.9 + 0.003 * i;
        tr.push_back({t, 1.0 / (1.0 - t), 1.0 / (1.0 - t), 0, 0});
    }
    const auto est = extrapolate_tmax(tr);
    ASSERT_TRUE(est.has_value());
    EXPECT_NEAR(*est, 1.0, 1e-9);
    tr.resize(5);
    EXPECT_FALSE(extrapolate_tmax(tr).has_value());
}

TEST(TraceCsv, Header)
{
    std::ostringstream os;
    write_trace_csv(os, {{0.0, 1.0, 2.0, 3.0, 4.0}});
    EXPECT_EQ(os.str().rfind("t,sup_u,sup_v,lq1_u,lq2_v\n", 0), 0u);
}

TEST(WeakIdentity, ZeroSolutionIsExact)
{
    const auto g = line(16);
    const Field z(g);
    SolverConfig cfg;
    cfg.keep_history = true;
    cfg.max_window = 0.25;
    auto s = local_solve(z, z, forcing(z, 0.5), forcing(z, 0.5), cfg);
    const auto r = advance(s, 1.0, 0.25);
    TestFunctionSpec spec;
    spec.t_start = 0.2;
    spec.T = 0.6;
    spec.R = 1.0;
    const auto res = verify_weak_identity(r.state, spec);
    EXPECT_EQ(res.first, 0.0);
    EXPECT_EQ(res.second, 0.0);

    spec.t_start = 0.0;
    EXPECT_THROW(verify_weak_identity(r.state, spec), InvalidArgument);
    spec.t_start = 0.5;
    EXPECT_THROW(verify_weak_identity(r.state, spec), InvalidArgument);
}

TEST(WeakIdentity, UniformSolutionUniformTestFactor)
{
    const auto g = line(8);
    SolverConfig cfg;
    cfg.keep_history = true;
    cfg.substeps = 256;
    cfg.max_window = 0.25;
    auto s = local_solve(Field(g, 0.5), Field(g, 0.2), forcing(Field(g, 1.0), 0.5), forcing(Field(g, 0.5), 0.5), cfg);
    const auto r = advance(s, 0.5, 0.25);
    TestFunctionSpec spec;
    spec.xi2_profile = "uniform";
    spec.t_start = 0.05;
    spec.T = 0.4;
    const auto res = verify_weak_identity(r.state, spec);
    EXPECT_LT(res.first, 1e-8);
    EXPECT_LT(res.second, 1e-8);
}
