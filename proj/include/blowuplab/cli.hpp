#pragma once

/// Command-line front end. Exit codes: 0 success, 1 validation or usage
/// error, 2 runtime failure, 3 prediction/observation disagreement under
/// `sweep --assert`.

#include "blowuplab/config.hpp"
#include "blowuplab/experiments.hpp"
#include "blowuplab/exponents.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace blowuplab::cli {

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2, kDisagreement = 3 };

namespace detail {

using blowuplab::detail::fmt_double;

inline std::string num(double x) { return fmt_double(x, 15); }

struct ParamFlags {
    int N = 1;
    double p = 2.0, q = 2.0, sigma = -0.5, gamma = -0.5;
    bool w_positive = false, w1_positive = false, w2_positive = false;

    void attach(CLI::App* app, bool forcing_flags)
    {
        app->add_option("--N", N, "space dimension")->required();
        app->add_option("--p", p, "exponent of |v| in the u equation")->required();
        app->add_option("--q", q, "exponent of |u| in the v equation")->required();
        app->add_option("--sigma", sigma, "time exponent of the u forcing")->required();
        app->add_option("--gamma", gamma, "time exponent of the v forcing")->required();
        if (forcing_flags) {
            app->add_flag("--w-positive", w_positive, "both forcing profiles have positive integral");
            app->add_flag("--w1-positive", w1_positive, "the u forcing has positive integral");
            app->add_flag("--w2-positive", w2_positive, "the v forcing has positive integral");
        }
    }

    [[nodiscard]] ProblemParams params() const
    {
        ProblemParams P{N, p, q, sigma, gamma, w_positive || w1_positive, w_positive || w2_positive};
        P.validate();
        return P;
    }
};

struct ConfigFlags {
    std::string path;
    std::vector<std::string> overrides;
    std::string output_dir = "blowuplab-out";

    void attach(CLI::App* app)
    {
        app->add_option("--config", path, "key=value run configuration file")->required()->check(CLI::ExistingFile);
        app->add_option("--set", overrides, "inline override key=value (repeatable)");
        app->add_option("--output-dir", output_dir, "directory receiving all outputs");
    }

    /// File text with overrides applied, then the expanded configs.
    [[nodiscard]] std::pair<std::string, std::vector<RunConfig>> load() const
    {
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
        std::ostringstream text;
        text << in.rdbuf();
        std::istringstream is(text.str());
        ConfigTable table = parse_config_table(is);
        for (const auto& o : overrides) {
            std::istringstream line(o);
            ConfigTable one = parse_config_table(line);
            if (one.size() != 1) throw InvalidArgument("override '" + o + "' must be a single key=value");
            auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == one[0].first; });
            if (it == table.end()) table.push_back(one[0]);
            else it->second = one[0].second;
        }
        std::string echo = text.str();
        if (!overrides.empty()) {
            echo += "# overrides\n";
            for (const auto& o : overrides) echo += o + "\n";
        }
        return {echo, expand_configs(table)};
    }
};

inline void print_exponents(std::ostream& out, const ProblemParams& P)
{
    DerivedExponents D = derive_exponents(P);
    out << "d1=" << num(D.d1) << "\nd2=" << num(D.d2) << "\nk1=" << num(D.k1) << "\nk2=" << num(D.k2)
        << "\ntheta1=" << num(D.theta1) << "\ntheta2=" << num(D.theta2) << "\nN*="
        << (D.n_star ? num(*D.n_star) : std::string("undefined")) << '\n';
}

inline void print_pair(std::ostream& out, const ProblemParams& P, const FeasiblePairReport& rep)
{
    const auto D = with_pair(P, derive_exponents(P), rep);
    out << "alpha1=" << num(rep.alpha1) << "\nalpha2=" << num(rep.alpha2) << "\nalpha3=" << num(rep.alpha3)
        << "\nalpha4=" << num(rep.alpha4) << "\ndiagnosed_case=" << rep.diagnosed_case << "\ncase=" << rep.case_id
        << "\nq1=" << num(rep.q1()) << "\nq2=" << num(rep.q2()) << '\n';
    for (int i = 0; i < 6; ++i) out << "beta" << i + 1 << '=' << num((*D.beta)[i]) << '\n';
}

inline void print_record(std::ostream& out, const RunRecord& r)
{
    out << "config_id=" << r.config_id << "\npredicted=" << describe(r.predicted)
        << "\nobserved=" << to_string(r.observed.kind) << "\nt_end=" << num(r.observed.t_end)
        << "\nmax_sup=" << num(r.observed.max_sup) << '\n';
    if (r.observed.t_max_estimate) out << "t_max_est=" << num(*r.observed.t_max_estimate) << '\n';
    if (r.observed.weighted_sum_sup) out << "weighted_sum_sup=" << num(*r.observed.weighted_sum_sup) << '\n';
    if (!r.notes.empty()) out << "notes=" << r.notes << '\n';
}

struct SelftestCase {
    std::string name;
    bool pass;
};

inline std::vector<SelftestCase> selftest_cases()
{
    std::vector<SelftestCase> out;
    const ProblemParams ref{2, 3.0, 3.0, -0.5, -0.5};
    const auto D = derive_exponents(ref);
    out.push_back({"exponent ledger", std::abs(D.d1 - 2.0) < 1e-12 && std::abs(D.k1 - 1.0) < 1e-12 &&
                                          std::abs(D.theta1) < 1e-12 && D.n_star && std::abs(*D.n_star - 2.0) < 1e-12});
    out.push_back({"classification", describe(classify_regime({1, 3.0, 3.0, -0.5, -0.5})) == "BlowUp (C1)"});
    bool pair_ok = false;
    try {
        pair_ok = feasible_pair(ref).constraints_ok;
    } catch (const Error&) {
    }
    out.push_back({"feasible pair", pair_ok});

    std::vector<TraceSample> tr;
    for (int k = 0; k <= 18; ++k) {
        const double t = 1.0 - std::pow(10.0, -0.5 * k);
        tr.push_back({t, 1.0 / (1.0 - t), 1.0 / (1.0 - t), 0, 0});
    }
    const auto v = detect_blowup(tr);
    out.push_back({"riccati extrapolation", v.blew_up && std::abs(*v.t_max_estimate - 1.0) <= 0.05});

    const auto probe = test_function_scaling_probe(1, 2.0, TestFunctionSpec{}, {1e2, 1e3, 1e4});
    out.push_back({"scaling slope", std::abs(probe.time_slope - expected_scaling_slope(1, 2.0)) <= 0.02});

    const Grid g{1, 40.0, 128};
    const Field u0 = make_gaussian(g, std::vector<double>{0.0}, 1.0, 1.0);
    const Field heat = heat_propagate(u0, 1.0);
    double err = 0.0;
    for (std::size_t i = 0; i < heat.size(); ++i) {
        const double x = g.coordinate(static_cast<int>(i));
        err = std::max(err, std::abs(heat[i] - std::sqrt(0.5) * std::exp(-x * x / 8.0)));
    }
    out.push_back({"heat semigroup", err < 1e-8});
    return out;
}

} // namespace detail

/// Parses argv, dispatches, and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"blowuplab: forced reaction-diffusion systems, regime prediction and simulation", "blowuplab"};
    app.require_subcommand(0, 1);

    detail::ParamFlags classify_flags, exponent_flags, feasible_flags;
    auto* classify = app.add_subcommand("classify", "predicted regime for a parameter point");
    classify_flags.attach(classify, true);
    auto* exponents = app.add_subcommand("exponents", "derived exponent ledger");
    exponent_flags.attach(exponents, false);
    auto* feasible = app.add_subcommand("feasible", "integrability pair and weights");
    feasible_flags.attach(feasible, false);

    detail::ConfigFlags run_flags, sweep_flags;
    auto* run_cmd = app.add_subcommand("run", "simulate one configuration");
    run_flags.attach(run_cmd);
    auto* sweep_cmd = app.add_subcommand("sweep", "simulate every configuration of a (list-valued) config file");
    sweep_flags.attach(sweep_cmd);
    bool assert_agreement = false;
    sweep_cmd->add_flag("--assert", assert_agreement, "exit 3 when a prediction disagrees with the observation");

    int probe_N = 1;
    double probe_r = 2.0, probe_tmin = 1e2, probe_tmax = 1e4;
    int probe_ell = 8, probe_points = 5;
    std::optional<double> probe_R, probe_sigma;
    auto* probe = app.add_subcommand("probe-scaling", "T-scaling of the test-function integrals");
    probe->add_option("--N", probe_N, "space dimension")->required();
    probe->add_option("--r", probe_r, "Hoelder exponent r > 1")->required();
    probe->add_option("--ell", probe_ell, "cutoff power");
    probe->add_option("--R", probe_R, "fixed spatial radius (default: |x|^2/T scaling)");
    probe->add_option("--sigma", probe_sigma, "also fit the forcing integral for this exponent");
    probe->add_option("--T-min", probe_tmin, "smallest T");
    probe->add_option("--T-max", probe_tmax, "largest T");
    probe->add_option("--points", probe_points, "number of log-spaced T values")->check(CLI::Range(2, 1000));

    auto* selftest = app.add_subcommand("selftest", "quick built-in consistency checks");

    if (argc <= 1) {
        err << app.help();
        return kValidation;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    try {
        if (classify->parsed()) {
            out << describe(classify_regime(classify_flags.params())) << '\n';
        } else if (exponents->parsed()) {
            detail::print_exponents(out, exponent_flags.params());
        } else if (feasible->parsed()) {
            const auto P = feasible_flags.params();
            detail::print_pair(out, P, feasible_pair(P));
        } else if (run_cmd->parsed()) {
            const auto [echo, configs] = run_flags.load();
            if (configs.size() != 1)
                throw InvalidArgument("run expects exactly one configuration, the file expands to " +
                                      std::to_string(configs.size()) + "; use sweep");
            SweepResult res;
            res.records.push_back(run_case(configs.front()));
            write_sweep_outputs(res, run_flags.output_dir, echo);
            detail::print_record(out, res.records.front());
        } else if (sweep_cmd->parsed()) {
            const auto [echo, configs] = sweep_flags.load();
            const auto res = sweep(configs);
            write_sweep_outputs(res, sweep_flags.output_dir, echo);
            out << "runs=" << res.records.size() << "\nagree=" << res.summary.agree
                << "\ndisagree=" << res.summary.disagree << "\nundetermined=" << res.summary.undetermined
                << "\nfailed=" << res.summary.failed << '\n';
            if (assert_agreement && res.summary.disagree > 0) return kDisagreement;
            if (res.summary.failed > 0) return kRuntime;
        } else if (probe->parsed()) {
            blowuplab::detail::require(probe_tmin > 0.0 && probe_tmax > probe_tmin, "need 0 < T-min < T-max");
            std::vector<double> T;
            for (int i = 0; i < probe_points; ++i)
                T.push_back(probe_tmin * std::pow(probe_tmax / probe_tmin, static_cast<double>(i) / (probe_points - 1)));
            TestFunctionSpec spec;
            spec.ell = probe_ell;
            spec.R = probe_R;
            const auto res = test_function_scaling_probe(probe_N, probe_r, spec, T);
            out << "time_slope=" << detail::num(res.time_slope) << "\nlaplacian_slope=" << detail::num(res.laplacian_slope)
                << "\nspace_slope=" << detail::num(res.space_slope) << '\n';
            if (!probe_R) out << "expected_slope=" << detail::num(expected_scaling_slope(probe_N, probe_r)) << '\n';
            if (probe_sigma) {
                const auto f = forcing_scaling_probe(*probe_sigma, probe_N, spec, T);
                out << "forcing_slope=" << detail::num(f.slope) << "\nexpected_forcing_slope=" << detail::num(*probe_sigma + 1.0)
                    << '\n';
            }
        } else if (selftest->parsed()) {
            bool ok = true;
            for (const auto& c : detail::selftest_cases()) {
                out << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
                ok = ok && c.pass;
            }
            return ok ? kOk : kRuntime;
        } else {
            err << app.help();
            return kValidation;
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const InfeasibleRegion& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const UnboundedIntegrand& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}

} // namespace blowuplab::cli
