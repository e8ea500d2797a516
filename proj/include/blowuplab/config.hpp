#pragma once

/// Run configurations and their flat key=value text form.
///
/// A config file holds one `key = value` per line; `#` starts a comment. A
/// value may be a comma-separated list, in which case the file expands to
/// the Cartesian product of all lists (first key varies slowest).

#include "blowuplab/duhamel.hpp"
#include "blowuplab/errors.hpp"
#include "blowuplab/exponents.hpp"
#include "blowuplab/field.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace blowuplab {

namespace detail {

inline std::string fmt_double(double x, int digits = 17)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view s, std::string_view what)
{
    s = trim(s);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw InvalidArgument("cannot parse '" + std::string(s) + "' as a number for " + std::string(what));
    return x;
}

inline int parse_int(std::string_view s, std::string_view what)
{
    s = trim(s);
    int x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw InvalidArgument("cannot parse '" + std::string(s) + "' as an integer for " + std::string(what));
    return x;
}

/// Splits on commas outside parentheses.
inline std::vector<std::string> split_top_level(std::string_view s)
{
    std::vector<std::string> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || (s[i] == ',' && depth == 0)) {
            out.emplace_back(trim(s.substr(start, i - start)));
            start = i + 1;
        } else if (s[i] == '(') {
            ++depth;
        } else if (s[i] == ')') {
            --depth;
        }
    }
    return out;
}

inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Named spatial profile, centred at the origin.
struct ProfileRecipe {
    enum class Kind { Zero, Gaussian, Bump, Constant };
    Kind kind = Kind::Zero;
    double width = 0.0;     ///< Gaussian a, or bump radius
    double amplitude = 0.0;

    static ProfileRecipe zero() { return {}; }
    static ProfileRecipe gaussian(double a, double amp) { return {Kind::Gaussian, a, amp}; }
    static ProfileRecipe bump(double radius, double amp) { return {Kind::Bump, radius, amp}; }
    static ProfileRecipe constant(double amp) { return {Kind::Constant, 0.0, amp}; }

    void validate() const
    {
        detail::require(std::isfinite(amplitude), "profile amplitude must be finite");
        if (kind == Kind::Gaussian || kind == Kind::Bump)
            detail::require(std::isfinite(width) && width > 0.0, "profile width must be positive");
    }

    [[nodiscard]] Field build(const Grid& g, double scale = 1.0) const
    {
        validate();
        const std::array<double, 3> c{0.0, 0.0, 0.0};
        const std::span<const double> ctr(c.data(), static_cast<std::size_t>(g.dim));
        switch (kind) {
        case Kind::Zero: return Field(g);
        case Kind::Gaussian: return make_gaussian(g, ctr, width, scale * amplitude);
        case Kind::Bump: return make_bump(g, ctr, width, scale * amplitude);
        case Kind::Constant: return Field(g, scale * amplitude);
        }
        return Field(g);
    }

    [[nodiscard]] std::string to_string() const
    {
        using detail::fmt_double;
        switch (kind) {
        case Kind::Zero: return "zero";
        case Kind::Gaussian: return "gaussian(" + fmt_double(width) + "," + fmt_double(amplitude) + ")";
        case Kind::Bump: return "bump(" + fmt_double(width) + "," + fmt_double(amplitude) + ")";
        case Kind::Constant: return "constant(" + fmt_double(amplitude) + ")";
        }
        return "zero";
    }

    static ProfileRecipe parse(std::string_view text)
    {
        text = detail::trim(text);
        if (text == "zero") return zero();
        const auto open = text.find('(');
        if (open == std::string_view::npos || text.back() != ')')
            throw InvalidArgument("unknown profile recipe '" + std::string(text) + "'");
        const auto name = detail::trim(text.substr(0, open));
        const auto args = detail::split_top_level(text.substr(open + 1, text.size() - open - 2));
        auto arity = [&](std::size_t n) {
            if (args.size() != n)
                throw InvalidArgument("profile '" + std::string(name) + "' takes " + std::to_string(n) + " argument(s)");
        };
        ProfileRecipe r;
        if (name == "gaussian") {
            arity(2);
            r = gaussian(detail::parse_double(args[0], "gaussian width"), detail::parse_double(args[1], "gaussian amplitude"));
        } else if (name == "bump") {
            arity(2);
            r = bump(detail::parse_double(args[0], "bump radius"), detail::parse_double(args[1], "bump amplitude"));
        } else if (name == "constant") {
            arity(1);
            r = constant(detail::parse_double(args[0], "constant amplitude"));
        } else {
            throw InvalidArgument("unknown profile recipe '" + std::string(name) + "'");
        }
        r.validate();
        return r;
    }

    friend bool operator==(const ProfileRecipe&, const ProfileRecipe&) = default;
};

struct RunConfig {
    ProblemParams params;
    Grid grid{1, 20.0, 64};
    ProfileRecipe data = ProfileRecipe::zero();            ///< u0 = v0 = eps * data
    ProfileRecipe forcing1 = ProfileRecipe::bump(2.0, 1.0); ///< w1 = eps * forcing1
    ProfileRecipe forcing2 = ProfileRecipe::bump(2.0, 1.0);
    double horizon = 10.0;
    double eps = 1.0;
    double max_step = 1.0;
    SolverConfig solver;

    void validate() const
    {
        detail::require(std::isfinite(horizon) && horizon > 0.0, "horizon must be positive");
        detail::require(std::isfinite(eps) && eps >= 0.0, "eps must be >= 0");
        detail::require(std::isfinite(max_step) && max_step > 0.0, "max_step must be positive");
        params.validate();
        grid.validate();
        detail::require(grid.dim == params.dim, "grid dimension must equal N");
        data.validate();
        forcing1.validate();
        forcing2.validate();
        SolverConfig s = solver;
        s.p = params.p;
        s.q = params.q;
        s.validate();
    }

    /// Canonical key=value text; also the hash input for config_id().
    [[nodiscard]] std::string to_text() const
    {
        using detail::fmt_double;
        std::ostringstream os;
        os << "N = " << params.dim << '\n'
           << "p = " << fmt_double(params.p) << '\n'
           << "q = " << fmt_double(params.q) << '\n'
           << "sigma = " << fmt_double(params.sigma) << '\n'
           << "gamma = " << fmt_double(params.gamma) << '\n'
           << "L = " << fmt_double(grid.length) << '\n'
           << "M = " << grid.points << '\n'
           << "data = " << data.to_string() << '\n'
           << "forcing1 = " << forcing1.to_string() << '\n'
           << "forcing2 = " << forcing2.to_string() << '\n'
           << "horizon = " << fmt_double(horizon) << '\n'
           << "eps = " << fmt_double(eps) << '\n'
           << "max_step = " << fmt_double(max_step) << '\n'
           << "quad_nodes = " << solver.quad_nodes << '\n'
           << "picard_tol = " << fmt_double(solver.picard_tol) << '\n'
           << "picard_max_iter = " << solver.picard_max_iter << '\n'
           << "substeps = " << solver.substeps << '\n'
           << "max_window = " << fmt_double(solver.max_window) << '\n'
           << "first_window_grading = " << fmt_double(solver.first_window_grading) << '\n'
           << "overflow_guard = " << fmt_double(solver.overflow_guard) << '\n'
           << "min_window = " << fmt_double(solver.min_window) << '\n';
        return os.str();
    }

    [[nodiscard]] std::string config_id() const
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(to_text())));
        return buf;
    }

    /// Sets one field from its text value.
    void set(std::string_view key, std::string_view value)
    {
        using detail::parse_double;
        using detail::parse_int;
        const std::string k(key);
        if (k == "N") {
            params.dim = parse_int(value, k);
            grid.dim = params.dim;
        } else if (k == "p") params.p = parse_double(value, k);
        else if (k == "q") params.q = parse_double(value, k);
        else if (k == "sigma") params.sigma = parse_double(value, k);
        else if (k == "gamma") params.gamma = parse_double(value, k);
        else if (k == "L") grid.length = parse_double(value, k);
        else if (k == "M") grid.points = parse_int(value, k);
        else if (k == "data") data = ProfileRecipe::parse(value);
        else if (k == "forcing1") forcing1 = ProfileRecipe::parse(value);
        else if (k == "forcing2") forcing2 = ProfileRecipe::parse(value);
        else if (k == "horizon") horizon = parse_double(value, k);
        else if (k == "eps") eps = parse_double(value, k);
        else if (k == "max_step") max_step = parse_double(value, k);
        else if (k == "quad_nodes") solver.quad_nodes = parse_int(value, k);
        else if (k == "picard_tol") solver.picard_tol = parse_double(value, k);
        else if (k == "picard_max_iter") solver.picard_max_iter = parse_int(value, k);
        else if (k == "substeps") solver.substeps = parse_int(value, k);
        else if (k == "max_window") solver.max_window = parse_double(value, k);
        else if (k == "first_window_grading") solver.first_window_grading = parse_double(value, k);
        else if (k == "overflow_guard") solver.overflow_guard = parse_double(value, k);
        else if (k == "min_window") solver.min_window = parse_double(value, k);
        else throw InvalidArgument("unknown config key '" + k + "'");
    }
};

/// Ordered key -> list of alternatives, as read from a config document.
using ConfigTable = std::vector<std::pair<std::string, std::vector<std::string>>>;

inline ConfigTable parse_config_table(std::istream& is)
{
    ConfigTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw InvalidArgument("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(detail::trim(s.substr(0, eq)));
        const auto values = detail::split_top_level(s.substr(eq + 1));
        for (const auto& v : values)
            if (v.empty()) throw InvalidArgument("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        for (const auto& [k, _] : table)
            if (k == key) throw InvalidArgument("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        RunConfig probe;
        try {
            probe.set(key, values.front());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("line " + std::to_string(lineno) + ": " + e.what());
        }
        table.emplace_back(key, values);
    }
    return table;
}

/// Cartesian expansion of a table over `base`; each result is validated.
inline std::vector<RunConfig> expand_configs(const ConfigTable& table, const RunConfig& base = {})
{
    std::vector<RunConfig> out;
    std::vector<std::size_t> idx(table.size(), 0);
    while (true) {
        RunConfig c = base;
        for (std::size_t i = 0; i < table.size(); ++i) c.set(table[i].first, table[i].second[idx[i]]);
        c.validate();
        out.push_back(std::move(c));
        std::size_t i = table.size();
        while (i > 0) {
            --i;
            if (++idx[i] < table[i].second.size()) break;
            idx[i] = 0;
            if (i == 0) return out;
        }
        if (table.empty()) return out;
    }
}

inline std::vector<RunConfig> parse_configs(std::istream& is, const RunConfig& base = {})
{
    return expand_configs(parse_config_table(is), base);
}

inline std::vector<RunConfig> load_configs(const std::string& path, const RunConfig& base = {})
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
    return parse_configs(in, base);
}

} // namespace blowuplab
