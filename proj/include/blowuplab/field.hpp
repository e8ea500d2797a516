#pragma once

/// Periodic grids truncating R^N (N = 1, 2, 3) and real fields sampled on them.

#include "blowuplab/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

namespace blowuplab {

/// Uniform periodic grid on [-L/2, L/2)^dim with M points per axis.
struct Grid {
    int dim = 1;
    double length = 1.0; ///< torus period L per axis
    int points = 8;      ///< M, even, >= 8

    void validate() const
    {
        detail::require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
        detail::require(std::isfinite(length) && length > 0.0, "grid side length must be positive");
        detail::require(points >= 8 && points % 2 == 0, "points per axis must be an even integer >= 8");
    }

    [[nodiscard]] std::size_t size() const
    {
        std::size_t n = 1;
        for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(points);
        return n;
    }
    [[nodiscard]] double spacing() const { return length / points; }
    [[nodiscard]] double cell_volume() const { return std::pow(spacing(), dim); }
    [[nodiscard]] double volume() const { return std::pow(length, dim); }
    [[nodiscard]] double coordinate(int i) const { return -0.5 * length + i * spacing(); }

    /// Signed integer frequency m in {-M/2, ..., M/2-1} of FFT index i.
    [[nodiscard]] int frequency(int i) const { return i < points / 2 ? i : i - points; }
    [[nodiscard]] double wavenumber_unit() const { return 2.0 * std::numbers::pi / length; }

    /// Per-axis indices of the flat row-major index `flat`.
    [[nodiscard]] std::array<int, 3> unflatten(std::size_t flat) const
    {
        std::array<int, 3> idx{0, 0, 0};
        for (int d = dim - 1; d >= 0; --d) {
            idx[d] = static_cast<int>(flat % points);
            flat /= points;
        }
        return idx;
    }

    /// Squared distance of grid point `flat` from `center` (no wrap-around).
    [[nodiscard]] double radius_squared(std::size_t flat, std::span<const double> center = {}) const
    {
        const auto idx = unflatten(flat);
        double r2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double c = d < static_cast<int>(center.size()) ? center[d] : 0.0;
            const double x = coordinate(idx[d]) - c;
            r2 += x * x;
        }
        return r2;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

class Field {
public:
    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) { g.validate(); }
    Field(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values))
    {
        g.validate();
        detail::require(values_.size() == g.size(), "value count does not match grid size");
    }

    /// Samples f(x) at every grid point; x has `dim` meaningful entries.
    static Field sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& f)
    {
        Field out(g);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto idx = g.unflatten(i);
            std::array<double, 3> x{0, 0, 0};
            for (int d = 0; d < g.dim; ++d) x[d] = g.coordinate(idx[d]);
            out.values_[i] = f(x);
        }
        return out;
    }

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] double& operator[](std::size_t i) { return values_[i]; }

    [[nodiscard]] double max_abs() const
    {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    [[nodiscard]] double min() const { return *std::min_element(values_.begin(), values_.end()); }
    [[nodiscard]] double max() const { return *std::max_element(values_.begin(), values_.end()); }

    /// Plain (signed) Riemann-sum integral over the torus.
    [[nodiscard]] double integral() const
    {
        double s = 0.0;
        for (double v : values_) s += v;
        return s * grid_.cell_volume();
    }

    [[nodiscard]] bool all_finite() const
    {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    Field& operator+=(const Field& o)
    {
        check_same_grid(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    Field& operator-=(const Field& o)
    {
        check_same_grid(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    Field& operator*=(double c)
    {
        for (double& v : values_) v *= c;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, double c) { return a *= c; }
    friend Field operator*(double c, Field a) { return a *= c; }

    friend bool operator==(const Field&, const Field&) = default;

private:
    void check_same_grid(const Field& o) const
    {
        detail::require(grid_ == o.grid_, "fields live on different grids");
    }

    Grid grid_;
    std::vector<double> values_;
};

/// |x|^r evaluated as exp(r log|x|), exactly 0 at 0.
inline double abs_pow(double x, double r)
{
    const double a = std::abs(x);
    return a == 0.0 ? 0.0 : std::exp(r * std::log(a));
}

/// Discrete L^r norm (h^N-weighted power sum); r = +inf gives the max norm.
inline double lp_norm(const Field& f, double r)
{
    detail::require(r >= 1.0, "Lebesgue exponent must be >= 1");
    if (std::isinf(r)) return f.max_abs();
    const double vmax = f.max_abs();
    if (vmax == 0.0) return 0.0;
    // scale by the max to keep the power sum in range
    double s = 0.0;
    for (double v : f.values()) s += abs_pow(v / vmax, r);
    return vmax * std::pow(s * f.grid().cell_volume(), 1.0 / r);
}

/// Standard mollifier profile amplitude * exp(1 - 1/(1 - |x-c|²/R²)) inside
/// the ball, zero outside; equals `amplitude` at the center.
inline Field make_bump(const Grid& g, std::span<const double> center, double radius, double amplitude)
{
    g.validate();
    detail::require(radius > 0.0 && radius < 0.5 * g.length, "bump radius must lie in (0, L/2)");
    Field out(g);
    if (amplitude == 0.0) return out;
    const double r2max = radius * radius;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = g.radius_squared(i, center) / r2max;
        out[i] = s < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
    }
    return out;
}

/// amplitude * exp(-|x-c|²/(4a)).
inline Field make_gaussian(const Grid& g, std::span<const double> center, double a, double amplitude)
{
    g.validate();
    detail::require(a > 0.0, "Gaussian width parameter must be positive");
    Field out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = amplitude * std::exp(-g.radius_squared(i, center) / (4.0 * a));
    return out;
}

// ---------------------------------------------------------------------------
// Flat binary snapshot: int64 dim, int64 M, float64 L, then M^dim float64,
// all little-endian, row-major.
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void write_le(std::ostream& os, T value)
{
    static_assert(sizeof(T) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &value, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

template <class T>
T read_le(std::istream& is)
{
    static_assert(sizeof(T) == 8);
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw InvalidArgument("truncated field snapshot");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    T value;
    std::memcpy(&value, &bits, 8);
    return value;
}

} // namespace detail

inline void write_snapshot(std::ostream& os, const Field& f)
{
    const Grid& g = f.grid();
    detail::write_le<std::int64_t>(os, g.dim);
    detail::write_le<std::int64_t>(os, g.points);
    detail::write_le<double>(os, g.length);
    for (double v : f.values()) detail::write_le<double>(os, v);
}

inline Field read_snapshot(std::istream& is)
{
    Grid g;
    g.dim = static_cast<int>(detail::read_le<std::int64_t>(is));
    g.points = static_cast<int>(detail::read_le<std::int64_t>(is));
    g.length = detail::read_le<double>(is);
    g.validate();
    std::vector<double> values(g.size());
    for (double& v : values) v = detail::read_le<double>(is);
    return Field(g, std::move(values));
}

} // namespace blowuplab
