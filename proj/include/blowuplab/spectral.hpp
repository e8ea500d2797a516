#pragma once

/// Real-to-complex spectral transforms on the periodic grid and the heat
/// semigroup S(t) = exp(tΔ) acting as the multiplier exp(-|ξ|² t).

#include "blowuplab/errors.hpp"
#include "blowuplab/field.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace blowuplab {

using Complex = std::complex<double>;

/// FFTW plans plus per-mode metadata for one grid shape. Execution is
/// thread-safe; only plan creation is serialized.
class SpectralPlan {
public:
    explicit SpectralPlan(const Grid& g) : grid_(g)
    {
        g.validate();
        const int M = g.points;
        spectral_size_ = 1;
        for (int d = 0; d < g.dim - 1; ++d) spectral_size_ *= static_cast<std::size_t>(M);
        spectral_size_ *= static_cast<std::size_t>(M / 2 + 1);

        int n[3] = {M, M, M};
        std::vector<double> real_buf(g.size());
        std::vector<Complex> cplx_buf(spectral_size_);
        auto* cbuf = reinterpret_cast<fftw_complex*>(cplx_buf.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        {
            std::lock_guard lock(planner_mutex());
            forward_ = fftw_plan_dft_r2c(g.dim, n, real_buf.data(), cbuf, flags);
            inverse_ = fftw_plan_dft_c2r(g.dim, n, cbuf, real_buf.data(), flags);
        }
        if (!forward_ || !inverse_) throw Error("FFTW planning failed");

        // integer |m|² of every stored mode
        mode_n2_.resize(spectral_size_);
        const int half = M / 2 + 1;
        for (std::size_t k = 0; k < spectral_size_; ++k) {
            std::size_t rest = k;
            long n2 = 0;
            for (int d = g.dim - 1; d >= 0; --d) {
                const int extent = d == g.dim - 1 ? half : M;
                const int idx = static_cast<int>(rest % extent);
                rest /= extent;
                const long m = d == g.dim - 1 ? idx : g.frequency(idx);
                n2 += m * m;
            }
            mode_n2_[k] = n2;
        }

        // compress to distinct |m|² classes
        std::map<long, int> ids;
        for (long v : mode_n2_) ids.emplace(v, 0);
        int next = 0;
        for (auto& [v, id] : ids) {
            id = next++;
            class_n2_.push_back(v);
        }
        mode_class_.resize(spectral_size_);
        for (std::size_t k = 0; k < spectral_size_; ++k) mode_class_[k] = ids[mode_n2_[k]];
    }

    ~SpectralPlan()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }
    SpectralPlan(const SpectralPlan&) = delete;
    SpectralPlan& operator=(const SpectralPlan&) = delete;

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] std::size_t spectral_size() const { return spectral_size_; }

    /// |ξ|² of stored mode k.
    [[nodiscard]] double lambda(std::size_t k) const { return unit2() * static_cast<double>(mode_n2_[k]); }

    [[nodiscard]] std::size_t class_count() const { return class_n2_.size(); }
    [[nodiscard]] int mode_class(std::size_t k) const { return mode_class_[k]; }
    [[nodiscard]] double class_lambda(int c) const { return unit2() * static_cast<double>(class_n2_[c]); }

    void forward(std::span<const double> in, std::span<Complex> out) const
    {
        std::vector<double> tmp(in.begin(), in.end());
        fftw_execute_dft_r2c(forward_, tmp.data(), reinterpret_cast<fftw_complex*>(out.data()));
    }

    /// Normalized inverse: inverse(forward(f)) == f up to rounding.
    void inverse(std::span<const Complex> in, std::span<double> out) const
    {
        std::vector<Complex> tmp(in.begin(), in.end());
        fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
        const double scale = 1.0 / static_cast<double>(grid_.size());
        for (double& v : out) v *= scale;
    }

    [[nodiscard]] std::vector<Complex> forward(const Field& f) const
    {
        detail::require(f.grid() == grid_, "field grid does not match spectral plan");
        std::vector<Complex> out(spectral_size_);
        forward(f.values(), out);
        return out;
    }

    [[nodiscard]] Field inverse(std::span<const Complex> coeffs) const
    {
        Field out(grid_);
        inverse(coeffs, out.values());
        return out;
    }

private:
    static std::mutex& planner_mutex()
    {
        static std::mutex m;
        return m;
    }
    [[nodiscard]] double unit2() const
    {
        const double k = grid_.wavenumber_unit();
        return k * k;
    }

    Grid grid_;
    std::size_t spectral_size_ = 0;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
    std::vector<long> mode_n2_;
    std::vector<int> mode_class_;
    std::vector<long> class_n2_;
};

/// Shared plan for a grid shape; plans are cached for the process lifetime.
inline std::shared_ptr<const SpectralPlan> spectral_plan(const Grid& g)
{
    static std::mutex m;
    static std::map<std::tuple<int, int, double>, std::shared_ptr<const SpectralPlan>> cache;
    std::lock_guard lock(m);
    auto key = std::make_tuple(g.dim, g.points, g.length);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto plan = std::make_shared<const SpectralPlan>(g);
    cache.emplace(key, plan);
    return plan;
}

/// S(t) f: spectral coefficients multiplied by exp(-|ξ|² t).
inline Field heat_propagate(const Field& f, double t)
{
    detail::require(t >= 0.0 && std::isfinite(t), "heat propagation time must be non-negative");
    if (t == 0.0) return f;
    const auto plan = spectral_plan(f.grid());
    auto c = plan->forward(f);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] *= std::exp(-plan->lambda(k) * t);
    return plan->inverse(c);
}

/// Spectral Laplacian Δf.
inline Field laplacian(const Field& f)
{
    const auto plan = spectral_plan(f.grid());
    auto c = plan->forward(f);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] *= -plan->lambda(k);
    return plan->inverse(c);
}

} // namespace blowuplab
