#pragma once

/// Gauss-type quadrature rules and the weakly-singular heat-kernel integral
///   ∫_a^b s^e exp(-λ(b-s)) ds,   e > -1, λ >= 0,
/// which every Duhamel forcing term reduces to mode by mode.

#include "blowuplab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace blowuplab {

struct QuadratureRule {
    std::vector<double> nodes;   ///< on [-1, 1]
    std::vector<double> weights;
};

/// Gauss-Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1,1], via the
/// Golub-Welsch eigenvalue formulation of the three-term recurrence.
inline QuadratureRule gauss_jacobi(int n, double alpha, double beta)
{
    detail::require(n >= 1, "quadrature order must be positive");
    detail::require(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");

    const double ab = alpha + beta;
    Eigen::VectorXd diag(n);
    Eigen::VectorXd off(std::max(n - 1, 0));
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        if (k == 0)
            diag(k) = (beta - alpha) / (ab + 2.0);
        else
            diag(k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    }
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + ab;
        double b2;
        if (k == 1)
            b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        else
            b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
        off(k - 1) = std::sqrt(b2);
    }

    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                                std::lgamma(ab + 2.0));

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    if (n == 1) {
        rule.nodes[0] = diag(0);
        rule.weights[0] = mu0;
        return rule;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Evaluates ∫_a^b s^e exp(-λ(b-s)) ds by composite Gauss quadrature:
///  - a panel starting at s = 0 uses Gauss-Jacobi with weight s^e, so the
///    endpoint singularity is integrated exactly;
///  - panels are graded dyadically toward b on the scale 1/λ, which resolves
///    the boundary layer of high modes;
///  - when a > 0 panels are graded geometrically away from a, which keeps
///    s^e smooth on each panel.
/// Contributions farther than ~80/λ from b are below double precision and
/// are still integrated, only on coarse panels.
class SingularHeatIntegrator {
public:
    SingularHeatIntegrator(double exponent, int nodes)
        : exponent_(exponent), jacobi_(gauss_jacobi(nodes, 0.0, exponent)), legendre_(gauss_legendre(nodes))
    {
        detail::require(exponent > -1.0, "forcing exponent must exceed -1");
    }

    [[nodiscard]] double exponent() const { return exponent_; }

    [[nodiscard]] double integrate(double lambda, double a, double b) const
    {
        detail::require(a >= 0.0 && b > a, "integration window must satisfy 0 <= a < b");
        breaks_.clear();
        breaks_.push_back(a);
        breaks_.push_back(b);
        if (lambda > 0.0) {
            for (double d = 1.0 / lambda; lambda * d <= 80.0; d *= 2.0) {
                const double x = b - d;
                if (x <= a) break;
                breaks_.push_back(x);
            }
        }
        if (a > 0.0) {
            for (double x = 2.0 * a; x < b; x *= 2.0) breaks_.push_back(x);
        }
        std::sort(breaks_.begin(), breaks_.end());

        double total = 0.0;
        for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
            const double lo = breaks_[i], hi = breaks_[i + 1];
            if (hi <= lo) continue;
            const double half = 0.5 * (hi - lo);
            double panel = 0.0;
            if (lo == 0.0) {
                // s = half (1 + x): s^e = half^e (1+x)^e absorbed by the Jacobi weight
                for (std::size_t k = 0; k < jacobi_.nodes.size(); ++k) {
                    const double s = half * (1.0 + jacobi_.nodes[k]);
                    panel += jacobi_.weights[k] * std::exp(-lambda * (b - s));
                }
                panel *= std::pow(half, exponent_ + 1.0);
            } else {
                const double mid = 0.5 * (hi + lo);
                for (std::size_t k = 0; k < legendre_.nodes.size(); ++k) {
                    const double s = mid + half * legendre_.nodes[k];
                    panel += legendre_.weights[k] * std::pow(s, exponent_) * std::exp(-lambda * (b - s));
                }
                panel *= half;
            }
            total += panel;
        }
        return total;
    }

private:
    double exponent_;
    QuadratureRule jacobi_;
    QuadratureRule legendre_;
    mutable std::vector<double> breaks_;
};

} // namespace blowuplab
