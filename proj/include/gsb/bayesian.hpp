#pragma once

// Generalized Bayesian bound for the noisy planar qubit with Gaussian prior
// and Gaussian hierarchy kernel.  The kernel integrals have closed forms, so
// the bound is a single quadrature over the integrand below; the delta-kernel
// limit is the Van Trees bound.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gsb/error.hpp"

namespace gsb {

struct QuadratureSpec {
    double half_width_multiplier = 8.0;
    int points = 2001;  // odd, composite Simpson
};

struct BayesKernelConfig {
    double d = 0.5;        // decoherence strength, 0 < d < 1
    double sigma_p = 5.0;  // prior width
    double eps = 0.0;      // kernel width
    QuadratureSpec quad;

    void validate() const {
        require(d > 0.0 && d < 1.0, "invalid-config", "bayesian d must lie in (0, 1)");
        require(sigma_p > 0.0, "invalid-config", "prior width must be positive");
        require(eps >= 0.0, "invalid-config", "kernel width must be >= 0");
        require(quad.points >= 51 && quad.points % 2 == 1, "invalid-config",
                "quadrature points must be odd and >= 51");
        require(quad.half_width_multiplier > 0.0, "invalid-config", "half width multiplier must be positive");
    }
};

struct KernelAux {
    double sigma2 = 0.0;  // eps^2 + sigma_p^2
    double alpha = 0.0;   // eps^2 / sigma2
    double eps = 0.0;
    double sigma_p = 0.0;

    double g(double theta) const {
        return std::exp(-theta * theta / (2.0 * sigma2) - eps * eps * sigma_p * sigma_p / (2.0 * sigma2)) /
               std::sqrt(2.0 * M_PI * sigma2);
    }

    double f3(double theta) const {
        return -theta * std::exp(-theta * theta / (2.0 * sigma2)) / (sigma2 * std::sqrt(2.0 * M_PI * sigma2));
    }

    double prior(double theta) const {
        return std::exp(-theta * theta / (2.0 * sigma_p * sigma_p)) /
               (std::sqrt(2.0 * M_PI) * sigma_p);
    }
};

inline KernelAux kernel_aux(const BayesKernelConfig& cfg) {
    cfg.validate();
    KernelAux aux;
    aux.eps = cfg.eps;
    aux.sigma_p = cfg.sigma_p;
    aux.sigma2 = cfg.eps * cfg.eps + cfg.sigma_p * cfg.sigma_p;
    aux.alpha = cfg.eps * cfg.eps / aux.sigma2;
    return aux;
}

struct GMatrixElements {
    double gpp = 0.0;
    double gmm = 0.0;
    double gpm_imag = 0.0;
};

// Kernel-smeared score operator in the state eigenbasis.
inline GMatrixElements gmatrix_elements(const BayesKernelConfig& cfg, double theta) {
    const KernelAux aux = kernel_aux(cfg);
    const double g = aux.g(theta);
    const double f3 = aux.f3(theta);
    const double at = aux.alpha * theta;
    const double bracket = theta * std::cos(at) + cfg.eps * cfg.eps * std::sin(at);
    const double dg2 = 0.5 * cfg.d * g;
    GMatrixElements el;
    el.gpp = 0.5 * f3 - dg2 * bracket / aux.sigma2 + dg2 * std::sin(at);
    el.gmm = 0.5 * f3 + dg2 * bracket / aux.sigma2 - dg2 * std::sin(at);
    el.gpm_imag = dg2 * (theta * std::sin(at) + cfg.sigma_p * cfg.sigma_p * std::cos(at)) / aux.sigma2;
    return el;
}

// 2 Gpp^2/((1+d)p) + 2 Gmm^2/((1-d)p) + 4 Gpm^2/p
inline double integrand(const BayesKernelConfig& cfg, double theta) {
    const KernelAux aux = kernel_aux(cfg);
    const GMatrixElements el = gmatrix_elements(cfg, theta);
    const double p = aux.prior(theta);
    return 2.0 * el.gpp * el.gpp / ((1.0 + cfg.d) * p) + 2.0 * el.gmm * el.gmm / ((1.0 - cfg.d) * p) +
           4.0 * el.gpm_imag * el.gpm_imag / p;
}

// Delta-kernel limit 1 / (d^2 + 1/sigma_p^2).
inline double van_trees_bound(const BayesKernelConfig& cfg) {
    return 1.0 / (cfg.d * cfg.d + 1.0 / (cfg.sigma_p * cfg.sigma_p));
}

// BMSE lower bound 1 / integral(integrand) by composite Simpson on a
// symmetric interval of half width k * sqrt(Sigma^2 + sigma_p^2).
inline double bayes_bound(const BayesKernelConfig& cfg) {
    cfg.validate();
    if (cfg.eps == 0.0) return van_trees_bound(cfg);  // exact delta-kernel limit
    const KernelAux aux = kernel_aux(cfg);
    const double hw = cfg.quad.half_width_multiplier * std::sqrt(aux.sigma2 + cfg.sigma_p * cfg.sigma_p);
    const int pts = cfg.quad.points;
    const double h = 2.0 * hw / static_cast<double>(pts - 1);
    double integral = 0.0;
    for (int k = 0; k < pts; ++k) {
        const double theta = -hw + h * static_cast<double>(k);
        const double w = (k == 0 || k == pts - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        integral += w * integrand(cfg, theta);
    }
    integral *= h / 3.0;
    require(integral > 1e-300, "quadrature-underflow", "score correlation integral underflowed");
    return 1.0 / integral;
}

struct BayesCurve {
    std::vector<double> eps_grid;
    std::vector<double> bounds;
    double argmax_eps = 0.0;
    double vantrees = 0.0;  // closed-form delta-kernel reference
};

inline BayesCurve sweep(const BayesKernelConfig& cfg, const std::vector<double>& eps_grid) {
    require(!eps_grid.empty(), "invalid-config", "eps grid is empty");
    for (std::size_t k = 0; k < eps_grid.size(); ++k) {
        require(eps_grid[k] >= 0.0, "invalid-config", "eps grid values must be >= 0");
        if (k > 0)
            require(eps_grid[k] > eps_grid[k - 1], "invalid-config", "eps grid must be increasing");
    }
    BayesCurve curve;
    curve.eps_grid = eps_grid;
    curve.bounds.reserve(eps_grid.size());
    BayesKernelConfig point = cfg;
    for (double e : eps_grid) {
        point.eps = e;
        curve.bounds.push_back(bayes_bound(point));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < curve.bounds.size(); ++k)
        if (curve.bounds[k] > curve.bounds[best]) best = k;  // ties keep the smallest eps
    curve.argmax_eps = eps_grid[best];
    curve.vantrees = van_trees_bound(cfg);
    return curve;
}

inline std::vector<double> logspace_grid(double lo, double hi, int count) {
    require(lo > 0.0 && hi > lo && count >= 2, "invalid-config", "bad logspace grid");
    std::vector<double> g(static_cast<std::size_t>(count));
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int k = 0; k < count; ++k)
        g[static_cast<std::size_t>(k)] =
            std::pow(10.0, llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(count - 1));
    return g;
}

}  // namespace gsb
