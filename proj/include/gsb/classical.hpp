#pragma once

// Classical global-score machinery: per-point information matrices and bias
// vectors, the general score bound, the three hierarchy levels, and the
// saturation / existence / anchor-construction procedures.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gsb/error.hpp"
#include "gsb/linalg.hpp"
#include "gsb/model.hpp"

namespace gsb {

struct BoundOptions {
    double rcond = kDefaultRcond;        // pseudoinverse rank cutoff (relative)
    double range_tol = kDefaultRangeTol; // range-membership tolerance
};

// g_j(x) = d/dtheta p(x | theta_j)
inline TestFunctions local_scores(const DiscreteModel& model) {
    TestFunctions g;
    g.rows = model.derivs;
    return g;
}

// [C^(i)]_{jk} = sum_x g_j(x) g_k(x) / p(x | theta_i)
inline SymMatrix info_matrix(const DiscreteModel& model, const TestFunctions& g, int i) {
    const int n = g.n();
    const int nx = model.num_outcomes();
    const auto& p = model.probs[static_cast<std::size_t>(i)];
    for (int x = 0; x < nx; ++x)
        require(p[static_cast<std::size_t>(x)] > 0.0, "zero-probability",
                "p(x|theta_" + std::to_string(i) + ") vanishes at outcome " + std::to_string(x));
    std::vector<double> buf(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < nx; ++x) {
        const double ip = 1.0 / p[static_cast<std::size_t>(x)];
        for (int j = 0; j < n; ++j) {
            const double gj = g.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)];
            if (gj == 0.0) continue;
            const double w = gj * ip;
            for (int k = 0; k <= j; ++k)
                buf[static_cast<std::size_t>(j) * n + k] +=
                    w * g.rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)];
        }
    }
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
            buf[static_cast<std::size_t>(j) * n + k] = buf[static_cast<std::size_t>(k) * n + j];
    return SymMatrix::from_dense(n, buf);
}

// b^(i) = sum_x g(x) [thetahat(x) - E_i(thetahat)]
inline std::vector<double> bias_vector(const DiscreteModel& model, const TestFunctions& g,
                                       const Estimator& est, int i) {
    const int n = g.n();
    const int nx = model.num_outcomes();
    require(static_cast<int>(est.values.size()) == nx, "invalid-argument",
            "estimator is not defined on every outcome");
    const double mean = model.expectation(est.values, i);
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < nx; ++x) {
        const double fluct = est.values[static_cast<std::size_t>(x)] - mean;
        for (int j = 0; j < n; ++j)
            b[static_cast<std::size_t>(j)] += g.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)] * fluct;
    }
    return b;
}

// B_C(A) = (sum_i w_i a_i^T b^(i))^2 / (sum_i w_i a_i^T C^(i) a_i)
inline double bound_general(const DiscreteModel& model, const TestFunctions& g, const Estimator& est,
                            const HierarchyMatrix& a) {
    const int n = model.n();
    require(a.n == n, "invalid-argument", "hierarchy matrix dimension mismatch");
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const std::vector<double> ai = a.column(i);
        const std::vector<double> bi = bias_vector(model, g, est, i);
        const SymMatrix ci = info_matrix(model, g, i);
        num += w * dot(ai, bi);
        den += w * dot(ai, ci.apply(ai));
    }
    const double anorm = a.frob();
    require(den > 1e-14 * anorm * anorm, "degenerate-denominator",
            "score variance vanishes for this hierarchy matrix");
    return num * num / den;
}

// Global Cramer-Rao level: sum_i w_i (b_i^(i))^2 / [C^(i)]_{ii}.
// A direction with neither bias nor information contributes 0; bias against
// zero information is an error rather than an infinite bound.
inline double bound_gcr(const DiscreteModel& model, const TestFunctions& g, const Estimator& est) {
    const int n = model.n();
    double total = 0.0;
    double bmax = 0.0;
    std::vector<double> bii(static_cast<std::size_t>(n), 0.0), cii(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        if (!model.active(i)) continue;
        const std::vector<double> bi = bias_vector(model, g, est, i);
        const SymMatrix ci = info_matrix(model, g, i);
        bii[static_cast<std::size_t>(i)] = bi[static_cast<std::size_t>(i)];
        cii[static_cast<std::size_t>(i)] = ci(i, i);
        bmax = std::max(bmax, std::abs(bi[static_cast<std::size_t>(i)]));
    }
    for (int i = 0; i < n; ++i) {
        if (!model.active(i)) continue;
        const double w = model.weights[static_cast<std::size_t>(i)];
        const double b = bii[static_cast<std::size_t>(i)];
        const double c = cii[static_cast<std::size_t>(i)];
        if (c > 0.0) {
            total += w * b * b / c;
        } else {
            require(std::abs(b) <= 1e-12 * (1.0 + bmax), "unbounded-gcr",
                    "score direction " + std::to_string(i) + " carries bias but no information");
        }
    }
    return total;
}

namespace detail {

// b^T M^+ b with an explicit range check; used by the Barankin and fully
// global levels ("range-violation" signals a rank-tolerance problem, not a
// model property -- the finite condition holds automatically).
inline double pinv_quadform_checked(const SymMatrix& m, const std::vector<double>& b,
                                    const BoundOptions& opt, const std::string& what) {
    const EigenDecomp e = eig_sym(m);
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    const double cut = opt.rcond * lmax;
    double out2 = 0.0, value = 0.0;
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        const double c = dot(e.vectors[k], b);
        if (std::abs(e.values[k]) <= cut)
            out2 += c * c;
        else
            value += c * c / e.values[k];
    }
    require(std::sqrt(out2) <= opt.range_tol * (1.0 + norm2(b)), "range-violation",
            what + ": bias component escapes the numerical range of the information matrix");
    return value;
}

}  // namespace detail

// Global Barankin level: b_w^T C_w^+ b_w.
inline double bound_gbar(const DiscreteModel& model, const TestFunctions& g, const Estimator& est,
                         const BoundOptions& opt = {}) {
    const int n = model.n();
    std::vector<double> bw(static_cast<std::size_t>(n), 0.0);
    std::vector<double> cw(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const double w = model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const std::vector<double> bi = bias_vector(model, g, est, i);
        const SymMatrix ci = info_matrix(model, g, i);
        for (int j = 0; j < n; ++j) {
            bw[static_cast<std::size_t>(j)] += w * bi[static_cast<std::size_t>(j)];
            for (int k = 0; k < n; ++k) cw[static_cast<std::size_t>(j) * n + k] += w * ci(j, k);
        }
    }
    return detail::pinv_quadform_checked(SymMatrix::from_dense(n, cw), bw, opt, "bound_gbar");
}

// Fully global level: sum_i w_i b^(i)T (C^(i))^+ b^(i).
inline double bound_fg(const DiscreteModel& model, const TestFunctions& g, const Estimator& est,
                       const BoundOptions& opt = {}) {
    const int n = model.n();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const std::vector<double> bi = bias_vector(model, g, est, i);
        const SymMatrix ci = info_matrix(model, g, i);
        total += w * detail::pinv_quadform_checked(ci, bi, opt, "bound_fg[i=" + std::to_string(i) + "]");
    }
    return total;
}

inline double weighted_variance(const DiscreteModel& model, const Estimator& est) {
    const int n = model.n();
    const int nx = model.num_outcomes();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const double mean = model.expectation(est.values, i);
        double var = 0.0;
        for (int x = 0; x < nx; ++x) {
            const double d = est.values[static_cast<std::size_t>(x)] - mean;
            var += model.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] * d * d;
        }
        total += w * var;
    }
    return total;
}

// Hierarchy matrix whose columns are (C^(i))^+ b^(i); it attains the fully
// global level inside bound_general.
inline HierarchyMatrix saturating_hierarchy(const DiscreteModel& model, const TestFunctions& g,
                                            const Estimator& est, const BoundOptions& opt = {}) {
    const int n = model.n();
    std::vector<double> entries(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const std::vector<double> bi = bias_vector(model, g, est, i);
        const SymMatrix ci = info_matrix(model, g, i);
        const std::vector<double> ai = pinv(ci, opt.rcond).apply(bi);
        for (int j = 0; j < n; ++j)
            entries[static_cast<std::size_t>(j) * n + i] = ai[static_cast<std::size_t>(j)];
    }
    return HierarchyMatrix::general(n, std::move(entries));
}

struct SaturationCheck {
    bool saturated = false;
    double residual = 0.0;  // max over active i and outcomes x
};

// Outcome-space saturation condition for the fully global level:
// g(x)^T (C^(i))^+ b^(i) = p(x|theta_i) [thetahat(x) - E_i(thetahat)].
inline SaturationCheck check_saturation(const DiscreteModel& model, const TestFunctions& g,
                                        const Estimator& est, const BoundOptions& opt = {}) {
    const int n = model.n();
    const int nx = model.num_outcomes();
    double resid = 0.0;
    double est_max = 0.0;
    for (double v : est.values) est_max = std::max(est_max, std::abs(v));
    for (int i = 0; i < n; ++i) {
        if (!model.active(i)) continue;
        const std::vector<double> bi = bias_vector(model, g, est, i);
        const SymMatrix ci = info_matrix(model, g, i);
        const std::vector<double> ui = pinv(ci, opt.rcond).apply(bi);
        const double mean = model.expectation(est.values, i);
        for (int x = 0; x < nx; ++x) {
            double lhs = 0.0;
            for (int j = 0; j < n; ++j)
                lhs += g.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)] * ui[static_cast<std::size_t>(j)];
            const double rhs = model.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] *
                               (est.values[static_cast<std::size_t>(x)] - mean);
            resid = std::max(resid, std::abs(lhs - rhs));
        }
    }
    SaturationCheck out;
    out.residual = resid;
    out.saturated = resid <= 1e-8 * (1.0 + est_max);
    return out;
}

// Existence of an estimator attaining the fully global level:
// P_i (h - 1 p_i^T h) must lie in Range(G^T) for every active i.
inline bool check_existence(const DiscreteModel& model, const TestFunctions& g, const Estimator& est,
                            const BoundOptions& opt = {}) {
    const int n = model.n();
    const int nx = model.num_outcomes();
    // S = G^T G over outcome space; Range(S) = Range(G^T).
    std::vector<double> s(static_cast<std::size_t>(nx) * static_cast<std::size_t>(nx), 0.0);
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y <= x; ++y) {
            double v = 0.0;
            for (int j = 0; j < n; ++j)
                v += g.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)] *
                     g.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(y)];
            s[static_cast<std::size_t>(x) * nx + y] = v;
            s[static_cast<std::size_t>(y) * nx + x] = v;
        }
    const SymMatrix gram = SymMatrix::from_dense(nx, s);
    for (int i = 0; i < n; ++i) {
        if (!model.active(i)) continue;
        const double mean = model.expectation(est.values, i);
        std::vector<double> v(static_cast<std::size_t>(nx));
        for (int x = 0; x < nx; ++x)
            v[static_cast<std::size_t>(x)] = model.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] *
                                             (est.values[static_cast<std::size_t>(x)] - mean);
        if (!in_range(gram, v, opt.range_tol, opt.rcond)) return false;
    }
    return true;
}

struct AnchorResult {
    Estimator estimator;
    std::vector<double> coeffs;  // c^(i) of the anchor representation
};

// Globally unbiased estimator in anchor form thetahat(x) = theta_i +
// g(x)^T c / p(x|theta_i), solving Delta theta = M^(i) c by least squares.
// Absent when the displacement vector escapes Range(M^(i)).
inline std::optional<AnchorResult> anchor_construct(const DiscreteModel& model, const TestFunctions& g,
                                                    int anchor, const BoundOptions& opt = {}) {
    const int n = model.n();
    const int nx = model.num_outcomes();
    require(anchor >= 0 && anchor < n, "invalid-argument", "anchor index out of range");
    const auto& pa = model.probs[static_cast<std::size_t>(anchor)];

    // [M]_{jk} = sum_x p(x|theta_j) g_k(x) / p(x|theta_anchor)
    std::vector<double> mjk(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < nx; ++x) {
        const double ip = 1.0 / pa[static_cast<std::size_t>(x)];
        for (int j = 0; j < n; ++j) {
            const double pj = model.probs[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)] * ip;
            for (int k = 0; k < n; ++k)
                mjk[static_cast<std::size_t>(j) * n + k] +=
                    pj * g.rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)];
        }
    }
    std::vector<double> dtheta(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        dtheta[static_cast<std::size_t>(j)] =
            model.params[static_cast<std::size_t>(j)] - model.params[static_cast<std::size_t>(anchor)];

    // least squares through the normal equations (M is small and dense)
    std::vector<double> nt(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double v = 0.0;
            for (int l = 0; l < n; ++l)
                v += mjk[static_cast<std::size_t>(l) * n + j] * mjk[static_cast<std::size_t>(l) * n + k];
            nt[static_cast<std::size_t>(j) * n + k] = v;
        }
    for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int l = 0; l < n; ++l)
            v += mjk[static_cast<std::size_t>(l) * n + j] * dtheta[static_cast<std::size_t>(l)];
        rhs[static_cast<std::size_t>(j)] = v;
    }
    const std::vector<double> c = pinv(SymMatrix::from_dense(n, nt), opt.rcond).apply(rhs);

    // range condition: M c must reproduce the displacements
    double resid = 0.0;
    for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int k = 0; k < n; ++k) v += mjk[static_cast<std::size_t>(j) * n + k] * c[static_cast<std::size_t>(k)];
        resid = std::max(resid, std::abs(v - dtheta[static_cast<std::size_t>(j)]));
    }
    double dmax = 0.0;
    for (double v : dtheta) dmax = std::max(dmax, std::abs(v));
    if (resid > 1e-8 * (1.0 + dmax)) return std::nullopt;

    AnchorResult out;
    out.coeffs = c;
    out.estimator.values.resize(static_cast<std::size_t>(nx));
    for (int x = 0; x < nx; ++x) {
        double gc = 0.0;
        for (int k = 0; k < n; ++k)
            gc += g.rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] * c[static_cast<std::size_t>(k)];
        out.estimator.values[static_cast<std::size_t>(x)] =
            model.params[static_cast<std::size_t>(anchor)] + gc / pa[static_cast<std::size_t>(x)];
    }
    // verify global unbiasedness
    double pmax = 0.0;
    for (double v : model.params) pmax = std::max(pmax, std::abs(v));
    for (int k = 0; k < n; ++k) {
        const double mean = model.expectation(out.estimator.values, k);
        if (std::abs(mean - model.params[static_cast<std::size_t>(k)]) > 1e-8 * (1.0 + pmax))
            return std::nullopt;
    }
    return out;
}

struct BoundReport {
    double gcr = 0.0;
    double gbar = 0.0;
    double fg = 0.0;
    std::vector<int> ranks;  // numerical rank of each C^(i)
    std::optional<HierarchyMatrix> saturating_a;
};

inline BoundReport compute_bounds(const DiscreteModel& model, const TestFunctions& g, const Estimator& est,
                                  const BoundOptions& opt = {}) {
    BoundReport rep;
    rep.gcr = bound_gcr(model, g, est);
    rep.gbar = bound_gbar(model, g, est, opt);
    rep.fg = bound_fg(model, g, est, opt);
    rep.ranks.resize(static_cast<std::size_t>(model.n()));
    for (int i = 0; i < model.n(); ++i)
        rep.ranks[static_cast<std::size_t>(i)] = sym_rank(info_matrix(model, g, i), opt.rcond);
    rep.saturating_a = saturating_hierarchy(model, g, est, opt);
    return rep;
}

}  // namespace gsb
