#pragma once

// Quantum layer: density-matrix families, the generalized SLD superoperator,
// quantum information matrices and bounds, the score-span compatibility
// condition, and the parameter-independent optimal measurement built from the
// score Gram matrix.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gsb/classical.hpp"
#include "gsb/error.hpp"
#include "gsb/linalg.hpp"
#include "gsb/model.hpp"

namespace gsb {

struct StateFamily {
    int dim = 0;
    std::vector<double> params;
    std::vector<double> weights;
    std::vector<HermMatrix> states;   // rho(theta_i)
    std::vector<HermMatrix> dstates;  // d/dtheta rho(theta_i)

    int n() const { return static_cast<int>(params.size()); }
    bool active(int i) const { return weights[static_cast<std::size_t>(i)] > 0.0; }

    void validate() const {
        const std::size_t nn = params.size();
        require(dim >= 1, "invalid-family", "Hilbert dimension must be >= 1");
        require(nn >= 1, "invalid-family", "parameter grid is empty");
        require(states.size() == nn && dstates.size() == nn && weights.size() == nn, "invalid-family",
                "family field lengths disagree");
        for (std::size_t i = 1; i < nn; ++i)
            require(params[i] > params[i - 1], "invalid-family", "params must be strictly increasing");
        double wsum = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            require(weights[i] >= 0.0, "invalid-family", "negative weight");
            wsum += weights[i];
            require(states[i].dim() == dim && dstates[i].dim() == dim, "invalid-family",
                    "state dimension mismatch at row " + std::to_string(i));
            require(std::abs(states[i].trace() - 1.0) <= 1e-12, "invalid-family",
                    "state " + std::to_string(i) + " is not trace one");
            const EigenDecompC e = eig_herm(states[i]);
            require(e.values.front() >= -1e-10, "invalid-family",
                    "state " + std::to_string(i) + " is not positive semidefinite");
            require(std::abs(dstates[i].trace()) <= 1e-10, "invalid-family",
                    "state derivative " + std::to_string(i) + " is not traceless");
        }
        require(std::abs(wsum - 1.0) <= 1e-12, "invalid-family", "weights must sum to 1");
    }

    // Bloch vector (d cos theta, d sin theta, 0).
    static StateFamily planar_qubit(double d, std::vector<double> params_in,
                                    std::vector<double> weights_in = {}) {
        require(d > 0.0 && d < 1.0, "invalid-family", "planar qubit needs 0 < d < 1");
        StateFamily fam;
        fam.dim = 2;
        fam.params = std::move(params_in);
        const std::size_t nn = fam.params.size();
        if (weights_in.empty())
            fam.weights.assign(nn, 1.0 / static_cast<double>(nn));
        else
            fam.weights = std::move(weights_in);
        fam.states.reserve(nn);
        fam.dstates.reserve(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            const double th = fam.params[i];
            HermMatrix rho(2), drho(2);
            rho.set(0, 0, 0.5);
            rho.set(1, 1, 0.5);
            // (d/2)(cos t sx + sin t sy) off-diagonal block
            rho.set(0, 1, cplx(0.5 * d * std::cos(th), -0.5 * d * std::sin(th)));
            drho.set(0, 1, cplx(-0.5 * d * std::sin(th), -0.5 * d * std::cos(th)));
            fam.states.push_back(rho);
            fam.dstates.push_back(drho);
        }
        fam.validate();
        return fam;
    }
};

struct ScoreOperators {
    std::vector<HermMatrix> ops;  // G_j, one per parameter point

    int n() const { return static_cast<int>(ops.size()); }

    static ScoreOperators local(const StateFamily& family) {
        ScoreOperators s;
        s.ops = family.dstates;
        return s;
    }
};

struct Povm {
    std::vector<HermMatrix> elements;

    void validate(double tol = 1e-10) const {
        require(!elements.empty(), "invalid-povm", "POVM has no elements");
        const int d = elements.front().dim();
        HermMatrix sum(d);
        for (const HermMatrix& e : elements) {
            require(e.dim() == d, "invalid-povm", "POVM element dimension mismatch");
            const EigenDecompC eig = eig_herm(e);
            require(eig.values.front() >= -tol, "invalid-povm", "POVM element is not positive semidefinite");
            sum += e;
        }
        HermMatrix id = HermMatrix::identity(d);
        require((sum - id).frob() <= tol * (1.0 + std::sqrt(static_cast<double>(d))), "invalid-povm",
                "POVM elements do not sum to the identity");
    }
};

namespace detail {

// Eigenbasis context for repeated applications of Omega_rho.
struct OmegaContext {
    EigenDecompC eig;
    double reg = 0.0;
    double rank_cut = 0.0;

    explicit OmegaContext(const HermMatrix& rho, double reg_in = 0.0) : eig(eig_herm(rho)), reg(reg_in) {
        require(reg >= 0.0, "invalid-argument", "omega regularization must be >= 0");
        double pmax = 0.0;
        for (double p : eig.values) pmax = std::max(pmax, std::abs(p));
        require(eig.values.front() >= -1e-10, "not-a-state", "omega needs a positive semidefinite state");
        require(std::abs(rho.trace() - 1.0) <= 1e-12, "not-a-state", "omega needs a trace-one state");
        rank_cut = 1e-12 * pmax;
    }

    // X in the eigenbasis: Xt_ab = u_a^dag X u_b
    std::vector<cplx> to_basis(const HermMatrix& x) const {
        const int d = x.dim();
        std::vector<cplx> out(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                cplx s = 0.0;
                for (int r = 0; r < d; ++r) {
                    cplx xr = 0.0;
                    for (int c = 0; c < d; ++c)
                        xr += x(r, c) * eig.vectors[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)];
                    s += std::conj(eig.vectors[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)]) * xr;
                }
                out[static_cast<std::size_t>(a) * d + b] = s;
            }
        return out;
    }

    double weight(int a, int b) const {
        const double pa = std::max(eig.values[static_cast<std::size_t>(a)], 0.0);
        const double pb = std::max(eig.values[static_cast<std::size_t>(b)], 0.0);
        if (reg > 0.0) return 2.0 / (pa + pb + 2.0 * reg);
        if (pa + pb <= rank_cut) return 0.0;  // both outside the support
        return 2.0 / (pa + pb);
    }

    HermMatrix apply(const HermMatrix& x) const {
        const int d = x.dim();
        std::vector<cplx> xt = to_basis(x);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) xt[static_cast<std::size_t>(a) * d + b] *= weight(a, b);
        // back-transform: sum_ab u_a Xt_ab u_b^dag
        std::vector<cplx> out(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), cplx(0.0, 0.0));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                const cplx v = xt[static_cast<std::size_t>(a) * d + b];
                if (v == cplx(0.0, 0.0)) continue;
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c)
                        out[static_cast<std::size_t>(r) * d + c] +=
                            v * eig.vectors[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] *
                            std::conj(eig.vectors[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)]);
            }
        return HermMatrix::from_dense(d, out);
    }

    // Tr[G_j Omega(G_k)] for Hermitian inputs, with the imaginary residual
    // returned for the realness health check.
    void quad(const std::vector<cplx>& gj_t, const std::vector<cplx>& gk_t, int d, double& re, double& im) const {
        cplx s = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                s += std::conj(gj_t[static_cast<std::size_t>(a) * d + b]) *
                     gk_t[static_cast<std::size_t>(a) * d + b] * weight(a, b);
        re = s.real();
        im = s.imag();
    }
};

// plain complex matrix helpers (row-major buffers)
inline std::vector<cplx> cmul(int d, const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> out(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), cplx(0.0, 0.0));
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) {
            const cplx ajl = a[static_cast<std::size_t>(j) * d + l];
            if (ajl == cplx(0.0, 0.0)) continue;
            for (int k = 0; k < d; ++k)
                out[static_cast<std::size_t>(j) * d + k] += ajl * b[static_cast<std::size_t>(l) * d + k];
        }
    return out;
}

inline double cfrob(const std::vector<cplx>& a) {
    double s = 0.0;
    for (const cplx& x : a) s += std::norm(x);
    return std::sqrt(s);
}

inline std::vector<cplx> to_buffer(const HermMatrix& m) { return m.data(); }

inline std::vector<cplx> herm_sqrt_buffer(const HermMatrix& m) {
    const EigenDecompC e = eig_herm(m);
    const int d = m.dim();
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    // rank cutoff before the square root: a roundoff eigenvalue of size
    // eps blows up to sqrt(eps) otherwise
    const double cut = 1e-14 * lmax;
    std::vector<cplx> out(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), cplx(0.0, 0.0));
    for (int k = 0; k < d; ++k) {
        if (e.values[static_cast<std::size_t>(k)] <= cut) continue;
        const double s = std::sqrt(e.values[static_cast<std::size_t>(k)]);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                out[static_cast<std::size_t>(r) * d + c] +=
                    s * e.vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] *
                    std::conj(e.vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)]);
    }
    return out;
}

}  // namespace detail

// Generalized SLD: the Hermitian solution of (1/2){rho, Omega(X)} = X on the
// support of rho.  reg > 0 switches to the rho + reg*I regularization.
inline HermMatrix omega(const HermMatrix& rho, const HermMatrix& x, double reg = 0.0) {
    require(rho.dim() == x.dim(), "invalid-argument", "omega dimension mismatch");
    const detail::OmegaContext ctx(rho, reg);
    return ctx.apply(x);
}

// [Q^(i)]_{jk} = Tr[G_j Omega_{rho_i}(G_k)], symmetrized.
inline SymMatrix q_info_matrix(const StateFamily& family, const ScoreOperators& scores, int i,
                               double reg = 0.0) {
    const int n = scores.n();
    const int d = family.dim;
    require(i >= 0 && i < family.n(), "invalid-argument", "q_info_matrix index out of range");
    const detail::OmegaContext ctx(family.states[static_cast<std::size_t>(i)], reg);
    std::vector<std::vector<cplx>> gt(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) gt[static_cast<std::size_t>(j)] = ctx.to_basis(scores.ops[static_cast<std::size_t>(j)]);
    std::vector<double> buf(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    double scale = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k <= j; ++k) {
            double re, im;
            ctx.quad(gt[static_cast<std::size_t>(j)], gt[static_cast<std::size_t>(k)], d, re, im);
            scale = std::max(scale, std::abs(re));
            require(std::abs(im) <= 1e-10 * (1.0 + scale), "invalid-family",
                    "quantum information matrix has a non-real entry");
            buf[static_cast<std::size_t>(j) * n + k] = re;
            buf[static_cast<std::size_t>(k) * n + j] = re;
        }
    return SymMatrix::from_dense(n, buf);
}

struct QuantumBounds {
    double gcr = 0.0;
    double gbar = 0.0;
    double fg = 0.0;
    std::vector<int> ranks;
};

// Quantum hierarchy levels for prescribed per-point bias vectors.
inline QuantumBounds q_bounds(const StateFamily& family, const ScoreOperators& scores,
                              const std::vector<std::vector<double>>& bias, const BoundOptions& opt = {},
                              double reg = 0.0) {
    const int n = family.n();
    require(static_cast<int>(bias.size()) == n, "invalid-argument", "q_bounds needs one bias vector per point");
    std::vector<SymMatrix> q(static_cast<std::size_t>(n), SymMatrix(1));
    for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i)] = q_info_matrix(family, scores, i, reg);

    QuantumBounds out;
    double bmax = 0.0;
    for (int i = 0; i < n; ++i)
        if (family.active(i)) bmax = std::max(bmax, std::abs(bias[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]));
    for (int i = 0; i < n; ++i) {
        if (!family.active(i)) continue;
        const double w = family.weights[static_cast<std::size_t>(i)];
        const double bii = bias[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
        const double qii = q[static_cast<std::size_t>(i)](i, i);
        if (qii > 0.0) {
            out.gcr += w * bii * bii / qii;
        } else {
            require(std::abs(bii) <= 1e-12 * (1.0 + bmax), "unbounded-gcr",
                    "score direction " + std::to_string(i) + " carries bias but no quantum information");
        }
        out.fg += w * detail::pinv_quadform_checked(q[static_cast<std::size_t>(i)], bias[static_cast<std::size_t>(i)],
                                                    opt, "q_bounds.fg[i=" + std::to_string(i) + "]");
    }
    std::vector<double> bw(static_cast<std::size_t>(n), 0.0);
    std::vector<double> qw(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const double w = family.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            bw[static_cast<std::size_t>(j)] += w * bias[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            for (int k = 0; k < n; ++k)
                qw[static_cast<std::size_t>(j) * n + k] += w * q[static_cast<std::size_t>(i)](j, k);
        }
    }
    out.gbar = detail::pinv_quadform_checked(SymMatrix::from_dense(n, qw), bw, opt, "q_bounds.gbar");
    out.ranks.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.ranks[static_cast<std::size_t>(i)] = sym_rank(q[static_cast<std::size_t>(i)], opt.rcond);
    return out;
}

inline QuantumBounds q_bounds(const StateFamily& family, const ScoreOperators& scores,
                              const std::vector<double>& common_bias, const BoundOptions& opt = {},
                              double reg = 0.0) {
    return q_bounds(family, scores,
                    std::vector<std::vector<double>>(static_cast<std::size_t>(family.n()), common_bias), opt, reg);
}

struct CompatReport {
    bool holds = false;
    double tol = 0.0;
    std::vector<std::vector<double>> residuals;  // per (i, j), Frobenius norm outside span{G} + RI
};

// Compatibility condition: Omega_{rho_i} maps span{G_j} into itself plus
// multiples of the identity.  Residuals are Frobenius norms of the component
// orthogonal to that span.
inline CompatReport compat_check(const StateFamily& family, const ScoreOperators& scores, double tol = 1e-8,
                                 double reg = 0.0) {
    require(tol > 0.0, "invalid-argument", "compat_check tolerance must be > 0");
    const int n = scores.n();
    const int nf = family.n();
    const int d = family.dim;

    std::vector<HermMatrix> basis = scores.ops;
    basis.push_back(HermMatrix::identity(d));
    const int nb = static_cast<int>(basis.size());
    std::vector<double> wbuf(static_cast<std::size_t>(nb) * static_cast<std::size_t>(nb));
    for (int u = 0; u < nb; ++u)
        for (int v = 0; v < nb; ++v)
            wbuf[static_cast<std::size_t>(u) * nb + v] =
                trace_product(basis[static_cast<std::size_t>(u)], basis[static_cast<std::size_t>(v)]);
    const SymMatrix gram = SymMatrix::from_dense(nb, wbuf);
    const SymMatrix gram_pinv = pinv(gram);

    CompatReport rep;
    rep.tol = tol;
    rep.residuals.assign(static_cast<std::size_t>(nf), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    bool ok = true;
    for (int i = 0; i < nf; ++i) {
        const detail::OmegaContext ctx(family.states[static_cast<std::size_t>(i)], reg);
        for (int j = 0; j < n; ++j) {
            const HermMatrix y = ctx.apply(scores.ops[static_cast<std::size_t>(j)]);
            std::vector<double> rhs(static_cast<std::size_t>(nb));
            for (int u = 0; u < nb; ++u) rhs[static_cast<std::size_t>(u)] = trace_product(basis[static_cast<std::size_t>(u)], y);
            const std::vector<double> coef = gram_pinv.apply(rhs);
            HermMatrix proj(d);
            for (int u = 0; u < nb; ++u) {
                HermMatrix term = basis[static_cast<std::size_t>(u)];
                term *= coef[static_cast<std::size_t>(u)];
                proj += term;
            }
            const double resid = (y - proj).frob();
            rep.residuals[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = resid;
            if (family.active(i) && resid > tol * std::max(y.frob(), 1e-300)) ok = false;
        }
    }
    rep.holds = ok;
    return rep;
}

// T_{jk} = Tr[G_j G_k]
inline SymMatrix score_gram(const ScoreOperators& scores) {
    const int n = scores.n();
    std::vector<double> buf(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            buf[static_cast<std::size_t>(j) * n + k] =
                trace_product(scores.ops[static_cast<std::size_t>(j)], scores.ops[static_cast<std::size_t>(k)]);
    return SymMatrix::from_dense(n, buf);
}

struct OptimalPovm {
    Povm povm;
    std::vector<double> eigenvalues;  // p_x, one per POVM element (cluster mean)
    HermMatrix m_fg;
    std::vector<double> coeffs;  // T^+ b
};

// Optimal parameter-independent measurement: eigenprojectors of
// M_FG = sum_j (T^+ b)_j G_j.  Requires the compatibility condition and a
// common bias inside Range(T).
inline OptimalPovm optimal_povm(const StateFamily& family, const ScoreOperators& scores,
                                const std::vector<double>& b, const BoundOptions& opt = {},
                                double compat_tol = 1e-8, double reg = 0.0) {
    require(static_cast<int>(b.size()) == scores.n(), "invalid-argument", "bias dimension mismatch");
    const CompatReport compat = compat_check(family, scores, compat_tol, reg);
    require(compat.holds, "incompatible-family",
            "the generalized SLDs leave the score span; no common optimal measurement");
    require(norm2(b) > 0.0, "degenerate-bias", "zero bias admits only the trivial measurement");

    const SymMatrix t = score_gram(scores);
    require(in_range(t, b, opt.range_tol, opt.rcond), "bias-out-of-range",
            "bias vector escapes the range of the score Gram matrix");
    const std::vector<double> coeffs = pinv(t, opt.rcond).apply(b);

    const int d = family.dim;
    HermMatrix m_fg(d);
    for (int j = 0; j < scores.n(); ++j) {
        HermMatrix term = scores.ops[static_cast<std::size_t>(j)];
        term *= coeffs[static_cast<std::size_t>(j)];
        m_fg += term;
    }

    const EigenDecompC e = eig_herm(m_fg);
    const double cluster_tol = 1e-9 * std::max(m_fg.frob(), 1e-300);
    OptimalPovm out;
    out.m_fg = m_fg;
    out.coeffs = coeffs;
    int k = 0;
    while (k < d) {
        int k2 = k + 1;
        while (k2 < d && e.values[static_cast<std::size_t>(k2)] - e.values[static_cast<std::size_t>(k2 - 1)] <= cluster_tol)
            ++k2;
        std::vector<cplx> proj(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), cplx(0.0, 0.0));
        double mean = 0.0;
        for (int l = k; l < k2; ++l) {
            mean += e.values[static_cast<std::size_t>(l)];
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c)
                    proj[static_cast<std::size_t>(r) * d + c] +=
                        e.vectors[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] *
                        std::conj(e.vectors[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)]);
        }
        out.povm.elements.push_back(HermMatrix::from_dense(d, proj));
        out.eigenvalues.push_back(mean / static_cast<double>(k2 - k));
        k = k2;
    }
    out.povm.validate();
    return out;
}

struct InducedModel {
    DiscreteModel model;
    TestFunctions scores;  // g_k(x) = Tr[E_x G_k]
};

// Classical model induced by measuring the family with a POVM.
inline InducedModel induced_model(const StateFamily& family, const Povm& povm, const ScoreOperators& scores,
                                  bool drop_null_outcomes = false) {
    const int n = family.n();
    const int ns = scores.n();
    const int nx = static_cast<int>(povm.elements.size());

    InducedModel out;
    out.model.params = family.params;
    out.model.weights = family.weights;
    std::vector<bool> keep(static_cast<std::size_t>(nx), true);
    std::vector<std::vector<double>> probs(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(nx)));
    std::vector<std::vector<double>> derivs(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(nx)));
    std::vector<std::vector<double>> g(static_cast<std::size_t>(ns), std::vector<double>(static_cast<std::size_t>(nx)));
    for (int x = 0; x < nx; ++x) {
        const HermMatrix& e = povm.elements[static_cast<std::size_t>(x)];
        double pmax = 0.0, dmax = 0.0;
        for (int i = 0; i < n; ++i) {
            probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] =
                trace_product(e, family.states[static_cast<std::size_t>(i)]);
            derivs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] =
                trace_product(e, family.dstates[static_cast<std::size_t>(i)]);
            pmax = std::max(pmax, probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)]);
            dmax = std::max(dmax, std::abs(derivs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)]));
        }
        for (int k = 0; k < ns; ++k)
            g[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] =
                trace_product(e, scores.ops[static_cast<std::size_t>(k)]);
        if (pmax <= 1e-14) {
            if (drop_null_outcomes && dmax <= 1e-12) {
                keep[static_cast<std::size_t>(x)] = false;
            } else {
                fail("zero-probability-outcome",
                     "POVM element " + std::to_string(x) + " has vanishing probability on the family");
            }
        }
    }
    out.model.probs.assign(static_cast<std::size_t>(n), {});
    out.model.derivs.assign(static_cast<std::size_t>(n), {});
    for (int x = 0; x < nx; ++x) {
        if (!keep[static_cast<std::size_t>(x)]) continue;
        out.model.outcomes.push_back("E" + std::to_string(x));
        for (int i = 0; i < n; ++i) {
            out.model.probs[static_cast<std::size_t>(i)].push_back(probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)]);
            out.model.derivs[static_cast<std::size_t>(i)].push_back(derivs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)]);
        }
    }
    out.scores.rows.assign(static_cast<std::size_t>(ns), {});
    for (int k = 0; k < ns; ++k)
        for (int x = 0; x < nx; ++x)
            if (keep[static_cast<std::size_t>(x)])
                out.scores.rows[static_cast<std::size_t>(k)].push_back(g[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)]);
    return out;
}

// Fully global classical level of the induced model at a fixed common bias.
inline double induced_fg_at_bias(const InducedModel& induced, const std::vector<double>& b,
                                 const BoundOptions& opt = {}) {
    const int n = induced.model.n();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = induced.model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const SymMatrix ci = info_matrix(induced.model, induced.scores, i);
        total += w * detail::pinv_quadform_checked(ci, b, opt, "induced_fg[i=" + std::to_string(i) + "]");
    }
    return total;
}

inline double induced_gcr_at_bias(const InducedModel& induced, const std::vector<double>& b,
                                  const BoundOptions& /*opt*/ = {}) {
    const int n = induced.model.n();
    double total = 0.0;
    double bmax = 0.0;
    for (double v : b) bmax = std::max(bmax, std::abs(v));
    for (int i = 0; i < n; ++i) {
        const double w = induced.model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const SymMatrix ci = info_matrix(induced.model, induced.scores, i);
        const double bii = b[static_cast<std::size_t>(i)];
        if (ci(i, i) > 0.0)
            total += w * bii * bii / ci(i, i);
        else
            require(std::abs(bii) <= 1e-12 * (1.0 + bmax), "unbounded-gcr",
                    "induced score direction " + std::to_string(i) + " carries bias but no information");
    }
    return total;
}

inline double induced_gbar_at_bias(const InducedModel& induced, const std::vector<double>& b,
                                   const BoundOptions& opt = {}) {
    const int n = induced.model.n();
    std::vector<double> cw(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const double w = induced.model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const SymMatrix ci = info_matrix(induced.model, induced.scores, i);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                cw[static_cast<std::size_t>(j) * n + k] += w * ci(j, k);
    }
    return detail::pinv_quadform_checked(SymMatrix::from_dense(n, cw), b, opt, "induced_gbar");
}

struct OptimalityReport {
    bool optimal = false;
    double max_commutator_residual = 0.0;  // relative, over (x, i)
    double max_projection_residual = 0.0;  // relative alpha-fit residual over (x, i)
    std::vector<double> scalar_shifts;     // c_i of Omega(G_{A;i}) = M + c_i I
    double induced_fg = 0.0;
    double quantum_fg = 0.0;
};

// Saturation check for a candidate POVM: builds the optimal hierarchy columns
// a_i = (Q^(i))^+ b, the per-point operators L_i = Omega(G_{A;i}), and tests
// (a) commutation of every POVM element with L_i together with the
// rank-one proportionality sqrt(E) sqrt(rho) = alpha sqrt(E) L sqrt(rho), and
// (b) agreement of the induced classical fully global level with the quantum
// one.
inline OptimalityReport verify_quantum_optimality(const StateFamily& family, const ScoreOperators& scores,
                                                  const Povm& povm, const std::vector<double>& b,
                                                  const BoundOptions& opt = {}, double tol = 1e-8,
                                                  double reg = 0.0) {
    const int n = family.n();
    const int d = family.dim;
    povm.validate();

    // identity coefficient basis for the scalar shifts
    std::vector<HermMatrix> basis = scores.ops;
    basis.push_back(HermMatrix::identity(d));
    const int nb = static_cast<int>(basis.size());
    std::vector<double> wbuf(static_cast<std::size_t>(nb) * static_cast<std::size_t>(nb));
    for (int u = 0; u < nb; ++u)
        for (int v = 0; v < nb; ++v)
            wbuf[static_cast<std::size_t>(u) * nb + v] =
                trace_product(basis[static_cast<std::size_t>(u)], basis[static_cast<std::size_t>(v)]);
    const SymMatrix gram_pinv = pinv(SymMatrix::from_dense(nb, wbuf));

    std::vector<std::vector<cplx>> sqrt_e;
    sqrt_e.reserve(povm.elements.size());
    for (const HermMatrix& e : povm.elements) sqrt_e.push_back(detail::herm_sqrt_buffer(e));

    OptimalityReport rep;
    rep.scalar_shifts.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        if (!family.active(i)) continue;
        const SymMatrix qi = q_info_matrix(family, scores, i, reg);
        const std::vector<double> ai = pinv(qi, opt.rcond).apply(b);
        HermMatrix gai(d);
        for (int j = 0; j < n; ++j) {
            HermMatrix term = scores.ops[static_cast<std::size_t>(j)];
            term *= ai[static_cast<std::size_t>(j)];
            gai += term;
        }
        const detail::OmegaContext ctx(family.states[static_cast<std::size_t>(i)], reg);
        const HermMatrix li = ctx.apply(gai);

        std::vector<double> rhs(static_cast<std::size_t>(nb));
        for (int u = 0; u < nb; ++u) rhs[static_cast<std::size_t>(u)] = trace_product(basis[static_cast<std::size_t>(u)], li);
        rep.scalar_shifts[static_cast<std::size_t>(i)] = gram_pinv.apply(rhs)[static_cast<std::size_t>(nb - 1)];

        const std::vector<cplx> li_buf = detail::to_buffer(li);
        const std::vector<cplx> sqrt_rho = detail::herm_sqrt_buffer(family.states[static_cast<std::size_t>(i)]);
        const double li_norm = detail::cfrob(li_buf);
        for (std::size_t x = 0; x < povm.elements.size(); ++x) {
            const std::vector<cplx> e_buf = detail::to_buffer(povm.elements[x]);
            // commutator residual
            const std::vector<cplx> el = detail::cmul(d, e_buf, li_buf);
            const std::vector<cplx> le = detail::cmul(d, li_buf, e_buf);
            std::vector<cplx> comm(el.size());
            for (std::size_t tix = 0; tix < el.size(); ++tix) comm[tix] = el[tix] - le[tix];
            rep.max_commutator_residual =
                std::max(rep.max_commutator_residual, detail::cfrob(comm) / (1.0 + li_norm));

            // per-outcome equality holds when the factored operators are
            // proportional with a real scale, or when the outcome carries no
            // score weight at all; the violation measure is the smaller of
            // the two residuals
            const std::vector<cplx> a0 = detail::cmul(d, sqrt_e[x], sqrt_rho);
            const std::vector<cplx> bmat = detail::cmul(d, detail::cmul(d, sqrt_e[x], li_buf), sqrt_rho);
            const double a0n = detail::cfrob(a0);
            const double bn = detail::cfrob(bmat);

            double fit_resid = a0n / (1.0 + a0n);
            if (bn > 1e-13 * (1.0 + a0n)) {
                cplx inner = 0.0;
                for (std::size_t tix = 0; tix < a0.size(); ++tix) inner += std::conj(bmat[tix]) * a0[tix];
                const double alpha = inner.real() / (bn * bn);
                std::vector<cplx> resid(a0.size());
                for (std::size_t tix = 0; tix < a0.size(); ++tix) resid[tix] = a0[tix] - alpha * bmat[tix];
                fit_resid = detail::cfrob(resid) / (1.0 + a0n);
            }
            cplx scorex = 0.0;
            const std::vector<cplx> elr = detail::cmul(
                d, e_buf, detail::cmul(d, li_buf, detail::to_buffer(family.states[static_cast<std::size_t>(i)])));
            for (int r = 0; r < d; ++r) scorex += elr[static_cast<std::size_t>(r) * d + r];
            const double zero_score_resid = std::abs(scorex) / (1.0 + a0n);
            rep.max_projection_residual =
                std::max(rep.max_projection_residual, std::min(fit_resid, zero_score_resid));
        }
    }

    const InducedModel induced = induced_model(family, povm, scores);
    rep.induced_fg = induced_fg_at_bias(induced, b, opt);
    rep.quantum_fg = q_bounds(family, scores, b, opt, reg).fg;
    const bool values_match = std::abs(rep.induced_fg - rep.quantum_fg) <= 1e-8 * std::max(1.0, rep.quantum_fg);
    rep.optimal = values_match && rep.max_commutator_residual <= tol && rep.max_projection_residual <= tol;
    return rep;
}

}  // namespace gsb
