#pragma once

// i.i.d. repetition models: brute-force product extension for small m, the
// closed-form m-shot two-outcome information matrix, and the many-repetition
// convergence diagnostic (fully global vs global Cramer-Rao ratio).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gsb/classical.hpp"
#include "gsb/error.hpp"
#include "gsb/estimators.hpp"
#include "gsb/linalg.hpp"
#include "gsb/model.hpp"

namespace gsb {

inline constexpr long kProductEnumerationCap = 1L << 20;
inline constexpr long kRepetitionMCap = 10000;

// Joint model of m independent repetitions; outcomes are m-tuples.
inline DiscreteModel product_model(const DiscreteModel& base, long m) {
    require(m >= 1, "invalid-argument", "product_model needs m >= 1");
    if (m == 1) return base;
    const int nx = base.num_outcomes();
    const int n = base.n();
    double joint = 1.0;
    for (long r = 0; r < m; ++r) {
        joint *= static_cast<double>(nx);
        require(joint <= static_cast<double>(kProductEnumerationCap), "enumeration-cap",
                "joint outcome count " + std::to_string(nx) + "^" + std::to_string(m) + " exceeds 2^20");
    }
    const long total = static_cast<long>(joint + 0.5);

    DiscreteModel out;
    out.params = base.params;
    out.weights = base.weights;
    out.outcomes.resize(static_cast<std::size_t>(total));
    out.probs.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(total)));
    out.derivs.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(total)));

    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    for (long t = 0; t < total; ++t) {
        std::string label = base.outcomes[static_cast<std::size_t>(idx[0])];
        for (long r = 1; r < m; ++r) {
            label += '|';
            label += base.outcomes[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])];
        }
        out.outcomes[static_cast<std::size_t>(t)] = std::move(label);
        for (int i = 0; i < n; ++i) {
            double p = 1.0, score = 0.0;  // product rule: dp = p * sum_l d_l/p_l
            for (long r = 0; r < m; ++r) {
                const std::size_t x = static_cast<std::size_t>(idx[static_cast<std::size_t>(r)]);
                const double px = base.probs[static_cast<std::size_t>(i)][x];
                p *= px;
                score += base.derivs[static_cast<std::size_t>(i)][x] / px;
            }
            out.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = p;
            out.derivs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = p * score;
        }
        for (long r = m - 1; r >= 0; --r) {
            if (++idx[static_cast<std::size_t>(r)] < nx) break;
            idx[static_cast<std::size_t>(r)] = 0;
        }
    }
    return out;
}

namespace detail {

struct LogSigned {
    double log_abs = -std::numeric_limits<double>::infinity();
    double sign = 0.0;
};

// log-domain h(m, x) = (1+x)^{m-2} (1+mx); 1+x > 0 always holds for the
// displacement arguments this is called with.
inline LogSigned log_h(long m, double x) {
    LogSigned out;
    const double onemx = 1.0 + static_cast<double>(m) * x;
    if (onemx == 0.0) return out;
    out.sign = onemx > 0.0 ? 1.0 : -1.0;
    out.log_abs = static_cast<double>(m - 2) * std::log1p(x) + std::log(std::abs(onemx));
    return out;
}

}  // namespace detail

// h(m, x) = (1+x)^{m-2} (1+mx), evaluated in the log domain.
inline double cim_h(long m, double x) {
    const detail::LogSigned l = detail::log_h(m, x);
    return l.sign * std::exp(l.log_abs);
}

// Closed-form m-shot information matrix of a two-outcome model:
// [C^(i)(m)]_{jk} = m h(m, Delta_{i;jk}) f'_j f'_k / (1 - f_i^2).
inline SymMatrix binary_cim(const BinaryModel& model, int i, long m) {
    require(m >= 1, "invalid-argument", "binary_cim needs m >= 1");
    const int n = model.n();
    require(i >= 0 && i < n, "invalid-argument", "binary_cim index out of range");
    const double fi = model.f[static_cast<std::size_t>(i)];
    const double denom = 1.0 - fi * fi;
    std::vector<double> buf(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k <= j; ++k) {
            const double delta =
                (model.f[static_cast<std::size_t>(j)] - fi) * (model.f[static_cast<std::size_t>(k)] - fi) / denom;
            const double v = static_cast<double>(m) * cim_h(m, delta) *
                             model.fprime[static_cast<std::size_t>(j)] * model.fprime[static_cast<std::size_t>(k)] /
                             denom;
            buf[static_cast<std::size_t>(j) * n + k] = v;
            buf[static_cast<std::size_t>(k) * n + j] = v;
        }
    return SymMatrix::from_dense(n, buf);
}

struct RepetitionDiag {
    long m = 0;
    double bound_fg = 0.0;
    double bound_gcr = 0.0;
    double bound_gbar = 0.0;
    double ratio_fg_gcr = 0.0;
    std::vector<std::vector<double>> lambda;  // Lambda_{jk}, reference point = last grid index
    std::vector<std::vector<double>> rmat;    // R_{jk}, same reference
};

namespace detail {

// Grid points with coinciding f describe identical distributions; the m-shot
// bounds are evaluated on distinct-f classes so that duplicate directions do
// not masquerade as numerically independent.  Points with f' == 0 carry no
// score and are excluded (their 0/0 hierarchy terms resolve to 0).
struct BinaryClasses {
    std::vector<std::vector<int>> members;
    std::vector<double> f_rep;
};

inline BinaryClasses collapse_binary_classes(const BinaryModel& model) {
    const int n = model.n();
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return model.f[static_cast<std::size_t>(a)] < model.f[static_cast<std::size_t>(b)];
    });
    BinaryClasses out;
    for (int idx : order) {
        if (model.fprime[static_cast<std::size_t>(idx)] == 0.0) continue;
        const double fv = model.f[static_cast<std::size_t>(idx)];
        if (!out.members.empty() &&
            std::abs(fv - model.f[static_cast<std::size_t>(out.members.back().front())]) <=
                1e-12 * (1.0 + std::abs(fv))) {
            out.members.back().push_back(idx);
        } else {
            out.members.push_back({idx});
        }
    }
    out.f_rep.resize(out.members.size());
    for (std::size_t c = 0; c < out.members.size(); ++c) {
        double s = 0.0;
        for (int idx : out.members[c]) s += model.f[static_cast<std::size_t>(idx)];
        out.f_rep[c] = s / static_cast<double>(out.members[c].size());
    }
    return out;
}

// u^T Htilde^+ u where Htilde_{ab} = m h(m, Delta_{i;ab}) / (1 - f_i^2) over
// the collapsed classes.  Entries are assembled in the log domain and a
// common scale is factored out, so the result stays finite up to the module's
// m cap.  The tiny rcond relies on Jacobi's relative accuracy for these
// graded positive matrices.  Deep in the concentration regime the anchored
// eigenvalue sinks below any usable cutoff; the anchored-class Rayleigh value
// (the diagonal term of the hierarchy) is a valid lower bound of the same
// quadratic form and takes over there, so the result never drops below the
// Cramer-Rao term.
inline double collapsed_fg_term(const BinaryClasses& cls, double fi, long m, const std::vector<double>& u) {
    const int c = static_cast<int>(cls.members.size());
    if (c == 0) return 0.0;
    const double denom = 1.0 - fi * fi;
    std::vector<double> log_abs(static_cast<std::size_t>(c) * static_cast<std::size_t>(c));
    std::vector<double> sign(static_cast<std::size_t>(c) * static_cast<std::size_t>(c));
    double lmax = -std::numeric_limits<double>::infinity();
    const double logm = std::log(static_cast<double>(m)) - std::log(denom);
    for (int a = 0; a < c; ++a)
        for (int b = 0; b <= a; ++b) {
            const double delta =
                (cls.f_rep[static_cast<std::size_t>(a)] - fi) * (cls.f_rep[static_cast<std::size_t>(b)] - fi) / denom;
            const LogSigned l = log_h(m, delta);
            const double la = l.log_abs + logm;
            log_abs[static_cast<std::size_t>(a) * c + b] = la;
            log_abs[static_cast<std::size_t>(b) * c + a] = la;
            sign[static_cast<std::size_t>(a) * c + b] = l.sign;
            sign[static_cast<std::size_t>(b) * c + a] = l.sign;
            if (l.sign != 0.0) lmax = std::max(lmax, la);
        }
    std::vector<double> buf(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0.0);
    for (std::size_t t = 0; t < buf.size(); ++t)
        buf[t] = sign[t] == 0.0 ? 0.0 : sign[t] * std::exp(log_abs[t] - lmax);
    const SymMatrix h = SymMatrix::from_dense(c, buf);
    const EigenDecomp e = eig_sym(h);
    double emax = 0.0;
    for (double l : e.values) emax = std::max(emax, std::abs(l));
    const double cut = 1e-120 * emax;
    double val = 0.0;
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        if (std::abs(e.values[k]) <= cut) continue;
        const double proj = dot(e.vectors[k], u);
        val += proj * proj / e.values[k];
    }
    val *= std::exp(-lmax);

    // anchored-class floor: quotient along the class whose f matches f_i
    for (int a = 0; a < c; ++a) {
        if (std::abs(cls.f_rep[static_cast<std::size_t>(a)] - fi) <= 1e-12 * (1.0 + std::abs(fi))) {
            const double floor_val =
                u[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(a)] * denom / static_cast<double>(m);
            val = std::max(val, floor_val);
            break;
        }
    }
    return val;
}

// Same quadratic form against the weighted sum of the per-point matrices.
inline double collapsed_gbar(const BinaryClasses& cls, const BinaryModel& model, long m,
                             const std::vector<double>& u) {
    const int c = static_cast<int>(cls.members.size());
    if (c == 0) return 0.0;
    const int n = model.n();
    // factor out the largest per-anchor scale before summing
    double lmax = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> la(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> sg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (model.weights[static_cast<std::size_t>(i)] == 0.0) continue;
        const double fi = model.f[static_cast<std::size_t>(i)];
        const double denom = 1.0 - fi * fi;
        const double logw = std::log(model.weights[static_cast<std::size_t>(i)]) +
                            std::log(static_cast<double>(m)) - std::log(denom);
        la[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(c) * c, 0.0);
        sg[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(c) * c, 0.0);
        for (int a = 0; a < c; ++a)
            for (int b = 0; b < c; ++b) {
                const double delta = (cls.f_rep[static_cast<std::size_t>(a)] - fi) *
                                     (cls.f_rep[static_cast<std::size_t>(b)] - fi) / denom;
                const LogSigned l = log_h(m, delta);
                la[static_cast<std::size_t>(i)][static_cast<std::size_t>(a) * c + b] = l.log_abs + logw;
                sg[static_cast<std::size_t>(i)][static_cast<std::size_t>(a) * c + b] = l.sign;
                if (l.sign != 0.0) lmax = std::max(lmax, l.log_abs + logw);
            }
    }
    std::vector<double> buf(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0.0);
    for (int i = 0; i < n; ++i) {
        if (la[static_cast<std::size_t>(i)].empty()) continue;
        for (std::size_t t = 0; t < buf.size(); ++t) {
            const double s = sg[static_cast<std::size_t>(i)][t];
            if (s != 0.0) buf[t] += s * std::exp(la[static_cast<std::size_t>(i)][t] - lmax);
        }
    }
    const SymMatrix hw = SymMatrix::from_dense(c, buf);
    const EigenDecomp e = eig_sym(hw);
    double emax = 0.0;
    for (double l : e.values) emax = std::max(emax, std::abs(l));
    const double cut = 1e-120 * emax;
    double val = 0.0;
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        if (std::abs(e.values[k]) <= cut) continue;
        const double proj = dot(e.vectors[k], u);
        val += proj * proj / e.values[k];
    }
    return val * std::exp(-lmax);
}

inline std::vector<std::vector<double>> lambda_matrix(const DiscreteModel& base) {
    const int n = base.n();
    const int nx = base.num_outcomes();
    const auto& pref = base.probs[static_cast<std::size_t>(n - 1)];
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int x = 0; x < nx; ++x)
                s += base.probs[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)] *
                     base.probs[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] /
                     pref[static_cast<std::size_t>(x)];
            out[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = s;
        }
    return out;
}

inline std::vector<std::vector<double>> rmatrix(const DiscreteModel& base) {
    const int n = base.n();
    const int nx = base.num_outcomes();
    const auto& pref = base.probs[static_cast<std::size_t>(n - 1)];
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int x = 0; x < nx; ++x)
                s += base.derivs[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)] *
                     base.probs[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] /
                     pref[static_cast<std::size_t>(x)];
            out[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = s;
        }
    return out;
}

}  // namespace detail

// Observation-1 diagnostic for two-outcome models via the closed form.  Uses
// the m-shot grid MLE (the figure's estimator) for the common bias vector.
inline std::vector<RepetitionDiag> obs1_diag(const BinaryModel& model, const std::vector<long>& m_list) {
    model.validate();
    const int n = model.n();
    const detail::BinaryClasses cls = detail::collapse_binary_classes(model);
    const DiscreteModel base = model.to_discrete();
    const auto lambda = detail::lambda_matrix(base);
    const auto rmat = detail::rmatrix(base);

    std::vector<RepetitionDiag> out;
    out.reserve(m_list.size());
    for (long m : m_list) {
        require(m >= 1 && m <= kRepetitionMCap, "invalid-argument",
                "repetition count must lie in [1, " + std::to_string(kRepetitionMCap) + "]");
        const std::vector<int> assign = binary_mle_assignment(model, m);
        const std::vector<double> t = binary_mle_slopes(model, m, assign);

        // class-averaged u with u_j = T_j / 2
        std::vector<double> u(cls.members.size(), 0.0);
        for (std::size_t c = 0; c < cls.members.size(); ++c) {
            double s = 0.0;
            for (int idx : cls.members[c]) s += t[static_cast<std::size_t>(idx)];
            u[c] = 0.5 * s / static_cast<double>(cls.members[c].size());
        }

        RepetitionDiag diag;
        diag.m = m;
        diag.lambda = lambda;
        diag.rmat = rmat;
        double fg = 0.0, gcr = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = model.weights[static_cast<std::size_t>(i)];
            if (w == 0.0) continue;
            const double fi = model.f[static_cast<std::size_t>(i)];
            fg += w * detail::collapsed_fg_term(cls, fi, m, u);
            if (model.fprime[static_cast<std::size_t>(i)] != 0.0)
                gcr += w * t[static_cast<std::size_t>(i)] * t[static_cast<std::size_t>(i)] * (1.0 - fi * fi) /
                       (4.0 * static_cast<double>(m));
        }
        diag.bound_fg = fg;
        diag.bound_gcr = gcr;
        diag.bound_gbar = detail::collapsed_gbar(cls, model, m, u);
        diag.ratio_fg_gcr = gcr > 0.0 ? fg / gcr : 1.0;
        out.push_back(std::move(diag));
    }
    return out;
}

// Generic-model variant: brute-force product extension (capped), grid MLE of
// the joint model for the bias, classical bound machinery.
inline std::vector<RepetitionDiag> obs1_diag(const DiscreteModel& model, const std::vector<long>& m_list) {
    model.validate();
    const auto lambda = detail::lambda_matrix(model);
    const auto rmat = detail::rmatrix(model);

    std::vector<RepetitionDiag> out;
    out.reserve(m_list.size());
    for (long m : m_list) {
        const DiscreteModel joint = product_model(model, m);
        const Estimator est = mle(joint).estimator;
        const TestFunctions g = local_scores(joint);
        RepetitionDiag diag;
        diag.m = m;
        diag.lambda = lambda;
        diag.rmat = rmat;
        diag.bound_fg = bound_fg(joint, g, est);
        diag.bound_gcr = bound_gcr(joint, g, est);
        diag.bound_gbar = bound_gbar(joint, g, est);
        diag.ratio_fg_gcr = diag.bound_gcr > 0.0 ? diag.bound_fg / diag.bound_gcr : 1.0;
        out.push_back(std::move(diag));
    }
    return out;
}

}  // namespace gsb
