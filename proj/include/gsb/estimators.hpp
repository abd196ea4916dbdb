#pragma once

// Estimator construction and variance evaluation: grid MLE, exact m-shot
// binary MLE statistics through the sufficient statistic m_+, and Monte Carlo
// variance for generic models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gsb/error.hpp"
#include "gsb/model.hpp"

namespace gsb {

struct MleEstimator {
    std::vector<int> indices;  // outcome -> argmax parameter index (lowest-index ties)
    Estimator estimator;       // outcome -> theta value
};

inline MleEstimator mle(const DiscreteModel& model) {
    const int n = model.n();
    const int nx = model.num_outcomes();
    MleEstimator out;
    out.indices.resize(static_cast<std::size_t>(nx));
    out.estimator.values.resize(static_cast<std::size_t>(nx));
    for (int x = 0; x < nx; ++x) {
        int best = 0;
        double best_p = model.probs[0][static_cast<std::size_t>(x)];
        for (int i = 1; i < n; ++i) {
            const double p = model.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)];
            if (p > best_p) {
                best_p = p;
                best = i;
            }
        }
        out.indices[static_cast<std::size_t>(x)] = best;
        out.estimator.values[static_cast<std::size_t>(x)] = model.params[static_cast<std::size_t>(best)];
    }
    return out;
}

enum class VarianceMethod { Exact, Binomial, MonteCarlo };

struct VarianceEstimate {
    double value = 0.0;
    VarianceMethod method = VarianceMethod::Exact;
    double stderr_val = 0.0;   // Monte Carlo only
    std::uint64_t seed = 0;    // Monte Carlo only
    std::string rng;           // generator identifier, for cross-run reproducibility
};

namespace detail {

// log C(m, k)
inline double log_binom(long m, long k) {
    return std::lgamma(static_cast<double>(m) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(m - k) + 1.0);
}

inline double binom_pmf(long m, long k, double q) {
    return std::exp(log_binom(m, k) + static_cast<double>(k) * std::log(q) +
                    static_cast<double>(m - k) * std::log1p(-q));
}

struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// m_+ -> lowest-index argmax of the m-shot binomial likelihood over the grid.
inline std::vector<int> binary_mle_assignment(const BinaryModel& model, long m) {
    const int n = model.n();
    std::vector<int> assign(static_cast<std::size_t>(m) + 1);
    std::vector<double> lq(static_cast<std::size_t>(n)), l1q(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double q = 0.5 * (1.0 + model.f[static_cast<std::size_t>(i)]);
        lq[static_cast<std::size_t>(i)] = std::log(q);
        l1q[static_cast<std::size_t>(i)] = std::log1p(-q);
    }
    for (long k = 0; k <= m; ++k) {
        int best = 0;
        double best_ll = static_cast<double>(k) * lq[0] + static_cast<double>(m - k) * l1q[0];
        for (int i = 1; i < n; ++i) {
            const double ll =
                static_cast<double>(k) * lq[static_cast<std::size_t>(i)] + static_cast<double>(m - k) * l1q[static_cast<std::size_t>(i)];
            if (ll > best_ll) {
                best_ll = ll;
                best = i;
            }
        }
        assign[static_cast<std::size_t>(k)] = best;
    }
    return assign;
}

// T_j = sum_{m_+} thetahat(m_+) d pmf / d q at q_j.  The local-score bias of
// the m-shot model is b_j = f'_j T_j / 2; T_j itself stays well-scaled even
// where f'_j underflows, so callers combine the two factors as late as
// possible.
inline std::vector<double> binary_mle_slopes(const BinaryModel& model, long m,
                                             const std::vector<int>& assignment) {
    const int n = model.n();
    std::vector<double> t(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        const double q = 0.5 * (1.0 + model.f[static_cast<std::size_t>(j)]);
        detail::KahanSum acc;
        for (long k = 0; k <= m; ++k) {
            const double pmf = detail::binom_pmf(m, k, q);
            const double dpq = pmf * (static_cast<double>(k) - static_cast<double>(m) * q) / (q * (1.0 - q));
            acc.add(model.params[static_cast<std::size_t>(assignment[static_cast<std::size_t>(k)])] * dpq);
        }
        t[static_cast<std::size_t>(j)] = acc.s;
    }
    return t;
}

// Exact weighted variance of the m-shot grid MLE via m_+ ~ Binomial(m, q_i).
inline VarianceEstimate binary_mle_variance(const BinaryModel& model, long m) {
    require(m >= 1, "invalid-argument", "binary_mle_variance needs m >= 1");
    model.validate();
    const int n = model.n();
    const std::vector<int> assign = binary_mle_assignment(model, m);
    detail::KahanSum total;
    for (int i = 0; i < n; ++i) {
        const double w = model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const double q = 0.5 * (1.0 + model.f[static_cast<std::size_t>(i)]);
        detail::KahanSum e1, e2;
        for (long k = 0; k <= m; ++k) {
            const double pmf = detail::binom_pmf(m, k, q);
            const double th = model.params[static_cast<std::size_t>(assign[static_cast<std::size_t>(k)])];
            e1.add(pmf * th);
            e2.add(pmf * th * th);
        }
        total.add(w * (e2.s - e1.s * e1.s));
    }
    VarianceEstimate out;
    out.value = total.s;
    out.method = VarianceMethod::Binomial;
    return out;
}

// Monte Carlo weighted variance.  Sampling uses mt19937_64 streams derived
// per parameter point with splitmix64, uniforms mapped as (x >> 11) * 2^-53,
// so runs are reproducible for a given seed.
inline VarianceEstimate mc_variance(const DiscreteModel& model, const Estimator& est, long shots,
                                    std::uint64_t seed) {
    require(shots >= 100, "invalid-argument", "mc_variance needs shots >= 100");
    const int n = model.n();
    const int nx = model.num_outcomes();
    require(static_cast<int>(est.values.size()) == nx, "invalid-argument",
            "estimator is not defined on every outcome");

    double value = 0.0;
    double var_of_value = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        std::vector<double> cdf(static_cast<std::size_t>(nx));
        double acc = 0.0;
        for (int x = 0; x < nx; ++x) {
            acc += model.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)];
            cdf[static_cast<std::size_t>(x)] = acc;
        }
        cdf.back() = 1.0;

        std::mt19937_64 gen(detail::splitmix64(seed ^ (0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(i + 1))));
        detail::KahanSum s1, s2, s4;
        std::vector<double> sample(static_cast<std::size_t>(shots));
        for (long t = 0; t < shots; ++t) {
            const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const std::size_t x = static_cast<std::size_t>(it - cdf.begin());
            const double v = est.values[std::min(x, static_cast<std::size_t>(nx - 1))];
            sample[static_cast<std::size_t>(t)] = v;
            s1.add(v);
        }
        const double mean = s1.s / static_cast<double>(shots);
        for (long t = 0; t < shots; ++t) {
            const double d = sample[static_cast<std::size_t>(t)] - mean;
            s2.add(d * d);
            s4.add(d * d * d * d);
        }
        const double ns = static_cast<double>(shots);
        const double var = s2.s / (ns - 1.0);
        const double m4 = s4.s / ns;
        const double var_var = std::max(0.0, (m4 - var * var * (ns - 3.0) / (ns - 1.0)) / ns);
        value += w * var;
        var_of_value += w * w * var_var;
    }
    VarianceEstimate out;
    out.value = value;
    out.method = VarianceMethod::MonteCarlo;
    out.stderr_val = std::sqrt(var_of_value);
    out.seed = seed;
    out.rng = "mt19937_64/splitmix64-per-point";
    return out;
}

}  // namespace gsb
