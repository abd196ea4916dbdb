#pragma once

// Independent oracles.  These recompute the quantities under test from the
// raw model tables (plain sums, gradient ascent, random sampling) and never
// touch the pseudoinverse closed forms they are used to check.

#include <cmath>
#include <vector>

#include "gsb/gsb.hpp"
#include "support/random_gen.hpp"

namespace oracle {

// score-bound quotient B_C(A) evaluated directly from the tables
inline double quotient(const gsb::DiscreteModel& model, const gsb::TestFunctions& g,
                       const gsb::Estimator& est, const std::vector<std::vector<double>>& acols) {
    const int n = model.n();
    const int nx = model.num_outcomes();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = model.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const double mean = model.expectation(est.values, i);
        double ab = 0.0;
        for (int x = 0; x < nx; ++x) {
            double ag = 0.0;
            for (int j = 0; j < n; ++j)
                ag += acols[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                      g.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)];
            ab += ag * (est.values[static_cast<std::size_t>(x)] - mean);
            den += w * ag * ag / model.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)];
        }
        num += w * ab;
    }
    if (den <= 0.0) return 0.0;
    return num * num / den;
}

// Brute-force fully-global oracle: random-restart projected gradient ascent
// over the hierarchy matrix.
inline double fg_ascent(const gsb::DiscreteModel& model, const gsb::TestFunctions& g,
                        const gsb::Estimator& est, testgen::Rng& rng, int restarts = 500,
                        int steps = 200) {
    const int n = model.n();
    const int nx = model.num_outcomes();

    // cache tables used by the gradient
    std::vector<std::vector<double>> bvec(static_cast<std::size_t>(n));
    std::vector<gsb::SymMatrix> cmat;
    for (int i = 0; i < n; ++i) {
        const double mean = model.expectation(est.values, i);
        std::vector<double> b(static_cast<std::size_t>(n), 0.0);
        std::vector<double> cb(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
        for (int x = 0; x < nx; ++x) {
            const double p = model.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)];
            const double fl = est.values[static_cast<std::size_t>(x)] - mean;
            for (int j = 0; j < n; ++j) {
                const double gj = g.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)];
                b[static_cast<std::size_t>(j)] += gj * fl;
                for (int k = 0; k < n; ++k)
                    cb[static_cast<std::size_t>(j) * n + k] +=
                        gj * g.rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] / p;
            }
        }
        bvec[static_cast<std::size_t>(i)] = b;
        cmat.push_back(gsb::SymMatrix::from_dense(n, cb));
    }

    double cscale = 0.0;
    for (int i = 0; i < n; ++i)
        cscale += model.weights[static_cast<std::size_t>(i)] * cmat[static_cast<std::size_t>(i)].frob();

    // quotients with a denominator at roundoff scale are meaningless; the
    // floor keeps the ascent off the numerical null cone
    auto value = [&](const std::vector<std::vector<double>>& acols) {
        double num = 0.0, den = 0.0, anorm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = model.weights[static_cast<std::size_t>(i)];
            anorm2 += gsb::dot(acols[static_cast<std::size_t>(i)], acols[static_cast<std::size_t>(i)]);
            if (w == 0.0) continue;
            num += w * gsb::dot(acols[static_cast<std::size_t>(i)], bvec[static_cast<std::size_t>(i)]);
            den += w * gsb::dot(acols[static_cast<std::size_t>(i)],
                                cmat[static_cast<std::size_t>(i)].apply(acols[static_cast<std::size_t>(i)]));
        }
        if (den <= 1e-10 * cscale * anorm2) return 0.0;
        return num * num / den;
    };

    auto normalize = [&](std::vector<std::vector<double>>& acols) {
        double nrm = 0.0;
        for (const auto& col : acols)
            for (double x : col) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm > 0.0)
            for (auto& col : acols)
                for (double& x : col) x /= nrm;
    };

    double best = 0.0;
    for (int r = 0; r < restarts; ++r) {
        std::vector<std::vector<double>> acols(static_cast<std::size_t>(n),
                                               std::vector<double>(static_cast<std::size_t>(n)));
        if (r == 0) {
            // informative seed: columns along the bias vectors
            for (int i = 0; i < n; ++i) acols[static_cast<std::size_t>(i)] = bvec[static_cast<std::size_t>(i)];
        } else {
            for (auto& col : acols)
                for (double& x : col) x = testgen::gauss(rng);
        }
        normalize(acols);
        double cur = value(acols);
        double step = 0.5;
        for (int s = 0; s < steps; ++s) {
            // gradient of (num^2/den) wrt each column
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n; ++i) {
                const double w = model.weights[static_cast<std::size_t>(i)];
                if (w == 0.0) continue;
                num += w * gsb::dot(acols[static_cast<std::size_t>(i)], bvec[static_cast<std::size_t>(i)]);
                den += w * gsb::dot(acols[static_cast<std::size_t>(i)],
                                    cmat[static_cast<std::size_t>(i)].apply(acols[static_cast<std::size_t>(i)]));
            }
            if (den <= 1e-300) break;
            std::vector<std::vector<double>> trial = acols;
            double gnorm = 0.0;
            for (int i = 0; i < n; ++i) {
                const double w = model.weights[static_cast<std::size_t>(i)];
                if (w == 0.0) continue;
                const std::vector<double> ca = cmat[static_cast<std::size_t>(i)].apply(acols[static_cast<std::size_t>(i)]);
                for (int j = 0; j < n; ++j) {
                    const double grad =
                        2.0 * w * num / den *
                        (bvec[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                         num / den * ca[static_cast<std::size_t>(j)]);
                    trial[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += step * grad;
                    gnorm += grad * grad;
                }
            }
            const double tv = value(trial);
            if (tv > cur) {
                acols = trial;
                normalize(acols);
                cur = value(acols);
                step *= 1.2;
            } else {
                step *= 0.5;
                if (step < 1e-14 || gnorm < 1e-28) break;
            }
        }
        best = std::max(best, cur);
    }
    return best;
}

// Rayleigh quotient oracle: best of random samples plus normalized local
// ascent seeded at mu and at the sampling winner.
inline double rayleigh_ascent(const std::vector<double>& mu, const gsb::SymMatrix& m, testgen::Rng& rng,
                              int samples = 10000, int restarts = 50, int steps = 400) {
    const int n = m.dim();
    const double mfrob = m.frob();
    auto value = [&](const std::vector<double>& x) {
        const double den = gsb::dot(x, m.apply(x));
        if (den <= 1e-10 * mfrob * gsb::dot(x, x)) return 0.0;
        const double num = gsb::dot(mu, x);
        return num * num / den;
    };
    auto normalize = [&](std::vector<double>& x) {
        const double nrm = gsb::norm2(x);
        if (nrm > 0.0)
            for (double& v : x) v /= nrm;
    };

    double best = 0.0;
    std::vector<double> bestx = mu;
    normalize(bestx);
    best = value(bestx);
    for (int s = 0; s < samples; ++s) {
        std::vector<double> x(static_cast<std::size_t>(n));
        for (double& v : x) v = testgen::gauss(rng);
        const double val = value(x);
        if (val > best) {
            best = val;
            normalize(x);
            bestx = x;
        }
    }
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> x = bestx;
        if (r > 0)
            for (double& v : x) v += 0.3 * testgen::gauss(rng);
        normalize(x);
        double cur = value(x);
        double step = 0.5;
        int rejects = 0;
        for (int s = 0; s < steps; ++s) {
            const double den = gsb::dot(x, m.apply(x));
            if (den <= 1e-300) break;
            const double num = gsb::dot(mu, x);
            std::vector<double> trial = x;
            const std::vector<double> mx = m.apply(x);
            for (int j = 0; j < n; ++j) {
                const double grad = 2.0 * num / den * (mu[static_cast<std::size_t>(j)] - num / den * mx[static_cast<std::size_t>(j)]);
                trial[static_cast<std::size_t>(j)] += step * grad;
            }
            normalize(trial);
            const double tv = value(trial);
            if (tv > cur) {
                x = trial;
                cur = tv;
                step *= 1.3;
                rejects = 0;
            } else {
                step *= 0.5;
                if (++rejects > 60 || step < 1e-16) break;
            }
        }
        best = std::max(best, cur);
    }
    return best;
}

}  // namespace oracle
