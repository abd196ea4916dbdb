#pragma once

// Discrete statistical models over a finite parameter grid, plus the small
// data types the bound machinery consumes (test functions, hierarchy
// matrices, estimators, two-outcome models).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gsb/error.hpp"
#include "gsb/linalg.hpp"

namespace gsb {

struct DiscreteModel {
    std::vector<std::string> outcomes;         // ordered outcome labels
    std::vector<double> params;                // strictly increasing grid
    std::vector<std::vector<double>> probs;    // probs[i][x] = p(x | theta_i)
    std::vector<std::vector<double>> derivs;   // derivs[i][x] = d/dtheta p(x | theta_i)
    std::vector<double> weights;               // w_i >= 0, sums to 1

    int n() const { return static_cast<int>(params.size()); }
    int num_outcomes() const { return static_cast<int>(outcomes.size()); }
    bool active(int i) const { return weights[static_cast<std::size_t>(i)] > 0.0; }

    double expectation(const std::vector<double>& estimator_values, int i) const {
        double s = 0.0;
        const auto& p = probs[static_cast<std::size_t>(i)];
        for (std::size_t x = 0; x < p.size(); ++x) s += p[x] * estimator_values[x];
        return s;
    }

    void validate() const {
        const std::size_t nn = params.size();
        const std::size_t nx = outcomes.size();
        require(nn >= 1, "invalid-model", "parameter grid is empty");
        require(nx >= 1, "invalid-model", "outcome set is empty");
        require(probs.size() == nn, "invalid-model", "probs must have one row per parameter");
        require(derivs.size() == nn, "invalid-model", "derivs must have one row per parameter");
        require(weights.size() == nn, "invalid-model", "weights must have one entry per parameter");
        for (std::size_t i = 1; i < nn; ++i)
            require(params[i] > params[i - 1], "invalid-model",
                    "params must be strictly increasing (row " + std::to_string(i) + ")");
        double wsum = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            require(weights[i] >= 0.0, "invalid-model", "negative weight at row " + std::to_string(i));
            wsum += weights[i];
        }
        require(std::abs(wsum - 1.0) <= 1e-12, "invalid-model", "weights must sum to 1");
        for (std::size_t i = 0; i < nn; ++i) {
            require(probs[i].size() == nx, "invalid-model", "probs row " + std::to_string(i) + " has wrong length");
            require(derivs[i].size() == nx, "invalid-model", "derivs row " + std::to_string(i) + " has wrong length");
            double psum = 0.0, dsum = 0.0;
            for (std::size_t x = 0; x < nx; ++x) {
                require(probs[i][x] > 0.0, "invalid-model",
                        "probability row " + std::to_string(i) + " outcome " + std::to_string(x) +
                            " is not strictly positive");
                psum += probs[i][x];
                dsum += derivs[i][x];
            }
            require(std::abs(psum - 1.0) <= 1e-12, "invalid-model",
                    "probability row " + std::to_string(i) + " sums to " + std::to_string(psum));
            require(std::abs(dsum) <= 1e-10, "invalid-model",
                    "derivative row " + std::to_string(i) + " does not sum to 0");
        }
    }
};

struct TestFunctions {
    std::vector<std::vector<double>> rows;  // rows[j][x] = g_j(x), one row per parameter

    int n() const { return static_cast<int>(rows.size()); }
};

enum class HierarchyShape { Diagonal, ColumnConstant, General };

struct HierarchyMatrix {
    int n = 0;
    std::vector<double> entries;  // row-major n*n, entries[j*n+i] = A_{ji}
    HierarchyShape shape_tag = HierarchyShape::General;

    double operator()(int j, int i) const {
        return entries[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
    }

    std::vector<double> column(int i) const {
        std::vector<double> a(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(j)] = (*this)(j, i);
        return a;
    }

    double frob() const {
        double s = 0.0;
        for (double x : entries) s += x * x;
        return std::sqrt(s);
    }

    static HierarchyMatrix diagonal(const std::vector<double>& d) {
        HierarchyMatrix a;
        a.n = static_cast<int>(d.size());
        a.entries.assign(static_cast<std::size_t>(a.n) * a.n, 0.0);
        for (int j = 0; j < a.n; ++j)
            a.entries[static_cast<std::size_t>(j) * a.n + j] = d[static_cast<std::size_t>(j)];
        a.shape_tag = HierarchyShape::Diagonal;
        return a;
    }

    static HierarchyMatrix column_constant(const std::vector<double>& col) {
        HierarchyMatrix a;
        a.n = static_cast<int>(col.size());
        a.entries.assign(static_cast<std::size_t>(a.n) * a.n, 0.0);
        for (int j = 0; j < a.n; ++j)
            for (int i = 0; i < a.n; ++i)
                a.entries[static_cast<std::size_t>(j) * a.n + i] = col[static_cast<std::size_t>(j)];
        a.shape_tag = HierarchyShape::ColumnConstant;
        return a;
    }

    static HierarchyMatrix general(int n, std::vector<double> entries) {
        require(entries.size() == static_cast<std::size_t>(n) * static_cast<std::size_t>(n), "invalid-argument",
                "HierarchyMatrix entry count mismatch");
        HierarchyMatrix a;
        a.n = n;
        a.entries = std::move(entries);
        a.shape_tag = HierarchyShape::General;
        return a;
    }

    bool shape_consistent() const {
        if (shape_tag == HierarchyShape::Diagonal) {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    if (i != j && (*this)(j, i) != 0.0) return false;
        } else if (shape_tag == HierarchyShape::ColumnConstant) {
            for (int j = 0; j < n; ++j)
                for (int i = 1; i < n; ++i)
                    if ((*this)(j, i) != (*this)(j, 0)) return false;
        }
        return true;
    }
};

struct Estimator {
    std::vector<double> values;  // values[x] = estimate assigned to outcome x
};

// Two-outcome model p(x|theta) = (1 + x f(theta))/2, x in {+1, -1}.
struct BinaryModel {
    std::vector<double> params;
    std::vector<double> f;
    std::vector<double> fprime;
    std::vector<double> weights;

    int n() const { return static_cast<int>(params.size()); }

    void validate() const {
        const std::size_t nn = params.size();
        require(nn >= 1, "invalid-model", "binary model grid is empty");
        require(f.size() == nn && fprime.size() == nn && weights.size() == nn, "invalid-model",
                "binary model field lengths disagree");
        for (std::size_t i = 1; i < nn; ++i)
            require(params[i] > params[i - 1], "invalid-model", "params must be strictly increasing");
        double wsum = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            require(std::abs(f[i]) < 1.0, "invalid-model",
                    "|f| must be < 1 at row " + std::to_string(i));
            require(weights[i] >= 0.0, "invalid-model", "negative weight");
            wsum += weights[i];
        }
        require(std::abs(wsum - 1.0) <= 1e-12, "invalid-model", "weights must sum to 1");
    }

    // Outcome order: +1 first, then -1.
    DiscreteModel to_discrete() const {
        DiscreteModel m;
        m.outcomes = {"+1", "-1"};
        m.params = params;
        m.weights = weights;
        m.probs.resize(params.size());
        m.derivs.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m.probs[i] = {0.5 * (1.0 + f[i]), 0.5 * (1.0 - f[i])};
            m.derivs[i] = {0.5 * fprime[i], -0.5 * fprime[i]};
        }
        return m;
    }

    static BinaryModel sine(double d, std::vector<double> params_in, std::vector<double> weights_in = {}) {
        BinaryModel b;
        b.params = std::move(params_in);
        const std::size_t nn = b.params.size();
        if (weights_in.empty())
            b.weights.assign(nn, 1.0 / static_cast<double>(nn));
        else
            b.weights = std::move(weights_in);
        b.f.resize(nn);
        b.fprime.resize(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            b.f[i] = d * std::sin(b.params[i]);
            b.fprime[i] = d * std::cos(b.params[i]);
        }
        b.validate();
        return b;
    }
};

// Uniform grids on [lo, hi].  "inclusive" contains both endpoints;
// "left" contains lo and stops short of hi, which keeps every n
// free of the f(theta) = f(pi - theta) degeneracy of symmetric grids.
inline std::vector<double> uniform_grid_inclusive(double lo, double hi, int n) {
    require(n >= 1, "invalid-argument", "grid needs n >= 1");
    std::vector<double> g(static_cast<std::size_t>(n));
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

inline std::vector<double> uniform_grid_left(double lo, double hi, int n) {
    require(n >= 1, "invalid-argument", "grid needs n >= 1");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    return g;
}

}  // namespace gsb
