#pragma once

// Dense real-symmetric / complex-Hermitian primitives sized for this library:
// matrices are small (a few dozen rows), but the m-shot information matrices
// they come from are badly graded (entries spanning ~50 decades).  Cyclic
// Jacobi is used for both eigensolvers because it preserves high *relative*
// accuracy on graded positive matrices, which pseudoinverse-based bounds rely
// on; QR-style solvers lose the small eigenvalues in noise.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gsb/error.hpp"

namespace gsb {

using cplx = std::complex<double>;

inline constexpr double kDefaultRcond = 1e-12;
inline constexpr double kDefaultRangeTol = 1e-8;

// ---- small vector helpers ----

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

// ---- matrix types ----

class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim, 0.0) {
        require(dim >= 1, "invalid-argument", "SymMatrix dimension must be >= 1");
    }

    // Builds from a dense row-major buffer, symmetrizing (A + A^T)/2.
    static SymMatrix from_dense(int dim, const std::vector<double>& entries) {
        SymMatrix m(dim);
        require(entries.size() == m.a_.size(), "invalid-argument", "SymMatrix buffer size mismatch");
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k <= j; ++k) {
                const double v = 0.5 * (entries[idx(dim, j, k)] + entries[idx(dim, k, j)]);
                m.a_[idx(dim, j, k)] = v;
                m.a_[idx(dim, k, j)] = v;
            }
        return m;
    }

    static SymMatrix identity(int dim) {
        SymMatrix m(dim);
        for (int j = 0; j < dim; ++j) m.a_[idx(dim, j, j)] = 1.0;
        return m;
    }

    static SymMatrix diagonal(const std::vector<double>& d) {
        SymMatrix m(static_cast<int>(d.size()));
        for (int j = 0; j < m.dim_; ++j) m.a_[idx(m.dim_, j, j)] = d[static_cast<std::size_t>(j)];
        return m;
    }

    // vv^T
    static SymMatrix outer(const std::vector<double>& v) {
        SymMatrix m(static_cast<int>(v.size()));
        for (int j = 0; j < m.dim_; ++j)
            for (int k = 0; k < m.dim_; ++k)
                m.a_[idx(m.dim_, j, k)] = v[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(k)];
        return m;
    }

    int dim() const { return dim_; }

    double operator()(int j, int k) const { return a_[idx(dim_, j, k)]; }

    // Sets (j,k) and (k,j) together so the invariant cannot be broken.
    void set(int j, int k, double v) {
        a_[idx(dim_, j, k)] = v;
        a_[idx(dim_, k, j)] = v;
    }

    void add(int j, int k, double v) {
        a_[idx(dim_, j, k)] += v;
        if (j != k) a_[idx(dim_, k, j)] += v;
    }

    std::vector<double> apply(const std::vector<double>& v) const {
        std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
        for (int j = 0; j < dim_; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim_; ++k) s += a_[idx(dim_, j, k)] * v[static_cast<std::size_t>(k)];
            out[static_cast<std::size_t>(j)] = s;
        }
        return out;
    }

    double frob() const {
        double s = 0.0;
        for (double x : a_) s += x * x;
        return std::sqrt(s);
    }

    const std::vector<double>& data() const { return a_; }

private:
    static std::size_t idx(int dim, int j, int k) {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k);
    }

    int dim_ = 0;
    std::vector<double> a_;
};

class HermMatrix {
public:
    HermMatrix() = default;

    explicit HermMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim, cplx(0.0, 0.0)) {
        require(dim >= 1, "invalid-argument", "HermMatrix dimension must be >= 1");
    }

    // Builds from a dense row-major buffer, hermitizing (A + A^dag)/2.
    static HermMatrix from_dense(int dim, const std::vector<cplx>& entries) {
        HermMatrix m(dim);
        require(entries.size() == m.a_.size(), "invalid-argument", "HermMatrix buffer size mismatch");
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k <= j; ++k) {
                const cplx v = 0.5 * (entries[idx(dim, j, k)] + std::conj(entries[idx(dim, k, j)]));
                m.a_[idx(dim, j, k)] = (j == k) ? cplx(v.real(), 0.0) : v;
                m.a_[idx(dim, k, j)] = std::conj(m.a_[idx(dim, j, k)]);
            }
        return m;
    }

    static HermMatrix identity(int dim) {
        HermMatrix m(dim);
        for (int j = 0; j < dim; ++j) m.a_[idx(dim, j, j)] = 1.0;
        return m;
    }

    int dim() const { return dim_; }

    cplx operator()(int j, int k) const { return a_[idx(dim_, j, k)]; }

    void set(int j, int k, cplx v) {
        if (j == k) v = cplx(v.real(), 0.0);
        a_[idx(dim_, j, k)] = v;
        a_[idx(dim_, k, j)] = std::conj(v);
    }

    double trace() const {
        double t = 0.0;
        for (int j = 0; j < dim_; ++j) t += a_[idx(dim_, j, j)].real();
        return t;
    }

    double frob() const {
        double s = 0.0;
        for (const cplx& x : a_) s += std::norm(x);
        return std::sqrt(s);
    }

    HermMatrix& operator+=(const HermMatrix& o) {
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }

    HermMatrix& operator-=(const HermMatrix& o) {
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }

    HermMatrix& operator*=(double s) {
        for (cplx& x : a_) x *= s;
        return *this;
    }

    friend HermMatrix operator+(HermMatrix a, const HermMatrix& b) { return a += b; }
    friend HermMatrix operator-(HermMatrix a, const HermMatrix& b) { return a -= b; }
    friend HermMatrix operator*(double s, HermMatrix a) { return a *= s; }

    // U M U^dag for a dim x dim matrix U in row-major order.
    HermMatrix conjugated_by(const std::vector<cplx>& u) const {
        const int n = dim_;
        std::vector<cplx> tmp(a_.size(), cplx(0.0, 0.0)), out(a_.size(), cplx(0.0, 0.0));
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                cplx s = 0.0;
                for (int l = 0; l < n; ++l) s += u[idx(n, j, l)] * a_[idx(n, l, k)];
                tmp[idx(n, j, k)] = s;
            }
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                cplx s = 0.0;
                for (int l = 0; l < n; ++l) s += tmp[idx(n, j, l)] * std::conj(u[idx(n, k, l)]);
                out[idx(n, j, k)] = s;
            }
        return from_dense(n, out);
    }

    const std::vector<cplx>& data() const { return a_; }

private:
    static std::size_t idx(int dim, int j, int k) {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k);
    }

    int dim_ = 0;
    std::vector<cplx> a_;
};

// Re Tr[A B] for Hermitian A, B (exact inner product up to roundoff).
inline double trace_product(const HermMatrix& a, const HermMatrix& b) {
    const int n = a.dim();
    double s = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) s += (a(j, k) * b(k, j)).real();
    return s;
}

// ---- eigendecompositions ----

struct EigenDecomp {
    std::vector<double> values;                // ascending
    std::vector<std::vector<double>> vectors;  // vectors[k] is the k-th eigenvector
};

struct EigenDecompC {
    std::vector<double> values;
    std::vector<std::vector<cplx>> vectors;
};

namespace detail {

// Rotation is worth doing only while the off-diagonal entry is significant
// relative to the local diagonal scale; this is what keeps Jacobi relatively
// accurate on graded matrices.
inline bool jacobi_skip(double apq_abs, double app, double aqq) {
    return apq_abs <= 1e-17 * std::sqrt(std::abs(app) * std::abs(aqq)) + 5e-324;
}

inline void jacobi_params(double app, double aqq, double apq, double& c, double& s, double& t) {
    const double theta = (aqq - app) / (2.0 * apq);
    if (std::isinf(theta) || std::isnan(theta)) {
        t = 0.0;
        c = 1.0;
        s = 0.0;
        return;
    }
    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    c = 1.0 / std::sqrt(t * t + 1.0);
    s = t * c;
}

inline int first_significant(const std::vector<double>& v) {
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    for (std::size_t k = 0; k < v.size(); ++k)
        if (std::abs(v[k]) > 1e-12 * mx) return static_cast<int>(k);
    return 0;
}

inline int first_significant_c(const std::vector<cplx>& v) {
    double mx = 0.0;
    for (const cplx& x : v) mx = std::max(mx, std::abs(x));
    for (std::size_t k = 0; k < v.size(); ++k)
        if (std::abs(v[k]) > 1e-12 * mx) return static_cast<int>(k);
    return 0;
}

}  // namespace detail

// Cyclic Jacobi for real symmetric matrices.  Deterministic output ordering:
// ascending eigenvalues, each eigenvector scaled so its first significant
// component is positive.
inline EigenDecomp eig_sym(const SymMatrix& m) {
    const int n = m.dim();
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (int j = 0; j < n; ++j) {
        v[j][j] = 1.0;
        for (int k = 0; k < n; ++k) a[j][k] = m(j, k);
    }

    const int max_sweeps = 128;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p][q];
                if (detail::jacobi_skip(std::abs(apq), a[p][p], a[q][q])) continue;
                rotated = true;
                double c, s, t;
                detail::jacobi_params(a[p][p], a[q][q], apq, c, s, t);
                const double app = a[p][p], aqq = a[q][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                    a[p][k] = a[k][p];
                    a[q][k] = a[k][q];
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
        if (!rotated) break;
    }
    require(sweep < max_sweeps, "eig-no-converge", "Jacobi sweep cap exceeded");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a[x][x] < a[y][y]; });

    EigenDecomp out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    for (int k = 0; k < n; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        out.values[static_cast<std::size_t>(k)] = a[src][src];
        for (int r = 0; r < n; ++r) out.vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = v[r][src];
        auto& col = out.vectors[static_cast<std::size_t>(k)];
        if (col[static_cast<std::size_t>(detail::first_significant(col))] < 0.0)
            for (double& x : col) x = -x;
    }
    return out;
}

// Cyclic Jacobi for Hermitian matrices.  Each pivot first strips the phase of
// a_pq with a diagonal unitary, then applies the real rotation; eigenvector
// phases are fixed so the first significant component is real positive.
inline EigenDecompC eig_herm(const HermMatrix& m) {
    const int n = m.dim();
    std::vector<std::vector<cplx>> a(n, std::vector<cplx>(n));
    std::vector<std::vector<cplx>> v(n, std::vector<cplx>(n, cplx(0.0, 0.0)));
    for (int j = 0; j < n; ++j) {
        v[j][j] = 1.0;
        for (int k = 0; k < n; ++k) a[j][k] = m(j, k);
    }

    const int max_sweeps = 128;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double r = std::abs(a[p][q]);
                const double app = a[p][p].real(), aqq = a[q][q].real();
                if (detail::jacobi_skip(r, app, aqq)) continue;
                rotated = true;

                // phase step: column p *= e^{i phi}, row p *= e^{-i phi}
                const cplx phase = a[p][q] / r;  // e^{i phi}
                for (int k = 0; k < n; ++k) {
                    a[k][p] *= phase;
                    a[p][k] = std::conj(a[k][p]);
                }
                a[p][p] = cplx(app, 0.0);
                for (int k = 0; k < n; ++k) v[k][p] *= phase;
                // now a[p][q] == r (real, positive)

                double c, s, t;
                detail::jacobi_params(app, aqq, r, c, s, t);
                a[p][p] = cplx(app - t * r, 0.0);
                a[q][q] = cplx(aqq + t * r, 0.0);
                a[p][q] = cplx(0.0, 0.0);
                a[q][p] = cplx(0.0, 0.0);
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const cplx akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                    a[p][k] = std::conj(a[k][p]);
                    a[q][k] = std::conj(a[k][q]);
                }
                for (int k = 0; k < n; ++k) {
                    const cplx vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
        if (!rotated) break;
    }
    require(sweep < max_sweeps, "eig-no-converge", "Jacobi sweep cap exceeded");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a[x][x].real() < a[y][y].real(); });

    EigenDecompC out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors.assign(static_cast<std::size_t>(n), std::vector<cplx>(static_cast<std::size_t>(n)));
    for (int k = 0; k < n; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        out.values[static_cast<std::size_t>(k)] = a[src][src].real();
        for (int r2 = 0; r2 < n; ++r2)
            out.vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(r2)] = v[r2][src];
        auto& col = out.vectors[static_cast<std::size_t>(k)];
        const cplx lead = col[static_cast<std::size_t>(detail::first_significant_c(col))];
        const double mag = std::abs(lead);
        if (mag > 0.0) {
            const cplx ph = std::conj(lead) / mag;
            for (cplx& x : col) x *= ph;
        }
    }
    return out;
}

// ---- pseudoinverse, range test, Rayleigh maximization ----

// Moore-Penrose pseudoinverse with relative rank cutoff rcond * max|lambda|.
inline SymMatrix pinv(const SymMatrix& m, double rcond = kDefaultRcond) {
    require(rcond > 0.0, "invalid-argument", "pinv rcond must be > 0");
    const EigenDecomp e = eig_sym(m);
    const int n = m.dim();
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    const double cut = rcond * lmax;
    std::vector<double> buf(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
        const double l = e.values[static_cast<std::size_t>(k)];
        if (std::abs(l) <= cut) continue;
        const double inv = 1.0 / l;
        const auto& u = e.vectors[static_cast<std::size_t>(k)];
        for (int j = 0; j < n; ++j)
            for (int i = 0; i <= j; ++i) {
                const double w = inv * u[static_cast<std::size_t>(j)] * u[static_cast<std::size_t>(i)];
                buf[static_cast<std::size_t>(j) * n + i] += w;
                if (i != j) buf[static_cast<std::size_t>(i) * n + j] += w;
            }
    }
    return SymMatrix::from_dense(n, buf);
}

// true iff ||(I - M M^+) v|| <= tol * (1 + ||v||)
inline bool in_range(const SymMatrix& m, const std::vector<double>& v, double tol = kDefaultRangeTol,
                     double rcond = kDefaultRcond) {
    require(static_cast<int>(v.size()) == m.dim(), "invalid-argument", "in_range dimension mismatch");
    const EigenDecomp e = eig_sym(m);
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    const double cut = rcond * lmax;
    double out2 = 0.0;
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        if (std::abs(e.values[k]) > cut) continue;
        const double c = dot(e.vectors[k], v);
        out2 += c * c;
    }
    return std::sqrt(out2) <= tol * (1.0 + norm2(v));
}

enum class RayleighKind { Finite, Unbounded };

struct RayleighResult {
    RayleighKind kind = RayleighKind::Unbounded;
    double value = 0.0;           // mu^T M^+ mu, present iff Finite
    std::vector<double> argvec;   // M^+ mu, present iff Finite
};

// sup over x != 0 of (mu^T x)^2 / (x^T M x) for PSD M: mu^T M^+ mu when
// mu lies in Range(M), unbounded otherwise.
inline RayleighResult rayleigh_max(const std::vector<double>& mu, const SymMatrix& m,
                                   double rcond = kDefaultRcond, double range_tol = kDefaultRangeTol) {
    require(static_cast<int>(mu.size()) == m.dim(), "invalid-argument", "rayleigh_max dimension mismatch");
    const EigenDecomp e = eig_sym(m);
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    require(e.values.front() >= -1e-10 * lmax, "not-psd", "rayleigh_max needs a positive semidefinite matrix");

    const double cut = rcond * lmax;
    double out2 = 0.0;
    double value = 0.0;
    std::vector<double> arg(mu.size(), 0.0);
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        const double c = dot(e.vectors[k], mu);
        if (std::abs(e.values[k]) <= cut) {
            out2 += c * c;
            continue;
        }
        const double ci = c / e.values[k];
        value += c * ci;
        for (std::size_t r = 0; r < mu.size(); ++r) arg[r] += ci * e.vectors[k][r];
    }
    RayleighResult res;
    if (std::sqrt(out2) <= range_tol * (1.0 + norm2(mu))) {
        res.kind = RayleighKind::Finite;
        res.value = value;
        res.argvec = std::move(arg);
    }
    return res;
}

// Numerical rank with the same cutoff convention as pinv.
inline int sym_rank(const SymMatrix& m, double rcond = kDefaultRcond) {
    const EigenDecomp e = eig_sym(m);
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    const double cut = rcond * lmax;
    int r = 0;
    for (double l : e.values)
        if (std::abs(l) > cut) ++r;
    return r;
}

}  // namespace gsb
