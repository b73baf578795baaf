#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "hdrm/errors.hpp"
#include "hdrm/mesh.hpp"

namespace hdrm {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(const Vector& x, double alpha) {
    Vector r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
    return r;
}

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) {
        return data_[static_cast<size_t>(i) * static_cast<size_t>(cols_) + static_cast<size_t>(j)];
    }
    double operator()(int i, int j) const {
        return data_[static_cast<size_t>(i) * static_cast<size_t>(cols_) + static_cast<size_t>(j)];
    }

    Vector apply(const Vector& x) const {
        Vector y(static_cast<size_t>(rows_), 0.0);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[static_cast<size_t>(j)];
            y[static_cast<size_t>(i)] = s;
        }
        return y;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Gaussian elimination with partial pivoting. Used both as the production
/// dense solver (BEM systems) and as the oracle for the iterative solvers.
inline Vector dense_solve(DenseMatrix a, Vector b) {
    const int n = a.rows();
    if (a.cols() != n || static_cast<int>(b.size()) != n)
        throw Error(ErrorKind::dimension_mismatch, "dense_solve: shape mismatch");
    const double tiny = 1e-14 * a.max_abs();
    std::vector<int> perm(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= tiny)
            throw Error(ErrorKind::singular_matrix, "dense_solve: singular matrix");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[static_cast<size_t>(k)], b[static_cast<size_t>(piv)]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            a(i, k) = 0.0;
            for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[static_cast<size_t>(i)] -= f * b[static_cast<size_t>(k)];
        }
    }
    Vector x(static_cast<size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<size_t>(i)];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = s / a(i, i);
    }
    return x;
}

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Compressed-row sparse matrix. Built from triplets; duplicates are summed
/// at finalization. Immutable pattern, mutable values (boundary-condition
/// application edits values in place).
class SparseMatrix {
public:
    SparseMatrix() = default;

    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> t) {
        for (const Triplet& e : t)
            if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
                throw Error(ErrorKind::dimension_mismatch, "triplet index out of shape");
        std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.row_ptr_.assign(static_cast<size_t>(rows) + 1, 0);
        for (size_t i = 0; i < t.size();) {
            size_t j = i;
            double s = 0.0;
            while (j < t.size() && t[j].row == t[i].row && t[j].col == t[i].col)
                s += t[j++].value;
            m.col_idx_.push_back(t[i].col);
            m.values_.push_back(s);
            m.row_ptr_[static_cast<size_t>(t[i].row) + 1]++;
            i = j;
        }
        for (int r = 0; r < rows; ++r) m.row_ptr_[static_cast<size_t>(r) + 1] += m.row_ptr_[static_cast<size_t>(r)];
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nnz() const { return static_cast<int>(values_.size()); }

    Vector apply(const Vector& x) const {
        if (static_cast<int>(x.size()) != cols_)
            throw Error(ErrorKind::dimension_mismatch, "sparse apply: size mismatch");
        Vector y(static_cast<size_t>(rows_), 0.0);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int k = row_ptr_[static_cast<size_t>(i)]; k < row_ptr_[static_cast<size_t>(i) + 1]; ++k)
                s += values_[static_cast<size_t>(k)] * x[static_cast<size_t>(col_idx_[static_cast<size_t>(k)])];
            y[static_cast<size_t>(i)] = s;
        }
        return y;
    }

    int row_begin(int i) const { return row_ptr_[static_cast<size_t>(i)]; }
    int row_end(int i) const { return row_ptr_[static_cast<size_t>(i) + 1]; }
    int entry_col(int k) const { return col_idx_[static_cast<size_t>(k)]; }
    double entry_value(int k) const { return values_[static_cast<size_t>(k)]; }
    double& entry_value(int k) { return values_[static_cast<size_t>(k)]; }

    double coeff(int i, int j) const {
        for (int k = row_begin(i); k < row_end(i); ++k)
            if (entry_col(k) == j) return entry_value(k);
        return 0.0;
    }

    /// f(row, col, value&) over all stored entries, row-major order.
    template <class F>
    void for_each_entry(F&& f) {
        for (int i = 0; i < rows_; ++i)
            for (int k = row_begin(i); k < row_end(i); ++k)
                f(i, col_idx_[static_cast<size_t>(k)], values_[static_cast<size_t>(k)]);
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows_, cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = row_begin(i); k < row_end(i); ++k)
                d(i, entry_col(k)) += entry_value(k);
        return d;
    }

    /// Debug text export: `rows cols nnz`, then 1-based `i j v` lines.
    void write_matrix_market(std::ostream& os) const {
        os << rows_ << ' ' << cols_ << ' ' << nnz() << "\n";
        char buf[80];
        for (int i = 0; i < rows_; ++i)
            for (int k = row_begin(i); k < row_end(i); ++k) {
                std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i + 1, entry_col(k) + 1,
                              entry_value(k));
                os << buf;
            }
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

using LinearOperator = std::function<Vector(const Vector&)>;

inline LinearOperator as_operator(const SparseMatrix& m) {
    return [&m](const Vector& x) { return m.apply(x); };
}

struct SolveStats {
    int iterations = 0;
    double final_residual_norm = 0.0;
    bool converged = false;
};

/// Restarted GMRES with Givens rotations. Convergence on the relative
/// residual ||b - Ax|| / ||b|| (absolute when b = 0). A zero right-hand
/// side returns x = 0 immediately.
inline std::pair<Vector, SolveStats> gmres(const LinearOperator& A, const Vector& b,
                                           Vector x0, double tol, int max_iter,
                                           int restart = 30) {
    if (tol <= 0) throw Error(ErrorKind::config, "gmres: tol must be positive");
    const int n = static_cast<int>(b.size());
    if (x0.empty()) x0.assign(static_cast<size_t>(n), 0.0);
    if (static_cast<int>(x0.size()) != n)
        throw Error(ErrorKind::dimension_mismatch, "gmres: x0 size mismatch");
    const double bnorm = norm2(b);
    SolveStats stats;
    if (bnorm == 0.0) {
        stats.converged = true;
        return {Vector(static_cast<size_t>(n), 0.0), stats};
    }
    const double target = tol * bnorm;
    Vector x = std::move(x0);

    while (stats.iterations < max_iter) {
        Vector r = b;
        axpy(-1.0, A(x), r);
        double beta = norm2(r);
        stats.final_residual_norm = beta;
        if (beta <= target) {
            stats.converged = true;
            return {x, stats};
        }
        const int m = std::min(restart, max_iter - stats.iterations);
        std::vector<Vector> V;
        V.push_back(scaled(r, 1.0 / beta));
        DenseMatrix H(m + 1, m);
        std::vector<double> cs(static_cast<size_t>(m)), sn(static_cast<size_t>(m));
        Vector g(static_cast<size_t>(m) + 1, 0.0);
        g[0] = beta;
        int k = 0;
        bool breakdown = false;
        double hmax = 0.0;
        for (; k < m; ++k) {
            Vector w = A(V[static_cast<size_t>(k)]);
            for (int i = 0; i <= k; ++i) {
                H(i, k) = dot(w, V[static_cast<size_t>(i)]);
                hmax = std::max(hmax, std::abs(H(i, k)));
                axpy(-H(i, k), V[static_cast<size_t>(i)], w);
            }
            H(k + 1, k) = norm2(w);
            stats.iterations++;
            const double hscale = std::max(1.0, std::abs(H(k, k)));
            if (H(k + 1, k) <= 1e-14 * hscale) {
                breakdown = true;
                k++;
                break;
            }
            hmax = std::max(hmax, H(k + 1, k));
            V.push_back(scaled(w, 1.0 / H(k + 1, k)));
            for (int i = 0; i < k; ++i) {
                const double t = cs[static_cast<size_t>(i)] * H(i, k) + sn[static_cast<size_t>(i)] * H(i + 1, k);
                H(i + 1, k) = -sn[static_cast<size_t>(i)] * H(i, k) + cs[static_cast<size_t>(i)] * H(i + 1, k);
                H(i, k) = t;
            }
            const double denom = std::hypot(H(k, k), H(k + 1, k));
            cs[static_cast<size_t>(k)] = H(k, k) / denom;
            sn[static_cast<size_t>(k)] = H(k + 1, k) / denom;
            H(k, k) = denom;
            H(k + 1, k) = 0.0;
            g[static_cast<size_t>(k) + 1] = -sn[static_cast<size_t>(k)] * g[static_cast<size_t>(k)];
            g[static_cast<size_t>(k)] = cs[static_cast<size_t>(k)] * g[static_cast<size_t>(k)];
            if (std::abs(g[static_cast<size_t>(k) + 1]) <= target) {
                k++;
                break;
            }
        }
        // Solve the (possibly breakdown-truncated) least-squares problem.
        if (breakdown) {
            // Upper-triangularize the last column as well.
            const int j = k - 1;
            for (int i = 0; i < j; ++i) {
                const double t = cs[static_cast<size_t>(i)] * H(i, j) + sn[static_cast<size_t>(i)] * H(i + 1, j);
                H(i + 1, j) = -sn[static_cast<size_t>(i)] * H(i, j) + cs[static_cast<size_t>(i)] * H(i + 1, j);
                H(i, j) = t;
            }
        }
        // Rank-deficient projected systems (singular operators at lucky
        // breakdown) zero the affected components instead of dividing.
        const double tiny_pivot = 1e-14 * std::max(hmax, 1.0);
        Vector y(static_cast<size_t>(k), 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[static_cast<size_t>(i)];
            for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[static_cast<size_t>(j)];
            y[static_cast<size_t>(i)] = std::abs(H(i, i)) <= tiny_pivot ? 0.0 : s / H(i, i);
        }
        for (int i = 0; i < k; ++i) axpy(y[static_cast<size_t>(i)], V[static_cast<size_t>(i)], x);

        Vector rr = b;
        axpy(-1.0, A(x), rr);
        stats.final_residual_norm = norm2(rr);
        if (stats.final_residual_norm <= target) {
            stats.converged = true;
            return {x, stats};
        }
        if (breakdown) {
            // Exhausting the Krylov space at the round-off floor means the
            // projected solve is as good as the arithmetic allows: hand the
            // iterate back without flagging convergence. A residual that
            // shrank keeps restarting; a stalled one is a real breakdown.
            const double floor = 1e-12 * std::max(hmax, 1.0) * (1.0 + norm2(x));
            if (stats.final_residual_norm <= floor) return {x, stats};
            if (stats.final_residual_norm > 0.5 * beta)
                throw Error(ErrorKind::breakdown,
                            "gmres: Arnoldi breakdown with residual " +
                                std::to_string(stats.final_residual_norm));
        }
    }
    stats.converged = false;
    return {x, stats};
}

inline std::pair<Vector, SolveStats> gmres(const SparseMatrix& A, const Vector& b,
                                           const Vector& x0, double tol, int max_iter,
                                           int restart = 30) {
    return gmres(as_operator(A), b, x0, tol, max_iter, restart);
}

/// BiCGSTAB; breakdown (rho or omega vanishing with a nonzero residual)
/// raises, exhausted iterations return converged = false.
inline std::pair<Vector, SolveStats> bicgstab(const LinearOperator& A, const Vector& b,
                                              Vector x0, double tol, int max_iter) {
    if (tol <= 0) throw Error(ErrorKind::config, "bicgstab: tol must be positive");
    const int n = static_cast<int>(b.size());
    if (x0.empty()) x0.assign(static_cast<size_t>(n), 0.0);
    const double bnorm = norm2(b);
    SolveStats stats;
    if (bnorm == 0.0) {
        stats.converged = true;
        return {Vector(static_cast<size_t>(n), 0.0), stats};
    }
    const double target = tol * bnorm;
    Vector x = std::move(x0);
    Vector r = b;
    axpy(-1.0, A(x), r);
    Vector rhat = r;
    Vector p(r.size(), 0.0), v(r.size(), 0.0);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = norm2(r);
    while (stats.iterations < max_iter && rnorm > target) {
        const double rho_new = dot(rhat, r);
        if (rho_new == 0.0)
            throw Error(ErrorKind::breakdown, "bicgstab: rho breakdown");
        if (stats.iterations == 0) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (size_t i = 0; i < p.size(); ++i)
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;
        v = A(p);
        const double rhat_v = dot(rhat, v);
        if (rhat_v == 0.0)
            throw Error(ErrorKind::breakdown, "bicgstab: pivot breakdown");
        alpha = rho / rhat_v;
        Vector s = r;
        axpy(-alpha, v, s);
        stats.iterations++;
        if (norm2(s) <= target) {
            axpy(alpha, p, x);
            r = s;
            rnorm = norm2(r);
            break;
        }
        Vector t = A(s);
        const double tt = dot(t, t);
        if (tt == 0.0)
            throw Error(ErrorKind::breakdown, "bicgstab: omega breakdown");
        omega = dot(t, s) / tt;
        if (omega == 0.0)
            throw Error(ErrorKind::breakdown, "bicgstab: omega breakdown");
        axpy(alpha, p, x);
        axpy(omega, s, x);
        r = s;
        axpy(-omega, t, r);
        rnorm = norm2(r);
    }
    Vector rr = b;
    axpy(-1.0, A(x), rr);
    stats.final_residual_norm = norm2(rr);
    stats.converged = stats.final_residual_norm <= target;
    return {x, stats};
}

inline std::pair<Vector, SolveStats> bicgstab(const SparseMatrix& A, const Vector& b,
                                              const Vector& x0, double tol, int max_iter) {
    return bicgstab(as_operator(A), b, x0, tol, max_iter);
}

/// Classical forward Gauss-Seidel sweeps on a CSR matrix.
inline std::pair<Vector, SolveStats> gauss_seidel(const SparseMatrix& A, const Vector& b,
                                                  Vector x0, double tol, int max_iter) {
    if (tol <= 0) throw Error(ErrorKind::config, "gauss_seidel: tol must be positive");
    const int n = A.rows();
    if (x0.empty()) x0.assign(static_cast<size_t>(n), 0.0);
    std::vector<double> diag(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int k = A.row_begin(i); k < A.row_end(i); ++k)
            if (A.entry_col(k) == i) diag[static_cast<size_t>(i)] = A.entry_value(k);
        if (diag[static_cast<size_t>(i)] == 0.0)
            throw Error(ErrorKind::singular_matrix,
                        "gauss_seidel: zero diagonal at row " + std::to_string(i));
    }
    const double bnorm = norm2(b);
    const double target = bnorm == 0.0 ? tol : tol * bnorm;
    SolveStats stats;
    Vector x = std::move(x0);
    Vector r = b;
    axpy(-1.0, A.apply(x), r);
    stats.final_residual_norm = norm2(r);
    if (stats.final_residual_norm <= target) {
        stats.converged = true;
        return {x, stats};
    }
    while (stats.iterations < max_iter) {
        for (int i = 0; i < n; ++i) {
            double s = b[static_cast<size_t>(i)];
            for (int k = A.row_begin(i); k < A.row_end(i); ++k) {
                const int j = A.entry_col(k);
                if (j != i) s -= A.entry_value(k) * x[static_cast<size_t>(j)];
            }
            x[static_cast<size_t>(i)] = s / diag[static_cast<size_t>(i)];
        }
        stats.iterations++;
        r = b;
        axpy(-1.0, A.apply(x), r);
        stats.final_residual_norm = norm2(r);
        if (stats.final_residual_norm <= target) {
            stats.converged = true;
            return {x, stats};
        }
        if (!std::isfinite(stats.final_residual_norm)) break;
    }
    stats.converged = false;
    return {x, stats};
}

enum class NormKind { l2, h1 };

/// L2(Omega) norm of the P1 field with nodal values u: u' M u with the
/// consistent mass matrix, accumulated element by element (exact for P1).
inline double l2_norm(const Vector& u, const Mesh& mesh) {
    if (u.size() != mesh.nodes.size())
        throw Error(ErrorKind::dimension_mismatch, "l2_norm: size mismatch");
    double s = 0.0;
    for (const Element& e : mesh.elements) {
        const double a = mesh.element_area(e.id);
        const double u0 = u[static_cast<size_t>(e.node_ids[0])];
        const double u1 = u[static_cast<size_t>(e.node_ids[1])];
        const double u2 = u[static_cast<size_t>(e.node_ids[2])];
        s += a / 6.0 * (u0 * u0 + u1 * u1 + u2 * u2 + u0 * u1 + u1 * u2 + u0 * u2);
    }
    return std::sqrt(s);
}

inline double h1_seminorm(const Vector& u, const Mesh& mesh) {
    double s = 0.0;
    for (const Element& e : mesh.elements) {
        const Vec2 g = element_gradient(mesh, u, e.id);
        s += mesh.element_area(e.id) * (g.x * g.x + g.y * g.y);
    }
    return std::sqrt(s);
}

inline double norm(const Vector& u, NormKind kind, const Mesh& mesh) {
    const double l2 = l2_norm(u, mesh);
    if (kind == NormKind::l2) return l2;
    const double semi = h1_seminorm(u, mesh);
    return std::sqrt(l2 * l2 + semi * semi);
}

} // namespace hdrm
