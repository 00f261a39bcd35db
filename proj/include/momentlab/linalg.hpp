#pragma once

// Dense Hermitian linear algebra over Complex: Cholesky factorization with
// refinement, and the largest eigenvalue of a Hermitian positive
// semidefinite matrix (dense tridiagonal bisection for small sizes, power
// iteration above; cyclic Jacobi kept as a cross-check).

#include "momentlab/error.hpp"
#include "momentlab/mp.hpp"

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace momentlab {

using ComplexVector = std::vector<Complex>;

/// Row-major square complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n) {}

    std::size_t size() const { return n_; }
    Complex& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    ComplexVector operator*(const ComplexVector& x) const
    {
        ComplexVector y(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            Complex acc;
            for (std::size_t j = 0; j < n_; ++j)
                add_product(acc, (*this)(i, j), x[j]);
            y[i] = std::move(acc);
        }
        return y;
    }

private:
    std::size_t n_ = 0;
    std::vector<Complex> data_;
};

inline Real max_abs(std::span<const Complex> v)
{
    Real m(0);
    for (const auto& z : v)
        m = max(m, abs(z));
    return m;
}

/// Hermitian inner product sum conj(x_i) y_i.
inline Complex dot(std::span<const Complex> x, std::span<const Complex> y)
{
    Complex acc;
    for (std::size_t i = 0; i < x.size(); ++i)
        add_conj_product(acc, x[i], y[i]);
    return acc;
}

/// G = L L^H for Hermitian positive definite G.
class Cholesky {
public:
    /// Returns nullopt when a pivot is not strictly positive at the working precision.
    static std::optional<Cholesky> factor(const ComplexMatrix& g)
    {
        const std::size_t n = g.size();
        Cholesky c;
        c.l_ = ComplexMatrix(n);
        for (std::size_t j = 0; j < n; ++j) {
            Real d = g(j, j).re;
            for (std::size_t k = 0; k < j; ++k)
                d -= norm2(c.l_(j, k));
            if (!(d.sign() > 0) || !d.is_finite())
                return std::nullopt;
            const Real ljj = sqrt(d);
            c.l_(j, j) = Complex(ljj, Real(0));
            for (std::size_t i = j + 1; i < n; ++i) {
                Complex s = g(i, j);
                for (std::size_t k = 0; k < j; ++k)
                    sub_product_conj(s, c.l_(i, k), c.l_(j, k));
                c.l_(i, j) = s / ljj;
            }
        }
        return c;
    }

    std::size_t size() const { return l_.size(); }
    const ComplexMatrix& lower() const { return l_; }

    ComplexVector solve(ComplexVector b) const
    {
        const std::size_t n = l_.size();
        for (std::size_t i = 0; i < n; ++i) {
            Complex s = b[i];
            for (std::size_t k = 0; k < i; ++k)
                sub_product(s, l_(i, k), b[k]);
            b[i] = s / l_(i, i).re;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            Complex s = b[ii];
            for (std::size_t k = ii + 1; k < n; ++k)
                sub_conj_product(s, l_(k, ii), b[k]);
            b[ii] = s / l_(ii, ii).re;
        }
        return b;
    }

    /// Solve followed by one step of iterative refinement against `g`.
    /// `residual` receives ||g x - b||_inf after refinement.
    ComplexVector solve_refined(const ComplexMatrix& g, const ComplexVector& b, Real* residual = nullptr) const
    {
        ComplexVector x = solve(b);
        ComplexVector r = g * x;
        for (std::size_t i = 0; i < r.size(); ++i)
            r[i] = b[i] - r[i];
        const ComplexVector dx = solve(std::move(r));
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += dx[i];
        if (residual) {
            ComplexVector r2 = g * x;
            Real m(0);
            for (std::size_t i = 0; i < r2.size(); ++i)
                m = max(m, abs(r2[i] - b[i]));
            *residual = m;
        }
        return x;
    }

private:
    ComplexMatrix l_;
};

/// Largest eigenvalue of a Hermitian matrix by cyclic complex Jacobi rotations.
inline Real hermitian_max_eigenvalue_jacobi(ComplexMatrix a, int max_sweeps = 60)
{
    const std::size_t n = a.size();
    if (n == 0)
        return Real(0);
    const Real eps = pow(Real(2), Real(-static_cast<long>(working_precision()) + 8));
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        Real off(0), diag(0);
        for (std::size_t i = 0; i < n; ++i) {
            diag += norm2(a(i, i));
            for (std::size_t j = i + 1; j < n; ++j)
                off += norm2(a(i, j));
        }
        if (off <= eps * eps * diag)
            break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Real mag = abs(a(p, q));
                if (mag.is_zero())
                    continue;
                // Phase e^{i phi} = a_pq / |a_pq| reduces the 2x2 block to a real symmetric one.
                const Complex phase = a(p, q) / mag;
                const Real app = a(p, p).re;
                const Real aqq = a(q, q).re;
                const Real theta = (aqq - app) / (Real(2) * mag);
                Real t = Real(1) / (abs(theta) + sqrt(theta * theta + Real(1)));
                if (theta.sign() < 0)
                    t = -t;
                const Real c = Real(1) / sqrt(t * t + Real(1));
                const Real s = t * c;
                // V = diag(phase, 1) * [[c, s], [-s, c]] on the (p, q) plane; A <- V^H A V.
                const Complex cp = phase * c;
                const Complex sp = phase * s;
                for (std::size_t k = 0; k < n; ++k) {
                    const Complex akp = a(k, p);
                    const Complex akq = a(k, q);
                    a(k, p) = akp * cp - akq * s;
                    a(k, q) = akp * sp + akq * c;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const Complex apk = a(p, k);
                    const Complex aqk = a(q, k);
                    a(p, k) = apk * conj(cp) - aqk * s;
                    a(q, k) = apk * conj(sp) + aqk * c;
                }
                a(p, q) = Complex();
                a(q, p) = Complex();
                a(p, p).im = Real(0);
                a(q, q).im = Real(0);
            }
        }
    }
    Real best = a(0, 0).re;
    for (std::size_t i = 1; i < n; ++i)
        best = max(best, a(i, i).re);
    return best;
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator by power iteration.
/// `apply` maps x to A x.  Stops when the Rayleigh quotient changes by less than `rel_tol`.
template <typename Apply>
Real power_iteration(std::size_t n, Apply&& apply, double rel_tol = 1e-8, int max_iter = 5000,
                     std::uint32_t seed = 12345)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist;
    ComplexVector x(n);
    for (auto& z : x)
        z = Complex(dist(gen), dist(gen));
    Real lambda(0);
    for (int it = 0; it < max_iter; ++it) {
        const Real nx = sqrt(dot(x, x).re);
        for (auto& z : x)
            z = z / nx;
        ComplexVector y = apply(x);
        const Real next = dot(x, y).re;
        const bool done = it > 0 && abs(next - lambda) <= Real(rel_tol) * abs(next);
        lambda = next;
        x = std::move(y);
        if (done)
            break;
    }
    return lambda;
}

/// Householder reduction of a Hermitian matrix to a real symmetric tridiagonal one with the same
/// spectrum: diagonal `d` and off-diagonal magnitudes `e` (e[i] couples i and i+1).
inline void hermitian_tridiagonalize(ComplexMatrix a, std::vector<Real>& d, std::vector<Real>& e)
{
    const std::size_t n = a.size();
    d.assign(n, Real(0));
    e.assign(n > 0 ? n - 1 : 0, Real(0));
    for (std::size_t k = 0; k + 2 < n; ++k) {
        Real xnorm2(0);
        for (std::size_t i = k + 1; i < n; ++i)
            xnorm2 += norm2(a(i, k));
        const Real xnorm = sqrt(xnorm2);
        const Real x0abs = abs(a(k + 1, k));
        if (xnorm.is_zero() || xnorm == x0abs) {
            // Column already reduced (at most the subdiagonal entry is nonzero).
            continue;
        }
        const Complex phase = x0abs.is_zero() ? Complex(1.0) : a(k + 1, k) / x0abs;
        // v = x + phase |x| e_1, normalized; H = I - 2 v v^H maps x to -phase |x| e_1.
        const std::size_t m = n - k - 1;
        ComplexVector v(m);
        for (std::size_t i = 0; i < m; ++i)
            v[i] = a(k + 1 + i, k);
        v[0] += phase * xnorm;
        const Real vnorm = sqrt(dot(v, v).re);
        for (auto& z : v)
            z = z / vnorm;
        // p = A22 v, w = p - (v^H p) v, A22 <- A22 - 2 v w^H - 2 w v^H.
        ComplexVector p(m);
        for (std::size_t i = 0; i < m; ++i) {
            Complex acc;
            for (std::size_t j = 0; j < m; ++j)
                add_product(acc, a(k + 1 + i, k + 1 + j), v[j]);
            p[i] = std::move(acc);
        }
        const Real vp = dot(v, p).re;
        for (std::size_t i = 0; i < m; ++i)
            p[i] -= v[i] * vp;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                Complex& aij = a(k + 1 + i, k + 1 + j);
                Complex t;
                add_product(t, v[i], conj(p[j]));
                add_product(t, p[i], conj(v[j]));
                aij -= t * Real(2);
            }
        }
        a(k + 1, k) = -(phase * xnorm);
        a(k, k + 1) = conj(a(k + 1, k));
        for (std::size_t i = k + 2; i < n; ++i) {
            a(i, k) = Complex();
            a(k, i) = Complex();
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        d[i] = a(i, i).re;
    for (std::size_t i = 0; i + 1 < n; ++i)
        e[i] = abs(a(i + 1, i));
}

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x (Sturm count).
inline std::size_t sturm_count_below(const std::vector<Real>& d, const std::vector<Real>& e, const Real& x,
                                     const Real& tiny)
{
    std::size_t count = 0;
    Real q(0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        q = i == 0 ? d[0] - x : d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q.is_zero())
            q = tiny;
        if (q.sign() < 0)
            ++count;
    }
    return count;
}

/// Largest eigenvalue of a Hermitian matrix: tridiagonalization, then bisection on the Sturm count to
/// `rel_bits` relative bits.
inline Real hermitian_max_eigenvalue_dense(const ComplexMatrix& a, long rel_bits = 96)
{
    const std::size_t n = a.size();
    if (n == 0)
        return Real(0);
    std::vector<Real> d, e;
    hermitian_tridiagonalize(a, d, e);
    // Largest diagonal entry below, Gershgorin above.
    Real lo = d[0], hi = d[0], scale(0);
    for (std::size_t i = 0; i < n; ++i) {
        Real r(0);
        if (i > 0)
            r += e[i - 1];
        if (i + 1 < n)
            r += e[i];
        lo = max(lo, d[i]);
        hi = max(hi, d[i] + r);
        scale = max(scale, max(abs(d[i]), r));
    }
    if (scale.is_zero())
        return Real(0);
    const Real tiny = scale * pow(Real(2), Real(-static_cast<long>(working_precision())));
    const Real tol = pow(Real(2), Real(-rel_bits));
    const long max_it = 4 * working_precision();
    for (long it = 0; it < max_it; ++it) {
        const Real mid = (lo + hi) / Real(2);
        if (sturm_count_below(d, e, mid, tiny) == n)
            hi = mid; // every eigenvalue below mid
        else
            lo = mid;
        if (hi - lo <= tol * max(abs(lo), abs(hi)))
            break;
    }
    return (lo + hi) / Real(2);
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix.
/// Dense tridiagonal bisection for n <= 64, power iteration above.
inline Real hermitian_max_eigenvalue(const ComplexMatrix& a)
{
    if (a.size() <= 64)
        return hermitian_max_eigenvalue_dense(a);
    return power_iteration(a.size(), [&](const ComplexVector& x) { return a * x; });
}

} // namespace momentlab
