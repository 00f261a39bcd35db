#pragma once

// Truncated control cost K_N(T), sweeps over T and scaling-law fits.
//
// For unit data zeta in the weighted space (z_k(0) = zeta_k / sqrt(w_k)) the
// minimal control has squared norm d^H G^{-1} d with d_k = mu_k zeta_k,
// mu_k = -e^{-lambda_k T} / (b_k sqrt(w_k)).  Hence K_N(T)^2 is the largest
// eigenvalue of M^H G^{-1} M = Y^H Y, Y = L^{-1} M, G = L L^H, M = diag(mu).

#include "momentlab/biorthogonal.hpp"
#include "momentlab/control.hpp"
#include "momentlab/error.hpp"
#include "momentlab/linalg.hpp"
#include "momentlab/mp.hpp"
#include "momentlab/spectra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace momentlab {

struct CostValue {
    double log_cost = 0.0;      ///< natural log of K_N(T)
    std::optional<double> log_cost_prefix; ///< log K_{N - prefix_drop}(T) from the same factorization
    long precision_bits = 0;
    double relative_residual = 0.0; ///< ||G X - M||_max / ||M||_max for X = G^{-1} M
};

namespace detail {

inline std::vector<Complex> cost_multipliers(const EigenvalueSequence& seq, const std::vector<Complex>& lambda,
                                             const Real& T)
{
    const std::size_t n = lambda.size();
    const auto b = observation_coefficients(seq, n);
    const auto w = data_weights(seq, n);
    std::vector<Complex> mu(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Complex decay = exp(Complex(-(lambda[k].re * T), -(lambda[k].im * T)));
        mu[k] = -(decay / (b[k] * Real(std::sqrt(w[k]))));
    }
    return mu;
}

/// Largest eigenvalue of Y^H Y for the leading n x n block of L and diagonal mu.
inline Real leading_cost_squared(const Cholesky& chol, const std::vector<Complex>& mu, std::size_t n)
{
    const ComplexMatrix& l = chol.lower();
    // Column j of Y = mu_j L^{-1} e_j; zero above row j.
    std::vector<ComplexVector> y(n);
    for (std::size_t j = 0; j < n; ++j) {
        ComplexVector col(n);
        col[j] = Complex(Real(1) / l(j, j).re, Real(0));
        for (std::size_t i = j + 1; i < n; ++i) {
            Complex s;
            for (std::size_t k = j; k < i; ++k)
                sub_product(s, l(i, k), col[k]);
            col[i] = s / l(i, i).re;
        }
        for (std::size_t i = j; i < n; ++i)
            col[i] = col[i] * mu[j];
        y[j] = std::move(col);
    }
    ComplexMatrix h(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            Complex s;
            for (std::size_t i = std::max(a, b); i < n; ++i)
                add_conj_product(s, y[a][i], y[b][i]);
            if (a != b)
                h(b, a) = conj(s);
            h(a, b) = std::move(s);
        }
        h(a, a).im = Real(0);
    }
    return hermitian_max_eigenvalue(h);
}

} // namespace detail

/// log K_N(T) at a fixed precision.  Raises PrecisionTooLow when the Gram factorization fails or the
/// solve residual relative to the data exceeds `residual_bound`.
inline CostValue control_cost(const EigenvalueSequence& seq, double T, std::size_t N, long precision_bits = 512,
                              std::size_t prefix_drop = 0, double residual_bound = 1e-20)
{
    const GramMatrix gm = gram_matrix(seq, T, N, precision_bits);
    WorkingPrecision wp(precision_bits);
    const std::vector<Complex> mu = detail::cost_multipliers(seq, gm.lambda, gm.horizon);

    // Residual of G x = mu_j e_j, measured for the column with the largest solution.
    Real worst_rel(0);
    for (std::size_t j = 0; j < N; ++j) {
        ComplexVector e(N);
        e[j] = Complex(1.0);
        const ComplexVector x = gm.factor->solve(e);
        const ComplexVector gx = gm.entries * x;
        Real r(0);
        for (std::size_t i = 0; i < N; ++i)
            r = max(r, abs(gx[i] - e[i]));
        worst_rel = max(worst_rel, r);
    }

    CostValue out;
    out.precision_bits = precision_bits;
    out.relative_residual = worst_rel.to_double();
    if (worst_rel > Real(residual_bound))
        throw Error(ErrorKind::PrecisionTooLow, "cost solve residual " + worst_rel.to_string(4) + " at " +
                                                    std::to_string(precision_bits) + " bits");
    out.log_cost = 0.5 * detail::leading_cost_squared(*gm.factor, mu, N).log_abs();
    if (prefix_drop > 0 && prefix_drop < N)
        out.log_cost_prefix = 0.5 * detail::leading_cost_squared(*gm.factor, mu, N - prefix_drop).log_abs();
    return out;
}

/// control_cost with the precision doubled from `start_bits` until it succeeds or passes `max_bits`.
inline CostValue control_cost_escalating(const EigenvalueSequence& seq, double T, std::size_t N,
                                         long start_bits = 512, long max_bits = 8192, std::size_t prefix_drop = 0)
{
    std::string last;
    for (long bits = std::max(start_bits, seq.precision_bits); bits <= max_bits; bits *= 2) {
        try {
            return control_cost(seq, T, N, bits, prefix_drop);
        } catch (const Error& e) {
            if (!e.numerical())
                throw;
            last = e.what();
        }
    }
    throw Error(ErrorKind::PrecisionTooLow, "precision cap of " + std::to_string(max_bits) + " bits reached: " + last);
}

struct CostSample {
    double horizon = 0.0;
    double log_cost = std::numeric_limits<double>::quiet_NaN();
    std::size_t modes = 0;
    long precision_bits = 0;
    bool converged = false;
    bool accepted = false;
    std::string failure;
};

struct CostCurve {
    SystemSpec system;
    std::vector<CostSample> samples; ///< ascending in T
};

/// 12 log-spaced points in [0.04, 0.8].
inline std::vector<double> default_time_grid(std::size_t points = 12, double lo = 0.04, double hi = 0.8)
{
    std::vector<double> g;
    for (std::size_t i = 0; i < points; ++i)
        g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1)));
    return g;
}

struct SweepOptions {
    long start_bits = 512;
    long max_bits = 8192;
    std::size_t convergence_drop = 5;
    double convergence_rel_tol = 1e-3;
    unsigned threads = 1; ///< sweep points evaluated concurrently; each writes its own slot
};

inline CostCurve cost_sweep(const EigenvalueSequence& seq, std::vector<double> grid, std::size_t N,
                            SweepOptions opt = {})
{
    require(grid.size() >= 6, "cost_sweep needs at least 6 grid points");
    for (double T : grid)
        require(T > 0.0, "grid times must be positive");
    require(N >= 1 && N <= seq.size(), "N must be in [1, sequence length]");
    std::sort(grid.begin(), grid.end());
    CostCurve curve;
    curve.system = seq.source;
    curve.samples.resize(grid.size());
    auto evaluate = [&](std::size_t i) {
        CostSample& s = curve.samples[i];
        s.horizon = grid[i];
        s.modes = N;
        try {
            const CostValue v =
                control_cost_escalating(seq, grid[i], N, opt.start_bits, opt.max_bits, opt.convergence_drop);
            s.log_cost = v.log_cost;
            s.precision_bits = v.precision_bits;
            s.accepted = std::isfinite(v.log_cost);
            if (v.log_cost_prefix)
                s.converged =
                    std::fabs(v.log_cost - *v.log_cost_prefix) <= opt.convergence_rel_tol * std::fabs(v.log_cost);
        } catch (const Error& e) {
            if (!e.numerical())
                throw;
            s.failure = e.what();
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(grid.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            evaluate(i);
        return curve;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < grid.size(); i = next++)
                    evaluate(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return curve;
}

enum class ScalingModel { A, B };

struct FitResult {
    ScalingModel model = ScalingModel::A;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;        ///< model B only
    double gamma = 0.0;    ///< model B only
    double exponent = 0.0; ///< gamma / (1 - gamma), model B only
    double r_squared = 0.0;
    std::size_t samples_used = 0;
    std::size_t samples_converged = 0;

    double term_inverse_t(double T) const { return b / T; }
    double term_power(double T) const { return model == ScalingModel::B ? c / std::pow(T, exponent) : 0.0; }
    double predict(double T) const { return a + term_inverse_t(T) + term_power(T); }
};

struct FitOptions {
    /// Fit only samples with the convergence flag set; otherwise every accepted sample.
    bool converged_only = false;
    std::size_t min_samples = 4;
    /// Samples that must carry the convergence flag.  Set to 0 to fit truncated, unconverged curves.
    std::size_t min_converged = 4;
};

/// Ordinary least squares of log K against {1, 1/T} (model A) or {1, 1/T, T^{-gamma/(1-gamma)}} (model B).
inline FitResult fit_scaling(const CostCurve& curve, ScalingModel model, double gamma = 0.0, FitOptions opt = {})
{
    FitResult fit;
    fit.model = model;
    if (model == ScalingModel::B) {
        require(gamma > 0.0 && gamma < 1.0, "model B needs gamma in (0, 1)");
        fit.gamma = gamma;
        fit.exponent = gamma / (1.0 - gamma);
        if (std::fabs(fit.exponent - 1.0) < 1e-12)
            throw Error(ErrorKind::DegenerateDesign, "gamma = 1/2 makes both model-B terms 1/T");
    }
    std::vector<const CostSample*> use;
    for (const auto& s : curve.samples) {
        if (s.converged)
            ++fit.samples_converged;
        if (s.accepted && (!opt.converged_only || s.converged))
            use.push_back(&s);
    }
    if (fit.samples_converged < opt.min_converged)
        throw Error(ErrorKind::InsufficientSamples,
                    "fit needs at least " + std::to_string(opt.min_converged) + " converged samples, have " +
                        std::to_string(fit.samples_converged));
    const Eigen::Index cols = model == ScalingModel::A ? 2 : 3;
    if (use.size() < std::max<std::size_t>(opt.min_samples, static_cast<std::size_t>(cols) + 1))
        throw Error(ErrorKind::InsufficientSamples,
                    "fit needs at least " + std::to_string(opt.min_samples) + " usable samples, have " +
                        std::to_string(use.size()));
    const auto rows = static_cast<Eigen::Index>(use.size());
    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double T = use[static_cast<std::size_t>(i)]->horizon;
        X(i, 0) = 1.0;
        X(i, 1) = 1.0 / T;
        if (cols == 3)
            X(i, 2) = std::pow(T, -fit.exponent);
        y(i) = use[static_cast<std::size_t>(i)]->log_cost;
    }
    // Column scaling keeps the rank test meaningful when T^{-e} spans many decades.
    Eigen::VectorXd scale = X.colwise().norm().transpose();
    Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols)
        throw Error(ErrorKind::DegenerateDesign, "basis functions are numerically collinear on this grid");
    const Eigen::VectorXd coef = qr.solve(y).cwiseQuotient(scale);
    fit.a = coef(0);
    fit.b = coef(1);
    if (cols == 3)
        fit.c = coef(2);
    const Eigen::VectorXd resid = y - X * coef;
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - resid.squaredNorm() / ss_tot, 0.0, 1.0) : 1.0;
    fit.samples_used = use.size();
    return fit;
}

} // namespace momentlab
