#pragma once

// Minimal-norm biorthogonal families to {e^{-lambda_k t}} in L^2(0, T; C).
//
// q_k(t) = sum_n A[k, n] e^{-conj(lambda_n) t}.  Biorthogonality
// int_0^T q_k e^{-lambda_j t} dt = delta_kj reads G a_k = e_k with the Gram
// matrix G[j, n] = (1 - e^{-(lambda_j + conj lambda_n) T}) / (lambda_j + conj lambda_n),
// and ||q_k||^2 = (G^{-1})_{kk}.

#include "momentlab/error.hpp"
#include "momentlab/linalg.hpp"
#include "momentlab/mp.hpp"
#include "momentlab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace momentlab {

struct GramMatrix {
    ComplexMatrix entries;
    std::vector<Complex> lambda;
    Real horizon;
    long precision_bits = 0;
    std::optional<Cholesky> factor;

    std::size_t size() const { return entries.size(); }
};

namespace detail {

inline std::vector<Complex> leading_values(const EigenvalueSequence& seq, std::size_t n)
{
    std::vector<Complex> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(seq.values[i].rounded());
    return out;
}

inline ComplexMatrix assemble_gram(const std::vector<Complex>& lambda, const Real& T)
{
    const std::size_t n = lambda.size();
    ComplexMatrix g(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = j; m < n; ++m) {
            g(j, m) = exp_integral(lambda[j] + conj(lambda[m]), T);
            if (m != j)
                g(m, j) = conj(g(j, m));
        }
        g(j, j).im = Real(0);
    }
    return g;
}

} // namespace detail

/// Gram matrix of the first N exponentials on [0, T] at `precision_bits`, Cholesky-factored.
inline GramMatrix gram_matrix(const EigenvalueSequence& seq, double T, std::size_t N, long precision_bits = 512)
{
    require(T > 0.0, "horizon T must be positive");
    require(N >= 1 && N <= seq.size(), "N must be in [1, sequence length]");
    require(precision_bits >= 64, "precision must be at least 64 bits");
    WorkingPrecision wp(precision_bits);
    GramMatrix gm;
    gm.precision_bits = precision_bits;
    gm.horizon = Real(T);
    gm.lambda = detail::leading_values(seq, N);
    for (std::size_t k = 0; k < N; ++k)
        require(gm.lambda[k].re.sign() > 0, "Re(lambda_" + std::to_string(k + 1) + ") must be positive");
    gm.entries = detail::assemble_gram(gm.lambda, gm.horizon);
    gm.factor = Cholesky::factor(gm.entries);
    if (!gm.factor)
        throw Error(ErrorKind::PrecisionTooLow, "Cholesky of the Gram matrix failed at " +
                                                    std::to_string(precision_bits) + " bits (N=" +
                                                    std::to_string(N) + ", T=" + std::to_string(T) + ")");
    return gm;
}

struct BiorthogonalFamily {
    GramMatrix gram;
    ComplexMatrix coeffs;          ///< coeffs(k, n) = A[k, n]
    std::vector<ScaledNorm> norms; ///< ||q_k||
    Real max_residual;             ///< max_k ||G a_k - e_k||_inf after refinement

    std::size_t size() const { return coeffs.size(); }
    long precision_bits() const { return gram.precision_bits; }
    const std::vector<Complex>& lambda() const { return gram.lambda; }
    const Real& horizon() const { return gram.horizon; }
    double log_norm(std::size_t k) const { return norms[k].log(); }
};

struct FamilyOptions {
    double residual_bound = 1e-20;
};

inline BiorthogonalFamily biorthogonal_family(const EigenvalueSequence& seq, double T, std::size_t N,
                                              long precision_bits = 512, FamilyOptions opt = {})
{
    BiorthogonalFamily fam;
    fam.gram = gram_matrix(seq, T, N, precision_bits);
    WorkingPrecision wp(precision_bits);
    fam.coeffs = ComplexMatrix(N);
    fam.norms.resize(N);
    fam.max_residual = Real(0);
    for (std::size_t k = 0; k < N; ++k) {
        ComplexVector e(N);
        e[k] = Complex(1.0);
        Real res;
        ComplexVector a = fam.gram.factor->solve_refined(fam.gram.entries, e, &res);
        fam.max_residual = max(fam.max_residual, res);
        if (!(a[k].re.sign() > 0))
            throw Error(ErrorKind::PrecisionTooLow, "non-positive diagonal of the inverse Gram matrix at k=" +
                                                        std::to_string(k + 1));
        fam.norms[k] = ScaledNorm::from(sqrt(a[k].re));
        for (std::size_t n = 0; n < N; ++n)
            fam.coeffs(k, n) = std::move(a[n]);
    }
    if (fam.max_residual > Real(opt.residual_bound))
        throw Error(ErrorKind::ResidualTooLarge,
                    "Gram solve residual " + fam.max_residual.to_string(6) + " exceeds " +
                        std::to_string(opt.residual_bound) + " at " + std::to_string(precision_bits) + " bits");
    return fam;
}

/// Recomputes every int_0^T q_k(t) e^{-lambda_j t} dt in closed form at twice the construction
/// precision and returns max_{k,j} |result - delta_kj|.
inline double verify_biorthogonality(const BiorthogonalFamily& fam)
{
    WorkingPrecision wp(2 * fam.precision_bits());
    const std::size_t n = fam.size();
    std::vector<Complex> lambda;
    for (const auto& l : fam.lambda())
        lambda.push_back(l.rounded());
    const ComplexMatrix g = detail::assemble_gram(lambda, fam.horizon().rounded());
    Real worst(0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc;
            for (std::size_t m = 0; m < n; ++m)
                acc += g(j, m) * fam.coeffs(k, m);
            if (j == k)
                acc.re -= Real(1);
            worst = max(worst, abs(acc));
        }
    }
    return worst.to_double();
}

struct EscalationOptions {
    long start_bits = 512;
    long max_bits = 8192;
    double defect_target = 1e-20;
};

/// Builds the family, doubling the precision until Cholesky succeeds and the
/// verified biorthogonality defect is at most `defect_target`.
inline BiorthogonalFamily biorthogonal_family_escalating(const EigenvalueSequence& seq, double T, std::size_t N,
                                                         EscalationOptions opt = {})
{
    long bits = std::max(opt.start_bits, seq.precision_bits);
    std::string last;
    for (; bits <= opt.max_bits; bits *= 2) {
        try {
            BiorthogonalFamily fam = biorthogonal_family(seq, T, N, bits, {opt.defect_target});
            const double defect = verify_biorthogonality(fam);
            if (defect <= opt.defect_target)
                return fam;
            last = "defect " + std::to_string(defect);
        } catch (const Error& e) {
            if (!e.numerical())
                throw;
            last = e.what();
        }
    }
    throw Error(ErrorKind::PrecisionTooLow,
                "precision cap of " + std::to_string(opt.max_bits) + " bits reached: " + last);
}

struct NormBoundReport {
    std::size_t q = 1;
    double constant = 0.0;            ///< smallest C with L_k <= log C + C (sqrt(Re l_k) + 1/T)
    std::vector<double> raw_log_norm; ///< log ||q_k||
    std::vector<double> corrected;    ///< L_k = log ||q_k|| + sum_{1 <= |k-n| < q} log |l_k - l_n|
    std::vector<double> slack;        ///< log C + C s_k - L_k >= 0
    std::vector<double> envelope_ratio; ///< L_k / (sqrt(Re l_k) + 1/T + 1)
};

namespace detail {

/// Root of log C + C s = L in C > 0 (the left side is strictly increasing).
inline double solve_envelope(double s, double L)
{
    double lo = 1e-300, hi = 1.0;
    while (std::log(hi) + hi * s < L)
        hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (std::log(mid) + mid * s < L)
            lo = mid;
        else
            hi = mid;
        if (hi / lo - 1.0 < 1e-14)
            break;
    }
    return hi;
}

} // namespace detail

inline NormBoundReport norm_bound_report(const BiorthogonalFamily& fam, std::size_t q)
{
    require(q >= 1, "q must be at least 1");
    WorkingPrecision wp(fam.precision_bits());
    const std::size_t n = fam.size();
    const double T = fam.horizon().to_double();
    NormBoundReport rep;
    rep.q = q;
    std::vector<double> s(n);
    double C = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double raw = fam.log_norm(k);
        double corr = raw;
        for (std::size_t m = 0; m < n; ++m) {
            const std::size_t d = k > m ? k - m : m - k;
            if (d >= 1 && d < q)
                corr += abs(fam.lambda()[k] - fam.lambda()[m]).log_abs();
        }
        const double re = fam.lambda()[k].re.to_double();
        s[k] = std::sqrt(re) + 1.0 / T;
        rep.raw_log_norm.push_back(raw);
        rep.corrected.push_back(corr);
        rep.envelope_ratio.push_back(corr / (std::sqrt(re) + 1.0 / T + 1.0));
        C = std::max(C, detail::solve_envelope(s[k], corr));
    }
    rep.constant = C;
    for (std::size_t k = 0; k < n; ++k)
        rep.slack.push_back(std::log(C) + C * s[k] - rep.corrected[k]);
    return rep;
}

} // namespace momentlab
