#pragma once

// Moment problems, null-control synthesis as a finite exponential sum, and
// closed-form modal Duhamel verification.
//
// Each sequence entry k is one modal coordinate z_k = psi_k^T Y_n of the sine
// coefficient Y_n of the state, psi_k a unit adjoint eigenvector of the mode
// matrix.  It evolves as
//     z_k' = -lambda_k z_k + b_k v(t),   b_k = n sqrt(2/pi) psi_k^T D B,
// so z_k(T) = 0 is the moment condition
//     int_0^T e^{-lambda_k t} u(t) dt = e^{-lambda_k T} m_k,  m_k = -z_k(0) / b_k,
// with u(t) = v(T - t).

#include "momentlab/biorthogonal.hpp"
#include "momentlab/error.hpp"
#include "momentlab/linalg.hpp"
#include "momentlab/mp.hpp"
#include "momentlab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace momentlab {

/// Observation coefficients b_k for the first `count` entries of `seq`.
inline std::vector<Complex> observation_coefficients(const EigenvalueSequence& seq, std::size_t count)
{
    require(count <= seq.size(), "observation count exceeds sequence length");
    const SystemSpec& spec = seq.source;
    std::vector<Complex> out;
    out.reserve(count);
    const Real sqrt_2_over_pi = sqrt(Real(2) / pi());
    for (std::size_t k = 0; k < count; ++k) {
        const ModeLabel lab = seq.labels[k];
        const Real trace_factor = Real(static_cast<long>(lab.spatial)) * sqrt_2_over_pi;
        switch (spec.kind) {
        case SystemKind::Heat:
            out.emplace_back(trace_factor, Real(0));
            break;
        case SystemKind::Complex2x2: {
            // D = I, B = (0, 1)
            const auto pair = modal_eigenpairs(spec, lab.spatial);
            out.push_back(pair.vectors[lab.branch][1] * trace_factor);
            break;
        }
        case SystemKind::PhaseField: {
            // D B = (xi, 0)
            const auto pair = modal_eigenpairs(spec, lab.spatial);
            out.push_back(pair.vectors[lab.branch][0] * (trace_factor * Real(spec.phase_field.xi.value)));
            break;
        }
        case SystemKind::Condensing:
            out.emplace_back(Real(1), Real(0));
            break;
        case SystemKind::Custom:
            if (spec.custom_observations.empty())
                out.emplace_back(Real(1), Real(0));
            else
                out.emplace_back(Real(spec.custom_observations[k].real()), Real(spec.custom_observations[k].imag()));
            break;
        }
        if (abs(out.back()) <= pow(Real(2), Real(-static_cast<long>(working_precision()) / 2)))
            throw Error(ErrorKind::VanishingObservation,
                        "observation coefficient of entry " + std::to_string(k + 1) + " vanishes");
    }
    return out;
}

/// Weights w_k of the H^{-1} proxy norm: 1 / n^2 for spatial mode n (1 / k^2 for custom sequences).
inline std::vector<double> data_weights(const EigenvalueSequence& seq, std::size_t count)
{
    std::vector<double> w;
    w.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double n = seq.source.kind == SystemKind::Custom ? static_cast<double>(k + 1)
                                                               : static_cast<double>(seq.labels[k].spatial);
        w.push_back(1.0 / (n * n));
    }
    return w;
}

struct MomentProblem {
    SystemKind kind = SystemKind::Heat;
    double horizon = 1.0;
    long precision_bits = 512;
    std::vector<Complex> lambda;
    std::vector<Complex> initial;     ///< z_k(0)
    std::vector<Complex> observation; ///< b_k
    std::vector<Complex> targets;     ///< m_k
    std::vector<double> weights;      ///< w_k
    std::string normalization = "unit Euclidean adjoint eigenvectors";

    std::size_t size() const { return targets.size(); }

    /// sqrt(sum_k w_k |z_k(0)|^2)
    double initial_norm() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < initial.size(); ++k) {
            const double a = abs(initial[k]).to_double();
            s += weights[k] * a * a;
        }
        return std::sqrt(s);
    }
};

/// Moment targets for the first `count` modal coordinates.  Missing trailing
/// coefficients of `y0` are zero.
inline MomentProblem moments_from_initial_data(const EigenvalueSequence& seq, const std::vector<std::complex<double>>& y0,
                                               double T, std::size_t count, long precision_bits = 512)
{
    require(T > 0.0, "horizon T must be positive");
    require(count >= 1 && count <= seq.size(), "mode count must be in [1, sequence length]");
    require(y0.size() <= count, "more initial coefficients than modes");
    WorkingPrecision wp(std::max(precision_bits, seq.precision_bits));
    MomentProblem prob;
    prob.kind = seq.source.kind;
    prob.horizon = T;
    prob.precision_bits = working_precision();
    prob.observation = observation_coefficients(seq, count);
    prob.weights = data_weights(seq, count);
    for (std::size_t k = 0; k < count; ++k) {
        prob.lambda.push_back(seq.values[k].rounded());
        Complex z = k < y0.size() ? Complex(y0[k].real(), y0[k].imag()) : Complex();
        prob.targets.push_back(-(z / prob.observation[k]));
        prob.initial.push_back(std::move(z));
    }
    return prob;
}

/// v(t) = sum_n c_n e^{-conj(lambda_n) (T - t)}, i.e. u(s) = v(T - s) = sum_n c_n e^{-conj(lambda_n) s}.
struct ControlSignal {
    Real horizon;
    std::vector<Complex> lambda;
    std::vector<Complex> coeffs;
    Real norm; ///< ||v||_{L^2(0, T)}
    Real derivative_norm; ///< ||v'||_{L^2(0, T)}
    long precision_bits = 0;
    bool symmetrized = false;

    double log_norm() const { return norm.log_abs(); }

    std::complex<double> operator()(double t) const
    {
        WorkingPrecision wp(precision_bits);
        const Real s = horizon - Real(t);
        Complex acc;
        for (std::size_t n = 0; n < coeffs.size(); ++n)
            acc += coeffs[n] * exp(Complex(-(lambda[n].re * s), lambda[n].im * s));
        return {acc.re.to_double(), acc.im.to_double()};
    }

    /// max |Im v(t)| over `samples` equispaced times in [0, T].
    double max_imaginary(std::size_t samples = 101) const
    {
        double worst = 0.0;
        const double T = horizon.to_double();
        for (std::size_t i = 0; i < samples; ++i) {
            const double t = T * static_cast<double>(i) / static_cast<double>(samples - 1);
            worst = std::max(worst, std::fabs((*this)(t).imag()));
        }
        return worst;
    }
};

namespace detail {

/// Index of the entry equal to conj(lambda[i]), or npos.
inline std::vector<std::size_t> conjugate_partners(const std::vector<Complex>& lambda)
{
    std::vector<std::size_t> partner(lambda.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < lambda.size(); ++i)
        for (std::size_t j = 0; j < lambda.size(); ++j)
            if (lambda[j] == conj(lambda[i])) {
                partner[i] = j;
                break;
            }
    return partner;
}

/// ||u||^2 = c^H G c.
inline Real gram_norm(const ComplexMatrix& g, const std::vector<Complex>& c)
{
    const ComplexVector gc = g * c;
    const Real q = dot(c, gc).re;
    return q.sign() > 0 ? sqrt(q) : Real(0);
}

} // namespace detail

/// u = sum_k e^{-lambda_k T} m_k q_k, so c_n = sum_k e^{-lambda_k T} m_k A[k, n].
/// When the spectrum is closed under conjugation and the targets satisfy m_{k'} = conj(m_k) for
/// conjugate partners, the coefficients are symmetrized so v is exactly real.
inline ControlSignal synthesize_control(const BiorthogonalFamily& fam, const MomentProblem& prob)
{
    const std::size_t N = fam.size();
    require(prob.size() == N, "moment problem and family differ in size");
    require(std::fabs(prob.horizon - fam.horizon().to_double()) <= 1e-15 * prob.horizon,
            "moment problem and family differ in horizon");
    WorkingPrecision wp(fam.precision_bits());
    for (std::size_t k = 0; k < N; ++k)
        require(fam.lambda()[k] == prob.lambda[k].rounded(), "moment problem and family differ in spectrum");

    const Real T = fam.horizon();
    std::vector<Complex> d(N);
    for (std::size_t k = 0; k < N; ++k)
        d[k] = exp(Complex(-(fam.lambda()[k].re * T), -(fam.lambda()[k].im * T))) * prob.targets[k].rounded();

    ControlSignal sig;
    sig.horizon = T;
    sig.lambda = fam.lambda();
    sig.precision_bits = fam.precision_bits();
    sig.coeffs.assign(N, Complex());
    for (std::size_t k = 0; k < N; ++k) {
        if (d[k].re.is_zero() && d[k].im.is_zero())
            continue;
        for (std::size_t n = 0; n < N; ++n)
            sig.coeffs[n] += d[k] * fam.coeffs(k, n);
    }

    const auto partner = detail::conjugate_partners(fam.lambda());
    bool paired = std::none_of(partner.begin(), partner.end(),
                               [](std::size_t p) { return p == static_cast<std::size_t>(-1); });
    if (paired) {
        const Real tol = pow(Real(2), Real(-static_cast<long>(working_precision()) / 2));
        Real scale(0);
        for (const auto& m : prob.targets)
            scale = max(scale, abs(m));
        for (std::size_t k = 0; k < N && paired; ++k)
            paired = abs(prob.targets[partner[k]] - conj(prob.targets[k])) <= tol * max(scale, Real(1));
    }
    if (paired) {
        std::vector<Complex> sym(N);
        for (std::size_t n = 0; n < N; ++n)
            sym[n] = (sig.coeffs[n] + conj(sig.coeffs[partner[n]])) / Real(2);
        sig.coeffs = std::move(sym);
        sig.symmetrized = true;
    }
    sig.norm = detail::gram_norm(fam.gram.entries, sig.coeffs);
    std::vector<Complex> dc(N);
    for (std::size_t n = 0; n < N; ++n)
        dc[n] = sig.coeffs[n] * conj(sig.lambda[n]);
    sig.derivative_norm = detail::gram_norm(fam.gram.entries, dc);
    return sig;
}

/// int_0^T e^{-lambda t} u(t) dt for the control's exponential sum, in closed form.
inline Complex moment_of(const ControlSignal& v, const Complex& lambda)
{
    Complex acc;
    for (std::size_t n = 0; n < v.coeffs.size(); ++n)
        acc += v.coeffs[n] * exp_integral(lambda + conj(v.lambda[n]), v.horizon);
    return acc;
}

struct NullControlReport {
    std::size_t controlled = 0;      ///< N
    std::vector<double> residuals;   ///< |z_k(T)|, k = 1..n_check
    /// e^{-Re l T}|z_k(0)| + |b_k|/|l_k| (|v(T)| + e^{-Re l T}|v(0)| + ||v'|| ((1 - e^{-2 Re l T}) / (2 Re l))^{1/2}),
    /// from one integration by parts of the Duhamel integral.
    std::vector<double> envelope;
    double initial_norm = 0.0;
    double max_controlled = 0.0;     ///< max_{k <= N} |z_k(T)|
    double max_spillover = 0.0;      ///< max_{k > N} |z_k(T)|

    /// Spillover stays under the envelope, and the envelope decays from the first to the last checked mode.
    bool spillover_decays() const
    {
        if (residuals.size() <= controlled + 1)
            return true;
        for (std::size_t k = controlled; k < residuals.size(); ++k)
            if (residuals[k] > envelope[k] * (1.0 + 1e-9))
                return false;
        return envelope.back() < envelope[controlled];
    }
};

/// Terminal modal amplitudes z_k(T) = e^{-lambda_k T} z_k(0) + b_k int_0^T e^{-lambda_k (T - s)} v(s) ds
/// for every mode of `full` (which may extend past the controlled ones).
inline NullControlReport verify_null_control(const MomentProblem& full, const ControlSignal& v)
{
    require(full.size() >= v.coeffs.size(), "n_check must cover the controlled modes");
    WorkingPrecision wp(std::max(v.precision_bits, full.precision_bits));
    NullControlReport rep;
    rep.controlled = v.coeffs.size();
    rep.initial_norm = full.initial_norm();
    const Real T(full.horizon);
    Complex v_end, v_start;
    for (std::size_t n = 0; n < v.coeffs.size(); ++n) {
        v_end += v.coeffs[n];
        v_start += v.coeffs[n] * exp(Complex(-(v.lambda[n].re * T), v.lambda[n].im * T));
    }
    const double v_T = abs(v_end).to_double();
    const double v_0 = abs(v_start).to_double();
    const double dnorm = v.derivative_norm.to_double();
    for (std::size_t k = 0; k < full.size(); ++k) {
        const Complex& lam = full.lambda[k];
        const Complex decay = exp(Complex(-(lam.re * T), -(lam.im * T)));
        const Complex zT = decay * full.initial[k] + full.observation[k] * moment_of(v, lam);
        const double r = abs(zT).to_double();
        rep.residuals.push_back(r);
        const double re = lam.re.to_double();
        const double damp = abs(decay).to_double();
        const double tail = std::sqrt(-std::expm1(-2.0 * re * full.horizon) / (2.0 * re));
        const double gain = abs(full.observation[k]).to_double() / abs(lam).to_double();
        rep.envelope.push_back(damp * abs(full.initial[k]).to_double() + gain * (v_T + damp * v_0 + dnorm * tail));
        if (k < rep.controlled)
            rep.max_controlled = std::max(rep.max_controlled, r);
        else
            rep.max_spillover = std::max(rep.max_spillover, r);
    }
    return rep;
}

} // namespace momentlab
