#pragma once

// Eigenvalue sequences of the boundary-controlled systems and the 2x2
// modal eigenstructure of the coupled ones.

#include "momentlab/error.hpp"
#include "momentlab/mp.hpp"
#include "momentlab/rational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace momentlab {

enum class SystemKind { Heat, Complex2x2, PhaseField, Condensing, Custom };

inline std::string_view to_string(SystemKind k)
{
    switch (k) {
    case SystemKind::Heat: return "heat";
    case SystemKind::Complex2x2: return "complex2x2";
    case SystemKind::PhaseField: return "phase_field";
    case SystemKind::Condensing: return "condensing";
    case SystemKind::Custom: return "custom";
    }
    return "unknown";
}

/// Scalar parameter with an optional exact rational spelling ("2/3", "0.125").
struct Parameter {
    double value = 0.0;
    std::string exact;

    Parameter() = default;
    Parameter(double v) : value(v) {}
    static Parameter parse(const std::string& text) { return {rational_to_double(parse_rational(text)), text}; }

    /// Exact value: the rational spelling when present, else the exact binary value of `value`.
    mpq_class rational() const { return exact.empty() ? mpq_class(value) : parse_rational(exact); }

private:
    Parameter(double v, std::string text) : value(v), exact(std::move(text)) {}
};

struct PhaseFieldParams {
    Parameter xi{1.0};  ///< thermal diffusivity
    Parameter rho{1.0}; ///< latent heat
    Parameter tau{1.0}; ///< relaxation time
};

struct SystemSpec {
    SystemKind kind = SystemKind::Heat;
    PhaseFieldParams phase_field;
    double gamma = 0.5; ///< condensation exponent, strictly inside (0, 1)
    std::vector<std::complex<double>> custom_values;
    std::vector<std::complex<double>> custom_observations; ///< optional, one per value

    static SystemSpec heat() { return {}; }
    static SystemSpec complex2x2()
    {
        SystemSpec s;
        s.kind = SystemKind::Complex2x2;
        return s;
    }
    static SystemSpec phase(Parameter xi, Parameter rho, Parameter tau)
    {
        SystemSpec s;
        s.kind = SystemKind::PhaseField;
        s.phase_field = {std::move(xi), std::move(rho), std::move(tau)};
        return s;
    }
    static SystemSpec condensing(double gamma)
    {
        SystemSpec s;
        s.kind = SystemKind::Condensing;
        s.gamma = gamma;
        return s;
    }
    static SystemSpec custom(std::vector<std::complex<double>> values,
                             std::vector<std::complex<double>> observations = {})
    {
        SystemSpec s;
        s.kind = SystemKind::Custom;
        s.custom_values = std::move(values);
        s.custom_observations = std::move(observations);
        return s;
    }

    void validate() const
    {
        switch (kind) {
        case SystemKind::PhaseField:
            require(phase_field.xi.value > 0, "phase_field.xi must be positive");
            require(phase_field.rho.value > 0, "phase_field.rho must be positive");
            require(phase_field.tau.value > 0, "phase_field.tau must be positive");
            break;
        case SystemKind::Condensing:
            require(gamma > 0.0 && gamma < 1.0, "condensing.gamma must lie strictly inside (0, 1)");
            break;
        case SystemKind::Custom:
            require(!custom_values.empty(), "custom.values must not be empty");
            require(custom_observations.empty() || custom_observations.size() == custom_values.size(),
                    "custom.observations must match custom.values in length");
            break;
        default:
            break;
        }
    }

    /// True for systems with a 2x2 matrix per sine mode.
    bool has_modal_matrix() const { return kind == SystemKind::Complex2x2 || kind == SystemKind::PhaseField; }
};

enum class Ordering { ByModulus, Native };

/// Where a sequence entry comes from: spatial sine mode and eigen-branch (0 or 1).
struct ModeLabel {
    int spatial = 1;
    int branch = 0;
};

struct EigenvalueSequence {
    std::vector<Complex> values;
    std::vector<ModeLabel> labels;
    Ordering ordering = Ordering::ByModulus;
    SystemSpec source;
    long precision_bits = 0;
    /// For rearranged sequences: position in the generation order of each entry.
    std::vector<std::size_t> permutation;

    std::size_t size() const { return values.size(); }
    std::complex<double> value(std::size_t i) const { return {values[i].re.to_double(), values[i].im.to_double()}; }

    /// First `n` entries.
    EigenvalueSequence prefix(std::size_t n) const
    {
        require(n <= size(), "prefix longer than sequence");
        EigenvalueSequence s = *this;
        s.values.resize(n);
        s.labels.resize(n);
        if (!s.permutation.empty())
            s.permutation.resize(n);
        return s;
    }
};

/// Options for eigenvalue coincidence detection.
struct CoincidenceCheck {
    bool exact_rational = false;
    double rel_tol = 1e-10;
};

namespace detail {

inline void sort_by_modulus(EigenvalueSequence& seq)
{
    std::vector<std::size_t> idx(seq.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<Real> mods;
    mods.reserve(seq.size());
    for (const auto& v : seq.values)
        mods.push_back(abs(v));
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (mods[a] != mods[b])
            return mods[a] < mods[b];
        return seq.values[a].im < seq.values[b].im;
    });
    EigenvalueSequence out = seq;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.values[i] = seq.values[idx[i]];
        out.labels[i] = seq.labels[idx[i]];
    }
    out.permutation = idx;
    out.ordering = Ordering::ByModulus;
    seq = std::move(out);
}

inline Real to_real(const Parameter& p) { return Real(p.value); }

} // namespace detail

/// lambda_k = k^2, k = 1..n_max.
inline EigenvalueSequence heat_sequence(std::size_t n_max)
{
    require(n_max >= 1, "n_max must be at least 1");
    EigenvalueSequence seq;
    seq.source = SystemSpec::heat();
    seq.precision_bits = working_precision();
    for (std::size_t k = 1; k <= n_max; ++k) {
        const long kk = static_cast<long>(k);
        seq.values.emplace_back(Real(kk * kk), Real(0));
        seq.labels.push_back({static_cast<int>(k), 0});
    }
    return seq;
}

/// Spectrum {n^2 - i, n^2 + i} of -d_xx + A_0^*, enumerated with the -i partner first.
inline EigenvalueSequence complex2x2_sequence(std::size_t n_max)
{
    require(n_max >= 1, "n_max must be at least 1");
    EigenvalueSequence seq;
    seq.source = SystemSpec::complex2x2();
    seq.precision_bits = working_precision();
    for (std::size_t k = 1; k <= n_max; ++k) {
        const bool odd = (k % 2) == 1;
        const long n = odd ? static_cast<long>((k + 1) / 2) : static_cast<long>(k / 2);
        seq.values.emplace_back(Real(n * n), Real(odd ? -1 : 1));
        seq.labels.push_back({static_cast<int>(n), odd ? 0 : 1});
    }
    return seq;
}

namespace detail {

/// Exact test of lambda^(1)_k == lambda^(2)_n for the phase-field spectrum.
/// lambda^(1)_k = lambda^(2)_n  <=>  xi (k^2 - n^2) = r_k + r_n, which after squaring twice is
/// (xi^2 (k^2-n^2)^2 - r_k^2 - r_n^2)^2 = 4 r_k^2 r_n^2 with the bracket nonnegative.
inline bool phase_branches_coincide_exact(const PhaseFieldParams& p, long k, long n)
{
    if (k <= n)
        return false;
    const mpq_class xi = p.xi.rational();
    const mpq_class rho = p.rho.rational();
    const mpq_class tau = p.tau.rational();
    const mpq_class c = (rho + 1) / (2 * tau);
    const mpq_class rk2 = xi * rho / tau * k * k + c * c;
    const mpq_class rn2 = xi * rho / tau * n * n + c * c;
    const mpq_class d = mpq_class(k * k - n * n);
    const mpq_class lhs = xi * xi * d * d - rk2 - rn2;
    if (sgn(lhs) < 0)
        return false;
    return lhs * lhs == 4 * rk2 * rn2;
}

} // namespace detail

/// Branch values (lambda^(1)_k, lambda^(2)_k) of the linear phase-field operator.
inline std::array<Real, 2> phase_field_branches(const PhaseFieldParams& p, long k)
{
    const Real xi = detail::to_real(p.xi);
    const Real rho = detail::to_real(p.rho);
    const Real tau = detail::to_real(p.tau);
    const Real kk = Real(k * k);
    const Real c = (rho + Real(1)) / (Real(2) * tau);
    const Real r = sqrt(xi * rho / tau * kk + c * c);
    const Real base = xi * kk + c;
    return {base - r, base + r};
}

/// Merged phase-field spectrum over sine modes 1..n_max (2 n_max values), sorted increasing.
/// `permutation` records the generation index (2(k-1) + branch) of each sorted entry.
inline EigenvalueSequence phase_field_sequence(const PhaseFieldParams& p, std::size_t n_max,
                                               CoincidenceCheck check = {})
{
    require(n_max >= 1, "n_max must be at least 1");
    SystemSpec spec = SystemSpec::phase(p.xi, p.rho, p.tau);
    spec.validate();
    EigenvalueSequence seq;
    seq.source = spec;
    seq.precision_bits = working_precision();
    for (std::size_t k = 1; k <= n_max; ++k) {
        auto br = phase_field_branches(p, static_cast<long>(k));
        seq.values.emplace_back(std::move(br[0]), Real(0));
        seq.labels.push_back({static_cast<int>(k), 0});
        seq.values.emplace_back(std::move(br[1]), Real(0));
        seq.labels.push_back({static_cast<int>(k), 1});
    }
    detail::sort_by_modulus(seq);

    if (check.exact_rational) {
        for (std::size_t k = 1; k <= n_max; ++k)
            for (std::size_t n = 1; n < k; ++n)
                if (detail::phase_branches_coincide_exact(p, static_cast<long>(k), static_cast<long>(n)))
                    throw Error(ErrorKind::CoincidentEigenvalues,
                                "lambda^(1)_" + std::to_string(k) + " == lambda^(2)_" + std::to_string(n));
    } else {
        const Real tol(check.rel_tol);
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            const Real& a = seq.values[i].re;
            const Real& b = seq.values[i + 1].re;
            if (abs(b - a) <= tol * max(abs(a), abs(b)))
                throw Error(ErrorKind::CoincidentEigenvalues,
                            "coincident eigenvalues near " + a.to_string(12) + " (modes " +
                                std::to_string(seq.labels[i].spatial) + ", " +
                                std::to_string(seq.labels[i + 1].spatial) + ")");
        }
    }
    return seq;
}

/// Bits needed to resolve the pair gap e^{-n^{2 gamma}} next to n^2 for n <= n_spatial.
inline long condensing_required_bits(double gamma, std::size_t n_spatial)
{
    const double n = static_cast<double>(n_spatial);
    const double gap_bits = std::pow(n, 2.0 * gamma) * 1.4426950408889634;
    return static_cast<long>(std::ceil(gap_bits + 2.0 * std::log2(n + 1.0))) + 64;
}

/// Rearranged spectrum {k^2, k^2 + e^{-k^{2 gamma}}}: odd entries ((k+1)/2)^2,
/// even entries (k/2)^2 + e^{-(k/2)^{2 gamma}}.  Generated at enough precision to keep pairs distinct.
inline EigenvalueSequence condensing_sequence(double gamma, std::size_t n_max)
{
    require(n_max >= 1, "n_max must be at least 1");
    SystemSpec spec = SystemSpec::condensing(gamma);
    spec.validate();
    const long bits = std::max(working_precision(), condensing_required_bits(gamma, (n_max + 1) / 2));
    WorkingPrecision wp(bits);
    EigenvalueSequence seq;
    seq.source = spec;
    seq.precision_bits = bits;
    const Real two_gamma(2.0 * gamma);
    for (std::size_t k = 1; k <= n_max; ++k) {
        const bool odd = (k % 2) == 1;
        const long n = odd ? static_cast<long>((k + 1) / 2) : static_cast<long>(k / 2);
        Real v(n * n);
        if (!odd)
            v += exp(-pow(Real(n), two_gamma));
        seq.values.emplace_back(std::move(v), Real(0));
        seq.labels.push_back({static_cast<int>(n), odd ? 0 : 1});
    }
    return seq;
}

/// Explicit values in the given order.
inline EigenvalueSequence custom_sequence(const SystemSpec& spec)
{
    spec.validate();
    require(spec.kind == SystemKind::Custom, "custom_sequence needs a custom spec");
    EigenvalueSequence seq;
    seq.source = spec;
    seq.ordering = Ordering::Native;
    seq.precision_bits = working_precision();
    int k = 0;
    for (const auto& v : spec.custom_values) {
        seq.values.emplace_back(Real(v.real()), Real(v.imag()));
        seq.labels.push_back({++k, 0});
    }
    return seq;
}

/// Dispatches on the spec kind.  For phase-field systems `n_max` counts sine modes
/// (2 n_max values); otherwise it counts sequence entries.  Custom sequences are truncated to n_max.
inline EigenvalueSequence generate(const SystemSpec& spec, std::size_t n_max, CoincidenceCheck check = {})
{
    spec.validate();
    switch (spec.kind) {
    case SystemKind::Heat: return heat_sequence(n_max);
    case SystemKind::Complex2x2: return complex2x2_sequence(n_max);
    case SystemKind::PhaseField: return phase_field_sequence(spec.phase_field, n_max, check);
    case SystemKind::Condensing: return condensing_sequence(spec.gamma, n_max);
    case SystemKind::Custom: {
        auto seq = custom_sequence(spec);
        return n_max < seq.size() ? seq.prefix(n_max) : seq;
    }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown system kind");
}

/// Number of sequence entries needed so that every spatial mode up to `modes` is present.
inline std::size_t entries_for_spatial_modes(const SystemSpec& spec, std::size_t modes)
{
    switch (spec.kind) {
    case SystemKind::Complex2x2:
    case SystemKind::Condensing:
    case SystemKind::PhaseField:
        return 2 * modes;
    default:
        return modes;
    }
}

/// Eigenvalues and adjoint eigenvectors of k^2 D^T + A^T on the k-th sine mode.
struct ModalEigenpair {
    long mode = 1;
    std::array<Complex, 2> values;
    std::array<std::array<Complex, 2>, 2> vectors; ///< vectors[b] pairs with values[b]; unit Euclidean norm
    Real residual;                                  ///< max_b ||(k^2 D^T + A^T) v_b - lambda_b v_b||
};

/// The real 2x2 matrix k^2 D^T + A^T, row-major.
inline std::array<std::array<Real, 2>, 2> modal_matrix_transpose(const SystemSpec& spec, long k)
{
    require(spec.has_modal_matrix(), "system has no 2x2 mode matrix");
    const Real kk(k * k);
    if (spec.kind == SystemKind::Complex2x2) {
        // D = I, A_0 = [[0, 1], [-1, 0]]
        return {{{kk, Real(-1)}, {Real(1), kk}}};
    }
    const Real xi = detail::to_real(spec.phase_field.xi);
    const Real rho = detail::to_real(spec.phase_field.rho);
    const Real tau = detail::to_real(spec.phase_field.tau);
    // D = [[xi, -rho xi / 2], [0, xi]],  A = [[rho/tau, -rho/(2 tau)], [-2/tau, 1/tau]]
    const Real d00 = xi, d01 = -(rho * xi) / Real(2), d10(0), d11 = xi;
    const Real a00 = rho / tau, a01 = -rho / (Real(2) * tau), a10 = Real(-2) / tau, a11 = Real(1) / tau;
    return {{{kk * d00 + a00, kk * d10 + a10}, {kk * d01 + a01, kk * d11 + a11}}};
}

inline ModalEigenpair modal_eigenpairs(const SystemSpec& spec, long k)
{
    require(spec.has_modal_matrix(), "modal_eigenpairs needs a complex2x2 or phase_field system");
    require(k >= 1, "mode index must be positive");
    spec.validate();
    const auto m = modal_matrix_transpose(spec, k);
    const Real& a = m[0][0];
    const Real& b = m[0][1];
    const Real& c = m[1][0];
    const Real& d = m[1][1];

    const Real mean = (a + d) / Real(2);
    const Real half = (a - d) / Real(2);
    const Real disc = half * half + b * c;
    const Real scale = max(Real(1), max(abs(a), abs(d)));
    const Real eps = pow(Real(2), Real(-static_cast<long>(working_precision()) / 2));
    if (abs(disc) <= eps * scale * scale && !(b.is_zero() && c.is_zero()))
        throw Error(ErrorKind::DefectiveMode, "mode " + std::to_string(k) + " is not diagonalizable");

    ModalEigenpair out;
    out.mode = k;
    if (disc.sign() >= 0) {
        const Real r = sqrt(disc);
        out.values = {Complex(mean - r, Real(0)), Complex(mean + r, Real(0))};
    } else {
        const Real r = sqrt(-disc);
        out.values = {Complex(mean, -r), Complex(mean, r)};
    }

    Real worst(0);
    for (int br = 0; br < 2; ++br) {
        const Complex& lam = out.values[br];
        std::array<Complex, 2> v;
        if (!b.is_zero())
            v = {Complex(b, Real(0)), lam - Complex(a, Real(0))};
        else if (!c.is_zero())
            v = {lam - Complex(d, Real(0)), Complex(c, Real(0))};
        else
            v = br == 0 ? std::array<Complex, 2>{Complex(1.0), Complex(0.0)}
                        : std::array<Complex, 2>{Complex(0.0), Complex(1.0)};
        const Real len = sqrt(norm2(v[0]) + norm2(v[1]));
        v = {v[0] / len, v[1] / len};
        const Complex r0 = v[0] * a + v[1] * b - lam * v[0];
        const Complex r1 = v[0] * c + v[1] * d - lam * v[1];
        worst = max(worst, sqrt(norm2(r0) + norm2(r1)));
        out.vectors[br] = std::move(v);
    }
    out.residual = worst;
    return out;
}

} // namespace momentlab
