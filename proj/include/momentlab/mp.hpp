#pragma once

// Extended-precision real and complex scalars on top of MPFR.
//
// Every freshly produced value (arithmetic result, conversion, constant) is
// rounded to the calling thread's working precision, set through
// WorkingPrecision.  Copies keep the precision of their source.

#include <mpfr.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace momentlab {

namespace detail {
inline mpfr_prec_t& thread_precision()
{
    thread_local mpfr_prec_t bits = 512;
    return bits;
}
} // namespace detail

/// Precision, in bits, used for newly created values on this thread.
inline long working_precision() { return static_cast<long>(detail::thread_precision()); }

/// Scoped override of the thread's working precision.
class WorkingPrecision {
public:
    explicit WorkingPrecision(long bits) : saved_(detail::thread_precision())
    {
        detail::thread_precision() = static_cast<mpfr_prec_t>(bits < MPFR_PREC_MIN ? MPFR_PREC_MIN : bits);
    }
    ~WorkingPrecision() { detail::thread_precision() = saved_; }
    WorkingPrecision(const WorkingPrecision&) = delete;
    WorkingPrecision& operator=(const WorkingPrecision&) = delete;

private:
    mpfr_prec_t saved_;
};

/// Decimal digits carried by `bits` of binary mantissa.
inline double decimal_digits(long bits) { return static_cast<double>(bits) * 0.30102999566398120; }

class Real {
public:
    Real() { mpfr_init2(v_, detail::thread_precision()); mpfr_set_zero(v_, 1); }
    Real(double x) { mpfr_init2(v_, detail::thread_precision()); mpfr_set_d(v_, x, MPFR_RNDN); }
    Real(int x) { mpfr_init2(v_, detail::thread_precision()); mpfr_set_si(v_, x, MPFR_RNDN); }
    Real(long x) { mpfr_init2(v_, detail::thread_precision()); mpfr_set_si(v_, x, MPFR_RNDN); }
    Real(long long x) { mpfr_init2(v_, detail::thread_precision()); mpfr_set_si(v_, static_cast<long>(x), MPFR_RNDN); }
    Real(unsigned long x) { mpfr_init2(v_, detail::thread_precision()); mpfr_set_ui(v_, x, MPFR_RNDN); }

    /// Parses a decimal or `0x`-free hexadecimal string in the given base.
    static Real parse(const std::string& s, int base = 10)
    {
        Real r;
        if (mpfr_set_str(r.v_, s.c_str(), base, MPFR_RNDN) != 0)
            throw std::invalid_argument("cannot parse extended-precision value: " + s);
        return r;
    }

    Real(const Real& o)
    {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Real(Real&& o) noexcept
    {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }
    Real& operator=(const Real& o)
    {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Real& operator=(Real&& o) noexcept
    {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    long precision() const { return static_cast<long>(mpfr_get_prec(v_)); }

    /// Copy rounded to the current working precision.
    Real rounded() const
    {
        Real r;
        mpfr_set(r.v_, v_, MPFR_RNDN);
        return r;
    }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    explicit operator double() const { return to_double(); }

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    /// Natural logarithm of |x| as a double; -inf for zero.  Safe far outside double range.
    double log_abs() const
    {
        if (is_zero())
            return -std::numeric_limits<double>::infinity();
        long e = 0;
        const double m = mpfr_get_d_2exp(&e, v_, MPFR_RNDN);
        return std::log(std::fabs(m)) + static_cast<double>(e) * 0.69314718055994531;
    }

    /// Full-precision hexadecimal rendering (mantissa and binary exponent), parseable with parse(s, 16).
    std::string to_hex() const
    {
        if (is_zero())
            return "0";
        mpfr_exp_t exp = 0;
        char* digits = mpfr_get_str(nullptr, &exp, 16, 0, v_, MPFR_RNDN);
        std::string m(digits);
        mpfr_free_str(digits);
        std::string sign;
        if (!m.empty() && m[0] == '-') {
            sign = "-";
            m.erase(0, 1);
        }
        // value = 0.m * 16^exp
        return sign + "0." + m + "@" + std::to_string(static_cast<long>(exp));
    }

    std::string to_string(int digits10 = 17) const
    {
        char buf[64];
        std::string fmt = "%." + std::to_string(digits10) + "Rg";
        if (digits10 <= 40) {
            mpfr_snprintf(buf, sizeof buf, fmt.c_str(), v_);
            return buf;
        }
        const int n = mpfr_snprintf(nullptr, 0, fmt.c_str(), v_);
        std::string out(static_cast<std::size_t>(n) + 1, '\0');
        mpfr_snprintf(out.data(), out.size(), fmt.c_str(), v_);
        out.resize(static_cast<std::size_t>(n));
        return out;
    }

    Real& operator+=(const Real& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator-=(const Real& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator*=(const Real& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator/=(const Real& o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }

    friend Real operator+(const Real& a, const Real& b) { Real r; mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
    friend Real operator-(const Real& a, const Real& b) { Real r; mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
    friend Real operator*(const Real& a, const Real& b) { Real r; mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
    friend Real operator/(const Real& a, const Real& b) { Real r; mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
    friend Real operator-(const Real& a) { Real r; mpfr_neg(r.v_, a.v_, MPFR_RNDN); return r; }

    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }
    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend bool operator!=(const Real& a, const Real& b) { return !(a == b); }

    friend std::ostream& operator<<(std::ostream& os, const Real& x) { return os << x.to_string(); }

private:
    mpfr_t v_;
};

#define MOMENTLAB_MPFR_UNARY(name, fn)                                                                      \
    inline Real name(const Real& x)                                                                         \
    {                                                                                                       \
        Real r;                                                                                             \
        fn(r.get(), x.get(), MPFR_RNDN);                                                                    \
        return r;                                                                                           \
    }

MOMENTLAB_MPFR_UNARY(exp, mpfr_exp)
MOMENTLAB_MPFR_UNARY(expm1, mpfr_expm1)
MOMENTLAB_MPFR_UNARY(log, mpfr_log)
MOMENTLAB_MPFR_UNARY(sqrt, mpfr_sqrt)
MOMENTLAB_MPFR_UNARY(sin, mpfr_sin)
MOMENTLAB_MPFR_UNARY(cos, mpfr_cos)
MOMENTLAB_MPFR_UNARY(abs, mpfr_abs)

#undef MOMENTLAB_MPFR_UNARY

inline Real pow(const Real& x, const Real& y)
{
    Real r;
    mpfr_pow(r.get(), x.get(), y.get(), MPFR_RNDN);
    return r;
}

inline Real hypot(const Real& x, const Real& y)
{
    Real r;
    mpfr_hypot(r.get(), x.get(), y.get(), MPFR_RNDN);
    return r;
}

inline Real pi()
{
    Real r;
    mpfr_const_pi(r.get(), MPFR_RNDN);
    return r;
}

inline Real max(const Real& a, const Real& b) { return a < b ? b : a; }
inline Real min(const Real& a, const Real& b) { return b < a ? b : a; }

/// Complex number over Real.
struct Complex {
    Real re;
    Real im;

    Complex() = default;
    Complex(Real r) : re(std::move(r)), im(0) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}
    Complex(double r, double i = 0.0) : re(r), im(i) {}

    Complex rounded() const { return {re.rounded(), im.rounded()}; }

    Complex& operator+=(const Complex& o) { re += o.re; im += o.im; return *this; }
    Complex& operator-=(const Complex& o) { re -= o.re; im -= o.im; return *this; }
    Complex& operator*=(const Complex& o)
    {
        Real r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = std::move(r);
        return *this;
    }

    friend Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
    friend Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
    friend Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
    friend Complex operator*(const Complex& a, const Complex& b)
    {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Complex operator*(const Complex& a, const Real& s) { return {a.re * s, a.im * s}; }
    friend Complex operator*(const Real& s, const Complex& a) { return {a.re * s, a.im * s}; }
    friend Complex operator/(const Complex& a, const Real& s) { return {a.re / s, a.im / s}; }
    friend Complex operator/(const Complex& a, const Complex& b)
    {
        // Smith's algorithm keeps intermediate magnitudes bounded.
        if (abs(b.im) <= abs(b.re)) {
            const Real r = b.im / b.re;
            const Real d = b.re + b.im * r;
            return {(a.re + a.im * r) / d, (a.im - a.re * r) / d};
        }
        const Real r = b.re / b.im;
        const Real d = b.re * r + b.im;
        return {(a.re * r + a.im) / d, (a.im * r - a.re) / d};
    }
    friend bool operator==(const Complex& a, const Complex& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const Complex& a, const Complex& b) { return !(a == b); }
};

inline Complex conj(const Complex& z) { return {z.re, -z.im}; }

// In-place multiply-accumulate kernels without temporaries, for inner loops.
namespace detail {

inline mpfr_ptr scratch()
{
    thread_local Real t;
    if (t.precision() != working_precision())
        mpfr_set_prec(t.get(), working_precision());
    return t.get();
}

} // namespace detail

/// acc += a * b
inline void add_product(Complex& acc, const Complex& a, const Complex& b)
{
    mpfr_ptr t = detail::scratch();
    mpfr_fmms(t, a.re.get(), b.re.get(), a.im.get(), b.im.get(), MPFR_RNDN);
    mpfr_add(acc.re.get(), acc.re.get(), t, MPFR_RNDN);
    mpfr_fmma(t, a.re.get(), b.im.get(), a.im.get(), b.re.get(), MPFR_RNDN);
    mpfr_add(acc.im.get(), acc.im.get(), t, MPFR_RNDN);
}

/// acc -= a * b
inline void sub_product(Complex& acc, const Complex& a, const Complex& b)
{
    mpfr_ptr t = detail::scratch();
    mpfr_fmms(t, a.re.get(), b.re.get(), a.im.get(), b.im.get(), MPFR_RNDN);
    mpfr_sub(acc.re.get(), acc.re.get(), t, MPFR_RNDN);
    mpfr_fmma(t, a.re.get(), b.im.get(), a.im.get(), b.re.get(), MPFR_RNDN);
    mpfr_sub(acc.im.get(), acc.im.get(), t, MPFR_RNDN);
}

/// acc += conj(a) * b
inline void add_conj_product(Complex& acc, const Complex& a, const Complex& b)
{
    mpfr_ptr t = detail::scratch();
    mpfr_fmma(t, a.re.get(), b.re.get(), a.im.get(), b.im.get(), MPFR_RNDN);
    mpfr_add(acc.re.get(), acc.re.get(), t, MPFR_RNDN);
    mpfr_fmms(t, a.re.get(), b.im.get(), a.im.get(), b.re.get(), MPFR_RNDN);
    mpfr_add(acc.im.get(), acc.im.get(), t, MPFR_RNDN);
}

/// acc -= conj(a) * b
inline void sub_conj_product(Complex& acc, const Complex& a, const Complex& b)
{
    mpfr_ptr t = detail::scratch();
    mpfr_fmma(t, a.re.get(), b.re.get(), a.im.get(), b.im.get(), MPFR_RNDN);
    mpfr_sub(acc.re.get(), acc.re.get(), t, MPFR_RNDN);
    mpfr_fmms(t, a.re.get(), b.im.get(), a.im.get(), b.re.get(), MPFR_RNDN);
    mpfr_sub(acc.im.get(), acc.im.get(), t, MPFR_RNDN);
}

/// acc -= a * conj(b)
inline void sub_product_conj(Complex& acc, const Complex& a, const Complex& b)
{
    mpfr_ptr t = detail::scratch();
    mpfr_fmma(t, a.re.get(), b.re.get(), a.im.get(), b.im.get(), MPFR_RNDN);
    mpfr_sub(acc.re.get(), acc.re.get(), t, MPFR_RNDN);
    mpfr_fmms(t, a.im.get(), b.re.get(), a.re.get(), b.im.get(), MPFR_RNDN);
    mpfr_sub(acc.im.get(), acc.im.get(), t, MPFR_RNDN);
}
inline Real abs(const Complex& z) { return hypot(z.re, z.im); }
inline Real norm2(const Complex& z) { return z.re * z.re + z.im * z.im; }

inline Complex exp(const Complex& z)
{
    const Real m = exp(z.re);
    if (z.im.is_zero())
        return {m, Real(0)};
    return {m * cos(z.im), m * sin(z.im)};
}

/// (1 - e^{-zT}) / z, the integral of e^{-zt} over [0, T].  Requires z != 0.
inline Complex exp_integral(const Complex& z, const Real& T)
{
    if (z.im.is_zero()) {
        // -expm1(-xT)/x avoids cancellation for small xT.
        return {-expm1(-(z.re * T)) / z.re, Real(0)};
    }
    const Complex e = exp(Complex{-(z.re * T), -(z.im * T)});
    return (Complex{Real(1) - e.re, -e.im}) / z;
}

/// Positive magnitude stored as mantissa in [0.5, 1) times a power of two.
struct ScaledNorm {
    double mantissa = 0.0;
    long exponent = 0;

    static ScaledNorm from(const Real& x)
    {
        ScaledNorm s;
        if (x.is_zero())
            return s;
        s.mantissa = std::fabs(mpfr_get_d_2exp(&s.exponent, x.get(), MPFR_RNDN));
        return s;
    }
    double log2() const
    {
        return mantissa > 0.0 ? std::log2(mantissa) + static_cast<double>(exponent)
                              : -std::numeric_limits<double>::infinity();
    }
    double log() const { return log2() * 0.69314718055994531; }
    double log10() const { return log2() * 0.30102999566398120; }
    /// Nearest double; overflows to +inf beyond double range.
    double value() const { return std::ldexp(mantissa, static_cast<int>(exponent)); }
};

} // namespace momentlab
