#pragma once

// Spectral hypotheses checks, counting function, the phase-field
// approximate-controllability condition and the minimal-time estimator.

#include "momentlab/error.hpp"
#include "momentlab/mp.hpp"
#include "momentlab/rational.hpp"
#include "momentlab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace momentlab {

struct HypothesisVerdict {
    std::string name;
    bool pass = false;
    double value = 0.0; ///< the fitted constant or witness for this item
    std::string detail;
};

struct HypothesisReport {
    std::size_t q = 1;
    std::size_t n_checked = 0;

    double min_distance = 0.0; ///< (1) min |lambda_k - lambda_n|, k != n
    double min_real = 0.0;     ///< (2) min Re(lambda_k)
    double beta = 0.0;         ///< (3) max |Im lambda_k| / sqrt(Re lambda_k)
    std::size_t monotone_violations = 0; ///< (4) count of |lambda_k| > |lambda_{k+1}|
    double rho = 0.0;          ///< (5) min |lambda_k - lambda_n| / |k^2 - n^2| over |k - n| >= q
    double c0 = 0.0;           ///< (6) min |lambda_k - lambda_n| over the short-range window
    double counting_p = 0.0;   ///< (7) slope p of the sqrt(r) fit
    double counting_alpha = 0.0; ///< (7) achieved max |p sqrt(r) - N(r)|

    std::vector<HypothesisVerdict> verdicts; ///< fixed order (1)..(7)

    bool all_pass() const
    {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.pass; });
    }
    const HypothesisVerdict& item(std::size_t one_based) const { return verdicts.at(one_based - 1); }
};

struct HypothesisOptions {
    double rho_floor = 1e-14;    ///< weak gap fails when rho <= rho_floor
    double c0_rel_floor = 1e-14; ///< short-range gap fails when c0 <= c0_rel_floor * max(1, |lambda_N|)
    double p_min = 0.1;
    double p_max = 10.0;
    double p_step = 1e-3;
};

struct CountingValue {
    std::size_t count = 0;
    bool truncated = false; ///< r reaches past the last available modulus
};

/// #{k : |lambda_k| <= r} over the available entries.
inline CountingValue counting_function(const EigenvalueSequence& seq, double r)
{
    require(r > 0.0, "counting_function needs r > 0");
    CountingValue out;
    double largest = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const double m = std::abs(seq.value(i));
        largest = std::max(largest, m);
        if (m <= r)
            ++out.count;
    }
    out.truncated = r >= largest;
    return out;
}

struct CountingFit {
    double p = 0.0;
    double alpha = 0.0;
};

/// Grid search for p minimizing max |p sqrt(r) - N(r)|, evaluated on both sides of every jump of N.
inline CountingFit fit_counting(std::span<const double> moduli_sorted, double p_min = 0.1, double p_max = 10.0,
                                double p_step = 1e-3)
{
    // Distinct jump radii with left and right counts.
    std::vector<std::pair<double, std::pair<double, double>>> jumps;
    for (std::size_t i = 0; i < moduli_sorted.size();) {
        std::size_t j = i;
        while (j < moduli_sorted.size() && moduli_sorted[j] == moduli_sorted[i])
            ++j;
        jumps.push_back({std::sqrt(moduli_sorted[i]), {static_cast<double>(i), static_cast<double>(j)}});
        i = j;
    }
    CountingFit best{p_min, std::numeric_limits<double>::infinity()};
    const auto steps = static_cast<long>(std::llround((p_max - p_min) / p_step));
    for (long s = 0; s <= steps; ++s) {
        const double p = p_min + static_cast<double>(s) * p_step;
        double worst = 0.0;
        for (const auto& [sr, counts] : jumps) {
            worst = std::max(worst, std::fabs(p * sr - counts.first));
            worst = std::max(worst, std::fabs(p * sr - counts.second));
            if (worst >= best.alpha)
                break;
        }
        if (worst < best.alpha)
            best = {p, worst};
    }
    return best;
}

inline HypothesisReport check_hypotheses(const EigenvalueSequence& seq, std::size_t q, HypothesisOptions opt = {})
{
    require(q >= 1, "q must be at least 1");
    const std::size_t n = seq.size();
    if (n < 2 * q + 2)
        throw Error(ErrorKind::SequenceTooShort,
                    "need at least 2q + 2 = " + std::to_string(2 * q + 2) + " terms, have " + std::to_string(n));
    WorkingPrecision wp(std::max(seq.precision_bits, working_precision()));

    HypothesisReport rep;
    rep.q = q;
    rep.n_checked = n;

    const std::size_t short_window = std::max<std::size_t>(q - 1, 1);
    Real min_dist, rho, c0;
    bool have_dist = false, have_rho = false, have_c0 = false;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = k + 1; m < n; ++m) {
            const Real dist = abs(seq.values[m] - seq.values[k]);
            if (!have_dist || dist < min_dist) {
                min_dist = dist;
                have_dist = true;
            }
            const std::size_t gap = m - k;
            if (gap >= q) {
                const long kk = static_cast<long>(k + 1), mm = static_cast<long>(m + 1);
                const Real ratio = dist / Real(mm * mm - kk * kk);
                if (!have_rho || ratio < rho) {
                    rho = ratio;
                    have_rho = true;
                }
            }
            if (gap <= short_window && (!have_c0 || dist < c0)) {
                c0 = dist;
                have_c0 = true;
            }
        }
    }

    Real min_re = seq.values[0].re;
    Real beta(0);
    bool re_ok = true;
    for (const auto& v : seq.values) {
        min_re = min(min_re, v.re);
        if (v.re.sign() <= 0)
            re_ok = false;
        else
            beta = max(beta, abs(v.im) / sqrt(v.re));
    }

    std::size_t violations = 0;
    std::vector<double> moduli;
    moduli.reserve(n);
    Real prev = abs(seq.values[0]);
    moduli.push_back(prev.to_double());
    for (std::size_t k = 1; k < n; ++k) {
        Real cur = abs(seq.values[k]);
        if (cur < prev)
            ++violations;
        moduli.push_back(cur.to_double());
        prev = std::move(cur);
    }

    rep.min_distance = min_dist.to_double();
    rep.min_real = min_re.to_double();
    rep.beta = re_ok ? beta.to_double() : std::numeric_limits<double>::infinity();
    rep.monotone_violations = violations;
    rep.rho = have_rho ? rho.to_double() : std::numeric_limits<double>::infinity();
    rep.c0 = have_c0 ? c0.to_double() : std::numeric_limits<double>::infinity();

    std::vector<double> sorted = moduli;
    std::sort(sorted.begin(), sorted.end());
    const CountingFit fit = fit_counting(sorted, opt.p_min, opt.p_max, opt.p_step);
    rep.counting_p = fit.p;
    rep.counting_alpha = fit.alpha;

    const double c0_floor = opt.c0_rel_floor * std::max(1.0, sorted.back());
    const bool p_interior = fit.p > opt.p_min + 0.5 * opt.p_step && fit.p < opt.p_max - 0.5 * opt.p_step;

    rep.verdicts = {
        {"distinct", !min_dist.is_zero(), rep.min_distance, "min |l_k - l_n|"},
        {"positive_real", re_ok, rep.min_real, "min Re l_k"},
        {"imag_bound", re_ok, rep.beta, "beta = max |Im l_k| / sqrt(Re l_k)"},
        {"modulus_monotone", violations == 0, static_cast<double>(violations), "violations of |l_k| <= |l_k+1|"},
        {"weak_gap", rep.rho > opt.rho_floor, rep.rho, "rho = min |l_k - l_n| / |k^2 - n^2|, |k-n| >= q"},
        {"short_range_gap", rep.c0 > c0_floor, rep.c0,
         "c0 = min |l_k - l_n|, 1 <= |k-n| <= " + std::to_string(short_window)},
        {"counting", p_interior, rep.counting_p, "p (alpha = " + std::to_string(rep.counting_alpha) + ")"},
    };
    return rep;
}

// ---------------------------------------------------------------------------
// Approximate controllability of the linear phase-field system.

struct H2Pair {
    long k = 0;
    long l = 0;
    friend bool operator==(const H2Pair&, const H2Pair&) = default;
};

/// xi^2 tau^2 (l^2 - k^2)^2 - 2 xi rho tau (l^2 + k^2) - 2 rho - 1, exactly.
inline mpq_class h2_expression(const PhaseFieldParams& p, long k, long l)
{
    const mpq_class xi = p.xi.rational(), rho = p.rho.rational(), tau = p.tau.rational();
    const mpq_class d(l * l - k * k);
    const mpq_class s(l * l + k * k);
    return xi * xi * tau * tau * d * d - 2 * xi * rho * tau * s - 2 * rho - 1;
}

/// All 1 <= k < l <= k_max where the H2 expression vanishes.  Floating mode counts
/// |expr| <= 1e-8 (1 + xi^2 tau^2 (l^2-k^2)^2) as a violation.
inline std::vector<H2Pair> check_h2(const PhaseFieldParams& p, long k_max, bool exact_rational = false)
{
    require(k_max >= 2, "k_max must be at least 2");
    require(p.xi.value > 0 && p.rho.value > 0 && p.tau.value > 0, "phase-field parameters must be positive");
    std::vector<H2Pair> out;
    const long double xi = p.xi.value, rho = p.rho.value, tau = p.tau.value;
    for (long k = 1; k < k_max; ++k) {
        for (long l = k + 1; l <= k_max; ++l) {
            if (exact_rational) {
                if (sgn(h2_expression(p, k, l)) == 0)
                    out.push_back({k, l});
                continue;
            }
            const long double d = static_cast<long double>(l * l - k * k);
            const long double lead = xi * xi * tau * tau * d * d;
            const long double expr =
                lead - 2.0L * xi * rho * tau * static_cast<long double>(l * l + k * k) - 2.0L * rho - 1.0L;
            if (std::fabs(expr) <= 1e-8L * (1.0L + lead))
                out.push_back({k, l});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Minimal null-control time T0 = limsup (-log|beta_k|) / k^2.

struct MinimalTimeEstimate {
    double value = 0.0;
    bool infinite = false;
    std::size_t window_first = 0; ///< 1-based k range of the tail window
    std::size_t window_last = 0;
    double tail_max = 0.0;      ///< max of s_k over the window
    double fitted_limit = 0.0;  ///< intercept of the least-squares line s_k ~ L + m / k on the window
    std::vector<double> samples; ///< s_k = -log|beta_k| / k^2, k = 1..n
};

/// Estimator from log|beta_k|, k = 1..n (use this form when beta_k underflows).
inline MinimalTimeEstimate minimal_time_from_logs(std::span<const double> log_abs_beta)
{
    const std::size_t n = log_abs_beta.size();
    require(n >= 20, "minimal_time needs at least 20 terms");
    MinimalTimeEstimate est;
    est.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lb = log_abs_beta[i];
        if (std::isinf(lb) && lb < 0)
            throw Error(ErrorKind::ZeroPerturbation,
                        "beta_" + std::to_string(i + 1) + " = 0: the perturbed and unperturbed spectra intersect");
        require(std::isfinite(lb), "log|beta_k| must be finite");
        const double k = static_cast<double>(i + 1);
        est.samples.push_back(-lb / (k * k));
    }
    est.window_first = n / 2 + 1;
    est.window_last = n;

    double tail_max = -std::numeric_limits<double>::infinity();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double m = 0;
    for (std::size_t k = est.window_first; k <= est.window_last; ++k) {
        const double s = est.samples[k - 1];
        const double x = 1.0 / static_cast<double>(k);
        tail_max = std::max(tail_max, s);
        sx += x;
        sy += s;
        sxx += x * x;
        sxy += x * s;
        m += 1;
    }
    const double denom = m * sxx - sx * sx;
    const double slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    est.fitted_limit = (sy - slope * sx) / m;
    est.tail_max = tail_max;
    est.value = std::max({tail_max, est.fitted_limit, 0.0});
    // Superquadratic decay: s_k increases across the window without the 1/k flattening of a finite
    // limit.  For s_k = L + m/k the rise over the second half of the window is half the rise over the
    // first; for s_k ~ k^a it is at least 0.84 of it when a >= 1/2.
    const std::size_t mid = (est.window_first + est.window_last) / 2;
    const double first = est.samples[est.window_first - 1];
    const double middle = est.samples[mid - 1];
    const double last = est.samples[est.window_last - 1];
    bool nondecreasing = true;
    for (std::size_t k = est.window_first; k < est.window_last; ++k)
        nondecreasing = nondecreasing && est.samples[k] >= est.samples[k - 1];
    const double rise_early = middle - first, rise_late = last - middle;
    est.infinite = nondecreasing && last > 0.0 && rise_early > 1e-9 * std::fabs(last) && rise_late >= 0.75 * rise_early;
    if (est.infinite)
        est.value = std::numeric_limits<double>::infinity();
    return est;
}

inline MinimalTimeEstimate minimal_time(std::span<const double> beta)
{
    std::vector<double> logs;
    logs.reserve(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] == 0.0)
            throw Error(ErrorKind::ZeroPerturbation,
                        "beta_" + std::to_string(i + 1) + " = 0: the perturbed and unperturbed spectra intersect");
        logs.push_back(std::log(std::fabs(beta[i])));
    }
    return minimal_time_from_logs(logs);
}

} // namespace momentlab
