// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "momentlab/cli.hpp"
#include "momentlab/io.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace momentlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, double limit_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && dt >= limit_s) {
        o.pass = false;
        o.detail += " runtime over " + fmt(limit_s) + " s";
    }
    if (!o.pass)
        ++failures;
    std::printf("criterion %2d: %s  %s (%.2f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), dt);
    std::fflush(stdout);
}

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::vector<double> discrete_min_norms(const std::vector<double>& lambda, double T, int intervals)
{
    using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const int n = static_cast<int>(lambda.size());
    const long double h = static_cast<long double>(T) / intervals;
    Mat a(n, intervals + 1);
    for (int i = 0; i <= intervals; ++i) {
        const long double w = h / 3 * (i == 0 || i == intervals ? 1 : (i % 2 ? 4 : 2));
        for (int j = 0; j < n; ++j)
            a(j, i) = std::sqrt(w) * std::exp(-static_cast<long double>(lambda[static_cast<std::size_t>(j)]) * h * i);
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
    std::vector<double> out;
    for (int k = 0; k < n; ++k) {
        Vec e = Vec::Zero(n);
        e(k) = 1;
        out.push_back(static_cast<double>(cod.solve(e).norm()));
    }
    return out;
}

double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

FitOptions unconverged_ok()
{
    FitOptions o;
    o.min_converged = 0;
    return o;
}

std::size_t converged_count(const CostCurve& c)
{
    std::size_t n = 0;
    for (const auto& s : c.samples)
        n += s.converged ? 1 : 0;
    return n;
}

std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[e.path().filename().string()] = ss.str();
    }
    return files;
}

} // namespace

int main()
{
    criterion(1, 10, [] {
        const auto fam = biorthogonal_family(heat_sequence(15), 0.5, 15, 512);
        const double d = verify_biorthogonality(fam);
        return Outcome{d <= 1e-20, "defect=" + num(d)};
    });

    criterion(2, 60, [] {
        double worst = 0;
        for (double T : {0.25, 0.5, 1.0})
            for (std::size_t N = 1; N <= 6; ++N) {
                const auto fam = biorthogonal_family(heat_sequence(N), T, N);
                std::vector<double> lam;
                for (std::size_t k = 1; k <= N; ++k)
                    lam.push_back(static_cast<double>(k * k));
                const auto oracle = discrete_min_norms(lam, T, 4000);
                for (std::size_t k = 0; k < N; ++k)
                    worst = std::max(worst, std::fabs(std::exp(fam.log_norm(k)) / oracle[k] - 1));
            }
        return Outcome{worst <= 0.01, "max relative deviation=" + num(worst)};
    });

    criterion(3, 20, [] {
        const auto seq = heat_sequence(50);
        const auto fam = biorthogonal_family_escalating(seq, 1.0, 25);
        const auto v = synthesize_control(fam, moments_from_initial_data(seq, {{1, 0}}, 1.0, 25, fam.precision_bits()));
        const auto rep = verify_null_control(moments_from_initial_data(seq, {{1, 0}}, 1.0, 50, v.precision_bits), v);
        const double rel = rep.max_controlled / rep.initial_norm;
        const bool ok = rel <= 1e-12 && rep.spillover_decays() && rep.residuals.size() == 50;
        return Outcome{ok, "controlled=" + num(rel) + " spillover max=" + num(rep.max_spillover) + " envelope " +
                               num(rep.envelope[25]) + " -> " + num(rep.envelope[49])};
    });

    criterion(4, 300, [] {
        const auto curve = cost_sweep(heat_sequence(25), default_time_grid(), 25);
        const auto f = fit_scaling(curve, ScalingModel::A, 0.0, unconverged_ok());
        CostCurve lo = curve, hi = curve;
        lo.samples.assign(curve.samples.begin(), curve.samples.begin() + 6);
        hi.samples.assign(curve.samples.begin() + 6, curve.samples.end());
        const double b_lo = fit_scaling(lo, ScalingModel::A, 0.0, unconverged_ok()).b;
        const double b_hi = fit_scaling(hi, ScalingModel::A, 0.0, unconverged_ok()).b;
        const bool stable = b_lo > 0 && b_hi > 0 && std::max(b_lo, b_hi) / std::min(b_lo, b_hi) <= 4;
        const bool ok = f.b > 0 && f.r_squared >= 0.99 && stable;
        return Outcome{ok, "b=" + num(f.b) + " R2=" + num(f.r_squared) + " b halves " + num(b_lo) + "/" + num(b_hi) +
                               " converged " + std::to_string(converged_count(curve)) + "/12"};
    });

    criterion(5, 600, [] {
        const auto grid = default_time_grid();
        const auto c75 = cost_sweep(condensing_sequence(0.75, 60), grid, 60);
        const auto b75 = fit_scaling(c75, ScalingModel::B, 0.75, unconverged_ok());
        const bool dominant = b75.term_power(0.05) > b75.term_inverse_t(0.05);
        const auto c25 = cost_sweep(condensing_sequence(0.25, 60), grid, 60);
        const auto a25 = fit_scaling(c25, ScalingModel::A, 0.0, unconverged_ok());
        const auto b25 = fit_scaling(c25, ScalingModel::B, 0.25, unconverged_ok());
        const double dr2 = b25.r_squared - a25.r_squared;
        const bool ok = b75.c > 0 && dominant && dr2 <= 0.005;
        return Outcome{ok, "gamma=0.75: c=" + num(b75.c) + " b=" + num(b75.b) + " c/T^3 vs b/T at 0.05: " +
                               num(b75.term_power(0.05)) + " vs " + num(b75.term_inverse_t(0.05)) +
                               "; gamma=0.25: R2 A=" + num(a25.r_squared) + " B=" + num(b25.r_squared) +
                               " dR2=" + num(dr2)};
    });

    criterion(6, 120, [] {
        const double gamma = 0.75;
        const auto fam = biorthogonal_family_escalating(condensing_sequence(gamma, 30), 0.3, 30);
        const auto rep = norm_bound_report(fam, 2);
        std::vector<double> x;
        for (std::size_t k = 1; k <= 30; ++k)
            x.push_back(std::pow(std::ceil(static_cast<double>(k) / 2.0), 2 * gamma));
        const double s = slope(x, rep.raw_log_norm);
        const bool ok = std::fabs(s - 1) <= 0.15 && std::isfinite(rep.constant) && rep.constant > 0;
        return Outcome{ok, "slope=" + num(s) + " C=" + num(rep.constant)};
    });

    criterion(7, 5, [] {
        const auto h = check_hypotheses(heat_sequence(50), 1);
        const bool heat_ok = h.all_pass() && h.rho == 1.0 && h.beta == 0.0 && h.counting_p >= 0.95 &&
                             h.counting_p <= 1.05 && h.counting_alpha <= 1.1;
        const auto seq = condensing_sequence(0.5, 200);
        const auto q1 = check_hypotheses(seq, 1);
        const auto q2 = check_hypotheses(seq, 2);
        const bool cond_ok = !q1.item(6).pass && q1.c0 <= std::exp(-10.0) && q2.item(5).pass && q2.rho > 0;
        return Outcome{heat_ok && cond_ok, "heat rho=" + num(h.rho) + " beta=" + num(h.beta) + " p=" +
                                               num(h.counting_p) + " alpha=" + num(h.counting_alpha) +
                                               "; condensing c0=" + num(q1.c0) + " rho(q=2)=" + num(q2.rho)};
    });

    criterion(8, 1, [] {
        PhaseFieldParams bad{Parameter(1.0), Parameter::parse("2/3"), Parameter(1.0)};
        const auto flagged = check_h2(bad, 50, true);
        const bool has12 = std::find(flagged.begin(), flagged.end(), H2Pair{1, 2}) != flagged.end();
        const auto clean = check_h2({}, 50, true);
        return Outcome{has12 && clean.empty(), "rho=2/3 pairs=" + std::to_string(flagged.size()) +
                                                   " unit pairs=" + std::to_string(clean.size())};
    });

    criterion(9, 1, [] {
        std::vector<double> quad, lin;
        for (int k = 1; k <= 200; ++k) {
            quad.push_back(-2.0 * k * k);
            lin.push_back(-static_cast<double>(k));
        }
        const double t2 = minimal_time_from_logs(quad).value;
        const double t0 = minimal_time_from_logs(lin).value;
        return Outcome{std::fabs(t2 / 2 - 1) <= 0.05 && t0 <= 0.05, "T0(e^{-2k^2})=" + num(t2) +
                                                                       " T0(e^{-k})=" + num(t0)};
    });

    criterion(10, 0, [] {
        const fs::path out = fs::temp_directory_path() / "momentlab_acceptance_det";
        fs::remove_all(out);
        const std::string scenario = std::string(MOMENTLAB_SOURCE_DIR) + "/scenarios/heat.json";
        const std::string cmd =
            std::string(MOMENTLAB_CLI_PATH) + " pipeline --scenario " + scenario + " --out " + out.string() + " > /dev/null";
        if (std::system(cmd.c_str()) != 0)
            return Outcome{false, "first pipeline run failed"};
        const auto first = snapshot(out);
        if (std::system(cmd.c_str()) != 0)
            return Outcome{false, "second pipeline run failed"};
        const auto second = snapshot(out);
        fs::remove_all(out);
        return Outcome{first == second && first.size() >= 10,
                       std::to_string(first.size()) + " artifacts, identical=" + (first == second ? "yes" : "no")};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
