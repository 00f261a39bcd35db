#pragma once

// Scenario documents and artifact writers (CSV tables, JSON reports, gnuplot scripts).

#include "momentlab/biorthogonal.hpp"
#include "momentlab/control.hpp"
#include "momentlab/cost.hpp"
#include "momentlab/error.hpp"
#include "momentlab/hypotheses.hpp"
#include "momentlab/spectra.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace momentlab {

inline constexpr const char* version = "0.3.0";

inline nlohmann::json module_versions()
{
    return {{"spectra", "0.3.0"},      {"hypotheses", "0.3.0"}, {"biorthogonal", "0.3.0"},
            {"control", "0.3.0"},      {"cost", "0.3.0"},       {"cli", "0.3.0"}};
}

/// Validation failure tied to one scenario field.
class FieldError : public Error {
public:
    FieldError(std::string field, const std::string& message)
        : Error(ErrorKind::InvalidArgument, field + ": " + message), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

inline std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

/// Shortest round-trip spelling of a double.
inline std::string fmt(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x)
            break;
    }
    return buf;
}

// ---------------------------------------------------------------------------
// Scenario

enum class FitChoice { Auto, A, B };

struct Scenario {
    SystemSpec system;
    std::size_t n_max = 50;           ///< sequence length (sine modes for phase-field)
    double horizon = 1.0;             ///< T for biorthogonal / synthesize / verify
    std::vector<double> t_grid;       ///< cost sweep times
    std::size_t modes = 25;           ///< N
    long precision_bits = 512;
    long max_precision_bits = 8192;
    std::size_t q = 1;
    std::vector<std::complex<double>> y0{{1.0, 0.0}};
    std::size_t n_check = 50;
    std::string output_dir = "out";
    std::size_t samples = 201;        ///< control sampling resolution
    FitChoice fit = FitChoice::Auto;
    unsigned threads = 1;

    nlohmann::json raw; ///< effective document (after overrides); hashed into every artifact

    std::string hash() const { return hex64(fnv1a(raw.dump())); }
};

namespace detail {

inline Parameter parse_parameter(const nlohmann::json& j, const std::string& field)
{
    try {
        if (j.is_string())
            return Parameter::parse(j.get<std::string>());
        if (j.is_number())
            return Parameter(j.get<double>());
    } catch (const std::exception& e) {
        throw FieldError(field, e.what());
    }
    throw FieldError(field, "expected a number or a rational string");
}

inline double number(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_number())
        throw FieldError(field, "expected a number");
    return j.get<double>();
}

inline long integer(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_number_integer())
        throw FieldError(field, "expected an integer");
    return j.get<long>();
}

inline std::complex<double> complex_value(const nlohmann::json& j, const std::string& field)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw FieldError(field, "expected a number or a [re, im] pair");
}

inline std::vector<std::complex<double>> complex_list(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_array())
        throw FieldError(field, "expected an array");
    std::vector<std::complex<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(complex_value(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

} // namespace detail

/// {"kind": ..., "params": {...}, "n_max": ...}
inline SystemSpec system_from_json(const nlohmann::json& j, std::size_t* n_max = nullptr)
{
    if (!j.is_object())
        throw FieldError("system", "expected an object");
    if (!j.contains("kind") || !j["kind"].is_string())
        throw FieldError("system.kind", "missing or not a string");
    const std::string kind = j["kind"].get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    if (!params.is_object())
        throw FieldError("system.params", "expected an object");
    SystemSpec spec;
    if (kind == "heat") {
        spec = SystemSpec::heat();
    } else if (kind == "complex2x2") {
        spec = SystemSpec::complex2x2();
    } else if (kind == "phase_field") {
        auto get = [&](const char* name) {
            const std::string field = std::string("system.params.") + name;
            if (!params.contains(name))
                throw FieldError(field, "missing");
            return detail::parse_parameter(params[name], field);
        };
        spec = SystemSpec::phase(get("xi"), get("rho"), get("tau"));
    } else if (kind == "condensing") {
        if (!params.contains("gamma"))
            throw FieldError("system.params.gamma", "missing");
        spec = SystemSpec::condensing(detail::number(params["gamma"], "system.params.gamma"));
        if (!(spec.gamma > 0.0 && spec.gamma < 1.0))
            throw FieldError("system.params.gamma", "must lie strictly inside (0, 1)");
    } else if (kind == "custom") {
        if (!params.contains("values"))
            throw FieldError("system.params.values", "missing");
        auto values = detail::complex_list(params["values"], "system.params.values");
        std::vector<std::complex<double>> obs;
        if (params.contains("observations"))
            obs = detail::complex_list(params["observations"], "system.params.observations");
        spec = SystemSpec::custom(std::move(values), std::move(obs));
    } else {
        throw FieldError("system.kind", "unknown kind '" + kind + "'");
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        throw FieldError("system.params", e.what());
    }
    if (n_max) {
        if (j.contains("n_max")) {
            const long n = detail::integer(j["n_max"], "system.n_max");
            if (n < 1)
                throw FieldError("system.n_max", "must be at least 1");
            *n_max = static_cast<std::size_t>(n);
        } else if (spec.kind == SystemKind::Custom) {
            *n_max = spec.custom_values.size();
        }
    }
    return spec;
}

struct Overrides {
    std::optional<std::string> out;
    std::optional<long> precision_bits;
    std::optional<std::size_t> modes;
    std::optional<std::size_t> q;
};

/// Applies overrides to the document, then validates every field.
inline Scenario scenario_from_json(nlohmann::json doc, const Overrides& ov = {})
{
    if (!doc.is_object())
        throw FieldError("scenario", "expected a JSON object");
    if (ov.out)
        doc["output_dir"] = *ov.out;
    if (ov.precision_bits)
        doc["precision_bits"] = *ov.precision_bits;
    if (ov.modes)
        doc["modes"] = *ov.modes;
    if (ov.q)
        doc["q"] = *ov.q;

    Scenario sc;
    if (!doc.contains("system"))
        throw FieldError("system", "missing");
    sc.system = system_from_json(doc["system"], &sc.n_max);

    if (doc.contains("horizon")) {
        sc.horizon = detail::number(doc["horizon"], "horizon");
        if (!(sc.horizon > 0.0) || !std::isfinite(sc.horizon))
            throw FieldError("horizon", "must be a positive finite number");
    }
    if (doc.contains("t_grid")) {
        const auto& g = doc["t_grid"];
        if (g.is_array()) {
            for (std::size_t i = 0; i < g.size(); ++i)
                sc.t_grid.push_back(detail::number(g[i], "t_grid[" + std::to_string(i) + "]"));
        } else if (g.is_object()) {
            const double lo = detail::number(g.value("lo", nlohmann::json(0.04)), "t_grid.lo");
            const double hi = detail::number(g.value("hi", nlohmann::json(0.8)), "t_grid.hi");
            const long pts = detail::integer(g.value("points", nlohmann::json(12)), "t_grid.points");
            if (!(lo > 0.0 && hi > lo))
                throw FieldError("t_grid", "need 0 < lo < hi");
            if (pts < 6)
                throw FieldError("t_grid.points", "need at least 6 points");
            sc.t_grid = default_time_grid(static_cast<std::size_t>(pts), lo, hi);
        } else {
            throw FieldError("t_grid", "expected an array or {lo, hi, points}");
        }
    } else {
        sc.t_grid = default_time_grid();
    }
    for (std::size_t i = 0; i < sc.t_grid.size(); ++i)
        if (!(sc.t_grid[i] > 0.0) || !std::isfinite(sc.t_grid[i]))
            throw FieldError("t_grid[" + std::to_string(i) + "]", "must be a positive finite number");
    if (sc.t_grid.size() < 6)
        throw FieldError("t_grid", "need at least 6 points");

    if (doc.contains("modes")) {
        const long n = detail::integer(doc["modes"], "modes");
        if (n < 1)
            throw FieldError("modes", "must be at least 1");
        sc.modes = static_cast<std::size_t>(n);
    }
    if (doc.contains("precision_bits")) {
        sc.precision_bits = detail::integer(doc["precision_bits"], "precision_bits");
        if (sc.precision_bits < 64 || sc.precision_bits > (1L << 20))
            throw FieldError("precision_bits", "must lie in [64, 2^20]");
    }
    if (doc.contains("max_precision_bits")) {
        sc.max_precision_bits = detail::integer(doc["max_precision_bits"], "max_precision_bits");
        if (sc.max_precision_bits < sc.precision_bits)
            throw FieldError("max_precision_bits", "must be at least precision_bits");
    }
    sc.max_precision_bits = std::max(sc.max_precision_bits, sc.precision_bits);
    if (doc.contains("q")) {
        const long q = detail::integer(doc["q"], "q");
        if (q < 1)
            throw FieldError("q", "must be at least 1");
        sc.q = static_cast<std::size_t>(q);
    }
    if (doc.contains("y0"))
        sc.y0 = detail::complex_list(doc["y0"], "y0");
    if (doc.contains("n_check")) {
        const long n = detail::integer(doc["n_check"], "n_check");
        if (n < 1)
            throw FieldError("n_check", "must be at least 1");
        sc.n_check = static_cast<std::size_t>(n);
    }
    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty())
            throw FieldError("output_dir", "expected a non-empty string");
        sc.output_dir = doc["output_dir"].get<std::string>();
    }
    if (doc.contains("samples")) {
        const long n = detail::integer(doc["samples"], "samples");
        if (n < 2)
            throw FieldError("samples", "must be at least 2");
        sc.samples = static_cast<std::size_t>(n);
    }
    if (doc.contains("fit")) {
        if (!doc["fit"].is_string())
            throw FieldError("fit", "expected \"auto\", \"A\" or \"B\"");
        const std::string f = doc["fit"].get<std::string>();
        if (f == "auto")
            sc.fit = FitChoice::Auto;
        else if (f == "A")
            sc.fit = FitChoice::A;
        else if (f == "B")
            sc.fit = FitChoice::B;
        else
            throw FieldError("fit", "expected \"auto\", \"A\" or \"B\"");
        if (sc.fit == FitChoice::B && sc.system.kind != SystemKind::Condensing)
            throw FieldError("fit", "model B needs a condensing system (gamma)");
    }
    if (doc.contains("threads")) {
        const long t = detail::integer(doc["threads"], "threads");
        if (t < 1 || t > 256)
            throw FieldError("threads", "must lie in [1, 256]");
        sc.threads = static_cast<unsigned>(t);
    }

    // Cross-field checks against the sequence length.
    const std::size_t length = sc.system.kind == SystemKind::PhaseField ? 2 * sc.n_max : sc.n_max;
    if (sc.modes > length)
        throw FieldError("modes", "exceeds the sequence length " + std::to_string(length));
    if (sc.n_check > length)
        throw FieldError("n_check", "exceeds the sequence length " + std::to_string(length));
    if (sc.n_check < sc.modes)
        throw FieldError("n_check", "must be at least modes");
    if (sc.y0.size() > sc.modes)
        throw FieldError("y0", "more coefficients than controlled modes");
    sc.raw = std::move(doc);
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path, const Overrides& ov = {})
{
    std::ifstream in(path);
    if (!in)
        throw FieldError("scenario", "cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FieldError("scenario", std::string("malformed JSON: ") + e.what());
    }
    return scenario_from_json(std::move(doc), ov);
}

// ---------------------------------------------------------------------------
// Artifacts

struct ArtifactContext {
    std::string scenario_hash;
    std::filesystem::path dir;

    nlohmann::json meta() const
    {
        return {{"tool", "momentlab"}, {"version", version}, {"scenario_hash", scenario_hash},
                {"modules", module_versions()}};
    }
    std::string csv_banner() const
    {
        return "# momentlab " + std::string(version) + " scenario=" + scenario_hash + "\n";
    }
};

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::InvalidArgument, "output_dir: cannot write " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorKind::InvalidArgument, "output_dir: write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    write_text(path, j.dump(2) + "\n");
}

inline std::string sequence_csv(const ArtifactContext& ctx, const EigenvalueSequence& seq)
{
    std::ostringstream os;
    os << ctx.csv_banner() << "k,re,im\n";
    for (std::size_t i = 0; i < seq.size(); ++i)
        os << i + 1 << ',' << seq.values[i].re.to_string(20) << ',' << seq.values[i].im.to_string(20) << '\n';
    return os.str();
}

inline nlohmann::json hypotheses_json(const ArtifactContext& ctx, const HypothesisReport& r)
{
    nlohmann::json items = nlohmann::json::array();
    for (const auto& v : r.verdicts)
        items.push_back({{"name", v.name}, {"pass", v.pass}, {"value", v.value}, {"detail", v.detail}});
    return {{"meta", ctx.meta()},
            {"q", r.q},
            {"n_checked", r.n_checked},
            {"constants",
             {{"min_distance", r.min_distance},
              {"min_real", r.min_real},
              {"beta", r.beta},
              {"monotone_violations", r.monotone_violations},
              {"rho", r.rho},
              {"c0", r.c0},
              {"counting_p", r.counting_p},
              {"counting_alpha", r.counting_alpha}}},
            {"all_pass", r.all_pass()},
            {"items", items}};
}

/// Fixed-order console table, one row per hypothesis.
inline std::string hypotheses_table(const HypothesisReport& r)
{
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-3s %-18s %-6s %s\n", "#", "hypothesis", "result", "value");
    os << line;
    for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
        const auto& v = r.verdicts[i];
        std::snprintf(line, sizeof line, "%-3zu %-18s %-6s %-14s %s\n", i + 1, v.name.c_str(),
                      v.pass ? "PASS" : "FAIL", fmt(v.value).c_str(), v.detail.c_str());
        os << line;
    }
    return os.str();
}

inline std::string family_csv(const ArtifactContext& ctx, const BiorthogonalFamily& fam)
{
    WorkingPrecision wp(fam.precision_bits());
    std::ostringstream os;
    os << ctx.csv_banner() << "k,log10_norm,residual\n";
    for (std::size_t k = 0; k < fam.size(); ++k) {
        ComplexVector e(fam.size());
        e[k] = Complex(1.0);
        ComplexVector a(fam.size());
        for (std::size_t n = 0; n < fam.size(); ++n)
            a[n] = fam.coeffs(k, n);
        const ComplexVector ga = fam.gram.entries * a;
        Real r(0);
        for (std::size_t n = 0; n < fam.size(); ++n)
            r = max(r, abs(ga[n] - e[n]));
        os << k + 1 << ',' << fmt(fam.norms[k].log10()) << ',' << r.to_string(6) << '\n';
    }
    return os.str();
}

inline nlohmann::json complex_hex(const Complex& z) { return nlohmann::json::array({z.re.to_hex(), z.im.to_hex()}); }

inline nlohmann::json family_json(const ArtifactContext& ctx, const BiorthogonalFamily& fam)
{
    nlohmann::json lambda = nlohmann::json::array(), coeffs = nlohmann::json::array(),
                   norms = nlohmann::json::array();
    for (const auto& l : fam.lambda())
        lambda.push_back(complex_hex(l));
    for (std::size_t k = 0; k < fam.size(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t n = 0; n < fam.size(); ++n)
            row.push_back(complex_hex(fam.coeffs(k, n)));
        coeffs.push_back(std::move(row));
        norms.push_back(fam.norms[k].log10());
    }
    return {{"meta", ctx.meta()},
            {"encoding", "base-16 MPFR strings 0.<mantissa>@<exponent> (value = 0.m * 16^exponent)"},
            {"basis", "q_k(t) = sum_n coefficients[k][n] exp(-conj(lambda_n) t)"},
            {"horizon", fam.horizon().to_hex()},
            {"horizon_decimal", fam.horizon().to_double()},
            {"precision_bits", fam.precision_bits()},
            {"max_residual", fam.max_residual.to_string(6)},
            {"lambda", lambda},
            {"log10_norms", norms},
            {"coefficients", coeffs}};
}

inline std::string control_csv(const ArtifactContext& ctx, const ControlSignal& v, std::size_t samples)
{
    std::ostringstream os;
    os << ctx.csv_banner() << "t,v,v_imag\n";
    const double T = v.horizon.to_double();
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(samples - 1);
        const auto val = v(t);
        os << fmt(t) << ',' << fmt(val.real()) << ',' << fmt(val.imag()) << '\n';
    }
    return os.str();
}

inline nlohmann::json control_json(const ArtifactContext& ctx, const ControlSignal& v)
{
    nlohmann::json lambda = nlohmann::json::array(), coeffs = nlohmann::json::array();
    for (std::size_t n = 0; n < v.coeffs.size(); ++n) {
        lambda.push_back(complex_hex(v.lambda[n]));
        coeffs.push_back(complex_hex(v.coeffs[n]));
    }
    return {{"meta", ctx.meta()},
            {"encoding", "base-16 MPFR strings 0.<mantissa>@<exponent> (value = 0.m * 16^exponent)"},
            {"representation", "v(t) = sum_n coefficients[n] exp(-conj(lambda_n) (T - t))"},
            {"horizon", v.horizon.to_hex()},
            {"horizon_decimal", v.horizon.to_double()},
            {"precision_bits", v.precision_bits},
            {"symmetrized", v.symmetrized},
            {"log10_norm", v.norm.log_abs() / std::log(10.0)},
            {"lambda", lambda},
            {"coefficients", coeffs}};
}

inline std::string verify_csv(const ArtifactContext& ctx, const NullControlReport& r)
{
    std::ostringstream os;
    os << ctx.csv_banner() << "k,abs_y_T,envelope\n";
    for (std::size_t k = 0; k < r.residuals.size(); ++k)
        os << k + 1 << ',' << fmt(r.residuals[k]) << ',' << fmt(r.envelope[k]) << '\n';
    return os.str();
}

inline nlohmann::json verify_json(const ArtifactContext& ctx, const NullControlReport& r)
{
    return {{"meta", ctx.meta()},
            {"controlled", r.controlled},
            {"checked", r.residuals.size()},
            {"initial_norm", r.initial_norm},
            {"max_controlled_residual", r.max_controlled},
            {"relative_controlled_residual", r.initial_norm > 0 ? r.max_controlled / r.initial_norm : r.max_controlled},
            {"max_spillover", r.max_spillover},
            {"spillover_decays", r.spillover_decays()}};
}

inline std::string cost_csv(const ArtifactContext& ctx, const CostCurve& c)
{
    std::ostringstream os;
    os << ctx.csv_banner() << "T,log10_K,N,precision,converged\n";
    for (const auto& s : c.samples)
        os << fmt(s.horizon) << ',' << fmt(s.accepted ? s.log_cost / std::log(10.0) : std::nan("")) << ','
           << s.modes << ',' << s.precision_bits << ',' << (s.converged ? 1 : 0) << '\n';
    return os.str();
}

/// Reads a cost CSV back (comment lines and the header are skipped).
inline CostCurve parse_cost_csv(const std::string& text, const SystemSpec& system)
{
    CostCurve c;
    c.system = system;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ls(line);
        std::string f[5];
        for (auto& x : f)
            if (!std::getline(ls, x, ','))
                throw FieldError("cost.csv", "malformed row: " + line);
        CostSample s;
        s.horizon = std::stod(f[0]);
        const double l10 = std::strtod(f[1].c_str(), nullptr);
        s.accepted = std::isfinite(l10);
        s.log_cost = l10 * std::log(10.0);
        s.modes = static_cast<std::size_t>(std::stoul(f[2]));
        s.precision_bits = std::stol(f[3]);
        s.converged = f[4] == "1";
        c.samples.push_back(s);
    }
    return c;
}

inline nlohmann::json fit_json(const FitResult& f)
{
    nlohmann::json j = {{"model", f.model == ScalingModel::A ? "A" : "B"},
                        {"a", f.a},
                        {"b", f.b},
                        {"r_squared", f.r_squared},
                        {"samples_used", f.samples_used},
                        {"samples_converged", f.samples_converged}};
    if (f.model == ScalingModel::B) {
        j["c"] = f.c;
        j["gamma"] = f.gamma;
        j["exponent"] = f.exponent;
    }
    j["formula"] = f.model == ScalingModel::A ? "log K = a + b/T" : "log K = a + b/T + c T^(-exponent)";
    return j;
}

/// gnuplot script drawing the sampled log10 K(T) and each fitted curve.
inline std::string plot_script(const ArtifactContext& ctx, const std::string& csv_name, const std::vector<FitResult>& fits)
{
    std::ostringstream os;
    os << "# momentlab " << version << " scenario=" << ctx.scenario_hash << "\n"
       << "set datafile separator ','\n"
       << "set logscale x\n"
       << "set xlabel 'T'\n"
       << "set ylabel 'log10 K_N(T)'\n"
       << "set key top right\n";
    std::string plots = "plot '" + csv_name + "' skip 2 using 1:2 with points pt 7 title 'samples'";
    for (const auto& f : fits) {
        const std::string name = f.model == ScalingModel::A ? "A" : "B";
        os << "a" << name << " = " << fmt(f.a) << "\n"
           << "b" << name << " = " << fmt(f.b) << "\n";
        std::string expr = "(a" + name + " + b" + name + "/x";
        if (f.model == ScalingModel::B) {
            os << "cB = " << fmt(f.c) << "\n"
               << "eB = " << fmt(f.exponent) << "\n";
            expr += " + cB*x**(-eB)";
        }
        expr += ")/log(10)";
        plots += ", " + expr + " with lines title 'model " + name + " (R^2=" + fmt(std::round(f.r_squared * 1e4) / 1e4) + ")'";
    }
    os << plots << "\n";
    return os.str();
}

} // namespace momentlab
