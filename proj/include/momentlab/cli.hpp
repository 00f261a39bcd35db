#pragma once

// Batch front end: eigs, check, biorthogonal, synthesize, verify, cost-sweep, fit, pipeline.
//
// Exit status: 0 success, 2 validation error, 3 numerical failure, 4 hypothesis FAIL under --strict.

#include "momentlab/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace momentlab::cli {

enum Exit : int { Ok = 0, Internal = 1, Validation = 2, Numerical = 3, HypothesisFail = 4 };

inline int exit_code(const Error& e)
{
    return e.numerical() ? Numerical : Validation;
}

inline void report_error(std::ostream& err, int code, const std::string& kind, const std::string& message,
                         const std::string& field = {})
{
    nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}};
    if (!field.empty())
        j["error"]["field"] = field;
    err << j.dump() << "\n";
}

struct HypothesisGateFailure {
    HypothesisReport report;
};

class Runner {
public:
    Runner(Scenario sc, bool strict, std::ostream& out) : sc_(std::move(sc)), strict_(strict), out_(out)
    {
        ctx_.scenario_hash = sc_.hash();
        ctx_.dir = sc_.output_dir;
        std::error_code ec;
        std::filesystem::create_directories(ctx_.dir, ec);
        if (ec || !std::filesystem::is_directory(ctx_.dir))
            throw FieldError("output_dir", "cannot create directory " + ctx_.dir.string());
    }

    const EigenvalueSequence& eigs()
    {
        if (!seq_) {
            seq_ = generate(sc_.system, sc_.n_max);
            emit("sequence.csv", sequence_csv(ctx_, *seq_));
        }
        return *seq_;
    }

    const HypothesisReport& check()
    {
        if (!report_) {
            report_ = check_hypotheses(eigs(), sc_.q);
            write_json(ctx_.dir / "hypotheses.json", hypotheses_json(ctx_, *report_));
            note("hypotheses.json");
            out_ << hypotheses_table(*report_);
        }
        return *report_;
    }

    /// Under --strict, stops before any cost computation on a sequence that fails the hypotheses.
    void gate()
    {
        if (strict_ && !check().all_pass())
            throw HypothesisGateFailure{*report_};
    }

    const BiorthogonalFamily& biorthogonal()
    {
        if (!family_) {
            family_ = biorthogonal_family_escalating(eigs(), sc_.horizon, sc_.modes,
                                                     {sc_.precision_bits, sc_.max_precision_bits, 1e-20});
            emit("family.csv", family_csv(ctx_, *family_));
            write_json(ctx_.dir / "family.json", family_json(ctx_, *family_));
            note("family.json");
        }
        return *family_;
    }

    const ControlSignal& synthesize()
    {
        if (!control_) {
            const auto& fam = biorthogonal();
            const MomentProblem prob =
                moments_from_initial_data(eigs(), sc_.y0, sc_.horizon, sc_.modes, fam.precision_bits());
            control_ = synthesize_control(fam, prob);
            emit("control.csv", control_csv(ctx_, *control_, sc_.samples));
            write_json(ctx_.dir / "control.json", control_json(ctx_, *control_));
            note("control.json");
        }
        return *control_;
    }

    const NullControlReport& verify()
    {
        if (!verify_) {
            const auto& v = synthesize();
            const MomentProblem full =
                moments_from_initial_data(eigs(), sc_.y0, sc_.horizon, sc_.n_check, v.precision_bits);
            verify_ = verify_null_control(full, v);
            emit("verify.csv", verify_csv(ctx_, *verify_));
            write_json(ctx_.dir / "verify.json", verify_json(ctx_, *verify_));
            note("verify.json");
            char line[160];
            std::snprintf(line, sizeof line, "controlled residual %s (relative %s), spillover max %s, decays %s\n",
                          fmt(verify_->max_controlled).c_str(),
                          fmt(verify_->max_controlled / std::max(verify_->initial_norm, 1e-300)).c_str(),
                          fmt(verify_->max_spillover).c_str(), verify_->spillover_decays() ? "yes" : "no");
            out_ << line;
        }
        return *verify_;
    }

    const CostCurve& cost_sweep_stage()
    {
        if (!curve_) {
            gate();
            SweepOptions opt;
            opt.start_bits = sc_.precision_bits;
            opt.max_bits = sc_.max_precision_bits;
            opt.threads = sc_.threads;
            curve_ = cost_sweep(eigs(), sc_.t_grid, sc_.modes, opt);
            emit("cost.csv", cost_csv(ctx_, *curve_));
            bool any_failed = false;
            for (const auto& s : curve_->samples)
                any_failed = any_failed || !s.accepted;
            if (any_failed)
                out_ << "warning: some sweep points hit the precision cap\n";
        }
        return *curve_;
    }

    /// Fits the sweep in the output directory when present, otherwise runs it.
    std::vector<FitResult> fit()
    {
        CostCurve curve;
        const auto path = ctx_.dir / "cost.csv";
        if (curve_) {
            curve = *curve_;
        } else if (std::filesystem::exists(path)) {
            gate();
            std::ifstream in(path, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            curve = parse_cost_csv(ss.str(), sc_.system);
        } else {
            curve = cost_sweep_stage();
        }

        // Truncated sweeps rarely meet the convergence flag at desk scale; fit them anyway and report the count.
        FitOptions fo;
        fo.min_converged = 0;
        std::vector<FitResult> fits;
        const bool condensing = sc_.system.kind == SystemKind::Condensing;
        if (sc_.fit != FitChoice::B)
            fits.push_back(fit_scaling(curve, ScalingModel::A, 0.0, fo));
        std::string selected = "A";
        if (condensing && sc_.fit != FitChoice::A) {
            try {
                fits.push_back(fit_scaling(curve, ScalingModel::B, sc_.system.gamma, fo));
                selected = "B";
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::DegenerateDesign || sc_.fit == FitChoice::B)
                    throw;
            }
        }
        if (!fits.empty() && fits.front().samples_converged < 4)
            out_ << "warning: " << fits.front().samples_converged << " of " << curve.samples.size()
                 << " sweep points meet the convergence flag; the fit includes unconverged samples\n";
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& f : fits)
            arr.push_back(fit_json(f));
        write_json(ctx_.dir / "fit.json", {{"meta", ctx_.meta()}, {"selected", selected}, {"fits", arr}});
        note("fit.json");
        emit("cost.gp", plot_script(ctx_, "cost.csv", fits));
        for (const auto& f : fits) {
            char line[200];
            std::snprintf(line, sizeof line, "model %s: a=%s b=%s%s R^2=%s\n", f.model == ScalingModel::A ? "A" : "B",
                          fmt(f.a).c_str(), fmt(f.b).c_str(),
                          f.model == ScalingModel::B ? (" c=" + fmt(f.c)).c_str() : "", fmt(f.r_squared).c_str());
            out_ << line;
        }
        return fits;
    }

    int pipeline()
    {
        eigs();
        check();
        gate();
        verify();
        cost_sweep_stage();
        fit();
        return Ok;
    }

private:
    void note(const std::string& name) { out_ << "wrote " << (ctx_.dir / name).string() << "\n"; }
    void emit(const std::string& name, const std::string& text)
    {
        write_text(ctx_.dir / name, text);
        note(name);
    }

    Scenario sc_;
    bool strict_ = false;
    std::ostream& out_;
    ArtifactContext ctx_;
    std::optional<EigenvalueSequence> seq_;
    std::optional<HypothesisReport> report_;
    std::optional<BiorthogonalFamily> family_;
    std::optional<ControlSignal> control_;
    std::optional<NullControlReport> verify_;
    std::optional<CostCurve> curve_;
};

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"momentlab: biorthogonal families, moment-method null controls and control-cost scaling"};
    app.require_subcommand(1);
    std::string scenario_path;
    Overrides ov;
    bool strict = false;

    const char* names[] = {"eigs", "check", "biorthogonal", "synthesize", "verify", "cost-sweep", "fit", "pipeline"};
    const char* help[] = {"generate the eigenvalue sequence",
                          "check the spectral hypotheses",
                          "build the biorthogonal family",
                          "synthesize the null control",
                          "verify the control by closed-form Duhamel integration",
                          "sweep the truncated control cost over T",
                          "fit scaling laws to the cost sweep",
                          "run every stage"};
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(names); ++i) {
        CLI::App* s = app.add_subcommand(names[i], help[i]);
        s->add_option("--scenario", scenario_path, "scenario JSON file")->required();
        s->add_option_function<std::string>("--out", [&](const std::string& v) { ov.out = v; }, "output directory");
        s->add_option_function<long>("--precision-bits", [&](const long& v) { ov.precision_bits = v; },
                                     "starting precision in bits");
        s->add_option_function<std::size_t>("--n", [&](const std::size_t& v) { ov.modes = v; }, "controlled modes N");
        s->add_option_function<std::size_t>("--q", [&](const std::size_t& v) { ov.q = v; }, "gap window q");
        s->add_flag("--strict", strict, "fail on hypothesis violations and refuse cost runs on them");
        subs.push_back(s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        report_error(err, Validation, "UsageError", e.what());
        return Validation;
    }

    std::string command;
    for (std::size_t i = 0; i < subs.size(); ++i)
        if (subs[i]->parsed())
            command = names[i];

    try {
        Runner r(load_scenario(scenario_path, ov), strict, out);
        if (command == "eigs") {
            r.eigs();
        } else if (command == "check") {
            r.check();
            r.gate();
        } else if (command == "biorthogonal") {
            r.biorthogonal();
        } else if (command == "synthesize") {
            r.synthesize();
        } else if (command == "verify") {
            r.verify();
        } else if (command == "cost-sweep") {
            r.cost_sweep_stage();
        } else if (command == "fit") {
            r.fit();
        } else {
            return r.pipeline();
        }
        return Ok;
    } catch (const HypothesisGateFailure& g) {
        std::string failed;
        for (const auto& v : g.report.verdicts)
            if (!v.pass)
                failed += (failed.empty() ? "" : ", ") + v.name;
        report_error(err, HypothesisFail, "HypothesisFailure", "hypotheses failed under --strict: " + failed);
        return HypothesisFail;
    } catch (const FieldError& e) {
        report_error(err, Validation, std::string(to_string(e.kind())), e.what(), e.field());
        return Validation;
    } catch (const Error& e) {
        const int code = exit_code(e);
        report_error(err, code, std::string(to_string(e.kind())), e.what());
        return code;
    } catch (const std::exception& e) {
        report_error(err, Internal, "Internal", e.what());
        return Internal;
    }
}

} // namespace momentlab::cli
