#include "martkit/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include "martkit/criteria.hpp"
#include "martkit/martingale.hpp"
#include "martkit/montecarlo.hpp"
#include "martkit/spectral.hpp"

namespace martkit {

const char* to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::Satisfied: return "satisfied";
        case Verdict::SatisfiedWithTailBound: return "satisfied-with-tail-bound";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

namespace {

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

Series exact_series(std::string name, const std::vector<double>& values, double tolerance) {
    Series s{std::move(name), values, {}};
    s.errs.assign(values.size(), tolerance);
    return s;
}

Series from_ints(std::string name, std::span<const int> values) {
    Series s{std::move(name), {}, {}};
    for (const int v : values) s.push(static_cast<double>(v), 0.0);
    return s;
}

void append_criterion(RunReport& out, const CriterionReport& report) {
    out.series.push_back(exact_series(report.name + "_partial", report.partial_sums, 0.0));
    out.series.push_back(Series{report.name + "_tail_bound", {report.tail_bound}, {0.0}});
    for (const auto& detail : report.detail) {
        Series s = detail;
        s.name = report.name + "_" + detail.name;
        out.series.push_back(std::move(s));
    }
    std::string line = report.name + ": " + to_string(report.verdict) +
                       ", certified value " + format_number(report.value());
    if (!report.note.empty()) line += " [" + report.note + "]";
    out.verdicts.push_back(std::move(line));
}

// ---- command bodies -------------------------------------------------------

void run_inspect(RunReport& out, const ChainSpec& spec) {
    const auto& chain = spec.chain;
    std::vector<double> pi(chain.pi().data(), chain.pi().data() + chain.n_states());
    out.series.push_back(exact_series("pi", pi, tol::kResidual));
    std::vector<double> f(spec.observable.values().data(),
                          spec.observable.values().data() + chain.n_states());
    out.series.push_back(exact_series("observable", f, 0.0));

    const StructureFlags flags = structure_flags(chain);
    out.series.push_back(Series{"structure",
                                {flags.reversible ? 1.0 : 0.0, flags.normal ? 1.0 : 0.0},
                                {0.0, 0.0}});
    out.verdicts.push_back(std::string("reversible: ") + (flags.reversible ? "yes" : "no"));
    out.verdicts.push_back(std::string("normal: ") + (flags.normal ? "yes" : "no"));

    const double radius = l20_spectral_radius(chain);
    out.series.push_back(Series{"l20_radius", {radius}, {0.0}});
    const DecayCertificate cert = decay_certificate(chain);
    out.series.push_back(Series{"decay_certificate",
                                {static_cast<double>(cert.power), cert.factor},
                                {0.0, 0.0}});
    out.verdicts.push_back(cert.valid()
                               ? "contraction certificate: ||Q^" +
                                     std::to_string(cert.power) + "|| = " +
                                     format_number(cert.factor) + " on the centered subspace"
                               : "no contraction certificate (centered spectral radius ~1)");

    try {
        const double sigma2 = long_run_variance(chain, spec.observable);
        out.series.push_back(Series{"sigma2", {sigma2}, {tol::kCrossCheck}});
        out.verdicts.push_back("sigma2 = " + format_number(sigma2));
    } catch (const Error& err) {
        out.verdicts.push_back(std::string("sigma2 unavailable: ") + err.what());
    }
}

void run_approx(RunReport& out, const ChainSpec& spec) {
    const auto& chain = spec.chain;
    const auto& f = spec.observable;
    const auto& opt = spec.options;

    out.series.push_back(from_ints("m_grid", opt.m_grid));
    const DifferenceKernel limit = limit_diff_kernel(chain, f);

    Series distances{"diff_distance", {}, {}};
    Series kernel_norms{"diff_kernel_norm_sq", {}, {}};
    for (const int m : opt.m_grid) {
        const DifferenceKernel km = diff_kernel_m(chain, f, m);
        distances.push(diff_distance(chain, km, limit), 0.0);
        kernel_norms.push(km.l2_norm_sq, 0.0);
    }
    out.series.push_back(std::move(distances));
    out.series.push_back(std::move(kernel_norms));

    const double agreement =
        diff_distance(chain, extrapolated_limit_kernel(chain, f, 2048), limit);
    out.series.push_back(Series{"limit_agreement", {agreement}, {0.0}});
    out.verdicts.push_back("sequence limit vs Poisson kernel: distance " +
                           format_number(agreement));

    Series seminorm{"ym_seminorm", {}, {}};
    Series seminorm_plus{"ym_plus", {}, {}};
    const std::vector<int> last_n = {opt.n_grid.back()};
    for (const int m : opt.m_grid) {
        const AveragedCorrector corrector = averaged_corrector(chain, f, m);
        const auto with_max = estimate_seminorm(chain, corrector.y, last_n, opt.replicas,
                                                opt.seed, true);
        seminorm.push(with_max.values[0], with_max.std_errors[0]);
        const auto no_max = estimate_seminorm(chain, corrector.y, last_n, opt.replicas,
                                              opt.seed, false);
        seminorm_plus.push(no_max.values[0], no_max.std_errors[0]);
    }
    out.series.push_back(std::move(seminorm));
    out.series.push_back(std::move(seminorm_plus));

    out.series.push_back(from_ints("residual_n_grid", opt.n_grid));
    const DecayCurve curve =
        residual_decay_curve(chain, f, opt.n_grid, opt.replicas, opt.seed);
    out.series.push_back(Series{"residual_curve", curve.values, curve.std_errors});
    out.verdicts.push_back(
        "residual curve ratio last/first: " +
        format_number(curve.values.front() > 0.0 ? curve.values.back() / curve.values.front()
                                                 : 0.0));
}

void run_criteria(RunReport& out, const ChainSpec& spec) {
    const auto& chain = spec.chain;
    const auto& f = spec.observable;
    constexpr int kTruncation = 64;
    constexpr int kProfileDepth = 16;

    append_criterion(out, maxwell_woodroofe(chain, f, kTruncation));
    append_criterion(out, projective_series(chain, f, kTruncation));
    append_criterion(out, rio_gamma_profile(chain, f, kProfileDepth, kTruncation));
    append_criterion(out, hannan_profile(chain, f, kTruncation));
    append_criterion(out, gap_and_cor2(chain, f, kTruncation));
    append_criterion(out, rho_dyadic_series(chain, std::min(kTruncation, 20)));

    Series rho_series{"rho_n", {}, {}};
    Series alpha_series{"alpha_n", {}, {}};
    bool alpha_bounded = false;
    for (int n = 1; n <= 8; ++n) {
        rho_series.push(rho_coefficient(chain, n), 0.0);
        const AlphaValue alpha = alpha_coefficient(chain, n);
        alpha_series.push(alpha.value, 0.0);
        alpha_bounded = alpha_bounded || alpha.is_upper_bound;
    }
    out.series.push_back(std::move(rho_series));
    out.series.push_back(std::move(alpha_series));
    out.verdicts.push_back(alpha_bounded
                               ? "alpha_n: total-variation upper bounds (state space "
                                 "above the exact enumeration cap)"
                               : "alpha_n: exact event enumeration");

    if (chain.n_states() <= kAlphaExactMaxStates) {
        append_criterion(out, dmr_series(chain, f, 16));
    } else {
        out.verdicts.push_back("dmr: skipped (needs exact alpha, state space too large)");
    }
}

void run_spectral(RunReport& out, const ChainSpec& spec) {
    const auto& chain = spec.chain;
    const auto& f = spec.observable;
    const StructureFlags flags = structure_flags(chain);
    out.verdicts.push_back(std::string("reversible: ") + (flags.reversible ? "yes" : "no"));
    out.verdicts.push_back(std::string("normal: ") + (flags.normal ? "yes" : "no"));
    if (!flags.normal) {
        out.verdicts.push_back("spectral analysis skipped: operator is not normal");
        return;
    }

    const SpectralMeasure measure = spectral_measure(chain, f);
    Series re{"spectrum_re", {}, {}}, im{"spectrum_im", {}, {}}, w{"weights", {}, {}};
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        re.push(measure.points[i].real(), 0.0);
        im.push(measure.points[i].imag(), 0.0);
        w.push(measure.weights[i], 0.0);
    }
    out.series.push_back(std::move(re));
    out.series.push_back(std::move(im));
    out.series.push_back(std::move(w));
    if (measure.conditioning_warning) {
        out.verdicts.push_back("warning: stationary weights below 1e-6; conjugation "
                               "may amplify rounding error");
    }

    out.series.push_back(from_ints("m_grid", spec.options.m_grid));
    Series plus_bounds{"plus_bound", {}, {}};
    Series normcond{"normcond_integral", {}, {}};
    for (const int m : spec.options.m_grid) {
        const NormalBounds bounds = normal_integral_and_bound(measure, m);
        plus_bounds.push(bounds.plus_bound, 0.0);
        if (normcond.values.empty()) normcond.push(bounds.normcond_integral, 0.0);
    }
    out.series.push_back(std::move(normcond));
    out.series.push_back(std::move(plus_bounds));

    if (flags.reversible) {
        const double kv = kv_integral(measure);
        out.series.push_back(Series{"kv_integral", {kv}, {tol::kCrossCheck}});
        out.verdicts.push_back("kv integral = " + format_number(kv));
        Series rev_bounds{"reversible_bound", {}, {}};
        for (const int m : spec.options.m_grid) {
            rev_bounds.push(reversible_seminorm_bound(measure, m), 0.0);
        }
        out.series.push_back(std::move(rev_bounds));
    }

    const int probe = 16;
    const double identity = conditional_norm_identity(chain, f, measure, probe);
    out.verdicts.push_back("conditional norm identity at k = " + std::to_string(probe) +
                           ": " + format_number(identity) + " (spectral == projective)");
}

void run_inequalities(RunReport& out, const ChainSpec& spec) {
    const auto& opt = spec.options;
    const int n = opt.n_grid.back();

    Series lhs{"inequality_lhs", {}, {}};
    Series rhs{"inequality_rhs", {}, {}};
    Series margin{"inequality_margin", {}, {}};
    std::vector<std::string> ids;

    const auto record = [&](const char* id,
                            const std::function<InequalityReport()>& body) {
        try {
            const InequalityReport report = body();
            ids.push_back(report.id);
            lhs.push(report.lhs_estimate, report.lhs_stderr);
            rhs.push(report.rhs_exact, 0.0);
            margin.push(report.margin, 3.0 * report.lhs_stderr);
            out.verdicts.push_back(report.id + ": margin " + format_number(report.margin) +
                                   (report.margin >= 0.0 ? " (holds)" : " (VIOLATED)"));
            if (report.margin < 0.0) ++out.suite_failures;
        } catch (const NotReversible& err) {
            out.verdicts.push_back(std::string(id) + ": skipped (" + err.what() + ")");
        } catch (const NotRegular& err) {
            out.verdicts.push_back(std::string(id) + ": skipped (" + err.what() + ")");
        }
    };

    const auto& chain = spec.chain;
    const auto& f = spec.observable;
    record("rio", [&] { return verify_rio(chain, f, n, opt.replicas, opt.seed); });
    record("pu", [&] { return verify_pu(chain, f, n, opt.replicas, opt.seed); });
    record("dm", [&] { return verify_dm(chain, f, n, opt.replicas, opt.seed); });
    record("lw", [&] { return verify_lw(chain, f, n, opt.replicas, opt.seed); });

    out.series.push_back(std::move(lhs));
    out.series.push_back(std::move(rhs));
    out.series.push_back(std::move(margin));
}

void run_fclt(RunReport& out, const ChainSpec& spec) {
    const auto& opt = spec.options;
    const int n = opt.n_grid.back();
    try {
        const FcltReport report =
            fclt_statistics(spec.chain, spec.observable, n, opt.replicas, opt.seed);
        out.series.push_back(Series{"fclt_summary",
                                    {report.sigma2, report.terminal_distance,
                                     report.runmax_distance, report.threshold,
                                     report.runmax_threshold},
                                    {tol::kCrossCheck, 0.0, 0.0, 0.0, 0.0}});
        Series g_state{"group_state", {}, {}}, g_count{"group_count", {}, {}},
            g_term{"group_terminal", {}, {}}, g_max{"group_runmax", {}, {}},
            g_thresh{"group_threshold", {}, {}}, g_max_thresh{"group_runmax_threshold", {}, {}};
        for (const auto& group : report.groups) {
            g_state.push(group.state, 0.0);
            g_count.push(group.count, 0.0);
            g_term.push(group.terminal_distance, 0.0);
            g_max.push(group.runmax_distance, 0.0);
            g_thresh.push(group.threshold, 0.0);
            g_max_thresh.push(group.runmax_threshold, 0.0);
        }
        out.series.push_back(std::move(g_state));
        out.series.push_back(std::move(g_count));
        out.series.push_back(std::move(g_term));
        out.series.push_back(std::move(g_max));
        out.series.push_back(std::move(g_thresh));
        out.series.push_back(std::move(g_max_thresh));
        out.verdicts.push_back(std::string("fclt: ") + (report.pass() ? "pass" : "FAIL") +
                               " (terminal " + format_number(report.terminal_distance) +
                               " vs " + format_number(report.threshold) +
                               ", running max " + format_number(report.runmax_distance) +
                               " vs " + format_number(report.runmax_threshold) + ")");
        if (!report.pass()) ++out.suite_failures;
    } catch (const DegenerateVariance& err) {
        out.verdicts.push_back(std::string("fclt: skipped (") + err.what() + ")");
    } catch (const SeriesNotConverged& err) {
        out.verdicts.push_back(std::string("fclt: skipped (") + err.what() + ")");
    }
}

}  // namespace

RunReport run(const std::string& command, const ChainSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    RunReport out;
    out.command = command;
    out.digest = spec.digest;
    for (const auto& warning : spec.warnings) {
        out.verdicts.push_back("warning: " + warning);
    }

    if (command == "inspect") {
        run_inspect(out, spec);
    } else if (command == "approx") {
        run_approx(out, spec);
    } else if (command == "criteria") {
        run_criteria(out, spec);
    } else if (command == "spectral") {
        run_spectral(out, spec);
    } else if (command == "inequalities") {
        run_inequalities(out, spec);
    } else if (command == "fclt") {
        run_fclt(out, spec);
    } else if (command == "report") {
        for (const char* sub :
             {"inspect", "approx", "criteria", "spectral", "inequalities", "fclt"}) {
            RunReport part = run(sub, spec);
            for (Series& s : part.series) {
                s.name = std::string(sub) + "." + s.name;
                out.series.push_back(std::move(s));
            }
            for (std::string& v : part.verdicts) {
                out.verdicts.push_back(std::string(sub) + ": " + v);
            }
            out.suite_failures += part.suite_failures;
        }
    } else {
        throw UnknownCommand("unknown command '" + command + "'");
    }

    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

// =============================================================================
// Emission
// =============================================================================

void write_csv(const RunReport& report, std::ostream& out) {
    out << "series,index,value,err\n";
    for (const auto& series : report.series) {
        for (std::size_t i = 0; i < series.values.size(); ++i) {
            const double err = i < series.errs.size() ? series.errs[i] : 0.0;
            out << series.name << ',' << i << ',' << format_number(series.values[i]) << ','
                << format_number(err) << "\n";
        }
    }
}

void write_text(const RunReport& report, std::ostream& out) {
    out << "command: " << report.command << "\n";
    out << "spec digest: " << report.digest << "\n\n";
    for (const auto& verdict : report.verdicts) {
        out << verdict << "\n";
    }
    for (const auto& series : report.series) {
        out << "\n[" << series.name << "]\n";
        for (std::size_t i = 0; i < series.values.size(); ++i) {
            const double err = i < series.errs.size() ? series.errs[i] : 0.0;
            out << "  " << i << "  " << format_number(series.values[i]) << "  "
                << format_number(err) << "\n";
        }
    }
}

std::vector<std::string> emit(const RunReport& report, const std::string& out_dir,
                              OutputFormat format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    }
    const std::string extension = format == OutputFormat::Csv ? ".csv" : ".txt";
    const fs::path path = fs::path(out_dir) / (report.command + extension);
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    if (format == OutputFormat::Csv) {
        write_csv(report, out);
    } else {
        write_text(report, out);
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
    return {path.string()};
}

}  // namespace martkit
