// nearcomm command-line driver: homotopy, stitch, refine, gen, verify.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "nearcomm/errors.hpp"
#include "nearcomm/field.hpp"
#include "nearcomm/generate.hpp"
#include "nearcomm/homotopy.hpp"
#include "nearcomm/io.hpp"

namespace fs = std::filesystem;
using namespace nearcomm;

namespace {

enum ExitCode : int { kOk = 0, kInputError = 1, kBoundViolation = 2, kDensityViolation = 3, kConstructionFailed = 4 };

struct RunConfig {
    std::string command;
    std::string h_path;
    std::string u_path;
    std::string field_path;
    std::string spec_path;
    std::string path_path;
    std::string certificate_path;
    std::string out = ".";
    std::optional<double> delta;
    double epsilon = 0.05;
    std::string schedule = "0.01:0.0625:4";
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::size_t window_cells = 1;
    bool csv = false;
    std::string log_level = "warn";
};

const char* kMatrixFormat = R"(Matrix files: {"rows": 2, "cols": 2, "entries": [[1,0],[0,0],[0,0],[-1,0]]} (row-major [re, im]).)";
const char* kFieldFormat =
    R"(Field files: {"base": {"kind": "interval", "a": -1, "b": 1}, "p": 1, "n": 2, "grid": [-1, 1], "values": [<matrix>, <matrix>]}.)";
const char* kSpecFormat =
    R"(Spec files: {"seed": 7, "dim": 4, "spectrum": {"kind": "uniform", "lo": -1, "hi": 1}, "target_delta": 1e-6}; add "field_shape": "avoided-crossing", "n": 2, "p": 1, "grid_size": 101 for a field.)";
const char* kPathFormat =
    R"(Path files: {"delta": 1e-6, "stage_marks": [0, 0.25, 0.5, 0.75, 1], "is_retracted": true, "samples": [{"t": 0, "matrix": <matrix>}, ...]}.)";

std::size_t samples_or(const RunConfig& cfg, std::size_t fallback) { return cfg.samples.value_or(fallback); }

fs::path prepare_out(const RunConfig& cfg) {
    fs::path out(cfg.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw InputError("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

int cmd_homotopy(const RunConfig& cfg) {
    const HermitianOperator h = read_hermitian(cfg.h_path);
    const UnitaryOperator u = read_unitary(cfg.u_path);
    if (h.dim() != u.dim()) throw InputError("h and u have different dimensions");
    double delta = cfg.delta.value_or(0.0);
    if (!cfg.delta) {
        delta = std::max(commutator_norm(u.matrix(), h.matrix()), 1e-16);
        spdlog::info("no --delta given, using the measured commutator norm {}", delta);
    }

    const HomotopyResult result = build_homotopy(h, u, delta, samples_or(cfg, 64));
    const HomotopyCertificate& cert = result.certificate;
    if (cert.delta_substituted)
        spdlog::warn("||[u,h]|| = {} exceeds the requested delta {}; using the measured value", cert.input_commutator,
                     cert.delta_requested);
    const VerificationReport report = verify_certificate(result.retracted, h, cert);

    const fs::path out = prepare_out(cfg);
    write_json_file(out / "path.json", to_json(result.retracted));
    Json cert_json = to_json(cert);
    cert_json["verification"] = to_json(report);
    write_json_file(out / "certificate.json", cert_json);
    write_json_file(out / "verification.json", to_json(report));
    if (cfg.csv) write_text_file(out / "commutator.csv", path_csv(result.retracted, h));

    spdlog::info("branch {} m={} N={} sup commutator {} (threshold {})", to_string(cert.branch), cert.m, cert.N,
                 cert.sup_commutator, cert.thresholds.commutator);
    for (const auto& c : report.checks)
        if (!c.passed) spdlog::warn("check {} failed: measured {} threshold {}", c.name, c.measured, c.threshold);
    if (!report.note.empty()) std::cout << report.note << "\n";
    std::cout << (report.passed ? "verification passed" : "verification FAILED") << "\n";
    return report.passed ? kOk : kBoundViolation;
}

StitchOptions stitch_options(const RunConfig& cfg) {
    StitchOptions opt;
    opt.samples_per_stage = samples_or(cfg, opt.samples_per_stage);
    opt.max_window_cells = cfg.window_cells;
    return opt;
}

void report_density(const EigenvalueField& f) {
    for (const auto& v : f.density_violations)
        std::cerr << "grid density violation at node " << v.node << ": ||K(x_{j+1}) - K(x_j)|| = "
                  << format_double(v.distance) << " >= epsilon = " << format_double(f.epsilon) << "\n";
}

void write_field_outputs(const fs::path& out, const EigenvalueField& f) {
    write_json_file(out / "eigenvalue_field.json", to_json(f));
    write_json_file(out / "jumps.json", jumps_to_json(f));
    write_text_file(out / "curves.csv", curves_csv(f));
}

int cmd_stitch(const RunConfig& cfg) {
    const OperatorField field = field_from_json(read_json_file(cfg.field_path));
    const EigenvalueField f = stitch_field(field, cfg.epsilon, stitch_options(cfg));
    write_field_outputs(prepare_out(cfg), f);
    std::cout << "max jump " << format_double(f.max_jump()) << ", " << f.breakpoints.size() << " breakpoints, "
              << f.glues.size() << " glues\n";
    if (f.seam.present) std::cout << "residual holonomy jump " << format_double(f.seam.residual_jump) << "\n";
    if (!f.density_violations.empty()) {
        report_density(f);
        return kDensityViolation;
    }
    return kOk;
}

RefinementSchedule parse_schedule(const std::string& text) {
    RefinementSchedule s;
    const auto first = text.find(':');
    const auto second = first == std::string::npos ? std::string::npos : text.find(':', first + 1);
    if (second == std::string::npos) throw InputError("--schedule: expected eps0:ratio:iters, got \"" + text + "\"");
    try {
        std::size_t used = 0;
        const std::string a = text.substr(0, first);
        const std::string b = text.substr(first + 1, second - first - 1);
        const std::string c = text.substr(second + 1);
        s.epsilon0 = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(a);
        s.ratio = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
        const long long iters = std::stoll(c, &used);
        if (used != c.size() || iters <= 0) throw std::invalid_argument(c);
        s.iterations = static_cast<std::size_t>(iters);
    } catch (const std::logic_error&) {
        throw InputError("--schedule: expected eps0:ratio:iters, got \"" + text + "\"");
    }
    s.validate();
    return s;
}

int cmd_refine(const RunConfig& cfg) {
    const OperatorField field = field_from_json(read_json_file(cfg.field_path));
    const RefinementSchedule schedule = parse_schedule(cfg.schedule);
    const RefinementResult result = refine_field(field, schedule, stitch_options(cfg));
    const fs::path out = prepare_out(cfg);
    write_field_outputs(out, result.final_field);
    write_json_file(out / "cauchy.json", to_json(result));
    for (const auto& s : result.steps)
        std::cout << "iteration " << s.iteration << ": delta " << format_double(s.delta) << " bound "
                  << format_double(s.bound) << (s.within_bound ? "" : "  VIOLATED") << "\n";
    if (!result.iterations.empty() && result.iterations.front().density_violations > 0) {
        std::cerr << result.iterations.front().density_violations
                  << " grid density violations at the coarsest tolerance; rerun stitch for the per-node list\n";
        return kDensityViolation;
    }
    return result.all_within_bound() ? kOk : kBoundViolation;
}

int cmd_gen(const RunConfig& cfg) {
    GeneratorSpec spec = spec_from_json(read_json_file(cfg.spec_path));
    if (cfg.seed) spec.seed = *cfg.seed;
    if (cfg.delta) spec.target_delta = *cfg.delta;
    const fs::path out = prepare_out(cfg);
    Json report{{"spec", to_json(spec)}};
    if (spec.shape == FieldShape::none) {
        const AlmostCommutingPair pair = gen_almost_commuting_pair(spec);
        write_json_file(out / "h.json", matrix_to_json(pair.h.matrix()));
        write_json_file(out / "u.json", matrix_to_json(pair.u.matrix()));
        report["pair"] = to_json(pair);
        std::cout << "measured ||[u,h]|| = " << format_double(pair.measured_delta) << "\n";
    } else {
        const OperatorField field = gen_field(spec);
        write_json_file(out / "field.json", to_json(field));
        report["seam_mismatch"] = field.seam_mismatch();
        std::cout << "field with " << field.grid.size() << " nodes, dimension " << field.dim() << "\n";
    }
    write_json_file(out / "gen_report.json", report);
    return kOk;
}

int cmd_verify(const RunConfig& cfg) {
    const OperatorPath path = path_from_json(read_json_file(cfg.path_path));
    const HermitianOperator h = read_hermitian(cfg.h_path);
    const HomotopyCertificate cert = certificate_from_json(read_json_file(cfg.certificate_path));
    const VerificationReport report = verify_certificate(path, h, cert);
    write_json_file(prepare_out(cfg) / "verification.json", to_json(report));
    for (const auto& c : report.checks)
        std::cout << (c.passed ? "pass " : (c.informational ? "info " : "FAIL ")) << c.name << " measured "
                  << format_double(c.measured) << " threshold " << format_double(c.threshold) << "\n";
    if (!report.note.empty()) std::cout << report.note << "\n";
    return report.passed ? kOk : kBoundViolation;
}

void add_out(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--out", cfg.out, "Output directory")->envname("NEARCOMM_OUT");
}

void add_samples(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--samples", cfg.samples, "Samples per homotopy stage (64 for homotopy, 16 for glues)")
        ->envname("NEARCOMM_SAMPLES")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Homotopies for almost-commuting unitaries and stitched eigenvalue fields"};
    // --h names the Hermitian input, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--log-level", cfg.log_level, "trace, debug, info, warn, error or off")
        ->envname("NEARCOMM_LOG_LEVEL")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    auto* homotopy = app.add_subcommand("homotopy", "Build and verify a homotopy from u to the identity");
    homotopy->add_option("--h", cfg.h_path, "Hermitian matrix file")->required()->check(CLI::ExistingFile);
    homotopy->add_option("--u", cfg.u_path, "Unitary matrix file")->required()->check(CLI::ExistingFile);
    homotopy->add_option("--delta", cfg.delta, "Commutator bound delta (default: measured ||[u,h]||)")
        ->envname("NEARCOMM_DELTA")
        ->check(CLI::PositiveNumber);
    add_samples(homotopy, cfg);
    homotopy->add_flag("--csv", cfg.csv, "Also write commutator.csv")->envname("NEARCOMM_CSV");
    add_out(homotopy, cfg);
    homotopy->footer(std::string(kMatrixFormat) +
                     "\nWrites path.json, certificate.json, verification.json and optionally commutator.csv.");

    auto* stitch = app.add_subcommand("stitch", "Stitch a sampled Hermitian field into eigenvalue curves");
    stitch->add_option("--field", cfg.field_path, "Field file")->required()->check(CLI::ExistingFile);
    stitch->add_option("--epsilon", cfg.epsilon, "Spectral grid spacing")
        ->envname("NEARCOMM_EPSILON")
        ->check(CLI::PositiveNumber);
    stitch->add_option("--window-cells", cfg.window_cells, "Largest glue window in grid cells")
        ->check(CLI::PositiveNumber);
    add_samples(stitch, cfg);
    add_out(stitch, cfg);
    stitch->footer(std::string(kFieldFormat) + "\nWrites eigenvalue_field.json, jumps.json and curves.csv.");

    auto* refine = app.add_subcommand("refine", "Refine a stitched field along a geometric epsilon schedule");
    refine->add_option("--field", cfg.field_path, "Field file")->required()->check(CLI::ExistingFile);
    refine->add_option("--schedule", cfg.schedule, "eps0:ratio:iters, e.g. 0.01:0.0625:4")
        ->envname("NEARCOMM_SCHEDULE");
    refine->add_option("--window-cells", cfg.window_cells, "Largest glue window in grid cells")
        ->check(CLI::PositiveNumber);
    add_samples(refine, cfg);
    add_out(refine, cfg);
    refine->footer(std::string(kFieldFormat) +
                   "\nWrites eigenvalue_field.json, jumps.json, curves.csv and cauchy.json.");

    auto* gen = app.add_subcommand("gen", "Generate an almost-commuting pair or an operator field");
    gen->add_option("--spec", cfg.spec_path, "Generator spec file")->required()->check(CLI::ExistingFile);
    gen->add_option("--seed", cfg.seed, "Override the spec seed")->envname("NEARCOMM_SEED");
    gen->add_option("--delta", cfg.delta, "Override target_delta")->envname("NEARCOMM_DELTA");
    add_out(gen, cfg);
    gen->footer(std::string(kSpecFormat) + "\nWrites h.json, u.json and gen_report.json, or field.json and gen_report.json.");

    auto* verify = app.add_subcommand("verify", "Re-measure a homotopy path against its certificate");
    verify->add_option("--path", cfg.path_path, "Path file")->required()->check(CLI::ExistingFile);
    verify->add_option("--h", cfg.h_path, "Hermitian matrix file")->required()->check(CLI::ExistingFile);
    verify->add_option("--certificate", cfg.certificate_path, "Certificate file")->required()->check(CLI::ExistingFile);
    add_out(verify, cfg);
    verify->footer(std::string(kPathFormat) + "\nWrites verification.json.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInputError;
    }

    auto logger = spdlog::stderr_logger_st("nearcomm");
    logger->set_pattern("%l: %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(cfg.log_level));

    try {
        if (homotopy->parsed()) return cmd_homotopy(cfg);
        if (stitch->parsed()) return cmd_stitch(cfg);
        if (refine->parsed()) return cmd_refine(cfg);
        if (gen->parsed()) return cmd_gen(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const GenerationError& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return kInputError;
    } catch (const RetractionError& e) {
        std::cerr << "construction failed in stage " << e.stage() << " at t = " << format_double(e.t()) << ": "
                  << e.what() << "\n";
        return kConstructionFailed;
    } catch (const SingularityError& e) {
        std::cerr << "construction failed: " << e.what() << "\n";
        return kConstructionFailed;
    }
    return kInputError;
}
