#include "nearcomm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nearcomm/errors.hpp"

namespace nearcomm {

namespace {

using Eigen::Index;

const Json& member(const Json& j, const char* key, std::string_view what) {
    if (!j.is_object()) throw InputError(std::string(what) + ": expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) throw InputError(std::string(what) + ": missing \"" + key + "\"");
    return *it;
}

double number(const Json& j, std::string_view what) {
    if (!j.is_number()) throw InputError(std::string(what) + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError(std::string(what) + ": non-finite number");
    return v;
}

double number_at(const Json& j, const char* key, std::string_view what) {
    return number(member(j, key, what), std::string(what) + "." + key);
}

std::size_t count_at(const Json& j, const char* key, std::string_view what) {
    const Json& v = member(j, key, what);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw InputError(std::string(what) + "." + key + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

bool bool_at(const Json& j, const char* key, std::string_view what) {
    const Json& v = member(j, key, what);
    if (!v.is_boolean()) throw InputError(std::string(what) + "." + key + ": expected a boolean");
    return v.get<bool>();
}

std::string string_at(const Json& j, const char* key, std::string_view what) {
    const Json& v = member(j, key, what);
    if (!v.is_string()) throw InputError(std::string(what) + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> numbers_at(const Json& j, const char* key, std::string_view what) {
    const Json& v = member(j, key, what);
    if (!v.is_array()) throw InputError(std::string(what) + "." + key + ": expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(number(e, std::string(what) + "." + key));
    return out;
}

Json base_to_json(const BaseSpace& base) { return Json{{"kind", to_string(base.kind)}, {"a", base.a}, {"b", base.b}}; }

BaseSpace base_from_json(const Json& j) {
    BaseSpace base;
    const std::string kind = string_at(j, "kind", "base");
    if (kind == "interval")
        base.kind = BaseKind::interval;
    else if (kind == "circle")
        base.kind = BaseKind::circle;
    else
        throw InputError("base.kind: expected \"interval\" or \"circle\", got \"" + kind + "\"");
    base.a = number_at(j, "a", "base");
    base.b = number_at(j, "b", "base");
    return base;
}

Json thresholds_to_json(const CertificateThresholds& t) {
    return Json{{"truncation", t.truncation},
                {"stage3_distance", t.stage3_distance},
                {"retraction_gap", t.retraction_gap},
                {"commutator", t.commutator}};
}

Json glue_to_json(const GlueRecord& g) {
    return Json{{"node", g.node},
                {"seam", g.seam},
                {"x_begin", g.x_begin},
                {"x_end", g.x_end},
                {"window_cells", g.window_cells},
                {"frame_mismatch", g.frame_mismatch},
                {"max_gap", g.max_gap},
                {"commutator", g.commutator},
                {"delta", g.delta},
                {"sup_commutator", g.sup_commutator},
                {"threshold", g.threshold},
                {"within_threshold", g.within_threshold},
                {"bounds_guaranteed", g.bounds_guaranteed}};
}

template <class F>
auto guarded(std::string_view what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json matrix_to_json(const ComplexMatrix& m) {
    Json entries = Json::array();
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) entries.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
}

ComplexMatrix matrix_from_json(const Json& j, std::string_view what) {
    const std::size_t rows = count_at(j, "rows", what);
    const std::size_t cols = count_at(j, "cols", what);
    if (rows == 0 || cols == 0) throw InputError(std::string(what) + ": rows and cols must be positive");
    const Json& entries = member(j, "entries", what);
    if (!entries.is_array() || entries.size() != rows * cols)
        throw InputError(std::string(what) + ": expected " + std::to_string(rows * cols) + " entries");
    ComplexMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const Json& e = entries[k];
        const std::string where = std::string(what) + ".entries[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 2) throw InputError(where + ": expected [re, im]");
        m(static_cast<Index>(k / cols), static_cast<Index>(k % cols)) = Complex(number(e[0], where), number(e[1], where));
    }
    return m;
}

Json parse_json_text(const std::string& text, std::string_view source) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        std::size_t line = 1;
        std::size_t line_start = 0;
        for (std::size_t i = 0; i < byte; ++i)
            if (text[i] == '\n') {
                ++line;
                line_start = i + 1;
            }
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        const std::size_t column = byte - line_start + 1;
        std::ostringstream msg;
        msg << source << ":" << line << ":" << column << ": " << e.what() << "\n    "
            << text.substr(line_start, line_end - line_start) << "\n    " << std::string(column - 1, ' ') << "^";
        throw InputError(msg.str());
    }
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

HermitianOperator read_hermitian(const std::filesystem::path& path) {
    const ComplexMatrix m = matrix_from_json(read_json_file(path), path.string());
    if (m.rows() != m.cols()) throw InputError(path.string() + ": matrix must be square");
    return HermitianOperator(m);
}

UnitaryOperator read_unitary(const std::filesystem::path& path) {
    ComplexMatrix m = matrix_from_json(read_json_file(path), path.string());
    if (m.rows() != m.cols()) throw InputError(path.string() + ": matrix must be square");
    return UnitaryOperator(std::move(m));
}

Json to_json(const OperatorPath& path) {
    Json samples = Json::array();
    for (const auto& s : path.samples) samples.push_back(Json{{"t", s.t}, {"matrix", matrix_to_json(s.matrix)}});
    return Json{{"delta", path.delta},
                {"stage_marks", path.stage_marks},
                {"is_retracted", path.is_retracted},
                {"samples", std::move(samples)}};
}

OperatorPath path_from_json(const Json& j) {
    return guarded("path", [&] {
        OperatorPath path;
        path.delta = number_at(j, "delta", "path");
        path.stage_marks = numbers_at(j, "stage_marks", "path");
        if (j.contains("is_retracted")) path.is_retracted = bool_at(j, "is_retracted", "path");
        const Json& samples = member(j, "samples", "path");
        if (!samples.is_array()) throw InputError("path.samples: expected an array");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const std::string where = "path.samples[" + std::to_string(i) + "]";
            path.samples.push_back(
                PathSample{number_at(samples[i], "t", where), matrix_from_json(member(samples[i], "matrix", where), where)});
        }
        path.validate();
        return path;
    });
}

Json to_json(const HomotopyCertificate& c) {
    return Json{{"delta", c.delta},
                {"delta_requested", c.delta_requested},
                {"delta_substituted", c.delta_substituted},
                {"input_commutator", c.input_commutator},
                {"h_norm", c.h_norm},
                {"quarter_root", c.quarter_root},
                {"C", c.C},
                {"branch", to_string(c.branch)},
                {"m", c.m},
                {"N", c.N},
                {"samples_per_stage", c.samples_per_stage},
                {"truncation_error", c.truncation_error},
                {"sup_commutator", c.sup_commutator},
                {"sup_pre_retraction_commutator", c.sup_pre_retraction_commutator},
                {"sup_unitary_distance", c.sup_unitary_distance},
                {"stage_unitary_distance", c.stage_unitary_distance},
                {"retraction_gap", c.retraction_gap},
                {"max_rotation_residual", c.max_rotation_residual},
                {"endpoint_error_start", c.endpoint_error_start},
                {"endpoint_error_end", c.endpoint_error_end},
                {"thresholds", thresholds_to_json(c.thresholds)},
                {"bounds_guaranteed", c.bounds_guaranteed},
                {"u_input", matrix_to_json(c.u_input)}};
}

HomotopyCertificate certificate_from_json(const Json& j) {
    return guarded("certificate", [&] {
        const char* w = "certificate";
        HomotopyCertificate c;
        c.delta = number_at(j, "delta", w);
        c.delta_requested = number_at(j, "delta_requested", w);
        c.delta_substituted = bool_at(j, "delta_substituted", w);
        c.input_commutator = number_at(j, "input_commutator", w);
        c.h_norm = number_at(j, "h_norm", w);
        c.quarter_root = number_at(j, "quarter_root", w);
        c.C = number_at(j, "C", w);
        const std::string branch = string_at(j, "branch", w);
        if (branch == "single_segment")
            c.branch = HomotopyBranch::single_segment;
        else if (branch == "four_stage")
            c.branch = HomotopyBranch::four_stage;
        else
            throw InputError("certificate.branch: unknown value \"" + branch + "\"");
        c.m = count_at(j, "m", w);
        c.N = count_at(j, "N", w);
        c.samples_per_stage = count_at(j, "samples_per_stage", w);
        c.truncation_error = number_at(j, "truncation_error", w);
        c.sup_commutator = number_at(j, "sup_commutator", w);
        c.sup_pre_retraction_commutator = number_at(j, "sup_pre_retraction_commutator", w);
        c.sup_unitary_distance = number_at(j, "sup_unitary_distance", w);
        const auto stages = numbers_at(j, "stage_unitary_distance", w);
        if (stages.size() != c.stage_unitary_distance.size())
            throw InputError("certificate.stage_unitary_distance: expected 4 entries");
        std::copy(stages.begin(), stages.end(), c.stage_unitary_distance.begin());
        c.retraction_gap = number_at(j, "retraction_gap", w);
        c.max_rotation_residual = number_at(j, "max_rotation_residual", w);
        c.endpoint_error_start = number_at(j, "endpoint_error_start", w);
        c.endpoint_error_end = number_at(j, "endpoint_error_end", w);
        const Json& th = member(j, "thresholds", w);
        c.thresholds.truncation = number_at(th, "truncation", "certificate.thresholds");
        c.thresholds.stage3_distance = number_at(th, "stage3_distance", "certificate.thresholds");
        c.thresholds.retraction_gap = number_at(th, "retraction_gap", "certificate.thresholds");
        c.thresholds.commutator = number_at(th, "commutator", "certificate.thresholds");
        c.bounds_guaranteed = bool_at(j, "bounds_guaranteed", w);
        c.u_input = matrix_from_json(member(j, "u_input", w), "certificate.u_input");
        return c;
    });
}

Json to_json(const VerificationReport& report) {
    Json checks = Json::array();
    for (const auto& c : report.checks)
        checks.push_back(Json{{"name", c.name},
                              {"measured", c.measured},
                              {"threshold", c.threshold},
                              {"margin", c.margin()},
                              {"passed", c.passed},
                              {"informational", c.informational}});
    return Json{{"passed", report.passed},
                {"bounds_guaranteed", report.bounds_guaranteed},
                {"note", report.note},
                {"checks", std::move(checks)}};
}

Json to_json(const SpectralPartition& part) {
    const auto segments = [](const std::vector<SpectralSegment>& segs) {
        Json out = Json::array();
        for (const auto& s : segs)
            out.push_back(Json{{"index", s.index},
                               {"cell", s.cell},
                               {"lo", s.lo},
                               {"hi", s.hi},
                               {"midpoint", s.midpoint},
                               {"eigen_indices", s.eigen_indices}});
        return out;
    };
    Json separated = Json::array();
    for (bool b : part.separated) separated.push_back(b);
    return Json{{"delta", part.delta},
                {"quarter_root", part.quarter_root},
                {"anchor", part.anchor},
                {"m", part.m()},
                {"N", part.N()},
                {"eigenvalues", part.eigenvalues},
                {"coarse", segments(part.coarse)},
                {"fine", segments(part.fine)},
                {"separated", std::move(separated)}};
}

Json to_json(const OperatorField& field) {
    Json values = Json::array();
    for (const auto& v : field.values) values.push_back(matrix_to_json(v.matrix()));
    return Json{{"base", base_to_json(field.base)},
                {"p", field.p},
                {"n", field.n},
                {"grid", field.grid},
                {"values", std::move(values)}};
}

OperatorField field_from_json(const Json& j) {
    return guarded("field", [&] {
        OperatorField field;
        field.base = base_from_json(member(j, "base", "field"));
        field.p = count_at(j, "p", "field");
        field.n = count_at(j, "n", "field");
        field.grid = numbers_at(j, "grid", "field");
        const Json& values = member(j, "values", "field");
        if (!values.is_array()) throw InputError("field.values: expected an array");
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::string where = "field.values[" + std::to_string(i) + "]";
            const ComplexMatrix m = matrix_from_json(values[i], where);
            if (m.rows() != m.cols()) throw InputError(where + ": matrix must be square");
            try {
                field.values.emplace_back(m);
            } catch (const InputError& e) {
                throw InputError(where + ": " + e.what());
            }
        }
        field.validate();
        return field;
    });
}

Json to_json(const EigenvalueField& field) {
    Json curves = Json::array();
    for (const auto& curve : field.curves) {
        Json nodes = Json::array();
        for (const auto& m : curve) nodes.push_back(matrix_to_json(m));
        curves.push_back(std::move(nodes));
    }
    return Json{{"epsilon", field.epsilon},
                {"base", base_to_json(field.base)},
                {"n", field.n},
                {"p", field.p},
                {"grid", field.grid},
                {"breakpoints", field.breakpoints},
                {"ordering_ok", field.ordering_ok},
                {"ordering_tol", field.ordering_tol},
                {"jump_report", field.jump_report},
                {"curves", std::move(curves)}};
}

EigenvalueField eigenvalue_field_from_json(const Json& j) {
    return guarded("eigenvalue field", [&] {
        const char* w = "eigenvalue field";
        EigenvalueField f;
        f.epsilon = number_at(j, "epsilon", w);
        f.base = base_from_json(member(j, "base", w));
        f.n = count_at(j, "n", w);
        f.p = count_at(j, "p", w);
        f.grid = numbers_at(j, "grid", w);
        for (const auto& b : member(j, "breakpoints", w)) f.breakpoints.push_back(b.get<std::size_t>());
        f.ordering_ok = bool_at(j, "ordering_ok", w);
        f.ordering_tol = number_at(j, "ordering_tol", w);
        f.jump_report = numbers_at(j, "jump_report", w);
        const Json& curves = member(j, "curves", w);
        if (!curves.is_array() || curves.size() != f.n) throw InputError("eigenvalue field: expected n curves");
        for (const auto& curve : curves) {
            if (!curve.is_array() || curve.size() != f.grid.size())
                throw InputError("eigenvalue field: each curve needs one block per grid node");
            std::vector<ComplexMatrix> nodes;
            for (const auto& m : curve) nodes.push_back(matrix_from_json(m, "eigenvalue field curve"));
            f.curves.push_back(std::move(nodes));
        }
        return f;
    });
}

Json jumps_to_json(const EigenvalueField& field) {
    Json glues = Json::array();
    for (const auto& g : field.glues) glues.push_back(glue_to_json(g));
    Json density = Json::array();
    for (const auto& d : field.density_violations) density.push_back(Json{{"node", d.node}, {"distance", d.distance}});
    Json out{{"epsilon", field.epsilon},
             {"jump_report", field.jump_report},
             {"max_jump", field.max_jump()},
             {"breakpoints", field.breakpoints},
             {"ordering_ok", field.ordering_ok},
             {"max_snap_error", field.max_snap_error},
             {"max_frame_residual", field.max_frame_residual},
             {"k_norm", field.k_norm},
             {"glues_within_threshold", field.glues_within_threshold()},
             {"glues", std::move(glues)},
             {"density_ok", field.density_violations.empty()},
             {"density_violations", std::move(density)}};
    if (field.seam.present) {
        const auto& s = field.seam;
        out["seam"] = Json{{"input_mismatch", s.input_mismatch},
                           {"eigen_jump", s.eigen_jump},
                           {"frame_holonomy", s.frame_holonomy},
                           {"glued", s.glued},
                           {"glue_sup_commutator", s.glue_sup_commutator},
                           {"residual_jump", s.residual_jump}};
    }
    return out;
}

Json to_json(const RefinementResult& result) {
    Json steps = Json::array();
    for (const auto& s : result.steps)
        steps.push_back(Json{{"iteration", s.iteration},
                             {"epsilon_prev", s.epsilon_prev},
                             {"epsilon", s.epsilon},
                             {"delta", s.delta},
                             {"bound", s.bound},
                             {"within_bound", s.within_bound},
                             {"alignment_commutator", s.alignment_commutator}});
    Json iterations = Json::array();
    for (const auto& it : result.iterations)
        iterations.push_back(Json{{"iteration", it.iteration},
                                  {"epsilon", it.epsilon},
                                  {"max_jump", it.max_jump},
                                  {"breakpoints", it.breakpoints},
                                  {"density_violations", it.density_violations},
                                  {"glues", it.glues}});
    return Json{{"C", result.C},
                {"cauchy_deltas", result.cauchy_deltas()},
                {"all_within_bound", result.all_within_bound()},
                {"monotone_within_10_percent", result.monotone(0.1)},
                {"steps", std::move(steps)},
                {"iterations", std::move(iterations)}};
}

Json to_json(const GeneratorSpec& spec) {
    Json spectrum{{"kind", to_string(spec.spectrum.kind)},
                  {"values", spec.spectrum.values},
                  {"lo", spec.spectrum.lo},
                  {"hi", spec.spectrum.hi},
                  {"centers", spec.spectrum.centers},
                  {"width", spec.spectrum.width}};
    return Json{{"seed", spec.seed},
                {"dim", spec.dim},
                {"n", spec.n},
                {"p", spec.p},
                {"spectrum", std::move(spectrum)},
                {"target_delta", spec.target_delta},
                {"field_shape", to_string(spec.shape)},
                {"crossing_gap", spec.crossing_gap},
                {"grid_size", spec.grid_size},
                {"base", base_to_json(spec.base)}};
}

GeneratorSpec spec_from_json(const Json& j) {
    return guarded("spec", [&] {
        const char* w = "spec";
        if (!j.is_object()) throw InputError("spec: expected a JSON object");
        GeneratorSpec spec;
        if (j.contains("seed")) {
            const Json& s = j["seed"];
            if (!s.is_number_integer()) throw InputError("spec.seed: expected an integer");
            spec.seed = s.is_number_unsigned() ? s.get<std::uint64_t>() : static_cast<std::uint64_t>(s.get<std::int64_t>());
        }
        if (j.contains("dim")) spec.dim = count_at(j, "dim", w);
        if (j.contains("n")) spec.n = count_at(j, "n", w);
        if (j.contains("p")) spec.p = count_at(j, "p", w);
        if (j.contains("target_delta")) spec.target_delta = number_at(j, "target_delta", w);
        if (j.contains("crossing_gap")) spec.crossing_gap = number_at(j, "crossing_gap", w);
        if (j.contains("grid_size")) spec.grid_size = count_at(j, "grid_size", w);
        if (j.contains("base")) spec.base = base_from_json(j["base"]);
        if (j.contains("field_shape")) {
            const std::string shape = string_at(j, "field_shape", w);
            if (shape == "none")
                spec.shape = FieldShape::none;
            else if (shape == "constant")
                spec.shape = FieldShape::constant;
            else if (shape == "conjugated-smooth")
                spec.shape = FieldShape::conjugated_smooth;
            else if (shape == "avoided-crossing")
                spec.shape = FieldShape::avoided_crossing;
            else if (shape == "exact-crossing")
                spec.shape = FieldShape::exact_crossing;
            else
                throw InputError("spec.field_shape: unknown shape \"" + shape + "\"");
        }
        if (j.contains("spectrum")) {
            const Json& s = j["spectrum"];
            const char* sw = "spec.spectrum";
            const std::string kind = string_at(s, "kind", sw);
            if (kind == "explicit")
                spec.spectrum.kind = SpectrumKind::explicit_list;
            else if (kind == "uniform")
                spec.spectrum.kind = SpectrumKind::uniform;
            else if (kind == "clustered")
                spec.spectrum.kind = SpectrumKind::clustered;
            else
                throw InputError("spec.spectrum.kind: unknown kind \"" + kind + "\"");
            if (s.contains("values")) spec.spectrum.values = numbers_at(s, "values", sw);
            if (s.contains("lo")) spec.spectrum.lo = number_at(s, "lo", sw);
            if (s.contains("hi")) spec.spectrum.hi = number_at(s, "hi", sw);
            if (s.contains("centers")) spec.spectrum.centers = numbers_at(s, "centers", sw);
            if (s.contains("width")) spec.spectrum.width = number_at(s, "width", sw);
        }
        return spec;
    });
}

Json to_json(const AlmostCommutingPair& pair) {
    return Json{{"measured_delta", pair.measured_delta},
                {"theta", pair.theta},
                {"eta", pair.eta},
                {"bisection_steps", pair.bisection_steps}};
}

std::string path_csv(const OperatorPath& path, const HermitianOperator& h) {
    const auto metrics = measure_samples(path.samples, h.matrix(), ExecutionPolicy::serial);
    std::string out = "t,commutator_norm,unitary_distance\n";
    for (std::size_t i = 0; i < metrics.size(); ++i)
        out += format_double(path.samples[i].t) + "," + format_double(metrics[i].commutator) + "," +
               format_double(metrics[i].unitary_distance) + "\n";
    return out;
}

std::string curves_csv(const EigenvalueField& field) {
    std::string out = "x";
    for (std::size_t i = 0; i < field.n; ++i)
        for (std::size_t k = 0; k < field.p; ++k) out += ",lambda_" + std::to_string(i + 1) + "_" + std::to_string(k + 1);
    out += "\n";
    for (std::size_t j = 0; j < field.grid.size(); ++j) {
        out += format_double(field.grid[j]);
        for (std::size_t i = 0; i < field.n; ++i) {
            const auto scalars = hermitian_eigen(HermitianOperator(field.curves[i][j])).values;
            for (double v : scalars) out += "," + format_double(v);
        }
        out += "\n";
    }
    return out;
}

}  // namespace nearcomm
