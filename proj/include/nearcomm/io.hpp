#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nearcomm/field.hpp"
#include "nearcomm/generate.hpp"
#include "nearcomm/homotopy.hpp"
#include "nearcomm/linalg.hpp"
#include "nearcomm/partition.hpp"

namespace nearcomm {

using Json = nlohmann::ordered_json;

/// {"rows": r, "cols": c, "entries": [[re, im], ...]} in row-major order.
Json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const Json& j, std::string_view what = "matrix");

/// Parse errors become InputError with file, line, column and the offending
/// line quoted.
Json parse_json_text(const std::string& text, std::string_view source);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

HermitianOperator read_hermitian(const std::filesystem::path& path);
UnitaryOperator read_unitary(const std::filesystem::path& path);

Json to_json(const OperatorPath& path);
OperatorPath path_from_json(const Json& j);

Json to_json(const HomotopyCertificate& cert);
HomotopyCertificate certificate_from_json(const Json& j);

Json to_json(const VerificationReport& report);
Json to_json(const SpectralPartition& partition);

Json to_json(const OperatorField& field);
OperatorField field_from_json(const Json& j);

/// Curves plus grid, breakpoints and ordering flag.
Json to_json(const EigenvalueField& field);
/// Reads back what to_json(EigenvalueField) writes (curves, grid, breakpoints,
/// jump report); diagnostic members stay default.
EigenvalueField eigenvalue_field_from_json(const Json& j);
/// Jump report, glue records, density violations and seam summary.
Json jumps_to_json(const EigenvalueField& field);

Json to_json(const RefinementResult& result);

Json to_json(const GeneratorSpec& spec);
GeneratorSpec spec_from_json(const Json& j);

Json to_json(const AlmostCommutingPair& pair);

/// %.17g
std::string format_double(double v);

/// t, commutator_norm, unitary_distance per sample.
std::string path_csv(const OperatorPath& path, const HermitianOperator& h);

/// x followed by the scalar eigenvalues of every curve block.
std::string curves_csv(const EigenvalueField& field);

}  // namespace nearcomm
