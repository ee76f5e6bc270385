#ifndef COPT_INSTANCE_IO_HPP
#define COPT_INSTANCE_IO_HPP

#include <string>

#include <json.hpp>

#include "copt/certificate.hpp"
#include "copt/evaluation.hpp"
#include "copt/oracle.hpp"

namespace copt {

/// {"actions": [...], "reject": id?, "support": [{"x": [...], "weight": w}],
///  "L": [[...]], "C": [[[...]]], "constraint_names": [...]}
/// Matrices are row-major. Doubles round-trip exactly.
nlohmann::json instance_to_json(const FiniteInstance& instance);
/// Throws std::invalid_argument with the offending key on malformed input.
FiniteInstance instance_from_json(const nlohmann::json& doc);

FiniteInstance read_instance(const std::string& path);
void write_instance(const FiniteInstance& instance, const std::string& path);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const OracleSolution& solution);
nlohmann::json to_json(const NpReport& report);
nlohmann::json to_json(const Certificate& certificate);
nlohmann::json to_json(const EvalReport& report);

}  // namespace copt

#endif  // COPT_INSTANCE_IO_HPP
