#pragma once

#include <string>

#include <json.hpp>

#include "rte/config.hpp"
#include "rte/coupled.hpp"
#include "rte/errors.hpp"
#include "rte/inverse.hpp"

namespace rte {

using Json = nlohmann::ordered_json;

Json to_json(const RunConfig& cfg);
Json to_json(const PhantomSpec& spec);
Json to_json(const PhantomReport& rep);
Json to_json(const MediumBounds& b);
Json to_json(const AdmissibilityReport& rep);
Json to_json(const PositivityReport& rep);
Json to_json(const SolveDiagnostics& diag);
/// Stage wall-clock times are left out when `timings` is false, so that
/// reports of identical runs are identical files.
Json to_json(const PipelineResult& result, bool timings = true);
Json to_json(const StabilityReport& rep);
/// {"error": kind, "exit_code": n, "message": ..., "stage": ...}
Json to_json(const Error& e);

/// Pretty-printed, newline-terminated. Throws IoError.
void write_json(const Json& doc, const std::string& path);

}  // namespace rte
