#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "tdesign/certify.hpp"
#include "tdesign/designer.hpp"
#include "tdesign/mzcheck.hpp"
#include "tdesign/partition.hpp"
#include "tdesign/polyspace.hpp"
#include "tdesign/quadrature.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

using Json = nlohmann::ordered_json;

// Writes pretty-printed JSON (2-space indent, trailing newline).
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

// {name, ambient_dim, intrinsic_dim, polys: [[[exponents], coeff], ...] per polynomial}
// Built-in varieties also carry "builtin": "sphere:d" etc.
Json variety_to_json(const Variety& v);
Variety variety_from_json(const Json& j);
Variety load_variety_json(const std::string& path);

Json points_to_json(const PointConfig& X);
PointConfig points_from_json(const Json& j);
// One point per row, comma separated.
PointConfig points_from_csv(const std::string& text);
std::string points_to_csv(const PointConfig& X);
// format: "json" or "csv"
PointConfig load_points(const std::string& path, const std::string& format);

Json quadrature_to_json(const QuadratureDescriptor& q);
QuadratureDescriptor quadrature_from_json(const Json& j);

Json basis_to_json(const OrthoBasis& b);
// Rebuilds the quadrature from its descriptor.
OrthoBasis basis_from_json(const Json& j);

Json partition_to_json(const Partition& p, const SandwichReport& s);
Partition partition_from_json(const Json& j);

Json mz_report_to_json(const MZReport& r);
Json design_report_to_json(const DesignReport& r);
Json design_run_to_json(const DesignRun& r);
Json flow_audit_to_json(const FlowAudit& a);

}  // namespace tdesign
