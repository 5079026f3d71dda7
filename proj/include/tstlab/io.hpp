#pragma once

#include "tstlab/dorronsoro.hpp"
#include "tstlab/geometry.hpp"
#include "tstlab/reifenberg.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace tstlab {

//! One point per row, comma separated, 17 significant digits. A leading
//! "# resolution <h>" line carries the sampling pitch; other '#' lines are
//! ignored on input.
void write_cloud_csv(std::ostream& os, const PointCloud& E);
PointCloud read_cloud_csv(std::istream& is);

//! Little-endian: "TSTL", u32 n, u64 count, count * n float64 (point-major).
void write_cloud_binary(std::ostream& os, const PointCloud& E);
PointCloud read_cloud_binary(std::istream& is);

//! Binary for ".bin" / ".tstl", CSV otherwise.
void save_cloud(const std::filesystem::path& path, const PointCloud& E);
//! Sniffs the magic, so the extension does not matter.
PointCloud load_cloud(const std::filesystem::path& path);

//! Lattice samples: d coordinate columns then m value columns, axis 0
//! varying fastest. The support box defaults to the box of nonzero values.
SampledFunction read_sampled_function(std::istream& is, int d);

nlohmann::json to_json(const AffinePlane& P);
AffinePlane plane_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CCBP& c);
CCBP ccbp_from_json(const nlohmann::json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace tstlab
