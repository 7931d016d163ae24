#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "sbts/core.hpp"
#include "sbts/hedging.hpp"
#include "sbts/metrics.hpp"

namespace sbts::io {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Long-format dataset CSV:
///
///   # grid: t1,...,tN; d=D
///   path_id,date,dim,value
///   0,<t1>,0,<value>
///   ...
///
/// One row per (path, date, dimension), sorted in that order, LF endings.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& file, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& file);

nlohmann::ordered_json to_json(const MetricsReport& report);
nlohmann::ordered_json to_json(const MlpPolicy& policy);
nlohmann::ordered_json to_json(const HedgeResult& result);

void save_json(const std::filesystem::path& file, const nlohmann::ordered_json& doc);

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& file);

}  // namespace sbts::io
