#pragma once

// CSV and JSON artifacts. Values are written with 12 significant digits in
// row-major grid order; anything non-finite is refused before a file is opened.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydberg/analysis.hpp"

namespace sim
{

class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::string format_value(double v);

/// "delta_p" + "MHz" -> "delta_p_mhz"
std::string column_name(const rydberg::Axis& axis);

Table to_table(const rydberg::SpectrumResult& s);

/// One row per grid point, (y, x, value) with x varying fastest.
Table to_table(const rydberg::MapResult& m);

/// Joins maps defined on the same grid into one table with one value column each.
Table to_table(const std::vector<const rydberg::MapResult*>& maps, const std::vector<std::string>& names);

void write_csv(const std::filesystem::path& path, const Table& table);

nlohmann::ordered_json axis_json(const rydberg::Axis& axis);
nlohmann::ordered_json sidecar(const rydberg::SpectrumResult& s);
nlohmann::ordered_json sidecar(const rydberg::MapResult& m);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

}
