#include "output.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace sim
{

std::string format_value(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string column_name(const rydberg::Axis& axis)
{
    if (axis.unit.empty())
        return axis.name;
    std::string unit;
    for (char c : axis.unit)
    {
        if (c == '/')
            unit += "_per_";
        else if (std::isalnum(static_cast<unsigned char>(c)))
            unit += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else
            unit += '_';
    }
    return axis.name + "_" + unit;
}

Table to_table(const rydberg::SpectrumResult& s)
{
    if (s.values.size() != s.axis.size())
        throw std::invalid_argument("spectrum values do not match the axis");
    Table t{{column_name(s.axis), s.quantity}, {}};
    t.rows.reserve(s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i)
        t.rows.push_back({s.axis.values[i], s.values[i]});
    return t;
}

Table to_table(const rydberg::MapResult& m) { return to_table({&m}, {m.quantity}); }

Table to_table(const std::vector<const rydberg::MapResult*>& maps, const std::vector<std::string>& names)
{
    if (maps.empty() || maps.size() != names.size())
        throw std::invalid_argument("to_table: need one name per map");
    const rydberg::MapResult& first = *maps.front();
    for (const auto* m : maps)
    {
        m->check();
        if (m->x_axis.values != first.x_axis.values || m->y_axis.values != first.y_axis.values)
            throw std::invalid_argument("to_table: maps are on different grids");
    }
    Table t;
    t.columns = {column_name(first.y_axis), column_name(first.x_axis)};
    t.columns.insert(t.columns.end(), names.begin(), names.end());
    const std::size_t nx = first.x_axis.size(), ny = first.y_axis.size();
    t.rows.reserve(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
        {
            std::vector<double> row{first.y_axis.values[iy], first.x_axis.values[ix]};
            for (const auto* m : maps)
                row.push_back(m->at(iy, ix));
            t.rows.push_back(std::move(row));
        }
    return t;
}

void write_csv(const std::filesystem::path& path, const Table& table)
{
    for (const auto& row : table.rows)
    {
        if (row.size() != table.columns.size())
            throw std::invalid_argument("write_csv: row width differs from the header");
        for (double v : row)
            if (!std::isfinite(v))
                throw NumericalError("refusing to write non-finite value to " + path.string());
    }

    std::string text;
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        text += (i ? "," : "") + table.columns[i];
    text += '\n';
    for (const auto& row : table.rows)
    {
        for (std::size_t i = 0; i < row.size(); ++i)
        {
            if (i)
                text += ',';
            text += format_value(row[i]);
        }
        text += '\n';
    }

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

nlohmann::ordered_json axis_json(const rydberg::Axis& axis)
{
    return {{"name", axis.name}, {"unit", axis.unit}, {"column", column_name(axis)}, {"points", axis.size()},
            {"values", axis.values}};
}

nlohmann::ordered_json sidecar(const rydberg::SpectrumResult& s)
{
    nlohmann::ordered_json j;
    j["quantity"] = s.quantity;
    j["axis"] = axis_json(s.axis);
    j["metadata"] = s.metadata;
    return j;
}

nlohmann::ordered_json sidecar(const rydberg::MapResult& m)
{
    nlohmann::ordered_json j;
    j["quantity"] = m.quantity;
    j["layout"] = "row-major, x fastest";
    j["x_axis"] = axis_json(m.x_axis);
    j["y_axis"] = axis_json(m.y_axis);
    j["metadata"] = m.metadata;
    return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

}
