#include "setid/csv.hpp"

#include "setid/errors.hpp"

#include <cstdio>
#include <sstream>

namespace setid {

std::string format_double(double value)
{
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(len));
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path)
{
    if (!out_)
        throw ConfigError("output: cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i)
        out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::separator()
{
    if (row_started_)
        out_ << ',';
    row_started_ = true;
}

CsvWriter& CsvWriter::operator<<(double value)
{
    separator();
    out_ << format_double(value);
    return *this;
}

CsvWriter& CsvWriter::operator<<(long value)
{
    separator();
    out_ << value;
    return *this;
}

CsvWriter& CsvWriter::operator<<(int value) { return *this << static_cast<long>(value); }

void CsvWriter::end_row()
{
    out_ << '\n';
    row_started_ = false;
}

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw ShapeError("csv: missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read '" + path.string() + "'");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line))
        throw ShapeError("csv: '" + path.string() + "' is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            table.header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(std::strtod(cell.c_str(), nullptr));
        if (row.size() != table.header.size())
            throw ShapeError("csv: row width mismatch in '" + path.string() + "'");
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace setid
