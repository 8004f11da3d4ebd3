#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace setid {

/// Shortest round-trip-safe text: 17 significant digits.
std::string format_double(double value);

/// Line-oriented CSV writer; throws ConfigError if the file cannot be opened.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(double value);
    CsvWriter& operator<<(long value);
    CsvWriter& operator<<(int value);
    void end_row();

private:
    void separator();

    std::ofstream out_;
    bool row_started_ = false;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Column index by name; throws ShapeError if missing.
    std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

} // namespace setid
