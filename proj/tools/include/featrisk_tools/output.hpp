#pragma once

#include "featrisk/linalg.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace featrisk::tools {

using Cell = std::variant<double, long long, std::string>;

// Shortest round-trip text for a double; nan / inf / -inf spelled out.
std::string format_double(double v);

// In-memory RFC 4180 table, written in one go so a failed run leaves no
// half-written file behind.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add(std::vector<Cell> row);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

CsvTable matrix_table(const Matrix& m);

// NaN and infinities become null.
nlohmann::json number_or_null(double v);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace featrisk::tools
