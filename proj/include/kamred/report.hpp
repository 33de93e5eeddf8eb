#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <variant>
#include <vector>

namespace kamred {

inline constexpr const char* kVersion = "0.1.0";

// %.17g
std::string fmt17(double v);

// Column-ordered CSV; numeric cells printed with 17 significant digits.
class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(std::vector<Cell> row);
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

void write_text(const std::string& path, const std::string& text);
// Sorted keys, two-space indent, trailing newline.
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// Build metadata echoed into every manifest.
nlohmann::json build_info();
// {command, config, seed, outputs, build}
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config, std::uint64_t seed,
                             const std::vector<std::string>& outputs);

} // namespace kamred
