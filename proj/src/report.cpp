#include "kamred/report.hpp"

#include "kamred/error.hpp"

#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kamred {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvTable::add_row(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw validation_error("csv", "row width does not match the header");
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < header_.size(); ++c) os << (c ? "," : "") << header_[c];
    os << '\n';
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>)
                        os << fmt17(v);
                    else
                        os << v;
                },
                row[c]);
        }
        os << '\n';
    }
    return os.str();
}

void CsvTable::write(const std::string& path) const { write_text(path, str()); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("io", "cannot open " + path + " for writing");
    f << text;
    if (!f) throw io_error("io", "write failed for " + path);
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("io", "cannot open " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("json", path + ": " + e.what());
    }
}

nlohmann::json build_info() {
    nlohmann::json b;
    b["kamred"] = kVersion;
    b["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    b["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                         "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#if defined(__clang__)
    b["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    b["compiler"] = std::string("gcc ") + __VERSION__;
#endif
    b["cxx_standard"] = static_cast<long>(__cplusplus);
    return b;
}

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config, std::uint64_t seed,
                             const std::vector<std::string>& outputs) {
    nlohmann::json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = seed;
    m["outputs"] = outputs;
    m["build"] = build_info();
    return m;
}

} // namespace kamred
