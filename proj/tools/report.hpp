#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace spinglass::cli {

using Json = nlohmann::ordered_json;

/// CSV table with LF line endings; numbers are written with 17 significant digits.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& row(std::vector<std::string> cells);
    std::string str() const;
    std::size_t size() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Columns of an estimator row; empty strings mark parameters that do not apply.
inline const std::vector<std::string> kEstimateColumns{
    "model", "N", "beta", "t", "h1", "h2", "estimator", "value", "std_error", "n_samples", "seed",
    "config_hash"};

void write_text(const std::filesystem::path& path, const std::string& body);
void write_json(const std::filesystem::path& path, const Json& body);

}  // namespace spinglass::cli
