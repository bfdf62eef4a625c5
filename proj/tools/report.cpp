#include "report.hpp"

#include <fstream>
#include <stdexcept>

namespace spinglass::cli {

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells)
{
    if (cells.size() != header_.size())
        throw std::logic_error("csv row width does not match the header");
    rows_.push_back(std::move(cells));
    return *this;
}

std::string CsvTable::str() const
{
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_)
        line(r);
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& body)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << body;
    if (!f)
        throw std::runtime_error("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& body) { write_text(path, body.dump(2) + "\n"); }

}  // namespace spinglass::cli
