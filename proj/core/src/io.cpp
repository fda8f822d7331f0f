#include "edflow/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace edflow {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) value = 0.0; // drop the sign of -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
    return std::string(buf, end);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::cell(double value) {
    if (column_++ > 0) body_ += ',';
    body_ += format_double(value);
    return *this;
}

CsvTable& CsvTable::cell(long long value) {
    if (column_++ > 0) body_ += ',';
    body_ += std::to_string(value);
    return *this;
}

CsvTable& CsvTable::cell(std::string_view text) {
    if (column_++ > 0) body_ += ',';
    if (text.find_first_of(",\"\n") == std::string_view::npos) {
        body_ += text;
        return *this;
    }
    body_ += '"';
    for (char ch : text) {
        if (ch == '"') body_ += '"';
        body_ += ch;
    }
    body_ += '"';
    return *this;
}

void CsvTable::end_row() {
    if (column_ != header_.size())
        throw std::logic_error("csv row has " + std::to_string(column_) + " cells, header has " +
                               std::to_string(header_.size()));
    body_ += '\n';
    column_ = 0;
    ++rows_;
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t c = 0; c < header_.size(); ++c) {
        if (c) out += ',';
        out += header_[c];
    }
    out += '\n';
    out += body_;
    return out;
}

void CsvTable::save(const std::filesystem::path& path) const { write_file_atomic(path, str()); }

} // namespace edflow
