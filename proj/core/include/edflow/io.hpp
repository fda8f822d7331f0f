#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace edflow {

// Shortest text that parses back to the same double ("nan", "inf", "-inf"
// for non-finite values). Locale independent.
std::string format_double(double value);

// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Minimal CSV builder: every field is either numeric or a plain token, and
// text fields are quoted only when they contain a comma, quote or newline.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& cell(double value);
    CsvTable& cell(long long value);
    CsvTable& cell(int value) { return cell(static_cast<long long>(value)); }
    CsvTable& cell(std::string_view text);
    CsvTable& cell(const char* text) { return cell(std::string_view(text)); }
    CsvTable& cell(const std::string& text) { return cell(std::string_view(text)); }
    CsvTable& cell(bool flag) { return cell(std::string_view(flag ? "true" : "false")); }
    void end_row();

    std::size_t rows() const { return rows_; }
    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::string body_;
    std::size_t column_ = 0;
    std::size_t rows_ = 0;
};

} // namespace edflow
