#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace polymer {

enum class Format { csv, json };

Format parse_format(const std::string& name);
std::string format_extension(Format f);

// Tidy columnar result. Cells are JSON scalars so numbers keep their type in
// JSON-lines output; CSV renders them with round-trip precision.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;

    void add(std::vector<nlohmann::json> row);
};

class DigestMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// RFC 4180 rendering (CRLF line ends, quoted when needed).
std::string render_csv(const Table& t, bool header = true);
// One JSON object per line.
std::string render_json_lines(const Table& t);

// Writes `path` through `path.partial` and a rename. With `append`, existing
// rows are kept and must all carry `digest` in their digest column; a file
// holding a different digest is rejected. An empty table still gets its
// header (CSV) or an empty file (JSON).
void write_table(const Table& t, const std::filesystem::path& path, Format format,
                 const std::string& digest, bool append);

// Plot-ready export of a finished table; same format contract as write_table
// without appending.
void emit_plot_data(const Table& t, const std::filesystem::path& path, Format format,
                    const std::string& digest);

// Sibling file for a secondary table: out/stem.<name>.<ext>.
std::filesystem::path sibling_path(const std::filesystem::path& primary, const std::string& name,
                                   Format format);

// Parses an RFC 4180 document into records (used by append checks and tests).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace polymer
