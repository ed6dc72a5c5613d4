#include "polymer/table.hpp"

#include "polymer/digest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace polymer {

namespace {

std::string render_cell(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return v.dump();
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_null()) return "";
    return v.dump();
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_existing(const std::string& text, const Table& t, Format format, const std::string& digest) {
    if (format == Format::csv) {
        const auto records = parse_csv(text);
        if (records.empty()) return;
        if (records.front() != t.columns)
            throw DigestMismatch("append: existing file has different columns");
        const auto it = std::find(t.columns.begin(), t.columns.end(), "digest");
        if (it == t.columns.end()) throw DigestMismatch("append: table has no digest column");
        const auto col = static_cast<std::size_t>(it - t.columns.begin());
        for (std::size_t r = 1; r < records.size(); ++r)
            if (records[r].size() <= col || records[r][col] != digest)
                throw DigestMismatch("append: existing rows carry a different config digest");
        return;
    }
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        if (!j.contains("digest") || j.at("digest") != digest)
            throw DigestMismatch("append: existing rows carry a different config digest");
    }
}

}  // namespace

Format parse_format(const std::string& name) {
    if (name == "csv") return Format::csv;
    if (name == "json") return Format::json;
    throw std::invalid_argument("unknown format '" + name + "' (expected csv or json)");
}

std::string format_extension(Format f) { return f == Format::csv ? "csv" : "jsonl"; }

void Table::add(std::vector<nlohmann::json> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("table " + name + ": row width mismatch");
    rows.push_back(std::move(row));
}

std::string render_csv(const Table& t, bool header) {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += quote(cells[i]);
        }
        out += "\r\n";
    };
    if (header) line(t.columns);
    for (const auto& row : t.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (const auto& v : row) cells.push_back(render_cell(v));
        line(cells);
    }
    return out;
}

std::string render_json_lines(const Table& t) {
    std::string out;
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = row[i];
        out += obj.dump() + "\n";
    }
    return out;
}

void write_table(const Table& t, const std::filesystem::path& path, Format format,
                 const std::string& digest, bool append) {
    std::string body;
    bool header = true;
    if (append && std::filesystem::exists(path)) {
        body = read_file(path);
        check_existing(body, t, format, digest);
        header = body.empty();
    }
    body += format == Format::csv ? render_csv(t, header) : render_json_lines(t);

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path partial = path;
    partial += ".partial";
    {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + partial.string() + " for writing");
        out << body;
        if (!out) throw std::runtime_error("write failed for " + partial.string());
    }
    std::filesystem::rename(partial, path);
}

void emit_plot_data(const Table& t, const std::filesystem::path& path, Format format,
                    const std::string& digest) {
    write_table(t, path, format, digest, false);
}

std::filesystem::path sibling_path(const std::filesystem::path& primary, const std::string& name,
                                   Format format) {
    std::filesystem::path p = primary;
    p.replace_filename(primary.stem().string() + "." + name + "." + format_extension(format));
    return p;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            record.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(record));
            record.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (any) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace polymer
