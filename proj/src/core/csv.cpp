#include "core/csv.hpp"

#include "core/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace compindex::csv {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, const std::string& context) {
    double out = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw DataError("invalid numeric value '" + field + "' in " + context);
    }
    return out;
}

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

namespace {

std::vector<std::vector<std::string>> tokenize(const std::string& text, const std::string& context) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;

    const auto flush_field = [&] {
        record.push_back(field);
        field.clear();
    };
    const auto flush_record = [&] {
        flush_field();
        records.push_back(record);
        record.clear();
        any = false;
    };

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
        switch (c) {
        case '"':
            if (!field.empty()) {
                throw DataError("stray quote inside unquoted field in " + context);
            }
            quoted = true;
            any = true;
            break;
        case ',':
            flush_field();
            any = true;
            break;
        case '\r':
            break;
        case '\n':
            if (any || !field.empty() || !record.empty()) {
                flush_record();
            }
            break;
        default:
            field += c;
            any = true;
            break;
        }
    }
    if (quoted) {
        throw DataError("unterminated quoted field in " + context);
    }
    if (any || !field.empty() || !record.empty()) {
        flush_record();
    }
    return records;
}

} // namespace

Table parse(const std::string& text, const std::string& context) {
    std::string body = text;
    if (body.size() >= 3 && body[0] == '\xEF' && body[1] == '\xBB' && body[2] == '\xBF') {
        body.erase(0, 3); // UTF-8 byte-order mark
    }
    auto records = tokenize(body, context);
    if (records.empty()) {
        throw DataError("empty CSV: " + context);
    }
    Table t;
    t.header = std::move(records.front());
    t.rows.assign(records.begin() + 1, records.end());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != t.header.size()) {
            std::ostringstream msg;
            msg << context << ": row " << (r + 2) << " has " << t.rows[r].size()
                << " fields, expected " << t.header.size();
            throw DataError(msg.str());
        }
    }
    return t;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    return parse(text, path.string());
}

std::string to_string(const Table& table) {
    std::string out;
    const auto append_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += escape(row[i]);
        }
        out += '\n';
    };
    append_row(table.header);
    for (const auto& row : table.rows) {
        append_row(row);
    }
    return out;
}

void write_file(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    out << to_string(table);
}

} // namespace compindex::csv
