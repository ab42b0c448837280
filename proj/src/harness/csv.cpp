#include "ebla/harness.hpp"

#include <fstream>
#include <sstream>

namespace ebla::harness {

int CsvTable::column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return static_cast<int>(k);
    return -1;
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
    CsvTable table;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, any = false;
    int line = 1, row_line = 1;

    auto end_row = [&] {
        if (!any && fields.empty() && field.empty()) return;  // blank line
        fields.push_back(field);
        field.clear();
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw InputError(source + ":" + std::to_string(row_line) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
            table.lines.push_back(row_line);
        }
        fields.clear();
        any = false;
    };

    for (std::size_t k = 0; k < text.size(); ++k) {
        const char c = text[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < text.size() && text[k + 1] == '"') {
                    field += '"';
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"': quoted = any = true; break;
            case ',':
                fields.push_back(field);
                field.clear();
                any = true;
                break;
            case '\r': break;
            case '\n':
                end_row();
                row_line = ++line;
                break;
            default:
                field += c;
                any = true;
        }
    }
    if (quoted) throw InputError(source + ":" + std::to_string(row_line) + ": unterminated quoted field");
    end_row();
    if (table.header.empty()) throw InputError(source + ": missing header row");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path.string());
}

namespace {
std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}
}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
    auto row = [&](const std::vector<std::string>& fields) {
        for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? "," : "") << escape(fields[k]);
        out << '\n';
    };
    row(table.header);
    for (const auto& r : table.rows) row(r);
}

std::string to_csv_string(const CsvTable& table) {
    std::ostringstream ss;
    write_csv(ss, table);
    return ss.str();
}

nlohmann::json table_to_json(const CsvTable& table) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : table.rows) {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t k = 0; k < table.header.size(); ++k) obj[table.header[k]] = r[k];
        arr.push_back(std::move(obj));
    }
    return arr;
}

std::filesystem::path emit_json(const OutputOptions& out, const std::string& stem, const nlohmann::json& j) {
    std::filesystem::create_directories(out.out_dir);
    const auto path = out.out_dir / (stem + ".json");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << '\n';
    return path;
}

std::filesystem::path emit_table(const OutputOptions& out, const std::string& stem, const CsvTable& table) {
    if (out.format == Format::Json) return emit_json(out, stem, table_to_json(table));
    std::filesystem::create_directories(out.out_dir);
    const auto path = out.out_dir / (stem + ".csv");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    write_csv(f, table);
    return path;
}

}  // namespace ebla::harness
