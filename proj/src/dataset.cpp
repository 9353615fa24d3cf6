#include "causalkit/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "causalkit/errors.hpp"

namespace causalkit {

namespace {

// RFC-4180 style: fields may be quoted, quotes escape as "", records end at
// an unquoted newline. CR before LF is dropped.
std::vector<std::vector<std::string>> parse_csv(std::istream& in, const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    char c;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_started) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field.push_back(c);
                }
                break;
            case ',': end_field(); break;
            case '\r':
                if (in.peek() == '\n') break;  // swallow, LF closes the record
                field.push_back(c);
                break;
            case '\n': end_record(); break;
            default:
                field.push_back(c);
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw IoError(origin + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return errno == 0 && end == text.c_str() + text.size();
}

}  // namespace

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        auto [it, inserted] = index_.emplace(columns_[i].name, static_cast<int>(i));
        if (!inserted) throw ConfigError("duplicate column name: " + columns_[i].name);
        if (i > 0 && columns_[i].values.size() != columns_[0].values.size())
            throw ConfigError("column length mismatch in column: " + columns_[i].name);
    }
    rows_ = columns_.empty() ? 0 : columns_[0].values.size();
}

int Dataset::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown column: " + name);
    return it->second;
}

const Column& Dataset::column(int idx) const {
    if (idx < 0 || idx >= column_count())
        throw ConfigError("column index out of range: " + std::to_string(idx));
    return columns_[static_cast<std::size_t>(idx)];
}

std::vector<std::string> Dataset::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& c : columns_) names.push_back(c.name);
    return names;
}

Dataset dataset_from_rows(const std::vector<VariableMeta>& metadata,
                          const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows,
                          const std::string& origin) {
    if (metadata.empty()) throw ConfigError(origin + ": metadata table is empty");
    if (header.empty()) throw IoError(origin + ": empty file (no header row)");
    if (rows.empty()) throw IoError(origin + ": no data rows");

    std::unordered_map<std::string, std::size_t> header_pos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!header_pos.emplace(header[i], i).second)
            throw IoError(origin + ": duplicate column in header: " + header[i]);
    }
    for (const auto& m : metadata)
        if (header_pos.count(m.name) == 0)
            throw IoError(origin + ": missing column declared in metadata: " + m.name);
    if (header.size() != metadata.size()) {
        for (const auto& h : header) {
            const bool declared = std::any_of(metadata.begin(), metadata.end(),
                                              [&](const VariableMeta& m) { return m.name == h; });
            if (!declared) throw IoError(origin + ": column not declared in metadata: " + h);
        }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != header.size())
            throw IoError(origin + ": row " + std::to_string(r + 2) + " has " +
                          std::to_string(rows[r].size()) + " fields, expected " +
                          std::to_string(header.size()));
    }

    std::vector<Column> columns;
    columns.reserve(metadata.size());
    for (const auto& m : metadata) {
        const std::size_t pos = header_pos.at(m.name);
        Column col;
        col.name = m.name;

        bool numeric = true;
        double parsed = 0.0;
        for (const auto& row : rows) {
            if (!parse_double(row[pos], parsed)) {
                numeric = false;
                break;
            }
        }
        const bool continuous = m.kind == DeclaredKind::Continuous ||
                                (m.kind == DeclaredKind::Auto && numeric);
        if (continuous) {
            col.kind = ColumnKind::Continuous;
            col.values.reserve(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (!parse_double(rows[r][pos], parsed))
                    throw IoError(origin + ": column " + m.name + ", row " + std::to_string(r + 2) +
                                  ": cannot parse '" + rows[r][pos] + "' as a number");
                col.values.push_back(parsed);
            }
        } else {
            col.kind = ColumnKind::Categorical;
            std::unordered_map<std::string, double> codes;
            col.values.reserve(rows.size());
            for (const auto& row : rows) {
                auto [it, inserted] = codes.emplace(row[pos], static_cast<double>(col.levels.size()));
                if (inserted) {
                    col.levels.push_back(row[pos]);
                    if (col.levels.size() > kMaxCategoricalLevels)
                        throw ConfigError(origin + ": column " + m.name + " exceeds " +
                                          std::to_string(kMaxCategoricalLevels) +
                                          " categorical levels");
                }
                col.values.push_back(it->second);
            }
        }
        columns.push_back(std::move(col));
    }
    return Dataset(std::move(columns));
}

Dataset load_dataset(const std::filesystem::path& csv_path, const std::vector<VariableMeta>& metadata) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + csv_path.string());
    auto records = parse_csv(in, csv_path.string());
    if (records.empty()) throw IoError(csv_path.string() + ": empty file (no header row)");
    std::vector<std::string> header = std::move(records.front());
    records.erase(records.begin());
    return dataset_from_rows(metadata, header, records, csv_path.string());
}

Dataset load_dataset_auto(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + csv_path.string());
    auto records = parse_csv(in, csv_path.string());
    if (records.empty()) throw IoError(csv_path.string() + ": empty file (no header row)");
    std::vector<std::string> header = std::move(records.front());
    records.erase(records.begin());
    std::vector<VariableMeta> metadata;
    metadata.reserve(header.size());
    for (const auto& name : header) metadata.push_back({name, "", DeclaredKind::Auto});
    return dataset_from_rows(metadata, header, records, csv_path.string());
}

std::vector<VariableMeta> load_metadata_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metadata file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) throw IoError(path.string() + ": metadata must be a JSON array");

    std::vector<VariableMeta> out;
    for (const auto& item : doc) {
        VariableMeta m;
        if (!item.contains("name") || !item["name"].is_string())
            throw IoError(path.string() + ": metadata entry without a string 'name'");
        m.name = item["name"].get<std::string>();
        m.description = item.value("description", std::string{});
        const std::string kind = item.value("kind", std::string{"auto"});
        if (kind == "auto") m.kind = DeclaredKind::Auto;
        else if (kind == "continuous") m.kind = DeclaredKind::Continuous;
        else if (kind == "categorical") m.kind = DeclaredKind::Categorical;
        else throw IoError(path.string() + ": unknown kind '" + kind + "' for variable " + m.name);
        out.push_back(std::move(m));
    }
    if (out.empty()) throw IoError(path.string() + ": metadata array is empty");
    return out;
}

void save_metadata_json(const std::vector<VariableMeta>& metadata, const std::filesystem::path& path) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& m : metadata) {
        nlohmann::ordered_json item;
        item["name"] = m.name;
        item["description"] = m.description;
        item["kind"] = m.kind == DeclaredKind::Auto ? "auto"
                       : m.kind == DeclaredKind::Continuous ? "continuous"
                                                            : "categorical";
        doc.push_back(std::move(item));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metadata file: " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace causalkit
