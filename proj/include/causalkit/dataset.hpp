#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace causalkit {

enum class ColumnKind { Continuous, Categorical };
enum class DeclaredKind { Auto, Continuous, Categorical };

// One entry of the variable-description table. Descriptions feed oracle
// prompts; kind overrides the loader's numeric-vs-text inference.
struct VariableMeta {
    std::string name;
    std::string description;
    DeclaredKind kind = DeclaredKind::Auto;
};

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    // Continuous: raw values. Categorical: level codes (0-based, assigned in
    // order of first appearance), with `levels` mapping code -> label.
    std::vector<double> values;
    std::vector<std::string> levels;
};

constexpr std::size_t kMaxCategoricalLevels = 64;

// Column-ordered tabular data; column order matches the metadata table it
// was loaded with, which is also the graph node order.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Column> columns);

    std::size_t row_count() const { return rows_; }
    int column_count() const { return static_cast<int>(columns_.size()); }

    // Throws ConfigError on unknown names.
    int index_of(const std::string& name) const;
    bool has_column(const std::string& name) const { return index_.count(name) != 0; }

    const Column& column(int idx) const;
    const Column& column(const std::string& name) const { return column(index_of(name)); }
    std::vector<std::string> column_names() const;

private:
    std::vector<Column> columns_;
    std::unordered_map<std::string, int> index_;
    std::size_t rows_ = 0;
};

// CSV ingestion (RFC-4180 style quoting, UTF-8, mandatory header row).
// Header must equal the metadata names as a set; columns are reordered to
// metadata order. Kind is inferred per column (numeric-parseable ->
// continuous, else categorical) unless the metadata overrides it.
Dataset load_dataset(const std::filesystem::path& csv_path, const std::vector<VariableMeta>& metadata);

// Metadata-free ingestion: names come from the header, descriptions are
// empty, kinds are inferred. Used where only the numbers matter.
Dataset load_dataset_auto(const std::filesystem::path& csv_path);

// In-memory variant used by fixtures and tests; same validation rules.
Dataset dataset_from_rows(const std::vector<VariableMeta>& metadata,
                          const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows,
                          const std::string& origin = "<memory>");

std::vector<VariableMeta> load_metadata_json(const std::filesystem::path& path);
void save_metadata_json(const std::vector<VariableMeta>& metadata, const std::filesystem::path& path);

}  // namespace causalkit
