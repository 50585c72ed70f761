#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pbm::sim {

/// Dataset content or shape problem. `row` is the 0-based data row when known.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg, long row = -1) : std::runtime_error(msg), row_(row) {}
    long row() const { return row_; }

private:
    long row_;
};

struct IndexRange {
    size_t begin = 0;
    size_t end = 0;

    size_t size() const { return end > begin ? end - begin : 0; }
    bool empty() const { return size() == 0; }
};

/// Uniformly sampled signals with train/validation/test boundaries.
struct Dataset {
    std::vector<double> t;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    size_t train_end = 0;
    size_t val_end = 0;

    size_t size() const { return t.size(); }
    double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }

    bool has(std::string_view name) const;
    const std::vector<double>& column(std::string_view name) const;
    void add_column(std::string name, std::vector<double> values);

    IndexRange train() const { return {0, train_end}; }
    IndexRange validation() const { return {train_end, val_end}; }
    IndexRange test() const { return {val_end, size()}; }

    /// Sets the boundaries from segment lengths; their sum must not exceed size().
    void set_split(size_t train, size_t validation, size_t test);

    /// Throws DataError when the grid, the values or the split are invalid.
    void validate() const;
};

/// CSV with a header row; first column `t`.
Dataset parse_csv(std::string_view text);
Dataset read_csv(const std::string& path);
std::string to_csv(const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);

/// Model variable ("entity.var") to data column name.
class SignalMap {
public:
    SignalMap() = default;
    explicit SignalMap(std::map<std::string, std::string> var_to_column) : map_(std::move(var_to_column)) {}

    /// Parses `var=column,var=column`.
    static SignalMap parse(std::string_view text);
    /// pump.v=u, tank1.h=h1, tank2.h=h2.
    static SignalMap water_tanks();

    /// Empty when the variable is not mapped.
    std::string column_for(std::string_view var) const;
    /// Empty when no variable maps to `column`.
    std::string var_for(std::string_view column) const;

    const std::map<std::string, std::string>& entries() const { return map_; }
    std::string to_string() const;

private:
    std::map<std::string, std::string> map_;
};

}  // namespace pbm::sim
