#include "pbm/sim/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pbm/dsl/printer.hpp"
#include "pbm/util/io.hpp"

namespace pbm::sim {

bool Dataset::has(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& Dataset::column(std::string_view name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DataError("dataset has no column '" + std::string(name) + "'");
    return columns[it - names.begin()];
}

void Dataset::add_column(std::string name, std::vector<double> values) {
    if (values.size() != t.size()) throw DataError("column '" + name + "' length does not match the time grid");
    if (has(name)) throw DataError("duplicate column '" + name + "'");
    names.push_back(std::move(name));
    columns.push_back(std::move(values));
}

void Dataset::set_split(size_t train, size_t validation, size_t test) {
    if (train + validation + test > size()) {
        throw DataError("split " + std::to_string(train) + "," + std::to_string(validation) + "," +
                        std::to_string(test) + " exceeds " + std::to_string(size()) + " samples");
    }
    train_end = train;
    val_end = train + validation;
}

void Dataset::validate() const {
    const size_t n = t.size();
    if (n < 2) throw DataError("dataset needs at least two samples");
    const double step = t[1] - t[0];
    if (!(step > 0) || !std::isfinite(step)) throw DataError("time grid is not strictly increasing", 1);
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(t[i])) throw DataError("non-finite time value in row " + std::to_string(i), long(i));
        if (i > 0 && std::abs((t[i] - t[i - 1]) - step) >= 1e-9 * step) {
            throw DataError("time grid is not uniform at row " + std::to_string(i), long(i));
        }
    }
    for (size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].size() != n) throw DataError("column '" + names[c] + "' length does not match the time grid");
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(columns[c][i])) {
                throw DataError("non-finite value in column '" + names[c] + "' at row " + std::to_string(i), long(i));
            }
        }
    }
    if (!(0 < train_end && train_end < val_end && val_end <= n)) {
        throw DataError("invalid split: need 0 < train_end < val_end <= " + std::to_string(n));
    }
}

namespace {

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

}  // namespace

Dataset parse_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = trim(text.substr(pos, nl - pos));
        if (!line.empty()) lines.push_back(line);
        pos = nl + 1;
    }
    if (lines.empty()) throw DataError("empty CSV input");

    auto header = split_fields(lines[0]);
    for (auto& h : header) h = std::string(trim(h));
    if (header.empty() || header[0] != "t") throw DataError("first CSV column must be 't'");

    Dataset d;
    std::vector<std::vector<double>> cols(header.size());
    for (size_t r = 1; r < lines.size(); ++r) {
        long row = long(r) - 1;
        auto fields = split_fields(lines[r]);
        if (fields.size() != header.size()) {
            throw DataError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                " fields, expected " + std::to_string(header.size()),
                            row);
        }
        for (size_t c = 0; c < fields.size(); ++c) {
            std::string_view f = trim(fields[c]);
            double v = 0.0;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
                throw DataError("row " + std::to_string(row) + ", column '" + header[c] + "': not a number '" +
                                    std::string(f) + "'",
                                row);
            }
            if (!std::isfinite(v)) {
                throw DataError("row " + std::to_string(row) + ", column '" + header[c] + "': non-finite value",
                                row);
            }
            cols[c].push_back(v);
        }
    }
    d.t = std::move(cols[0]);
    for (size_t c = 1; c < header.size(); ++c) d.add_column(header[c], std::move(cols[c]));
    return d;
}

Dataset read_csv(const std::string& path) { return parse_csv(util::read_file(path)); }

std::string to_csv(const Dataset& data) {
    std::string out = "t";
    for (const auto& n : data.names) out += "," + quote_field(n);
    out += "\n";
    for (size_t i = 0; i < data.size(); ++i) {
        out += dsl::format_number(data.t[i]);
        for (const auto& col : data.columns) out += "," + dsl::format_number(col[i]);
        out += "\n";
    }
    return out;
}

void write_csv(const std::string& path, const Dataset& data) { util::write_file(path, to_csv(data)); }

SignalMap SignalMap::parse(std::string_view text) {
    std::map<std::string, std::string> m;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string_view item = trim(text.substr(pos, comma - pos));
        if (!item.empty()) {
            size_t eq = item.find('=');
            if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
                throw std::invalid_argument("signal map entry must be var=column: '" + std::string(item) + "'");
            }
            std::string var(trim(item.substr(0, eq)));
            std::string col(trim(item.substr(eq + 1)));
            if (!m.emplace(var, col).second) throw std::invalid_argument("variable mapped twice: '" + var + "'");
        }
        pos = comma + 1;
    }
    return SignalMap(std::move(m));
}

SignalMap SignalMap::water_tanks() { return SignalMap({{"pump.v", "u"}, {"tank1.h", "h1"}, {"tank2.h", "h2"}}); }

std::string SignalMap::column_for(std::string_view var) const {
    auto it = map_.find(std::string(var));
    return it == map_.end() ? std::string{} : it->second;
}

std::string SignalMap::var_for(std::string_view column) const {
    for (const auto& [var, col] : map_) {
        if (col == column) return var;
    }
    return {};
}

std::string SignalMap::to_string() const {
    std::string out;
    for (const auto& [var, col] : map_) {
        if (!out.empty()) out += ",";
        out += var + "=" + col;
    }
    return out;
}

}  // namespace pbm::sim
