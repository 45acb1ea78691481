#include "regimehmm/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace regimehmm::io {

namespace {

const char* const kPriceColumns[] = {"open", "high", "low", "close", "pre_close",
                                     "volume"};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    if (cell.empty() || cell == "nan" || cell == "NaN") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double value = 0.0;
    const auto* begin = cell.data();
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        fail(ErrorCode::parse_failure, "row " + std::to_string(row) + ", column '" +
                                           column + "': cannot parse '" + cell + "'");
    }
    return value;
}

std::vector<double>* price_column(labeling::BarSeries& series, const std::string& name) {
    if (name == "open") return &series.open;
    if (name == "high") return &series.high;
    if (name == "low") return &series.low;
    if (name == "close") return &series.close;
    if (name == "pre_close") return &series.pre_close;
    if (name == "volume") return &series.volume;
    return nullptr;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return {buf, ptr};
}

labeling::BarSeries read_bar_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::io_failure, "cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorCode::parse_failure, "'" + path.string() + "' is empty");
    }
    const auto header = split_line(line);
    if (header.empty() || header.front() != "date") {
        fail(ErrorCode::parse_failure,
             "'" + path.string() + "': first column must be 'date'");
    }

    labeling::BarSeries series;
    std::vector<std::vector<double>*> sinks(header.size(), nullptr);
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty()) {
            fail(ErrorCode::parse_failure, "empty column name in header");
        }
        auto* price = price_column(series, header[c]);
        sinks[c] = price != nullptr ? price : &series.add_factor(header[c]);
    }

    std::size_t row = 1;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != header.size()) {
            fail(ErrorCode::parse_failure,
                 "row " + std::to_string(row) + ": expected " +
                     std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
        }
        if (fields.front().empty()) {
            fail(ErrorCode::parse_failure, "row " + std::to_string(row) + ": empty date");
        }
        series.timestamps.push_back(fields.front());
        for (std::size_t c = 1; c < fields.size(); ++c) {
            sinks[c]->push_back(parse_cell(fields[c], row, header[c]));
        }
        ++row;
    }
    if (series.timestamps.empty()) {
        fail(ErrorCode::parse_failure, "'" + path.string() + "' has no data rows");
    }
    series.validate();
    return series;
}

void write_bar_csv(const std::filesystem::path& path, const labeling::BarSeries& series) {
    series.validate();
    std::ofstream out(path);
    if (!out) {
        fail(ErrorCode::io_failure, "cannot write '" + path.string() + "'");
    }
    out << "date";
    std::vector<const std::vector<double>*> columns;
    for (const char* name : kPriceColumns) {
        const auto* col = price_column(const_cast<labeling::BarSeries&>(series), name);
        if (!col->empty()) {
            out << ',' << name;
            columns.push_back(col);
        }
    }
    for (const auto& [name, values] : series.factors) {
        out << ',' << name;
        columns.push_back(&values);
    }
    out << '\n';
    for (std::size_t t = 0; t < series.size(); ++t) {
        out << series.timestamps[t];
        for (const auto* col : columns) {
            out << ',' << format_double((*col)[t]);
        }
        out << '\n';
    }
    if (!out) {
        fail(ErrorCode::io_failure, "write failed for '" + path.string() + "'");
    }
}

void write_table(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path);
    if (!out) {
        fail(ErrorCode::io_failure, "cannot write '" + path.string() + "'");
    }
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        out << (c > 0 ? "," : "") << table.header[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c > 0 ? "," : "") << row[c];
        }
        out << '\n';
    }
    if (!out) {
        fail(ErrorCode::io_failure, "write failed for '" + path.string() + "'");
    }
}

}  // namespace regimehmm::io
