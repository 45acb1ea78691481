#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "regimehmm/labeling.hpp"

namespace regimehmm::io {

// Shortest round-trip decimal form; used by every writer so that identical
// values always serialize to identical bytes.
std::string format_double(double value);

// Bar CSV: header row with a leading "date" column (ISO-8601), recognized
// price columns (open, high, low, close, pre_close, volume), and arbitrary
// numeric factor columns. Empty cells and "nan" parse as NaN.
labeling::BarSeries read_bar_csv(const std::filesystem::path& path);
void write_bar_csv(const std::filesystem::path& path, const labeling::BarSeries& series);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_table(const std::filesystem::path& path, const Table& table);

}  // namespace regimehmm::io
