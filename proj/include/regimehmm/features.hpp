#pragma once

#include <string>
#include <vector>

#include "regimehmm/labeling.hpp"

namespace regimehmm::pipeline {

// Names of the derived market factor columns, in append order.
const std::vector<std::string>& market_feature_names();

// Appends the derived market columns: 5-bar log close return, log(high/low),
// and the four pre-close ratios. The first 5 entries of the return column are
// NaN and are trimmed by the dataset loader.
void derive_market_features(labeling::BarSeries& series);

}  // namespace regimehmm::pipeline
