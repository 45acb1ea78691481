#include "regimehmm/matrix.hpp"

#include <cmath>

namespace regimehmm {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) {
        return {};
    }
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) {
            fail(ErrorCode::dimension_mismatch, "from_rows: ragged row lengths");
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[i][j];
        }
    }
    return m;
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

ObservationMatrix ObservationMatrix::from_columns(const std::vector<std::vector<double>>& cols) {
    if (cols.empty()) {
        return {};
    }
    ObservationMatrix m(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j].size() != m.n_rows()) {
            fail(ErrorCode::dimension_mismatch, "from_columns: ragged column lengths");
        }
        for (std::size_t t = 0; t < m.n_rows(); ++t) {
            m.at(t, j) = cols[j][t];
        }
    }
    return m;
}

std::vector<double> ObservationMatrix::row(std::size_t t) const {
    std::vector<double> out(n_cols_);
    for (std::size_t j = 0; j < n_cols_; ++j) {
        out[j] = at(t, j);
    }
    return out;
}

bool ObservationMatrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

}  // namespace regimehmm
