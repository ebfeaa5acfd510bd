#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "avsig/common.hpp"
#include "avsig/csv.hpp"
#include "avsig/ingest.hpp"
#include "avsig/rules.hpp"

namespace avsig {

/// Sparse 0/1 matrix stored as sorted unique (row, col) cells.
class IndicatorMatrix {
public:
    IndicatorMatrix() = default;
    IndicatorMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    const std::vector<std::pair<int, int>>& cells() const { return cells_; }
    size_t nnz() const { return cells_.size(); }

    std::vector<std::string>& row_labels() { return row_labels_; }
    std::vector<std::string>& col_labels() { return col_labels_; }
    const std::vector<std::string>& row_labels() const { return row_labels_; }
    const std::vector<std::string>& col_labels() const { return col_labels_; }

    void set(int r, int c) { cells_.emplace_back(r, c); }

    /// Sorts and deduplicates cells; call once after the last set().
    void finalize() {
        std::sort(cells_.begin(), cells_.end());
        cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    }

    bool get(int r, int c) const {
        return std::binary_search(cells_.begin(), cells_.end(), std::make_pair(r, c));
    }

    std::vector<size_t> row_sums() const {
        std::vector<size_t> s(rows_, 0);
        for (const auto& [r, c] : cells_) ++s[r];
        return s;
    }

    std::vector<size_t> col_sums() const {
        std::vector<size_t> s(cols_, 0);
        for (const auto& [r, c] : cells_) ++s[c];
        return s;
    }

    double density() const {
        if (rows_ == 0 || cols_ == 0) return 0.0;
        return static_cast<double>(cells_.size()) /
               (static_cast<double>(rows_) * static_cast<double>(cols_));
    }

    /// Dense double copy, rows x cols.
    std::vector<std::vector<double>> to_dense() const {
        std::vector<std::vector<double>> d(rows_, std::vector<double>(cols_, 0.0));
        for (const auto& [r, c] : cells_) d[r][c] = 1.0;
        return d;
    }

private:
    size_t rows_ = 0, cols_ = 0;
    std::vector<std::pair<int, int>> cells_;
    std::vector<std::string> row_labels_, col_labels_;
};

/// Per-app detection counts per category: n_apps x 3 (Adware, Harmful, Unknown).
struct CategoryCountMatrix {
    size_t rows = 0;
    std::vector<std::array<long, kNumCategories>> counts;
    std::vector<std::string> row_labels;

    std::vector<std::vector<double>> to_dense() const {
        std::vector<std::vector<double>> d(rows, std::vector<double>(kNumCategories, 0.0));
        for (size_t i = 0; i < rows; ++i)
            for (int j = 0; j < kNumCategories; ++j)
                d[i][j] = static_cast<double>(counts[i][j]);
        return d;
    }
};

struct CorrelationMatrix {
    size_t size = 0;
    std::vector<std::vector<double>> values;   // symmetric, unit diagonal
    std::vector<std::string> labels;
    std::vector<bool> zero_variance;           // flagged columns (entries forced to 0)
};

/// A[i][j] = 1 iff engine j flagged app i at least once.
inline IndicatorMatrix build_engine_matrix(const Dataset& ds) {
    IndicatorMatrix m(ds.n_apps(), ds.n_engines());
    m.row_labels() = ds.app_ids();
    m.col_labels() = ds.engine_ids();
    for (size_t i = 0; i < ds.n_records(); ++i)
        m.set(ds.app_index_of_record(i), ds.engine_index_of_record(i));
    m.finalize();
    return m;
}

namespace detail {

inline size_t infer_n_apps(const std::vector<NormalizedDetection>& nd) {
    int mx = -1;
    for (const auto& d : nd) mx = std::max(mx, d.app_idx);
    return static_cast<size_t>(mx + 1);
}

inline std::vector<std::string> app_labels(const std::vector<NormalizedDetection>& nd,
                                           size_t n_apps) {
    std::vector<std::string> labels(n_apps);
    for (const auto& d : nd) labels[d.app_idx] = d.app_id;
    return labels;
}

} // namespace detail

/// B[i][j] = 1 iff app i received class j from any engine; columns ordered
/// by rule rank, one per distinct class, present even when never matched.
inline IndicatorMatrix build_class_matrix(const std::vector<NormalizedDetection>& nd,
                                          const RuleSet& rs) {
    auto classes = rs.class_names();
    std::map<std::string, int> col_of;
    for (size_t j = 0; j < classes.size(); ++j) col_of[classes[j]] = static_cast<int>(j);

    size_t n_apps = detail::infer_n_apps(nd);
    IndicatorMatrix m(n_apps, classes.size());
    m.col_labels() = classes;
    m.row_labels() = detail::app_labels(nd, n_apps);
    for (const auto& d : nd) {
        auto it = col_of.find(d.class_name);
        if (it == col_of.end())
            throw ValidationError("class not in rule set: " + d.class_name);
        m.set(d.app_idx, it->second);
    }
    m.finalize();
    return m;
}

/// D[i][j] = number of detections app i received in category j.
inline CategoryCountMatrix build_category_counts(const std::vector<NormalizedDetection>& nd) {
    CategoryCountMatrix m;
    m.rows = detail::infer_n_apps(nd);
    m.counts.assign(m.rows, {0, 0, 0});
    m.row_labels = detail::app_labels(nd, m.rows);
    for (const auto& d : nd) ++m.counts[d.app_idx][static_cast<int>(d.category)];
    return m;
}

/// Sample Pearson correlation of the columns of M. Zero-variance columns
/// get 0 off-diagonal entries (diagonal stays 1) and are flagged instead of
/// propagating NaN. Requires at least 2 rows.
inline CorrelationMatrix pearson_correlation(const std::vector<std::vector<double>>& M,
                                             std::vector<std::string> labels = {}) {
    size_t n = M.size();
    if (n < 2) throw ValidationError("pearson_correlation: need at least 2 rows");
    size_t p = M[0].size();
    for (const auto& row : M)
        if (row.size() != p)
            throw ValidationError("pearson_correlation: ragged matrix");

    std::vector<double> mean(p, 0.0);
    for (const auto& row : M)
        for (size_t j = 0; j < p; ++j) mean[j] += row[j];
    for (auto& m : mean) m /= static_cast<double>(n);

    // Centered cross-products, upper triangle.
    std::vector<std::vector<double>> cov(p, std::vector<double>(p, 0.0));
    for (const auto& row : M)
        for (size_t i = 0; i < p; ++i) {
            double di = row[i] - mean[i];
            for (size_t j = i; j < p; ++j) cov[i][j] += di * (row[j] - mean[j]);
        }

    CorrelationMatrix out;
    out.size = p;
    out.labels = labels.empty() ? std::vector<std::string>(p) : std::move(labels);
    out.zero_variance.assign(p, false);
    out.values.assign(p, std::vector<double>(p, 0.0));
    std::vector<double> sd(p);
    for (size_t j = 0; j < p; ++j) {
        sd[j] = std::sqrt(std::max(cov[j][j], 0.0));
        out.zero_variance[j] = (sd[j] == 0.0);
        out.values[j][j] = 1.0;
    }
    for (size_t i = 0; i < p; ++i)
        for (size_t j = i + 1; j < p; ++j) {
            double v = 0.0;
            if (sd[i] > 0.0 && sd[j] > 0.0) {
                v = cov[i][j] / (sd[i] * sd[j]);
                v = std::clamp(v, -1.0, 1.0);
            }
            out.values[i][j] = out.values[j][i] = v;
        }
    return out;
}

inline CorrelationMatrix pearson_correlation(const IndicatorMatrix& m) {
    return pearson_correlation(m.to_dense(), m.col_labels());
}

inline CorrelationMatrix pearson_correlation(const CategoryCountMatrix& m) {
    std::vector<std::string> labels;
    for (int j = 0; j < kNumCategories; ++j)
        labels.push_back(category_name(static_cast<Category>(j)));
    return pearson_correlation(m.to_dense(), std::move(labels));
}

/// Histogram of row sums of A (per-app distinct-engine detection counts).
inline std::map<size_t, size_t> detection_histogram(const IndicatorMatrix& A) {
    std::map<size_t, size_t> h;
    for (size_t s : A.row_sums()) ++h[s];
    return h;
}

/// Column sums of B keyed by class label.
inline std::map<std::string, size_t> class_frequency(const IndicatorMatrix& B) {
    std::map<std::string, size_t> out;
    auto sums = B.col_sums();
    for (size_t j = 0; j < B.cols(); ++j) out[B.col_labels()[j]] = sums[j];
    return out;
}

// --- delimited exports ----------------------------------------------------

/// Triplet form `row,col,value`, one cell per line.
inline void write_triplets(std::ostream& os, const IndicatorMatrix& m) {
    os << "row,col,value\n";
    for (const auto& [r, c] : m.cells())
        os << r << ',' << c << ",1\n";
}

/// Labels sidecar: `kind,index,label` with kind in {row, col}.
inline void write_labels(std::ostream& os, const std::vector<std::string>& row_labels,
                         const std::vector<std::string>& col_labels) {
    os << "kind,index,label\n";
    for (size_t i = 0; i < row_labels.size(); ++i)
        csv_write_row(os, {"row", std::to_string(i), row_labels[i]});
    for (size_t j = 0; j < col_labels.size(); ++j)
        csv_write_row(os, {"col", std::to_string(j), col_labels[j]});
}

inline void write_correlation(std::ostream& os, const CorrelationMatrix& C) {
    std::vector<std::string> header{"label"};
    header.insert(header.end(), C.labels.begin(), C.labels.end());
    csv_write_row(os, header);
    char buf[32];
    for (size_t i = 0; i < C.size; ++i) {
        std::vector<std::string> row{C.labels[i]};
        for (size_t j = 0; j < C.size; ++j) {
            std::snprintf(buf, sizeof buf, "%.9g", C.values[i][j]);
            row.emplace_back(buf);
        }
        csv_write_row(os, row);
    }
}

} // namespace avsig
