#pragma once

// Loading, normalizing, trimming, windowing and median-downsampling of
// multivariate time series.

#include "ganad/common.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ganad {

/// Timestamped multivariate measurements: one row per sample, one column per variable.
struct RawSeries {
  std::vector<double> timestamps;
  MatrixXd values;
  std::vector<std::string> column_names;
  std::optional<std::vector<int>> labels;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  /// Throws std::invalid_argument when row counts, names or labels are inconsistent.
  void validate() const;
};

/// Column roles for CSV ingestion.
struct CsvSchema {
  std::string timestamp_column = "timestamp";
  /// Ordered value columns. Empty selects every column that is not the timestamp or label.
  std::vector<std::string> value_columns;
  std::optional<std::string> label_column;
  /// Label text to 0/1. Empty means the label column holds numeric 0/1.
  std::map<std::string, int> label_mapping;
};

/// Timestamps are numbers, or date-times such as "22/12/2015 4:00:00 PM" and
/// "2015-12-22 16:00:00" read as seconds since 1970-01-01.
RawSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes `series` with a `timestamp` first column and a trailing `label_column` when labels exist.
/// Lines in `comments` are emitted first, each prefixed with "# ".
void write_csv(const std::filesystem::path& path, const RawSeries& series,
               const std::string& label_column = "label",
               const std::vector<std::string>& comments = {});

RawSeries trim_startup(const RawSeries& series, Index n_rows);

/// Per-column min-max statistics.
struct NormalizationStats {
  VectorXd min;
  VectorXd max;
};

NormalizationStats fit_normalizer(const RawSeries& series);

/// Maps each column to (x - min) / (max - min); constant columns map to 0. No clipping.
RawSeries apply_normalizer(const RawSeries& series, const NormalizationStats& stats);

/// Fixed-length subsequences of a series.
struct WindowSet {
  std::vector<MatrixXd> windows;  // each `length` x features
  Index raw_length = 0;           // T, before downsampling
  Index length = 0;               // L, rows per window
  Index shift = 1;
  Index downsample_factor = 1;
  std::vector<Index> source_offsets;
  std::optional<std::vector<std::vector<int>>> labels;  // per window, per row

  std::size_t size() const { return windows.size(); }
  Index features() const { return windows.empty() ? 0 : windows.front().cols(); }
};

/// Cuts floor((rows - length) / shift) + 1 windows; the trailing remainder is dropped.
WindowSet make_windows(const RawSeries& series, Index length, Index shift);

/// Replaces each block of `factor` rows by its per-column median. A downsampled row is
/// labelled anomalous when any row of its block is.
WindowSet downsample_median(const WindowSet& windows, Index factor);

/// Median with the even-count convention (mean of the two middle values). Reorders `values`.
double median_inplace(std::vector<double>& values);

/// Concatenates the rows of every window in order. Used on non-overlapping windows to get
/// back a per-timestep stream.
MatrixXd concat_rows(const WindowSet& windows);
std::vector<int> concat_labels(const WindowSet& windows);

/// Flat little-endian binary bundle of a WindowSet.
void write_window_bundle(const std::filesystem::path& path, const WindowSet& windows);
WindowSet read_window_bundle(const std::filesystem::path& path);

}  // namespace ganad
