#include "ganad/series.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ganad {
namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\"");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(out);
}

// Seconds since 1970-01-01 for "d/m/Y H:M:S [AM|PM]" or "Y-m-d H:M:S" (also with a 'T').
bool parse_datetime(const std::string& text, double& out) {
  int a = 0, b = 0, c = 0, hh = 0, mm = 0, n = 0;
  double ss = 0.0;
  char meridiem[3] = {};
  int y = 0, mo = 0, d = 0;
  if (std::sscanf(text.c_str(), "%d/%d/%d %d:%d:%lf%n", &a, &b, &c, &hh, &mm, &ss, &n) == 6) {
    d = a, mo = b, y = c;
    std::string rest = trim(std::string_view(text).substr(static_cast<std::size_t>(n)));
    if (!rest.empty()) {
      if (std::sscanf(rest.c_str(), "%2s", meridiem) != 1 || rest.size() != 2) return false;
      const std::string m(meridiem);
      if (hh < 1 || hh > 12) return false;
      if (m == "AM" || m == "am") hh %= 12;
      else if (m == "PM" || m == "pm") hh = hh % 12 + 12;
      else return false;
    }
  } else if (std::sscanf(text.c_str(), "%d-%d-%d%*[ T]%d:%d:%lf%n", &a, &b, &c, &hh, &mm, &ss, &n) == 6 &&
             static_cast<std::size_t>(n) == text.size()) {
    y = a, mo = b, d = c;
  } else {
    return false;
  }
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(mo)),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok() || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0.0 || ss >= 61.0) return false;
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  out = static_cast<double>(days) * 86400.0 + hh * 3600.0 + mm * 60.0 + ss;
  return true;
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

void RawSeries::validate() const {
  if (values.cols() < 1) throw std::invalid_argument("series needs at least one column");
  if (static_cast<Index>(timestamps.size()) != values.rows())
    throw std::invalid_argument("timestamp count does not match row count");
  if (static_cast<Index>(column_names.size()) != values.cols())
    throw std::invalid_argument("column name count does not match column count");
  if (labels && static_cast<Index>(labels->size()) != values.rows())
    throw std::invalid_argument("label count does not match row count");
}

RawSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw std::runtime_error(path.string() + ": missing header row");

  auto find_column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::invalid_argument(path.string() + ": unknown column in schema: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t ts_col = find_column(schema.timestamp_column);
  std::optional<std::size_t> label_col;
  if (schema.label_column) label_col = find_column(*schema.label_column);

  std::vector<std::size_t> value_cols;
  std::vector<std::string> names;
  if (schema.value_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == ts_col || (label_col && c == *label_col)) continue;
      value_cols.push_back(c);
      names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.value_columns) {
      value_cols.push_back(find_column(name));
      names.push_back(name);
    }
  }
  if (value_cols.empty()) throw std::invalid_argument(path.string() + ": no value columns");

  std::vector<double> timestamps;
  std::vector<double> flat;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error(location(path, line_no) + "ragged row: expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()));
    double ts = 0.0;
    if (!parse_double(cells[ts_col], ts) && !parse_datetime(cells[ts_col], ts))
      throw std::runtime_error(location(path, line_no) + "unparseable timestamp '" +
                               cells[ts_col] + "'");
    if (!timestamps.empty() && ts <= timestamps.back())
      throw std::runtime_error(location(path, line_no) + "non-monotone timestamps");
    timestamps.push_back(ts);
    for (auto c : value_cols) {
      double v = 0.0;
      if (!parse_double(cells[c], v))
        throw std::runtime_error(location(path, line_no) + "non-numeric cell '" + cells[c] +
                                 "' in column " + header[c]);
      flat.push_back(v);
    }
    if (label_col) {
      const auto& text = cells[*label_col];
      if (!schema.label_mapping.empty()) {
        auto it = schema.label_mapping.find(text);
        if (it == schema.label_mapping.end())
          throw std::runtime_error(location(path, line_no) + "unmapped label '" + text + "'");
        labels.push_back(it->second);
      } else {
        double v = 0.0;
        if (!parse_double(text, v) || (v != 0.0 && v != 1.0))
          throw std::runtime_error(location(path, line_no) + "label must be 0 or 1, got '" +
                                   text + "'");
        labels.push_back(static_cast<int>(v));
      }
    }
  }

  RawSeries series;
  const auto rows = static_cast<Index>(timestamps.size());
  const auto cols = static_cast<Index>(value_cols.size());
  series.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(flat.data(), rows, cols);
  series.timestamps = std::move(timestamps);
  series.column_names = std::move(names);
  if (label_col) series.labels = std::move(labels);
  return series;
}

void write_csv(const std::filesystem::path& path, const RawSeries& series,
               const std::string& label_column, const std::vector<std::string>& comments) {
  series.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path.string());
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "timestamp";
  for (const auto& name : series.column_names) out << ',' << name;
  if (series.labels) out << ',' << label_column;
  out << '\n';
  out << std::setprecision(17);
  for (Index r = 0; r < series.rows(); ++r) {
    out << series.timestamps[static_cast<std::size_t>(r)];
    for (Index c = 0; c < series.cols(); ++c) out << ',' << series.values(r, c);
    if (series.labels) out << ',' << (*series.labels)[static_cast<std::size_t>(r)];
    out << '\n';
  }
}

RawSeries trim_startup(const RawSeries& series, Index n_rows) {
  if (n_rows < 0) throw std::invalid_argument("trim count must be non-negative");
  if (n_rows >= series.rows())
    throw std::invalid_argument("trim count " + std::to_string(n_rows) +
                                " must be below the row count " + std::to_string(series.rows()));
  RawSeries out;
  const Index keep = series.rows() - n_rows;
  out.values = series.values.bottomRows(keep);
  out.timestamps.assign(series.timestamps.begin() + n_rows, series.timestamps.end());
  out.column_names = series.column_names;
  if (series.labels) out.labels = std::vector<int>(series.labels->begin() + n_rows, series.labels->end());
  return out;
}

NormalizationStats fit_normalizer(const RawSeries& series) {
  if (series.rows() < 1) throw std::invalid_argument("cannot fit normalizer on empty series");
  return {series.values.colwise().minCoeff().transpose(),
          series.values.colwise().maxCoeff().transpose()};
}

RawSeries apply_normalizer(const RawSeries& series, const NormalizationStats& stats) {
  if (stats.min.size() != series.cols() || stats.max.size() != series.cols())
    throw std::invalid_argument("normalizer has " + std::to_string(stats.min.size()) +
                                " columns, series has " + std::to_string(series.cols()));
  RawSeries out = series;
  for (Index c = 0; c < series.cols(); ++c) {
    const double range = stats.max(c) - stats.min(c);
    if (range > 0.0) {
      out.values.col(c) = (series.values.col(c).array() - stats.min(c)) / range;
    } else {
      out.values.col(c).setZero();
    }
  }
  return out;
}

WindowSet make_windows(const RawSeries& series, Index length, Index shift) {
  if (length < 1) throw std::invalid_argument("window length must be positive");
  if (shift < 1) throw std::invalid_argument("window shift must be positive");
  if (length > series.rows())
    throw std::invalid_argument("window length " + std::to_string(length) +
                                " exceeds row count " + std::to_string(series.rows()));
  WindowSet out;
  out.raw_length = length;
  out.length = length;
  out.shift = shift;
  const Index count = (series.rows() - length) / shift + 1;
  out.windows.reserve(static_cast<std::size_t>(count));
  out.source_offsets.reserve(static_cast<std::size_t>(count));
  if (series.labels) out.labels.emplace();
  for (Index w = 0; w < count; ++w) {
    const Index start = w * shift;
    out.windows.emplace_back(series.values.middleRows(start, length));
    out.source_offsets.push_back(start);
    if (series.labels)
      out.labels->emplace_back(series.labels->begin() + start, series.labels->begin() + start + length);
  }
  return out;
}

double median_inplace(std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("median of empty block");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

WindowSet downsample_median(const WindowSet& windows, Index factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be positive");
  if (windows.length % factor != 0)
    throw std::invalid_argument("window length " + std::to_string(windows.length) +
                                " is not divisible by factor " + std::to_string(factor));
  WindowSet out;
  out.raw_length = windows.raw_length;
  out.length = windows.length / factor;
  out.shift = windows.shift;
  out.downsample_factor = windows.downsample_factor * factor;
  out.source_offsets = windows.source_offsets;
  out.windows.reserve(windows.size());
  if (windows.labels) out.labels.emplace();

  std::vector<double> block(static_cast<std::size_t>(factor));
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const MatrixXd& src = windows.windows[w];
    MatrixXd dst(out.length, src.cols());
    for (Index r = 0; r < out.length; ++r) {
      for (Index c = 0; c < src.cols(); ++c) {
        for (Index k = 0; k < factor; ++k) block[static_cast<std::size_t>(k)] = src(r * factor + k, c);
        dst(r, c) = median_inplace(block);
      }
    }
    out.windows.push_back(std::move(dst));
    if (windows.labels) {
      const auto& src_labels = (*windows.labels)[w];
      std::vector<int> dst_labels(static_cast<std::size_t>(out.length), 0);
      for (Index r = 0; r < out.length; ++r)
        for (Index k = 0; k < factor; ++k)
          if (src_labels[static_cast<std::size_t>(r * factor + k)] != 0) dst_labels[static_cast<std::size_t>(r)] = 1;
      out.labels->push_back(std::move(dst_labels));
    }
  }
  return out;
}

MatrixXd concat_rows(const WindowSet& windows) {
  MatrixXd out(static_cast<Index>(windows.size()) * windows.length, windows.features());
  for (std::size_t w = 0; w < windows.size(); ++w)
    out.middleRows(static_cast<Index>(w) * windows.length, windows.length) = windows.windows[w];
  return out;
}

std::vector<int> concat_labels(const WindowSet& windows) {
  std::vector<int> out;
  if (!windows.labels) return std::vector<int>(windows.size() * static_cast<std::size_t>(windows.length), 0);
  for (const auto& l : *windows.labels) out.insert(out.end(), l.begin(), l.end());
  return out;
}

namespace {

constexpr char kBundleMagic[8] = {'G', 'A', 'N', 'A', 'D', 'W', 'S', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated window bundle");
  return value;
}

}  // namespace

void write_window_bundle(const std::filesystem::path& path, const WindowSet& windows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write bundle: " + path.string());
  out.write(kBundleMagic, sizeof(kBundleMagic));
  put<std::uint64_t>(out, windows.size());
  put<std::int64_t>(out, windows.length);
  put<std::int64_t>(out, windows.features());
  put<std::int64_t>(out, windows.raw_length);
  put<std::int64_t>(out, windows.shift);
  put<std::int64_t>(out, windows.downsample_factor);
  put<std::uint8_t>(out, windows.labels ? 1 : 0);
  for (auto offset : windows.source_offsets) put<std::int64_t>(out, offset);
  for (const auto& w : windows.windows)
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) put<double>(out, w(r, c));
  if (windows.labels)
    for (const auto& l : *windows.labels)
      for (int v : l) put<std::uint8_t>(out, static_cast<std::uint8_t>(v));
}

WindowSet read_window_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open bundle: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBundleMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a window bundle: " + path.string());
  WindowSet ws;
  const auto count = get<std::uint64_t>(in);
  ws.length = get<std::int64_t>(in);
  const auto features = get<std::int64_t>(in);
  ws.raw_length = get<std::int64_t>(in);
  ws.shift = get<std::int64_t>(in);
  ws.downsample_factor = get<std::int64_t>(in);
  const bool has_labels = get<std::uint8_t>(in) != 0;
  ws.source_offsets.resize(count);
  for (auto& offset : ws.source_offsets) offset = get<std::int64_t>(in);
  ws.windows.assign(count, MatrixXd(ws.length, features));
  for (auto& w : ws.windows)
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = get<double>(in);
  if (has_labels) {
    ws.labels.emplace(count, std::vector<int>(static_cast<std::size_t>(ws.length)));
    for (auto& l : *ws.labels)
      for (auto& v : l) v = get<std::uint8_t>(in);
  }
  return ws;
}

}  // namespace ganad
