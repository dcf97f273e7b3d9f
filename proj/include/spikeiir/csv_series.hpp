// Multivariate time-series ingestion from headered CSV. Rows are time steps;
// one column names the sample a row belongs to (consecutive rows with the
// same value form one series), one column carries the class label, and every
// remaining column is a signal channel, kept in header order.
#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spikeiir/binio.hpp"
#include "spikeiir/dataset.hpp"

namespace spikeiir {

struct CsvSchema {
  std::string sample_column = "sample";
  std::string label_column = "label";
};

namespace detail {
inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

inline double parse_csv_double(std::string_view cell, std::size_t line_no,
                               std::string_view column,
                               const std::string& path) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                             ": non-numeric cell '" + std::string(cell) +
                             "' in column '" + std::string(column) + "'");
  return v;
}
}  // namespace detail

inline std::vector<LabeledSample> load_csv_series(const std::string& path,
                                                  const CsvSchema& schema) {
  const std::vector<std::uint8_t> bytes = binio::read_file(path);
  std::string_view text(reinterpret_cast<const char*>(bytes.data()),
                        bytes.size());

  // Split into lines, tolerating CRLF and a trailing newline.
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw std::runtime_error(path + ": empty CSV file");

  const std::vector<std::string_view> header = detail::split_csv_line(lines[0]);
  int sample_col = -1, label_col = -1;
  std::vector<int> channel_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c] == schema.sample_column)
      sample_col = c;
    else if (header[c] == schema.label_column)
      label_col = c;
    else
      channel_cols.push_back(c);
  }
  if (sample_col < 0)
    throw std::runtime_error(path + ": sample column '" +
                             schema.sample_column + "' not found in header");
  if (label_col < 0)
    throw std::runtime_error(path + ": label column '" + schema.label_column +
                             "' not found in header");
  if (channel_cols.empty())
    throw std::runtime_error(path + ": no channel columns in header");

  std::vector<LabeledSample> samples;
  std::string current_id;
  std::vector<Eigen::VectorXd> current_rows;
  int current_label = 0;

  auto flush = [&] {
    if (current_rows.empty()) return;
    Eigen::MatrixXd series(current_rows.size(), channel_cols.size());
    for (std::size_t r = 0; r < current_rows.size(); ++r)
      series.row(r) = current_rows[r].transpose();
    samples.push_back(LabeledSample{std::move(series), current_label});
    current_rows.clear();
  };

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const std::vector<std::string_view> cells =
        detail::split_csv_line(lines[li]);
    if (cells.size() != header.size())
      throw std::runtime_error(
          path + ":" + std::to_string(line_no) + ": ragged row (" +
          std::to_string(cells.size()) + " cells, header has " +
          std::to_string(header.size()) + ")");

    const std::string id(cells[sample_col]);
    const int label = static_cast<int>(detail::parse_csv_double(
        cells[label_col], line_no, schema.label_column, path));
    Eigen::VectorXd row(channel_cols.size());
    for (std::size_t k = 0; k < channel_cols.size(); ++k)
      row[k] = detail::parse_csv_double(cells[channel_cols[k]], line_no,
                                        header[channel_cols[k]], path);

    if (current_rows.empty() || id != current_id) {
      flush();
      current_id = id;
      current_label = label;
    } else if (label != current_label) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": label changes within sample '" + id + "'");
    }
    current_rows.push_back(std::move(row));
  }
  flush();
  if (samples.empty()) throw std::runtime_error(path + ": no data rows");
  return samples;
}

// Per-channel min/max over a set of series samples; intended to be computed
// on the training split only and applied to every split.
struct NormStats {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
};

inline NormStats compute_norm_stats(const std::vector<LabeledSample>& samples) {
  NormStats st;
  bool first = true;
  for (const LabeledSample& s : samples) {
    const auto& series = std::get<Eigen::MatrixXd>(s.input);
    Eigen::VectorXd lo = series.colwise().minCoeff().transpose();
    Eigen::VectorXd hi = series.colwise().maxCoeff().transpose();
    if (first) {
      st.min = lo;
      st.max = hi;
      first = false;
    } else {
      st.min = st.min.cwiseMin(lo);
      st.max = st.max.cwiseMax(hi);
    }
  }
  if (first) throw std::invalid_argument("compute_norm_stats: no samples");
  return st;
}

// Maps each channel's [min, max] to [0, 1]; constant channels collapse to 0.
inline Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& series,
                                  const NormStats& st) {
  Eigen::MatrixXd out(series.rows(), series.cols());
  for (int c = 0; c < series.cols(); ++c) {
    const double span = st.max[c] - st.min[c];
    if (span > 0.0)
      out.col(c) = (series.col(c).array() - st.min[c]) / span;
    else
      out.col(c).setZero();
  }
  return out;
}

}  // namespace spikeiir
