#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace btc::csv {

/// %.17g, round-trip exact. Non-finite values print as nan / inf / -inf.
std::string format_double(double v);

class Cell {
 public:
  Cell(double v) : text_(format_double(v)) {}
  Cell(int v) : text_(std::to_string(v)) {}
  Cell(long v) : text_(std::to_string(v)) {}
  Cell(long long v) : text_(std::to_string(v)) {}
  Cell(std::size_t v) : text_(std::to_string(v)) {}
  Cell(std::string v) : text_(std::move(v)) {}
  Cell(const char* v) : text_(v) {}
  /// Absent values are written as an empty field.
  Cell(std::optional<double> v) : text_(v ? format_double(*v) : std::string()) {}

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Comma-separated writer with a header row. Throws btc::Error on I/O
/// failure or a row of the wrong width.
class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<Cell>& cells);
  std::size_t rows_written() const { return rows_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

}  // namespace btc::csv
