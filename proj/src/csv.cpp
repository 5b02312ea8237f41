#include "btc/csv.hpp"

#include <cmath>
#include <cstdio>

#include "btc/error.hpp"

namespace btc::csv {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path), columns_(header.size()) {
  if (!out_) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void Writer::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_) {
    throw DimensionError(path_.string() + ": row has " + std::to_string(cells.size()) + " fields, header has " +
                         std::to_string(columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text();
  out_ << '\n';
  if (!out_) throw Error("write to " + path_.string() + " failed");
  ++rows_;
}

}  // namespace btc::csv
