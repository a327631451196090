#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace surrogate::csv {

/// Decimal encoding with 17 significant digits (round-trips doubles).
std::string format(double value);
inline std::string format(std::size_t value) { return std::to_string(value); }
inline std::string format(int value) { return std::to_string(value); }
inline std::string format(std::string value) { return value; }
inline std::string format(const char* value) { return value; }

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& cells);

  template <typename... Cells>
  void write(const Cells&... cells) {
    row({format(cells)...});
  }

 private:
  std::ostream& out_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of the named column; throws ContractViolation if absent.
  std::size_t column(std::string_view name) const;
};

/// Minimal reader for the unquoted comma-separated files this project writes.
Table read(std::istream& in);
Table read_file(const std::string& path);

double parse_double(const std::string& cell);

}  // namespace surrogate::csv
