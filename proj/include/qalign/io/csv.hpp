#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace qalign::io {

/// Shortest round-trip text for a double; "nan", "inf", "-inf" for
/// non-finite values.
std::string format_double(double v);

/// Minimal CSV row builder. Fields are not quoted; callers only emit numbers
/// and identifier-like labels.
class CsvRow {
 public:
  CsvRow& add(double v);
  CsvRow& add(long long v);
  CsvRow& add(std::size_t v) { return add(static_cast<long long>(v)); }
  CsvRow& add(int v) { return add(static_cast<long long>(v)); }
  CsvRow& add(std::string_view v);
  CsvRow& add(const char* v) { return add(std::string_view(v)); }
  CsvRow& add_empty();
  CsvRow& add(const std::optional<double>& v) { return v ? add(*v) : add_empty(); }

  const std::string& str() const { return line_; }

 private:
  void sep();
  std::string line_;
  bool first_ = true;
};

inline std::ostream& operator<<(std::ostream& os, const CsvRow& row) { return os << row.str() << '\n'; }

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a double written by format_double (accepts nan/inf).
double parse_double(std::string_view s);

/// Opens a file for writing, creating parent directories; throws
/// std::runtime_error when the file cannot be opened.
std::ofstream open_output(const std::filesystem::path& path);

/// Writes `content` to `path` via a temporary file and rename.
void write_atomically(const std::filesystem::path& path, std::string_view content);

}  // namespace qalign::io
