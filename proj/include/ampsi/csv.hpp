#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace ampsi {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

// Small CSV builder; fields are written verbatim, so callers keep commas out.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row();
  CsvTable& add(double v);
  CsvTable& add(long long v);
  CsvTable& add(std::string_view v);

  std::string str() const;
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::string text_;
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::size_t in_row_ = 0;
  void sep();
};

// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(std::string_view line);

// Writes through a temporary file in the same directory and renames it into
// place, creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace ampsi
