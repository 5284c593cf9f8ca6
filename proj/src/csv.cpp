#include "ampsi/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <unistd.h>

namespace ampsi {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

CsvTable& CsvTable::row() {
  if (rows_ > 0 && in_row_ != columns_) throw std::logic_error("CsvTable: incomplete row");
  if (rows_ > 0) text_ += '\n';
  ++rows_;
  in_row_ = 0;
  return *this;
}

void CsvTable::sep() {
  if (rows_ == 0) throw std::logic_error("CsvTable: add() before row()");
  if (in_row_ == columns_) throw std::logic_error("CsvTable: too many fields");
  if (in_row_++ > 0) text_ += ',';
}

CsvTable& CsvTable::add(double v) {
  sep();
  text_ += format_double(v);
  return *this;
}

CsvTable& CsvTable::add(long long v) {
  sep();
  text_ += std::to_string(v);
  return *this;
}

CsvTable& CsvTable::add(std::string_view v) {
  sep();
  text_ += v;
  return *this;
}

std::string CsvTable::str() const {
  if (rows_ > 0 && in_row_ != columns_) throw std::logic_error("CsvTable: incomplete row");
  return rows_ > 0 ? text_ + '\n' : text_;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ampsi
