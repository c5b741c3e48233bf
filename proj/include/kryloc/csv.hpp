#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace kryloc {

// 17 significant digits; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double x);

/// Comma-separated writer with a header row and LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(long long x);
  CsvWriter& operator<<(std::size_t x) { return *this << static_cast<long long>(x); }
  CsvWriter& operator<<(int x) { return *this << static_cast<long long>(x); }
  CsvWriter& operator<<(const std::string& s);
  CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
  void end_row();
  void close();

 private:
  void sep();

  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t columns_;
  std::size_t col_ = 0;
};

}  // namespace kryloc
