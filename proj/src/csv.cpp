#include "kryloc/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace kryloc {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& h : header) *this << h;
  end_row();
}

void CsvWriter::sep() {
  if (col_ == columns_) throw std::logic_error("too many fields in CSV row of " + path_.string());
  if (col_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double x) {
  sep();
  out_ << format_number(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  sep();
  if (s.find_first_of(",\"\n") != std::string::npos) {
    out_ << '"';
    for (char c : s) out_ << (c == '"' ? "\"\"" : std::string(1, c));
    out_ << '"';
  } else {
    out_ << s;
  }
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_) throw std::logic_error("short CSV row in " + path_.string());
  out_ << '\n';
  col_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("failed writing " + path_.string());
}

}  // namespace kryloc
