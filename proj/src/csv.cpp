#include "lyapchain/csv.hpp"

#include <cstdio>
#include <stdexcept>

#include "lyapchain/stats.hpp"

namespace lyapchain {

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header, const Provenance* prov)
    : os_(os), columns_(header.size()) {
  if (prov) {
    os_ << "# command=" << prov->command << " config=" << prov->config_hash << " seed=" << prov->seed;
    if (!prov->timestamp.empty()) os_ << " time=" << prov->timestamp;
    os_ << '\n';
  }
  for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
  os_ << '\n';
}

void CsvWriter::sep() {
  if (col_ >= columns_) throw std::logic_error("csv row has too many fields");
  if (col_++ > 0) os_ << ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  os_ << format_double(v);
  return *this;
}
CsvWriter& CsvWriter::operator<<(int v) {
  sep();
  os_ << v;
  return *this;
}
CsvWriter& CsvWriter::operator<<(long v) {
  sep();
  os_ << v;
  return *this;
}
CsvWriter& CsvWriter::operator<<(unsigned long v) {
  sep();
  os_ << v;
  return *this;
}
CsvWriter& CsvWriter::operator<<(unsigned long long v) {
  sep();
  os_ << v;
  return *this;
}
CsvWriter& CsvWriter::operator<<(bool v) {
  sep();
  os_ << (v ? 1 : 0);
  return *this;
}
CsvWriter& CsvWriter::operator<<(std::string_view v) {
  sep();
  if (v.find_first_of(",\"\n") != std::string_view::npos) {
    os_ << '"';
    for (char c : v) {
      if (c == '"') os_ << '"';
      os_ << c;
    }
    os_ << '"';
  } else {
    os_ << v;
  }
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_) throw std::logic_error("csv row has too few fields");
  os_ << '\n';
  col_ = 0;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace lyapchain
