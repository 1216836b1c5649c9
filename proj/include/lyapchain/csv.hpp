#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lyapchain {

/// The first line of every report is a '#' comment with provenance (command, config hash, seed,
/// timestamp); everything after it is reproducible byte for byte.
struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string timestamp;  ///< empty: omitted
};

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header, const Provenance* prov = nullptr);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(long v);
  CsvWriter& operator<<(unsigned long v);
  CsvWriter& operator<<(unsigned long long v);
  CsvWriter& operator<<(bool v);
  CsvWriter& operator<<(std::string_view v);
  CsvWriter& operator<<(const char* v) { return *this << std::string_view(v); }
  CsvWriter& operator<<(const std::string& v) { return *this << std::string_view(v); }
  void end_row();

 private:
  void sep();

  std::ostream& os_;
  std::size_t columns_;
  std::size_t col_ = 0;
};

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace lyapchain
