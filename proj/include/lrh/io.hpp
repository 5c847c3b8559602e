#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace lrh {

/// Shortest decimal string that parses back to the same double;
/// locale-independent. Non-finite values print as inf, -inf, nan.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::int64_t x) { return std::to_string(x); }
inline std::string format_number(std::uint64_t x) { return std::to_string(x); }
inline std::string format_number(int x) { return std::to_string(x); }

/// Writes one comma-separated row terminated by '\n'.
class CsvRow {
 public:
  explicit CsvRow(std::ostream& os) : os_(os) {}
  ~CsvRow() { os_ << '\n'; }
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  template <typename T>
  CsvRow& operator<<(const T& value) {
    if (!first_) os_ << ',';
    first_ = false;
    if constexpr (std::is_convertible_v<T, std::string_view>)
      os_ << std::string_view(value);
    else
      os_ << format_number(value);
    return *this;
  }

 private:
  std::ostream& os_;
  bool first_ = true;
};

inline void write_header(std::ostream& os, std::initializer_list<std::string_view> columns) {
  CsvRow row(os);
  for (auto c : columns) row << c;
}

inline void write_header(std::ostream& os, const std::vector<std::string>& columns) {
  CsvRow row(os);
  for (const auto& c : columns) row << c;
}

}  // namespace lrh
