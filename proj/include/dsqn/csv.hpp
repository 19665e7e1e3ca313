#ifndef DSQN_CSV_HPP
#define DSQN_CSV_HPP

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <system_error>

namespace dsqn {

// Locale-independent, shortest round-trip decimal rendering. All tabular
// output goes through this so that identical runs produce identical bytes.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t x) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(const std::string& s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& field(double x) { return field(format_double(x)); }
  CsvWriter& field(std::int64_t x) { return field(format_int(x)); }
  CsvWriter& field(int x) { return field(static_cast<std::int64_t>(x)); }

  void endrow() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace dsqn

#endif  // DSQN_CSV_HPP
