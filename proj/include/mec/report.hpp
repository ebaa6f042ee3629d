#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mec::report {

// Insertion-ordered JSON-like value with deterministic serialization: floats
// are printed with 6 significant digits, keys keep their insertion order, so
// re-running a command on the same inputs produces byte-identical files.
class Value;
using Object = std::vector<std::pair<std::string, Value>>;
using Array = std::vector<Value>;

class Value {
 public:
  using Storage = std::variant<std::nullptr_t, bool, std::int64_t, double,
                               std::string, Array, Object>;

  Value() : storage_(nullptr) {}
  Value(std::nullptr_t) : storage_(nullptr) {}
  Value(bool b) : storage_(b) {}
  Value(int v) : storage_(static_cast<std::int64_t>(v)) {}
  Value(std::int64_t v) : storage_(v) {}
  Value(std::size_t v) : storage_(static_cast<std::int64_t>(v)) {}
  Value(double v) : storage_(v) {}
  Value(const char* s) : storage_(std::string(s)) {}
  Value(std::string s) : storage_(std::move(s)) {}
  Value(Array a) : storage_(std::move(a)) {}
  Value(Object o) : storage_(std::move(o)) {}

  const Storage& storage() const { return storage_; }

 private:
  Storage storage_;
};

// Formats a double with 6 significant digits ("%.6g").
std::string format_number(double v);

// Serializes to JSON text (2-space indent, trailing newline).
std::string to_json(const Value& value);

// Serializes a table to CSV: header row then one row per record. Cells are
// quoted only when needed; missing values become empty cells.
std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<Value>>& rows);

// Writes `content` to `path`, throwing IoError on failure.
void write_file(const std::string& path, const std::string& content);

}  // namespace mec::report
