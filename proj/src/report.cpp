#include "mec/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mec/errors.hpp"

namespace mec::report {

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

void serialize(const Value& value, std::string& out, int depth) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const auto& st = value.storage();
  if (std::holds_alternative<std::nullptr_t>(st)) {
    out += "null";
  } else if (std::holds_alternative<bool>(st)) {
    out += std::get<bool>(st) ? "true" : "false";
  } else if (std::holds_alternative<std::int64_t>(st)) {
    out += std::to_string(std::get<std::int64_t>(st));
  } else if (std::holds_alternative<double>(st)) {
    out += format_number(std::get<double>(st));
  } else if (std::holds_alternative<std::string>(st)) {
    append_escaped(out, std::get<std::string>(st));
  } else if (std::holds_alternative<Array>(st)) {
    const auto& arr = std::get<Array>(st);
    if (arr.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out += inner;
      serialize(arr[i], out, depth + 1);
      if (i + 1 < arr.size()) out.push_back(',');
      out.push_back('\n');
    }
    out += indent + "]";
  } else {
    const auto& obj = std::get<Object>(st);
    if (obj.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    for (std::size_t i = 0; i < obj.size(); ++i) {
      out += inner;
      append_escaped(out, obj[i].first);
      out += ": ";
      serialize(obj[i].second, out, depth + 1);
      if (i + 1 < obj.size()) out.push_back(',');
      out.push_back('\n');
    }
    out += indent + "}";
  }
}

std::string csv_cell(const Value& value) {
  const auto& st = value.storage();
  std::string raw;
  if (std::holds_alternative<std::nullptr_t>(st)) {
    return "";
  } else if (std::holds_alternative<bool>(st)) {
    raw = std::get<bool>(st) ? "true" : "false";
  } else if (std::holds_alternative<std::int64_t>(st)) {
    raw = std::to_string(std::get<std::int64_t>(st));
  } else if (std::holds_alternative<double>(st)) {
    raw = format_number(std::get<double>(st));
  } else if (std::holds_alternative<std::string>(st)) {
    raw = std::get<std::string>(st);
  } else {
    raise(ErrorKind::internal, "nested values not representable in CSV");
  }
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string quoted = "\"";
  for (char c : raw) {
    if (c == '"') quoted += "\"\"";
    else quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) {
    raise(ErrorKind::value, "non-finite value in report");
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string to_json(const Value& value) {
  std::string out;
  serialize(value, out, 0);
  out.push_back('\n');
  return out;
}

std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<Value>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += csv_cell(Value(header[i]));
  }
  out.push_back('\n');
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += csv_cell(row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::io, "cannot open '" + path + "' for writing");
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    raise(ErrorKind::io, "short write to '" + path + "'");
  }
}

}  // namespace mec::report
