#include "oswi/json_text.hpp"

#include <cmath>
#include <cstdio>

namespace oswi {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write(const nlohmann::json& v, std::string& out, int indent, int level) {
  const auto newline = [&](int lvl) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * lvl), ' ');
  };
  switch (v.type()) {
  case nlohmann::json::value_t::object: {
    if (v.empty()) {
      out += "{}";
      return;
    }
    out += '{';
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!first) out += ',';
      first = false;
      newline(level + 1);
      out += nlohmann::json(it.key()).dump();
      out += indent < 0 ? ":" : ": ";
      write(it.value(), out, indent, level + 1);
    }
    newline(level);
    out += '}';
    return;
  }
  case nlohmann::json::value_t::array: {
    if (v.empty()) {
      out += "[]";
      return;
    }
    out += '[';
    bool first = true;
    for (const auto& e : v) {
      if (!first) out += ',';
      first = false;
      newline(level + 1);
      write(e, out, indent, level + 1);
    }
    newline(level);
    out += ']';
    return;
  }
  case nlohmann::json::value_t::number_float: {
    const double d = v.get<double>();
    out += std::isfinite(d) ? format_double(d) : "null";
    return;
  }
  default: out += v.dump(); return;
  }
}

} // namespace

std::string to_json_text(const nlohmann::json& value, int indent) {
  std::string out;
  write(value, out, indent, 0);
  return out;
}

} // namespace oswi
