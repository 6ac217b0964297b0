#pragma once

// Python string formatting: the format-spec mini-language behind format(),
// f-strings and str.format, plus printf-style `%`.

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "pcollab/minipy/value.hpp"

namespace pcollab::minipy {

struct FormatSpec {
  char fill = ' ';
  char align = 0;  // '<', '>', '^', '=' or 0 for the type default
  char sign = '-';
  bool alternate = false;
  int width = 0;
  char grouping = 0;  // ',' or '_'
  int precision = -1;
  char type = 0;
};

inline FormatSpec parse_format_spec(const std::string& s) {
  FormatSpec f;
  std::size_t i = 0;
  auto is_align = [](char c) { return c == '<' || c == '>' || c == '^' || c == '='; };
  if (s.size() >= 2 && is_align(s[1])) {
    f.fill = s[0];
    f.align = s[1];
    i = 2;
  } else if (!s.empty() && is_align(s[0])) {
    f.align = s[0];
    i = 1;
  }
  if (i < s.size() && (s[i] == '+' || s[i] == '-' || s[i] == ' ')) f.sign = s[i++];
  if (i < s.size() && s[i] == '#') {
    f.alternate = true;
    ++i;
  }
  if (i < s.size() && s[i] == '0') {
    if (!f.align) {
      f.fill = '0';
      f.align = '=';
    }
    ++i;
  }
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) f.width = f.width * 10 + (s[i++] - '0');
  if (i < s.size() && (s[i] == ',' || s[i] == '_')) f.grouping = s[i++];
  if (i < s.size() && s[i] == '.') {
    ++i;
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) raise("ValueError", "Format specifier missing precision");
    f.precision = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) f.precision = f.precision * 10 + (s[i++] - '0');
  }
  if (i < s.size()) f.type = s[i++];
  if (i != s.size()) raise("ValueError", "Invalid format specifier '" + s + "'");
  return f;
}

namespace fmt_detail {

inline std::string group_digits(const std::string& digits, char sep, int every = 3) {
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % every == 0) out += sep;
    out += digits[static_cast<std::size_t>(i)];
  }
  return out;
}

/// Applies grouping to the integer part of an unsigned numeric body.
inline std::string group_body(const std::string& body, char sep) {
  if (!sep) return body;
  std::size_t end = 0;
  while (end < body.size() && std::isdigit(static_cast<unsigned char>(body[end]))) ++end;
  return group_digits(body.substr(0, end), sep) + body.substr(end);
}

inline std::string pad(const std::string& sign, const std::string& body, const FormatSpec& f, char default_align) {
  const char align = f.align ? f.align : default_align;
  const std::size_t len = sign.size() + body.size();
  if (f.width <= 0 || static_cast<std::size_t>(f.width) <= len) return sign + body;
  const std::size_t fill = static_cast<std::size_t>(f.width) - len;
  const std::string p(fill, f.fill);
  switch (align) {
    case '<':
      return sign + body + p;
    case '^':
      return std::string(fill / 2, f.fill) + sign + body + std::string(fill - fill / 2, f.fill);
    case '=':
      return sign + p + body;
    default:
      return p + sign + body;
  }
}

inline std::string sign_of(bool negative, char mode) {
  if (negative) return "-";
  if (mode == '+') return "+";
  if (mode == ' ') return " ";
  return "";
}

inline std::string c_format(char type, int precision, double x, bool alternate) {
  char spec[16];
  std::snprintf(spec, sizeof spec, "%%%s.*%c", alternate ? "#" : "", type);
  const int n = std::snprintf(nullptr, 0, spec, precision, x);
  std::string out(static_cast<std::size_t>(n), '\0');
  std::snprintf(out.data(), out.size() + 1, spec, precision, x);
  return out;
}

/// Formats |x| (non-negative, finite or not) according to a float presentation type.
inline std::string float_body(double x, char type, int precision, bool alternate) {
  if (std::isnan(x) || std::isinf(x)) {
    std::string s = std::isnan(x) ? "nan" : "inf";
    if (type == 'F' || type == 'E' || type == 'G')
      for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return type == '%' ? s + "%" : s;
  }
  switch (type) {
    case 'f':
    case 'F':
      return c_format('f', precision < 0 ? 6 : precision, x, alternate);
    case 'e':
    case 'E':
      return c_format(type, precision < 0 ? 6 : precision, x, alternate);
    case 'g':
    case 'G':
      return c_format(type, precision < 0 ? 6 : (precision == 0 ? 1 : precision), x, alternate);
    case '%':
      return c_format('f', precision < 0 ? 6 : precision, x * 100.0, alternate) + "%";
    case 0: {
      if (precision < 0) return float_repr(x);
      std::string s = c_format('g', precision == 0 ? 1 : precision, x, alternate);
      if (s.find_first_of(".e") == std::string::npos) s += ".0";
      return s;
    }
  }
  raise("ValueError", std::string("Unknown format code '") + type + "' for object of type 'float'");
}

}  // namespace fmt_detail

inline std::string format_float(double x, const FormatSpec& f) {
  const bool neg = std::signbit(x) && !std::isnan(x);
  std::string body = fmt_detail::float_body(std::fabs(x), f.type, f.precision, f.alternate);
  body = fmt_detail::group_body(body, f.grouping);
  return fmt_detail::pad(fmt_detail::sign_of(neg, f.sign), body, f, '>');
}

inline std::string format_int(Int v, const FormatSpec& f) {
  const char t = f.type;
  if (t == 'e' || t == 'E' || t == 'f' || t == 'F' || t == 'g' || t == 'G' || t == '%')
    return format_float(int_to_float(v), f);
  if (f.precision >= 0) raise("ValueError", "Precision not allowed in integer format specifier");
  const bool neg = v < 0;
  Int mag = neg ? -v : v;
  std::string body;
  if (t == 0 || t == 'd' || t == 'n') {
    body = int_to_string(mag);
    if (f.grouping) body = fmt_detail::group_digits(body, f.grouping);
  } else if (t == 'x' || t == 'X' || t == 'o' || t == 'b') {
    const int base = t == 'o' ? 8 : t == 'b' ? 2 : 16;
    const char* digits = t == 'X' ? "0123456789ABCDEF" : "0123456789abcdef";
    if (mag == 0) body = "0";
    while (mag > 0) {
      body.insert(body.begin(), digits[static_cast<int>(mag % base)]);
      mag /= base;
    }
    if (f.grouping == '_') body = fmt_detail::group_digits(body, '_', 4);
    if (f.alternate) body = std::string("0") + (t == 'X' ? 'X' : t) + body;
  } else if (t == 'c') {
    body = std::string(1, static_cast<char>(mag));
  } else {
    raise("ValueError", std::string("Unknown format code '") + t + "' for object of type 'int'");
  }
  return fmt_detail::pad(fmt_detail::sign_of(neg, f.sign), body, f, '>');
}

inline std::string format_value(const Value& v, const std::string& spec) {
  if (spec.empty()) return str(v);
  const FormatSpec f = parse_format_spec(spec);
  if (v.is<double>()) return format_float(v.as<double>(), f);
  if (v.is<Int>() || (v.is<bool>() && f.type && f.type != 's')) return format_int(v.to_int(), f);
  if (f.type && f.type != 's') raise("ValueError", std::string("Unknown format code '") + f.type + "' for object of type '" + type_name(v) + "'");
  std::string s = str(v);
  if (f.precision >= 0 && static_cast<std::size_t>(f.precision) < s.size()) s.resize(static_cast<std::size_t>(f.precision));
  return fmt_detail::pad("", s, f, '<');
}

/// printf-style formatting: "%.2f" % x, "%s and %d" % (a, b).
inline std::string percent_format(const std::string& fmt, const Value& arg) {
  std::vector<Value> args;
  if (arg.is<Tuple>()) args = *arg.as<Tuple>().items;
  else args.push_back(arg);
  std::size_t next = 0;
  auto take = [&]() -> const Value& {
    if (next >= args.size()) raise("TypeError", "not enough arguments for format string");
    return args[next++];
  };
  std::string out;
  for (std::size_t i = 0; i < fmt.size(); ++i) {
    if (fmt[i] != '%') {
      out += fmt[i];
      continue;
    }
    if (++i >= fmt.size()) raise("ValueError", "incomplete format");
    if (fmt[i] == '%') {
      out += '%';
      continue;
    }
    FormatSpec f;
    bool left = false;
    for (; i < fmt.size() && std::string("-+ #0").find(fmt[i]) != std::string::npos; ++i) {
      if (fmt[i] == '-') left = true;
      else if (fmt[i] == '+' || fmt[i] == ' ') f.sign = fmt[i];
      else if (fmt[i] == '#') f.alternate = true;
      else f.fill = '0';
    }
    while (i < fmt.size() && std::isdigit(static_cast<unsigned char>(fmt[i]))) f.width = f.width * 10 + (fmt[i++] - '0');
    if (i < fmt.size() && fmt[i] == '.') {
      f.precision = 0;
      ++i;
      while (i < fmt.size() && std::isdigit(static_cast<unsigned char>(fmt[i]))) f.precision = f.precision * 10 + (fmt[i++] - '0');
    }
    if (i >= fmt.size()) raise("ValueError", "incomplete format");
    const char type = fmt[i];
    if (left) {
      f.align = '<';
      f.fill = ' ';
    } else if (f.fill == '0') {
      f.align = '=';
    }
    const Value& v = take();
    switch (type) {
      case 'd':
      case 'i':
      case 'u': {
        if (!v.is_number()) raise("TypeError", "%d format: a real number is required, not " + type_name(v));
        const Int n = v.is<double>() ? static_cast<Int>(std::trunc(v.as<double>())) : v.to_int();
        FormatSpec g = f;
        g.precision = -1;
        g.type = 'd';
        out += format_int(n, g);
        break;
      }
      case 'f':
      case 'F':
      case 'e':
      case 'E':
      case 'g':
      case 'G': {
        if (!v.is_number()) raise("TypeError", "must be real number, not " + type_name(v));
        f.type = type;
        out += format_float(v.to_double(), f);
        break;
      }
      case 's':
      case 'r': {
        std::string s = type == 's' ? str(v) : repr(v);
        if (f.precision >= 0 && static_cast<std::size_t>(f.precision) < s.size()) s.resize(static_cast<std::size_t>(f.precision));
        f.fill = ' ';
        out += fmt_detail::pad("", s, f, '>');
        break;
      }
      default:
        raise("ValueError", std::string("unsupported format character '") + type + "'");
    }
  }
  if (next < args.size()) raise("TypeError", "not all arguments converted during string formatting");
  return out;
}

/// str.format with positional, numbered and keyword fields.
inline std::string str_format(const std::string& fmt, const std::vector<Value>& args,
                              const std::vector<std::pair<std::string, Value>>& kwargs) {
  std::string out;
  std::size_t auto_index = 0;
  for (std::size_t i = 0; i < fmt.size(); ++i) {
    const char c = fmt[i];
    if (c == '{' && i + 1 < fmt.size() && fmt[i + 1] == '{') {
      out += '{';
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < fmt.size() && fmt[i + 1] == '}') {
      out += '}';
      ++i;
      continue;
    }
    if (c == '}') raise("ValueError", "Single '}' encountered in format string");
    if (c != '{') {
      out += c;
      continue;
    }
    const std::size_t close = fmt.find('}', i);
    if (close == std::string::npos) raise("ValueError", "Single '{' encountered in format string");
    std::string field = fmt.substr(i + 1, close - i - 1);
    std::string spec;
    char conv = 0;
    if (auto colon = field.find(':'); colon != std::string::npos) {
      spec = field.substr(colon + 1);
      field.resize(colon);
    }
    if (auto bang = field.find('!'); bang != std::string::npos) {
      if (bang + 1 < field.size()) conv = field[bang + 1];
      field.resize(bang);
    }
    const Value* v = nullptr;
    if (field.empty()) {
      if (auto_index >= args.size()) raise("IndexError", "Replacement index " + std::to_string(auto_index) + " out of range");
      v = &args[auto_index++];
    } else if (std::isdigit(static_cast<unsigned char>(field[0]))) {
      const std::size_t idx = std::stoul(field);
      if (idx >= args.size()) raise("IndexError", "Replacement index " + field + " out of range");
      v = &args[idx];
    } else {
      for (auto& kv : kwargs)
        if (kv.first == field) v = &kv.second;
      if (!v) raise("KeyError", quote(field));
    }
    Value shown = conv == 'r' ? Value(repr(*v)) : conv == 's' ? Value(str(*v)) : *v;
    out += format_value(shown, spec);
    i = close;
  }
  return out;
}

}  // namespace pcollab::minipy
