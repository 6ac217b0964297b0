#pragma once

// Runtime values for the restricted Python subset used to run tool code.
// Semantics follow CPython for everything a program-of-thought snippet
// touches: int/float arithmetic, true vs floor division, repr of floats,
// round-half-even, sequence indexing.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pcollab::minipy {

using Int = __int128;

/// A Python exception raised inside the sandbox, e.g. {"ZeroDivisionError",
/// "division by zero"}.
struct PyError {
  std::string type;
  std::string message;
  std::string what() const { return message.empty() ? type : type + ": " + message; }
};

[[noreturn]] inline void raise(std::string type, std::string message) { throw PyError{std::move(type), std::move(message)}; }

struct Value;
struct Stmt;

struct NoneType {};
using ListPtr = std::shared_ptr<std::vector<Value>>;
struct Tuple {
  std::shared_ptr<const std::vector<Value>> items;
};
struct Dict {
  std::shared_ptr<std::vector<std::pair<Value, Value>>> items;
};
struct Range {
  Int start, stop, step;
};
struct Builtin {
  std::string name;  // "print", "math.sqrt", ...
};
struct Function {
  const Stmt* def;
};
struct Module {
  std::string name;
};
struct BoundMethod {
  std::shared_ptr<Value> self;
  std::string name;
};

struct Value {
  std::variant<NoneType, bool, Int, double, std::string, ListPtr, Tuple, Dict, Range, Builtin, Function, Module,
               BoundMethod>
      v;

  Value() = default;
  Value(NoneType n) : v(n) {}
  Value(bool b) : v(b) {}
  Value(Int i) : v(i) {}
  Value(int i) : v(static_cast<Int>(i)) {}
  Value(long long i) : v(static_cast<Int>(i)) {}
  Value(double d) : v(d) {}
  Value(std::string s) : v(std::move(s)) {}
  Value(const char* s) : v(std::string(s)) {}
  Value(ListPtr l) : v(std::move(l)) {}
  Value(Tuple t) : v(std::move(t)) {}
  Value(Dict d) : v(std::move(d)) {}
  Value(Range r) : v(r) {}
  Value(Builtin b) : v(std::move(b)) {}
  Value(Function f) : v(f) {}
  Value(Module m) : v(std::move(m)) {}
  Value(BoundMethod m) : v(std::move(m)) {}

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(v);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(v);
  }
  template <class T>
  T& as() {
    return std::get<T>(v);
  }

  bool is_none() const { return is<NoneType>(); }
  /// bool counts as int, as in Python.
  bool is_int() const { return is<Int>() || is<bool>(); }
  bool is_number() const { return is_int() || is<double>(); }
  Int to_int() const { return is<bool>() ? (as<bool>() ? 1 : 0) : as<Int>(); }
  double to_double() const { return is<double>() ? as<double>() : static_cast<double>(to_int()); }
};

inline Value make_list(std::vector<Value> items = {}) { return Value(std::make_shared<std::vector<Value>>(std::move(items))); }
inline Value make_tuple(std::vector<Value> items) {
  return Value(Tuple{std::make_shared<const std::vector<Value>>(std::move(items))});
}
inline Value make_dict() { return Value(Dict{std::make_shared<std::vector<std::pair<Value, Value>>>()}); }

inline std::string type_name(const Value& v) {
  static const char* names[] = {"NoneType", "bool",     "int",      "float",  "str",    "list",  "tuple",
                                "dict",     "range",    "builtin_function_or_method", "function", "module",
                                "method"};
  return names[v.v.index()];
}

// ---- numeric formatting -------------------------------------------------

inline std::string int_to_string(Int v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  std::string out;
  while (v != 0) {
    int d = static_cast<int>(v % 10);
    out.push_back(static_cast<char>('0' + (d < 0 ? -d : d)));
    v /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

/// Python's repr() for floats: shortest round-trip digits, scientific when the
/// decimal exponent is below -4 or at least 16.
inline std::string float_repr(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d < 0 ? "-inf" : "inf";
  if (d == 0) return std::signbit(d) ? "-0.0" : "0.0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::scientific);
  std::string sci(buf, res.ptr);
  const auto epos = sci.find('e');
  const int exp = std::stoi(sci.substr(epos + 1));
  std::string mant = sci.substr(0, epos);
  const bool neg = mant[0] == '-';
  if (neg) mant.erase(0, 1);
  std::string digits;
  for (char c : mant)
    if (c != '.') digits.push_back(c);

  std::string out = neg ? "-" : "";
  if (exp >= -4 && exp < 16) {
    if (exp >= 0) {
      const std::size_t int_len = static_cast<std::size_t>(exp) + 1;
      if (digits.size() <= int_len) {
        out += digits + std::string(int_len - digits.size(), '0') + ".0";
      } else {
        out += digits.substr(0, int_len) + "." + digits.substr(int_len);
      }
    } else {
      out += "0." + std::string(static_cast<std::size_t>(-exp - 1), '0') + digits;
    }
    return out;
  }
  out += digits.substr(0, 1);
  if (digits.size() > 1) out += "." + digits.substr(1);
  char ebuf[16];
  std::snprintf(ebuf, sizeof ebuf, "e%c%02d", exp < 0 ? '-' : '+', exp < 0 ? -exp : exp);
  return out + ebuf;
}

/// Shortest round-trip digits in plain positional notation ("0.0689655...").
inline std::string float_fixed(double d) {
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::fixed);
  if (res.ec != std::errc()) return float_repr(d);
  return std::string(buf, res.ptr);
}

inline std::string repr(const Value& v);

inline std::string join_repr(const std::vector<Value>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += repr(items[i]);
  }
  return out;
}

inline std::string quote(const std::string& s) {
  const bool use_double = s.find('\'') != std::string::npos && s.find('"') == std::string::npos;
  const char q = use_double ? '"' : '\'';
  std::string out(1, q);
  for (char c : s) {
    if (c == q || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else {
      out += c;
    }
  }
  return out + q;
}

inline std::string repr(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, NoneType>) return "None";
        else if constexpr (std::is_same_v<T, bool>) return x ? "True" : "False";
        else if constexpr (std::is_same_v<T, Int>) return int_to_string(x);
        else if constexpr (std::is_same_v<T, double>) return float_repr(x);
        else if constexpr (std::is_same_v<T, std::string>) return quote(x);
        else if constexpr (std::is_same_v<T, ListPtr>) return "[" + join_repr(*x) + "]";
        else if constexpr (std::is_same_v<T, Tuple>) {
          if (x.items->size() == 1) return "(" + repr((*x.items)[0]) + ",)";
          return "(" + join_repr(*x.items) + ")";
        } else if constexpr (std::is_same_v<T, Dict>) {
          std::string out = "{";
          for (std::size_t i = 0; i < x.items->size(); ++i) {
            if (i) out += ", ";
            out += repr((*x.items)[i].first) + ": " + repr((*x.items)[i].second);
          }
          return out + "}";
        } else if constexpr (std::is_same_v<T, Range>) {
          std::string out = "range(" + int_to_string(x.start) + ", " + int_to_string(x.stop);
          if (x.step != 1) out += ", " + int_to_string(x.step);
          return out + ")";
        } else if constexpr (std::is_same_v<T, Builtin>) return "<built-in function " + x.name + ">";
        else if constexpr (std::is_same_v<T, Function>) return "<function>";
        else if constexpr (std::is_same_v<T, Module>) return "<module '" + x.name + "'>";
        else return "<bound method " + x.name + ">";
      },
      v.v);
}

inline std::string str(const Value& v) { return v.is<std::string>() ? v.as<std::string>() : repr(v); }

// ---- arithmetic ---------------------------------------------------------

[[noreturn]] inline void int_overflow() { raise("OverflowError", "integer result exceeds 128 bits"); }

inline Int int_add(Int a, Int b) {
  Int r = 0;
  if (__builtin_add_overflow(a, b, &r)) int_overflow();
  return r;
}
inline Int int_sub(Int a, Int b) {
  Int r = 0;
  if (__builtin_sub_overflow(a, b, &r)) int_overflow();
  return r;
}
inline Int int_mul(Int a, Int b) {
  Int r = 0;
  if (__builtin_mul_overflow(a, b, &r)) int_overflow();
  return r;
}

inline Int int_floordiv(Int a, Int b) {
  if (b == 0) raise("ZeroDivisionError", "integer division or modulo by zero");
  Int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Int int_mod(Int a, Int b) {
  if (b == 0) raise("ZeroDivisionError", "integer division or modulo by zero");
  Int r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

/// CPython's float divmod.
inline std::pair<double, double> float_divmod(double vx, double wx) {
  if (wx == 0.0) raise("ZeroDivisionError", "float divmod()");
  double mod = std::fmod(vx, wx);
  double div = (vx - mod) / wx;
  if (mod != 0.0) {
    if ((wx < 0) != (mod < 0)) {
      mod += wx;
      div -= 1.0;
    }
  } else {
    mod = std::copysign(0.0, wx);
  }
  double floordiv;
  if (div != 0.0) {
    floordiv = std::floor(div);
    if (div - floordiv > 0.5) floordiv += 1.0;
  } else {
    floordiv = std::copysign(0.0, vx / wx);
  }
  return {floordiv, mod};
}

inline Value int_pow(Int base, Int exp) {
  if (exp < 0) {
    if (base == 0) raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
    return Value(std::pow(static_cast<double>(base), static_cast<double>(exp)));
  }
  Int result = 1;
  while (exp > 0) {
    if (exp & 1) result = int_mul(result, base);
    exp >>= 1;
    if (exp > 0) base = int_mul(base, base);
  }
  return Value(result);
}

inline double float_pow(double a, double b) {
  if (a == 0.0 && b < 0) raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
  if (a < 0 && std::floor(b) != b) raise("ValueError", "complex results are not supported");
  const double r = std::pow(a, b);
  if (std::isinf(r) && std::isfinite(a) && std::isfinite(b)) raise("OverflowError", "(34, 'Numerical result out of range')");
  return r;
}

inline double int_to_float(Int v) {
  const double d = static_cast<double>(v);
  if (std::isinf(d)) raise("OverflowError", "int too large to convert to float");
  return d;
}

/// round() with CPython semantics: half-even on the exact binary value.
inline double round_float(double x, long long ndigits) {
  if (!std::isfinite(x)) return x;
  if (ndigits > 22) return x;
  if (ndigits >= 0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.*f", static_cast<int>(ndigits), x);
    return std::strtod(buf, nullptr);
  }
  if (ndigits < -308) return std::copysign(0.0, x);
  const double pow1 = std::pow(10.0, static_cast<double>(-ndigits));
  const double y = x / pow1;
  return std::nearbyint(y) * pow1;  // default rounding mode is half-even
}

inline Int round_int(Int x, long long ndigits) {
  if (ndigits >= 0) return x;
  if (ndigits < -38) return 0;
  Int p = 1;
  for (long long i = 0; i < -ndigits; ++i) p *= 10;
  Int q = int_floordiv(x, p);
  const Int r = x - q * p;
  if (2 * r > p || (2 * r == p && (q & 1))) ++q;
  return int_mul(q, p);
}

}  // namespace pcollab::minipy
