#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcollab/minipy/format.hpp"
#include "pcollab/minipy/parser.hpp"
#include "pcollab/minipy/value.hpp"

namespace pcollab::minipy {

/// Thrown when the wall-clock budget runs out.
struct Timeout {};

struct Limits {
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
  std::size_t max_cells = std::size_t(1) << 23;  // rough element budget derived from the memory cap
  std::size_t max_stdout = std::size_t(1) << 16;
  int max_depth = 64;
};

struct RunResult {
  std::unordered_map<std::string, Value> globals;
  std::optional<Value> last_assignment;  // value of the last module-level name assignment
  std::string stdout_text;
};

class Interpreter {
 public:
  explicit Interpreter(Limits limits = {}) : limits_(limits) {}

  /// Parses and executes `code`. Throws PyError or Timeout.
  RunResult run(const std::string& code) {
    Program prog = parse(code);
    globals_["__name__"] = Value("__main__");
    exec_block(prog.body);
    RunResult r;
    r.globals = std::move(globals_);
    r.last_assignment = std::move(last_assign_);
    r.stdout_text = std::move(out_);
    return r;
  }

 private:
  using Scope = std::unordered_map<std::string, Value>;
  enum class Flow { Normal, Break, Continue, Return };

  struct Frame {
    Scope* locals = nullptr;  // null at module level
    std::set<std::string> globals_declared;
  };

  Limits limits_;
  Scope globals_;
  Frame* frame_ = nullptr;
  int depth_ = 0;
  std::optional<Value> last_assign_;
  Value ret_;
  std::string out_;
  std::size_t cells_ = 0;
  unsigned ticks_ = 0;

  void tick() {
    if ((++ticks_ & 255u) == 0 && std::chrono::steady_clock::now() > limits_.deadline) throw Timeout{};
  }

  void charge(std::size_t cells) {
    cells_ += cells;
    if (cells_ > limits_.max_cells) raise("MemoryError", "sandbox memory cap exceeded");
  }

  // ---- names ----

  static const std::set<std::string>& builtin_names() {
    static const std::set<std::string> b = {"print", "abs",    "round",   "min",       "max",   "sum",  "len",
                                            "float", "int",    "str",     "bool",      "range", "list", "tuple",
                                            "sorted", "reversed", "enumerate", "zip",  "pow",   "divmod", "format",
                                            "any",   "all",    "dict"};
    return b;
  }

  static const std::set<std::string>& denied_names() {
    static const std::set<std::string> d = {"open",   "eval",  "exec",     "compile", "__import__", "input",
                                            "globals", "locals", "getattr", "setattr", "delattr",   "vars",
                                            "breakpoint", "exit", "quit",   "help",    "memoryview", "__builtins__"};
    return d;
  }

  static const std::set<std::string>& math_functions() {
    static const std::set<std::string> m = {"sqrt", "log",   "log10", "log2", "exp",       "pow",  "floor",
                                            "ceil", "fabs",  "trunc", "isclose", "prod",   "factorial", "sin",
                                            "cos",  "tan",   "atan",  "hypot", "isfinite", "isnan"};
    return m;
  }

  Value load(const std::string& name, int line) {
    if (frame_ && !frame_->globals_declared.count(name)) {
      if (auto it = frame_->locals->find(name); it != frame_->locals->end()) return it->second;
    }
    if (auto it = globals_.find(name); it != globals_.end()) return it->second;
    if (builtin_names().count(name)) return Value(Builtin{name});
    if (denied_names().count(name)) raise("PermissionError", "'" + name + "' is not available in the sandbox");
    raise("NameError", "name '" + name + "' is not defined (line " + std::to_string(line) + ")");
  }

  void store(const std::string& name, Value v) {
    if (frame_ && !frame_->globals_declared.count(name)) {
      (*frame_->locals)[name] = std::move(v);
      return;
    }
    if (!frame_) last_assign_ = v;
    globals_[name] = std::move(v);
  }

  // ---- statements ----

  Flow exec_block(const std::vector<StmtPtr>& body) {
    for (auto& s : body) {
      const Flow f = exec(*s);
      if (f != Flow::Normal) return f;
    }
    return Flow::Normal;
  }

  Flow exec(const Stmt& s) {
    tick();
    switch (s.kind) {
      case SK::ExprStmt:
        eval(*s.value);
        return Flow::Normal;
      case SK::Assign: {
        Value v = eval(*s.value);
        for (auto& t : s.targets) assign(*t, v);
        return Flow::Normal;
      }
      case SK::AugAssign: {
        const Expr& t = *s.targets[0];
        if (t.kind == EK::Name) {
          Value cur = load(t.name, t.line);
          store(t.name, aug_op(s.op, cur, eval(*s.value)));
        } else {
          Value container = eval(*t.kids[0]);
          Value key = eval(*t.kids[1]);
          Value cur = subscript(container, key);
          set_item(container, key, aug_op(s.op, cur, eval(*s.value)));
        }
        return Flow::Normal;
      }
      case SK::If:
        if (truthy(eval(*s.value))) return exec_block(s.body);
        return exec_block(s.orelse);
      case SK::While: {
        while (truthy(eval(*s.value))) {
          tick();
          const Flow f = exec_block(s.body);
          if (f == Flow::Break) return Flow::Normal;
          if (f == Flow::Return) return f;
        }
        return exec_block(s.orelse);
      }
      case SK::For:
        return exec_for(s);
      case SK::Def:
        store(s.name, Value(Function{&s}));
        return Flow::Normal;
      case SK::Return:
        if (!frame_) raise("SyntaxError", "'return' outside function");
        ret_ = s.value ? eval(*s.value) : Value(NoneType{});
        return Flow::Return;
      case SK::Pass:
        return Flow::Normal;
      case SK::Break:
        return Flow::Break;
      case SK::Continue:
        return Flow::Continue;
      case SK::Global:
        if (frame_)
          for (auto& n : s.params) frame_->globals_declared.insert(n);
        return Flow::Normal;
      case SK::Assert:
        if (!truthy(eval(*s.value))) raise("AssertionError", s.msg ? str(eval(*s.msg)) : "");
        return Flow::Normal;
      case SK::Import:
        for (auto& imp : s.imports) do_import(imp);
        return Flow::Normal;
    }
    return Flow::Normal;
  }

  void do_import(const std::array<std::string, 3>& imp) {
    static const std::set<std::string> denied = {"os",     "sys",   "subprocess", "socket",  "shutil",   "pathlib",
                                                 "requests", "urllib", "http",     "ctypes",  "importlib", "builtins",
                                                 "io",     "multiprocessing", "threading", "signal", "pickle", "glob",
                                                 "tempfile", "asyncio", "ftplib", "smtplib", "webbrowser", "pty"};
    const std::string root = imp[1].substr(0, imp[1].find('.'));
    if (denied.count(root)) raise("PermissionError", "import of '" + imp[1] + "' is not allowed in the sandbox");
    if (imp[1] != "math") raise("ModuleNotFoundError", "module '" + imp[1] + "' is not available in the sandbox");
    if (imp[2].empty()) {
      store(imp[0], Value(Module{"math"}));
    } else if (imp[2] == "*") {
      for (auto& f : math_functions()) store(f, Value(Builtin{"math." + f}));
      for (auto* c : {"pi", "e", "inf", "nan", "tau"}) store(c, math_constant(c));
    } else {
      store(imp[0], module_attr("math", imp[2]));
    }
  }

  Flow exec_for(const Stmt& s) {
    Value iterable = eval(*s.value);
    auto body = [&](const Value& item) -> std::optional<Flow> {
      tick();
      assign(*s.targets[0], item);
      const Flow f = exec_block(s.body);
      if (f == Flow::Break || f == Flow::Return) return f;
      return std::nullopt;
    };
    if (iterable.is<Range>()) {
      const Range r = iterable.as<Range>();
      for (Int i = r.start; r.step > 0 ? i < r.stop : i > r.stop; i += r.step) {
        if (auto f = body(Value(i))) return *f == Flow::Break ? Flow::Normal : *f;
      }
    } else {
      for (auto& item : iterate(iterable)) {
        if (auto f = body(item)) return *f == Flow::Break ? Flow::Normal : *f;
      }
    }
    return exec_block(s.orelse);
  }

  void assign(const Expr& target, const Value& v) {
    switch (target.kind) {
      case EK::Name:
        store(target.name, v);
        return;
      case EK::Subscript: {
        Value container = eval(*target.kids[0]);
        set_item(container, eval(*target.kids[1]), v);
        return;
      }
      case EK::TupleDisp:
      case EK::ListDisp: {
        auto items = iterate(v);
        if (items.size() != target.kids.size())
          raise("ValueError", "expected " + std::to_string(target.kids.size()) + " values to unpack, got " +
                                  std::to_string(items.size()));
        for (std::size_t i = 0; i < items.size(); ++i) assign(*target.kids[i], items[i]);
        return;
      }
      default:
        raise("SyntaxError", "cannot assign to expression");
    }
  }

  Value aug_op(const std::string& op, const Value& cur, const Value& rhs) {
    if (op == "+" && cur.is<ListPtr>()) {  // in-place extend, as list.__iadd__
      auto items = iterate(rhs);
      charge(items.size());
      auto& dst = *cur.as<ListPtr>();
      dst.insert(dst.end(), items.begin(), items.end());
      return cur;
    }
    return binop(op, cur, rhs);
  }

  // ---- expressions ----

  Value eval(const Expr& e) {
    switch (e.kind) {
      case EK::Const:
        return e.constant;
      case EK::Name:
        return load(e.name, e.line);
      case EK::Unary: {
        Value v = eval(*e.kids[0]);
        if (!v.is_number()) raise("TypeError", "bad operand type for unary " + e.name + ": '" + type_name(v) + "'");
        if (e.name == "+") return v.is<double>() ? v : Value(v.to_int());
        if (v.is<double>()) return Value(-v.as<double>());
        return Value(int_sub(0, v.to_int()));
      }
      case EK::Binary:
        return binop(e.name, eval(*e.kids[0]), eval(*e.kids[1]));
      case EK::BoolOp: {
        Value l = eval(*e.kids[0]);
        if (e.name == "and") return truthy(l) ? eval(*e.kids[1]) : l;
        return truthy(l) ? l : eval(*e.kids[1]);
      }
      case EK::Not:
        return Value(!truthy(eval(*e.kids[0])));
      case EK::Compare: {
        Value left = eval(*e.kids[0]);
        for (std::size_t i = 0; i < e.ops.size(); ++i) {
          Value right = eval(*e.kids[i + 1]);
          if (!compare(e.ops[i], left, right)) return Value(false);
          left = std::move(right);
        }
        return Value(true);
      }
      case EK::IfExp:
        return truthy(eval(*e.kids[0])) ? eval(*e.kids[1]) : eval(*e.kids[2]);
      case EK::Call:
        return eval_call(e);
      case EK::Attribute:
        return attribute(eval(*e.kids[0]), e.name);
      case EK::Subscript:
        return subscript(eval(*e.kids[0]), eval(*e.kids[1]));
      case EK::Slice: {
        std::vector<Value> parts;
        for (auto& k : e.kids) parts.push_back(k ? eval(*k) : Value(NoneType{}));
        return make_tuple({Value("__slice__"), parts[0], parts[1], parts[2]});
      }
      case EK::ListDisp:
      case EK::TupleDisp: {
        std::vector<Value> items;
        for (auto& k : e.kids) items.push_back(eval(*k));
        charge(items.size());
        return e.kind == EK::ListDisp ? make_list(std::move(items)) : make_tuple(std::move(items));
      }
      case EK::DictDisp: {
        Value d = make_dict();
        for (std::size_t i = 0; i + 1 < e.kids.size(); i += 2) set_item(d, eval(*e.kids[i]), eval(*e.kids[i + 1]));
        return d;
      }
      case EK::ListComp: {
        std::vector<Value> out;
        comprehend(e, 0, out);
        return make_list(std::move(out));
      }
      case EK::FString: {
        std::string out;
        for (auto& p : e.parts) {
          if (!p.expr) {
            out += p.literal;
            continue;
          }
          Value v = eval(*p.expr);
          if (p.conversion == 'r') v = Value(repr(v));
          else if (p.conversion == 's') v = Value(str(v));
          out += format_value(v, p.spec);
        }
        charge(out.size() / 16);
        return Value(out);
      }
    }
    raise("SystemError", "unknown expression");
  }

  void comprehend(const Expr& e, std::size_t level, std::vector<Value>& out) {
    if (level == e.comps.size()) {
      out.push_back(eval(*e.kids[0]));
      charge(1);
      return;
    }
    const auto& c = e.comps[level];
    for (auto& item : iterate(eval(*c.iter))) {
      tick();
      assign(*c.target, item);
      bool keep = true;
      for (auto& cond : c.conds)
        if (!truthy(eval(*cond))) {
          keep = false;
          break;
        }
      if (keep) comprehend(e, level + 1, out);
    }
  }

  // ---- helpers ----

  static bool truthy(const Value& v) {
    if (v.is_none()) return false;
    if (v.is<bool>()) return v.as<bool>();
    if (v.is<Int>()) return v.as<Int>() != 0;
    if (v.is<double>()) return v.as<double>() != 0.0;
    if (v.is<std::string>()) return !v.as<std::string>().empty();
    if (v.is<ListPtr>()) return !v.as<ListPtr>()->empty();
    if (v.is<Tuple>()) return !v.as<Tuple>().items->empty();
    if (v.is<Dict>()) return !v.as<Dict>().items->empty();
    if (v.is<Range>()) return range_len(v.as<Range>()) > 0;
    return true;
  }

  static Int range_len(const Range& r) {
    if (r.step > 0) return r.start < r.stop ? (r.stop - r.start + r.step - 1) / r.step : 0;
    return r.start > r.stop ? (r.start - r.stop - r.step - 1) / (-r.step) : 0;
  }

  std::vector<Value> iterate(const Value& v) {
    if (v.is<ListPtr>()) return *v.as<ListPtr>();
    if (v.is<Tuple>()) return *v.as<Tuple>().items;
    if (v.is<std::string>()) {
      std::vector<Value> out;
      for (char c : v.as<std::string>()) out.push_back(Value(std::string(1, c)));
      return out;
    }
    if (v.is<Dict>()) {
      std::vector<Value> out;
      for (auto& kv : *v.as<Dict>().items) out.push_back(kv.first);
      return out;
    }
    if (v.is<Range>()) {
      const Range r = v.as<Range>();
      const Int n = range_len(r);
      charge(static_cast<std::size_t>(std::min<Int>(n, Int(1) << 62)));
      std::vector<Value> out;
      out.reserve(static_cast<std::size_t>(n));
      for (Int i = 0; i < n; ++i) out.push_back(Value(r.start + i * r.step));
      return out;
    }
    raise("TypeError", "'" + type_name(v) + "' object is not iterable");
  }

  static bool py_eq(const Value& a, const Value& b) {
    if (a.is_number() && b.is_number()) {
      if (a.is_int() && b.is_int()) return a.to_int() == b.to_int();
      return a.to_double() == b.to_double();
    }
    if (a.v.index() != b.v.index()) return false;
    if (a.is_none()) return true;
    if (a.is<std::string>()) return a.as<std::string>() == b.as<std::string>();
    auto seq_eq = [](const std::vector<Value>& x, const std::vector<Value>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!py_eq(x[i], y[i])) return false;
      return true;
    };
    if (a.is<ListPtr>()) return seq_eq(*a.as<ListPtr>(), *b.as<ListPtr>());
    if (a.is<Tuple>()) return seq_eq(*a.as<Tuple>().items, *b.as<Tuple>().items);
    if (a.is<Dict>()) {
      const auto& x = *a.as<Dict>().items;
      const auto& y = *b.as<Dict>().items;
      if (x.size() != y.size()) return false;
      for (auto& kv : x) {
        auto it = std::find_if(y.begin(), y.end(), [&](auto& o) { return py_eq(o.first, kv.first); });
        if (it == y.end() || !py_eq(it->second, kv.second)) return false;
      }
      return true;
    }
    if (a.is<Module>()) return a.as<Module>().name == b.as<Module>().name;
    if (a.is<Builtin>()) return a.as<Builtin>().name == b.as<Builtin>().name;
    if (a.is<Function>()) return a.as<Function>().def == b.as<Function>().def;
    return false;
  }

  static bool py_lt(const Value& a, const Value& b) {
    if (a.is_number() && b.is_number()) {
      if (a.is_int() && b.is_int()) return a.to_int() < b.to_int();
      return a.to_double() < b.to_double();
    }
    if (a.is<std::string>() && b.is<std::string>()) return a.as<std::string>() < b.as<std::string>();
    auto seq_lt = [](const std::vector<Value>& x, const std::vector<Value>& y) {
      for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!py_eq(x[i], y[i])) return py_lt(x[i], y[i]);
      }
      return x.size() < y.size();
    };
    if (a.is<ListPtr>() && b.is<ListPtr>()) return seq_lt(*a.as<ListPtr>(), *b.as<ListPtr>());
    if (a.is<Tuple>() && b.is<Tuple>()) return seq_lt(*a.as<Tuple>().items, *b.as<Tuple>().items);
    raise("TypeError", "'<' not supported between instances of '" + type_name(a) + "' and '" + type_name(b) + "'");
  }

  bool compare(const std::string& op, const Value& a, const Value& b) {
    if (op == "==") return py_eq(a, b);
    if (op == "!=") return !py_eq(a, b);
    if (op == "<") return py_lt(a, b);
    if (op == ">") return py_lt(b, a);
    if (op == "<=") return py_lt(a, b) || py_eq(a, b);
    if (op == ">=") return py_lt(b, a) || py_eq(a, b);
    if (op == "is" || op == "is not") {
      bool same = (a.is_none() && b.is_none()) || (a.is<bool>() && b.is<bool>() && a.as<bool>() == b.as<bool>());
      if (a.is<ListPtr>() && b.is<ListPtr>()) same = a.as<ListPtr>() == b.as<ListPtr>();
      return op == "is" ? same : !same;
    }
    if (op == "in" || op == "not in") {
      bool found = false;
      if (b.is<std::string>()) {
        if (!a.is<std::string>()) raise("TypeError", "'in <string>' requires string as left operand");
        found = b.as<std::string>().find(a.as<std::string>()) != std::string::npos;
      } else if (b.is<Range>() && a.is_int()) {
        const Range r = b.as<Range>();
        const Int x = a.to_int();
        found = (r.step > 0 ? (x >= r.start && x < r.stop) : (x <= r.start && x > r.stop)) &&
                (x - r.start) % r.step == 0;
      } else {
        for (auto& item : iterate(b))
          if (py_eq(item, a)) {
            found = true;
            break;
          }
      }
      return op == "in" ? found : !found;
    }
    raise("SystemError", "unknown comparison " + op);
  }

  Value binop(const std::string& op, const Value& a, const Value& b) {
    if (a.is_number() && b.is_number()) {
      const bool ints = a.is_int() && b.is_int();
      if (op == "+") return ints ? Value(int_add(a.to_int(), b.to_int())) : Value(as_float(a) + as_float(b));
      if (op == "-") return ints ? Value(int_sub(a.to_int(), b.to_int())) : Value(as_float(a) - as_float(b));
      if (op == "*") return ints ? Value(int_mul(a.to_int(), b.to_int())) : Value(as_float(a) * as_float(b));
      if (op == "/") {
        const double d = as_float(b);
        if (d == 0.0) raise("ZeroDivisionError", ints ? "division by zero" : "float division by zero");
        return Value(as_float(a) / d);
      }
      if (op == "//") {
        if (ints) return Value(int_floordiv(a.to_int(), b.to_int()));
        if (as_float(b) == 0.0) raise("ZeroDivisionError", "float floor division by zero");
        return Value(float_divmod(as_float(a), as_float(b)).first);
      }
      if (op == "%") {
        if (ints) return Value(int_mod(a.to_int(), b.to_int()));
        if (as_float(b) == 0.0) raise("ZeroDivisionError", "float modulo");
        return Value(float_divmod(as_float(a), as_float(b)).second);
      }
      if (op == "**") {
        if (ints) return int_pow(a.to_int(), b.to_int());
        return Value(float_pow(as_float(a), as_float(b)));
      }
    }
    if (op == "+") {
      if (a.is<std::string>() && b.is<std::string>()) {
        charge((a.as<std::string>().size() + b.as<std::string>().size()) / 16);
        return Value(a.as<std::string>() + b.as<std::string>());
      }
      if (a.is<ListPtr>() && b.is<ListPtr>()) {
        std::vector<Value> items = *a.as<ListPtr>();
        items.insert(items.end(), b.as<ListPtr>()->begin(), b.as<ListPtr>()->end());
        charge(items.size());
        return make_list(std::move(items));
      }
      if (a.is<Tuple>() && b.is<Tuple>()) {
        std::vector<Value> items = *a.as<Tuple>().items;
        items.insert(items.end(), b.as<Tuple>().items->begin(), b.as<Tuple>().items->end());
        charge(items.size());
        return make_tuple(std::move(items));
      }
    }
    if (op == "*") {
      if (b.is_int() && (a.is<std::string>() || a.is<ListPtr>() || a.is<Tuple>())) return repeat(a, b.to_int());
      if (a.is_int() && (b.is<std::string>() || b.is<ListPtr>() || b.is<Tuple>())) return repeat(b, a.to_int());
    }
    if (op == "%" && a.is<std::string>()) return Value(percent_format(a.as<std::string>(), b));
    raise("TypeError", "unsupported operand type(s) for " + op + ": '" + type_name(a) + "' and '" + type_name(b) + "'");
  }

  static double as_float(const Value& v) { return v.is<double>() ? v.as<double>() : int_to_float(v.to_int()); }

  Value repeat(const Value& seq, Int times) {
    if (times < 0) times = 0;
    if (seq.is<std::string>()) {
      const auto& s = seq.as<std::string>();
      charge(static_cast<std::size_t>(std::min<Int>(times * static_cast<Int>(s.size()) / 16, Int(1) << 62)));
      std::string out;
      for (Int i = 0; i < times; ++i) out += s;
      return Value(out);
    }
    const auto& items = seq.is<ListPtr>() ? *seq.as<ListPtr>() : *seq.as<Tuple>().items;
    charge(static_cast<std::size_t>(std::min<Int>(times * static_cast<Int>(items.size()), Int(1) << 62)));
    std::vector<Value> out;
    for (Int i = 0; i < times; ++i) out.insert(out.end(), items.begin(), items.end());
    return seq.is<ListPtr>() ? make_list(std::move(out)) : make_tuple(std::move(out));
  }

  static Int normalize_index(Int i, std::size_t size) {
    const Int n = static_cast<Int>(size);
    if (i < 0) i += n;
    if (i < 0 || i >= n) raise("IndexError", "index out of range");
    return i;
  }

  static bool is_slice(const Value& key) {
    return key.is<Tuple>() && key.as<Tuple>().items->size() == 4 && (*key.as<Tuple>().items)[0].is<std::string>() &&
           (*key.as<Tuple>().items)[0].as<std::string>() == "__slice__";
  }

  static std::vector<std::size_t> slice_indices(const Value& key, std::size_t size) {
    const auto& p = *key.as<Tuple>().items;
    auto get = [](const Value& v, Int dflt) -> Int {
      if (v.is_none()) return dflt;
      if (!v.is_int()) raise("TypeError", "slice indices must be integers or None");
      return v.to_int();
    };
    const Int n = static_cast<Int>(size);
    const Int step = get(p[3], 1);
    if (step == 0) raise("ValueError", "slice step cannot be zero");
    auto clamp = [&](Int i, bool is_start) -> Int {
      if (i < 0) i += n;
      if (step > 0) return std::clamp<Int>(i, 0, n);
      (void)is_start;
      return std::clamp<Int>(i, -1, n - 1);
    };
    Int start = p[1].is_none() ? (step > 0 ? 0 : n - 1) : clamp(get(p[1], 0), true);
    Int stop = p[2].is_none() ? (step > 0 ? n : -1) : clamp(get(p[2], 0), false);
    std::vector<std::size_t> out;
    for (Int i = start; step > 0 ? i < stop : i > stop; i += step) out.push_back(static_cast<std::size_t>(i));
    return out;
  }

  Value subscript(const Value& c, const Value& key) {
    if (c.is<Dict>()) {
      for (auto& kv : *c.as<Dict>().items)
        if (py_eq(kv.first, key)) return kv.second;
      raise("KeyError", repr(key));
    }
    if (c.is<ListPtr>() || c.is<Tuple>() || c.is<std::string>() || c.is<Range>()) {
      std::vector<Value> seq;
      if (c.is<std::string>()) {
        const auto& s = c.as<std::string>();
        if (is_slice(key)) {
          std::string out;
          for (auto i : slice_indices(key, s.size())) out += s[i];
          return Value(out);
        }
        if (!key.is_int()) raise("TypeError", "string indices must be integers");
        return Value(std::string(1, s[static_cast<std::size_t>(normalize_index(key.to_int(), s.size()))]));
      }
      const auto& items = c.is<ListPtr>() ? *c.as<ListPtr>() : c.is<Tuple>() ? *c.as<Tuple>().items : (seq = iterate(c));
      if (is_slice(key)) {
        std::vector<Value> out;
        for (auto i : slice_indices(key, items.size())) out.push_back(items[i]);
        return c.is<Tuple>() ? make_tuple(std::move(out)) : make_list(std::move(out));
      }
      if (!key.is_int()) raise("TypeError", type_name(c) + " indices must be integers or slices, not " + type_name(key));
      return items[static_cast<std::size_t>(normalize_index(key.to_int(), items.size()))];
    }
    raise("TypeError", "'" + type_name(c) + "' object is not subscriptable");
  }

  void set_item(Value& c, const Value& key, Value v) {
    if (c.is<Dict>()) {
      if (key.is<ListPtr>() || key.is<Dict>()) raise("TypeError", "unhashable type: '" + type_name(key) + "'");
      auto& items = *c.as<Dict>().items;
      for (auto& kv : items)
        if (py_eq(kv.first, key)) {
          kv.second = std::move(v);
          return;
        }
      charge(2);
      items.emplace_back(key, std::move(v));
      return;
    }
    if (c.is<ListPtr>()) {
      auto& items = *c.as<ListPtr>();
      if (!key.is_int()) raise("TypeError", "list indices must be integers");
      items[static_cast<std::size_t>(normalize_index(key.to_int(), items.size()))] = std::move(v);
      return;
    }
    raise("TypeError", "'" + type_name(c) + "' object does not support item assignment");
  }

  static Value math_constant(const std::string& name) {
    if (name == "pi") return Value(M_PI);
    if (name == "e") return Value(M_E);
    if (name == "tau") return Value(2 * M_PI);
    if (name == "inf") return Value(INFINITY);
    return Value(NAN);
  }

  static Value module_attr(const std::string& module, const std::string& attr) {
    if (attr == "pi" || attr == "e" || attr == "tau" || attr == "inf" || attr == "nan") return math_constant(attr);
    if (math_functions().count(attr)) return Value(Builtin{module + "." + attr});
    raise("AttributeError", "module '" + module + "' has no attribute '" + attr + "'");
  }

  Value attribute(const Value& obj, const std::string& attr) {
    if (attr.size() > 1 && attr[0] == '_' && attr[1] == '_')
      raise("PermissionError", "access to '" + attr + "' is not allowed in the sandbox");
    if (obj.is<Module>()) return module_attr(obj.as<Module>().name, attr);
    static const std::set<std::string> list_methods = {"append", "extend", "pop",     "insert", "index",
                                                       "count",  "sort",   "reverse", "copy"};
    static const std::set<std::string> dict_methods = {"get", "keys", "values", "items"};
    static const std::set<std::string> str_methods = {"format", "upper", "lower", "strip", "join", "replace",
                                                      "startswith", "endswith", "split"};
    static const std::set<std::string> float_methods = {"is_integer"};
    const bool ok = (obj.is<ListPtr>() && list_methods.count(attr)) || (obj.is<Dict>() && dict_methods.count(attr)) ||
                    (obj.is<std::string>() && str_methods.count(attr)) ||
                    (obj.is<double>() && float_methods.count(attr));
    if (!ok) raise("AttributeError", "'" + type_name(obj) + "' object has no attribute '" + attr + "'");
    return Value(BoundMethod{std::make_shared<Value>(obj), attr});
  }

  // ---- calls ----

  Value eval_call(const Expr& e) {
    Value callee = eval(*e.kids[0]);
    std::vector<Value> args;
    for (std::size_t i = 1; i < e.kids.size(); ++i) args.push_back(eval(*e.kids[i]));
    std::vector<std::pair<std::string, Value>> kwargs;
    for (std::size_t i = 0; i < e.kw.size(); ++i) kwargs.emplace_back(e.ops[i], eval(*e.kw[i]));
    return call(callee, args, kwargs);
  }

  Value call(const Value& callee, std::vector<Value>& args, std::vector<std::pair<std::string, Value>>& kwargs) {
    tick();
    if (callee.is<Builtin>()) return call_builtin(callee.as<Builtin>().name, args, kwargs);
    if (callee.is<BoundMethod>()) return call_method(callee.as<BoundMethod>(), args, kwargs);
    if (callee.is<Function>()) return call_function(*callee.as<Function>().def, args, kwargs);
    raise("TypeError", "'" + type_name(callee) + "' object is not callable");
  }

  Value call_function(const Stmt& def, std::vector<Value>& args, std::vector<std::pair<std::string, Value>>& kwargs) {
    if (depth_ >= limits_.max_depth) raise("RecursionError", "maximum recursion depth exceeded");
    const std::size_t np = def.params.size();
    if (args.size() > np)
      raise("TypeError", def.name + "() takes " + std::to_string(np) + " positional arguments but " +
                             std::to_string(args.size()) + " were given");
    Scope locals;
    std::vector<bool> bound(np, false);
    for (std::size_t i = 0; i < args.size(); ++i) {
      locals[def.params[i]] = args[i];
      bound[i] = true;
    }
    for (auto& [k, v] : kwargs) {
      auto it = std::find(def.params.begin(), def.params.end(), k);
      if (it == def.params.end()) raise("TypeError", def.name + "() got an unexpected keyword argument '" + k + "'");
      const auto idx = static_cast<std::size_t>(it - def.params.begin());
      if (bound[idx]) raise("TypeError", def.name + "() got multiple values for argument '" + k + "'");
      locals[k] = v;
      bound[idx] = true;
    }
    const std::size_t first_default = np - def.defaults.size();
    for (std::size_t i = 0; i < np; ++i) {
      if (bound[i]) continue;
      if (i < first_default) raise("TypeError", def.name + "() missing required argument '" + def.params[i] + "'");
      locals[def.params[i]] = eval(*def.defaults[i - first_default]);
    }
    Frame frame{&locals, {}};
    Frame* saved = frame_;
    frame_ = &frame;
    ++depth_;
    struct Restore {
      Interpreter* self;
      Frame* saved;
      ~Restore() {
        self->frame_ = saved;
        --self->depth_;
      }
    } restore{this, saved};
    ret_ = Value(NoneType{});
    const Flow f = exec_block(def.body);
    Value result = f == Flow::Return ? std::move(ret_) : Value(NoneType{});
    ret_ = Value(NoneType{});
    return result;
  }

  static const Value* kwarg(const std::vector<std::pair<std::string, Value>>& kwargs, const std::string& name) {
    for (auto& kv : kwargs)
      if (kv.first == name) return &kv.second;
    return nullptr;
  }

  static void expect_args(const std::string& fn, const std::vector<Value>& args, std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      raise("TypeError", fn + "() takes " + (lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi)) +
                             " arguments (" + std::to_string(args.size()) + " given)");
  }

  static double num_arg(const std::string& fn, const Value& v) {
    if (!v.is_number()) raise("TypeError", fn + "() requires a number, not '" + type_name(v) + "'");
    return as_float(v);
  }

  Value to_int_value(const Value& v) {
    if (v.is_int()) return Value(v.to_int());
    if (v.is<double>()) {
      const double d = v.as<double>();
      if (!std::isfinite(d)) raise(std::isnan(d) ? "ValueError" : "OverflowError", "cannot convert float to integer");
      if (std::fabs(d) >= 1.7e38) raise("OverflowError", "int too large for the sandbox");
      return Value(static_cast<Int>(std::trunc(d)));
    }
    if (v.is<std::string>()) {
      std::string s = v.as<std::string>();
      s.erase(0, s.find_first_not_of(" \t\n"));
      s.erase(s.find_last_not_of(" \t\n") + 1);
      std::string digits;
      for (char c : s)
        if (c != '_') digits += c;
      bool ok = !digits.empty();
      std::size_t i = (ok && (digits[0] == '-' || digits[0] == '+')) ? 1 : 0;
      if (i == digits.size()) ok = false;
      Int r = 0;
      for (; ok && i < digits.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(digits[i]))) ok = false;
        else r = int_add(int_mul(r, 10), digits[i] - '0');
      }
      if (!ok) raise("ValueError", "invalid literal for int() with base 10: " + quote(v.as<std::string>()));
      return Value(digits[0] == '-' ? -r : r);
    }
    raise("TypeError", "int() argument must be a string or a number, not '" + type_name(v) + "'");
  }

  Value to_float_value(const Value& v) {
    if (v.is_number()) return Value(as_float(v));
    if (v.is<std::string>()) {
      std::string s = v.as<std::string>();
      s.erase(0, s.find_first_not_of(" \t\n"));
      s.erase(s.find_last_not_of(" \t\n") + 1);
      std::string lower = s;
      for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if (lower == "inf" || lower == "+inf" || lower == "infinity") return Value(INFINITY);
      if (lower == "-inf" || lower == "-infinity") return Value(-INFINITY);
      if (lower == "nan") return Value(NAN);
      char* end = nullptr;
      const double d = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size() || lower.find_first_of("xp") != std::string::npos)
        raise("ValueError", "could not convert string to float: " + quote(v.as<std::string>()));
      return Value(d);
    }
    raise("TypeError", "float() argument must be a string or a number, not '" + type_name(v) + "'");
  }

  Value minmax(const std::string& fn, std::vector<Value>& args, std::vector<std::pair<std::string, Value>>& kwargs) {
    std::vector<Value> items = args.size() == 1 ? iterate(args[0]) : args;
    if (items.empty()) {
      if (auto* d = kwarg(kwargs, "default")) return *d;
      raise("ValueError", fn + "() arg is an empty sequence");
    }
    const Value* key = kwarg(kwargs, "key");
    auto keyed = [&](const Value& v) {
      if (!key) return v;
      std::vector<Value> a{v};
      std::vector<std::pair<std::string, Value>> none;
      return call(*key, a, none);
    };
    std::size_t best = 0;
    Value best_key = keyed(items[0]);
    for (std::size_t i = 1; i < items.size(); ++i) {
      Value k = keyed(items[i]);
      if (fn == "max" ? py_lt(best_key, k) : py_lt(k, best_key)) {
        best = i;
        best_key = std::move(k);
      }
    }
    return items[best];
  }

  std::vector<Value> sorted_items(std::vector<Value> items, const std::vector<std::pair<std::string, Value>>& kwargs) {
    const Value* key = kwarg(kwargs, "key");
    const Value* rev = kwarg(kwargs, "reverse");
    std::vector<Value> keys;
    for (auto& it : items) {
      if (key) {
        std::vector<Value> a{it};
        std::vector<std::pair<std::string, Value>> none;
        keys.push_back(call(*key, a, none));
      } else {
        keys.push_back(it);
      }
    }
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const bool reverse = rev && truthy(*rev);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return reverse ? py_lt(keys[b], keys[a]) : py_lt(keys[a], keys[b]);
    });
    std::vector<Value> out;
    for (auto i : order) out.push_back(items[i]);
    return out;
  }

  Value call_builtin(const std::string& fn, std::vector<Value>& args, std::vector<std::pair<std::string, Value>>& kwargs) {
    if (fn.rfind("math.", 0) == 0) return call_math(fn.substr(5), args, kwargs);
    if (fn == "print") {
      const Value* sep = kwarg(kwargs, "sep");
      const Value* end = kwarg(kwargs, "end");
      std::string line;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) line += sep && !sep->is_none() ? str(*sep) : " ";
        line += str(args[i]);
      }
      line += end && !end->is_none() ? str(*end) : "\n";
      if (out_.size() < limits_.max_stdout) out_ += line.substr(0, limits_.max_stdout - out_.size());
      return Value(NoneType{});
    }
    if (fn == "abs") {
      expect_args(fn, args, 1, 1);
      const Value& v = args[0];
      if (v.is<double>()) return Value(std::fabs(v.as<double>()));
      if (v.is_int()) return Value(v.to_int() < 0 ? int_sub(0, v.to_int()) : v.to_int());
      raise("TypeError", "bad operand type for abs(): '" + type_name(v) + "'");
    }
    if (fn == "round") {
      expect_args(fn, args, 1, 2);
      Value nd = args.size() == 2 ? args[1] : Value(NoneType{});
      if (auto* k = kwarg(kwargs, "ndigits")) nd = *k;
      const Value& v = args[0];
      if (!v.is_number()) raise("TypeError", "type " + type_name(v) + " doesn't define __round__ method");
      if (nd.is_none()) {
        if (v.is_int()) return Value(v.to_int());
        const double d = v.as<double>();
        if (!std::isfinite(d)) raise(std::isnan(d) ? "ValueError" : "OverflowError", "cannot convert float to integer");
        return to_int_value(Value(std::nearbyint(d)));
      }
      if (!nd.is_int()) raise("TypeError", "'" + type_name(nd) + "' object cannot be interpreted as an integer");
      const long long n = static_cast<long long>(std::clamp<Int>(nd.to_int(), -400, 400));
      if (v.is_int()) return Value(round_int(v.to_int(), n));
      return Value(round_float(v.as<double>(), n));
    }
    if (fn == "min" || fn == "max") {
      if (args.empty()) raise("TypeError", fn + " expected at least 1 argument, got 0");
      return minmax(fn, args, kwargs);
    }
    if (fn == "sum") {
      expect_args(fn, args, 1, 2);
      Value acc = args.size() == 2 ? args[1] : Value(Int(0));
      if (auto* s = kwarg(kwargs, "start")) acc = *s;
      for (auto& item : iterate(args[0])) acc = binop("+", acc, item);
      return acc;
    }
    if (fn == "len") {
      expect_args(fn, args, 1, 1);
      const Value& v = args[0];
      if (v.is<std::string>()) return Value(static_cast<Int>(v.as<std::string>().size()));
      if (v.is<ListPtr>()) return Value(static_cast<Int>(v.as<ListPtr>()->size()));
      if (v.is<Tuple>()) return Value(static_cast<Int>(v.as<Tuple>().items->size()));
      if (v.is<Dict>()) return Value(static_cast<Int>(v.as<Dict>().items->size()));
      if (v.is<Range>()) return Value(range_len(v.as<Range>()));
      raise("TypeError", "object of type '" + type_name(v) + "' has no len()");
    }
    if (fn == "float") {
      expect_args(fn, args, 0, 1);
      return args.empty() ? Value(0.0) : to_float_value(args[0]);
    }
    if (fn == "int") {
      expect_args(fn, args, 0, 1);
      return args.empty() ? Value(Int(0)) : to_int_value(args[0]);
    }
    if (fn == "str") {
      expect_args(fn, args, 0, 1);
      return Value(args.empty() ? std::string() : str(args[0]));
    }
    if (fn == "bool") {
      expect_args(fn, args, 0, 1);
      return Value(!args.empty() && truthy(args[0]));
    }
    if (fn == "range") {
      expect_args(fn, args, 1, 3);
      for (auto& a : args)
        if (!a.is_int()) raise("TypeError", "'" + type_name(a) + "' object cannot be interpreted as an integer");
      Range r{0, 0, 1};
      if (args.size() == 1) {
        r.stop = args[0].to_int();
      } else {
        r.start = args[0].to_int();
        r.stop = args[1].to_int();
        if (args.size() == 3) r.step = args[2].to_int();
      }
      if (r.step == 0) raise("ValueError", "range() arg 3 must not be zero");
      return Value(r);
    }
    if (fn == "list" || fn == "tuple") {
      expect_args(fn, args, 0, 1);
      std::vector<Value> items = args.empty() ? std::vector<Value>{} : iterate(args[0]);
      charge(items.size());
      return fn == "list" ? make_list(std::move(items)) : make_tuple(std::move(items));
    }
    if (fn == "dict") {
      Value d = make_dict();
      if (!args.empty())
        for (auto& pair : iterate(args[0])) {
          auto kv = iterate(pair);
          if (kv.size() != 2) raise("ValueError", "dictionary update sequence element has wrong length");
          set_item(d, kv[0], kv[1]);
        }
      for (auto& [k, v] : kwargs) set_item(d, Value(k), v);
      return d;
    }
    if (fn == "sorted") {
      expect_args(fn, args, 1, 1);
      return make_list(sorted_items(iterate(args[0]), kwargs));
    }
    if (fn == "reversed") {
      expect_args(fn, args, 1, 1);
      auto items = iterate(args[0]);
      std::reverse(items.begin(), items.end());
      return make_list(std::move(items));
    }
    if (fn == "enumerate") {
      expect_args(fn, args, 1, 2);
      Int start = args.size() == 2 ? args[1].to_int() : 0;
      if (auto* s = kwarg(kwargs, "start")) start = s->to_int();
      std::vector<Value> out;
      for (auto& item : iterate(args[0])) out.push_back(make_tuple({Value(start++), item}));
      charge(out.size() * 3);
      return make_list(std::move(out));
    }
    if (fn == "zip") {
      std::vector<std::vector<Value>> seqs;
      std::size_t n = args.empty() ? 0 : SIZE_MAX;
      for (auto& a : args) {
        seqs.push_back(iterate(a));
        n = std::min(n, seqs.back().size());
      }
      std::vector<Value> out;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<Value> row;
        for (auto& s : seqs) row.push_back(s[i]);
        out.push_back(make_tuple(std::move(row)));
      }
      charge(out.size() * (seqs.size() + 1));
      return make_list(std::move(out));
    }
    if (fn == "pow") {
      expect_args(fn, args, 2, 2);
      return binop("**", args[0], args[1]);
    }
    if (fn == "divmod") {
      expect_args(fn, args, 2, 2);
      return make_tuple({binop("//", args[0], args[1]), binop("%", args[0], args[1])});
    }
    if (fn == "format") {
      expect_args(fn, args, 1, 2);
      return Value(format_value(args[0], args.size() == 2 ? str(args[1]) : ""));
    }
    if (fn == "any" || fn == "all") {
      expect_args(fn, args, 1, 1);
      for (auto& item : iterate(args[0]))
        if (truthy(item) == (fn == "any")) return Value(fn == "any");
      return Value(fn == "all");
    }
    raise("NameError", "name '" + fn + "' is not defined");
  }

  Value call_math(const std::string& fn, std::vector<Value>& args, std::vector<std::pair<std::string, Value>>& kwargs) {
    const std::string qual = "math." + fn;
    auto domain = [](bool bad) {
      if (bad) raise("ValueError", "math domain error");
    };
    auto unary = [&](double (*f)(double)) {
      expect_args(qual, args, 1, 1);
      return Value(f(num_arg(qual, args[0])));
    };
    if (fn == "sqrt") {
      expect_args(qual, args, 1, 1);
      const double x = num_arg(qual, args[0]);
      domain(x < 0);
      return Value(std::sqrt(x));
    }
    if (fn == "log") {
      expect_args(qual, args, 1, 2);
      const double x = num_arg(qual, args[0]);
      domain(x <= 0);
      if (args.size() == 1) return Value(std::log(x));
      const double b = num_arg(qual, args[1]);
      domain(b <= 0);
      if (b == 1.0) raise("ZeroDivisionError", "float division by zero");
      return Value(std::log(x) / std::log(b));
    }
    if (fn == "log10" || fn == "log2") {
      expect_args(qual, args, 1, 1);
      const double x = num_arg(qual, args[0]);
      domain(x <= 0);
      return Value(fn == "log10" ? std::log10(x) : std::log2(x));
    }
    if (fn == "exp") {
      expect_args(qual, args, 1, 1);
      const double r = std::exp(num_arg(qual, args[0]));
      if (std::isinf(r)) raise("OverflowError", "math range error");
      return Value(r);
    }
    if (fn == "pow") {
      expect_args(qual, args, 2, 2);
      return Value(float_pow(num_arg(qual, args[0]), num_arg(qual, args[1])));
    }
    if (fn == "floor" || fn == "ceil" || fn == "trunc") {
      expect_args(qual, args, 1, 1);
      if (args[0].is_int()) return Value(args[0].to_int());
      const double x = num_arg(qual, args[0]);
      return to_int_value(Value(fn == "floor" ? std::floor(x) : fn == "ceil" ? std::ceil(x) : std::trunc(x)));
    }
    if (fn == "fabs") return unary(std::fabs);
    if (fn == "sin") return unary(std::sin);
    if (fn == "cos") return unary(std::cos);
    if (fn == "tan") return unary(std::tan);
    if (fn == "atan") return unary(std::atan);
    if (fn == "hypot") {
      expect_args(qual, args, 2, 2);
      return Value(std::hypot(num_arg(qual, args[0]), num_arg(qual, args[1])));
    }
    if (fn == "isfinite" || fn == "isnan") {
      expect_args(qual, args, 1, 1);
      const double x = num_arg(qual, args[0]);
      return Value(fn == "isfinite" ? std::isfinite(x) : std::isnan(x));
    }
    if (fn == "isclose") {
      expect_args(qual, args, 2, 2);
      const double a = num_arg(qual, args[0]), b = num_arg(qual, args[1]);
      const double rel = kwarg(kwargs, "rel_tol") ? num_arg(qual, *kwarg(kwargs, "rel_tol")) : 1e-9;
      const double abs_tol = kwarg(kwargs, "abs_tol") ? num_arg(qual, *kwarg(kwargs, "abs_tol")) : 0.0;
      if (a == b) return Value(true);
      const double diff = std::fabs(b - a);
      return Value(diff <= std::fabs(rel * b) || diff <= std::fabs(rel * a) || diff <= abs_tol);
    }
    if (fn == "prod") {
      expect_args(qual, args, 1, 1);
      Value acc(Int(1));
      if (auto* s = kwarg(kwargs, "start")) acc = *s;
      for (auto& item : iterate(args[0])) acc = binop("*", acc, item);
      return acc;
    }
    if (fn == "factorial") {
      expect_args(qual, args, 1, 1);
      if (!args[0].is_int()) raise("TypeError", "factorial() only accepts integral values");
      const Int n = args[0].to_int();
      if (n < 0) raise("ValueError", "factorial() not defined for negative values");
      Int r = 1;
      for (Int i = 2; i <= n; ++i) r = int_mul(r, i);
      return Value(r);
    }
    raise("AttributeError", "module 'math' has no attribute '" + fn + "'");
  }

  Value call_method(const BoundMethod& m, std::vector<Value>& args, std::vector<std::pair<std::string, Value>>& kwargs) {
    Value& self = *m.self;
    const std::string& fn = m.name;
    if (self.is<ListPtr>()) {
      auto& items = *self.as<ListPtr>();
      if (fn == "append") {
        expect_args(fn, args, 1, 1);
        charge(1);
        items.push_back(args[0]);
        return Value(NoneType{});
      }
      if (fn == "extend") {
        expect_args(fn, args, 1, 1);
        auto more = iterate(args[0]);
        charge(more.size());
        items.insert(items.end(), more.begin(), more.end());
        return Value(NoneType{});
      }
      if (fn == "pop") {
        expect_args(fn, args, 0, 1);
        if (items.empty()) raise("IndexError", "pop from empty list");
        const Int i = normalize_index(args.empty() ? -1 : args[0].to_int(), items.size());
        Value v = items[static_cast<std::size_t>(i)];
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
        return v;
      }
      if (fn == "insert") {
        expect_args(fn, args, 2, 2);
        Int i = args[0].to_int();
        const Int n = static_cast<Int>(items.size());
        if (i < 0) i = std::max<Int>(0, i + n);
        i = std::min(i, n);
        charge(1);
        items.insert(items.begin() + static_cast<std::ptrdiff_t>(i), args[1]);
        return Value(NoneType{});
      }
      if (fn == "index" || fn == "count") {
        expect_args(fn, args, 1, 1);
        Int count = 0;
        for (std::size_t i = 0; i < items.size(); ++i)
          if (py_eq(items[i], args[0])) {
            if (fn == "index") return Value(static_cast<Int>(i));
            ++count;
          }
        if (fn == "index") raise("ValueError", repr(args[0]) + " is not in list");
        return Value(count);
      }
      if (fn == "sort") {
        expect_args(fn, args, 0, 0);
        items = sorted_items(items, kwargs);
        return Value(NoneType{});
      }
      if (fn == "reverse") {
        std::reverse(items.begin(), items.end());
        return Value(NoneType{});
      }
      if (fn == "copy") return make_list(items);
    }
    if (self.is<Dict>()) {
      auto& items = *self.as<Dict>().items;
      if (fn == "get") {
        expect_args(fn, args, 1, 2);
        for (auto& kv : items)
          if (py_eq(kv.first, args[0])) return kv.second;
        return args.size() == 2 ? args[1] : Value(NoneType{});
      }
      std::vector<Value> out;
      for (auto& kv : items) {
        if (fn == "keys") out.push_back(kv.first);
        else if (fn == "values") out.push_back(kv.second);
        else out.push_back(make_tuple({kv.first, kv.second}));
      }
      return make_list(std::move(out));
    }
    if (self.is<std::string>()) {
      const auto& s = self.as<std::string>();
      if (fn == "format") return Value(str_format(s, args, kwargs));
      if (fn == "upper" || fn == "lower") {
        std::string out = s;
        for (auto& c : out)
          c = static_cast<char>(fn == "upper" ? std::toupper(static_cast<unsigned char>(c))
                                              : std::tolower(static_cast<unsigned char>(c)));
        return Value(out);
      }
      if (fn == "strip") {
        const auto b = s.find_first_not_of(" \t\n\r");
        if (b == std::string::npos) return Value(std::string());
        return Value(s.substr(b, s.find_last_not_of(" \t\n\r") - b + 1));
      }
      if (fn == "join") {
        expect_args(fn, args, 1, 1);
        std::string out;
        bool first = true;
        for (auto& item : iterate(args[0])) {
          if (!item.is<std::string>()) raise("TypeError", "sequence item: expected str instance, " + type_name(item) + " found");
          if (!first) out += s;
          out += item.as<std::string>();
          first = false;
        }
        return Value(out);
      }
      if (fn == "replace") {
        expect_args(fn, args, 2, 2);
        const std::string from = str(args[0]), to = str(args[1]);
        if (from.empty()) return Value(s);
        std::string out;
        std::size_t pos = 0, hit;
        while ((hit = s.find(from, pos)) != std::string::npos) {
          out += s.substr(pos, hit - pos) + to;
          pos = hit + from.size();
        }
        return Value(out + s.substr(pos));
      }
      if (fn == "startswith" || fn == "endswith") {
        expect_args(fn, args, 1, 1);
        const std::string p = str(args[0]);
        const bool r = fn == "startswith" ? s.rfind(p, 0) == 0
                                          : (s.size() >= p.size() && s.compare(s.size() - p.size(), p.size(), p) == 0);
        return Value(r);
      }
      if (fn == "split") {
        std::vector<Value> out;
        if (args.empty()) {
          std::string cur;
          for (char c : s) {
            if (std::isspace(static_cast<unsigned char>(c))) {
              if (!cur.empty()) out.push_back(Value(cur));
              cur.clear();
            } else {
              cur += c;
            }
          }
          if (!cur.empty()) out.push_back(Value(cur));
        } else {
          const std::string sep = str(args[0]);
          if (sep.empty()) raise("ValueError", "empty separator");
          std::size_t pos = 0, hit;
          while ((hit = s.find(sep, pos)) != std::string::npos) {
            out.push_back(Value(s.substr(pos, hit - pos)));
            pos = hit + sep.size();
          }
          out.push_back(Value(s.substr(pos)));
        }
        return make_list(std::move(out));
      }
    }
    if (self.is<double>() && fn == "is_integer") {
      const double d = self.as<double>();
      return Value(std::isfinite(d) && std::floor(d) == d);
    }
    raise("AttributeError", "'" + type_name(self) + "' object has no attribute '" + fn + "'");
  }
};

}  // namespace pcollab::minipy
