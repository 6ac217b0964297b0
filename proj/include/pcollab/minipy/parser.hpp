#pragma once

// Tokenizer and recursive-descent parser for the supported Python subset:
// assignments (plain, tuple, subscript, augmented), if/elif/else, while,
// for, def/return, import, assert, pass/break/continue, and expressions with
// calls, subscripts, slices, attributes, comprehensions and f-strings.

#include <array>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pcollab/minipy/value.hpp"

namespace pcollab::minipy {

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok kind;
  std::string text;
  int line = 0;
  bool fstring = false;
};

[[noreturn]] inline void syntax_error(const std::string& msg, int line) {
  raise("SyntaxError", msg + " (line " + std::to_string(line) + ")");
}

inline std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  std::vector<int> indents = {0};
  int depth = 0;
  int line = 1;
  std::size_t i = 0;
  const std::size_t n = src.size();
  bool at_line_start = true;

  auto is_id_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_id = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };

  while (i < n) {
    if (at_line_start && depth == 0) {
      int col = 0;
      std::size_t j = i;
      while (j < n && (src[j] == ' ' || src[j] == '\t' || src[j] == '\f')) {
        col = src[j] == '\t' ? (col / 8 + 1) * 8 : col + 1;
        ++j;
      }
      if (j >= n) {
        i = j;
        break;
      }
      if (src[j] == '\n' || src[j] == '#' || src[j] == '\r') {  // blank or comment-only line
        while (j < n && src[j] != '\n') ++j;
        if (j < n) ++j;
        ++line;
        i = j;
        continue;
      }
      if (col > indents.back()) {
        indents.push_back(col);
        out.push_back({Tok::Indent, "", line});
      } else {
        while (col < indents.back()) {
          indents.pop_back();
          out.push_back({Tok::Dedent, "", line});
        }
        if (col != indents.back()) raise("IndentationError", "unindent does not match any outer indentation level");
      }
      i = j;
      at_line_start = false;
    }

    const char c = src[i];
    if (c == '\n') {
      if (depth == 0) {
        out.push_back({Tok::Newline, "", line});
        at_line_start = true;
      }
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '\\' && i + 1 < n && (src[i + 1] == '\n' || src[i + 1] == '\r')) {
      i += src[i + 1] == '\r' && i + 2 < n && src[i + 2] == '\n' ? 3 : 2;
      ++line;
      continue;
    }

    // String literal, possibly prefixed.
    {
      std::size_t j = i;
      bool raw = false, fstr = false, bytes = false;
      while (j < n && j - i < 2 && std::string("rRfFbBuU").find(src[j]) != std::string::npos) {
        const char p = static_cast<char>(std::tolower(static_cast<unsigned char>(src[j])));
        raw |= p == 'r';
        fstr |= p == 'f';
        bytes |= p == 'b';
        ++j;
      }
      if (j < n && (src[j] == '"' || src[j] == '\'')) {
        if (bytes) syntax_error("bytes literals are not supported", line);
        const char q = src[j];
        const bool triple = j + 2 < n && src[j + 1] == q && src[j + 2] == q;
        std::size_t k = j + (triple ? 3 : 1);
        std::string body;
        bool closed = false;
        while (k < n) {
          if (src[k] == '\\' && !raw && k + 1 < n) {
            const char e = src[k + 1];
            switch (e) {
              case 'n': body += '\n'; break;
              case 't': body += '\t'; break;
              case 'r': body += '\r'; break;
              case '0': body += '\0'; break;
              case '\\': body += '\\'; break;
              case '\'': body += '\''; break;
              case '"': body += '"'; break;
              case '\n': ++line; break;
              default: body += '\\'; body += e;
            }
            k += 2;
            continue;
          }
          if (src[k] == '\\' && raw && k + 1 < n) {
            body += src[k];
            body += src[k + 1];
            k += 2;
            continue;
          }
          if (triple ? (k + 2 < n && src[k] == q && src[k + 1] == q && src[k + 2] == q) : src[k] == q) {
            k += triple ? 3 : 1;
            closed = true;
            break;
          }
          if (src[k] == '\n') {
            if (!triple) syntax_error("unterminated string literal", line);
            ++line;
          }
          body += src[k++];
        }
        if (!closed) syntax_error("unterminated string literal", line);
        Token t{Tok::String, body, line};
        t.fstring = fstr;
        out.push_back(std::move(t));
        i = k;
        continue;
      }
    }

    if (is_id_start(c)) {
      std::size_t j = i;
      while (j < n && is_id(src[j])) ++j;
      out.push_back({Tok::Name, src.substr(i, j - i), line});
      i = j;
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      if (c == '0' && j + 1 < n && std::string("xXoObB").find(src[j + 1]) != std::string::npos) {
        j += 2;
        while (j < n && (std::isxdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      } else {
        while (j < n && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
        if (j < n && src[j] == '.') {
          ++j;
          while (j < n && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
        }
        if (j < n && (src[j] == 'e' || src[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < n && (src[k] == '+' || src[k] == '-')) ++k;
          if (k < n && std::isdigit(static_cast<unsigned char>(src[k]))) {
            j = k;
            while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
          }
        }
      }
      if (j < n && (src[j] == 'j' || src[j] == 'J')) syntax_error("complex literals are not supported", line);
      if (j < n && is_id(src[j])) syntax_error("invalid decimal literal", line);
      out.push_back({Tok::Number, src.substr(i, j - i), line});
      i = j;
      continue;
    }

    static const char* ops3[] = {"**=", "//=", ">>=", "<<=", "..."};
    static const char* ops2[] = {"**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
                                 "->", ":=", "<<", ">>", "&=", "|=", "^=", "@="};
    std::string op;
    for (auto* o : ops3)
      if (src.compare(i, 3, o) == 0) op = o;
    if (op.empty())
      for (auto* o : ops2)
        if (src.compare(i, 2, o) == 0) op = o;
    if (op.empty()) {
      if (std::string("()[]{},:.;+-*/%<>=@|&^~").find(c) == std::string::npos)
        syntax_error(std::string("invalid character '") + c + "'", line);
      op = std::string(1, c);
    }
    if (op == "(" || op == "[" || op == "{") ++depth;
    if (op == ")" || op == "]" || op == "}") {
      if (depth == 0) syntax_error("unmatched '" + op + "'", line);
      --depth;
    }
    out.push_back({Tok::Op, op, line});
    i += op.size();
  }
  if (depth != 0) syntax_error("'(' was never closed", line);
  if (!out.empty() && out.back().kind != Tok::Newline && out.back().kind != Tok::Dedent)
    out.push_back({Tok::Newline, "", line});
  while (indents.size() > 1) {
    indents.pop_back();
    out.push_back({Tok::Dedent, "", line});
  }
  out.push_back({Tok::End, "", line});
  return out;
}

// ---- AST ----------------------------------------------------------------

enum class EK {
  Const, Name, Unary, Binary, BoolOp, Not, Compare, IfExp, Call, Attribute, Subscript, Slice,
  ListDisp, TupleDisp, DictDisp, ListComp, FString
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Comprehension {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> conds;
};

struct FPart {
  std::string literal;
  ExprPtr expr;  // null for a literal chunk
  std::string spec;
  char conversion = 0;  // 'r', 's' or 0
};

struct Expr {
  EK kind;
  int line = 0;
  Value constant;
  std::string name;                 // identifier, attribute, operator
  std::vector<ExprPtr> kids;        // operands, elements, positional args
  std::vector<std::string> ops;     // Compare operators; keyword names for Call
  std::vector<ExprPtr> kw;          // keyword argument values for Call
  std::vector<Comprehension> comps;
  std::vector<FPart> parts;
};

enum class SK { ExprStmt, Assign, AugAssign, If, While, For, Def, Return, Pass, Break, Continue, Import, Assert, Global };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  SK kind;
  int line = 0;
  std::vector<ExprPtr> targets;
  ExprPtr value;
  std::string op;
  std::vector<StmtPtr> body, orelse;
  std::string name;
  std::vector<std::string> params;
  std::vector<ExprPtr> defaults;                    // aligned to the last params
  std::vector<std::array<std::string, 3>> imports;  // {bound name, module, attribute or ""}
  ExprPtr msg;
};

struct Program {
  std::vector<StmtPtr> body;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Program parse_program() {
    Program p;
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Newline) {
        ++pos_;
        continue;
      }
      parse_statement(p.body);
    }
    return p;
  }

  /// A standalone expression, used for f-string replacement fields.
  ExprPtr parse_standalone_expr() {
    auto e = parse_test();
    while (peek().kind == Tok::Newline) ++pos_;
    if (peek().kind != Tok::End) syntax_error("f-string: expecting '}'", peek().line);
    return e;
  }

 private:
  std::vector<Token> t_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t ahead = 0) const { return t_[std::min(pos_ + ahead, t_.size() - 1)]; }
  bool is_op(const std::string& s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Op && peek(ahead).text == s;
  }
  bool is_kw(const std::string& s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Name && peek(ahead).text == s;
  }
  bool accept_op(const std::string& s) {
    if (!is_op(s)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(const std::string& s) {
    if (!is_kw(s)) return false;
    ++pos_;
    return true;
  }
  void expect_op(const std::string& s) {
    if (!accept_op(s)) syntax_error("expected '" + s + "'", peek().line);
  }
  void expect_kw(const std::string& s) {
    if (!accept_kw(s)) syntax_error("expected '" + s + "'", peek().line);
  }
  std::string expect_name() {
    if (peek().kind != Tok::Name || keywords().count(peek().text)) syntax_error("expected a name", peek().line);
    return t_[pos_++].text;
  }

  static const std::set<std::string>& keywords() {
    static const std::set<std::string> k = {
        "False", "None",   "True",  "and",    "as",     "assert", "async",  "await",    "break",
        "class", "continue", "def", "del",    "elif",   "else",   "except", "finally",  "for",
        "from",  "global", "if",    "import", "in",     "is",     "lambda", "nonlocal", "not",
        "or",    "pass",   "raise", "return", "try",    "while",  "with",   "yield"};
    return k;
  }

  ExprPtr node(EK k, int line) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->line = line;
    return e;
  }

  // ---- statements ----

  void parse_statement(std::vector<StmtPtr>& out) {
    const auto& tk = peek();
    if (tk.kind == Tok::Indent) syntax_error("unexpected indent", tk.line);
    if (tk.kind == Tok::Name) {
      if (tk.text == "if") return out.push_back(parse_if());
      if (tk.text == "while") return out.push_back(parse_while());
      if (tk.text == "for") return out.push_back(parse_for());
      if (tk.text == "def") return out.push_back(parse_def());
      static const std::set<std::string> unsupported = {"class", "try", "with", "lambda", "async", "yield",
                                                        "raise", "del", "nonlocal", "await"};
      if (unsupported.count(tk.text)) syntax_error("'" + tk.text + "' is not supported in the sandbox", tk.line);
    }
    parse_simple_line(out);
  }

  void parse_simple_line(std::vector<StmtPtr>& out) {
    out.push_back(parse_small());
    while (accept_op(";")) {
      if (peek().kind == Tok::Newline || peek().kind == Tok::End) break;
      out.push_back(parse_small());
    }
    if (peek().kind == Tok::Newline) {
      ++pos_;
    } else if (peek().kind != Tok::End && peek().kind != Tok::Dedent) {
      syntax_error("invalid syntax", peek().line);
    }
  }

  std::vector<StmtPtr> parse_block() {
    expect_op(":");
    std::vector<StmtPtr> body;
    if (peek().kind != Tok::Newline) {
      parse_simple_line(body);
      return body;
    }
    ++pos_;
    if (peek().kind != Tok::Indent) syntax_error("expected an indented block", peek().line);
    ++pos_;
    while (peek().kind != Tok::Dedent && peek().kind != Tok::End) {
      if (peek().kind == Tok::Newline) {
        ++pos_;
        continue;
      }
      parse_statement(body);
    }
    if (peek().kind == Tok::Dedent) ++pos_;
    return body;
  }

  StmtPtr make_stmt(SK k) {
    auto s = std::make_unique<Stmt>();
    s->kind = k;
    s->line = peek().line;
    return s;
  }

  StmtPtr parse_if() {
    auto s = make_stmt(SK::If);
    ++pos_;  // 'if' or 'elif'
    s->value = parse_namedexpr();
    s->body = parse_block();
    if (is_kw("elif")) {
      s->orelse.push_back(parse_if());
    } else if (accept_kw("else")) {
      s->orelse = parse_block();
    }
    return s;
  }

  StmtPtr parse_while() {
    auto s = make_stmt(SK::While);
    ++pos_;
    s->value = parse_namedexpr();
    s->body = parse_block();
    if (accept_kw("else")) s->orelse = parse_block();
    return s;
  }

  StmtPtr parse_for() {
    auto s = make_stmt(SK::For);
    ++pos_;
    s->targets.push_back(parse_target_list());
    expect_kw("in");
    s->value = parse_testlist();
    s->body = parse_block();
    if (accept_kw("else")) s->orelse = parse_block();
    return s;
  }

  StmtPtr parse_def() {
    auto s = make_stmt(SK::Def);
    ++pos_;
    s->name = expect_name();
    expect_op("(");
    while (!is_op(")")) {
      if (is_op("*") || is_op("**") || is_op("/")) syntax_error("variadic parameters are not supported", peek().line);
      s->params.push_back(expect_name());
      if (accept_op(":")) parse_test();  // annotation, ignored
      if (accept_op("=")) {
        s->defaults.push_back(parse_test());
      } else if (!s->defaults.empty()) {
        syntax_error("non-default argument follows default argument", peek().line);
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    if (accept_op("->")) parse_test();
    s->body = parse_block();
    return s;
  }

  StmtPtr parse_small() {
    const int line = peek().line;
    if (accept_kw("pass")) return make_stmt(SK::Pass);
    if (accept_kw("break")) return make_stmt(SK::Break);
    if (accept_kw("continue")) return make_stmt(SK::Continue);
    if (is_kw("return")) {
      auto s = make_stmt(SK::Return);
      ++pos_;
      if (peek().kind != Tok::Newline && peek().kind != Tok::End && !is_op(";")) s->value = parse_testlist();
      return s;
    }
    if (is_kw("global")) {
      auto s = make_stmt(SK::Global);
      ++pos_;
      s->params.push_back(expect_name());
      while (accept_op(",")) s->params.push_back(expect_name());
      return s;
    }
    if (is_kw("assert")) {
      auto s = make_stmt(SK::Assert);
      ++pos_;
      s->value = parse_test();
      if (accept_op(",")) s->msg = parse_test();
      return s;
    }
    if (is_kw("import")) {
      auto s = make_stmt(SK::Import);
      ++pos_;
      do {
        std::string mod = dotted_name();
        std::string bound = mod.substr(0, mod.find('.'));
        if (accept_kw("as")) bound = expect_name();
        s->imports.push_back({bound, mod, ""});
      } while (accept_op(","));
      return s;
    }
    if (is_kw("from")) {
      auto s = make_stmt(SK::Import);
      ++pos_;
      const std::string mod = dotted_name();
      expect_kw("import");
      const bool paren = accept_op("(");
      if (accept_op("*")) {
        s->imports.push_back({"*", mod, "*"});
      } else {
        do {
          if (paren && is_op(")")) break;
          std::string attr = expect_name();
          std::string bound = attr;
          if (accept_kw("as")) bound = expect_name();
          s->imports.push_back({bound, mod, attr});
        } while (accept_op(","));
      }
      if (paren) expect_op(")");
      return s;
    }

    auto first = parse_testlist_star();
    if (is_op("=")) {
      auto s = make_stmt(SK::Assign);
      s->line = line;
      std::vector<ExprPtr> chain;
      chain.push_back(std::move(first));
      while (accept_op("=")) chain.push_back(parse_testlist_star());
      s->value = std::move(chain.back());
      chain.pop_back();
      for (auto& t : chain) check_target(*t);
      s->targets = std::move(chain);
      return s;
    }
    if (is_op(":") && first->kind == EK::Name) {  // annotated assignment
      ++pos_;
      parse_test();
      auto s = make_stmt(SK::Assign);
      s->line = line;
      if (!accept_op("=")) {
        s->kind = SK::Pass;
        return s;
      }
      s->value = parse_testlist_star();
      s->targets.push_back(std::move(first));
      return s;
    }
    static const std::set<std::string> aug = {"+=", "-=", "*=", "/=", "//=", "%=", "**="};
    if (peek().kind == Tok::Op && aug.count(peek().text)) {
      auto s = make_stmt(SK::AugAssign);
      s->line = line;
      s->op = peek().text.substr(0, peek().text.size() - 1);
      ++pos_;
      if (first->kind != EK::Name && first->kind != EK::Subscript)
        syntax_error("illegal expression for augmented assignment", line);
      s->targets.push_back(std::move(first));
      s->value = parse_testlist();
      return s;
    }
    if (peek().kind == Tok::Op && peek().text.size() >= 2 && peek().text.back() == '=' && peek().text != "==" &&
        peek().text != "<=" && peek().text != ">=" && peek().text != "!=")
      syntax_error("operator '" + peek().text + "' is not supported", line);
    auto s = make_stmt(SK::ExprStmt);
    s->line = line;
    s->value = std::move(first);
    return s;
  }

  std::string dotted_name() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  void check_target(const Expr& e) {
    switch (e.kind) {
      case EK::Name:
      case EK::Subscript:
        return;
      case EK::TupleDisp:
      case EK::ListDisp:
        for (auto& k : e.kids) check_target(*k);
        return;
      case EK::Attribute:
        syntax_error("attribute assignment is not supported", e.line);
      default:
        syntax_error("cannot assign to expression", e.line);
    }
  }

  ExprPtr parse_target_list() {
    const int line = peek().line;
    std::vector<ExprPtr> items;
    bool comma = false;
    do {
      if (is_kw("in")) break;
      items.push_back(parse_arith());  // stops before 'in'
      check_target(*items.back());
      if (is_op(",")) comma = true;
    } while (accept_op(","));
    if (items.size() == 1 && !comma) return std::move(items[0]);
    auto t = node(EK::TupleDisp, line);
    t->kids = std::move(items);
    return t;
  }

  // ---- expressions ----

  ExprPtr parse_testlist_star() { return parse_testlist(); }

  ExprPtr parse_testlist() {
    const int line = peek().line;
    auto first = parse_test();
    if (!is_op(",")) return first;
    auto t = node(EK::TupleDisp, line);
    t->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (ends_testlist()) break;
      t->kids.push_back(parse_test());
    }
    return t;
  }

  bool ends_testlist() const {
    const auto& tk = peek();
    if (tk.kind == Tok::Newline || tk.kind == Tok::End) return true;
    return tk.kind == Tok::Op && (tk.text == "=" || tk.text == ")" || tk.text == "]" || tk.text == "}" ||
                                  tk.text == ";" || tk.text == ":");
  }

  ExprPtr parse_namedexpr() {
    if (peek().kind == Tok::Name && is_op(":=", 1)) syntax_error("':=' is not supported", peek().line);
    return parse_test();
  }

  ExprPtr parse_test() {
    if (is_kw("lambda")) syntax_error("lambda is not supported in the sandbox", peek().line);
    const int line = peek().line;
    auto cond_true = parse_or();
    if (is_kw("if")) {
      ++pos_;
      auto test = parse_or();
      expect_kw("else");
      auto e = node(EK::IfExp, line);
      e->kids.push_back(std::move(test));
      e->kids.push_back(std::move(cond_true));
      e->kids.push_back(parse_test());
      return e;
    }
    return cond_true;
  }

  ExprPtr parse_or() {
    auto left = parse_and();
    while (is_kw("or")) {
      const int line = peek().line;
      ++pos_;
      auto e = node(EK::BoolOp, line);
      e->name = "or";
      e->kids.push_back(std::move(left));
      e->kids.push_back(parse_and());
      left = std::move(e);
    }
    return left;
  }

  ExprPtr parse_and() {
    auto left = parse_not();
    while (is_kw("and")) {
      const int line = peek().line;
      ++pos_;
      auto e = node(EK::BoolOp, line);
      e->name = "and";
      e->kids.push_back(std::move(left));
      e->kids.push_back(parse_not());
      left = std::move(e);
    }
    return left;
  }

  ExprPtr parse_not() {
    if (is_kw("not")) {
      const int line = peek().line;
      ++pos_;
      auto e = node(EK::Not, line);
      e->kids.push_back(parse_not());
      return e;
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    const int line = peek().line;
    auto first = parse_arith();
    std::vector<std::string> ops;
    std::vector<ExprPtr> rest;
    for (;;) {
      std::string op;
      const auto& tk = peek();
      if (tk.kind == Tok::Op && (tk.text == "<" || tk.text == ">" || tk.text == "==" || tk.text == ">=" ||
                                 tk.text == "<=" || tk.text == "!=")) {
        op = tk.text;
        ++pos_;
      } else if (is_kw("in")) {
        op = "in";
        ++pos_;
      } else if (is_kw("not") && is_kw("in", 1)) {
        op = "not in";
        pos_ += 2;
      } else if (is_kw("is")) {
        ++pos_;
        op = accept_kw("not") ? "is not" : "is";
      } else {
        break;
      }
      ops.push_back(op);
      rest.push_back(parse_arith());
    }
    if (ops.empty()) return first;
    auto e = node(EK::Compare, line);
    e->kids.push_back(std::move(first));
    for (auto& r : rest) e->kids.push_back(std::move(r));
    e->ops = std::move(ops);
    return e;
  }

  ExprPtr binary(const std::string& op, ExprPtr l, ExprPtr r, int line) {
    auto e = node(EK::Binary, line);
    e->name = op;
    e->kids.push_back(std::move(l));
    e->kids.push_back(std::move(r));
    return e;
  }

  ExprPtr parse_arith() {
    auto left = parse_term();
    while (is_op("+") || is_op("-")) {
      const int line = peek().line;
      const std::string op = t_[pos_++].text;
      left = binary(op, std::move(left), parse_term(), line);
    }
    if (peek().kind == Tok::Op && (peek().text == "|" || peek().text == "&" || peek().text == "^" ||
                                   peek().text == "<<" || peek().text == ">>" || peek().text == "@"))
      syntax_error("operator '" + peek().text + "' is not supported", peek().line);
    return left;
  }

  ExprPtr parse_term() {
    auto left = parse_factor();
    while (is_op("*") || is_op("/") || is_op("//") || is_op("%")) {
      const int line = peek().line;
      const std::string op = t_[pos_++].text;
      left = binary(op, std::move(left), parse_factor(), line);
    }
    return left;
  }

  ExprPtr parse_factor() {
    if (is_op("-") || is_op("+")) {
      const int line = peek().line;
      auto e = node(EK::Unary, line);
      e->name = t_[pos_++].text;
      e->kids.push_back(parse_factor());
      return e;
    }
    if (is_op("~")) syntax_error("operator '~' is not supported", peek().line);
    return parse_power();
  }

  ExprPtr parse_power() {
    auto base = parse_primary();
    if (is_op("**")) {
      const int line = peek().line;
      ++pos_;
      return binary("**", std::move(base), parse_factor(), line);
    }
    return base;
  }

  ExprPtr parse_primary() {
    auto e = parse_atom();
    for (;;) {
      const int line = peek().line;
      if (accept_op("(")) {
        auto call = node(EK::Call, line);
        call->kids.push_back(std::move(e));
        parse_call_args(*call);
        e = std::move(call);
      } else if (accept_op("[")) {
        auto sub = node(EK::Subscript, line);
        sub->kids.push_back(std::move(e));
        sub->kids.push_back(parse_subscript());
        expect_op("]");
        e = std::move(sub);
      } else if (accept_op(".")) {
        auto attr = node(EK::Attribute, line);
        attr->name = expect_name();
        attr->kids.push_back(std::move(e));
        e = std::move(attr);
      } else {
        return e;
      }
    }
  }

  void parse_call_args(Expr& call) {
    while (!is_op(")")) {
      if (is_op("*") || is_op("**")) syntax_error("argument unpacking is not supported", peek().line);
      if (peek().kind == Tok::Name && is_op("=", 1)) {
        call.ops.push_back(t_[pos_].text);
        pos_ += 2;
        call.kw.push_back(parse_test());
      } else {
        if (!call.kw.empty()) syntax_error("positional argument follows keyword argument", peek().line);
        auto arg = parse_test();
        if (is_kw("for")) arg = parse_comprehension(std::move(arg), EK::ListComp);
        call.kids.push_back(std::move(arg));
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
  }

  ExprPtr parse_subscript() {
    const int line = peek().line;
    ExprPtr lo, hi, step;
    if (!is_op(":")) {
      lo = parse_test();
      if (!is_op(":")) {
        if (is_op(",")) {
          auto t = node(EK::TupleDisp, line);
          t->kids.push_back(std::move(lo));
          while (accept_op(",") && !is_op("]")) t->kids.push_back(parse_test());
          return t;
        }
        return lo;
      }
    }
    expect_op(":");
    if (!is_op("]") && !is_op(":")) hi = parse_test();
    if (accept_op(":") && !is_op("]")) step = parse_test();
    auto s = node(EK::Slice, line);
    s->kids.push_back(std::move(lo));
    s->kids.push_back(std::move(hi));
    s->kids.push_back(std::move(step));
    return s;
  }

  ExprPtr parse_comprehension(ExprPtr elem, EK kind) {
    auto e = node(kind, elem->line);
    e->kids.push_back(std::move(elem));
    while (accept_kw("for")) {
      Comprehension c;
      c.target = parse_target_list();
      expect_kw("in");
      c.iter = parse_or();
      while (is_kw("if")) {
        ++pos_;
        c.conds.push_back(parse_or());
      }
      e->comps.push_back(std::move(c));
    }
    return e;
  }

  ExprPtr parse_atom() {
    const auto& tk = peek();
    const int line = tk.line;
    if (tk.kind == Tok::Number) {
      ++pos_;
      auto e = node(EK::Const, line);
      e->constant = number_literal(tk.text, line);
      return e;
    }
    if (tk.kind == Tok::String) {
      auto e = node(EK::Const, line);
      std::string plain;
      std::vector<FPart> parts;
      bool any_f = false;
      while (peek().kind == Tok::String) {
        const auto& s = t_[pos_++];
        if (s.fstring) {
          any_f = true;
          parse_fstring(s.text, s.line, parts);
        } else {
          parts.push_back({s.text, nullptr, "", 0});
        }
      }
      if (!any_f) {
        for (auto& p : parts) plain += p.literal;
        e->constant = Value(plain);
        return e;
      }
      e->kind = EK::FString;
      e->parts = std::move(parts);
      return e;
    }
    if (tk.kind == Tok::Name) {
      if (tk.text == "None" || tk.text == "True" || tk.text == "False") {
        ++pos_;
        auto e = node(EK::Const, line);
        e->constant = tk.text == "None" ? Value(NoneType{}) : Value(tk.text == "True");
        return e;
      }
      if (keywords().count(tk.text)) syntax_error("invalid syntax near '" + tk.text + "'", line);
      ++pos_;
      auto e = node(EK::Name, line);
      e->name = tk.text;
      return e;
    }
    if (accept_op("(")) {
      if (accept_op(")")) {
        auto t = node(EK::TupleDisp, line);
        return t;
      }
      auto first = parse_test();
      if (is_kw("for")) {
        auto comp = parse_comprehension(std::move(first), EK::ListComp);
        expect_op(")");
        return comp;
      }
      if (accept_op(")")) return first;
      auto t = node(EK::TupleDisp, line);
      t->kids.push_back(std::move(first));
      while (accept_op(",")) {
        if (is_op(")")) break;
        t->kids.push_back(parse_test());
      }
      expect_op(")");
      return t;
    }
    if (accept_op("[")) {
      auto l = node(EK::ListDisp, line);
      if (accept_op("]")) return l;
      auto first = parse_test();
      if (is_kw("for")) {
        auto comp = parse_comprehension(std::move(first), EK::ListComp);
        expect_op("]");
        return comp;
      }
      l->kids.push_back(std::move(first));
      while (accept_op(",")) {
        if (is_op("]")) break;
        l->kids.push_back(parse_test());
      }
      expect_op("]");
      return l;
    }
    if (accept_op("{")) {
      auto d = node(EK::DictDisp, line);
      while (!is_op("}")) {
        d->kids.push_back(parse_test());
        if (!accept_op(":")) syntax_error("set displays are not supported", line);
        d->kids.push_back(parse_test());
        if (is_kw("for")) syntax_error("dict comprehensions are not supported", line);
        if (!accept_op(",")) break;
      }
      expect_op("}");
      return d;
    }
    if (tk.kind == Tok::End || tk.kind == Tok::Newline) syntax_error("unexpected end of input", line);
    syntax_error("invalid syntax near '" + tk.text + "'", line);
  }

  static Value number_literal(std::string text, int line) {
    std::string clean;
    for (char c : text)
      if (c != '_') clean += c;
    if (clean.size() > 1 && clean[0] == '0' && std::string("xXoObB").find(clean[1]) != std::string::npos) {
      const int base = (clean[1] == 'x' || clean[1] == 'X') ? 16 : (clean[1] == 'o' || clean[1] == 'O') ? 8 : 2;
      Int v = 0;
      for (std::size_t i = 2; i < clean.size(); ++i) {
        const int d = std::isdigit(static_cast<unsigned char>(clean[i])) ? clean[i] - '0'
                                                                         : std::tolower(clean[i]) - 'a' + 10;
        if (d >= base) syntax_error("invalid digit in literal", line);
        v = int_add(int_mul(v, base), d);
      }
      return Value(v);
    }
    if (clean.find_first_of(".eE") != std::string::npos) return Value(std::strtod(clean.c_str(), nullptr));
    if (clean.size() > 1 && clean[0] == '0' && clean.find_first_not_of('0') != std::string::npos)
      syntax_error("leading zeros in decimal integer literals are not permitted", line);
    Int v = 0;
    for (char c : clean) v = int_add(int_mul(v, 10), c - '0');
    return Value(v);
  }

  static void parse_fstring(const std::string& body, int line, std::vector<FPart>& parts) {
    std::string lit;
    std::size_t i = 0;
    while (i < body.size()) {
      const char c = body[i];
      if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
        lit += '{';
        i += 2;
        continue;
      }
      if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
        lit += '}';
        i += 2;
        continue;
      }
      if (c == '}') syntax_error("f-string: single '}' is not allowed", line);
      if (c != '{') {
        lit += c;
        ++i;
        continue;
      }
      if (!lit.empty()) {
        parts.push_back({lit, nullptr, "", 0});
        lit.clear();
      }
      // Find the end of the replacement field, respecting nesting and strings.
      std::size_t j = i + 1;
      int nest = 0;
      char in_str = 0;
      std::size_t expr_end = std::string::npos, spec_start = std::string::npos;
      char conv = 0;
      for (; j < body.size(); ++j) {
        const char d = body[j];
        if (in_str) {
          if (d == in_str) in_str = 0;
          continue;
        }
        if (d == '\'' || d == '"') {
          in_str = d;
        } else if (d == '(' || d == '[' || d == '{') {
          ++nest;
        } else if ((d == ')' || d == ']' || d == '}') && nest > 0) {
          --nest;
        } else if (nest == 0 && d == '!' && j + 1 < body.size() && body[j + 1] != '=' && expr_end == std::string::npos) {
          expr_end = j;
          conv = body[j + 1];
          ++j;
        } else if (nest == 0 && d == ':' && spec_start == std::string::npos) {
          if (expr_end == std::string::npos) expr_end = j;
          spec_start = j + 1;
        } else if (nest == 0 && d == '}') {
          break;
        }
      }
      if (j >= body.size()) syntax_error("f-string: expecting '}'", line);
      if (expr_end == std::string::npos) expr_end = j;
      std::string expr_src = body.substr(i + 1, expr_end - i - 1);
      bool self_doc = false;
      {
        auto k = expr_src.find_last_not_of(' ');
        if (k != std::string::npos && expr_src[k] == '=' && (k == 0 || std::string("=!<>").find(expr_src[k - 1]) == std::string::npos)) {
          self_doc = true;
          parts.push_back({expr_src, nullptr, "", 0});
          expr_src = expr_src.substr(0, k);
        }
      }
      FPart part;
      Parser sub(tokenize(expr_src));
      part.expr = sub.parse_standalone_expr();
      part.conversion = conv ? conv : (self_doc && spec_start == std::string::npos ? 'r' : 0);
      if (spec_start != std::string::npos) part.spec = body.substr(spec_start, j - spec_start);
      parts.push_back(std::move(part));
      i = j + 1;
    }
    if (!lit.empty()) parts.push_back({lit, nullptr, "", 0});
  }
};

inline Program parse(const std::string& src) { return Parser(tokenize(src)).parse_program(); }

}  // namespace pcollab::minipy
