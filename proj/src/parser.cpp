#include "softchase/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace softchase {

namespace {

enum class Tok {
  Ident,    // lower-case initial identifier or quoted string
  Var,      // upper-case initial identifier
  Number,
  Punct,
  End,
};

struct Token {
  Tok type = Tok::End;
  std::string text;
  double number = 0.0;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  const Token& peek2() {
    if (!has_next_) {
      std::size_t save = pos_;
      int sl = line_, sc = col_;
      Token cur = tok_;
      advance();
      next_ = tok_;
      tok_ = cur;
      pos_save_ = pos_;
      line_save_ = line_;
      col_save_ = col_;
      pos_ = save;
      line_ = sl;
      col_ = sc;
      has_next_ = true;
    }
    return next_;
  }

  Token take() {
    Token t = tok_;
    if (has_next_) {
      tok_ = next_;
      pos_ = pos_save_;
      line_ = line_save_;
      col_ = col_save_;
      has_next_ = false;
    } else {
      advance();
    }
    return t;
  }

  [[noreturn]] void fail(const std::string& code, const std::string& msg,
                         const SourceSpan& span) const {
    throw ParseError({Diagnostic{code, span, msg}});
  }
  [[noreturn]] void fail(const std::string& code, const std::string& msg) const {
    fail(code, msg, tok_.span);
  }

 private:
  void advance() {
    skip_space();
    Token t;
    t.span.line = line_;
    t.span.column = col_;
    t.span.begin = pos_;
    if (pos_ >= text_.size()) {
      t.type = Tok::End;
      t.span.end = pos_;
      tok_ = t;
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        bump();
      t.text = text_.substr(start, pos_ - start);
      t.type = std::isupper(static_cast<unsigned char>(c)) ? Tok::Var : Tok::Ident;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && pos_ + 1 < text_.size() &&
                std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
              text_[pos_] == 'e' || text_[pos_] == 'E' ||
              ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
               (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
        bump();
      // A trailing '.' is the rule terminator, not part of the number.
      while (pos_ > start && text_[pos_ - 1] == '.') {
        --pos_;
        --col_;
      }
      std::string digits = text_.substr(start, pos_ - start);
      t.type = Tok::Number;
      t.number = std::strtod(digits.c_str(), nullptr);
      t.text = digits;
    } else if (c == '"') {
      bump();
      std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') bump();
      if (pos_ >= text_.size()) {
        t.span.end = pos_;
        tok_ = t;
        fail("P001", "unterminated string literal", t.span);
      }
      t.type = Tok::Ident;
      t.text = text_.substr(start, pos_ - start);
      bump();  // closing quote
    } else {
      t.type = Tok::Punct;
      auto two = text_.substr(pos_, 2);
      if (two == "::" || two == "->" || two == "<=" || two == ">=" || two == "!=" ||
          two == ":-" || two == "<-") {
        t.text = two;
        bump();
        bump();
      } else {
        t.text = std::string(1, c);
        bump();
      }
    }
    t.span.end = pos_;
    tok_ = t;
  }

  void skip_space() {
    for (;;) {
      while (pos_ < text_.size() &&
             std::isspace(static_cast<unsigned char>(text_[pos_])))
        bump();
      if (pos_ < text_.size() && text_[pos_] == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
        continue;
      }
      if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
        continue;
      }
      break;
    }
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
  Token next_;
  bool has_next_ = false;
  std::size_t pos_save_ = 0;
  int line_save_ = 1, col_save_ = 1;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_punct(const Token& t, const char* text) {
  return t.type == Tok::Punct && t.text == text;
}
bool is_kw(const Token& t, const char* kw) {
  return t.type == Tok::Ident && t.text == kw;
}

class RuleParser {
 public:
  RuleParser(Lexer& lex, Program& program) : lex_(lex), program_(program) {}

  Rule parse_rule() {
    Rule rule;
    rule.span = lex_.peek().span;
    rule.weight = parse_weight_prefix();

    std::vector<BodyLiteral> first = parse_literals();
    if (is_punct(lex_.peek(), "->")) {
      lex_.take();
      rule.body = std::move(first);
      parse_head(rule);
    } else {
      // Body-less rule: a single (weighted) head atom.
      if (first.size() != 1 || first[0].kind != BodyLiteral::Kind::Positive)
        lex_.fail("P010", "expected '->' in rule");
      rule.head.push_back(first[0].atom);
    }
    expect_punct(".");
    rule.span.end = lex_.peek().span.begin;
    finalize(rule);
    return rule;
  }

 private:
  double parse_weight_prefix() {
    const Token& t = lex_.peek();
    bool neg = false;
    if (is_punct(t, "-") &&
        (lex_.peek2().type == Tok::Number || is_kw(lex_.peek2(), "inf"))) {
      // Only a weight prefix may start a rule with '-'.
      lex_.take();
      neg = true;
    }
    const Token& v = lex_.peek();
    double w = kHardWeight;
    if (v.type == Tok::Number && is_punct(lex_.peek2(), "::")) {
      w = lex_.take().number;
      lex_.take();  // ::
    } else if (is_kw(v, "inf") && is_punct(lex_.peek2(), "::")) {
      lex_.take();
      lex_.take();
      w = kHardWeight;
    } else if (neg) {
      lex_.fail("P011", "expected weight after '-'");
    } else {
      return kHardWeight;
    }
    return neg ? -w : w;
  }

  std::vector<BodyLiteral> parse_literals() {
    std::vector<BodyLiteral> out;
    for (;;) {
      out.push_back(parse_literal());
      if (is_punct(lex_.peek(), ",")) {
        lex_.take();
        continue;
      }
      break;
    }
    return out;
  }

  BodyLiteral parse_literal() {
    const Token& t = lex_.peek();
    BodyLiteral lit;
    if (is_kw(t, "not")) {
      lex_.take();
      lit.kind = BodyLiteral::Kind::Negated;
      lit.atom = parse_atom();
      return lit;
    }
    if (t.type == Tok::Ident && is_punct(lex_.peek2(), "(")) {
      lit.kind = BodyLiteral::Kind::Positive;
      lit.atom = parse_atom();
      return lit;
    }
    if (t.type == Tok::Var && is_punct(lex_.peek2(), "=")) {
      // Could be an aggregate binding V = sum(Q); otherwise a comparison.
      Token var = lex_.take();
      lex_.take();  // '='
      const Token& rhs = lex_.peek();
      if (rhs.type == Tok::Ident &&
          (rhs.text == "sum" || rhs.text == "count" || rhs.text == "min" ||
           rhs.text == "max") &&
          is_punct(lex_.peek2(), "(")) {
        Token op = lex_.take();
        expect_punct("(");
        Token operand = lex_.take();
        if (operand.type != Tok::Var)
          lex_.fail("P012", "aggregate operand must be a variable", operand.span);
        expect_punct(")");
        lit.kind = BodyLiteral::Kind::Aggregate;
        lit.agg.result_var = var.text;
        lit.agg.operand_var = operand.text;
        lit.agg.op = op.text == "sum"     ? AggOp::Sum
                     : op.text == "count" ? AggOp::Count
                     : op.text == "min"   ? AggOp::Min
                                          : AggOp::Max;
        return lit;
      }
      // Comparison starting with "V =".
      lit.kind = BodyLiteral::Kind::Filter;
      std::vector<Comparison> chain;
      Comparison c;
      c.lhs = Expr::variable(var.text);
      c.op = CmpOp::Eq;
      c.rhs = parse_expr();
      chain.push_back(std::move(c));
      parse_chain_rest(chain);
      lit.filter.disjuncts.push_back(std::move(chain));
      return lit;
    }
    if (is_punct(t, "(")) {
      // Parenthesized, possibly disjunctive, comparison filter.
      lex_.take();
      lit.kind = BodyLiteral::Kind::Filter;
      lit.filter.disjuncts.push_back(parse_comparison_chain());
      while (is_kw(lex_.peek(), "or")) {
        lex_.take();
        lit.filter.disjuncts.push_back(parse_comparison_chain());
      }
      expect_punct(")");
      return lit;
    }
    // Plain comparison chain: 0 < S < 1, |Z - W| < 10, S > 0.5 ...
    lit.kind = BodyLiteral::Kind::Filter;
    lit.filter.disjuncts.push_back(parse_comparison_chain());
    return lit;
  }

  std::vector<Comparison> parse_comparison_chain() {
    std::vector<Comparison> chain;
    Expr first = parse_expr();
    CmpOp op = parse_cmp_op();
    Expr second = parse_expr();
    chain.push_back(Comparison{first, op, second});
    Expr prev = std::move(second);
    while (peek_cmp_op()) {
      CmpOp next_op = parse_cmp_op();
      Expr next = parse_expr();
      chain.push_back(Comparison{prev, next_op, next});
      prev = std::move(next);
    }
    return chain;
  }

  void parse_chain_rest(std::vector<Comparison>& chain) {
    Expr prev = chain.back().rhs;
    while (peek_cmp_op()) {
      CmpOp op = parse_cmp_op();
      Expr next = parse_expr();
      chain.push_back(Comparison{prev, op, next});
      prev = std::move(next);
    }
  }

  bool peek_cmp_op() {
    const Token& t = lex_.peek();
    return is_punct(t, "<") || is_punct(t, "<=") || is_punct(t, ">") ||
           is_punct(t, ">=") || is_punct(t, "=") || is_punct(t, "!=");
  }

  CmpOp parse_cmp_op() {
    Token t = lex_.take();
    if (t.text == "<") return CmpOp::Lt;
    if (t.text == "<=") return CmpOp::Le;
    if (t.text == ">") return CmpOp::Gt;
    if (t.text == ">=") return CmpOp::Ge;
    if (t.text == "=") return CmpOp::Eq;
    if (t.text == "!=") return CmpOp::Ne;
    lex_.fail("P013", "expected comparison operator", t.span);
  }

  Expr parse_expr() {
    Expr e = parse_expr_term();
    for (;;) {
      const Token& t = lex_.peek();
      if (is_punct(t, "+")) {
        lex_.take();
        e = Expr::binary(Expr::Kind::Add, std::move(e), parse_expr_term());
      } else if (is_punct(t, "-")) {
        lex_.take();
        e = Expr::binary(Expr::Kind::Sub, std::move(e), parse_expr_term());
      } else {
        return e;
      }
    }
  }

  Expr parse_expr_term() {
    const Token& t = lex_.peek();
    if (is_punct(t, "-")) {
      lex_.take();
      Token n = lex_.take();
      if (n.type != Tok::Number) lex_.fail("P014", "expected number after '-'", n.span);
      return Expr::constant(-n.number);
    }
    if (t.type == Tok::Number) return Expr::constant(lex_.take().number);
    if (t.type == Tok::Var) return Expr::variable(lex_.take().text);
    if (is_punct(t, "|")) {
      lex_.take();
      Expr inner = parse_expr();
      expect_punct("|");
      return Expr::abs(std::move(inner));
    }
    lex_.fail("P015", "expected expression");
  }

  Atom parse_atom() {
    Token name = lex_.take();
    if (name.type != Tok::Ident)
      lex_.fail("P016", "expected predicate name", name.span);
    Atom atom;
    atom.predicate = lower(name.text);
    expect_punct("(");
    if (!is_punct(lex_.peek(), ")")) {
      for (;;) {
        atom.terms.push_back(parse_term());
        if (is_punct(lex_.peek(), ",")) {
          lex_.take();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    check_arity(atom, name.span);
    return atom;
  }

  Term parse_term() {
    const Token& t = lex_.peek();
    if (t.type == Tok::Var) return Term::variable(lex_.take().text);
    if (t.type == Tok::Ident) return Term::constant(lex_.take().text);
    if (t.type == Tok::Number) return Term::number(lex_.take().number);
    if (is_punct(t, "-") && lex_.peek2().type == Tok::Number) {
      lex_.take();
      return Term::number(-lex_.take().number);
    }
    lex_.fail("P017", "expected term");
  }

  void parse_head(Rule& rule) {
    if (is_kw(lex_.peek(), "exists")) {
      lex_.take();
      for (;;) {
        Token v = lex_.take();
        if (v.type != Tok::Var)
          lex_.fail("P018", "expected existential variable", v.span);
        rule.existential_vars.push_back(v.text);
        if (is_punct(lex_.peek(), ",")) {
          lex_.take();
          continue;
        }
        break;
      }
      expect_punct(":");
    }
    for (;;) {
      rule.head.push_back(parse_atom());
      if (is_punct(lex_.peek(), ",")) {
        lex_.take();
        continue;
      }
      break;
    }
  }

  void check_arity(const Atom& atom, const SourceSpan& span) {
    auto [it, fresh] = program_.arity.emplace(atom.predicate,
                                              static_cast<int>(atom.terms.size()));
    if (!fresh && it->second != static_cast<int>(atom.terms.size()))
      lex_.fail("P019",
                "arity mismatch for predicate '" + atom.predicate + "': declared " +
                    std::to_string(it->second) + ", used with " +
                    std::to_string(atom.terms.size()),
                span);
  }

  void finalize(Rule& rule) {
    std::unordered_set<std::string> positive_vars;
    for (const Atom* a : rule.positive_body())
      for (const Term& t : a->terms)
        if (t.is_variable()) positive_vars.insert(t.var_name());

    std::string agg_result;
    int agg_count = 0;
    for (const BodyLiteral& lit : rule.body) {
      if (lit.kind == BodyLiteral::Kind::Aggregate) {
        ++agg_count;
        agg_result = lit.agg.result_var;
        if (!positive_vars.count(lit.agg.operand_var))
          lex_.fail("P020", "aggregate operand variable '" + lit.agg.operand_var +
                                "' is not bound by a positive body atom",
                    rule.span);
        if (positive_vars.count(lit.agg.result_var))
          lex_.fail("P021", "aggregate result variable '" + lit.agg.result_var +
                                "' must not occur in positive body atoms",
                    rule.span);
      }
    }
    if (agg_count > 1)
      lex_.fail("P022", "at most one aggregate binding per rule", rule.span);

    for (const BodyLiteral& lit : rule.body) {
      if (lit.kind != BodyLiteral::Kind::Filter) continue;
      for (const std::string& v : lit.filter.vars())
        if (!positive_vars.count(v) && v != agg_result)
          lex_.fail("P023",
                    "comparison variable '" + v +
                        "' is not bound by a positive body atom",
                    rule.span);
    }

    // Head-only variables are existential.
    std::unordered_set<std::string> declared(rule.existential_vars.begin(),
                                             rule.existential_vars.end());
    for (const std::string& v : rule.existential_vars)
      if (positive_vars.count(v))
        lex_.fail("P024", "existential variable '" + v + "' occurs in the body",
                  rule.span);
    for (const Atom& h : rule.head)
      for (const Term& t : h.terms)
        if (t.is_variable() && !positive_vars.count(t.var_name()) &&
            t.var_name() != agg_result && !declared.count(t.var_name())) {
          rule.existential_vars.push_back(t.var_name());
          declared.insert(t.var_name());
        }

    if (std::isnan(rule.weight))
      lex_.fail("P025", "rule weight must not be NaN", rule.span);
  }

  void expect_punct(const char* text) {
    Token t = lex_.take();
    if (!(t.type == Tok::Punct && t.text == text))
      lex_.fail("P002", std::string("expected '") + text + "', found '" + t.text + "'",
                t.span);
  }

  Lexer& lex_;
  Program& program_;
};

}  // namespace

Program parse_program(const std::string& text) {
  Program program;
  Lexer lex(text);
  int next_id = 0;
  while (lex.peek().type != Tok::End) {
    RuleParser rp(lex, program);
    Rule rule = rp.parse_rule();
    rule.id = next_id++;
    program.rules.push_back(std::move(rule));
  }
  return program;
}

// ---------------------------------------------------------------------------
// Fact files
// ---------------------------------------------------------------------------

namespace {

Instance parse_datalog_facts(const std::string& text) {
  Instance inst;
  Lexer lex(text);
  while (lex.peek().type != Tok::End) {
    Token name = lex.take();
    if (name.type != Tok::Ident)
      lex.fail("F001", "expected predicate name", name.span);
    Fact fact;
    fact.predicate = lower(name.text);
    Token open = lex.take();
    if (!is_punct(open, "(")) lex.fail("F002", "expected '('", open.span);
    if (!is_punct(lex.peek(), ")")) {
      for (;;) {
        Token t = lex.take();
        if (t.type == Tok::Ident) {
          fact.terms.push_back(Term::constant(t.text));
        } else if (t.type == Tok::Number) {
          fact.terms.push_back(Term::number(t.number));
        } else if (is_punct(t, "-") && lex.peek().type == Tok::Number) {
          fact.terms.push_back(Term::number(-lex.take().number));
        } else if (t.type == Tok::Var) {
          lex.fail("F003", "non-ground atom in fact file: variable '" + t.text + "'",
                   t.span);
        } else {
          lex.fail("F004", "expected constant", t.span);
        }
        if (is_punct(lex.peek(), ",")) {
          lex.take();
          continue;
        }
        break;
      }
    }
    Token close = lex.take();
    if (!is_punct(close, ")")) lex.fail("F002", "expected ')'", close.span);
    Token dot = lex.take();
    if (!is_punct(dot, ".")) lex.fail("F005", "expected '.'", dot.span);
    inst.insert(fact);
  }
  return inst;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (std::string& s : out) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }
  return out;
}

Instance parse_csv_facts(const std::string& text) {
  Instance inst;
  std::istringstream in(text);
  std::string line;
  std::string pred;
  int arity = -1;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string trimmed = line;
    std::size_t a = trimmed.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    trimmed = trimmed.substr(a);
    if (trimmed.empty() || trimmed[0] == '%' || trimmed[0] == '#') continue;
    std::size_t colon = trimmed.find(':');
    if (colon != std::string::npos && trimmed.find(',') == std::string::npos) {
      pred = lower(trimmed.substr(0, colon));
      arity = std::stoi(trimmed.substr(colon + 1));
      continue;
    }
    if (pred.empty())
      throw ParseError({Diagnostic{
          "F006", SourceSpan{lineno, 1, 0, 0},
          "csv fact file must start with a 'predicate:arity' header"}});
    std::vector<std::string> cols = split_csv_line(trimmed);
    if (static_cast<int>(cols.size()) != arity)
      throw ParseError({Diagnostic{"F007", SourceSpan{lineno, 1, 0, 0},
                                   "malformed row: expected " + std::to_string(arity) +
                                       " columns, found " + std::to_string(cols.size())}});
    Fact fact;
    fact.predicate = pred;
    for (const std::string& col : cols) {
      char* end = nullptr;
      double v = std::strtod(col.c_str(), &end);
      if (end && *end == '\0' && end != col.c_str())
        fact.terms.push_back(Term::number(v));
      else
        fact.terms.push_back(Term::constant(col));
    }
    inst.insert(fact);
  }
  return inst;
}

}  // namespace

Instance parse_facts(const std::string& text, FactFormat format) {
  return format == FactFormat::DatalogFacts ? parse_datalog_facts(text)
                                            : parse_csv_facts(text);
}

// ---------------------------------------------------------------------------
// Answer serialization
// ---------------------------------------------------------------------------

namespace {

bool fact_less(const Fact& a, const Fact& b) {
  if (a.predicate != b.predicate) return a.predicate < b.predicate;
  for (std::size_t i = 0; i < std::min(a.terms.size(), b.terms.size()); ++i) {
    if (a.terms[i] != b.terms[i]) return a.terms[i] < b.terms[i];
  }
  return a.terms.size() < b.terms.size();
}

std::string display_fact(const Fact& f,
                         std::unordered_map<std::uint64_t, std::size_t>& null_display) {
  std::string out = f.predicate + "(";
  for (std::size_t i = 0; i < f.terms.size(); ++i) {
    if (i) out += ",";
    const Term& t = f.terms[i];
    if (t.is_null()) {
      auto [it, fresh] = null_display.emplace(t.null_id(), null_display.size());
      (void)fresh;
      out += "_:n" + std::to_string(it->second);
    } else {
      out += t.display();
    }
  }
  out += ")";
  return out;
}

}  // namespace

std::string serialize_answer(const std::vector<std::pair<Fact, double>>& answer,
                             AnswerFormat format) {
  std::vector<std::pair<Fact, double>> sorted = answer;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return fact_less(a.first, b.first); });
  std::unordered_map<std::uint64_t, std::size_t> null_display;
  std::string out;
  const char sep = format == AnswerFormat::Tsv ? '\t' : ',';
  for (const auto& [fact, prob] : sorted) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", prob);
    out += display_fact(fact, null_display);
    out += sep;
    out += buf;
    out += "\n";
  }
  return out;
}

std::string serialize_facts(const std::vector<Fact>& facts) {
  std::vector<Fact> sorted = facts;
  std::sort(sorted.begin(), sorted.end(), fact_less);
  std::unordered_map<std::uint64_t, std::size_t> null_display;
  std::string out;
  for (const Fact& f : sorted) {
    out += display_fact(f, null_display);
    out += ".\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

ConjunctiveQuery parse_query(const std::string& text) {
  ConjunctiveQuery q;
  Lexer lex(text);
  Token name = lex.take();
  if (name.type != Tok::Ident)
    lex.fail("Q001", "expected predicate name", name.span);
  if (lex.peek().type == Tok::End) {
    q.atomic = true;
    q.predicate = lower(name.text);
    return q;
  }

  // Head atom.
  Program scratch;
  if (!is_punct(lex.peek(), "(")) lex.fail("Q002", "expected '('");
  lex.take();
  Atom head;
  head.predicate = lower(name.text);
  std::vector<Term> args;
  if (!is_punct(lex.peek(), ")")) {
    for (;;) {
      Token t = lex.take();
      if (t.type == Tok::Var)
        head.terms.push_back(Term::variable(t.text));
      else if (t.type == Tok::Ident)
        head.terms.push_back(Term::constant(t.text));
      else if (t.type == Tok::Number)
        head.terms.push_back(Term::number(t.number));
      else
        lex.fail("Q003", "expected term", t.span);
      if (is_punct(lex.peek(), ",")) {
        lex.take();
        continue;
      }
      break;
    }
  }
  Token close = lex.take();
  if (!is_punct(close, ")")) lex.fail("Q002", "expected ')'", close.span);

  if (lex.peek().type == Tok::End) {
    // Single atom: atomic iff all arguments are distinct variables.
    std::unordered_set<std::string> seen;
    bool atomic = true;
    for (const Term& t : head.terms)
      if (!t.is_variable() || !seen.insert(t.var_name()).second) atomic = false;
    if (atomic) {
      q.atomic = true;
      q.predicate = head.predicate;
      return q;
    }
    // Treat as a one-atom conjunctive query over the atom's variables.
    q.head_pred = "q";
    for (const Term& t : head.terms)
      if (t.is_variable() && std::find(q.head_vars.begin(), q.head_vars.end(),
                                       t.var_name()) == q.head_vars.end())
        q.head_vars.push_back(t.var_name());
    BodyLiteral lit;
    lit.kind = BodyLiteral::Kind::Positive;
    lit.atom = head;
    q.body.push_back(lit);
    return q;
  }

  Token arrow = lex.take();
  if (!(is_punct(arrow, ":-") || is_punct(arrow, "<-")))
    lex.fail("Q004", "expected ':-' after query head", arrow.span);
  q.head_pred = head.predicate;
  for (const Term& t : head.terms) {
    if (!t.is_variable())
      lex.fail("Q005", "query head arguments must be variables", arrow.span);
    q.head_vars.push_back(t.var_name());
  }
  // Body: positive atoms and comparison filters.
  std::string rest = text.substr(arrow.span.end);
  Program body_scratch;
  Program prog = parse_program(rest + " -> qbodyplaceholder().");
  if (prog.rules.size() != 1) lex.fail("Q006", "malformed query body");
  for (BodyLiteral& lit : prog.rules[0].body) {
    if (lit.kind == BodyLiteral::Kind::Negated ||
        lit.kind == BodyLiteral::Kind::Aggregate)
      lex.fail("Q007", "conjunctive queries allow only positive atoms and filters");
    q.body.push_back(std::move(lit));
  }
  return q;
}

}  // namespace softchase
