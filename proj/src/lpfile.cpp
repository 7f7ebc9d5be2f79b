#include "scpv/lpfile.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace scpv {

namespace {

constexpr double kLpInf = 1e30;
constexpr const char* kNameSpecials = "!\"#$%&()/,.;?@_`'{}|~";

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || std::strchr(kNameSpecials, c) != nullptr;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string signed_term(double c, const std::string& name) {
  return (c < 0 ? " - " : " + ") + num(std::abs(c)) + " " + name;
}

std::optional<VarRole> role_from(const std::string& s) {
  for (int r = 0; r <= static_cast<int>(VarRole::Comparator); ++r)
    if (role_name(static_cast<VarRole>(r)) == s) return static_cast<VarRole>(r);
  return std::nullopt;
}

class Writer {
 public:
  explicit Writer(const VerificationProgram& p) : p_(p) {
    std::set<std::string> used;
    names_.reserve(p.vars.size());
    for (int i = 0; i < p.num_vars(); ++i) {
      std::string n = lp_name(p.vars[i].name);
      if (used.count(n)) n += "#" + std::to_string(i);
      used.insert(n);
      names_.push_back(n);
    }
  }

  std::string str() {
    if (p_.vars.empty()) throw EncodeError("cannot write an LP file without variables");
    o_ << "\\ verification program: mixed-integer bilinear maximization\n";
    o_ << "\\ dual_cap " << num(p_.dual_cap) << "\n";
    for (int i = 0; i < p_.num_vars(); ++i)
      o_ << "\\ var " << names_[i] << " " << role_name(p_.vars[i].role)
         << (p_.vars[i].metric ? " metric" : "") << "\n";
    std::vector<std::pair<double, double>> ms;
    for (size_t k = 0; k < p_.implications.size(); ++k) {
      const auto& imp = p_.implications[k];
      ms.push_back(big_m(imp, p_.lower(), p_.upper()));
      o_ << "\\ implication " << k << " " << names_[imp.binary] << " " << imp.value << " "
         << num(ms.back().first) << " " << num(ms.back().second) << " " << lp_name(imp.row.name)
         << "\n";
    }

    o_ << "Maximize\n obj:";
    terms(p_.objective);
    if (p_.objective.empty()) o_ << " + 0 " << names_[0];
    if (p_.objective_constant != 0.0)
      o_ << (p_.objective_constant < 0 ? " - " : " + ") << num(std::abs(p_.objective_constant));
    o_ << "\nSubject To\n";

    for (size_t r = 0; r < p_.rows.size(); ++r)
      ranged("R" + std::to_string(r) + "_" + lp_name(p_.rows[r].name), p_.rows[r].terms,
             p_.rows[r].lo, p_.rows[r].hi);

    for (size_t k = 0; k < p_.products.size(); ++k) {
      const auto& pd = p_.products[k];
      o_ << " " << (pd.complementarity ? "C" : "P") << k << "_: " << names_[pd.w] << " + [ - ";
      if (pd.i == pd.j)
        o_ << names_[pd.i] << " ^ 2";
      else
        o_ << names_[pd.i] << " * " << names_[pd.j];
      o_ << " ] = 0\n";
    }

    for (size_t k = 0; k < p_.implications.size(); ++k) {
      const auto& imp = p_.implications[k];
      const auto [mlo, mhi] = ms[k];
      const std::string base = "I" + std::to_string(k);
      // value 1: a'v >= lo - M (1 - b); value 0: a'v >= lo - M b. Same for the hi side.
      if (std::isfinite(imp.row.lo)) {
        auto t = imp.row.terms;
        t.emplace_back(imp.binary, imp.value == 1 ? -mlo : mlo);
        side(base + "~lo", t, ">=", imp.value == 1 ? imp.row.lo - mlo : imp.row.lo);
      }
      if (std::isfinite(imp.row.hi)) {
        auto t = imp.row.terms;
        t.emplace_back(imp.binary, imp.value == 1 ? mhi : -mhi);
        side(base + "~hi", t, "<=", imp.value == 1 ? imp.row.hi + mhi : imp.row.hi);
      }
    }

    o_ << "Bounds\n";
    for (int i = 0; i < p_.num_vars(); ++i) {
      const auto& v = p_.vars[i];
      const std::string& n = names_[i];
      if (!std::isfinite(v.lo) && !std::isfinite(v.hi))
        o_ << " " << n << " free\n";
      else if (v.lo == v.hi)
        o_ << " " << n << " = " << num(v.lo) << "\n";
      else
        o_ << " " << (std::isfinite(v.lo) ? num(v.lo) : "-inf") << " <= " << n << " <= "
           << (std::isfinite(v.hi) ? num(v.hi) : "+inf") << "\n";
    }
    const auto bins = p_.binaries();
    if (!bins.empty()) {
      o_ << "Binaries\n";
      for (size_t k = 0; k < bins.size(); ++k)
        o_ << (k % 8 == 0 ? (k ? "\n " : " ") : " ") << names_[bins[k]];
      o_ << "\n";
    }
    o_ << "End\n";
    return o_.str();
  }

 private:
  void terms(const std::vector<std::pair<int, double>>& t) {
    for (size_t k = 0; k < t.size(); ++k) {
      if (k && k % 8 == 0) o_ << "\n  ";
      o_ << signed_term(t[k].second, names_[t[k].first]);
    }
  }

  void side(const std::string& name, const std::vector<std::pair<int, double>>& t,
            const char* op, double rhs) {
    o_ << " " << name << ":";
    terms(t);
    if (t.empty()) o_ << " + 0 " << names_[0];
    o_ << " " << op << " " << num(rhs) << "\n";
  }

  void ranged(const std::string& name, const std::vector<std::pair<int, double>>& t, double lo,
              double hi) {
    const bool flo = std::isfinite(lo), fhi = std::isfinite(hi);
    if (flo && fhi && lo == hi)
      side(name, t, "=", lo);
    else if (flo && fhi) {
      side(name + "~lo", t, ">=", lo);
      side(name + "~hi", t, "<=", hi);
    } else if (flo)
      side(name, t, ">=", lo);
    else if (fhi)
      side(name, t, "<=", hi);
    else
      side(name, t, ">=", -kLpInf);
  }

  const VerificationProgram& p_;
  std::vector<std::string> names_;
  std::ostringstream o_;
};

// ---- reader ----

enum class Tok { Name, Number, Op, Colon, Plus, Minus, Star, Caret, LBracket, RBracket };

struct Token {
  Tok kind;
  std::string text;
  double value = 0.0;
  bool line_start = false;
  int line = 0;
};

std::string lower_case(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_inf_word(const std::string& s) {
  const auto l = lower_case(s);
  return l == "inf" || l == "infinity";
}

[[noreturn]] void fail(const Token& t, const std::string& what) {
  throw LPParseError("line " + std::to_string(t.line) + ": " + what + " near '" + t.text + "'");
}

std::vector<Token> tokenize(const std::string& text, std::vector<std::string>& comments) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1;
  bool at_start = true;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      at_start = true;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '\\') {
      const size_t e = text.find('\n', i);
      comments.push_back(text.substr(i + 1, e == std::string::npos ? std::string::npos : e - i - 1));
      i = e == std::string::npos ? text.size() : e;
      continue;
    }
    Token t{Tok::Op, "", 0.0, at_start, line};
    at_start = false;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      char* end = nullptr;
      t.kind = Tok::Number;
      t.value = std::strtod(text.c_str() + i, &end);
      const size_t n = static_cast<size_t>(end - (text.c_str() + i));
      t.text = text.substr(i, n);
      i += n;
    } else if (c == '<' || c == '>' || c == '=') {
      t.kind = Tok::Op;
      size_t n = 1;
      if (i + 1 < text.size() && (text[i + 1] == '=' || text[i + 1] == '<' || text[i + 1] == '>'))
        n = 2;
      const std::string raw = text.substr(i, n);
      t.text = (raw == "<" || raw == "<=" || raw == "=<") ? "<="
               : (raw == ">" || raw == ">=" || raw == "=>") ? ">="
               : "=";
      if (raw != "=" && t.text == "=") fail(t, "bad comparison operator");
      i += n;
    } else if (c == ':') {
      t.kind = Tok::Colon, t.text = ":", ++i;
    } else if (c == '+') {
      t.kind = Tok::Plus, t.text = "+", ++i;
    } else if (c == '-') {
      t.kind = Tok::Minus, t.text = "-", ++i;
    } else if (c == '*') {
      t.kind = Tok::Star, t.text = "*", ++i;
    } else if (c == '^') {
      t.kind = Tok::Caret, t.text = "^", ++i;
    } else if (c == '[') {
      t.kind = Tok::LBracket, t.text = "[", ++i;
    } else if (c == ']') {
      t.kind = Tok::RBracket, t.text = "]", ++i;
    } else if (name_char(c)) {
      size_t e = i;
      while (e < text.size() && name_char(text[e])) ++e;
      t.kind = Tok::Name;
      t.text = text.substr(i, e - i);
      i = e;
    } else {
      t.text = std::string(1, c);
      fail(t, "unexpected character");
    }
    out.push_back(std::move(t));
  }
  return out;
}

enum class Section { None, Objective, Constraints, Bounds, Binaries, Generals, End };

struct QuadTerm {
  std::string a, b;
  double coef;
};

struct ParsedRow {
  std::string name;
  std::vector<std::pair<std::string, double>> lin;
  std::vector<QuadTerm> quad;
  std::string op;
  double rhs = 0.0;
};

class Reader {
 public:
  explicit Reader(const std::string& text) {
    toks_ = tokenize(text, comments_);
  }

  VerificationProgram run() {
    split_sections();
    parse_objective();
    parse_constraints();
    parse_bounds();
    parse_binaries();
    read_comments();
    return build();
  }

 private:
  struct Span {
    size_t begin, end;
  };

  void split_sections() {
    Section cur = Section::None;
    size_t start = 0;
    auto close = [&](size_t at) {
      if (cur != Section::None) spans_[cur].push_back({start, at});
    };
    for (size_t i = 0; i < toks_.size(); ++i) {
      const Token& t = toks_[i];
      if (!t.line_start || t.kind != Tok::Name) continue;
      const std::string w = lower_case(t.text);
      std::optional<Section> s;
      size_t skip = 1;
      if (w == "maximize" || w == "maximise" || w == "maximum" || w == "max") {
        s = Section::Objective;
        maximize_ = true;
      } else if (w == "minimize" || w == "minimise" || w == "minimum" || w == "min") {
        s = Section::Objective;
        maximize_ = false;
      } else if (w == "subject" && i + 1 < toks_.size() && lower_case(toks_[i + 1].text) == "to") {
        s = Section::Constraints;
        skip = 2;
      } else if (w == "such" && i + 1 < toks_.size() && lower_case(toks_[i + 1].text) == "that") {
        s = Section::Constraints;
        skip = 2;
      } else if (w == "st" || w == "s.t." || w == "st.") {
        s = Section::Constraints;
      } else if (w == "bounds" || w == "bound") {
        s = Section::Bounds;
      } else if (w == "binaries" || w == "binary" || w == "bin") {
        s = Section::Binaries;
      } else if (w == "generals" || w == "general" || w == "gen") {
        s = Section::Generals;
      } else if (w == "end") {
        s = Section::End;
      }
      if (!s) continue;
      close(i);
      cur = *s;
      start = i + skip;
      i += skip - 1;
      if (cur == Section::End) break;
    }
    if (cur != Section::End) throw LPParseError("missing End");
    if (spans_[Section::Objective].size() != 1) throw LPParseError("expected one objective section");
    if (!spans_[Section::Generals].empty())
      throw LPParseError("general integer variables are not supported");
  }

  void see(const std::string& n) {
    if (seen_.insert(n).second) order_.push_back(n);
  }

  bool at(size_t i, size_t end, Tok k) const { return i < end && toks_[i].kind == k; }

  // Linear and bracketed quadratic terms up to a comparison operator or `end`.
  void parse_expr(size_t& i, size_t end, ParsedRow& r, double& constant) {
    bool first = true;
    while (i < end && toks_[i].kind != Tok::Op) {
      if (!first && !at(i, end, Tok::Plus) && !at(i, end, Tok::Minus) && !at(i, end, Tok::LBracket))
        break;
      double sign = 1.0;
      while (at(i, end, Tok::Plus) || at(i, end, Tok::Minus)) {
        if (toks_[i].kind == Tok::Minus) sign = -sign;
        ++i;
      }
      if (i >= end) fail(toks_[end - 1], "dangling sign");
      if (toks_[i].kind == Tok::LBracket) {
        ++i;
        parse_quad(i, end, r, sign);
        first = false;
        continue;
      }
      double coef = 1.0;
      bool have_num = false;
      if (toks_[i].kind == Tok::Number) {
        coef = toks_[i].value;
        have_num = true;
        ++i;
      } else if (toks_[i].kind == Tok::Name && is_inf_word(toks_[i].text)) {
        fail(toks_[i], "infinite coefficient");
      }
      if (at(i, end, Tok::Name) && !(i + 1 < end && toks_[i + 1].kind == Tok::Colon)) {
        see(toks_[i].text);
        r.lin.emplace_back(toks_[i].text, sign * coef);
        ++i;
      } else if (have_num) {
        constant += sign * coef;
      } else {
        fail(toks_[std::min(i, end - 1)], "expected a term");
      }
      first = false;
    }
  }

  void parse_quad(size_t& i, size_t end, ParsedRow& r, double outer) {
    bool first = true;
    while (i < end && toks_[i].kind != Tok::RBracket) {
      double sign = outer;
      if (!first && !at(i, end, Tok::Plus) && !at(i, end, Tok::Minus)) fail(toks_[i], "expected sign");
      while (at(i, end, Tok::Plus) || at(i, end, Tok::Minus)) {
        if (toks_[i].kind == Tok::Minus) sign = -sign;
        ++i;
      }
      double coef = 1.0;
      if (at(i, end, Tok::Number)) coef = toks_[i++].value;
      if (!at(i, end, Tok::Name)) fail(toks_[std::min(i, end - 1)], "expected a variable");
      const std::string a = toks_[i++].text;
      see(a);
      if (at(i, end, Tok::Caret)) {
        ++i;
        if (!at(i, end, Tok::Number) || toks_[i].value != 2.0) fail(toks_[std::min(i, end - 1)], "only squares allowed");
        ++i;
        r.quad.push_back({a, a, sign * coef});
      } else if (at(i, end, Tok::Star)) {
        ++i;
        if (!at(i, end, Tok::Name)) fail(toks_[std::min(i, end - 1)], "expected a variable");
        const std::string b = toks_[i++].text;
        see(b);
        r.quad.push_back({a, b, sign * coef});
      } else {
        fail(toks_[std::min(i, end - 1)], "expected '*' or '^'");
      }
      first = false;
    }
    if (!at(i, end, Tok::RBracket)) fail(toks_[end - 1], "unclosed '['");
    ++i;
  }

  void parse_objective() {
    const Span s = spans_[Section::Objective][0];
    size_t i = s.begin;
    if (i + 1 < s.end && toks_[i].kind == Tok::Name && toks_[i + 1].kind == Tok::Colon) i += 2;
    ParsedRow r;
    double c = 0.0;
    parse_expr(i, s.end, r, c);
    if (i != s.end) fail(toks_[i], "unexpected token in objective");
    if (!r.quad.empty()) throw LPParseError("quadratic objective not supported");
    objective_ = std::move(r.lin);
    objective_constant_ = c;
  }

  void parse_constraints() {
    for (const Span& s : spans_[Section::Constraints]) {
      size_t i = s.begin;
      int unnamed = 0;
      while (i < s.end) {
        ParsedRow r;
        if (i + 1 < s.end && toks_[i].kind == Tok::Name && toks_[i + 1].kind == Tok::Colon) {
          r.name = toks_[i].text;
          i += 2;
        } else {
          r.name = "c" + std::to_string(++unnamed);
        }
        double c = 0.0;
        parse_expr(i, s.end, r, c);
        if (!at(i, s.end, Tok::Op)) fail(toks_[std::min(i, s.end - 1)], "expected comparison");
        r.op = toks_[i++].text;
        r.rhs = signed_number(i, s.end) - c;
        rows_.push_back(std::move(r));
      }
    }
  }

  double signed_number(size_t& i, size_t end) {
    double sign = 1.0;
    while (at(i, end, Tok::Plus) || at(i, end, Tok::Minus)) {
      if (toks_[i].kind == Tok::Minus) sign = -sign;
      ++i;
    }
    if (at(i, end, Tok::Number)) return sign * toks_[i++].value;
    if (at(i, end, Tok::Name) && is_inf_word(toks_[i].text)) {
      ++i;
      return sign * kInf;
    }
    fail(toks_[std::min(i, end - 1)], "expected a number");
  }

  bool number_ahead(size_t i, size_t end) const {
    while (at(i, end, Tok::Plus) || at(i, end, Tok::Minus)) ++i;
    return at(i, end, Tok::Number) || (at(i, end, Tok::Name) && is_inf_word(toks_[i].text));
  }

  void set_bound(const std::string& n, const std::string& op, double v, bool var_on_left) {
    auto& b = bounds_[n];
    std::string o = op;
    if (!var_on_left && o != "=") o = o == "<=" ? ">=" : "<=";
    if (o == "=") {
      b.first = b.second = v;
    } else if (o == "<=") {
      b.second = v;
    } else {
      b.first = v;
    }
  }

  void parse_bounds() {
    for (const Span& s : spans_[Section::Bounds]) {
      size_t i = s.begin;
      while (i < s.end) {
        if (number_ahead(i, s.end)) {
          const double v = signed_number(i, s.end);
          if (!at(i, s.end, Tok::Op)) fail(toks_[std::min(i, s.end - 1)], "expected comparison");
          const std::string op = toks_[i++].text;
          if (!at(i, s.end, Tok::Name)) fail(toks_[std::min(i, s.end - 1)], "expected a variable");
          const std::string n = toks_[i++].text;
          bound_var(n);
          set_bound(n, op, v, false);
          if (at(i, s.end, Tok::Op)) {
            const std::string op2 = toks_[i++].text;
            set_bound(n, op2, signed_number(i, s.end), true);
          }
        } else if (at(i, s.end, Tok::Name)) {
          const std::string n = toks_[i++].text;
          bound_var(n);
          if (at(i, s.end, Tok::Name) && lower_case(toks_[i].text) == "free") {
            ++i;
            bounds_[n] = {-kInf, kInf};
          } else if (at(i, s.end, Tok::Op)) {
            const std::string op = toks_[i++].text;
            set_bound(n, op, signed_number(i, s.end), true);
          } else {
            fail(toks_[std::min(i, s.end - 1)], "bad bound");
          }
        } else {
          fail(toks_[i], "bad bound");
        }
      }
    }
  }

  void bound_var(const std::string& n) {
    if (!bounds_.count(n)) bounds_[n] = {0.0, kInf};
    if (bound_seen_.insert(n).second) bound_order_.push_back(n);
  }

  void parse_binaries() {
    for (const Span& s : spans_[Section::Binaries])
      for (size_t i = s.begin; i < s.end; ++i) {
        if (toks_[i].kind != Tok::Name) fail(toks_[i], "expected a variable");
        see(toks_[i].text);
        binaries_.insert(toks_[i].text);
      }
  }

  struct ImpMeta {
    std::string binary;
    int value;
    double mlo, mhi;
    std::string name;
  };

  void read_comments() {
    for (const auto& c : comments_) {
      std::istringstream in(c);
      std::string kw;
      in >> kw;
      if (kw == "dual_cap") {
        in >> dual_cap_;
      } else if (kw == "var") {
        std::string n, role, flag;
        in >> n >> role >> flag;
        if (auto r = role_from(role)) roles_[n] = *r;
        if (flag == "metric") metric_.insert(n);
      } else if (kw == "implication") {
        int k;
        ImpMeta m;
        std::string mlo, mhi;
        in >> k >> m.binary >> m.value >> mlo >> mhi;
        std::getline(in >> std::ws, m.name);
        m.mlo = std::strtod(mlo.c_str(), nullptr);
        m.mhi = std::strtod(mhi.c_str(), nullptr);
        if (!in && !in.eof()) throw LPParseError("bad implication comment: " + c);
        imps_[k] = m;
      }
    }
  }

  static double rhs_value(double v) {
    if (v <= -kLpInf) return -kInf;
    if (v >= kLpInf) return kInf;
    return v;
  }

  VerificationProgram build() {
    VerificationProgram p;
    p.dual_cap = dual_cap_;
    std::vector<std::string> names = bound_order_;
    for (const auto& n : order_)
      if (!bound_seen_.count(n)) names.push_back(n);
    for (const auto& n : names) {
      double lo = 0.0, hi = kInf;
      if (auto it = bounds_.find(n); it != bounds_.end()) std::tie(lo, hi) = it->second;
      const bool bin = binaries_.count(n) > 0;
      if (bin && !bounds_.count(n)) hi = 1.0;
      VarRole role = bin ? VarRole::Binary : VarRole::Aux;
      if (auto it = roles_.find(n); it != roles_.end()) role = it->second;
      p.metric_mode = metric_.count(n) > 0;
      try {
        p.add_var(n, lo, hi, role, bin);
      } catch (const EncodeError& e) {
        throw LPParseError(e.what());
      }
    }
    p.metric_mode = false;

    auto linear = [&](const std::vector<std::pair<std::string, double>>& lin) {
      std::map<int, double> acc;
      for (const auto& [n, c] : lin) acc[p.find_var(n)] += c;
      std::vector<std::pair<int, double>> out;
      for (const auto& [i, c] : acc)
        if (c != 0.0) out.emplace_back(i, c);
      return out;
    };
    p.objective = linear(objective_);
    p.objective_constant = objective_constant_;
    if (!maximize_) {
      for (auto& t : p.objective) t.second = -t.second;
      p.objective_constant = -p.objective_constant;
    }

    std::map<int, Implication> imps;
    std::map<std::string, size_t> row_by_base;
    for (const auto& r : rows_) {
      double lo = -kInf, hi = kInf;
      if (r.op == "=") lo = hi = r.rhs;
      else if (r.op == "<=") hi = rhs_value(r.rhs);
      else lo = rhs_value(r.rhs);

      if (!r.quad.empty()) {
        add_product(p, r);
        continue;
      }
      std::string base = r.name;
      const bool half = base.size() > 3 && (base.ends_with("~lo") || base.ends_with("~hi"));
      if (half) base.resize(base.size() - 3);

      if (base.size() > 1 && base[0] == 'I' &&
          base.find_first_not_of("0123456789", 1) == std::string::npos && imps_.count(std::stoi(base.substr(1)))) {
        const int k = std::stoi(base.substr(1));
        const ImpMeta& m = imps_.at(k);
        auto& imp = imps[k];
        imp.binary = p.find_var(m.binary);
        imp.value = m.value;
        imp.row.name = m.name;
        if (imp.binary < 0) throw LPParseError("implication binary " + m.binary + " not found");
        auto terms = r.lin;
        const bool lo_side = r.op == ">=";
        const double mb = lo_side ? (m.value == 1 ? -m.mlo : m.mlo) : (m.value == 1 ? m.mhi : -m.mhi);
        terms.emplace_back(m.binary, -mb);
        imp.row.terms = linear(terms);
        if (lo_side) imp.row.lo = m.value == 1 ? r.rhs + m.mlo : r.rhs;
        else imp.row.hi = m.value == 1 ? r.rhs - m.mhi : r.rhs;
        continue;
      }

      std::string row_name = base;
      if (base.size() > 1 && base[0] == 'R') {
        const size_t u = base.find('_');
        if (u != std::string::npos && u > 1 &&
            base.find_first_not_of("0123456789", 1) == u)
          row_name = base.substr(u + 1);
      }
      if (half) {
        if (auto it = row_by_base.find(base); it != row_by_base.end()) {
          auto& row = p.rows[it->second];
          if (r.op == ">=") row.lo = lo;
          else row.hi = hi;
          continue;
        }
        row_by_base[base] = p.rows.size();
      }
      LinearRow row;
      row.terms = linear(r.lin);
      row.lo = lo;
      row.hi = hi;
      row.name = row_name;
      p.rows.push_back(std::move(row));
    }
    for (auto& [k, imp] : imps) p.implications.push_back(std::move(imp));
    return p;
  }

  void add_product(VerificationProgram& p, const ParsedRow& r) {
    if (r.op != "=" || r.rhs != 0.0 || r.lin.size() != 1 || r.lin[0].second != 1.0 ||
        r.quad.size() != 1 || r.quad[0].coef != -1.0)
      throw LPParseError("row " + r.name + ": only product definitions w - a*b = 0 are supported");
    const bool comp = r.name.size() > 1 && r.name[0] == 'C' &&
                      std::isdigit(static_cast<unsigned char>(r.name[1]));
    try {
      p.register_product(p.find_var(r.lin[0].first), p.find_var(r.quad[0].a),
                         p.find_var(r.quad[0].b), comp);
    } catch (const EncodeError& e) {
      throw LPParseError(e.what());
    }
  }

  std::vector<Token> toks_;
  std::vector<std::string> comments_;
  std::map<Section, std::vector<Span>> spans_;
  bool maximize_ = true;
  std::vector<std::string> order_;
  std::set<std::string> seen_;
  std::vector<std::pair<std::string, double>> objective_;
  double objective_constant_ = 0.0;
  std::vector<ParsedRow> rows_;
  std::map<std::string, std::pair<double, double>> bounds_;
  std::vector<std::string> bound_order_;
  std::set<std::string> bound_seen_;
  std::set<std::string> binaries_;
  std::map<std::string, VarRole> roles_;
  std::set<std::string> metric_;
  std::map<int, ImpMeta> imps_;
  double dual_cap_ = 0.0;
};

}  // namespace

std::string lp_name(const std::string& name) {
  std::string out = name.empty() ? "_" : name;
  for (auto& c : out)
    if (!name_char(c)) c = '_';
  if (std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.') out = "_" + out;
  // Reserved words would be read as section keywords at the start of a line.
  static const std::set<std::string> reserved{"free", "inf", "infinity", "end", "st", "bounds", "bound",
                                              "binaries", "binary", "bin", "generals", "general",
                                              "gen", "max", "min", "maximize", "minimize",
                                              "maximum", "minimum", "subject", "such", "s.t.",
                                              "st.", "maximise", "minimise"};
  if (reserved.count(lower_case(out))) out = "_" + out;
  return out;
}

std::string to_lp(const VerificationProgram& prog) { return Writer(prog).str(); }

void write_lp(const VerificationProgram& prog, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << to_lp(prog);
  if (!f) throw std::runtime_error("write failed: " + path);
}

VerificationProgram parse_lp(const std::string& text) { return Reader(text).run(); }

VerificationProgram read_lp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_lp(ss.str());
}

}  // namespace scpv
