#include "defectlab/product_metrics.hpp"

#include "defectlab/csv.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/git.hpp"
#include "defectlab/mining.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace defectlab {

const std::vector<std::string>& product_metric_names() {
  static const std::vector<std::string> names = {
      "AvgCyclomatic", "AvgCyclomaticModified", "AvgCyclomaticStrict", "AvgEssential",
      "AvgLine", "AvgLineBlank", "AvgLineCode", "AvgLineComment", "CountClassBase",
      "CountClassCoupled", "CountClassCoupledModified", "CountClassDerived",
      "CountDeclClassMethod", "CountDeclClassVariable", "CountDeclInstanceMethod",
      "CountDeclInstanceVariable", "CountDeclMethod", "CountDeclMethodAll",
      "CountDeclMethodDefault", "CountDeclMethodPrivate", "CountDeclMethodProtected",
      "CountDeclMethodPublic", "SumEssential", "CountLine", "CountLineBlank", "CountLineCode",
      "CountLineCodeDecl", "CountLineCodeExe", "CountLineComment", "CountSemicolon", "CountStmt",
      "CountStmtDecl", "CountStmtExe", "MaxCyclomatic", "MaxCyclomaticModified",
      "MaxCyclomaticStrict", "MaxEssential", "MaxInheritanceTree", "MaxNesting",
      "PercentLackOfCohesion", "PercentLackOfCohesionModified", "RatioCommentToCode",
      "SumCyclomatic", "SumCyclomaticModified", "SumCyclomaticStrict"};
  return names;
}

const std::vector<std::string>& native_product_metric_names() {
  static const std::vector<std::string> names = [] {
    static const std::set<std::string> import_only = {
        "PercentLackOfCohesion", "PercentLackOfCohesionModified", "CountClassCoupled",
        "CountClassCoupledModified", "CountClassBase", "CountClassDerived", "MaxInheritanceTree",
        "CountDeclMethodAll", "CountLineCodeDecl", "CountLineCodeExe", "CountStmtDecl",
        "CountStmtExe", "SumEssential", "AvgEssential"};
    std::vector<std::string> out;
    for (const auto& n : product_metric_names())
      if (!import_only.count(n)) out.push_back(n);
    return out;
  }();
  return names;
}

namespace {

struct MethodCounts {
  int decisions = 0;  // if, for, while, catch, ?
  int cases = 0;
  int switches_with_cases = 0;
  int logical_ops = 0;
  int jumps = 0;  // break, continue, non-final return
  int returns = 0;
};

struct Scope {
  enum class Kind { class_body, method_body, block, expression } kind = Kind::block;
  int owner_method = -1;
  int depth_in_method = 0;
  std::size_t saved_stmt = 0;
  bool restore_stmt = false;
  bool is_switch = false;
  int cases = 0;
  bool enum_constants = false;
  bool last_stmt_return = false;
};

bool is(const Token* t, std::string_view text) { return t && t->text == text; }

/// Drops `@Name(.Name)*(...)?` annotations (but keeps `@interface`).
std::vector<const Token*> strip_annotations(const std::vector<const Token*>& header) {
  std::vector<const Token*> out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i]->text == "@" && i + 1 < header.size() &&
        header[i + 1]->kind == TokenKind::identifier) {
      i += 1;
      while (i + 2 < header.size() && header[i + 1]->text == "." &&
             header[i + 2]->kind == TokenKind::identifier)
        i += 2;
      if (i + 1 < header.size() && header[i + 1]->text == "(") {
        int depth = 0;
        std::size_t j = i + 1;
        for (; j < header.size(); ++j) {
          if (header[j]->text == "(") ++depth;
          else if (header[j]->text == ")" && --depth == 0) break;
        }
        i = j;
      }
      continue;
    }
    out.push_back(header[i]);
  }
  return out;
}

bool declares_type(const std::vector<const Token*>& h, bool* is_enum) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& t = h[i]->text;
    if (h[i]->kind != TokenKind::keyword) continue;
    if (t != "class" && t != "interface" && t != "enum") continue;
    if (i > 0 && h[i - 1]->text == ".") continue;  // Foo.class literal
    if (is_enum) *is_enum = t == "enum";
    return true;
  }
  return false;
}

/// `new Type<...>(...)` immediately before the brace.
bool anonymous_class(const std::vector<const Token*>& h) {
  if (h.empty() || h.back()->text != ")") return false;
  int depth = 0;
  std::size_t i = h.size();
  while (i-- > 0) {
    if (h[i]->text == ")") ++depth;
    else if (h[i]->text == "(" && --depth == 0) break;
  }
  if (depth != 0 || i == 0) return false;
  while (i-- > 0) {
    const auto& t = h[i]->text;
    if (h[i]->kind == TokenKind::identifier || t == "." || t == "<" || t == ">" || t == ">>" ||
        t == "," || t == "?" || t == "extends" || t == "super")
      continue;
    return t == "new";
  }
  return false;
}

/// Index of the first top-level '(' when the header reads like a method
/// declaration (identifier before it, no '=' earlier).
std::optional<std::size_t> method_name_paren(const std::vector<const Token*>& h) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& t = h[i]->text;
    if (t == "=" || t == "->") return std::nullopt;
    if (t == "(") {
      if (i == 0 || h[i - 1]->kind != TokenKind::identifier) return std::nullopt;
      return i;
    }
  }
  return std::nullopt;
}

bool has_top_level_assign(const std::vector<const Token*>& h) {
  int depth = 0;
  for (const auto* t : h) {
    if (t->text == "(" || t->text == "[") ++depth;
    else if (t->text == ")" || t->text == "]") --depth;
    else if (depth == 0 && t->text == "=") return true;
  }
  return false;
}

int count_declarators(const std::vector<const Token*>& h) {
  int depth = 0, angle = 0, n = 1;
  bool after_assign = false;
  for (const auto* t : h) {
    const auto& s = t->text;
    if (s == "(" || s == "[" || s == "{") ++depth;
    else if (s == ")" || s == "]" || s == "}") --depth;
    else if (!after_assign && s == "<") ++angle;
    else if (!after_assign && s == ">") angle = std::max(0, angle - 1);
    else if (!after_assign && s == ">>") angle = std::max(0, angle - 2);
    else if (s == "=" && depth == 0) after_assign = true;
    else if (s == "," && depth == 0 && angle == 0) {
      ++n;
      after_assign = false;
    }
  }
  return n;
}

void apply_modifiers(MethodInfo& m, const std::vector<const Token*>& h, std::size_t name_at) {
  for (std::size_t i = 0; i < name_at; ++i) {
    const auto& t = h[i]->text;
    if (t == "public") m.visibility = MethodInfo::Visibility::public_;
    else if (t == "private") m.visibility = MethodInfo::Visibility::private_;
    else if (t == "protected") m.visibility = MethodInfo::Visibility::protected_;
    else if (t == "static") m.is_static = true;
  }
}

}  // namespace

SourceStructure analyze_structure(const std::vector<Token>& tokens) {
  std::vector<const Token*> sig;
  for (const auto& t : tokens)
    if (t.kind != TokenKind::newline && t.kind != TokenKind::line_comment &&
        t.kind != TokenKind::block_comment)
      sig.push_back(&t);

  SourceStructure out;
  std::vector<MethodCounts> counts;
  std::vector<Scope> stack;
  std::size_t stmt_start = 0;
  int paren = 0;
  bool pending_switch = false;

  auto header = [&](std::size_t end) {
    std::vector<const Token*> h(sig.begin() + static_cast<long>(std::min(stmt_start, end)),
                                sig.begin() + static_cast<long>(end));
    return strip_annotations(h);
  };
  auto current_method = [&] { return stack.empty() ? -1 : stack.back().owner_method; };

  for (std::size_t i = 0; i < sig.size(); ++i) {
    const Token* t = sig[i];
    const int m = current_method();
    const Token* next = i + 1 < sig.size() ? sig[i + 1] : nullptr;

    if (t->kind == TokenKind::keyword) {
      const auto& k = t->text;
      if (k == "switch") pending_switch = true;
      if (m >= 0) {
        auto& c = counts[static_cast<std::size_t>(m)];
        if (k == "if" || k == "for" || k == "while" || k == "catch") {
          ++c.decisions;
        } else if (k == "case") {
          ++c.cases;
          for (auto it = stack.rbegin(); it != stack.rend(); ++it)
            if (it->is_switch) {
              ++it->cases;
              break;
            }
        } else if (k == "break" || k == "continue") {
          ++c.jumps;
        } else if (k == "return") {
          ++c.returns;
        }
      }
    } else if (t->kind == TokenKind::punct) {
      const auto& p = t->text;
      if (p == "(") ++paren;
      else if (p == ")") paren = std::max(0, paren - 1);
      else if (m >= 0 && (p == "&&" || p == "||")) ++counts[static_cast<std::size_t>(m)].logical_ops;
      else if (m >= 0 && p == "?") {
        const bool wildcard = (i > 0 && (is(sig[i - 1], "<") || is(sig[i - 1], ","))) ||
                              is(next, "extends") || is(next, "super") || is(next, ">") ||
                              is(next, ",") || is(next, ">>");
        if (!wildcard) ++counts[static_cast<std::size_t>(m)].decisions;
      }
    } else if (t->kind == TokenKind::semicolon) {
      if (paren > 0) continue;
      auto h = header(i);
      if (stack.empty() || stack.back().kind == Scope::Kind::class_body) {
        if (!stack.empty() && stack.back().enum_constants) {
          stack.back().enum_constants = false;
        } else if (!h.empty() && !stack.empty() && h[0]->text != "import" &&
                   h[0]->text != "package") {
          if (auto paren_at = method_name_paren(h)) {
            MethodInfo mi;
            mi.name = h[*paren_at - 1]->text;
            mi.start_line = mi.end_line = h[*paren_at - 1]->line;
            apply_modifiers(mi, h, *paren_at - 1);
            out.methods.push_back(mi);
            counts.emplace_back();
          } else {
            const bool is_static = std::any_of(h.begin(), h.end(), [](const Token* x) {
              return x->text == "static";
            });
            (is_static ? out.class_variables : out.instance_variables) += count_declarators(h);
          }
        }
      } else if (stack.back().kind == Scope::Kind::method_body) {
        stack.back().last_stmt_return = !h.empty() && h[0]->text == "return";
      }
      stmt_start = i + 1;
    } else if (t->kind == TokenKind::brace_open) {
      auto h = header(i);
      Scope s;
      s.saved_stmt = stmt_start;
      const bool class_context = stack.empty() || stack.back().kind == Scope::Kind::class_body;
      bool is_enum = false;
      if (pending_switch) {
        s.kind = Scope::Kind::block;
        s.is_switch = true;
        pending_switch = false;
      } else if (declares_type(h, &is_enum)) {
        s.kind = Scope::Kind::class_body;
        s.enum_constants = is_enum;
      } else if (anonymous_class(h)) {
        s.kind = Scope::Kind::class_body;
        s.restore_stmt = true;
      } else if (auto paren_at = class_context ? method_name_paren(h) : std::nullopt) {
        s.kind = Scope::Kind::method_body;
        MethodInfo mi;
        mi.name = h[*paren_at - 1]->text;
        mi.start_line = h[*paren_at - 1]->line;
        mi.has_body = true;
        apply_modifiers(mi, h, *paren_at - 1);
        out.methods.push_back(mi);
        counts.emplace_back();
      } else if (!h.empty() && (has_top_level_assign(h) || h.back()->text == "]" ||
                                h.back()->text == "," || h.back()->text == "(" ||
                                h.back()->text == "=")) {
        s.kind = Scope::Kind::expression;
        s.restore_stmt = true;
      } else {
        s.kind = Scope::Kind::block;
      }
      if (s.kind == Scope::Kind::method_body) {
        s.owner_method = static_cast<int>(out.methods.size()) - 1;
        s.depth_in_method = 0;
      } else if (!stack.empty() && stack.back().owner_method >= 0) {
        s.owner_method = stack.back().owner_method;
        s.depth_in_method = stack.back().depth_in_method + 1;
        auto& mi = out.methods[static_cast<std::size_t>(s.owner_method)];
        mi.max_nesting = std::max(mi.max_nesting, s.depth_in_method);
      }
      stack.push_back(s);
      stmt_start = i + 1;
    } else if (t->kind == TokenKind::brace_close) {
      if (stack.empty()) {
        stmt_start = i + 1;
        continue;
      }
      const Scope s = stack.back();
      stack.pop_back();
      if (s.is_switch && s.cases > 0 && s.owner_method >= 0)
        ++counts[static_cast<std::size_t>(s.owner_method)].switches_with_cases;
      if (s.kind == Scope::Kind::method_body) {
        auto& mi = out.methods[static_cast<std::size_t>(s.owner_method)];
        auto& c = counts[static_cast<std::size_t>(s.owner_method)];
        mi.end_line = t->line;
        const bool final_return = i > 0 && sig[i - 1]->kind == TokenKind::semicolon &&
                                  s.last_stmt_return;
        c.jumps += c.returns - (final_return ? 1 : 0);
      } else if (!stack.empty() && stack.back().kind == Scope::Kind::method_body) {
        stack.back().last_stmt_return = false;
      }
      stmt_start = s.restore_stmt ? s.saved_stmt : i + 1;
    }
  }

  for (std::size_t k = 0; k < out.methods.size(); ++k) {
    auto& mi = out.methods[k];
    const auto& c = counts[k];
    mi.cyclomatic = 1 + c.decisions + c.cases;
    mi.cyclomatic_strict = mi.cyclomatic + c.logical_ops;
    mi.cyclomatic_modified = 1 + c.decisions + c.switches_with_cases;
    mi.essential = std::min(1 + c.jumps, mi.cyclomatic);
    if (mi.end_line < mi.start_line) mi.end_line = mi.start_line;
  }
  return out;
}

ProductRow compute_product_row(const std::vector<Token>& tokens) {
  ProductRow row;
  auto& v = row.values;
  const auto lines = classify_lines(tokens);
  int code = 0, comment = 0, blank = 0;
  for (const auto& l : lines) {
    code += l.code;
    comment += l.comment;
    blank += l.blank();
  }
  int semicolons = 0, statements = 0, paren = 0;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::punct && t.text == "(") ++paren;
    else if (t.kind == TokenKind::punct && t.text == ")") paren = std::max(0, paren - 1);
    else if (t.kind == TokenKind::semicolon) {
      ++semicolons;
      if (paren == 0) ++statements;
    } else if (t.kind == TokenKind::keyword &&
               (t.text == "if" || t.text == "for" || t.text == "while" || t.text == "do" ||
                t.text == "switch" || t.text == "try")) {
      ++statements;
    }
  }
  v["CountLine"] = static_cast<double>(lines.size());
  v["CountLineCode"] = code;
  v["CountLineComment"] = comment;
  v["CountLineBlank"] = blank;
  v["CountSemicolon"] = semicolons;
  v["CountStmt"] = statements;
  v["RatioCommentToCode"] = static_cast<double>(comment) / std::max(1, code);

  const auto structure = analyze_structure(tokens);
  int pub = 0, priv = 0, prot = 0, def = 0, stat = 0;
  for (const auto& m : structure.methods) {
    switch (m.visibility) {
      case MethodInfo::Visibility::public_: ++pub; break;
      case MethodInfo::Visibility::private_: ++priv; break;
      case MethodInfo::Visibility::protected_: ++prot; break;
      case MethodInfo::Visibility::package_: ++def; break;
    }
    stat += m.is_static;
  }
  const auto n_methods = static_cast<double>(structure.methods.size());
  v["CountDeclMethod"] = n_methods;
  v["CountDeclMethodPublic"] = pub;
  v["CountDeclMethodPrivate"] = priv;
  v["CountDeclMethodProtected"] = prot;
  v["CountDeclMethodDefault"] = def;
  v["CountDeclClassMethod"] = stat;
  v["CountDeclInstanceMethod"] = n_methods - stat;
  v["CountDeclInstanceVariable"] = structure.instance_variables;
  v["CountDeclClassVariable"] = structure.class_variables;

  double sum_c = 0, sum_m = 0, sum_s = 0, sum_line = 0, sum_code = 0, sum_blank = 0,
         sum_comment = 0;
  int max_c = 0, max_m = 0, max_s = 0, max_ess = 0, max_nest = 0, bodies = 0;
  for (const auto& m : structure.methods) {
    if (!m.has_body) continue;
    ++bodies;
    sum_c += m.cyclomatic;
    sum_m += m.cyclomatic_modified;
    sum_s += m.cyclomatic_strict;
    max_c = std::max(max_c, m.cyclomatic);
    max_m = std::max(max_m, m.cyclomatic_modified);
    max_s = std::max(max_s, m.cyclomatic_strict);
    max_ess = std::max(max_ess, m.essential);
    max_nest = std::max(max_nest, m.max_nesting);
    sum_line += m.end_line - m.start_line + 1;
    for (int l = m.start_line; l <= m.end_line && l <= static_cast<int>(lines.size()); ++l) {
      const auto& lc = lines[static_cast<std::size_t>(l - 1)];
      sum_code += lc.code;
      sum_comment += lc.comment;
      sum_blank += lc.blank();
    }
  }
  const double denom = bodies > 0 ? bodies : 1;
  v["SumCyclomatic"] = sum_c;
  v["SumCyclomaticModified"] = sum_m;
  v["SumCyclomaticStrict"] = sum_s;
  v["AvgCyclomatic"] = sum_c / denom;
  v["AvgCyclomaticModified"] = sum_m / denom;
  v["AvgCyclomaticStrict"] = sum_s / denom;
  v["MaxCyclomatic"] = max_c;
  v["MaxCyclomaticModified"] = max_m;
  v["MaxCyclomaticStrict"] = max_s;
  v["MaxEssential"] = max_ess;
  v["MaxNesting"] = max_nest;
  v["AvgLine"] = sum_line / denom;
  v["AvgLineCode"] = sum_code / denom;
  v["AvgLineBlank"] = sum_blank / denom;
  v["AvgLineComment"] = sum_comment / denom;
  return row;
}

ProductRow measure_source(std::string_view text, std::vector<std::string>* warnings) {
  const std::string clean = sanitize_utf8(text);
  return compute_product_row(tokenize(clean, warnings));
}

std::string snapshot(ObjectReader& reader, const std::string& commit, const std::string& path) {
  auto content = reader.read(commit, path);
  if (!content) throw SnapshotError(path + " does not exist at " + commit);
  return std::move(*content);
}

std::string snapshot(const GitRepo& repo, const std::string& commit, const std::string& path) {
  ObjectReader reader(repo);
  return snapshot(reader, commit, path);
}

namespace {

bool tracked(const std::string& path, const std::vector<std::string>& extensions) {
  return std::any_of(extensions.begin(), extensions.end(), [&](const std::string& ext) {
    return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
  });
}

}  // namespace

std::vector<ProductRow> compute_product_rows(const ProjectHistory& history, const GitRepo& repo,
                                             const ProductOptions& options) {
  ObjectReader reader(repo);
  std::vector<ProductRow> rows;
  for (const auto& c : history.commits) {
    if (c.is_merge()) continue;
    for (const auto& ch : c.changes) {
      if (ch.kind == ChangeKind::remove || ch.binary || !tracked(ch.path, options.extensions))
        continue;
      ProductRow row = measure_source(snapshot(reader, c.hash, ch.path));
      row.canonical_id = ch.canonical_id;
      row.commit_hash = c.hash;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ProductRow> import_product_csv(std::istream& in, std::vector<ProductRow> native,
                                           std::vector<std::string>* warnings) {
  const auto table = csv::read(in);
  const auto commit_col = table.require("commit");
  const auto file_col = table.require("file");
  const auto& known = product_metric_names();
  std::vector<std::pair<std::size_t, std::string>> columns;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i == commit_col || i == file_col) continue;
    std::string name = table.header[i];
    if (name.rfind("%LackOfCohesion", 0) == 0) name = "Percent" + name.substr(1);
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      if (warnings) warnings->push_back("unknown column '" + table.header[i] + "' ignored");
      continue;
    }
    columns.emplace_back(i, name);
  }
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t k = 0; k < native.size(); ++k)
    index[{native[k].commit_hash, native[k].canonical_id}] = k;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    std::pair<std::string, std::string> key{cells[commit_col], cells[file_col]};
    if (!seen.insert(key).second)
      throw ImportError("duplicate (commit, file) key " + key.first + "," + key.second +
                        " at data row " + std::to_string(r + 1));
    auto it = index.find(key);
    ProductRow* target;
    if (it == index.end()) {
      native.push_back({key.second, key.first, {}});
      index[key] = native.size() - 1;
      target = &native.back();
    } else {
      target = &native[it->second];
    }
    for (const auto& [col, name] : columns) {
      if (cells[col].empty()) continue;
      target->values[name] = csv::parse_double(cells[col], r + 2);
    }
  }
  return native;
}

std::vector<ProductRow> import_product_csv(const std::string& path, std::vector<ProductRow> native,
                                           std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ImportError("cannot open " + path);
  return import_product_csv(in, std::move(native), warnings);
}

void write_product_csv(std::ostream& out, const std::vector<ProductRow>& rows) {
  std::vector<std::string> header = {"file", "commit"};
  for (const auto& n : product_metric_names()) header.push_back(n);
  csv::write_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.canonical_id, r.commit_hash};
    for (const auto& n : product_metric_names()) {
      auto it = r.values.find(n);
      cells.push_back(it == r.values.end() ? "" : csv::format_number(it->second));
    }
    csv::write_row(out, cells);
  }
}

std::vector<ProductRow> read_product_csv(std::istream& in) {
  const auto table = csv::read(in);
  const auto file_col = table.require("file");
  const auto commit_col = table.require("commit");
  std::vector<ProductRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    ProductRow row{cells[file_col], cells[commit_col], {}};
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == file_col || i == commit_col || cells[i].empty()) continue;
      row.values[table.header[i]] = csv::parse_double(cells[i], r + 2);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace defectlab
