#pragma once

// Scope-aware walk over a Python file that records import bindings, name
// rebindings and attribute/call chains. Resolution rules:
//
//  * module scope is sequential: a chain resolves through the most recent
//    binding of its head that precedes it; a non-import rebinding kills it;
//  * function and class scopes are conservative: any non-import binding of
//    the head anywhere in that scope drops every chain headed by it there;
//  * class scopes are not visible from nested functions;
//  * `global` defers to module scope, `nonlocal` drops the chain;
//  * lambda parameters and comprehension targets shadow within their
//    enclosing bracket group;
//  * star imports and relative imports bind nothing and produce a warning.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ink/pyfqn/lexer.hpp"
#include "ink/text.hpp"
#include "ink/pyfqn/types.hpp"

namespace ink::pyfqn {

struct Stmt {
    std::vector<Token> toks;
    bool compound = false;
    std::vector<Stmt> body;
};

class StatementParser {
public:
    StatementParser(const std::vector<Token>& toks, std::vector<Warning>& warnings) : toks_(toks), warnings_(warnings) {}

    std::vector<Stmt> parse_module() { return parse_block(false); }

private:
    const std::vector<Token>& toks_;
    std::vector<Warning>& warnings_;
    std::size_t i_ = 0;

    const Token& cur() const { return toks_[std::min(i_, toks_.size() - 1)]; }

    std::vector<Stmt> parse_block(bool until_dedent) {
        std::vector<Stmt> out;
        while (i_ < toks_.size()) {
            const Token& t = cur();
            if (t.kind == TokKind::End) return out;
            if (t.kind == TokKind::Newline) {
                ++i_;
                continue;
            }
            if (t.kind == TokKind::Dedent) {
                ++i_;
                if (until_dedent) return out;
                continue;
            }
            if (t.kind == TokKind::Indent) {
                warnings_.push_back({"", t.line, "unexpected indent"});
                ++i_;
                auto nested = parse_block(true);
                std::move(nested.begin(), nested.end(), std::back_inserter(out));
                continue;
            }
            std::vector<Token> line;
            while (i_ < toks_.size() && cur().kind != TokKind::Newline && cur().kind != TokKind::End) {
                line.push_back(cur());
                ++i_;
            }
            if (i_ < toks_.size() && cur().kind == TokKind::Newline) ++i_;
            handle_line(std::move(line), out);
        }
        return out;
    }

    static bool is_compound(const std::vector<Token>& line) {
        if (line.empty() || line[0].kind != TokKind::Name) return false;
        std::size_t k = line[0].text == "async" && line.size() > 1 ? 1 : 0;
        static const std::set<std::string> kws = {"if",  "elif", "else",    "for",  "while", "try",
                                                  "except", "finally", "with", "def", "class"};
        if (kws.count(line[k].text)) return true;
        if ((line[0].text == "match" || line[0].text == "case") && line.size() > 2 && line.back().is_op(":")) return true;
        return false;
    }

    // Index of the ':' that ends a compound header, skipping lambda colons and bracketed ones.
    static std::size_t header_colon(const std::vector<Token>& line) {
        int depth = 0;
        int lambdas = 0;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const auto& t = line[i];
            if (t.kind == TokKind::Op) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
                else if (t.text == ":" && depth == 0) {
                    if (lambdas > 0) --lambdas;
                    else return i;
                }
            } else if (t.is_name("lambda") && depth == 0) {
                ++lambdas;
            }
        }
        return line.size();
    }

    static void split_simple(const std::vector<Token>& toks, std::size_t begin, std::vector<Stmt>& out) {
        int depth = 0;
        Stmt cur;
        for (std::size_t i = begin; i < toks.size(); ++i) {
            const auto& t = toks[i];
            if (t.kind == TokKind::Op) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
                else if (t.text == ";" && depth == 0) {
                    if (!cur.toks.empty()) out.push_back(std::move(cur));
                    cur = Stmt{};
                    continue;
                }
            }
            cur.toks.push_back(t);
        }
        if (!cur.toks.empty()) out.push_back(std::move(cur));
    }

    void handle_line(std::vector<Token> line, std::vector<Stmt>& out) {
        if (line.empty()) return;
        if (!is_compound(line)) {
            split_simple(line, 0, out);
            return;
        }
        std::size_t colon = header_colon(line);
        Stmt s;
        s.compound = true;
        if (colon >= line.size()) {
            warnings_.push_back({"", line[0].line, "compound statement without ':'"});
            s.toks = std::move(line);
            out.push_back(std::move(s));
            return;
        }
        s.toks.assign(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(colon));
        if (colon + 1 < line.size()) {
            split_simple(line, colon + 1, s.body);
        } else if (i_ < toks_.size() && cur().kind == TokKind::Indent) {
            ++i_;
            s.body = parse_block(true);
        } else {
            warnings_.push_back({"", line[0].line, "expected an indented block"});
        }
        out.push_back(std::move(s));
    }
};

enum class ScopeKind { module, function, klass };

struct ImportEvent {
    ImportBinding binding;
    int scope = 0;
    int seq = 0;
};

struct ImportOnlySite {
    std::string fqn;
    std::size_t import_index = 0;  // binding introduced by the same import item
    Position pos;
};

struct ChainUse {
    int scope = 0;
    int seq = 0;
    std::string head;
    std::vector<std::string> attrs;
    Position pos;
};

struct FileAnalysis {
    std::vector<ImportEvent> imports;
    std::vector<ImportOnlySite> import_sites;
    std::vector<ChainUse> uses;
    std::vector<Warning> warnings;

    struct BindEvent {
        int seq;
        int import_index;  // -1 for a non-import (re)binding
    };
    struct Scope {
        ScopeKind kind;
        int parent;
        std::map<std::string, std::vector<BindEvent>> events;
        std::set<std::string> globals;
        std::set<std::string> nonlocals;
    };
    std::vector<Scope> scopes;

    // Returns the import index a chain head resolves to, if any. `allowed`
    // filters which import events count as bindings at all.
    template <typename Allowed>
    std::optional<std::size_t> resolve(const ChainUse& use, Allowed&& allowed) const {
        int s = use.scope;
        if (scopes[s].nonlocals.count(use.head)) return std::nullopt;
        if (scopes[s].globals.count(use.head)) s = 0;
        bool first = true;
        while (s >= 0) {
            const Scope& sc = scopes[s];
            auto it = sc.events.find(use.head);
            if (sc.kind == ScopeKind::module) {
                if (it == sc.events.end()) return std::nullopt;
                const BindEvent* latest = nullptr;
                for (const auto& ev : it->second) {
                    if (ev.seq < use.seq) latest = &ev;
                }
                if (!latest || latest->import_index < 0) return std::nullopt;
                if (!allowed(static_cast<std::size_t>(latest->import_index))) return std::nullopt;
                return static_cast<std::size_t>(latest->import_index);
            }
            const bool visible = sc.kind != ScopeKind::klass || first;
            if (visible && it != sc.events.end()) {
                const BindEvent* latest = nullptr;
                for (const auto& ev : it->second) {
                    if (ev.import_index < 0 || !allowed(static_cast<std::size_t>(ev.import_index))) return std::nullopt;
                    if (ev.seq < use.seq) latest = &ev;
                }
                if (!latest) return std::nullopt;
                return static_cast<std::size_t>(latest->import_index);
            }
            s = sc.parent;
            first = false;
        }
        return std::nullopt;
    }
};

class Analyzer {
public:
    FileAnalysis run(std::string_view source) {
        auto lexed = lex(source);
        out_.warnings = std::move(lexed.warnings);
        StatementParser parser(lexed.tokens, out_.warnings);
        auto module = parser.parse_module();
        out_.scopes.push_back({ScopeKind::module, -1, {}, {}, {}});
        visit_block(module, 0);
        return std::move(out_);
    }

private:
    FileAnalysis out_;
    int seq_ = 0;

    static bool is_open(const Token& t) { return t.is_op("(") || t.is_op("[") || t.is_op("{"); }
    static bool is_close(const Token& t) { return t.is_op(")") || t.is_op("]") || t.is_op("}"); }
    static bool plain_name(const Token& t) { return t.kind == TokKind::Name && !is_keyword(t.text); }

    int new_scope(ScopeKind kind, int parent) {
        out_.scopes.push_back({kind, parent, {}, {}, {}});
        return static_cast<int>(out_.scopes.size()) - 1;
    }

    void bind(int scope, const std::string& name, int seq, int import_index = -1) {
        out_.scopes[scope].events[name].push_back({seq, import_index});
    }

    void visit_block(const std::vector<Stmt>& stmts, int scope) {
        for (const auto& s : stmts) visit(s, scope);
    }

    void visit(const Stmt& stmt, int scope) {
        const int seq = ++seq_;
        const auto& t = stmt.toks;
        if (t.empty()) return;
        if (!stmt.compound) {
            visit_simple(t, scope, seq);
            return;
        }
        std::size_t k = t[0].is_name("async") && t.size() > 1 ? 1 : 0;
        const std::string& kw = t[k].text;
        if (kw == "def" || kw == "class") {
            if (k + 1 >= t.size() || !plain_name(t[k + 1])) {
                out_.warnings.push_back({"", t[0].line, "malformed " + kw + " header"});
                return;
            }
            bind(scope, t[k + 1].text, seq);
            int inner = new_scope(kw == "def" ? ScopeKind::function : ScopeKind::klass, scope);
            if (kw == "def") bind_params(t, k + 2, inner);
            walrus_binds(t, scope, seq);
            scan_uses(t, k + 2, scope, seq);
            visit_block(stmt.body, inner);
            return;
        }
        if (kw == "for") {
            std::size_t in_pos = find_top_level(t, k + 1, "in");
            bind_targets(t, k + 1, in_pos, scope, seq);
        } else if (kw == "with" || kw == "except") {
            for (std::size_t i = k + 1; i + 1 < t.size(); ++i) {
                if (t[i].is_name("as")) bind_targets(t, i + 1, target_end(t, i + 1), scope, seq);
            }
        }
        walrus_binds(t, scope, seq);
        scan_uses(t, k + 1, scope, seq);
        visit_block(stmt.body, scope);
    }

    static std::size_t find_top_level(const std::vector<Token>& t, std::size_t from, std::string_view name) {
        int depth = 0;
        for (std::size_t i = from; i < t.size(); ++i) {
            if (is_open(t[i])) ++depth;
            else if (is_close(t[i])) --depth;
            else if (depth == 0 && t[i].is_name(name)) return i;
        }
        return t.size();
    }

    // End of a with/except target: the next ',' or ':' at the same depth, or a closing bracket.
    static std::size_t target_end(const std::vector<Token>& t, std::size_t from) {
        int depth = 0;
        for (std::size_t i = from; i < t.size(); ++i) {
            if (is_open(t[i])) ++depth;
            else if (is_close(t[i])) {
                if (depth == 0) return i;
                --depth;
            } else if (depth == 0 && (t[i].is_op(",") || t[i].is_op(":"))) {
                return i;
            }
        }
        return t.size();
    }

    void bind_params(const std::vector<Token>& t, std::size_t open, int fn_scope) {
        if (open >= t.size() || !t[open].is_op("(")) return;
        int depth = 0;
        for (std::size_t i = open; i < t.size(); ++i) {
            if (is_open(t[i])) {
                ++depth;
                continue;
            }
            if (is_close(t[i])) {
                if (--depth == 0) return;
                continue;
            }
            if (depth != 1 || !plain_name(t[i])) continue;
            const Token& prev = t[i - 1];
            bool param = prev.is_op("(") || prev.is_op(",");
            if ((prev.is_op("*") || prev.is_op("**")) && i >= 2 && (t[i - 2].is_op("(") || t[i - 2].is_op(","))) param = true;
            if (param) bind(fn_scope, t[i].text, 0);
        }
    }

    // Binds the plain names of an assignment-style target in [b, e): bare
    // names and names nested in tuple/list displays, never subscripts,
    // attributes or call arguments.
    void bind_targets(const std::vector<Token>& t, std::size_t b, std::size_t e, int scope, int seq) {
        std::vector<bool> display;
        for (std::size_t i = b; i < e; ++i) {
            if (is_open(t[i])) {
                bool disp = i == b || t[i - 1].is_op(",") || t[i - 1].is_op("(") || t[i - 1].is_op("[") ||
                            t[i - 1].is_op("*") || t[i - 1].is_op("=") ||
                            (t[i - 1].kind == TokKind::Name && is_keyword(t[i - 1].text));
                display.push_back(disp);
                continue;
            }
            if (is_close(t[i])) {
                if (!display.empty()) display.pop_back();
                continue;
            }
            if (!plain_name(t[i])) continue;
            if (i > b && t[i - 1].is_op(".")) continue;
            if (i + 1 < e && (t[i + 1].is_op(".") || t[i + 1].is_op("(") || t[i + 1].is_op("["))) continue;
            if (std::all_of(display.begin(), display.end(), [](bool d) { return d; })) bind(scope, t[i].text, seq);
        }
    }

    void walrus_binds(const std::vector<Token>& t, int scope, int seq) {
        for (std::size_t i = 0; i + 1 < t.size(); ++i) {
            if (plain_name(t[i]) && t[i + 1].is_op(":=")) bind(scope, t[i].text, seq);
        }
    }

    void visit_simple(const std::vector<Token>& t, int scope, int seq) {
        const Token& first = t[0];
        if (first.is_name("import") || first.is_name("from")) {
            visit_import(t, scope, seq);
            return;
        }
        if (first.is_name("global") || first.is_name("nonlocal")) {
            auto& set = first.text == "global" ? out_.scopes[scope].globals : out_.scopes[scope].nonlocals;
            for (std::size_t i = 1; i < t.size(); ++i) {
                if (plain_name(t[i])) set.insert(t[i].text);
            }
            return;
        }
        if (first.is_name("del")) {
            bind_targets(t, 1, t.size(), scope, seq);
            scan_uses(t, 1, scope, seq);
            return;
        }
        if (!first.is_op("@")) bind_assignment_targets(t, scope, seq);
        walrus_binds(t, scope, seq);
        scan_uses(t, 0, scope, seq);
    }

    void bind_assignment_targets(const std::vector<Token>& t, int scope, int seq) {
        static const std::set<std::string> augmented = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                                        ">>=", "<<=", "&=", "|=", "^=", "@="};
        std::vector<std::size_t> eqs;
        std::optional<std::size_t> aug;
        std::optional<std::size_t> annot;
        int depth = 0;
        bool lambda_seen = false;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (is_open(t[i])) ++depth;
            else if (is_close(t[i])) --depth;
            else if (depth == 0) {
                if (t[i].is_name("lambda")) lambda_seen = true;
                else if (t[i].is_op("=")) eqs.push_back(i);
                else if (t[i].kind == TokKind::Op && augmented.count(t[i].text) && !aug && eqs.empty()) aug = i;
                else if (t[i].is_op(":") && !lambda_seen && eqs.empty() && !aug && !annot) annot = i;
            }
        }
        if (annot) {
            bind_targets(t, 0, *annot, scope, seq);
            return;
        }
        if (aug) {
            bind_targets(t, 0, *aug, scope, seq);
            return;
        }
        std::size_t start = 0;
        for (std::size_t eq : eqs) {
            bind_targets(t, start, eq, scope, seq);
            start = eq + 1;
        }
    }

    void visit_import(const std::vector<Token>& t, int scope, int seq) {
        Span span{{t.front().line, t.front().col},
                  {t.back().line, t.back().col + static_cast<int>(t.back().text.size())}};
        auto add = [&](std::string local, std::string target, BindingKind kind, Position site, std::string fqn) {
            out_.imports.push_back({ImportBinding{local, std::move(target), kind, span}, scope, seq});
            std::size_t idx = out_.imports.size() - 1;
            bind(scope, local, seq, static_cast<int>(idx));
            out_.import_sites.push_back({std::move(fqn), idx, site});
        };
        // Reads NAME ('.' NAME)* starting at i; returns the segments.
        auto dotted = [&](std::size_t& i) {
            std::vector<std::string> parts;
            while (i < t.size() && plain_name(t[i])) {
                parts.push_back(t[i].text);
                ++i;
                if (i + 1 < t.size() && t[i].is_op(".") && plain_name(t[i + 1])) ++i;
                else break;
            }
            return parts;
        };
        auto malformed = [&] { out_.warnings.push_back({"", t[0].line, "malformed import statement skipped"}); };

        if (t[0].is_name("import")) {
            std::size_t i = 1;
            while (i < t.size()) {
                Position site{t[i].line, t[i].col};
                auto parts = dotted(i);
                if (parts.empty()) return malformed();
                std::string full = text::join(parts, ".");
                if (i + 1 < t.size() && t[i].is_name("as") && plain_name(t[i + 1])) {
                    std::string alias = t[i + 1].text;
                    i += 2;
                    bool aliased = alias != parts.back();
                    add(alias, full, aliased ? BindingKind::aliased_import : BindingKind::plain_import, site, full);
                } else {
                    add(parts[0], parts[0], BindingKind::plain_import, site, full);
                }
                if (i < t.size()) {
                    if (!t[i].is_op(",")) return malformed();
                    ++i;
                }
            }
            return;
        }

        std::size_t i = 1;
        if (i < t.size() && (t[i].is_op(".") || t[i].is_op("..."))) {
            out_.warnings.push_back({"", t[0].line, "relative import dropped"});
            return;
        }
        auto module = dotted(i);
        if (module.empty() || i >= t.size() || !t[i].is_name("import")) return malformed();
        const std::string mod = text::join(module, ".");
        ++i;
        if (i < t.size() && t[i].is_op("*")) {
            out_.warnings.push_back({"", t[0].line, "star import from '" + mod + "' binds nothing; chains through it are dropped"});
            return;
        }
        std::size_t end = t.size();
        if (i < t.size() && t[i].is_op("(")) {
            ++i;
            if (t.back().is_op(")")) --end;
        }
        while (i < end) {
            if (!plain_name(t[i])) return malformed();
            Position site{t[i].line, t[i].col};
            std::string name = t[i].text;
            ++i;
            std::string local = name;
            if (i + 1 < end && t[i].is_name("as") && plain_name(t[i + 1])) {
                local = t[i + 1].text;
                i += 2;
            }
            auto kind = local == name ? BindingKind::from_import : BindingKind::aliased_from_import;
            add(local, mod + "." + name, kind, site, mod + "." + name);
            if (i < end) {
                if (!t[i].is_op(",")) return malformed();
                ++i;
            }
        }
    }

    struct Shadow {
        std::string name;
        std::size_t begin;
        std::size_t end;
    };

    // Lambda parameters and comprehension targets visible over [begin, end).
    static std::vector<Shadow> shadows(const std::vector<Token>& t) {
        std::vector<std::size_t> close(t.size(), t.size());
        std::vector<std::size_t> enclosing_open(t.size(), t.size());
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < t.size(); ++i) {
            enclosing_open[i] = stack.empty() ? t.size() : stack.back();
            if (is_open(t[i])) stack.push_back(i);
            else if (is_close(t[i]) && !stack.empty()) {
                close[stack.back()] = i;
                stack.pop_back();
            }
        }
        auto group_end = [&](std::size_t i) {
            auto o = enclosing_open[i];
            return o == t.size() ? t.size() : close[o];
        };
        std::vector<Shadow> out;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i].is_name("lambda")) {
                int depth = 0;
                std::size_t colon = t.size();
                std::vector<std::string> params;
                for (std::size_t j = i + 1; j < t.size(); ++j) {
                    if (is_open(t[j])) ++depth;
                    else if (is_close(t[j])) {
                        if (depth == 0) break;
                        --depth;
                    } else if (depth == 0 && t[j].is_op(":")) {
                        colon = j;
                        break;
                    } else if (depth == 0 && plain_name(t[j])) {
                        const Token& prev = t[j - 1];
                        if (prev.is_name("lambda") || prev.is_op(",") || prev.is_op("*") || prev.is_op("**")) {
                            params.push_back(t[j].text);
                        }
                    }
                }
                for (auto& p : params) out.push_back({p, colon, group_end(i)});
            } else if (t[i].is_name("for") && enclosing_open[i] != t.size()) {
                std::size_t open = enclosing_open[i];
                int depth = 0;
                for (std::size_t j = i + 1; j < t.size(); ++j) {
                    if (is_open(t[j])) ++depth;
                    else if (is_close(t[j])) {
                        if (depth == 0) break;
                        --depth;
                    } else if (depth == 0 && t[j].is_name("in")) {
                        break;
                    } else if (plain_name(t[j]) && !t[j - 1].is_op(".")) {
                        out.push_back({t[j].text, open, close[open]});
                    }
                }
            }
        }
        return out;
    }

    void scan_uses(const std::vector<Token>& t, std::size_t from, int scope, int seq) {
        auto shadow = shadows(t);
        std::vector<std::size_t> open_stack;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (is_open(t[i])) {
                open_stack.push_back(i);
                continue;
            }
            if (is_close(t[i])) {
                if (!open_stack.empty()) open_stack.pop_back();
                continue;
            }
            if (i < from || !plain_name(t[i])) continue;
            if (i > 0 && t[i - 1].is_op(".")) continue;
            const std::string& head = t[i].text;
            bool shadowed = std::any_of(shadow.begin(), shadow.end(), [&](const Shadow& s) {
                return s.name == head && i >= s.begin && i < s.end;
            });
            if (shadowed) continue;
            if (i + 1 < t.size() && t[i + 1].is_op("=") && !open_stack.empty() && t[open_stack.back()].is_op("(")) {
                continue;  // keyword argument name
            }
            ChainUse use{scope, seq, head, {}, {t[i].line, t[i].col}};
            std::size_t j = i + 1;
            while (j + 1 < t.size() && t[j].is_op(".") && t[j + 1].kind == TokKind::Name) {
                use.attrs.push_back(t[j + 1].text);
                j += 2;
            }
            bool called = j < t.size() && t[j].is_op("(");
            if (use.attrs.empty() && !called) continue;
            out_.uses.push_back(std::move(use));
        }
    }
};

inline FileAnalysis analyze(std::string_view source) { return Analyzer().run(source); }

}  // namespace ink::pyfqn
