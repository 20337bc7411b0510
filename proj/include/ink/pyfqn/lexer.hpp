#pragma once

// Python tokenizer producing logical-line structure (NEWLINE/INDENT/DEDENT)
// with error recovery. Comments, string bodies and f-string contents are
// opaque; only names, operators and brackets matter to the resolver.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "ink/error.hpp"

namespace ink::pyfqn {

enum class TokKind { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
    TokKind kind;
    std::string text;
    int line = 0;  // 1-based
    int col = 0;   // 0-based byte column

    bool is_op(std::string_view s) const { return kind == TokKind::Op && text == s; }
    bool is_name(std::string_view s) const { return kind == TokKind::Name && text == s; }
};

struct LexResult {
    std::vector<Token> tokens;
    std::vector<Warning> warnings;
};

inline bool is_keyword(std::string_view s) {
    static constexpr std::array<std::string_view, 35> kw = {
        "False", "None",   "True",    "and",      "as",     "assert", "async",  "await", "break",
        "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
        "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
        "or",    "pass",   "raise",   "return",   "try",    "while",  "with",   "yield"};
    for (auto k : kw) {
        if (k == s) return true;
    }
    return false;
}

namespace detail {

inline bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
inline bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

inline bool string_prefix(std::string_view s) {
    if (s.size() > 2) return false;
    for (char c : s) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'u' && l != 'b' && l != 'f') return false;
    }
    return true;
}

}  // namespace detail

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {
        if (src_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    }

    LexResult run() {
        while (pos_ < src_.size()) {
            if (at_line_start_ && depth_ == 0) {
                if (!handle_indentation()) continue;
            }
            step();
        }
        if (has_content_) emit(TokKind::Newline, "");
        while (indents_.size() > 1) {
            indents_.pop_back();
            emit(TokKind::Dedent, "");
        }
        emit(TokKind::End, "");
        if (depth_ > 0) warn("unclosed bracket at end of file");
        return {std::move(out_), std::move(warnings_)};
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_start_ = 0;
    int line_ = 1;
    int depth_ = 0;
    bool at_line_start_ = true;
    bool has_content_ = false;
    std::vector<int> indents_{0};
    std::vector<Token> out_;
    std::vector<Warning> warnings_;

    char peek(std::size_t off = 0) const { return pos_ + off < src_.size() ? src_[pos_ + off] : '\0'; }
    int col_of(std::size_t p) const { return static_cast<int>(p - line_start_); }

    void warn(std::string msg) { warnings_.push_back({"", line_, std::move(msg)}); }

    void emit(TokKind k, std::string text, std::size_t start) {
        out_.push_back({k, std::move(text), line_, col_of(start)});
        if (k != TokKind::Newline && k != TokKind::Indent && k != TokKind::Dedent && k != TokKind::End) has_content_ = true;
    }
    void emit(TokKind k, std::string text) { emit(k, std::move(text), pos_); }

    void newline() {
        ++line_;
        line_start_ = pos_;
    }

    // Returns false when the whole line was blank or a comment and has been consumed.
    bool handle_indentation() {
        int width = 0;
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            width = src_[p] == '\t' ? (width / 8 + 1) * 8 : src_[p] == '\f' ? 0 : width + 1;
            ++p;
        }
        char c = p < src_.size() ? src_[p] : '\0';
        if (c == '\n' || c == '\r' || c == '#' || c == '\0') {
            while (p < src_.size() && src_[p] != '\n') ++p;
            pos_ = p < src_.size() ? p + 1 : p;
            if (p < src_.size()) newline();
            return false;
        }
        if (c == '\\' && (p + 1 >= src_.size() || src_[p + 1] == '\n' || src_[p + 1] == '\r')) {
            // Continuation of an otherwise empty line: indentation is taken from the next line.
            pos_ = p;
            at_line_start_ = false;
            return true;
        }
        pos_ = p;
        at_line_start_ = false;
        if (width > indents_.back()) {
            indents_.push_back(width);
            emit(TokKind::Indent, "");
        } else if (width < indents_.back()) {
            while (indents_.size() > 1 && width < indents_.back()) {
                indents_.pop_back();
                emit(TokKind::Dedent, "");
            }
            if (width != indents_.back()) {
                warn("inconsistent dedent");
                indents_.push_back(width);
                emit(TokKind::Indent, "");
            }
        }
        return true;
    }

    void step() {
        const std::size_t start = pos_;
        const char c = peek();
        if (c == ' ' || c == '\t' || c == '\f') {
            ++pos_;
            return;
        }
        if (c == '#') {
            while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
            return;
        }
        if (c == '\\' && (peek(1) == '\n' || peek(1) == '\r' || pos_ + 1 >= src_.size())) {
            pos_ += 1;
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') ++pos_;
            newline();
            return;
        }
        if (c == '\r' || c == '\n') {
            if (depth_ == 0 && has_content_) {
                emit(TokKind::Newline, "", start);
                has_content_ = false;
            }
            if (c == '\r' && peek(1) == '\n') ++pos_;
            ++pos_;
            newline();
            at_line_start_ = (depth_ == 0);
            return;
        }
        if (detail::ident_start(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() && detail::ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            auto word = src_.substr(start, pos_ - start);
            if ((peek() == '\'' || peek() == '"') && detail::string_prefix(word)) {
                lex_string(start);
                return;
            }
            emit(TokKind::Name, std::string(word), start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            while (pos_ < src_.size()) {
                char d = src_[pos_];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
                    ++pos_;
                    if ((d == 'e' || d == 'E') && (peek() == '+' || peek() == '-')) ++pos_;
                } else {
                    break;
                }
            }
            emit(TokKind::Number, std::string(src_.substr(start, pos_ - start)), start);
            return;
        }
        if (c == '\'' || c == '"') {
            lex_string(start);
            return;
        }
        lex_operator(start);
    }

    void lex_string(std::size_t start) {
        const char q = peek();
        const bool triple = peek(1) == q && peek(2) == q;
        const int start_line = line_;
        const std::size_t start_line_begin = line_start_;
        pos_ += triple ? 3 : 1;
        bool closed = false;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\') {
                pos_ += 2;
                if (pos_ - 1 < src_.size() && src_[pos_ - 1] == '\n') newline();
                continue;
            }
            if (c == '\n' || c == '\r') {
                if (!triple) break;
                if (c == '\r' && peek(1) == '\n') ++pos_;
                ++pos_;
                newline();
                continue;
            }
            if (c == q) {
                if (!triple) {
                    ++pos_;
                    closed = true;
                    break;
                }
                if (peek(1) == q && peek(2) == q) {
                    pos_ += 3;
                    closed = true;
                    break;
                }
            }
            ++pos_;
        }
        if (!closed) warn(triple ? "unterminated triple-quoted string" : "unterminated string literal");
        pos_ = std::min(pos_, src_.size());
        out_.push_back({TokKind::String, "", start_line, static_cast<int>(start - start_line_begin)});
        has_content_ = true;
    }

    void lex_operator(std::size_t start) {
        static constexpr std::array<std::string_view, 5> three = {"**=", "//=", "...", ">>=", "<<="};
        static constexpr std::array<std::string_view, 20> two = {"==", "!=", "<=", ">=", "->", "**", "//", "<<", ">>", "+=",
                                                                 "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", ":=", "<>"};
        auto rest = src_.substr(pos_);
        for (auto op : three) {
            if (rest.substr(0, 3) == op) return push_op(start, op);
        }
        for (auto op : two) {
            if (rest.substr(0, 2) == op) return push_op(start, op);
        }
        const char c = src_[pos_];
        if (c == '(' || c == '[' || c == '{') {
            ++depth_;
        } else if (c == ')' || c == ']' || c == '}') {
            if (depth_ == 0) {
                warn(std::string("unmatched '") + c + "'");
                ++pos_;
                return;
            }
            --depth_;
        }
        push_op(start, rest.substr(0, 1));
    }

    void push_op(std::size_t start, std::string_view op) {
        pos_ += op.size();
        emit(TokKind::Op, std::string(op), start);
    }
};

inline LexResult lex(std::string_view src) { return Lexer(src).run(); }

}  // namespace ink::pyfqn
