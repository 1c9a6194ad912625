// JavaScript / TypeScript front-end. TypeScript-only syntax (annotations,
// generics, interfaces, enums, declare blocks) is consumed and dropped; what
// remains is lowered onto the same node model as Python.

#include "cryptaudit/ast.hpp"

#include "string_escape.hpp"

#include <array>
#include <cctype>
#include <string_view>
#include <tuple>

namespace cryptaudit::ast {
namespace {

enum class Tok { Name, Number, String, Template, Regex, Op, End };

struct TemplatePart {
    bool expr = false;
    std::string text;  // cooked literal, or raw expression source
    Position pos;
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Position pos;
    size_t begin = 0;
    size_t end = 0;
    bool nl_before = false;
    std::vector<TemplatePart> parts;
};

struct SyntaxError {
    Position pos;
    std::string message;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

// '>' is always emitted alone so nested generics close cleanly; the parser
// glues adjacent '>' tokens back into shift / comparison operators.
constexpr std::array<std::string_view, 38> kOps = {
    "...", "===", "!==", "**=", "<<=", "&&=", "||=", "?\?=", "=>", "==", "!=", "<=", "&&",
    "||",  "??",  "?.",  "++",  "--",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=",
    "**",  "<<",  "{",   "}",   "(",   ")",   "[",   "]",   ";",  ",",  "<",  ">"};

bool regex_after_keyword(std::string_view w) {
    static constexpr std::array<std::string_view, 15> kWords = {
        "return", "typeof", "instanceof", "in",   "of",    "new",  "delete", "void",
        "throw",  "case",   "do",         "else", "yield", "await", "extends"};
    for (auto k : kWords) {
        if (k == w) return true;
    }
    return false;
}

class Lexer {
public:
    Lexer(std::string_view src, std::vector<Diagnostic>& diags, Position base = {})
        : src_(src), diags_(diags), line_(base.line), first_line_(base.line), col_base_(base.column) {}

    std::vector<Token> run() {
        if (src_.substr(0, 2) == "#!") skip_line();
        bool nl = true;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '\n') {
                bump();
                nl = true;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                ++i_;
                continue;
            }
            if (c == '/' && peek_char(1) == '/') {
                skip_line();
                continue;
            }
            if (c == '/' && peek_char(1) == '*') {
                const Position p = pos();
                i_ += 2;
                bool closed = false;
                while (i_ < src_.size()) {
                    if (src_[i_] == '*' && peek_char(1) == '/') {
                        i_ += 2;
                        closed = true;
                        break;
                    }
                    if (src_[i_] == '\n') nl = true;
                    bump();
                }
                if (!closed) diags_.push_back({p, "unterminated comment"});
                continue;
            }
            Token t;
            t.pos = pos();
            t.begin = i_;
            t.nl_before = nl;
            nl = false;
            const auto uc = static_cast<unsigned char>(c);
            if (ident_start(uc) || (c == '#' && i_ + 1 < src_.size() &&
                                    ident_start(static_cast<unsigned char>(src_[i_ + 1])))) {
                ++i_;
                while (i_ < src_.size() && ident_char(static_cast<unsigned char>(src_[i_]))) ++i_;
                t.kind = Tok::Name;
                t.text = std::string(src_.substr(t.begin, i_ - t.begin));
            } else if (std::isdigit(uc) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek_char(1))))) {
                lex_number(t);
            } else if (c == '"' || c == '\'') {
                lex_string(t);
            } else if (c == '`') {
                lex_template(t);
            } else if (c == '/' && regex_allowed() && lex_regex(t)) {
                // handled
            } else {
                lex_op(t);
            }
            t.end = i_;
            tokens_.push_back(std::move(t));
        }
        Token end;
        end.kind = Tok::End;
        end.pos = pos();
        end.begin = end.end = i_;
        end.nl_before = true;
        tokens_.push_back(std::move(end));
        return std::move(tokens_);
    }

private:
    char peek_char(size_t k) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }

    Position pos() const {
        const int col = static_cast<int>(i_ - line_start_);
        return {line_, line_ == first_line_ ? col + col_base_ : col};
    }

    void bump() {
        if (src_[i_] == '\n') {
            ++i_;
            ++line_;
            line_start_ = i_;
        } else {
            ++i_;
        }
    }

    void skip_line() {
        while (i_ < src_.size() && src_[i_] != '\n') ++i_;
    }

    bool regex_allowed() const {
        if (tokens_.empty()) return true;
        const Token& prev = tokens_.back();
        switch (prev.kind) {
            case Tok::Name: return regex_after_keyword(prev.text);
            case Tok::Op:
                return prev.text != ")" && prev.text != "]" && prev.text != "}" && prev.text != "++" &&
                       prev.text != "--";
            default: return false;
        }
    }

    void lex_number(Token& t) {
        const bool hex = src_[i_] == '0' && (peek_char(1) == 'x' || peek_char(1) == 'X');
        const size_t b = i_;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
                ++i_;
            } else if ((c == '+' || c == '-') && !hex && i_ > b && (src_[i_ - 1] == 'e' || src_[i_ - 1] == 'E')) {
                ++i_;
            } else {
                break;
            }
        }
        t.kind = Tok::Number;
        t.text = std::string(src_.substr(b, i_ - b));
    }

    void lex_string(Token& t) {
        const char q = src_[i_++];
        const size_t b = i_;
        bool closed = false;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '\\' && i_ + 1 < src_.size()) {
                ++i_;
                bump();
                continue;
            }
            if (c == '\n') break;
            if (c == q) {
                closed = true;
                break;
            }
            ++i_;
        }
        t.kind = Tok::String;
        t.text = decode_js_escapes(src_.substr(b, i_ - b));
        if (closed) {
            ++i_;
        } else {
            diags_.push_back({t.pos, "unterminated string literal"});
        }
    }

    // Skips an embedded expression up to its closing '}' (not consumed).
    void skip_embedded() {
        int depth = 0;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '}' && depth == 0) return;
            if (c == '{') ++depth;
            if (c == '}') --depth;
            if (c == '"' || c == '\'') {
                Token scratch;
                scratch.pos = pos();
                lex_string(scratch);
                continue;
            }
            if (c == '`') {
                Token scratch;
                scratch.pos = pos();
                lex_template(scratch);
                continue;
            }
            if (c == '/' && peek_char(1) == '/') {
                skip_line();
                continue;
            }
            if (c == '/' && peek_char(1) == '*') {
                i_ += 2;
                while (i_ < src_.size() && !(src_[i_] == '*' && peek_char(1) == '/')) bump();
                i_ = std::min(src_.size(), i_ + 2);
                continue;
            }
            bump();
        }
    }

    void lex_template(Token& t) {
        t.kind = Tok::Template;
        ++i_;
        std::string raw;
        Position lit_pos = pos();
        bool closed = false;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '\\' && i_ + 1 < src_.size()) {
                raw += c;
                ++i_;
                raw += src_[i_];
                bump();
                continue;
            }
            if (c == '`') {
                ++i_;
                closed = true;
                break;
            }
            if (c == '$' && peek_char(1) == '{') {
                if (!raw.empty()) t.parts.push_back({false, decode_js_escapes(raw), lit_pos});
                raw.clear();
                i_ += 2;
                const Position expr_pos = pos();
                const size_t b = i_;
                skip_embedded();
                t.parts.push_back({true, std::string(src_.substr(b, i_ - b)), expr_pos});
                if (i_ < src_.size()) ++i_;
                lit_pos = pos();
                continue;
            }
            raw += c;
            bump();
        }
        if (!raw.empty()) t.parts.push_back({false, decode_js_escapes(raw), lit_pos});
        if (!closed) diags_.push_back({t.pos, "unterminated template literal"});
    }

    bool lex_regex(Token& t) {
        size_t j = i_ + 1;
        bool in_class = false;
        while (j < src_.size()) {
            const char c = src_[j];
            if (c == '\n') return false;
            if (c == '\\') {
                j += 2;
                continue;
            }
            if (c == '[') in_class = true;
            if (c == ']') in_class = false;
            if (c == '/' && !in_class) break;
            ++j;
        }
        if (j >= src_.size()) return false;
        ++j;
        while (j < src_.size() && ident_char(static_cast<unsigned char>(src_[j]))) ++j;
        t.kind = Tok::Regex;
        t.text = std::string(src_.substr(i_, j - i_));
        i_ = j;
        return true;
    }

    void lex_op(Token& t) {
        t.kind = Tok::Op;
        for (auto op : kOps) {
            if (src_.substr(i_, op.size()) == op) {
                if (op == "?." && std::isdigit(static_cast<unsigned char>(peek_char(2)))) continue;
                i_ += op.size();
                t.text = std::string(op);
                return;
            }
        }
        t.text = std::string(1, src_[i_++]);
    }

    std::string_view src_;
    std::vector<Diagnostic>& diags_;
    size_t i_ = 0;
    size_t line_start_ = 0;
    int line_ = 1;
    int first_line_ = 1;
    int col_base_ = 0;
    std::vector<Token> tokens_;
};

bool is_reserved(std::string_view w) {
    static constexpr std::array<std::string_view, 24> kReserved = {
        "break",  "case",   "catch", "continue", "debugger", "default", "do",     "else",
        "export", "extends", "finally", "for",   "if",       "return",  "switch", "throw",
        "try",    "var",    "const", "while",    "with",     "in",      "instanceof", "enum"};
    for (auto r : kReserved) {
        if (r == w) return true;
    }
    return false;
}

bool is_modifier(std::string_view w) {
    return w == "public" || w == "private" || w == "protected" || w == "readonly" || w == "static" ||
           w == "abstract" || w == "override" || w == "declare" || w == "async" || w == "get" ||
           w == "set" || w == "accessor";
}

int binary_precedence(std::string_view op) {
    if (op == "??") return 1;
    if (op == "||") return 2;
    if (op == "&&") return 3;
    if (op == "|") return 4;
    if (op == "^") return 5;
    if (op == "&") return 6;
    if (op == "==" || op == "!=" || op == "===" || op == "!==") return 7;
    if (op == "<" || op == ">" || op == "<=" || op == ">=" || op == "instanceof" || op == "in") return 8;
    if (op == "<<" || op == ">>" || op == ">>>") return 9;
    if (op == "+" || op == "-") return 10;
    if (op == "*" || op == "/" || op == "%") return 11;
    if (op == "**") return 12;
    return -1;
}

bool is_assign_op(std::string_view op) {
    static constexpr std::array<std::string_view, 16> kOps = {
        "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=", "|=", "^=", "&&=", "||=", "?\?="};
    for (auto o : kOps) {
        if (o == op) return true;
    }
    return false;
}

std::string strip_node_prefix(std::string module) {
    if (module.rfind("node:", 0) == 0) module.erase(0, 5);
    return module;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, bool typescript, std::vector<Diagnostic>& diags)
        : toks_(std::move(tokens)), ts_(typescript), diags_(diags) {
        match_.assign(toks_.size(), -1);
        std::vector<size_t> stack;
        for (size_t k = 0; k < toks_.size(); ++k) {
            const Token& t = toks_[k];
            if (t.kind != Tok::Op) continue;
            if (t.text == "(" || t.text == "[" || t.text == "{") {
                stack.push_back(k);
            } else if (t.text == ")" || t.text == "]" || t.text == "}") {
                const char open = t.text == ")" ? '(' : t.text == "]" ? '[' : '{';
                if (!stack.empty() && toks_[stack.back()].text[0] == open) {
                    match_[stack.back()] = static_cast<long>(k);
                    match_[k] = static_cast<long>(stack.back());
                    stack.pop_back();
                }
            }
        }
    }

    NodePtr parse_module() {
        auto mod = make_node(NodeKind::Module, {1, 0});
        while (!at(Tok::End)) {
            if (at_op("}") || at_op(")") || at_op("]")) {
                diags_.push_back({peek().pos, "unbalanced '" + peek().text + "'"});
                advance();
                continue;
            }
            statement(*mod);
        }
        return mod;
    }

    NodePtr parse_expression_only() {
        if (at(Tok::End)) return nullptr;
        try {
            return expression();
        } catch (const SyntaxError& e) {
            diags_.push_back({e.pos, e.message});
            return nullptr;
        }
    }

private:
    // -- token helpers ------------------------------------------------------
    const Token& peek(size_t k = 0) const { return toks_[std::min(idx_ + k, toks_.size() - 1)]; }
    bool at(Tok kind) const { return peek().kind == kind; }
    bool at_op(std::string_view op, size_t k = 0) const {
        return peek(k).kind == Tok::Op && peek(k).text == op;
    }
    bool at_kw(std::string_view w, size_t k = 0) const {
        return peek(k).kind == Tok::Name && peek(k).text == w;
    }
    const Token& advance() {
        const Token& t = peek();
        if (idx_ < toks_.size() - 1) ++idx_;
        return t;
    }
    [[noreturn]] void fail(std::string msg) const { throw SyntaxError{peek().pos, std::move(msg)}; }
    void expect_op(std::string_view op) {
        if (!at_op(op)) fail("expected '" + std::string(op) + "'");
        advance();
    }
    std::string expect_name() {
        if (!at(Tok::Name)) fail("expected identifier");
        return advance().text;
    }
    void semicolon() {
        if (at_op(";")) {
            advance();
            return;
        }
        if (at_op("}") || at(Tok::End) || peek().nl_before) return;
        fail("expected ';'");
    }
    // Jumps past the bracket group starting at the current token.
    void skip_group() {
        const long m = match_[idx_];
        if (m < 0) fail("unbalanced '" + peek().text + "'");
        idx_ = static_cast<size_t>(m) + 1;
    }
    bool adjacent(size_t k) const { return peek(k).begin == peek(k - 1).end; }

    // Glues '>' tokens (and a following '=') into the longest operator.
    std::pair<std::string, int> gt_operator() const {
        std::string op = ">";
        int n = 1;
        while (n < 3 && peek(static_cast<size_t>(n)).kind == Tok::Op &&
               adjacent(static_cast<size_t>(n)) && peek(static_cast<size_t>(n)).text == ">") {
            op += ">";
            ++n;
        }
        const Token& nx = peek(static_cast<size_t>(n));
        if (nx.kind == Tok::Op && adjacent(static_cast<size_t>(n)) && nx.text == "=") {
            op += "=";
            ++n;
        }
        return {op, n};
    }

    bool starts_expression(size_t k = 0) const {
        const Token& t = peek(k);
        switch (t.kind) {
            case Tok::Name: return !is_reserved(t.text);
            case Tok::Number:
            case Tok::String:
            case Tok::Template:
            case Tok::Regex: return true;
            case Tok::Op:
                return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
                       t.text == "!" || t.text == "~" || t.text == "++" || t.text == "--" ||
                       t.text == "<" || t.text == "@";
            default: return false;
        }
    }

    // -- TypeScript skipping --------------------------------------------------
    void skip_angles() {
        if (!at_op("<")) return;
        int depth = 0;
        while (!at(Tok::End)) {
            if (at_op("<")) {
                ++depth;
                advance();
            } else if (at_op(">")) {
                --depth;
                advance();
                if (depth == 0) return;
            } else if (at_op("(") || at_op("[") || at_op("{")) {
                skip_group();
            } else if (at_op(";") || at_op(")") || at_op("]") || at_op("}")) {
                fail("unterminated type arguments");
            } else {
                advance();
            }
        }
        fail("unterminated type arguments");
    }

    // Lookahead: does a type-argument list start here and get followed by a call?
    bool type_args_then_call() const {
        if (!at_op("<")) return false;
        int depth = 0;
        size_t k = idx_;
        while (k < toks_.size()) {
            const Token& t = toks_[k];
            if (t.kind == Tok::Op) {
                if (t.text == "<") {
                    ++depth;
                } else if (t.text == ">") {
                    if (--depth == 0) {
                        const Token& nx = toks_[std::min(k + 1, toks_.size() - 1)];
                        return (nx.kind == Tok::Op && nx.text == "(") || nx.kind == Tok::Template;
                    }
                } else if (t.text == "(" || t.text == "[" || t.text == "{") {
                    if (match_[k] < 0) return false;
                    k = static_cast<size_t>(match_[k]);
                } else if (t.text != "," && t.text != "." && t.text != "|" && t.text != "&" &&
                           t.text != "?" && t.text != ":" && t.text != "=>" && t.text != "=" &&
                           t.text != "..." && t.text != "-") {
                    return false;
                }
            } else if (t.kind == Tok::End || t.kind == Tok::Regex) {
                return false;
            }
            ++k;
        }
        return false;
    }

    void skip_type() {
        if (at_op("|") || at_op("&")) advance();
        skip_type_operand();
        while (at_op("|") || at_op("&")) {
            advance();
            skip_type_operand();
        }
        if (at_kw("extends") && !peek().nl_before) {
            advance();
            skip_type();
            expect_op("?");
            skip_type();
            expect_op(":");
            skip_type();
        }
    }

    void skip_type_operand() {
        while (at_kw("keyof") || at_kw("unique") || at_kw("readonly") || at_kw("infer")) advance();
        if (at_kw("typeof")) {
            advance();
            expect_name();
            while (at_op(".")) {
                advance();
                expect_name();
            }
        } else if (at_op("(")) {
            skip_group();
            if (at_op("=>")) {
                advance();
                skip_type();
                return;
            }
        } else if (at_kw("new") || at_kw("abstract")) {
            while (at_kw("new") || at_kw("abstract")) advance();
            skip_angles();
            if (!at_op("(")) fail("expected constructor type parameters");
            skip_group();
            expect_op("=>");
            skip_type();
            return;
        } else if (at_op("<")) {
            skip_angles();
            if (!at_op("(")) fail("expected function type parameters");
            skip_group();
            expect_op("=>");
            skip_type();
            return;
        } else if (at_op("{") || at_op("[")) {
            skip_group();
        } else if (at(Tok::String) || at(Tok::Number) || at(Tok::Template)) {
            advance();
        } else if (at_op("-")) {
            advance();
            if (!at(Tok::Number)) fail("expected number type");
            advance();
        } else if (at(Tok::Name)) {
            if (at_kw("asserts") && peek(1).kind == Tok::Name && !peek(1).nl_before) advance();
            advance();
            while (at_op(".")) {
                advance();
                expect_name();
            }
            if (at_op("<") && !peek().nl_before) skip_angles();
            if (at_kw("is") && !peek().nl_before) {
                advance();
                skip_type();
                return;
            }
        } else {
            fail("expected type");
        }
        while (at_op("[") && !peek().nl_before) skip_group();
    }

    void skip_annotation() {
        if (at_op(":")) {
            advance();
            skip_type();
        }
    }

    // declare / interface / type / enum: drop the whole declaration.
    void skip_declaration() {
        while (!at(Tok::End)) {
            if (at_op(";")) {
                advance();
                return;
            }
            if (at_op("}")) return;
            if (at_op("{")) {
                skip_group();
                if (peek().nl_before || at(Tok::End)) return;
                continue;
            }
            if (at_op("(") || at_op("[")) {
                skip_group();
                continue;
            }
            advance();
            if (peek().nl_before && !at_op("{") && !at_op("|") && !at_op("&") && !at_op(".") &&
                !at_op("=>") && !at_op("=")) {
                const Token& prev = toks_[idx_ - 1];
                const bool continues = prev.kind == Tok::Op && prev.text != ")" && prev.text != "]" &&
                                       prev.text != ">";
                if (!continues) return;
            }
        }
    }

    // -- statements -----------------------------------------------------------
    void statement(Node& owner) {
        const size_t start = idx_;
        try {
            statement_inner(owner);
        } catch (const SyntaxError& e) {
            diags_.push_back({e.pos, e.message});
            auto err = make_node(NodeKind::ErrorNode, e.pos, e.message);
            recover(*err, start);
            owner.add(std::move(err));
            if (idx_ == start) advance();
        }
    }

    void recover(Node& err, size_t start) {
        while (!at(Tok::End) && !at_op("}")) {
            if (at_op(";")) {
                advance();
                return;
            }
            if (at_op("{")) {
                const long m = match_[idx_];
                advance();
                while (!at(Tok::End) && !at_op("}")) statement(err);
                if (at_op("}")) advance();
                if (m < 0 || peek().nl_before) return;
                continue;
            }
            if ((at_op("(") || at_op("[")) && match_[idx_] >= 0) {
                skip_group();
            } else {
                advance();
            }
            if (peek().nl_before && idx_ > start) return;
        }
    }

    void block_body(Node& owner) {
        expect_op("{");
        while (!at_op("}") && !at(Tok::End)) statement(owner);
        if (at(Tok::End)) {
            diags_.push_back({peek().pos, "unexpected end of file"});
            return;
        }
        advance();
    }

    void body_into(Node& blk) {
        if (at_op("{")) {
            block_body(blk);
        } else {
            statement(blk);
        }
    }

    void statement_inner(Node& owner) {
        const Token& t = peek();
        if (t.kind == Tok::Op) {
            if (t.text == "{") {
                auto blk = make_node(NodeKind::Block, t.pos, "block");
                block_body(*blk);
                owner.add(std::move(blk));
                return;
            }
            if (t.text == ";") {
                advance();
                return;
            }
            if (t.text == "@") {
                auto decorators = parse_decorators();
                while (at_kw("export") || at_kw("default") || at_kw("abstract") || at_kw("declare")) advance();
                if (!at_kw("class")) fail("decorator must precede a class");
                NodePtr cls = class_node(std::move(decorators), true);
                owner.add(std::move(cls));
                return;
            }
            return expression_statement(owner);
        }
        if (t.kind != Tok::Name) return expression_statement(owner);

        const std::string w = t.text;
        const Token& nx = peek(1);
        const bool same_line = !nx.nl_before;
        if (w == "var" || w == "const" || (w == "let" && (nx.kind == Tok::Name || at_op("[", 1) || at_op("{", 1)))) {
            if (w == "const" && at_kw("enum", 1)) {
                skip_declaration();
                return;
            }
            advance();
            var_declarations(owner);
            semicolon();
            return;
        }
        if (w == "function") {
            owner.add(function_node(t.pos));
            return;
        }
        if (w == "async" && at_kw("function", 1) && same_line) {
            advance();
            owner.add(function_node(peek().pos));
            return;
        }
        if (w == "class") {
            owner.add(class_node({}, true));
            return;
        }
        if (w == "if") return if_statement(owner);
        if (w == "for") return for_statement(owner);
        if (w == "while") {
            auto blk = make_node(NodeKind::Block, advance().pos, "while");
            expect_op("(");
            blk->add(expression());
            expect_op(")");
            body_into(*blk);
            owner.add(std::move(blk));
            return;
        }
        if (w == "do") {
            auto blk = make_node(NodeKind::Block, advance().pos, "do");
            body_into(*blk);
            if (!at_kw("while")) fail("expected 'while'");
            advance();
            expect_op("(");
            blk->add(expression());
            expect_op(")");
            if (at_op(";")) advance();
            owner.add(std::move(blk));
            return;
        }
        if (w == "try") return try_statement(owner);
        if (w == "switch") return switch_statement(owner);
        if (w == "return" || w == "throw") {
            const Position p = advance().pos;
            auto node = w == "return" ? make_node(NodeKind::Return, p) : make_node(NodeKind::Statement, p, "throw");
            if (!peek().nl_before && !at_op(";") && !at_op("}") && !at(Tok::End)) node->add(expression());
            semicolon();
            owner.add(std::move(node));
            return;
        }
        if (w == "break" || w == "continue") {
            advance();
            if (at(Tok::Name) && !peek().nl_before) advance();
            semicolon();
            return;
        }
        if (w == "debugger") {
            advance();
            semicolon();
            return;
        }
        if (w == "with") {
            auto blk = make_node(NodeKind::Block, advance().pos, "with");
            expect_op("(");
            blk->add(expression());
            expect_op(")");
            body_into(*blk);
            owner.add(std::move(blk));
            return;
        }
        if (w == "import" && !at_op("(", 1) && !at_op(".", 1)) return import_declaration(owner);
        if (w == "export") return export_declaration(owner);
        if (ts_ || w == "enum") {
            if ((w == "interface" || w == "enum") && nx.kind == Tok::Name && same_line) {
                skip_declaration();
                return;
            }
            if (w == "type" && nx.kind == Tok::Name && same_line) {
                advance();
                advance();
                skip_angles();
                expect_op("=");
                skip_type();
                semicolon();
                return;
            }
            if (w == "declare" && same_line && nx.kind == Tok::Name) {
                skip_declaration();
                return;
            }
            if ((w == "namespace" || w == "module") && same_line &&
                (nx.kind == Tok::Name || nx.kind == Tok::String)) {
                auto blk = make_node(NodeKind::Block, advance().pos, "namespace");
                advance();
                while (at_op(".")) {
                    advance();
                    expect_name();
                }
                if (at_op("{")) {
                    block_body(*blk);
                } else {
                    semicolon();
                }
                owner.add(std::move(blk));
                return;
            }
            if (w == "abstract" && at_kw("class", 1)) {
                advance();
                owner.add(class_node({}, true));
                return;
            }
        }
        if (at_op(":", 1) && !is_reserved(w)) {
            advance();
            advance();
            statement(owner);
            return;
        }
        expression_statement(owner);
    }

    void expression_statement(Node& owner) {
        const Position p = peek().pos;
        NodePtr e = expression();
        semicolon();
        if (e->kind == NodeKind::Assign || e->kind == NodeKind::AugAssign) {
            owner.add(std::move(e));
            return;
        }
        auto s = make_node(NodeKind::ExprStmt, p);
        s->add(std::move(e));
        owner.add(std::move(s));
    }

    NodePtr binding_target() {
        if (at_op("[")) return array_literal();
        if (at_op("{")) return object_literal();
        const Token& n = peek();
        if (n.kind != Tok::Name) fail("expected binding name");
        advance();
        return make_node(NodeKind::Name, n.pos, n.text);
    }

    // Declarators after var/let/const; leaves `for (x of ...)` heads intact.
    void var_declarations(Node& owner, NodePtr* for_head = nullptr) {
        while (true) {
            NodePtr target = binding_target();
            if (at_op("!")) advance();
            skip_annotation();
            if (at_op("=")) {
                advance();
                auto a = make_node(NodeKind::Assign, target->pos);
                a->flags |= flag::kDeclaration;
                a->add(std::move(target));
                a->add(assignment());
                owner.add(std::move(a));
            } else if (for_head != nullptr && (at_kw("of") || at_kw("in"))) {
                *for_head = std::move(target);
                return;
            }
            if (!at_op(",")) break;
            advance();
        }
    }

    void if_statement(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "if");
        expect_op("(");
        blk->add(expression());
        expect_op(")");
        body_into(*blk);
        if (at_kw("else")) {
            advance();
            body_into(*blk);
        }
        owner.add(std::move(blk));
    }

    void for_statement(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "for");
        if (at_kw("await")) advance();
        expect_op("(");
        NodePtr head;
        const bool saved = no_in_;
        no_in_ = true;
        if (at_kw("var") || at_kw("let") || at_kw("const")) {
            advance();
            var_declarations(*blk, &head);
        } else if (!at_op(";")) {
            head = expression();
        }
        no_in_ = saved;
        if (at_kw("of") || at_kw("in")) {
            advance();
            if (head) {
                auto target = make_node(NodeKind::Target, head->pos);
                target->add(std::move(head));
                blk->add(std::move(target));
            }
            blk->add(assignment());
        } else {
            if (head) blk->add(std::move(head));
            expect_op(";");
            if (!at_op(";")) blk->add(expression());
            expect_op(";");
            if (!at_op(")")) blk->add(expression());
        }
        expect_op(")");
        body_into(*blk);
        owner.add(std::move(blk));
    }

    void try_statement(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "try");
        block_body(*blk);
        if (at_kw("catch")) {
            advance();
            if (at_op("(")) {
                advance();
                auto target = make_node(NodeKind::Target, peek().pos);
                target->add(binding_target());
                skip_annotation();
                blk->add(std::move(target));
                expect_op(")");
            }
            block_body(*blk);
        }
        if (at_kw("finally")) {
            advance();
            block_body(*blk);
        }
        owner.add(std::move(blk));
    }

    void switch_statement(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "switch");
        expect_op("(");
        blk->add(expression());
        expect_op(")");
        expect_op("{");
        while (!at_op("}") && !at(Tok::End)) {
            if (at_kw("case")) {
                advance();
                blk->add(expression());
                expect_op(":");
            } else if (at_kw("default") && at_op(":", 1)) {
                advance();
                advance();
            } else {
                statement(*blk);
            }
        }
        expect_op("}");
        owner.add(std::move(blk));
    }

    void import_declaration(Node& owner) {
        const Position p = advance().pos;
        if (ts_ && at_kw("type") && !at_op(",", 1) && !at_kw("from", 1)) {
            skip_declaration();
            return;
        }
        auto imp = make_node(NodeKind::Import, p);
        if (at(Tok::String)) {
            imp->text = strip_node_prefix(advance().text);
            semicolon();
            owner.add(std::move(imp));
            return;
        }
        struct Pending {
            std::string local;
            std::string imported;  // empty: whole module
            Position pos;
        };
        std::vector<Pending> pending;
        if (at(Tok::Name) && !at_kw("from")) {
            const Token& n = advance();
            if (at_op("=")) {  // import x = require("m") / import x = A.B
                advance();
                if (at_kw("require") && at_op("(", 1) && peek(2).kind == Tok::String) {
                    advance();
                    advance();
                    imp->text = strip_node_prefix(advance().text);
                    expect_op(")");
                    auto alias = make_node(NodeKind::ImportAlias, n.pos, n.text);
                    alias->value = imp->text;
                    imp->add(std::move(alias));
                } else {
                    skip_declaration();
                    owner.add(std::move(imp));
                    return;
                }
                semicolon();
                owner.add(std::move(imp));
                return;
            }
            pending.push_back({n.text, {}, n.pos});
            if (at_op(",")) advance();
        }
        if (at_op("*")) {
            advance();
            if (!at_kw("as")) fail("expected 'as'");
            advance();
            const Token& n = advance();
            pending.push_back({n.text, {}, n.pos});
        } else if (at_op("{")) {
            advance();
            while (!at_op("}")) {
                if (at_kw("type") && (peek(1).kind == Tok::Name || peek(1).kind == Tok::String) &&
                    !at_kw("as", 1)) {
                    advance();
                }
                const Token& n = advance();
                if (n.kind != Tok::Name && n.kind != Tok::String) fail("expected import name");
                std::string local = n.text;
                Position lp = n.pos;
                if (at_kw("as")) {
                    advance();
                    lp = peek().pos;
                    local = expect_name();
                }
                pending.push_back({local, n.text, lp});
                if (!at_op(",")) break;
                advance();
            }
            expect_op("}");
        }
        if (!at_kw("from")) fail("expected 'from'");
        advance();
        if (!at(Tok::String)) fail("expected module specifier");
        imp->text = strip_node_prefix(advance().text);
        if ((at_kw("assert") || at_kw("with")) && at_op("{", 1)) {
            advance();
            skip_group();
        }
        semicolon();
        for (auto& pd : pending) {
            auto alias = make_node(NodeKind::ImportAlias, pd.pos, pd.local);
            alias->value = pd.imported.empty() ? imp->text : imp->text + "." + pd.imported;
            imp->add(std::move(alias));
        }
        owner.add(std::move(imp));
    }

    void export_declaration(Node& owner) {
        advance();
        if (at_kw("default")) {
            advance();
            if (at_kw("function") || (at_kw("async") && at_kw("function", 1))) {
                if (at_kw("async")) advance();
                owner.add(function_node(peek().pos));
                return;
            }
            if (at_kw("class") || (at_kw("abstract") && at_kw("class", 1))) {
                if (at_kw("abstract")) advance();
                owner.add(class_node({}, false));
                return;
            }
            if (at_op("@")) {
                auto decorators = parse_decorators();
                owner.add(class_node(std::move(decorators), false));
                return;
            }
            return expression_statement(owner);
        }
        if (at_op("*") || at_op("{") || (at_kw("type") && at_op("{", 1))) {
            skip_declaration();
            return;
        }
        if (at_op("=")) {
            advance();
            return expression_statement(owner);
        }
        if (at_kw("as") || at_kw("import")) {
            skip_declaration();
            return;
        }
        statement_inner(owner);
    }

    std::vector<NodePtr> parse_decorators() {
        std::vector<NodePtr> out;
        while (at_op("@")) {
            auto d = make_node(NodeKind::Decorator, advance().pos);
            d->add(call_member());
            out.push_back(std::move(d));
        }
        return out;
    }

    // -- functions and classes -----------------------------------------------
    // At 'function'. Named declarations and expressions share this path.
    NodePtr function_node(Position pos) {
        advance();  // function
        if (at_op("*")) advance();
        std::string name;
        if (at(Tok::Name) && !at_op("(")) name = advance().text;
        auto fn = make_node(NodeKind::FunctionDef, pos, name);
        if (!name.empty()) fn->pos = toks_[idx_ - 1].pos;
        function_rest(*fn);
        return fn;
    }

    // Type parameters, parameter list, return type and body.
    void function_rest(Node& fn) {
        if (ts_) skip_angles();
        parameters(fn);
        skip_annotation();
        if (at_op("{")) {
            block_body(fn);
        } else {
            semicolon();  // overload signature or abstract member
        }
    }

    void parameters(Node& fn) {
        expect_op("(");
        while (!at_op(")")) {
            while (at_op("@")) {
                advance();
                (void)call_member();
            }
            while (at(Tok::Name) && is_modifier(peek().text) &&
                   (peek(1).kind == Tok::Name || at_op("[", 1) || at_op("{", 1))) {
                advance();
            }
            const bool rest = at_op("...");
            if (rest) advance();
            if (ts_ && at_kw("this") && (at_op(":", 1) || at_op(")", 1) || at_op(",", 1))) {
                advance();
                skip_annotation();
            } else {
                NodePtr target = binding_target();
                NodePtr prm;
                if (target->kind == NodeKind::Name) {
                    prm = make_node(NodeKind::Param, target->pos, target->text);
                } else {
                    prm = make_node(NodeKind::Param, target->pos, "");
                    prm->add(std::move(target));
                }
                if (at_op("?")) advance();
                skip_annotation();
                if (at_op("=")) {
                    advance();
                    prm->add(assignment());
                }
                fn.add(std::move(prm));
            }
            if (!at_op(",")) break;
            advance();
        }
        expect_op(")");
    }

    NodePtr class_node(std::vector<NodePtr> decorators, bool declaration) {
        const Position kw = advance().pos;  // class
        std::string name;
        Position p = kw;
        if (at(Tok::Name) && !at_kw("extends") && !at_kw("implements")) {
            p = peek().pos;
            name = advance().text;
        }
        (void)declaration;
        auto cls = make_node(NodeKind::ClassDef, p, name);
        for (auto& d : decorators) cls->add(std::move(d));
        if (ts_) skip_angles();
        if (at_kw("extends")) {
            auto bases = make_node(NodeKind::Statement, advance().pos, "bases");
            bases->add(call_member());
            if (ts_ && at_op("<")) skip_angles();
            cls->add(std::move(bases));
        }
        if (at_kw("implements")) {
            advance();
            skip_type();
            while (at_op(",")) {
                advance();
                skip_type();
            }
        }
        expect_op("{");
        while (!at_op("}") && !at(Tok::End)) class_member(*cls);
        expect_op("}");
        return cls;
    }

    void class_member(Node& cls) {
        const size_t start = idx_;
        try {
            class_member_inner(cls);
        } catch (const SyntaxError& e) {
            diags_.push_back({e.pos, e.message});
            auto err = make_node(NodeKind::ErrorNode, e.pos, e.message);
            recover(*err, start);
            cls.add(std::move(err));
            if (idx_ == start) advance();
        }
    }

    bool member_name_follows(size_t k) const {
        const Token& t = peek(k);
        if (t.nl_before && k > 0 && peek(k - 1).text == "async") return false;
        return t.kind == Tok::Name || t.kind == Tok::String || t.kind == Tok::Number ||
               (t.kind == Tok::Op && (t.text == "[" || t.text == "*" || t.text == "{"));
    }

    void class_member_inner(Node& cls) {
        if (at_op(";")) {
            advance();
            return;
        }
        std::vector<NodePtr> decorators = parse_decorators();
        if (at_kw("static") && at_op("{", 1)) {
            advance();
            auto blk = make_node(NodeKind::Block, peek().pos, "static");
            block_body(*blk);
            cls.add(std::move(blk));
            return;
        }
        while (at(Tok::Name) && is_modifier(peek().text) && member_name_follows(1) && !at_op("{", 1)) {
            advance();
        }
        if (at_op("*")) advance();
        std::string name;
        Position p = peek().pos;
        if (at_op("[")) {
            // Index signature or computed key.
            if (peek(1).kind == Tok::Name && at_op(":", 2)) {
                skip_group();
                skip_annotation();
                semicolon();
                return;
            }
            advance();
            NodePtr key = assignment();
            expect_op("]");
            name = "<computed>";
            (void)key;
        } else if (at(Tok::Name) || at(Tok::String) || at(Tok::Number)) {
            name = advance().text;
        } else {
            fail("expected class member");
        }
        if (at_op("?") || at_op("!")) advance();
        if (at_op("(") || at_op("<")) {
            auto fn = make_node(NodeKind::FunctionDef, p, name);
            for (auto& d : decorators) fn->add(std::move(d));
            function_rest(*fn);
            cls.add(std::move(fn));
            return;
        }
        for (auto& d : decorators) {
            auto s = make_node(NodeKind::ExprStmt, d->pos);
            s->add(std::move(d->children[0]));
            cls.add(std::move(s));
        }
        skip_annotation();
        if (at_op("=")) {
            advance();
            auto a = make_node(NodeKind::Assign, p);
            a->flags |= flag::kDeclaration;
            a->add(make_node(NodeKind::Name, p, name));
            a->add(assignment());
            cls.add(std::move(a));
        }
        semicolon();
    }

    // -- expressions ------------------------------------------------------------
    NodePtr expression() {
        NodePtr e = assignment();
        if (!at_op(",")) return e;
        while (at_op(",")) {
            const Position p = advance().pos;
            auto b = make_node(NodeKind::Binary, p, ",");
            b->add(std::move(e));
            b->add(assignment());
            e = std::move(b);
        }
        return e;
    }

    NodePtr arrow_body(NodePtr fn) {
        expect_op("=>");
        if (at_op("{")) {
            const bool saved = no_in_;
            no_in_ = false;
            block_body(*fn);
            no_in_ = saved;
        } else {
            auto r = make_node(NodeKind::Return, peek().pos);
            r->add(assignment());
            fn->add(std::move(r));
        }
        return fn;
    }

    // Tries `(params) [: type] =>` at the current '(' or '<'; restores on failure.
    NodePtr try_arrow(Position pos) {
        const size_t save = idx_;
        const size_t diag_mark = diags_.size();
        auto fn = make_node(NodeKind::FunctionDef, pos, "");
        try {
            if (at_op("<")) skip_angles();
            parameters(*fn);
            skip_annotation();
            if (!at_op("=>") || peek().nl_before) fail("not an arrow function");
        } catch (const SyntaxError&) {
            idx_ = save;
            diags_.resize(diag_mark);
            return nullptr;
        }
        return arrow_body(std::move(fn));
    }

    NodePtr maybe_arrow() {
        const Position p = peek().pos;
        size_t k = 0;
        if (at_kw("async") && !peek(1).nl_before && (peek(1).kind == Tok::Name || at_op("(", 1) || at_op("<", 1))) {
            k = 1;
        }
        const Token& t = peek(k);
        if (t.kind == Tok::Name && !is_reserved(t.text) && at_op("=>", k + 1) && !peek(k + 1).nl_before) {
            if (k == 1) advance();
            const Token& n = advance();
            auto fn = make_node(NodeKind::FunctionDef, p, "");
            fn->add(make_node(NodeKind::Param, n.pos, n.text));
            return arrow_body(std::move(fn));
        }
        if (t.kind == Tok::Op && t.text == "(") {
            const long m = match_[idx_ + k];
            if (m < 0) return nullptr;
            const Token& after = toks_[std::min(static_cast<size_t>(m) + 1, toks_.size() - 1)];
            const bool arrow = after.kind == Tok::Op && after.text == "=>";
            const bool typed = ts_ && after.kind == Tok::Op && after.text == ":";
            if (!arrow && !typed) return nullptr;
            const size_t save = idx_;
            if (k == 1) advance();
            if (NodePtr fn = try_arrow(p)) return fn;
            idx_ = save;
            return nullptr;
        }
        if (ts_ && t.kind == Tok::Op && t.text == "<") {
            const size_t save = idx_;
            if (k == 1) advance();
            if (NodePtr fn = try_arrow(p)) return fn;
            idx_ = save;
        }
        return nullptr;
    }

    NodePtr assignment() {
        if (at_kw("yield")) {
            const Token& y = peek();
            const Token& nx = peek(1);
            const bool arg = !nx.nl_before && (starts_expression(1) || (nx.kind == Tok::Op && nx.text == "*"));
            if (arg || nx.kind == Tok::Op) {
                advance();
                auto node = make_node(NodeKind::Other, y.pos, "yield");
                if (at_op("*")) advance();
                if (arg) node->add(assignment());
                return node;
            }
        }
        if (NodePtr fn = maybe_arrow()) return fn;
        const Position p = peek().pos;
        NodePtr lhs = conditional();
        std::string op;
        int ntok = 1;
        if (at_op(">")) {
            auto [gop, n] = gt_operator();
            if (gop == ">>=" || gop == ">>>=") {
                op = gop;
                ntok = n;
            }
        } else if (peek().kind == Tok::Op && is_assign_op(peek().text)) {
            op = peek().text;
        }
        if (op.empty()) return lhs;
        for (int i = 0; i < ntok; ++i) advance();
        auto a = op == "=" ? make_node(NodeKind::Assign, p) : make_node(NodeKind::AugAssign, p, op);
        a->add(std::move(lhs));
        a->add(assignment());
        return a;
    }

    NodePtr conditional() {
        NodePtr test = binary(1);
        if (!at_op("?")) return test;
        const Position p = advance().pos;
        const bool saved = no_in_;
        no_in_ = false;
        NodePtr then = assignment();
        no_in_ = saved;
        expect_op(":");
        NodePtr other = assignment();
        auto c = make_node(NodeKind::Conditional, p);
        c->add(std::move(test));
        c->add(std::move(then));
        c->add(std::move(other));
        return c;
    }

    NodePtr binary(int min_prec) {
        NodePtr lhs = unary();
        while (true) {
            const Token& t = peek();
            if (ts_ && t.kind == Tok::Name && (t.text == "as" || t.text == "satisfies") && !t.nl_before) {
                if (8 < min_prec) break;
                advance();
                if (at_kw("const")) {
                    advance();
                } else {
                    skip_type();
                }
                continue;
            }
            std::string op;
            int ntok = 1;
            if (t.kind == Tok::Op) {
                if (t.text == ">") {
                    std::tie(op, ntok) = gt_operator();
                    if (op == ">>=" || op == ">>>=") break;
                } else {
                    op = t.text;
                }
            } else if (t.kind == Tok::Name && (t.text == "instanceof" || (t.text == "in" && !no_in_))) {
                op = t.text;
            } else {
                break;
            }
            const int prec = binary_precedence(op);
            if (prec < 0 || prec < min_prec) break;
            const Position p = t.pos;
            for (int i = 0; i < ntok; ++i) advance();
            auto b = make_node(NodeKind::Binary, p, op);
            b->add(std::move(lhs));
            b->add(op == "**" ? binary(prec) : binary(prec + 1));
            lhs = std::move(b);
        }
        return lhs;
    }

    NodePtr unary() {
        const Token& t = peek();
        if (t.kind == Tok::Op && (t.text == "!" || t.text == "~" || t.text == "+" || t.text == "-" ||
                                  t.text == "++" || t.text == "--")) {
            advance();
            auto u = make_node(NodeKind::Unary, t.pos, t.text);
            u->add(unary());
            return u;
        }
        if (t.kind == Tok::Name && (t.text == "typeof" || t.text == "void" || t.text == "delete")) {
            advance();
            auto u = make_node(NodeKind::Unary, t.pos, t.text);
            u->add(unary());
            return u;
        }
        if (t.kind == Tok::Name && t.text == "await" && starts_expression(1) && !at_op("<", 1)) {
            advance();
            auto a = make_node(NodeKind::Await, t.pos);
            a->add(unary());
            return a;
        }
        if (ts_ && t.kind == Tok::Op && t.text == "<") {
            skip_angles();
            return unary();
        }
        NodePtr e = call_member();
        if ((at_op("++") || at_op("--")) && !peek().nl_before) {
            const Token& op = advance();
            auto u = make_node(NodeKind::Unary, op.pos, op.text);
            u->add(std::move(e));
            return u;
        }
        return e;
    }

    void arguments(Node& call) {
        expect_op("(");
        const bool saved = no_in_;
        no_in_ = false;
        while (!at_op(")")) {
            if (at_op("...")) {
                const Position p = advance().pos;
                auto s = make_node(NodeKind::Spread, p, "...");
                s->add(assignment());
                call.add(std::move(s));
            } else {
                call.add(assignment());
            }
            if (!at_op(",")) break;
            advance();
        }
        no_in_ = saved;
        expect_op(")");
    }

    static Position call_anchor(const Node& callee, Position paren) {
        if (callee.kind == NodeKind::Name || callee.kind == NodeKind::Attribute) return callee.pos;
        return paren;
    }

    NodePtr new_expression() {
        const Position kw = advance().pos;
        if (at_op(".")) {  // new.target
            advance();
            auto attr = make_node(NodeKind::Attribute, peek().pos, expect_name());
            attr->add(make_node(NodeKind::Name, kw, "new"));
            return attr;
        }
        NodePtr callee = at_kw("new") ? new_expression() : primary();
        while (true) {
            if (at_op(".")) {
                advance();
                const Token& n = advance();
                if (n.kind != Tok::Name) fail("expected property name");
                auto attr = make_node(NodeKind::Attribute, n.pos, n.text);
                attr->add(std::move(callee));
                callee = std::move(attr);
            } else if (at_op("[")) {
                const Position p = advance().pos;
                auto sub = make_node(NodeKind::Subscript, p);
                sub->add(std::move(callee));
                sub->add(expression());
                expect_op("]");
                callee = std::move(sub);
            } else {
                break;
            }
        }
        if (ts_ && at_op("<") && type_args_then_call()) skip_angles();
        const Position paren = peek().pos;
        auto call = make_node(NodeKind::Call, call_anchor(*callee, at_op("(") ? paren : kw));
        call->flags |= flag::kNew;
        call->add(std::move(callee));
        if (at_op("(")) arguments(*call);
        return call;
    }

    NodePtr call_member() {
        NodePtr e = at_kw("new") ? new_expression() : primary();
        while (true) {
            const Token& t = peek();
            if (t.kind == Tok::Op && (t.text == "." || t.text == "?.")) {
                const bool optional = t.text == "?.";
                advance();
                if (optional && at_op("(")) {
                    const Position paren = peek().pos;
                    auto call = make_node(NodeKind::Call, call_anchor(*e, paren));
                    call->flags |= flag::kOptional;
                    call->add(std::move(e));
                    arguments(*call);
                    e = std::move(call);
                    continue;
                }
                if (optional && at_op("[")) {
                    const Position p = advance().pos;
                    auto sub = make_node(NodeKind::Subscript, p);
                    sub->add(std::move(e));
                    sub->add(expression());
                    expect_op("]");
                    e = std::move(sub);
                    continue;
                }
                const Token& n = advance();
                if (n.kind != Tok::Name) throw SyntaxError{n.pos, "expected property name"};
                auto attr = make_node(NodeKind::Attribute, n.pos, n.text);
                if (optional) attr->flags |= flag::kOptional;
                attr->add(std::move(e));
                e = std::move(attr);
            } else if (t.kind == Tok::Op && t.text == "[") {
                const Position p = advance().pos;
                auto sub = make_node(NodeKind::Subscript, p);
                sub->add(std::move(e));
                const bool saved = no_in_;
                no_in_ = false;
                sub->add(expression());
                no_in_ = saved;
                expect_op("]");
                e = std::move(sub);
            } else if (t.kind == Tok::Op && t.text == "(") {
                auto call = make_node(NodeKind::Call, call_anchor(*e, t.pos));
                call->add(std::move(e));
                arguments(*call);
                e = std::move(call);
            } else if (t.kind == Tok::Template) {
                auto tagged = make_node(NodeKind::Other, t.pos, "<tagged-template>");
                tagged->add(std::move(e));
                tagged->add(template_node());
                e = std::move(tagged);
            } else if (ts_ && t.kind == Tok::Op && t.text == "!" && !t.nl_before) {
                advance();
            } else if (ts_ && t.kind == Tok::Op && t.text == "<" && type_args_then_call()) {
                skip_angles();
            } else {
                return e;
            }
        }
    }

    NodePtr template_node() {
        const Token& t = advance();
        auto tpl = make_node(NodeKind::Template, t.pos, "`");
        for (const auto& part : t.parts) {
            if (!part.expr) {
                tpl->add(make_node(NodeKind::String, part.pos, part.text));
                continue;
            }
            Lexer sub(part.text, diags_, part.pos);
            Parser sub_parser(sub.run(), ts_, diags_);
            if (NodePtr e = sub_parser.parse_expression_only()) tpl->add(std::move(e));
        }
        return tpl;
    }

    NodePtr primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Number: advance(); return make_node(NodeKind::Number, t.pos, t.text);
            case Tok::String: advance(); return make_node(NodeKind::String, t.pos, t.text);
            case Tok::Template: return template_node();
            case Tok::Regex: advance(); return make_node(NodeKind::Other, t.pos, t.text);
            case Tok::End: fail("unexpected end of file");
            case Tok::Op: break;
            case Tok::Name: {
                const std::string& w = t.text;
                if (w == "function") return function_node(t.pos);
                if (w == "async" && at_kw("function", 1) && !peek(1).nl_before) {
                    advance();
                    return function_node(peek().pos);
                }
                if (w == "class") return class_node({}, false);
                if (w == "null" || w == "undefined") {
                    advance();
                    return make_node(NodeKind::Null, t.pos, w);
                }
                if (w == "true" || w == "false") {
                    advance();
                    return make_node(NodeKind::Bool, t.pos, w);
                }
                if (is_reserved(w)) fail("unexpected keyword '" + w + "'");
                advance();
                return make_node(NodeKind::Name, t.pos, w);
            }
        }
        if (t.text == "(") {
            advance();
            const bool saved = no_in_;
            no_in_ = false;
            NodePtr e = expression();
            no_in_ = saved;
            expect_op(")");
            return e;
        }
        if (t.text == "[") return array_literal();
        if (t.text == "{") return object_literal();
        if (t.text == "@") {
            auto decorators = parse_decorators();
            if (!at_kw("class")) fail("decorator must precede a class");
            return class_node(std::move(decorators), false);
        }
        fail("unexpected '" + t.text + "'");
    }

    NodePtr array_literal() {
        auto list = make_node(NodeKind::List, advance().pos);
        const bool saved = no_in_;
        no_in_ = false;
        while (!at_op("]")) {
            if (at_op(",")) {
                advance();
                continue;
            }
            if (at_op("...")) {
                const Position p = advance().pos;
                auto s = make_node(NodeKind::Spread, p, "...");
                s->add(assignment());
                list->add(std::move(s));
            } else {
                list->add(assignment());
            }
            if (!at_op(",")) break;
            advance();
        }
        no_in_ = saved;
        expect_op("]");
        return list;
    }

    NodePtr object_literal() {
        auto dict = make_node(NodeKind::Dict, advance().pos);
        const bool saved = no_in_;
        no_in_ = false;
        while (!at_op("}")) {
            if (at_op("...")) {
                const Position p = advance().pos;
                auto s = make_node(NodeKind::Spread, p, "...");
                s->add(assignment());
                dict->add(std::move(s));
            } else {
                dict->add(object_member());
            }
            if (!at_op(",")) break;
            advance();
        }
        no_in_ = saved;
        expect_op("}");
        return dict;
    }

    NodePtr object_member() {
        while (at(Tok::Name) && (peek().text == "async" || peek().text == "get" || peek().text == "set") &&
               !at_op(",", 1) && !at_op(":", 1) && !at_op("(", 1) && !at_op("}", 1) && !at_op("=", 1)) {
            advance();
        }
        if (at_op("*")) advance();
        NodePtr key;
        std::string key_text;
        const Token& k = peek();
        if (k.kind == Tok::Name) {
            advance();
            key = make_node(NodeKind::Name, k.pos, k.text);
            key_text = k.text;
        } else if (k.kind == Tok::String || k.kind == Tok::Number) {
            advance();
            key = make_node(k.kind == Tok::String ? NodeKind::String : NodeKind::Number, k.pos, k.text);
            key_text = k.text;
        } else if (k.kind == Tok::Op && k.text == "[") {
            advance();
            key = assignment();
            expect_op("]");
            key_text = "<computed>";
        } else {
            fail("expected property name");
        }
        const Position p = key->pos;
        auto entry = make_node(NodeKind::DictEntry, p);
        if (at_op("(") || at_op("<")) {
            auto fn = make_node(NodeKind::FunctionDef, p, key_text);
            function_rest(*fn);
            entry->add(std::move(key));
            entry->add(std::move(fn));
            return entry;
        }
        if (at_op(":")) {
            advance();
            entry->add(std::move(key));
            entry->add(assignment());
            return entry;
        }
        if (key->kind != NodeKind::Name) fail("expected ':'");
        auto value = make_node(NodeKind::Name, p, key_text);
        if (at_op("=")) {  // shorthand with default, only valid in patterns
            advance();
            auto a = make_node(NodeKind::Assign, p);
            a->add(std::move(value));
            a->add(assignment());
            entry->add(std::move(key));
            entry->add(std::move(a));
            return entry;
        }
        entry->add(std::move(key));
        entry->add(std::move(value));
        return entry;
    }

    std::vector<Token> toks_;
    bool ts_;
    std::vector<Diagnostic>& diags_;
    std::vector<long> match_;
    size_t idx_ = 0;
    bool no_in_ = false;
};

}  // namespace

NodePtr parse_javascript(std::string_view source, bool typescript, std::vector<Diagnostic>& diagnostics) {
    Lexer lexer(source, diagnostics);
    Parser parser(lexer.run(), typescript, diagnostics);
    return parser.parse_module();
}

}  // namespace cryptaudit::ast
