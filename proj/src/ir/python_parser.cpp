// Python front-end: indentation-aware lexer and a recursive-descent parser
// that lowers the subset of the grammar relevant to call-site extraction
// onto the uniform node model. Syntax errors are recovered at statement
// granularity so the rest of the file still yields a tree.

#include "cryptaudit/ast.hpp"

#include "string_escape.hpp"

#include <array>
#include <cctype>
#include <string_view>

namespace cryptaudit::ast {
namespace {

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Position pos;
    bool bytes = false;
    bool fstring = false;
    bool raw = false;
    std::string body;  // undecoded body of f-strings
    Position body_pos;
};

struct SyntaxError {
    Position pos;
    std::string message;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

constexpr std::array<std::string_view, 25> kOps3Then2 = {
    "**=", "//=", ">>=", "<<=", "...", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "->",  ":=",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "@=", "<>"};

class Lexer {
public:
    Lexer(std::string_view src, std::vector<Diagnostic>& diags, Position base = {})
        : src_(src), diags_(diags), line_(base.line), col_base_(base.column) {}

    std::vector<Token> run() {
        bool at_line_start = true;
        while (true) {
            if (at_line_start && depth_ == 0) {
                if (!begin_line()) break;
                at_line_start = false;
            }
            if (i_ >= src_.size()) break;
            const char c = src_[i_];
            if (c == '\n') {
                newline();
                if (depth_ == 0) {
                    emit_newline();
                    at_line_start = true;
                } else if (recover_unbalanced()) {
                    emit_newline();
                    at_line_start = true;
                }
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
                ++i_;
                continue;
            }
            if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
                continue;
            }
            if (c == '\\' && i_ + 1 < src_.size() && (src_[i_ + 1] == '\n' || src_[i_ + 1] == '\r')) {
                ++i_;
                if (src_[i_] == '\r') ++i_;
                if (i_ < src_.size() && src_[i_] == '\n') newline();
                continue;
            }
            const auto uc = static_cast<unsigned char>(c);
            if (ident_start(uc)) {
                lex_name_or_prefixed_string();
                continue;
            }
            if (std::isdigit(uc) || (c == '.' && i_ + 1 < src_.size() &&
                                     std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
                lex_number();
                continue;
            }
            if (c == '"' || c == '\'') {
                lex_string(pos(), false, false, false);
                continue;
            }
            lex_op();
        }
        if (!tokens_.empty() && tokens_.back().kind != Tok::Newline &&
            tokens_.back().kind != Tok::Dedent) {
            push(Tok::Newline, "", pos());
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(Tok::Dedent, "", pos());
        }
        push(Tok::End, "", pos());
        return std::move(tokens_);
    }

private:
    Position pos() const {
        const int col = static_cast<int>(i_ - line_start_);
        return {line_, line_ == first_line() ? col + col_base_ : col};
    }
    int first_line() const { return first_line_; }

    void newline() {
        ++i_;
        ++line_;
        line_start_ = i_;
    }

    void push(Tok kind, std::string text, Position p) {
        Token t;
        t.kind = kind;
        t.text = std::move(text);
        t.pos = p;
        tokens_.push_back(std::move(t));
    }

    void emit_newline() {
        if (!tokens_.empty() && tokens_.back().kind != Tok::Newline &&
            tokens_.back().kind != Tok::Indent && tokens_.back().kind != Tok::Dedent) {
            push(Tok::Newline, "", pos());
        }
    }

    // Measures indentation of the next non-blank line; returns false at EOF.
    bool begin_line() {
        while (i_ < src_.size()) {
            int width = 0;
            size_t j = i_;
            while (j < src_.size() && (src_[j] == ' ' || src_[j] == '\t' || src_[j] == '\f')) {
                width = src_[j] == '\t' ? (width / 8 + 1) * 8 : width + 1;
                ++j;
            }
            if (j < src_.size() && src_[j] == '\r') ++j;
            if (j >= src_.size()) {
                i_ = j;
                return false;
            }
            if (src_[j] == '\n') {
                i_ = j;
                newline();
                continue;
            }
            if (src_[j] == '#') {
                while (j < src_.size() && src_[j] != '\n') ++j;
                i_ = j;
                if (i_ < src_.size()) newline();
                continue;
            }
            i_ = j;
            const Position here = pos();
            if (width > indents_.back()) {
                indents_.push_back(width);
                push(Tok::Indent, "", here);
            } else {
                while (width < indents_.back()) {
                    indents_.pop_back();
                    push(Tok::Dedent, "", here);
                }
                if (width != indents_.back()) {
                    diags_.push_back({here, "inconsistent dedent"});
                    indents_.push_back(width);
                    push(Tok::Indent, "", here);
                }
            }
            return true;
        }
        return false;
    }

    // Inside an unclosed bracket, a column-0 line that clearly starts a new
    // statement means the bracket was never closed.
    bool recover_unbalanced() {
        if (header_left_open()) return reset_depth();
        size_t j = i_;
        if (j >= src_.size()) return false;
        const auto c = static_cast<unsigned char>(src_[j]);
        if (c == '@') return reset_depth();
        if (!ident_start(c)) return false;
        size_t k = j;
        while (k < src_.size() && ident_char(static_cast<unsigned char>(src_[k]))) ++k;
        const std::string_view word = src_.substr(j, k - j);
        static constexpr std::array<std::string_view, 17> kStarters = {
            "def",  "class", "import", "from", "if",   "elif",  "else",    "for",   "while",
            "with", "try",   "except", "finally", "return", "async", "raise", "assert"};
        for (auto s : kStarters) {
            if (word == s) return reset_depth();
        }
        while (k < src_.size() && (src_[k] == ' ' || src_[k] == '\t')) ++k;
        if (k < src_.size() && src_[k] == '=' && (k + 1 >= src_.size() || src_[k + 1] != '=')) {
            return reset_depth();
        }
        return false;
    }

    // `def f(:` style lines: a compound-statement header ending in ':'.
    bool header_left_open() const {
        if (tokens_.empty() || tokens_.back().kind != Tok::Op || tokens_.back().text != ":") return false;
        const int line = tokens_.back().pos.line;
        size_t k = tokens_.size() - 1;
        while (k > 0 && tokens_[k - 1].pos.line == line && tokens_[k - 1].kind != Tok::Newline &&
               tokens_[k - 1].kind != Tok::Indent && tokens_[k - 1].kind != Tok::Dedent) {
            --k;
        }
        const Token& first = tokens_[k];
        if (first.kind != Tok::Name) return false;
        static constexpr std::array<std::string_view, 8> kHeaders = {
            "def", "class", "if", "for", "while", "with", "async", "elif"};
        for (auto h : kHeaders) {
            if (first.text == h) return true;
        }
        return false;
    }

    bool reset_depth() {
        diags_.push_back({pos(), "unclosed bracket"});
        depth_ = 0;
        return true;
    }

    void lex_name_or_prefixed_string() {
        const Position start = pos();
        const size_t b = i_;
        while (i_ < src_.size() && ident_char(static_cast<unsigned char>(src_[i_]))) ++i_;
        std::string word(src_.substr(b, i_ - b));
        if (i_ < src_.size() && (src_[i_] == '"' || src_[i_] == '\'') && word.size() <= 2) {
            bool raw = false;
            bool bytes = false;
            bool fmt = false;
            bool ok = true;
            for (char ch : word) {
                switch (std::tolower(static_cast<unsigned char>(ch))) {
                    case 'r': raw = true; break;
                    case 'b': bytes = true; break;
                    case 'f': fmt = true; break;
                    case 'u': break;
                    default: ok = false;
                }
            }
            if (ok) {
                lex_string(start, raw, bytes, fmt);
                return;
            }
        }
        push(Tok::Name, std::move(word), start);
    }

    void lex_number() {
        const Position start = pos();
        const size_t b = i_;
        const bool hex = src_[i_] == '0' && i_ + 1 < src_.size() &&
                         (src_[i_ + 1] == 'x' || src_[i_ + 1] == 'X');
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
                ++i_;
            } else if ((c == '+' || c == '-') && !hex && i_ > b &&
                       (src_[i_ - 1] == 'e' || src_[i_ - 1] == 'E')) {
                ++i_;
            } else {
                break;
            }
        }
        push(Tok::Number, std::string(src_.substr(b, i_ - b)), start);
    }

    void lex_string(Position start, bool raw, bool bytes, bool fmt) {
        const char q = src_[i_];
        const bool triple = i_ + 2 < src_.size() && src_[i_ + 1] == q && src_[i_ + 2] == q;
        i_ += triple ? 3 : 1;
        const size_t body_begin = i_;
        const Position body_pos = pos();
        size_t body_end = i_;
        bool closed = false;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '\\' && i_ + 1 < src_.size()) {
                if (src_[i_ + 1] == '\n') {
                    ++i_;
                    newline();
                } else {
                    i_ += 2;
                }
                continue;
            }
            if (c == '\n') {
                if (!triple) break;
                newline();
                continue;
            }
            if (c == q) {
                if (!triple) {
                    body_end = i_;
                    ++i_;
                    closed = true;
                    break;
                }
                if (i_ + 2 < src_.size() && src_[i_ + 1] == q && src_[i_ + 2] == q) {
                    body_end = i_;
                    i_ += 3;
                    closed = true;
                    break;
                }
            }
            ++i_;
        }
        if (!closed) {
            body_end = i_;
            diags_.push_back({start, "unterminated string literal"});
        }
        const std::string_view body = src_.substr(body_begin, body_end - body_begin);
        Token t;
        t.kind = Tok::String;
        t.pos = start;
        t.bytes = bytes;
        t.fstring = fmt;
        t.raw = raw;
        if (fmt) {
            t.body = std::string(body);
            t.body_pos = body_pos;
        } else {
            t.text = raw ? std::string(body) : decode_python_escapes(body);
        }
        tokens_.push_back(std::move(t));
    }

    void lex_op() {
        const Position start = pos();
        for (auto op : kOps3Then2) {
            if (src_.substr(i_, op.size()) == op) {
                i_ += op.size();
                push(Tok::Op, std::string(op), start);
                return;
            }
        }
        const char c = src_[i_++];
        if (c == '(' || c == '[' || c == '{') ++depth_;
        if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
        push(Tok::Op, std::string(1, c), start);
    }

    std::string_view src_;
    std::vector<Diagnostic>& diags_;
    size_t i_ = 0;
    size_t line_start_ = 0;
    int line_ = 1;
    int first_line_ = line_;
    int col_base_ = 0;
    int depth_ = 0;
    std::vector<int> indents_{0};
    std::vector<Token> tokens_;
};

bool is_reserved(std::string_view w) {
    static constexpr std::array<std::string_view, 30> kReserved = {
        "and",    "as",     "assert", "break",  "class", "continue", "def",    "del",
        "elif",   "else",   "except", "finally", "for",  "from",     "global", "if",
        "import", "in",     "is",     "lambda", "nonlocal", "not",   "or",     "pass",
        "raise",  "return", "try",    "while",  "with",  "yield"};
    for (auto r : kReserved) {
        if (r == w) return true;
    }
    return false;
}

int binary_precedence(std::string_view op) {
    if (op == "|") return 1;
    if (op == "^") return 2;
    if (op == "&") return 3;
    if (op == "<<" || op == ">>") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "//" || op == "%" || op == "@") return 6;
    return -1;
}

bool is_augassign(std::string_view op) {
    static constexpr std::array<std::string_view, 13> kAug = {
        "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="};
    for (auto a : kAug) {
        if (a == op) return true;
    }
    return false;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
        : toks_(std::move(tokens)), diags_(diags) {}

    NodePtr parse_module() {
        auto mod = make_node(NodeKind::Module, {1, 0});
        while (!at(Tok::End)) {
            if (at(Tok::Newline) || at(Tok::Indent) || at(Tok::Dedent)) {
                if (at(Tok::Indent)) diags_.push_back({peek().pos, "unexpected indent"});
                ++idx_;
                continue;
            }
            statement(*mod);
        }
        return mod;
    }

    NodePtr parse_expression_only() {
        while (at(Tok::Newline) || at(Tok::Indent)) ++idx_;
        if (at(Tok::End)) return nullptr;
        try {
            return testlist_star();
        } catch (const SyntaxError& e) {
            diags_.push_back({e.pos, e.message});
            return nullptr;
        }
    }

private:
    // -- token helpers ------------------------------------------------------
    const Token& peek(size_t k = 0) const {
        const size_t j = std::min(idx_ + k, toks_.size() - 1);
        return toks_[j];
    }
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
    void expect_kw(std::string_view w) {
        if (!at_kw(w)) fail("expected '" + std::string(w) + "'");
        advance();
    }
    std::string expect_name() {
        if (!at(Tok::Name)) fail("expected identifier");
        return advance().text;
    }
    bool starts_expression() const {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Name: return !is_reserved(t.text) || t.text == "not" || t.text == "lambda" ||
                                   t.text == "await" || t.text == "yield";
            case Tok::Number:
            case Tok::String: return true;
            case Tok::Op:
                return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
                       t.text == "+" || t.text == "~" || t.text == "*" || t.text == "..." ||
                       t.text == "**";
            default: return false;
        }
    }

    // -- statements ---------------------------------------------------------
    void statement(Node& owner) {
        const size_t start = idx_;
        try {
            compound_or_simple(owner);
        } catch (const SyntaxError& e) {
            diags_.push_back({e.pos, e.message});
            auto err = make_node(NodeKind::ErrorNode, e.pos, e.message);
            while (!at(Tok::Newline) && !at(Tok::End)) advance();
            if (at(Tok::Newline)) advance();
            if (at(Tok::Indent)) {
                advance();
                while (!at(Tok::Dedent) && !at(Tok::End)) statement(*err);
                if (at(Tok::Dedent)) advance();
            }
            owner.add(std::move(err));
            if (idx_ == start) advance();
        }
    }

    void suite(Node& owner) {
        expect_op(":");
        if (at(Tok::Newline)) {
            advance();
            if (!at(Tok::Indent)) {
                diags_.push_back({peek().pos, "expected an indented block"});
                return;
            }
            advance();
            while (!at(Tok::Dedent) && !at(Tok::End)) {
                if (at(Tok::Newline)) {
                    advance();
                    continue;
                }
                statement(owner);
            }
            if (at(Tok::Dedent)) advance();
        } else {
            simple_statements(owner);
        }
    }

    void compound_or_simple(Node& owner) {
        if (at_op("@")) {
            std::vector<NodePtr> decorators;
            while (at_op("@")) {
                const Position p = advance().pos;
                auto d = make_node(NodeKind::Decorator, p);
                d->add(namedexpr());
                decorators.push_back(std::move(d));
                if (!at(Tok::Newline)) fail("expected newline after decorator");
                advance();
            }
            if (at_kw("async")) advance();
            if (at_kw("def")) {
                funcdef(owner, std::move(decorators));
            } else if (at_kw("class")) {
                classdef(owner, std::move(decorators));
            } else {
                fail("decorator must precede def or class");
            }
            return;
        }
        if (at(Tok::Name)) {
            const std::string& w = peek().text;
            if (w == "def") return funcdef(owner, {});
            if (w == "class") return classdef(owner, {});
            if (w == "async" && (at_kw("def", 1) || at_kw("for", 1) || at_kw("with", 1))) {
                advance();
                return compound_or_simple(owner);
            }
            if (w == "if") return if_stmt(owner);
            if (w == "while") return while_stmt(owner);
            if (w == "for") return for_stmt(owner);
            if (w == "try") return try_stmt(owner);
            if (w == "with") return with_stmt(owner);
        }
        simple_statements(owner);
    }

    void simple_statements(Node& owner) {
        while (true) {
            if (auto s = small_statement()) owner.add(std::move(s));
            if (at_op(";")) {
                advance();
                if (at(Tok::Newline) || at(Tok::End)) break;
                continue;
            }
            break;
        }
        if (at(Tok::End)) return;
        if (!at(Tok::Newline)) fail("expected end of statement");
        advance();
    }

    NodePtr small_statement() {
        const Token& t = peek();
        if (t.kind == Tok::Name) {
            const std::string w = t.text;
            if (w == "pass" || w == "break" || w == "continue") {
                advance();
                return nullptr;
            }
            if (w == "return") {
                const Position p = advance().pos;
                auto r = make_node(NodeKind::Return, p);
                if (starts_expression()) r->add(testlist_star());
                return r;
            }
            if (w == "import") return import_name();
            if (w == "from") return import_from();
            if (w == "global" || w == "nonlocal") {
                advance();
                expect_name();
                while (at_op(",")) {
                    advance();
                    expect_name();
                }
                return nullptr;
            }
            if (w == "del" || w == "assert" || w == "raise") {
                const Position p = advance().pos;
                auto s = make_node(NodeKind::Statement, p, w);
                if (starts_expression()) {
                    s->add(test());
                    while (at_op(",") || at_kw("from")) {
                        advance();
                        s->add(test());
                    }
                }
                return s;
            }
        }
        return expression_statement();
    }

    NodePtr expression_statement() {
        const Position p = peek().pos;
        NodePtr first = at_kw("yield") ? yield_expr() : testlist_star();
        if (at_op(":")) {
            advance();
            (void)test();  // annotation
            if (!at_op("=")) return nullptr;
            advance();
            auto a = make_node(NodeKind::Assign, p);
            a->add(std::move(first));
            a->add(at_kw("yield") ? yield_expr() : testlist_star());
            return a;
        }
        if (at_op("=")) {
            auto a = make_node(NodeKind::Assign, p);
            a->add(std::move(first));
            while (at_op("=")) {
                advance();
                a->add(at_kw("yield") ? yield_expr() : testlist_star());
            }
            return a;
        }
        if (peek().kind == Tok::Op && is_augassign(peek().text)) {
            const std::string op = advance().text;
            auto a = make_node(NodeKind::AugAssign, p, op);
            a->add(std::move(first));
            a->add(at_kw("yield") ? yield_expr() : testlist_star());
            return a;
        }
        auto s = make_node(NodeKind::ExprStmt, p);
        s->add(std::move(first));
        return s;
    }

    std::string dotted_name() {
        std::string name = expect_name();
        while (at_op(".")) {
            advance();
            name += "." + expect_name();
        }
        return name;
    }

    NodePtr import_name() {
        const Position p = advance().pos;
        auto imp = make_node(NodeKind::Import, p);
        do {
            if (at_op(",")) advance();
            const Position ap = peek().pos;
            const std::string module = dotted_name();
            if (at_kw("as")) {
                advance();
                auto alias = make_node(NodeKind::ImportAlias, ap, expect_name());
                alias->value = module;
                imp->add(std::move(alias));
            } else {
                const std::string head = module.substr(0, module.find('.'));
                auto alias = make_node(NodeKind::ImportAlias, ap, head);
                alias->value = head;
                imp->add(std::move(alias));
            }
            imp->text = module;
        } while (at_op(","));
        return imp;
    }

    NodePtr import_from() {
        const Position p = advance().pos;
        std::string module;
        while (at_op(".") || at_op("...")) module += advance().text;
        if (!at_kw("import")) module += dotted_name();
        expect_kw("import");
        auto imp = make_node(NodeKind::Import, p, module);
        if (at_op("*")) {
            advance();
            return imp;
        }
        const bool paren = at_op("(");
        if (paren) advance();
        while (true) {
            if (paren && at(Tok::Newline)) advance();
            if (paren && at_op(")")) break;
            const Position ap = peek().pos;
            const std::string name = expect_name();
            std::string local = name;
            if (at_kw("as")) {
                advance();
                local = expect_name();
            }
            auto alias = make_node(NodeKind::ImportAlias, ap, local);
            alias->value = module.empty() || module.back() == '.' ? module + name : module + "." + name;
            imp->add(std::move(alias));
            if (!at_op(",")) break;
            advance();
        }
        if (paren) expect_op(")");
        return imp;
    }

    void funcdef(Node& owner, std::vector<NodePtr> decorators) {
        advance();  // def
        const Position p = peek().pos;
        auto fn = make_node(NodeKind::FunctionDef, p, expect_name());
        for (auto& d : decorators) fn->add(std::move(d));
        expect_op("(");
        parameters(*fn, ")");
        expect_op(")");
        if (at_op("->")) {
            advance();
            (void)test();
        }
        Node& ref = owner.add(std::move(fn));
        suite(ref);
    }

    // Parameter list up to (not including) `closer`.
    void parameters(Node& fn, std::string_view closer) {
        while (!at_op(closer)) {
            if (at_op("/")) {
                advance();
            } else if (at_op("*") || at_op("**")) {
                advance();
                if (at(Tok::Name)) {
                    auto prm = make_node(NodeKind::Param, peek().pos, expect_name());
                    if (at_op(":") && closer == ")") {
                        advance();
                        (void)test();
                    }
                    fn.add(std::move(prm));
                }
            } else {
                const Position pp = peek().pos;
                auto prm = make_node(NodeKind::Param, pp, expect_name());
                if (at_op(":") && closer == ")") {
                    advance();
                    (void)test();
                }
                if (at_op("=")) {
                    advance();
                    prm->add(test());
                }
                fn.add(std::move(prm));
            }
            if (!at_op(",")) break;
            advance();
        }
    }

    void classdef(Node& owner, std::vector<NodePtr> decorators) {
        advance();  // class
        const Position p = peek().pos;
        auto cls = make_node(NodeKind::ClassDef, p, expect_name());
        for (auto& d : decorators) cls->add(std::move(d));
        if (at_op("(")) {
            auto bases = make_node(NodeKind::Statement, peek().pos, "bases");
            advance();
            arguments(*bases);
            expect_op(")");
            cls->add(std::move(bases));
        }
        Node& ref = owner.add(std::move(cls));
        suite(ref);
    }

    void if_stmt(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "if");
        blk->add(namedexpr());
        suite(*blk);
        while (at_kw("elif")) {
            advance();
            blk->add(namedexpr());
            suite(*blk);
        }
        if (at_kw("else")) {
            advance();
            suite(*blk);
        }
        owner.add(std::move(blk));
    }

    void while_stmt(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "while");
        blk->add(namedexpr());
        suite(*blk);
        if (at_kw("else")) {
            advance();
            suite(*blk);
        }
        owner.add(std::move(blk));
    }

    void for_stmt(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "for");
        auto target = make_node(NodeKind::Target, peek().pos);
        target->add(target_list());
        blk->add(std::move(target));
        expect_kw("in");
        blk->add(testlist_star());
        suite(*blk);
        if (at_kw("else")) {
            advance();
            suite(*blk);
        }
        owner.add(std::move(blk));
    }

    void try_stmt(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "try");
        suite(*blk);
        while (at_kw("except")) {
            advance();
            if (at_op("*")) advance();
            if (!at_op(":")) {
                blk->add(test());
                if (at_kw("as") || at_op(",")) {
                    advance();
                    auto target = make_node(NodeKind::Target, peek().pos);
                    target->add(make_node(NodeKind::Name, peek().pos, expect_name()));
                    blk->add(std::move(target));
                }
            }
            suite(*blk);
        }
        if (at_kw("else")) {
            advance();
            suite(*blk);
        }
        if (at_kw("finally")) {
            advance();
            suite(*blk);
        }
        owner.add(std::move(blk));
    }

    void with_stmt(Node& owner) {
        auto blk = make_node(NodeKind::Block, advance().pos, "with");
        while (true) {
            blk->add(test());
            if (at_kw("as")) {
                advance();
                auto target = make_node(NodeKind::Target, peek().pos);
                target->add(target_list());
                blk->add(std::move(target));
            }
            if (!at_op(",")) break;
            advance();
        }
        suite(*blk);
        owner.add(std::move(blk));
    }

    // -- expressions --------------------------------------------------------
    NodePtr yield_expr() {
        const Position p = advance().pos;
        auto y = make_node(NodeKind::Other, p, "yield");
        if (at_kw("from")) advance();
        if (starts_expression()) y->add(testlist_star());
        return y;
    }

    NodePtr star_or_test() {
        if (at_op("*")) {
            const Position p = advance().pos;
            auto s = make_node(NodeKind::Spread, p, "*");
            s->add(bitor_expr());
            return s;
        }
        return namedexpr();
    }

    NodePtr testlist_star() {
        const Position p = peek().pos;
        NodePtr first = star_or_test();
        if (!at_op(",")) return first;
        auto tup = make_node(NodeKind::List, p);
        tup->flags |= flag::kTuple;
        tup->add(std::move(first));
        while (at_op(",")) {
            advance();
            if (!starts_expression()) break;
            tup->add(star_or_test());
        }
        return tup;
    }

    NodePtr target_list() {
        const Position p = peek().pos;
        NodePtr first = at_op("*") ? star_or_test() : bitor_expr();
        if (!at_op(",")) return first;
        auto tup = make_node(NodeKind::List, p);
        tup->flags |= flag::kTuple;
        tup->add(std::move(first));
        while (at_op(",")) {
            advance();
            if (!starts_expression() || at_kw("in")) break;
            tup->add(at_op("*") ? star_or_test() : bitor_expr());
        }
        return tup;
    }

    NodePtr namedexpr() {
        NodePtr e = test();
        if (at_op(":=")) {
            const Position p = advance().pos;
            auto a = make_node(NodeKind::Assign, p);
            a->add(std::move(e));
            a->add(test());
            return a;
        }
        return e;
    }

    NodePtr test() {
        if (at_kw("lambda")) return lambdef();
        NodePtr e = or_test();
        if (at_kw("if") ) {
            const Position p = advance().pos;
            NodePtr cond = or_test();
            expect_kw("else");
            NodePtr other = test();
            auto c = make_node(NodeKind::Conditional, p);
            c->add(std::move(cond));
            c->add(std::move(e));
            c->add(std::move(other));
            return c;
        }
        return e;
    }

    NodePtr lambdef() {
        auto lam = make_node(NodeKind::Lambda, advance().pos);
        parameters(*lam, ":");
        expect_op(":");
        lam->add(test());
        return lam;
    }

    NodePtr or_test() {
        NodePtr lhs = and_test();
        while (at_kw("or")) {
            const Position p = advance().pos;
            auto b = make_node(NodeKind::Binary, p, "or");
            b->add(std::move(lhs));
            b->add(and_test());
            lhs = std::move(b);
        }
        return lhs;
    }

    NodePtr and_test() {
        NodePtr lhs = not_test();
        while (at_kw("and")) {
            const Position p = advance().pos;
            auto b = make_node(NodeKind::Binary, p, "and");
            b->add(std::move(lhs));
            b->add(not_test());
            lhs = std::move(b);
        }
        return lhs;
    }

    NodePtr not_test() {
        if (at_kw("not")) {
            const Position p = advance().pos;
            auto u = make_node(NodeKind::Unary, p, "not");
            u->add(not_test());
            return u;
        }
        return comparison();
    }

    NodePtr comparison() {
        NodePtr lhs = bitor_expr();
        while (true) {
            std::string op;
            const Position p = peek().pos;
            if (peek().kind == Tok::Op &&
                (peek().text == "<" || peek().text == ">" || peek().text == "==" ||
                 peek().text == ">=" || peek().text == "<=" || peek().text == "!=" ||
                 peek().text == "<>")) {
                op = advance().text;
            } else if (at_kw("in")) {
                advance();
                op = "in";
            } else if (at_kw("not") && at_kw("in", 1)) {
                advance();
                advance();
                op = "not in";
            } else if (at_kw("is")) {
                advance();
                op = "is";
                if (at_kw("not")) {
                    advance();
                    op = "is not";
                }
            } else {
                break;
            }
            auto b = make_node(NodeKind::Binary, p, op);
            b->add(std::move(lhs));
            b->add(bitor_expr());
            lhs = std::move(b);
        }
        return lhs;
    }

    NodePtr bitor_expr() { return binary(1); }

    NodePtr binary(int min_prec) {
        NodePtr lhs = unary();
        while (peek().kind == Tok::Op) {
            const int prec = binary_precedence(peek().text);
            if (prec < min_prec) break;
            const Token& op = advance();
            auto b = make_node(NodeKind::Binary, op.pos, op.text);
            b->add(std::move(lhs));
            b->add(binary(prec + 1));
            lhs = std::move(b);
        }
        return lhs;
    }

    NodePtr unary() {
        if (at_op("-") || at_op("+") || at_op("~")) {
            const Token& op = advance();
            auto u = make_node(NodeKind::Unary, op.pos, op.text);
            u->add(unary());
            return u;
        }
        return power();
    }

    NodePtr power() {
        NodePtr base;
        if (at_kw("await")) {
            const Position p = advance().pos;
            base = make_node(NodeKind::Await, p);
            base->add(primary());
        } else {
            base = primary();
        }
        if (at_op("**")) {
            const Position p = advance().pos;
            auto b = make_node(NodeKind::Binary, p, "**");
            b->add(std::move(base));
            b->add(unary());
            return b;
        }
        return base;
    }

    NodePtr primary() {
        NodePtr e = atom();
        while (true) {
            if (at_op("(")) {
                const Position paren = advance().pos;
                Position anchor = paren;
                if (e->kind == NodeKind::Name || e->kind == NodeKind::Attribute) anchor = e->pos;
                auto call = make_node(NodeKind::Call, anchor);
                call->add(std::move(e));
                arguments(*call);
                expect_op(")");
                e = std::move(call);
            } else if (at_op("[")) {
                const Position p = advance().pos;
                auto sub = make_node(NodeKind::Subscript, p);
                sub->add(std::move(e));
                sub->add(subscript_list());
                expect_op("]");
                e = std::move(sub);
            } else if (at_op(".")) {
                advance();
                const Position p = peek().pos;
                auto attr = make_node(NodeKind::Attribute, p, expect_name());
                attr->add(std::move(e));
                e = std::move(attr);
            } else {
                return e;
            }
        }
    }

    void arguments(Node& call) {
        while (!at_op(")")) {
            if (at_op("*") || at_op("**")) {
                const Token& op = advance();
                auto s = make_node(NodeKind::Spread, op.pos, op.text);
                s->add(test());
                call.add(std::move(s));
            } else if (at(Tok::Name) && at_op("=", 1)) {
                const Position p = peek().pos;
                auto kw = make_node(NodeKind::Keyword, p, advance().text);
                advance();
                kw->add(test());
                call.add(std::move(kw));
            } else {
                const Position p = peek().pos;
                NodePtr arg = namedexpr();
                if (at_kw("for") || at_kw("async")) arg = comprehension(std::move(arg), p, "genexp");
                call.add(std::move(arg));
            }
            if (!at_op(",")) break;
            advance();
        }
    }

    NodePtr subscript_list() {
        const Position p = peek().pos;
        NodePtr first = subscript();
        if (!at_op(",")) return first;
        auto tup = make_node(NodeKind::List, p);
        tup->flags |= flag::kTuple;
        tup->add(std::move(first));
        while (at_op(",")) {
            advance();
            if (at_op("]")) break;
            tup->add(subscript());
        }
        return tup;
    }

    NodePtr subscript() {
        const Position p = peek().pos;
        NodePtr lower;
        if (!at_op(":")) {
            lower = star_or_test();
            if (!at_op(":")) return lower;
        }
        auto slice = make_node(NodeKind::Slice, p);
        slice->add(lower ? std::move(lower) : make_node(NodeKind::Other, p, ""));
        for (int part = 0; part < 2 && at_op(":"); ++part) {
            advance();
            if (at_op("]") || at_op(",") || at_op(":")) {
                slice->add(make_node(NodeKind::Other, peek().pos, ""));
            } else {
                slice->add(test());
            }
        }
        return slice;
    }

    NodePtr comprehension(NodePtr element, Position p, std::string kind) {
        auto comp = make_node(NodeKind::Comprehension, p, std::move(kind));
        comp->add(std::move(element));
        while (at_kw("for") || at_kw("async")) {
            if (at_kw("async")) advance();
            expect_kw("for");
            auto target = make_node(NodeKind::Target, peek().pos);
            target->add(target_list());
            comp->add(std::move(target));
            expect_kw("in");
            comp->add(or_test());
            while (at_kw("if")) {
                advance();
                comp->add(or_test());
            }
        }
        return comp;
    }

    NodePtr atom() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Name: {
                if (t.text == "None") return make_node(NodeKind::Null, advance().pos, "None");
                if (t.text == "True" || t.text == "False") {
                    const Token& b = advance();
                    return make_node(NodeKind::Bool, b.pos, b.text);
                }
                if (t.text == "yield") return yield_expr();
                if (t.text == "lambda") return lambdef();
                if (is_reserved(t.text)) fail("unexpected keyword '" + t.text + "'");
                const Token& n = advance();
                return make_node(NodeKind::Name, n.pos, n.text);
            }
            case Tok::Number: {
                const Token& n = advance();
                return make_node(NodeKind::Number, n.pos, n.text);
            }
            case Tok::String: return strings();
            case Tok::Op: break;
            default: fail("unexpected end of line");
        }
        const Position p = t.pos;
        if (t.text == "(") {
            advance();
            if (at_op(")")) {
                advance();
                auto tup = make_node(NodeKind::List, p);
                tup->flags |= flag::kTuple;
                return tup;
            }
            if (at_kw("yield")) {
                NodePtr y = yield_expr();
                expect_op(")");
                return y;
            }
            NodePtr first = star_or_test();
            if (at_kw("for") || at_kw("async")) {
                NodePtr comp = comprehension(std::move(first), p, "genexp");
                expect_op(")");
                return comp;
            }
            if (!at_op(",")) {
                expect_op(")");
                return first;
            }
            auto tup = make_node(NodeKind::List, p);
            tup->flags |= flag::kTuple;
            tup->add(std::move(first));
            while (at_op(",")) {
                advance();
                if (at_op(")")) break;
                tup->add(star_or_test());
            }
            expect_op(")");
            return tup;
        }
        if (t.text == "[") {
            advance();
            auto list = make_node(NodeKind::List, p);
            if (at_op("]")) {
                advance();
                return list;
            }
            NodePtr first = star_or_test();
            if (at_kw("for") || at_kw("async")) {
                NodePtr comp = comprehension(std::move(first), p, "listcomp");
                expect_op("]");
                return comp;
            }
            list->add(std::move(first));
            while (at_op(",")) {
                advance();
                if (at_op("]")) break;
                list->add(star_or_test());
            }
            expect_op("]");
            return list;
        }
        if (t.text == "{") return brace_display();
        if (t.text == "...") {
            advance();
            return make_node(NodeKind::Other, p, "...");
        }
        if (t.text == "*") {
            return star_or_test();
        }
        fail("unexpected '" + t.text + "'");
    }

    NodePtr brace_display() {
        const Position p = advance().pos;
        if (at_op("}")) {
            advance();
            return make_node(NodeKind::Dict, p);
        }
        if (at_op("**")) {
            return dict_rest(make_node(NodeKind::Dict, p));
        }
        NodePtr first = star_or_test();
        if (at_op(":")) {
            advance();
            NodePtr value = test();
            if (at_kw("for") || at_kw("async")) {
                auto entry = make_node(NodeKind::DictEntry, first->pos);
                entry->add(std::move(first));
                entry->add(std::move(value));
                NodePtr comp = comprehension(std::move(entry), p, "dictcomp");
                expect_op("}");
                return comp;
            }
            auto dict = make_node(NodeKind::Dict, p);
            auto entry = make_node(NodeKind::DictEntry, first->pos);
            entry->add(std::move(first));
            entry->add(std::move(value));
            dict->add(std::move(entry));
            if (at_op(",")) {
                advance();
                return dict_rest(std::move(dict));
            }
            expect_op("}");
            return dict;
        }
        if (at_kw("for") || at_kw("async")) {
            NodePtr comp = comprehension(std::move(first), p, "setcomp");
            expect_op("}");
            return comp;
        }
        auto set = make_node(NodeKind::List, p);
        set->flags |= flag::kSet;
        set->add(std::move(first));
        while (at_op(",")) {
            advance();
            if (at_op("}")) break;
            set->add(star_or_test());
        }
        expect_op("}");
        return set;
    }

    NodePtr dict_rest(NodePtr dict) {
        while (!at_op("}")) {
            if (at_op("**")) {
                const Position sp = advance().pos;
                auto s = make_node(NodeKind::Spread, sp, "**");
                s->add(bitor_expr());
                dict->add(std::move(s));
            } else {
                NodePtr key = test();
                expect_op(":");
                auto entry = make_node(NodeKind::DictEntry, key->pos);
                entry->add(std::move(key));
                entry->add(test());
                dict->add(std::move(entry));
            }
            if (!at_op(",")) break;
            advance();
        }
        expect_op("}");
        return dict;
    }

    NodePtr strings() {
        const Position p = peek().pos;
        std::vector<Token> parts;
        while (at(Tok::String)) parts.push_back(advance());
        bool any_f = false;
        bool bytes = false;
        for (const auto& t : parts) {
            any_f = any_f || t.fstring;
            bytes = bytes || t.bytes;
        }
        if (!any_f) {
            std::string text;
            for (const auto& t : parts) text += t.text;
            auto s = make_node(NodeKind::String, p, std::move(text));
            if (bytes) s->flags |= flag::kBytes;
            return s;
        }
        auto tpl = make_node(NodeKind::Template, p, "f");
        std::string pending;
        Position pending_pos = p;
        auto flush = [&] {
            if (!pending.empty()) tpl->add(make_node(NodeKind::String, pending_pos, std::move(pending)));
            pending.clear();
        };
        for (const auto& t : parts) {
            if (!t.fstring) {
                if (pending.empty()) pending_pos = t.pos;
                pending += t.text;
                continue;
            }
            split_fstring(t, *tpl, pending, pending_pos, flush);
        }
        flush();
        return tpl;
    }

    template <typename Flush>
    void split_fstring(const Token& t, Node& tpl, std::string& pending, Position& pending_pos,
                       Flush&& flush) {
        const std::string& body = t.body;
        std::string literal;
        auto offset_pos = [&](size_t off) {
            Position q = t.body_pos;
            for (size_t k = 0; k < off && k < body.size(); ++k) {
                if (body[k] == '\n') {
                    ++q.line;
                    q.column = 0;
                } else {
                    ++q.column;
                }
            }
            return q;
        };
        auto emit_literal = [&] {
            if (literal.empty()) return;
            if (pending.empty()) pending_pos = t.pos;
            pending += t.raw ? literal : decode_python_escapes(literal);
            literal.clear();
        };
        size_t i = 0;
        while (i < body.size()) {
            const char c = body[i];
            if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
                literal += '{';
                i += 2;
                continue;
            }
            if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
                literal += '}';
                i += 2;
                continue;
            }
            if (c != '{') {
                literal += c;
                ++i;
                continue;
            }
            emit_literal();
            // Expression runs to the first depth-0 '}', '!conv', ':spec' or '='.
            size_t j = i + 1;
            int depth = 0;
            char quote = 0;
            size_t expr_end = std::string::npos;
            while (j < body.size()) {
                const char d = body[j];
                if (quote != 0) {
                    if (d == '\\') {
                        j += 2;
                        continue;
                    }
                    if (d == quote) quote = 0;
                    ++j;
                    continue;
                }
                if (d == '\'' || d == '"') {
                    quote = d;
                } else if (d == '(' || d == '[' || d == '{') {
                    ++depth;
                } else if (d == ')' || d == ']' || d == '}') {
                    if (depth == 0) {
                        if (expr_end == std::string::npos) expr_end = j;
                        break;
                    }
                    --depth;
                } else if (depth == 0 && expr_end == std::string::npos) {
                    if (d == '!' && j + 1 < body.size() && body[j + 1] != '=') expr_end = j;
                    if (d == ':') expr_end = j;
                    if (d == '=' && j + 1 < body.size() &&
                        (body[j + 1] == '}' || body[j + 1] == '!' || body[j + 1] == ':') &&
                        j > 0 && body[j - 1] != '=' && body[j - 1] != '!' && body[j - 1] != '<' &&
                        body[j - 1] != '>') {
                        expr_end = j;
                    }
                }
                ++j;
            }
            if (expr_end == std::string::npos) expr_end = j;
            const std::string expr_text = body.substr(i + 1, expr_end - i - 1);
            flush();
            Lexer sub(expr_text, diags_, offset_pos(i + 1));
            Parser sub_parser(sub.run(), diags_);
            if (NodePtr e = sub_parser.parse_expression_only()) tpl.add(std::move(e));
            i = j < body.size() ? j + 1 : j;
        }
        emit_literal();
    }

    std::vector<Token> toks_;
    std::vector<Diagnostic>& diags_;
    size_t idx_ = 0;
};

}  // namespace

NodePtr parse_python(std::string_view source, std::vector<Diagnostic>& diagnostics) {
    Lexer lexer(source, diagnostics);
    Parser parser(lexer.run(), diagnostics);
    return parser.parse_module();
}

}  // namespace cryptaudit::ast
