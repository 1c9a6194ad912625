#pragma once

#include "cryptaudit/ingest.hpp"

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cryptaudit::ast {

struct Position {
    int line = 1;    // 1-based
    int column = 0;  // 0-based, in bytes

    auto operator<=>(const Position&) const = default;
};

// Uniform node kinds shared by every language front-end. Child layout per
// kind:
//   FunctionDef   Decorator* Param* body-statements...      text = name ("" if anonymous)
//   ClassDef      Decorator* Statement("bases")? members...  text = name
//   Param         default-expr?                              text = name ("" for patterns)
//   Lambda        Param* body-expr
//   Block         Target* / header expressions / statements  text = keyword
//   Assign        target+ value                              flags: Declaration
//   AugAssign     target value                               text = operator
//   Import        ImportAlias*                               text = module
//   ImportAlias   -                                          text = local name, value = target
//   Call          callee args...                             flags: New
//   Attribute     object                                     text = member name
//   Subscript     object index
//   Template      String / expression parts in source order
//   Dict          DictEntry(key value) | Spread
//   Keyword       value                                      text = keyword name
enum class NodeKind : std::uint8_t {
    Module,
    FunctionDef,
    ClassDef,
    Param,
    Decorator,
    Block,
    Assign,
    AugAssign,
    ExprStmt,
    Return,
    Import,
    ImportAlias,
    Target,
    Statement,
    ErrorNode,
    Call,
    Name,
    Attribute,
    Subscript,
    Slice,
    String,
    Number,
    Bool,
    Null,
    Template,
    List,
    Dict,
    DictEntry,
    Keyword,
    Spread,
    Binary,
    Unary,
    Conditional,
    Lambda,
    Await,
    Comprehension,
    Other,
};

std::string_view to_string(NodeKind kind);

namespace flag {
inline constexpr std::uint8_t kNew = 1;
inline constexpr std::uint8_t kBytes = 2;
inline constexpr std::uint8_t kTuple = 4;
inline constexpr std::uint8_t kDeclaration = 8;
inline constexpr std::uint8_t kOptional = 16;
inline constexpr std::uint8_t kSet = 32;
}  // namespace flag

struct Node {
    NodeKind kind = NodeKind::Other;
    std::string text;
    std::string value;
    Position pos;
    std::uint8_t flags = 0;
    Node* parent = nullptr;
    std::vector<std::unique_ptr<Node>> children;

    Node() = default;
    Node(NodeKind k, Position p, std::string t = {}) : kind(k), text(std::move(t)), pos(p) {}

    Node& add(std::unique_ptr<Node> child) {
        child->parent = this;
        children.push_back(std::move(child));
        return *children.back();
    }
    const Node* child(size_t i) const { return i < children.size() ? children[i].get() : nullptr; }
    size_t size() const { return children.size(); }
    bool has(std::uint8_t f) const { return (flags & f) != 0; }
};

using NodePtr = std::unique_ptr<Node>;

inline NodePtr make_node(NodeKind kind, Position pos, std::string text = {}) {
    return std::make_unique<Node>(kind, pos, std::move(text));
}

/// Depth-first pre-order visit.
template <typename Fn>
void walk(const Node& node, Fn&& fn) {
    fn(node);
    for (const auto& c : node.children) walk(*c, fn);
}

/// Canonical, formatting-independent rendering of an expression subtree.
std::string render(const Node& node);

struct Diagnostic {
    Position pos;
    std::string message;
};

enum class BindingKind { Assignment, Parameter, Import, Function, Class, Other };

struct BindingSite {
    std::string name;
    Position pos;
    BindingKind kind = BindingKind::Other;
    /// The binding statement (Assign / Param / FunctionDef / ...).
    const Node* node = nullptr;
    /// Right-hand side when the target is a single simple name.
    const Node* value = nullptr;
    /// Qualified target for Import bindings ("hashlib.md5", "crypto").
    std::string import_target;
};

struct Scope {
    std::string name;
    std::string chain;  // "<module>" or "outer::inner"
    int parent = -1;
    const Node* owner = nullptr;
    std::vector<BindingSite> bindings;
};

class SymbolTable {
public:
    static SymbolTable build(const Node& root);

    /// Innermost scope whose evaluation context contains `node`. Decorators,
    /// parameter defaults and class bases belong to the enclosing scope.
    int scope_for(const Node& node) const;
    const Scope& scope(int index) const { return scopes_.at(static_cast<size_t>(index)); }
    size_t scope_count() const { return scopes_.size(); }

    /// Most recent binding of `name` visible from `scope` at `at`. The active
    /// scope only considers bindings at or before `at`; enclosing scopes fall
    /// back to their last binding, since nested function bodies run later.
    const BindingSite* lookup(int scope, std::string_view name, Position at) const;

    /// Qualified import target for `name` if it resolves to an import binding.
    std::string resolve_alias(int scope, std::string_view name, Position at) const;

private:
    std::vector<Scope> scopes_;
    std::unordered_map<const Node*, int> owned_;
};

class AstHandle {
public:
    AstHandle(NodePtr root, Language lang, std::vector<Diagnostic> diagnostics);
    AstHandle(AstHandle&&) noexcept = default;
    AstHandle& operator=(AstHandle&&) noexcept = default;

    const Node& root() const { return *root_; }
    Language language() const { return language_; }
    /// True when the front-end hit syntax errors and recovered.
    bool partial() const { return !diagnostics_.empty(); }
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
    const SymbolTable& symbols() const { return *symbols_; }

private:
    NodePtr root_;
    Language language_;
    std::vector<Diagnostic> diagnostics_;
    std::unique_ptr<SymbolTable> symbols_;
};

/// Front-end entry points. Both always return a tree; syntax errors are
/// recorded as diagnostics and ErrorNode subtrees.
NodePtr parse_python(std::string_view source, std::vector<Diagnostic>& diagnostics);
NodePtr parse_javascript(std::string_view source, bool typescript, std::vector<Diagnostic>& diagnostics);

AstHandle parse_source(std::string_view source, Language lang);
AstHandle parse_to_ast(const SourceFile& file);

}  // namespace cryptaudit::ast
