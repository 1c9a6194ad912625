#include "cryptaudit/ast.hpp"

#include "cryptaudit/error.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace cryptaudit::ast {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Module: return "Module";
        case NodeKind::FunctionDef: return "FunctionDef";
        case NodeKind::ClassDef: return "ClassDef";
        case NodeKind::Param: return "Param";
        case NodeKind::Decorator: return "Decorator";
        case NodeKind::Block: return "Block";
        case NodeKind::Assign: return "Assign";
        case NodeKind::AugAssign: return "AugAssign";
        case NodeKind::ExprStmt: return "ExprStmt";
        case NodeKind::Return: return "Return";
        case NodeKind::Import: return "Import";
        case NodeKind::ImportAlias: return "ImportAlias";
        case NodeKind::Target: return "Target";
        case NodeKind::Statement: return "Statement";
        case NodeKind::ErrorNode: return "ErrorNode";
        case NodeKind::Call: return "Call";
        case NodeKind::Name: return "Name";
        case NodeKind::Attribute: return "Attribute";
        case NodeKind::Subscript: return "Subscript";
        case NodeKind::Slice: return "Slice";
        case NodeKind::String: return "String";
        case NodeKind::Number: return "Number";
        case NodeKind::Bool: return "Bool";
        case NodeKind::Null: return "Null";
        case NodeKind::Template: return "Template";
        case NodeKind::List: return "List";
        case NodeKind::Dict: return "Dict";
        case NodeKind::DictEntry: return "DictEntry";
        case NodeKind::Keyword: return "Keyword";
        case NodeKind::Spread: return "Spread";
        case NodeKind::Binary: return "Binary";
        case NodeKind::Unary: return "Unary";
        case NodeKind::Conditional: return "Conditional";
        case NodeKind::Lambda: return "Lambda";
        case NodeKind::Await: return "Await";
        case NodeKind::Comprehension: return "Comprehension";
        case NodeKind::Other: return "Other";
    }
    return "Other";
}

namespace {

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

std::string join_children(const Node& n, size_t from, std::string_view sep) {
    std::string out;
    for (size_t i = from; i < n.size(); ++i) {
        if (i > from) out += sep;
        out += render(*n.children[i]);
    }
    return out;
}

std::string operand(const Node& n) {
    if (n.kind == NodeKind::Binary || n.kind == NodeKind::Conditional) return "(" + render(n) + ")";
    return render(n);
}

bool word_operator(std::string_view op) {
    return op == "not" || op == "typeof" || op == "void" || op == "delete";
}

}  // namespace

std::string render(const Node& n) {
    switch (n.kind) {
        case NodeKind::Name: return n.text;
        case NodeKind::Attribute: return render(*n.children[0]) + "." + n.text;
        case NodeKind::Call: {
            std::string out = n.has(flag::kNew) ? "new " : "";
            out += render(*n.children[0]);
            out += "(" + join_children(n, 1, ", ") + ")";
            return out;
        }
        case NodeKind::Subscript:
            return render(*n.children[0]) + "[" + (n.size() > 1 ? render(*n.children[1]) : "") + "]";
        case NodeKind::Slice: return join_children(n, 0, ":");
        case NodeKind::String: return (n.has(flag::kBytes) ? "b" : "") + quote(n.text);
        case NodeKind::Number:
        case NodeKind::Bool:
        case NodeKind::Null: return n.text;
        case NodeKind::Template: {
            std::string out = "`";
            for (const auto& part : n.children) {
                if (part->kind == NodeKind::String) {
                    out += part->text;
                } else {
                    out += "${" + render(*part) + "}";
                }
            }
            return out + "`";
        }
        case NodeKind::List: {
            const char* open = n.has(flag::kTuple) ? "(" : n.has(flag::kSet) ? "{" : "[";
            const char* close = n.has(flag::kTuple) ? ")" : n.has(flag::kSet) ? "}" : "]";
            return open + join_children(n, 0, ", ") + close;
        }
        case NodeKind::Dict: return "{" + join_children(n, 0, ", ") + "}";
        case NodeKind::DictEntry: return render(*n.children[0]) + ": " + render(*n.children[1]);
        case NodeKind::Keyword: return n.text + "=" + render(*n.children[0]);
        case NodeKind::Spread: return n.text + render(*n.children[0]);
        case NodeKind::Binary:
            return operand(*n.children[0]) + " " + n.text + " " + operand(*n.children[1]);
        case NodeKind::Unary:
            return n.text + (word_operator(n.text) ? " " : "") + operand(*n.children[0]);
        case NodeKind::Conditional:
            return operand(*n.children[0]) + " ? " + operand(*n.children[1]) + " : " +
                   operand(*n.children[2]);
        case NodeKind::Lambda: return "<lambda>";
        case NodeKind::FunctionDef: return "<function>";
        case NodeKind::ClassDef: return "<class>";
        case NodeKind::Await: return "await " + operand(*n.children[0]);
        case NodeKind::Comprehension: return "<comprehension>";
        case NodeKind::ErrorNode: return "<error>";
        case NodeKind::Other: return n.text.empty() ? "<expr>" : n.text;
        default: return "<" + std::string(to_string(n.kind)) + ">";
    }
}

// ---------------------------------------------------------------------------
// Symbol table

namespace {

std::string anonymous_name(const Node& fn) {
    if (fn.kind == NodeKind::Lambda) return "<lambda>";
    const Node* p = fn.parent;
    if (p == nullptr) return "<anonymous>";
    if ((p->kind == NodeKind::Assign) && p->children.back().get() == &fn && p->size() >= 2) {
        const Node& target = *p->children[0];
        if (target.kind == NodeKind::Name || target.kind == NodeKind::Attribute) return target.text;
    }
    if (p->kind == NodeKind::DictEntry && p->size() == 2 && p->children[1].get() == &fn) {
        const Node& key = *p->children[0];
        if (key.kind == NodeKind::String || key.kind == NodeKind::Name) return key.text;
    }
    return "<anonymous>";
}

std::string strip_node_prefix(std::string module) {
    if (module.rfind("node:", 0) == 0) module.erase(0, 5);
    return module;
}

class SymbolBuilder {
public:
    explicit SymbolBuilder(std::vector<Scope>& scopes, std::unordered_map<const Node*, int>& owned)
        : scopes_(scopes), owned_(owned) {}

    void run(const Node& root) {
        scopes_.push_back(Scope{"<module>", "<module>", -1, &root, {}});
        owned_[&root] = 0;
        for (const auto& c : root.children) visit(*c, 0);
    }

private:
    int open_scope(const Node& owner, std::string name, int parent) {
        const auto& p = scopes_[static_cast<size_t>(parent)];
        std::string chain = parent == 0 ? name : p.chain + "::" + name;
        scopes_.push_back(Scope{std::move(name), std::move(chain), parent, &owner, {}});
        const int idx = static_cast<int>(scopes_.size() - 1);
        owned_[&owner] = idx;
        return idx;
    }

    void bind(int scope, std::string name, Position pos, BindingKind kind, const Node* node,
              const Node* value = nullptr, std::string target = {}) {
        if (name.empty()) return;
        scopes_[static_cast<size_t>(scope)].bindings.push_back(
            BindingSite{std::move(name), pos, kind, node, value, std::move(target)});
    }

    void bind_pattern(int scope, const Node& target, const Node& stmt, BindingKind kind) {
        switch (target.kind) {
            case NodeKind::Name: bind(scope, target.text, target.pos, kind, &stmt); break;
            case NodeKind::List:
                for (const auto& c : target.children) bind_pattern(scope, *c, stmt, kind);
                break;
            case NodeKind::Dict:
                for (const auto& e : target.children) {
                    if (e->kind == NodeKind::DictEntry && e->size() == 2) {
                        bind_pattern(scope, *e->children[1], stmt, kind);
                    } else if (e->kind == NodeKind::Spread) {
                        bind_pattern(scope, *e->children[0], stmt, kind);
                    }
                }
                break;
            case NodeKind::Spread: bind_pattern(scope, *target.children[0], stmt, kind); break;
            case NodeKind::Assign:  // pattern default: {a = 1}
                if (target.size() >= 1) bind_pattern(scope, *target.children[0], stmt, kind);
                break;
            default: break;
        }
    }

    void visit_function(const Node& fn, int scope) {
        const std::string name = fn.text.empty() ? anonymous_name(fn) : fn.text;
        if (!fn.text.empty() && fn.kind == NodeKind::FunctionDef) {
            bind(scope, fn.text, fn.pos, BindingKind::Function, &fn);
        }
        for (const auto& c : fn.children) {
            if (c->kind == NodeKind::Decorator) visit(*c, scope);
            if (c->kind == NodeKind::Param) {
                for (const auto& d : c->children) visit(*d, scope);
            }
        }
        const int inner = open_scope(fn, name, scope);
        for (const auto& c : fn.children) {
            if (c->kind == NodeKind::Param) {
                if (!c->text.empty()) {
                    bind(inner, c->text, c->pos, BindingKind::Parameter, c.get());
                } else if (!c->children.empty()) {
                    bind_pattern(inner, *c->children[0], *c, BindingKind::Parameter);
                }
            } else if (c->kind != NodeKind::Decorator) {
                visit(*c, inner);
            }
        }
    }

    void visit(const Node& n, int scope) {
        switch (n.kind) {
            case NodeKind::FunctionDef:
            case NodeKind::Lambda: visit_function(n, scope); return;
            case NodeKind::ClassDef: {
                bind(scope, n.text, n.pos, BindingKind::Class, &n);
                for (const auto& c : n.children) {
                    if (c->kind == NodeKind::Decorator ||
                        (c->kind == NodeKind::Statement && c->text == "bases")) {
                        visit(*c, scope);
                    }
                }
                const int inner = open_scope(n, n.text.empty() ? "<class>" : n.text, scope);
                for (const auto& c : n.children) {
                    if (c->kind == NodeKind::Decorator ||
                        (c->kind == NodeKind::Statement && c->text == "bases")) {
                        continue;
                    }
                    visit(*c, inner);
                }
                return;
            }
            case NodeKind::Assign: {
                const Node& value = *n.children.back();
                const size_t ntargets = n.size() - 1;
                for (size_t i = 0; i < ntargets; ++i) {
                    const Node& t = *n.children[i];
                    if (t.kind == NodeKind::Name) {
                        if (is_require(value)) {
                            bind(scope, t.text, t.pos, BindingKind::Import, &n, &value,
                                 strip_node_prefix(value.children[1]->text));
                        } else {
                            bind(scope, t.text, t.pos, BindingKind::Assignment, &n, &value);
                        }
                    } else if (t.kind == NodeKind::Dict && is_require(value)) {
                        // const { createHash } = require("crypto")
                        const std::string module = strip_node_prefix(value.children[1]->text);
                        for (const auto& e : t.children) {
                            if (e->kind != NodeKind::DictEntry || e->size() != 2) continue;
                            const Node& local = *e->children[1];
                            if (local.kind != NodeKind::Name) continue;
                            bind(scope, local.text, local.pos, BindingKind::Import, &n, nullptr,
                                 module + "." + e->children[0]->text);
                        }
                    } else {
                        bind_pattern(scope, t, n, BindingKind::Assignment);
                    }
                }
                break;
            }
            case NodeKind::AugAssign:
                if (!n.children.empty() && n.children[0]->kind == NodeKind::Name) {
                    bind(scope, n.children[0]->text, n.children[0]->pos, BindingKind::Assignment, &n);
                }
                break;
            case NodeKind::Import:
                for (const auto& a : n.children) {
                    if (a->kind == NodeKind::ImportAlias) {
                        bind(scope, a->text, a->pos, BindingKind::Import, &n, nullptr, a->value);
                    }
                }
                return;
            case NodeKind::Target:
                if (!n.children.empty()) bind_pattern(scope, *n.children[0], n, BindingKind::Other);
                break;
            default: break;
        }
        for (const auto& c : n.children) visit(*c, scope);
    }

    static bool is_require(const Node& value) {
        return value.kind == NodeKind::Call && value.size() == 2 &&
               value.children[0]->kind == NodeKind::Name && value.children[0]->text == "require" &&
               value.children[1]->kind == NodeKind::String;
    }

    std::vector<Scope>& scopes_;
    std::unordered_map<const Node*, int>& owned_;
};

}  // namespace

SymbolTable SymbolTable::build(const Node& root) {
    SymbolTable table;
    SymbolBuilder(table.scopes_, table.owned_).run(root);
    return table;
}

int SymbolTable::scope_for(const Node& node) const {
    const Node* prev = &node;
    const Node* cur = node.parent;
    while (cur != nullptr) {
        if (auto it = owned_.find(cur); it != owned_.end()) {
            const bool outer = prev->kind == NodeKind::Decorator || prev->kind == NodeKind::Param ||
                               (prev->kind == NodeKind::Statement && prev->text == "bases");
            if (!outer) return it->second;
        }
        prev = cur;
        cur = cur->parent;
    }
    return 0;
}

const BindingSite* SymbolTable::lookup(int scope, std::string_view name, Position at) const {
    for (int s = scope; s >= 0; s = scopes_[static_cast<size_t>(s)].parent) {
        const auto& bindings = scopes_[static_cast<size_t>(s)].bindings;
        const BindingSite* best = nullptr;
        const BindingSite* last = nullptr;
        for (const auto& b : bindings) {
            if (b.name != name) continue;
            if (last == nullptr || last->pos < b.pos) last = &b;
            if (b.pos <= at && (best == nullptr || best->pos < b.pos)) best = &b;
        }
        if (best != nullptr) return best;
        if (s != scope && last != nullptr) return last;
    }
    return nullptr;
}

std::string SymbolTable::resolve_alias(int scope, std::string_view name, Position at) const {
    const BindingSite* b = lookup(scope, name, at);
    if (b != nullptr && b->kind == BindingKind::Import) return b->import_target;
    return {};
}

AstHandle::AstHandle(NodePtr root, Language lang, std::vector<Diagnostic> diagnostics)
    : root_(std::move(root)),
      language_(lang),
      diagnostics_(std::move(diagnostics)),
      symbols_(std::make_unique<SymbolTable>(SymbolTable::build(*root_))) {}

AstHandle parse_source(std::string_view source, Language lang) {
    std::vector<Diagnostic> diags;
    NodePtr root;
    switch (lang) {
        case Language::Python: root = parse_python(source, diags); break;
        case Language::JavaScript: root = parse_javascript(source, false, diags); break;
        case Language::TypeScript: root = parse_javascript(source, true, diags); break;
        case Language::Unknown:
            throw Error(ErrorKind::UnsupportedLanguage, "no front-end for language Unknown");
    }
    if (!root) throw Error(ErrorKind::FatalParseError, "front-end produced no tree");
    return AstHandle(std::move(root), lang, std::move(diags));
}

AstHandle parse_to_ast(const SourceFile& file) {
    if (file.language == Language::Unknown) {
        throw Error(ErrorKind::UnsupportedLanguage,
                    fmt::format("{}: unsupported language", file.relative_path));
    }
    return parse_source(file.content, file.language);
}

}  // namespace cryptaudit::ast
