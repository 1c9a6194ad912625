#include "cryptaudit/ir.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>

namespace cryptaudit {

using ast::Node;
using ast::NodeKind;

std::string_view to_string(ArgTag tag) {
    switch (tag) {
        case ArgTag::Constant: return "constant";
        case ArgTag::ListLiteral: return "list_literal";
        case ArgTag::DictLiteral: return "dict_literal";
        case ArgTag::FunctionReturn: return "function_return";
        case ArgTag::Variable: return "variable";
    }
    return "variable";
}

std::string_view to_string(ParentContext ctx) {
    switch (ctx) {
        case ParentContext::AssignmentRhs: return "assignment_rhs";
        case ParentContext::ExpressionStatement: return "expression_statement";
        case ParentContext::ArgumentPosition: return "argument_position";
        case ParentContext::ReturnValue: return "return_value";
        case ParentContext::Other: return "other";
    }
    return "other";
}

std::optional<ArgTag> parse_arg_tag(std::string_view text) {
    for (auto t : {ArgTag::Constant, ArgTag::ListLiteral, ArgTag::DictLiteral, ArgTag::FunctionReturn,
                   ArgTag::Variable}) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

std::optional<ParentContext> parse_parent_context(std::string_view text) {
    for (auto c : {ParentContext::AssignmentRhs, ParentContext::ExpressionStatement,
                   ParentContext::ArgumentPosition, ParentContext::ReturnValue, ParentContext::Other}) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

std::string position_text(const ArgPosition& pos) {
    if (const int* i = std::get_if<int>(&pos)) return std::to_string(*i);
    return std::get<std::string>(pos);
}

Language unit_language(const IrUnit& unit) { return detect_language(unit.file, {}); }

namespace {

constexpr size_t kMaxDigestText = 240;

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string digest(const Node& node) {
    std::string text = ast::render(node);
    if (text.size() > kMaxDigestText) {
        const auto h = fnv1a(text);
        text = fmt::format("{}...#{:016x}", text.substr(0, kMaxDigestText), h);
    }
    return std::string(kExprPrefix) + text;
}

bool identifier_path(std::string_view s) {
    if (s.empty()) return false;
    bool start = true;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (c == '.') {
            if (start) return false;
            start = true;
            continue;
        }
        if (start ? !(std::isalpha(c) || c == '_' || c == '$') : !(std::isalnum(c) || c == '_' || c == '$')) {
            return false;
        }
        start = false;
    }
    return !start;
}

const Node* unwrap_await(const Node* n) {
    while (n != nullptr && n->kind == NodeKind::Await && !n->children.empty()) n = n->children[0].get();
    return n;
}

bool name_chain(const Node& n) {
    if (n.kind == NodeKind::Name) return true;
    if (n.kind == NodeKind::Attribute) return name_chain(*n.children[0]);
    return false;
}

std::string callee_path(const Node& n, const ast::SymbolTable& symbols, const Node& site) {
    switch (n.kind) {
        case NodeKind::Name: {
            const int scope = symbols.scope_for(site);
            std::string target = symbols.resolve_alias(scope, n.text, site.pos);
            if (identifier_path(target)) return target;
            return n.text;
        }
        case NodeKind::Attribute: return callee_path(*n.children[0], symbols, site) + "." + n.text;
        case NodeKind::Call: return callee_path(*n.children[0], symbols, site) + "()";
        case NodeKind::Subscript: return callee_path(*n.children[0], symbols, site) + "[]";
        case NodeKind::Await: return callee_path(*n.children[0], symbols, site);
        default: {
            std::string text = ast::render(n);
            if (text.size() > kMaxDigestText) text = digest(n);
            return text;
        }
    }
}

// Constant literal text, if the node is a literal.
std::optional<std::string> constant_text(const Node& n) {
    switch (n.kind) {
        case NodeKind::String:
        case NodeKind::Number:
        case NodeKind::Bool:
        case NodeKind::Null: return n.text;
        case NodeKind::Template: {
            std::string out;
            for (const auto& part : n.children) {
                if (part->kind != NodeKind::String) return std::nullopt;
                out += part->text;
            }
            return out;
        }
        case NodeKind::Unary:
            if ((n.text == "-" || n.text == "+") && n.size() == 1 && n.children[0]->kind == NodeKind::Number) {
                return (n.text == "-" ? "-" : "") + n.children[0]->text;
            }
            return std::nullopt;
        default: return std::nullopt;
    }
}

std::string dict_key_text(const Node& key) {
    if (key.kind == NodeKind::String || key.kind == NodeKind::Name || key.kind == NodeKind::Number) {
        return key.text;
    }
    return ast::render(key);
}

}  // namespace

std::string call_name_of(const Node& call, const ast::SymbolTable& symbols) {
    return callee_path(*call.children[0], symbols, call);
}

Argument classify_argument(const Node& node, const ast::SymbolTable& symbols) {
    Argument arg;
    const Node* n = &node;
    if (n->kind == NodeKind::Keyword) {
        arg.position = n->text;
        n = n->children[0].get();
    }
    if (auto c = constant_text(*n)) {
        arg.tag = ArgTag::Constant;
        arg.value = *c;
        return arg;
    }
    if (const Node* inner = unwrap_await(n); inner != nullptr && inner->kind == NodeKind::Call) {
        arg.tag = ArgTag::FunctionReturn;
        arg.value = call_name_of(*inner, symbols);
        return arg;
    }
    if (n->kind == NodeKind::List) {
        arg.tag = ArgTag::ListLiteral;
        nlohmann::json values = nlohmann::json::array();
        std::vector<ArgTag> tags;
        for (const auto& e : n->children) {
            const Argument sub = classify_argument(*e, symbols);
            values.push_back(sub.value);
            tags.push_back(sub.tag);
        }
        arg.value = values.dump();
        arg.element_tags = std::move(tags);
        return arg;
    }
    if (n->kind == NodeKind::Dict) {
        arg.tag = ArgTag::DictLiteral;
        nlohmann::ordered_json values = nlohmann::ordered_json::object();
        std::vector<ArgTag> tags;
        for (const auto& e : n->children) {
            if (e->kind == NodeKind::DictEntry && e->size() == 2) {
                const Argument sub = classify_argument(*e->children[1], symbols);
                values[dict_key_text(*e->children[0])] = sub.value;
                tags.push_back(sub.tag);
            } else if (!e->children.empty()) {
                const Argument sub = classify_argument(*e->children[0], symbols);
                values[e->text + ast::render(*e->children[0])] = sub.value;
                tags.push_back(sub.tag);
            }
        }
        arg.value = values.dump();
        arg.element_tags = std::move(tags);
        return arg;
    }
    arg.tag = ArgTag::Variable;
    arg.value = name_chain(*n) ? ast::render(*n) : digest(*n);
    return arg;
}

namespace {

struct Context {
    ParentContext ctx = ParentContext::Other;
    std::optional<std::string> produced_as;
};

Context parent_context(const Node& call) {
    const Node* child = &call;
    const Node* p = call.parent;
    while (p != nullptr && p->kind == NodeKind::Await) {
        child = p;
        p = p->parent;
    }
    Context out;
    if (p == nullptr) return out;
    switch (p->kind) {
        case NodeKind::Assign:
            if (p->children.back().get() == child && p->size() >= 2) {
                out.ctx = ParentContext::AssignmentRhs;
                for (size_t i = 0; i + 1 < p->size(); ++i) {
                    if (p->children[i]->kind == NodeKind::Name) {
                        out.produced_as = p->children[i]->text;
                        break;
                    }
                }
            }
            break;
        case NodeKind::AugAssign:
            if (p->size() == 2 && p->children[1].get() == child) {
                out.ctx = ParentContext::AssignmentRhs;
                if (p->children[0]->kind == NodeKind::Name) out.produced_as = p->children[0]->text;
            }
            break;
        case NodeKind::ExprStmt: out.ctx = ParentContext::ExpressionStatement; break;
        case NodeKind::Call:
            if (p->children[0].get() != child) out.ctx = ParentContext::ArgumentPosition;
            break;
        case NodeKind::Keyword:
            if (p->parent != nullptr && p->parent->kind == NodeKind::Call) out.ctx = ParentContext::ArgumentPosition;
            break;
        case NodeKind::Spread:
            if (p->parent != nullptr && p->parent->kind == NodeKind::Call) out.ctx = ParentContext::ArgumentPosition;
            break;
        case NodeKind::Return: out.ctx = ParentContext::ReturnValue; break;
        default: break;
    }
    return out;
}

IrUnit lower_call(const Node& call, const ast::SymbolTable& symbols, const SourceFile& file) {
    IrUnit u;
    u.call_name = call_name_of(call, symbols);
    u.file = file.relative_path;
    u.line = call.pos.line;
    u.column = call.pos.column;
    u.scope = symbols.scope(symbols.scope_for(call)).chain;
    int index = 0;
    for (size_t i = 1; i < call.size(); ++i) {
        const Node& a = *call.children[i];
        Argument arg = classify_argument(a, symbols);
        if (a.kind != NodeKind::Keyword) arg.position = index++;
        u.arguments.push_back(std::move(arg));
    }
    const Context ctx = parent_context(call);
    u.parent_context = ctx.ctx;
    u.produced_as = ctx.produced_as;
    return u;
}

bool is_call_value(const Node* v) {
    v = unwrap_await(v);
    return v != nullptr && v->kind == NodeKind::Call;
}

}  // namespace

FileIr extract_file_ir(const ast::AstHandle& handle, const SourceFile& file) {
    FileIr out;
    const auto& symbols = handle.symbols();
    std::vector<const Node*> calls;
    ast::walk(handle.root(), [&](const Node& n) {
        if (n.kind == NodeKind::Call) calls.push_back(&n);
    });
    std::stable_sort(calls.begin(), calls.end(), [](const Node* a, const Node* b) { return a->pos < b->pos; });
    out.units.reserve(calls.size());
    for (const Node* c : calls) {
        out.units.push_back(lower_call(*c, symbols, file));
        out.units.back().unit_id = fmt::format("{}#{}", file.relative_path, out.units.size());
    }

    for (size_t s = 0; s < symbols.scope_count(); ++s) {
        const auto& scope = symbols.scope(static_cast<int>(s));
        for (const auto& b : scope.bindings) {
            Binding rec;
            if (b.kind == ast::BindingKind::Assignment) {
                if (b.value == nullptr || is_call_value(b.value)) continue;
                rec.kind = Binding::Kind::Assignment;
                rec.value = classify_argument(*b.value, symbols);
            } else if (b.kind == ast::BindingKind::Parameter) {
                rec.kind = Binding::Kind::Parameter;
                if (b.node != nullptr && b.node->kind == NodeKind::Param && !b.node->text.empty() &&
                    !b.node->children.empty()) {
                    rec.value = classify_argument(*b.node->children[0], symbols);
                }
            } else {
                continue;
            }
            rec.name = b.name;
            rec.file = file.relative_path;
            rec.line = b.pos.line;
            rec.column = b.pos.column;
            rec.scope = scope.chain;
            out.bindings.push_back(std::move(rec));
        }
    }
    std::stable_sort(out.bindings.begin(), out.bindings.end(), [](const Binding& a, const Binding& b) {
        return std::tie(a.line, a.column) < std::tie(b.line, b.column);
    });
    out.partial = handle.partial();
    out.diagnostics = handle.diagnostics();
    return out;
}

std::vector<IrUnit> extract_ir(const ast::AstHandle& handle, const SourceFile& file) {
    return extract_file_ir(handle, file).units;
}

FileIr lower_file(const SourceFile& file) {
    const ast::AstHandle handle = ast::parse_to_ast(file);
    return extract_file_ir(handle, file);
}

}  // namespace cryptaudit
