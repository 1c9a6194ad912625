#pragma once

#include "cryptaudit/ast.hpp"
#include "cryptaudit/ingest.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cryptaudit {

enum class ArgTag { Constant, ListLiteral, DictLiteral, FunctionReturn, Variable };

enum class ParentContext { AssignmentRhs, ExpressionStatement, ArgumentPosition, ReturnValue, Other };

std::string_view to_string(ArgTag tag);
std::string_view to_string(ParentContext ctx);
std::optional<ArgTag> parse_arg_tag(std::string_view text);
std::optional<ParentContext> parse_parent_context(std::string_view text);

/// Positional index, or keyword name for named arguments.
using ArgPosition = std::variant<int, std::string>;

std::string position_text(const ArgPosition& pos);

struct Argument {
    ArgPosition position = 0;
    ArgTag tag = ArgTag::Variable;
    std::string value;
    std::optional<std::vector<ArgTag>> element_tags;

    bool operator==(const Argument&) const = default;
};

struct IrUnit {
    std::string unit_id;
    std::string call_name;
    std::string file;
    int line = 1;
    int column = 0;
    std::string scope;
    std::vector<Argument> arguments;
    std::optional<std::string> produced_as;
    ParentContext parent_context = ParentContext::Other;

    bool operator==(const IrUnit&) const = default;
};

/// A non-call binding of a simple name (assignment from a literal or other
/// expression, or a function parameter). Kept beside the IR, not in it, so
/// origin resolution can see constants that never pass through a call.
struct Binding {
    enum class Kind { Assignment, Parameter };

    std::string name;
    std::string file;
    int line = 1;
    int column = 0;
    std::string scope;
    Kind kind = Kind::Assignment;
    std::optional<Argument> value;

    bool operator==(const Binding&) const = default;
};

struct FileIr {
    std::vector<IrUnit> units;
    std::vector<Binding> bindings;
    bool partial = false;
    std::vector<ast::Diagnostic> diagnostics;
};

/// Values of complex expressions are prefixed with this marker.
inline constexpr std::string_view kExprPrefix = "expr:";

/// Tags one argument expression. `callee_name` resolves nested call names.
Argument classify_argument(const ast::Node& node, const ast::SymbolTable& symbols);

/// Textual callee path of a call node, with the root name resolved through
/// single-file import aliases.
std::string call_name_of(const ast::Node& call, const ast::SymbolTable& symbols);

std::vector<IrUnit> extract_ir(const ast::AstHandle& ast, const SourceFile& file);
FileIr extract_file_ir(const ast::AstHandle& ast, const SourceFile& file);
/// Parse + extract in one step.
FileIr lower_file(const SourceFile& file);

/// Language of a unit, derived from its file extension.
Language unit_language(const IrUnit& unit);

std::string serialize_ir(std::vector<IrUnit> units);
/// Throws Error{MalformedIr}.
std::vector<IrUnit> deserialize_ir(std::string_view text);

}  // namespace cryptaudit
