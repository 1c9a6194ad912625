#include "cryptaudit/error.hpp"
#include "cryptaudit/ir.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>

namespace cryptaudit {

using ojson = nlohmann::ordered_json;

namespace {

ojson argument_json(const Argument& a) {
    ojson j;
    if (const int* i = std::get_if<int>(&a.position)) {
        j["position"] = *i;
    } else {
        j["position"] = std::get<std::string>(a.position);
    }
    j["tag"] = to_string(a.tag);
    j["value"] = a.value;
    if (a.element_tags) {
        ojson tags = ojson::array();
        for (auto t : *a.element_tags) tags.push_back(to_string(t));
        j["element_tags"] = std::move(tags);
    } else {
        j["element_tags"] = nullptr;
    }
    return j;
}

[[noreturn]] void malformed(size_t index, std::string_view what) {
    throw Error(ErrorKind::MalformedIr, fmt::format("unit {}: {}", index, what));
}

template <typename T>
T field(const ojson& obj, const char* key, size_t index) {
    auto it = obj.find(key);
    if (it == obj.end()) malformed(index, fmt::format("missing field '{}'", key));
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        malformed(index, fmt::format("field '{}' has the wrong type", key));
    }
}

}  // namespace

std::string serialize_ir(std::vector<IrUnit> units) {
    std::stable_sort(units.begin(), units.end(), [](const IrUnit& a, const IrUnit& b) {
        return std::tie(a.file, a.line, a.column) < std::tie(b.file, b.line, b.column);
    });
    ojson doc = ojson::array();
    for (const auto& u : units) {
        ojson j;
        j["unit_id"] = u.unit_id;
        j["call_name"] = u.call_name;
        j["file"] = u.file;
        j["line"] = u.line;
        j["column"] = u.column;
        j["scope"] = u.scope;
        j["produced_as"] = u.produced_as ? ojson(*u.produced_as) : ojson(nullptr);
        j["parent_context"] = to_string(u.parent_context);
        ojson args = ojson::array();
        for (const auto& a : u.arguments) args.push_back(argument_json(a));
        j["arguments"] = std::move(args);
        doc.push_back(std::move(j));
    }
    return doc.dump(2);
}

std::vector<IrUnit> deserialize_ir(std::string_view text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedIr, fmt::format("invalid JSON: {}", e.what()));
    }
    if (!doc.is_array()) throw Error(ErrorKind::MalformedIr, "IR document must be an array");
    std::vector<IrUnit> out;
    for (size_t i = 0; i < doc.size(); ++i) {
        const auto& j = doc[i];
        if (!j.is_object()) malformed(i, "not an object");
        IrUnit u;
        u.unit_id = field<std::string>(j, "unit_id", i);
        u.call_name = field<std::string>(j, "call_name", i);
        if (u.call_name.empty()) malformed(i, "empty call_name");
        u.file = field<std::string>(j, "file", i);
        u.line = field<int>(j, "line", i);
        u.column = field<int>(j, "column", i);
        if (u.line < 1 || u.column < 0) malformed(i, "invalid location");
        u.scope = field<std::string>(j, "scope", i);
        if (auto it = j.find("produced_as"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) malformed(i, "produced_as must be a string or null");
            u.produced_as = it->get<std::string>();
        }
        const auto ctx = parse_parent_context(field<std::string>(j, "parent_context", i));
        if (!ctx) malformed(i, "unknown parent_context");
        u.parent_context = *ctx;
        auto args = j.find("arguments");
        if (args == j.end() || !args->is_array()) malformed(i, "arguments must be an array");
        for (const auto& a : *args) {
            if (!a.is_object()) malformed(i, "argument is not an object");
            Argument arg;
            auto pos = a.find("position");
            if (pos == a.end()) malformed(i, "argument without position");
            if (pos->is_number_integer()) {
                arg.position = pos->get<int>();
            } else if (pos->is_string()) {
                arg.position = pos->get<std::string>();
            } else {
                malformed(i, "argument position must be int or string");
            }
            const auto tag = parse_arg_tag(field<std::string>(a, "tag", i));
            if (!tag) malformed(i, "unknown argument tag");
            arg.tag = *tag;
            arg.value = field<std::string>(a, "value", i);
            if (auto et = a.find("element_tags"); et != a.end() && !et->is_null()) {
                if (!et->is_array()) malformed(i, "element_tags must be an array or null");
                std::vector<ArgTag> tags;
                for (const auto& t : *et) {
                    const auto parsed = t.is_string() ? parse_arg_tag(t.get<std::string>()) : std::nullopt;
                    if (!parsed) malformed(i, "unknown element tag");
                    tags.push_back(*parsed);
                }
                arg.element_tags = std::move(tags);
            }
            u.arguments.push_back(std::move(arg));
        }
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace cryptaudit
