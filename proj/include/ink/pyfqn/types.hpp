#pragma once

#include <optional>
#include <string>
#include <tuple>

#include "ink/error.hpp"
#include "ink/jsonl.hpp"

namespace ink::pyfqn {

enum class BindingKind { plain_import, from_import, aliased_import, aliased_from_import };

inline const char* to_string(BindingKind k) {
    switch (k) {
        case BindingKind::plain_import: return "plain_import";
        case BindingKind::from_import: return "from_import";
        case BindingKind::aliased_import: return "aliased_import";
        case BindingKind::aliased_from_import: return "aliased_from_import";
    }
    return "?";
}

inline bool is_aliased(BindingKind k) {
    return k == BindingKind::aliased_import || k == BindingKind::aliased_from_import;
}

struct Position {
    int line = 0;
    int col = 0;
    auto operator<=>(const Position&) const = default;
};

struct Span {
    Position begin;
    Position end;
    auto operator<=>(const Span&) const = default;
};

struct ImportBinding {
    std::string local_name;
    std::string target_fqn;
    BindingKind kind = BindingKind::plain_import;
    Span span;  // whole import statement
};

enum class Origin { call, import_only, alias_call };

inline const char* to_string(Origin o) {
    switch (o) {
        case Origin::call: return "call";
        case Origin::import_only: return "import_only";
        case Origin::alias_call: return "alias_call";
    }
    return "?";
}

inline Origin origin_from_string(std::string_view s) {
    if (s == "call") return Origin::call;
    if (s == "import_only") return Origin::import_only;
    if (s == "alias_call") return Origin::alias_call;
    throw DataError("unknown usage origin '" + std::string(s) + "'");
}

// How the alias was introduced: `import a.b as k` or `from a import b as k`.
enum class AliasForm { import_as, from_import_as };

struct AliasRef {
    std::string name;
    std::string imported_fqn;
    AliasForm form = AliasForm::import_as;

    auto operator<=>(const AliasRef&) const = default;
};

struct ApiUsage {
    std::string fqn;
    Origin origin = Origin::call;
    std::optional<AliasRef> alias;
    std::string repo_id;
    std::string rel_path;
    Position site;

    std::string library() const { return fqn.substr(0, fqn.find('.')); }

    auto order_key() const { return std::tie(repo_id, rel_path, site, fqn); }
};

inline json to_json(const AliasRef& a) {
    return {{"name", a.name},
            {"imported_fqn", a.imported_fqn},
            {"form", a.form == AliasForm::import_as ? "import" : "from"}};
}

inline AliasRef alias_from_json(const json& j) {
    AliasRef a;
    a.name = j.at("name").get<std::string>();
    a.imported_fqn = j.at("imported_fqn").get<std::string>();
    a.form = j.value("form", "import") == "from" ? AliasForm::from_import_as : AliasForm::import_as;
    return a;
}

inline json to_json(const ApiUsage& u) {
    json j = {{"fqn", u.fqn},         {"origin", to_string(u.origin)}, {"repo_id", u.repo_id},
              {"rel_path", u.rel_path}, {"line", u.site.line},          {"col", u.site.col}};
    if (u.alias) j["alias"] = to_json(*u.alias);
    return j;
}

inline ApiUsage usage_from_json(const json& j) {
    ApiUsage u;
    u.fqn = j.at("fqn").get<std::string>();
    u.origin = origin_from_string(j.at("origin").get<std::string>());
    if (j.contains("alias") && !j["alias"].is_null()) u.alias = alias_from_json(j["alias"]);
    u.repo_id = j.value("repo_id", "");
    u.rel_path = j.value("rel_path", "");
    u.site = {j.value("line", 0), j.value("col", 0)};
    return u;
}

inline json to_json(const ImportBinding& b) {
    return {{"local_name", b.local_name},
            {"target_fqn", b.target_fqn},
            {"kind", to_string(b.kind)},
            {"span", {b.span.begin.line, b.span.begin.col, b.span.end.line, b.span.end.col}}};
}

}  // namespace ink::pyfqn
