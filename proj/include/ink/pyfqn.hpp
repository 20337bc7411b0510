#pragma once

// Intra-file resolution of API usages to fully qualified names.
//
//   auto imports = ink::pyfqn::parse_imports(unit);
//   auto usages  = ink::pyfqn::resolve_usages(unit, imports.bindings);
//
// A chain like `np.linalg.qr(x)` under `import numpy as np` becomes
// numpy.linalg.qr with origin alias_call; each import item itself is
// reported once with origin import_only.

#include <algorithm>
#include <set>
#include <span>
#include <vector>

#include "ink/corpus.hpp"
#include "ink/pyfqn/analyzer.hpp"
#include "ink/pyfqn/types.hpp"

namespace ink::pyfqn {

struct ImportParse {
    std::vector<ImportBinding> bindings;
    std::vector<Warning> warnings;
};

struct UsageResult {
    std::vector<ApiUsage> usages;
    std::vector<Warning> warnings;
};

namespace detail {

inline std::vector<Warning> located(std::vector<Warning> ws, const corpus::SourceUnit& unit) {
    for (auto& w : ws) w.where = unit.repo_id + "/" + unit.rel_path;
    return ws;
}

inline auto binding_key(const ImportBinding& b) { return std::tie(b.span, b.local_name, b.target_fqn); }

}  // namespace detail

inline ImportParse parse_imports(const corpus::SourceUnit& unit) {
    auto fa = analyze(unit.text);
    ImportParse out;
    for (auto& ev : fa.imports) out.bindings.push_back(std::move(ev.binding));
    out.warnings = detail::located(std::move(fa.warnings), unit);
    return out;
}

// Only import statements whose bindings appear in `bindings` count; an import
// missing from that list behaves like an unknown rebinding of its name.
inline UsageResult resolve_usages(const corpus::SourceUnit& unit, std::span<const ImportBinding> bindings) {
    auto fa = analyze(unit.text);
    std::vector<bool> allowed(fa.imports.size(), false);
    for (std::size_t i = 0; i < fa.imports.size(); ++i) {
        const auto key = detail::binding_key(fa.imports[i].binding);
        allowed[i] = std::any_of(bindings.begin(), bindings.end(),
                                 [&](const ImportBinding& b) { return detail::binding_key(b) == key; });
    }

    UsageResult out;
    auto alias_of = [&](const ImportBinding& b) -> std::optional<AliasRef> {
        if (!is_aliased(b.kind)) return std::nullopt;
        return AliasRef{b.local_name, b.target_fqn,
                        b.kind == BindingKind::aliased_import ? AliasForm::import_as : AliasForm::from_import_as};
    };

    for (const auto& site : fa.import_sites) {
        if (!allowed[site.import_index]) continue;
        const auto& b = fa.imports[site.import_index].binding;
        out.usages.push_back({site.fqn, Origin::import_only, alias_of(b), unit.repo_id, unit.rel_path, site.pos});
    }
    for (const auto& use : fa.uses) {
        auto idx = fa.resolve(use, [&](std::size_t i) { return allowed[i]; });
        if (!idx) continue;
        const auto& b = fa.imports[*idx].binding;
        std::string fqn = b.target_fqn;
        for (const auto& a : use.attrs) fqn += "." + a;
        auto alias = alias_of(b);
        Origin origin = alias ? Origin::alias_call : Origin::call;
        out.usages.push_back({std::move(fqn), origin, std::move(alias), unit.repo_id, unit.rel_path, use.pos});
    }
    std::sort(out.usages.begin(), out.usages.end(),
              [](const ApiUsage& a, const ApiUsage& b) { return a.order_key() < b.order_key(); });
    out.warnings = detail::located(std::move(fa.warnings), unit);
    return out;
}

inline UsageResult extract_usages(const corpus::SourceUnit& unit) {
    auto imports = parse_imports(unit);
    return resolve_usages(unit, imports.bindings);
}

}  // namespace ink::pyfqn
