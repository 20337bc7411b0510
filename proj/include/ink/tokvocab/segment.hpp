#pragma once

// Splits a call/import/alias statement into module levels, each tokenized on
// its own so structural delimiters ('.', "from ", " import ", " as ", '\n')
// never merge into level tokens.
//
//   call   numpy.linalg.multi_dot              levels numpy | linalg | multi_dot
//   import from numpy.linalg import multi_dot  levels numpy | linalg | multi_dot
//   alias  import numpy as np\nnp.linalg.qr    levels numpy | np | np | linalg | qr
//
// For the alias family only the levels after the alias in the call line are
// maskable; `fqn_level` maps each maskable level back to its module level
// in the fully qualified name and holds -1 elsewhere.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/pyfqn/types.hpp"
#include "ink/text.hpp"
#include "ink/tokvocab/profile.hpp"

namespace ink::tokvocab {

enum class Family { call, import, alias, alias_adv };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::call: return "call";
        case Family::import: return "import";
        case Family::alias: return "alias";
        case Family::alias_adv: return "alias_adv";
    }
    return "?";
}

inline Family family_from_string(std::string_view s) {
    if (s == "call") return Family::call;
    if (s == "import") return Family::import;
    if (s == "alias") return Family::alias;
    if (s == "alias_adv") return Family::alias_adv;
    throw DataError("unknown quiz family '" + std::string(s) + "'");
}

inline bool is_alias_family(Family f) { return f == Family::alias || f == Family::alias_adv; }

enum class MaskKind { first, last, full };

inline const char* to_string(MaskKind k) {
    switch (k) {
        case MaskKind::first: return "first";
        case MaskKind::last: return "last";
        case MaskKind::full: return "full";
    }
    return "?";
}

inline MaskKind mask_kind_from_string(std::string_view s) {
    if (s == "first") return MaskKind::first;
    if (s == "last") return MaskKind::last;
    if (s == "full") return MaskKind::full;
    throw DataError("unknown mask kind '" + std::string(s) + "'");
}

// A level the tokenizer keeps whole is fully masked; otherwise only one of
// its tokens can be.
enum class LevelMasking { full, partial };

inline LevelMasking classify_masking(std::span<const std::string> level_tokens) {
    if (level_tokens.empty()) throw DataError("classify_masking: empty level");
    return level_tokens.size() == 1 ? LevelMasking::full : LevelMasking::partial;
}

struct SegmentedStatement {
    Family family = Family::call;
    std::string fqn;
    std::optional<pyfqn::AliasRef> alias;
    std::vector<std::vector<std::string>> levels;
    std::vector<std::string> delimiters;  // levels.size() + 1 entries, first and last may be empty
    std::vector<int> fqn_level;
    std::string raw_text;

    // Interleaves delimiters and level tokens; a (level, token) pair can be
    // substituted, which is how quiz templates are rendered.
    std::string render(int mask_level = -1, int mask_token = -1, std::string_view replacement = {}) const {
        std::string out = delimiters.empty() ? std::string() : delimiters[0];
        for (std::size_t l = 0; l < levels.size(); ++l) {
            for (std::size_t t = 0; t < levels[l].size(); ++t) {
                if (static_cast<int>(l) == mask_level && static_cast<int>(t) == mask_token) out += replacement;
                else out += levels[l][t];
            }
            out += delimiters[l + 1];
        }
        return out;
    }

    bool same_structure(const SegmentedStatement& o) const {
        return levels == o.levels && delimiters == o.delimiters && fqn_level == o.fqn_level && raw_text == o.raw_text;
    }
};

struct SegmentOutcome {
    std::optional<SegmentedStatement> seg;
    std::string skip_reason;

    explicit operator bool() const { return seg.has_value(); }
};

namespace detail {

struct Layout {
    std::vector<std::string> parts;
    std::vector<std::string> delims;
    std::vector<int> fqn_level;

    void add(std::string part, int level, std::string delim_after) {
        parts.push_back(std::move(part));
        fqn_level.push_back(level);
        delims.push_back(std::move(delim_after));
    }
};

}  // namespace detail

inline SegmentOutcome segment_statement(const std::string& fqn, const std::optional<pyfqn::AliasRef>& alias, Family family,
                                        const TokenizerProfile& profile) {
    if (!text::is_dotted_name(fqn)) return {std::nullopt, "not a dotted name: " + fqn};
    const auto levels = text::split(fqn, '.');
    const int n = static_cast<int>(levels.size());
    detail::Layout lay;

    switch (family) {
        case Family::call:
            lay.delims.push_back("");
            for (int i = 0; i < n; ++i) lay.add(levels[i], i, i + 1 < n ? "." : "");
            break;
        case Family::import:
            if (n < 2) return {std::nullopt, "single-level name cannot form a from-import: " + fqn};
            lay.delims.push_back("from ");
            for (int i = 0; i < n; ++i) lay.add(levels[i], i, i + 2 < n ? "." : i + 2 == n ? " import " : "");
            break;
        case Family::alias:
        case Family::alias_adv: {
            if (!alias) return {std::nullopt, "alias statement without an alias binding"};
            const auto imported = text::split(alias->imported_fqn, '.');
            const int m = static_cast<int>(imported.size());
            if (!text::is_dotted_name(alias->imported_fqn) || !text::is_identifier(alias->name)) {
                return {std::nullopt, "malformed alias binding"};
            }
            if (m >= n || fqn.compare(0, alias->imported_fqn.size() + 1, alias->imported_fqn + ".") != 0) {
                return {std::nullopt, "no call levels after alias " + alias->name + " in " + fqn};
            }
            if (alias->form == pyfqn::AliasForm::import_as) {
                lay.delims.push_back("import ");
                for (int i = 0; i < m; ++i) lay.add(imported[i], -1, i + 1 < m ? "." : " as ");
            } else {
                if (m < 2) return {std::nullopt, "from-import alias needs a module and a member"};
                lay.delims.push_back("from ");
                for (int i = 0; i < m; ++i) lay.add(imported[i], -1, i + 2 < m ? "." : i + 2 == m ? " import " : " as ");
            }
            lay.add(alias->name, -1, "\n");
            lay.add(alias->name, -1, ".");
            for (int i = m; i < n; ++i) lay.add(levels[i], i, i + 1 < n ? "." : "");
            break;
        }
    }

    SegmentedStatement seg;
    seg.family = family;
    seg.fqn = fqn;
    if (is_alias_family(family)) seg.alias = alias;
    seg.delimiters = std::move(lay.delims);
    seg.fqn_level = std::move(lay.fqn_level);
    for (const auto& part : lay.parts) {
        auto toks = profile.tokenize(part);
        if (!toks || toks->empty()) {
            return {std::nullopt, "level not covered by profile '" + profile.model_id + "': " + part};
        }
        seg.levels.push_back(std::move(*toks));
    }
    seg.raw_text = seg.render();
    return {std::move(seg), {}};
}

inline SegmentOutcome segment(const pyfqn::ApiUsage& usage, Family family, const TokenizerProfile& profile) {
    if (is_alias_family(family) && usage.origin != pyfqn::Origin::alias_call) {
        return {std::nullopt, "alias family requires an alias_call usage"};
    }
    return segment_statement(usage.fqn, usage.alias, family, profile);
}

struct ParsedStatement {
    std::string fqn;
    std::optional<pyfqn::AliasRef> alias;
};

// Inverse of rendering: recovers the name (and alias) from a statement text.
inline std::optional<ParsedStatement> parse_statement(std::string_view raw, Family family) {
    auto strip = [](std::string_view s, std::string_view prefix) -> std::optional<std::string_view> {
        if (s.substr(0, prefix.size()) != prefix) return std::nullopt;
        return s.substr(prefix.size());
    };
    auto split_once = [](std::string_view s, std::string_view sep) -> std::optional<std::pair<std::string, std::string>> {
        auto pos = s.find(sep);
        if (pos == std::string_view::npos) return std::nullopt;
        return std::pair{std::string(s.substr(0, pos)), std::string(s.substr(pos + sep.size()))};
    };
    switch (family) {
        case Family::call:
            if (!text::is_dotted_name(raw)) return std::nullopt;
            return ParsedStatement{std::string(raw), std::nullopt};
        case Family::import: {
            auto body = strip(raw, "from ");
            if (!body) return std::nullopt;
            auto mi = split_once(*body, " import ");
            if (!mi || !text::is_dotted_name(mi->first) || !text::is_identifier(mi->second)) return std::nullopt;
            return ParsedStatement{mi->first + "." + mi->second, std::nullopt};
        }
        case Family::alias:
        case Family::alias_adv: {
            auto lines = split_once(raw, "\n");
            if (!lines) return std::nullopt;
            auto& [head, call] = *lines;
            pyfqn::AliasRef alias;
            std::string_view h = head;
            if (auto rest = strip(h, "import ")) {
                auto ia = split_once(*rest, " as ");
                if (!ia) return std::nullopt;
                alias = {ia->second, ia->first, pyfqn::AliasForm::import_as};
            } else if (auto rest2 = strip(h, "from ")) {
                auto mi = split_once(*rest2, " import ");
                if (!mi) return std::nullopt;
                auto ia = split_once(mi->second, " as ");
                if (!ia) return std::nullopt;
                alias = {ia->second, mi->first + "." + ia->first, pyfqn::AliasForm::from_import_as};
            } else {
                return std::nullopt;
            }
            auto tail = strip(call, alias.name + ".");
            if (!tail || !text::is_dotted_name(alias.imported_fqn) || !text::is_identifier(alias.name) ||
                !text::is_dotted_name(*tail)) {
                return std::nullopt;
            }
            return ParsedStatement{alias.imported_fqn + "." + std::string(*tail), alias};
        }
    }
    return std::nullopt;
}

}  // namespace ink::tokvocab
