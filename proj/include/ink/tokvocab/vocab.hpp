#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/hash.hpp"
#include "ink/jsonl.hpp"
#include "ink/tokvocab/profile.hpp"

namespace ink::tokvocab {

// Tokens every registered model can emit; quiz answers are gated on it.
struct UnifiedVocabulary {
    std::set<std::string> tokens;
    std::vector<std::string> source_profiles;

    bool contains(const std::string& t) const { return tokens.count(t) > 0; }

    std::string ref() const {
        std::string buf;
        for (const auto& p : source_profiles) buf += p + '\x1e';
        buf += '\x1d';
        for (const auto& t : tokens) buf += t + '\x1e';
        return sha256_hex(buf).substr(0, 16);
    }
};

inline UnifiedVocabulary build_unified_vocab(std::span<const TokenizerProfile> profiles) {
    if (profiles.empty()) throw ConfigError("unified vocabulary needs at least one tokenizer profile");
    auto smallest = std::min_element(profiles.begin(), profiles.end(), [](const auto& a, const auto& b) {
        return a.vocabulary.size() < b.vocabulary.size();
    });
    UnifiedVocabulary uv;
    for (const auto& tok : smallest->vocabulary) {
        bool everywhere = std::all_of(profiles.begin(), profiles.end(), [&](const auto& p) { return p.contains(tok); });
        if (everywhere) uv.tokens.insert(tok);
    }
    for (const auto& p : profiles) uv.source_profiles.push_back(p.model_id);
    std::sort(uv.source_profiles.begin(), uv.source_profiles.end());
    return uv;
}

inline json to_json(const UnifiedVocabulary& uv) {
    return {{"format", "ink-uvocab/1"},
            {"ref", uv.ref()},
            {"source_profiles", uv.source_profiles},
            {"size", uv.tokens.size()},
            {"tokens", uv.tokens}};
}

inline UnifiedVocabulary uvocab_from_json(const json& j) {
    UnifiedVocabulary uv;
    try {
        uv.source_profiles = j.at("source_profiles").get<std::vector<std::string>>();
        for (const auto& t : j.at("tokens")) uv.tokens.insert(t.get<std::string>());
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed unified vocabulary: ") + e.what());
    }
    if (j.contains("ref") && j["ref"] != uv.ref()) throw DataError("unified vocabulary ref does not match its contents");
    return uv;
}

}  // namespace ink::tokvocab
