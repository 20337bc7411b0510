#pragma once

// Natural-language context variants: a query describing the API is put in
// front of the statement ("file directory check from os.path import [MASK]").

#include <algorithm>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/jsonl.hpp"
#include "ink/quizforge/quiz.hpp"
#include "ink/text.hpp"
#include "ink/tokvocab/profile.hpp"

namespace ink::quizforge {

using QueryTable = std::map<std::string, std::vector<std::string>>;

// JSONL rows {"fqn": ..., "queries": [...]}; repeated fqns accumulate.
inline QueryTable load_query_table(const std::filesystem::path& path) {
    QueryTable t;
    for (const auto& row : read_jsonl(path)) {
        try {
            auto& qs = t[row.at("fqn").get<std::string>()];
            for (const auto& q : row.at("queries")) qs.push_back(q.get<std::string>());
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": malformed query row: " + e.what());
        }
    }
    return t;
}

// Up to `n` distinct queries, shortest first by character count, ties
// lexicographic.
inline std::vector<std::string> shortest_queries(std::vector<std::string> qs, std::size_t n) {
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
    std::stable_sort(qs.begin(), qs.end(),
                     [](const auto& a, const auto& b) { return text::codepoint_count(a) < text::codepoint_count(b); });
    if (qs.size() > n) qs.resize(n);
    return qs;
}

struct NlOptions {
    std::size_t max_queries = 10;
    std::size_t max_tokens = 512;
    std::string separator = " ";
    std::vector<Family> families{Family::call, Family::import};
};

struct NlResult {
    std::vector<PopQuiz> quizzes;  // each base quiz followed by its variants
    std::size_t variants = 0;
    std::size_t too_long = 0;
    std::size_t unusable_query = 0;
    std::size_t without_queries = 0;
};

inline NlResult attach_nl_context(std::span<const PopQuiz> quizzes, const QueryTable& table,
                                  const tokvocab::TokenizerProfile& ref, const NlOptions& opt = {}) {
    NlResult r;
    for (const auto& base : quizzes) {
        r.quizzes.push_back(base);
        if (base.nl_context || std::find(opt.families.begin(), opt.families.end(), base.family) == opt.families.end()) continue;
        auto it = table.find(base.fqn);
        if (it == table.end()) {
            ++r.without_queries;
            continue;
        }
        for (const auto& query : shortest_queries(it->second, opt.max_queries)) {
            if (query.empty() || query.find(kMask) != std::string::npos || text::first_invalid_utf8(query)) {
                ++r.unusable_query;
                continue;
            }
            PopQuiz v = base;
            v.template_text = query + opt.separator + base.template_text;
            auto n = ref.count_tokens(v.template_text);
            if (!n) {
                ++r.unusable_query;
                continue;
            }
            if (*n > opt.max_tokens) {
                ++r.too_long;
                continue;
            }
            v.nl_context = query;
            v.nl_separator = opt.separator;
            v.base_quiz_id = base.quiz_id;
            v.quiz_id = PopQuiz::make_id(v.family, v.template_text, v.answer);
            r.quizzes.push_back(std::move(v));
            ++r.variants;
        }
    }
    return r;
}

}  // namespace ink::quizforge
