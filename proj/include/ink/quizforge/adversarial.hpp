#pragma once

// Adversarial aliases: each alias quiz is re-rendered with aliases drawn from
// bindings of *other* modules ("import numpy as pmd\npmd.linalg.[MASK]").
// Every quiz samples from its own generator seeded by (seed, quiz_id), so
// results do not depend on processing order or thread count.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/hash.hpp"
#include "ink/pyfqn/types.hpp"
#include "ink/quizforge/quiz.hpp"

namespace ink::quizforge {

// SplitMix64; small, well-distributed and trivially reproducible.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do x = next();
        while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t quiz_seed(std::uint64_t seed, const std::string& quiz_id) {
    SplitMix64 mix(seed ^ fnv1a64(quiz_id));
    return mix.next();
}

// imported module/member -> alias names bound to it anywhere in the corpus
using AliasPool = std::map<std::string, std::set<std::string>>;

inline AliasPool collect_alias_pool(std::span<const pyfqn::ApiUsage> usages) {
    AliasPool pool;
    for (const auto& u : usages) {
        if (u.alias) pool[u.alias->imported_fqn].insert(u.alias->name);
    }
    return pool;
}

inline AliasPool collect_alias_pool(std::span<const PopQuiz> quizzes) {
    AliasPool pool;
    for (const auto& q : quizzes) {
        if (q.meta.alias) pool[q.meta.alias->imported_fqn].insert(q.meta.alias->name);
    }
    return pool;
}

// Aliases bound to other modules, minus any bound to this one; an alias that
// occurs inside the answer token is excluded so it cannot leak the answer.
inline std::vector<std::string> replacement_candidates(const AliasPool& pool, const pyfqn::AliasRef& alias,
                                                       const std::string& answer = {}) {
    std::set<std::string> own;
    if (auto it = pool.find(alias.imported_fqn); it != pool.end()) own = it->second;
    own.insert(alias.name);
    std::set<std::string> cands;
    for (const auto& [module, names] : pool) {
        if (module == alias.imported_fqn) continue;
        for (const auto& n : names) {
            if (!own.count(n) && (answer.empty() || answer.find(n) == std::string::npos)) cands.insert(n);
        }
    }
    return {cands.begin(), cands.end()};
}

// Swaps the alias in "<import line> as K\nK.<call>" for `replacement`.
inline std::string replace_alias(const std::string& statement, const std::string& alias, const std::string& replacement) {
    const std::string head_tail = " as " + alias + "\n" + alias + ".";
    auto pos = statement.find(head_tail);
    if (pos == std::string::npos || statement.find(head_tail, pos + 1) != std::string::npos) {
        throw DataError("alias statement does not have the expected shape: " + statement);
    }
    std::string out = statement;
    out.replace(pos, head_tail.size(), " as " + replacement + "\n" + replacement + ".");
    return out;
}

struct AdversarialResult {
    std::vector<PopQuiz> quizzes;
    std::size_t base_quizzes = 0;
    std::size_t short_pool = 0;  // quizzes that got fewer than n_variants
    std::vector<Warning> warnings;
};

inline AdversarialResult make_adversarial(std::span<const PopQuiz> quizzes, const AliasPool& pool, std::uint64_t seed,
                                          std::size_t n_variants = 10) {
    AdversarialResult r;
    for (const auto& base : quizzes) {
        if (base.family != Family::alias || base.nl_context) continue;
        if (!base.meta.alias) throw DataError("alias quiz " + base.quiz_id + " carries no alias binding");
        ++r.base_quizzes;
        auto cands = replacement_candidates(pool, *base.meta.alias, base.answer);
        const std::size_t take = std::min(n_variants, cands.size());
        if (take < n_variants) {
            ++r.short_pool;
            r.warnings.push_back({base.quiz_id, 0,
                                  "alias pool offers " + std::to_string(cands.size()) + " of " + std::to_string(n_variants) +
                                      " replacement aliases"});
        }
        SplitMix64 rng(quiz_seed(seed, base.quiz_id));
        for (std::size_t i = 0; i < take; ++i) {
            std::swap(cands[i], cands[i + rng.below(cands.size() - i)]);
            PopQuiz v = base;
            v.family = Family::alias_adv;
            v.template_text = replace_alias(base.template_text, base.meta.alias->name, cands[i]);
            v.meta.adversarial_alias = cands[i];
            v.base_quiz_id = base.quiz_id;
            v.quiz_id = PopQuiz::make_id(v.family, v.template_text, v.answer);
            r.quizzes.push_back(std::move(v));
        }
    }
    return r;
}

}  // namespace ink::quizforge
