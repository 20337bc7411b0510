#pragma once

// Quiz construction: one statement per unique FQN (per alias pair for the
// alias family), segmented with the reference profile. Bare single-level
// names are skipped for the call family since "[MASK]" alone carries no
// context; the segmenter itself still accepts them. Every maskable level
// yields a full-mask quiz or first/last partial-mask quizzes, gated on the
// answer being in the unified vocabulary.

#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ink/parallel.hpp"
#include "ink/pyfqn/types.hpp"
#include "ink/quizforge/quiz.hpp"
#include "ink/tokvocab/segment.hpp"
#include "ink/tokvocab/vocab.hpp"

namespace ink::quizforge {

inline PopQuiz quiz_at(const tokvocab::SegmentedStatement& seg, int level, int token, MaskKind kind) {
    PopQuiz q;
    q.family = seg.family;
    q.template_text = seg.render(level, token, kMask);
    q.answer = seg.levels[level][token];
    q.fqn = seg.fqn;
    q.level_index = seg.fqn_level[level];
    q.token_index = token;
    q.mask_kind = kind;
    q.meta.library = seg.fqn.substr(0, seg.fqn.find('.'));
    q.meta.alias = seg.alias;
    q.quiz_id = PopQuiz::make_id(q.family, q.template_text, q.answer);
    return q;
}

// With gate=false every candidate is kept; used to check that first/last
// asymmetry comes from gating alone.
inline std::vector<PopQuiz> make_quizzes(const tokvocab::SegmentedStatement& seg, const tokvocab::UnifiedVocabulary& uvocab,
                                         bool gate = true) {
    std::vector<PopQuiz> out;
    auto keep = [&](int l, int t, MaskKind k) {
        if (!gate || uvocab.contains(seg.levels[l][t])) out.push_back(quiz_at(seg, l, t, k));
    };
    for (std::size_t l = 0; l < seg.levels.size(); ++l) {
        if (seg.fqn_level[l] < 0) continue;
        const int li = static_cast<int>(l);
        const int n = static_cast<int>(seg.levels[l].size());
        if (tokvocab::classify_masking(seg.levels[l]) == tokvocab::LevelMasking::full) {
            keep(li, 0, MaskKind::full);
        } else {
            keep(li, 0, MaskKind::first);
            keep(li, n - 1, MaskKind::last);
        }
    }
    return out;
}

struct StatementSpec {
    Family family;
    std::string fqn;
    std::optional<pyfqn::AliasRef> alias;

    auto operator<=>(const StatementSpec&) const = default;
};

// Unique statements per family, in deterministic order.
inline std::vector<StatementSpec> plan_statements(std::span<const pyfqn::ApiUsage> usages, std::span<const Family> families) {
    std::set<std::string> fqns;
    std::set<std::pair<std::string, pyfqn::AliasRef>> aliased;
    for (const auto& u : usages) {
        fqns.insert(u.fqn);
        if (u.origin == pyfqn::Origin::alias_call && u.alias) aliased.emplace(u.fqn, *u.alias);
    }
    std::vector<StatementSpec> out;
    for (Family f : families) {
        if (f == Family::alias) {
            for (const auto& [fqn, alias] : aliased) out.push_back({f, fqn, alias});
        } else if (f == Family::call || f == Family::import) {
            for (const auto& fqn : fqns) out.push_back({f, fqn, std::nullopt});
        }
    }
    return out;
}

struct GenOptions {
    bool gate = true;
    std::vector<Family> families{Family::call, Family::import, Family::alias};
    unsigned jobs = 1;
};

struct GenResult {
    QuizSet set;
    std::map<std::string, std::size_t> skip_reasons;  // reason class -> count
    std::vector<std::string> skips;                   // "<family> <fqn>: <reason>"
    std::size_t statements = 0;
};

inline GenResult generate_quizzes(std::span<const pyfqn::ApiUsage> usages, const tokvocab::TokenizerProfile& ref,
                                  const tokvocab::UnifiedVocabulary& uvocab, const GenOptions& opt = {}) {
    const auto plan = plan_statements(usages, opt.families);
    std::vector<tokvocab::SegmentOutcome> segs(plan.size());
    parallel_for(plan.size(), opt.jobs, [&](std::size_t i) {
        if (plan[i].family == Family::call && plan[i].fqn.find('.') == std::string::npos) {
            segs[i] = {std::nullopt, "single-level name gives a context-free call quiz: " + plan[i].fqn};
            return;
        }
        segs[i] = tokvocab::segment_statement(plan[i].fqn, plan[i].alias, plan[i].family, ref);
    });

    GenResult r;
    r.set.uvocab_ref = uvocab.ref();
    std::set<std::tuple<std::string, Family, int, MaskKind>> dedup;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!segs[i]) {
            const auto& reason = segs[i].skip_reason;
            ++r.skip_reasons[reason.substr(0, reason.find(':'))];
            r.skips.push_back(std::string(tokvocab::to_string(plan[i].family)) + " " + plan[i].fqn + ": " + reason);
            continue;
        }
        ++r.statements;
        for (auto& q : make_quizzes(*segs[i].seg, uvocab, opt.gate)) {
            if (!dedup.emplace(q.fqn, q.family, q.level_index, q.mask_kind).second) continue;
            if (!ids.insert(q.quiz_id).second) continue;
            r.set.quizzes.push_back(std::move(q));
        }
    }
    return r;
}

}  // namespace ink::quizforge
