#pragma once

// Paired with/without-NL tables. Only base quizzes that have at least one NL
// variant take part; a base quiz scores its own hit indicator on one side and
// the mean indicator of its variants on the other.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/probe/protocol.hpp"
#include "ink/probe/score.hpp"
#include "ink/quizforge/quiz.hpp"

namespace ink::probe {

struct NlRow {
    std::string family;
    std::size_t bases = 0;
    std::size_t variants = 0;
    std::vector<std::int64_t> without_nl;  // centi-percent per k
    std::vector<std::int64_t> with_nl;
};

struct NlComparison {
    std::vector<int> ks;
    std::vector<NlRow> rows;
};

inline NlComparison compare_nl(std::span<const quizforge::PopQuiz> quizzes, std::span<const PredictionResponse> journal,
                               const std::vector<int>& ks = kDefaultKs) {
    const auto items = join_journal(quizzes, journal);
    std::map<std::string, const ScoredQuiz*> base_by_id;
    for (const auto& it : items) {
        if (!it.quiz->nl_context) base_by_id.emplace(it.quiz->quiz_id, &it);
    }
    std::map<std::string, std::vector<const ScoredQuiz*>> variants;  // base id -> variants
    for (const auto& it : items) {
        if (!it.quiz->nl_context) continue;
        if (!it.quiz->base_quiz_id || !base_by_id.count(*it.quiz->base_quiz_id)) {
            throw DataError("NL variant " + it.quiz->quiz_id + " does not link to a base quiz in this set");
        }
        variants[*it.quiz->base_quiz_id].push_back(&it);
    }

    NlComparison out;
    out.ks = ks;
    std::map<std::string, NlRow> by_family;
    std::map<std::string, std::vector<double>> sum_without, sum_with;
    auto accumulate = [&](const std::string& fam, const ScoredQuiz& base, const std::vector<const ScoredQuiz*>& vs) {
        auto& row = by_family[fam];
        row.family = fam;
        ++row.bases;
        row.variants += vs.size();
        auto& sw = sum_without[fam];
        auto& sn = sum_with[fam];
        sw.resize(ks.size());
        sn.resize(ks.size());
        for (std::size_t i = 0; i < ks.size(); ++i) {
            sw[i] += hit_at(base.rank, ks[i]) ? 1.0 : 0.0;
            std::size_t h = 0;
            for (const auto* v : vs) h += hit_at(v->rank, ks[i]) ? 1 : 0;
            sn[i] += static_cast<double>(h) / static_cast<double>(vs.size());
        }
    };
    for (const auto& [id, vs] : variants) {
        const auto& base = *base_by_id.at(id);
        accumulate(tokvocab::to_string(base.quiz->family), base, vs);
        accumulate("all", base, vs);
    }
    std::vector<std::string> order = {"call", "import", "alias", "alias_adv"};
    for (const auto& [fam, row] : by_family) {
        if (fam != "all" && std::find(order.begin(), order.end(), fam) == order.end()) order.push_back(fam);
    }
    order.push_back("all");
    for (const auto& fam : order) {
        auto it = by_family.find(fam);
        if (it == by_family.end()) continue;
        auto row = it->second;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            const double n = static_cast<double>(row.bases);
            row.without_nl.push_back(centi_percent(sum_without[fam][i] / n));
            row.with_nl.push_back(centi_percent(sum_with[fam][i] / n));
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

inline std::string nl_comparison_csv(const NlComparison& c, const std::string& model) {
    std::ostringstream os;
    os << "model,family,context,n_bases,n_variants";
    for (int k : c.ks) os << ",P@" << k;
    os << '\n';
    for (const auto& r : c.rows) {
        for (int side = 0; side < 2; ++side) {
            os << model << ',' << r.family << ',' << (side ? "with_nl" : "without_nl") << ',' << r.bases << ',' << r.variants;
            for (auto v : side ? r.with_nl : r.without_nl) os << ',' << format_centi(v);
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace ink::probe
