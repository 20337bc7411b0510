#pragma once

// P@k scoring. Micro aggregation counts hits exactly in integers; percentages
// are rounded to two decimals half-to-even. Macro aggregation averages the
// per-FQN hit rates.

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <set>
#include <stdexcept>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/jsonl.hpp"
#include "ink/probe/protocol.hpp"
#include "ink/quizforge/quiz.hpp"
#include "ink/tokvocab/profile.hpp"

namespace ink::probe {

inline const std::vector<int> kDefaultKs = {1, 5, 10, 20, 30, 40, 50};

enum class Aggregation { micro, macro_by_fqn };

inline const char* to_string(Aggregation a) { return a == Aggregation::micro ? "micro" : "macro_by_fqn"; }

inline Aggregation aggregation_from_string(std::string_view s) {
    if (s == "micro") return Aggregation::micro;
    if (s == "macro" || s == "macro_by_fqn") return Aggregation::macro_by_fqn;
    throw ConfigError("unknown aggregation '" + std::string(s) + "' (micro or macro)");
}

inline std::string normalize_candidate(std::string_view t) {
    static const tokvocab::SurfaceMarkers markers{{"\xC4\xA0", "\xE2\x96\x81"}, "##"};
    return tokvocab::normalize_surface(t, markers);
}

// 1-based position of the answer, 0 when absent.
inline int answer_rank(const std::string& answer, std::span<const Candidate> cands) {
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (normalize_candidate(cands[i].t) == answer) return static_cast<int>(i) + 1;
    }
    return 0;
}

inline bool hit_at(int rank, int k) { return rank > 0 && rank <= k; }

// Hundredths of a percent of hits/n, rounded half to even; exact.
inline std::int64_t centi_percent(std::int64_t hits, std::int64_t n) {
    if (n <= 0) return 0;
    const std::int64_t num = hits * 10000;
    std::int64_t q = num / n;
    const std::int64_t r = num % n;
    if (2 * r > n || (2 * r == n && (q % 2) == 1)) ++q;
    return q;
}

inline std::int64_t centi_percent(double fraction) { return static_cast<std::int64_t>(std::nearbyint(fraction * 10000.0)); }

inline std::string format_centi(std::int64_t c) {
    std::ostringstream os;
    os << c / 100 << '.' << std::setw(2) << std::setfill('0') << c % 100;
    return os.str();
}

struct ScoreRow {
    std::string model;
    std::string family;     // quiz row label, or "all"
    std::string mask_kind;  // first | last | full | all
    Aggregation aggregation = Aggregation::micro;
    std::size_t n = 0;
    std::size_t failed = 0;
    std::vector<std::int64_t> p;  // centi-percent per k

    double at(std::size_t i) const { return static_cast<double>(p[i]) / 100.0; }
};

struct ScoreReport {
    std::string model;
    std::vector<int> ks = kDefaultKs;
    Aggregation aggregation = Aggregation::micro;
    std::vector<ScoreRow> rows;

    const ScoreRow* find(std::string_view family, std::string_view kind) const {
        for (const auto& r : rows) {
            if (r.family == family && r.mask_kind == kind) return &r;
        }
        return nullptr;
    }
};

struct ScoredQuiz {
    const quizforge::PopQuiz* quiz;
    int rank;
    bool failed;
};

inline ScoreRow score_group(std::span<const ScoredQuiz> items, const std::vector<int>& ks, Aggregation agg) {
    ScoreRow row;
    row.aggregation = agg;
    row.n = items.size();
    for (const auto& it : items) row.failed += it.failed ? 1 : 0;
    for (int k : ks) {
        if (agg == Aggregation::micro) {
            std::int64_t hits = 0;
            for (const auto& it : items) hits += hit_at(it.rank, k) ? 1 : 0;
            row.p.push_back(centi_percent(hits, static_cast<std::int64_t>(items.size())));
        } else {
            std::map<std::string, std::pair<std::int64_t, std::int64_t>> by_fqn;  // hits, n
            for (const auto& it : items) {
                auto& [h, c] = by_fqn[it.quiz->fqn];
                h += hit_at(it.rank, k) ? 1 : 0;
                ++c;
            }
            double sum = 0.0;
            for (const auto& [fqn, hc] : by_fqn) sum += static_cast<double>(hc.first) / static_cast<double>(hc.second);
            row.p.push_back(by_fqn.empty() ? 0 : centi_percent(sum / static_cast<double>(by_fqn.size())));
        }
    }
    return row;
}

inline void check_monotone(const ScoreRow& r) {
    for (std::size_t i = 1; i < r.p.size(); ++i) {
        if (r.p[i] < r.p[i - 1]) {
            throw std::logic_error("P@k decreases in row " + r.family + "/" + r.mask_kind);
        }
    }
}

// Every quiz must have a journal entry; entries for unknown quizzes are an error.
inline std::vector<ScoredQuiz> join_journal(std::span<const quizforge::PopQuiz> quizzes,
                                            std::span<const PredictionResponse> journal) {
    std::map<std::string, const PredictionResponse*> by_id;
    for (const auto& r : journal) by_id.emplace(r.quiz_id, &r);
    std::vector<ScoredQuiz> out;
    for (const auto& q : quizzes) {
        auto it = by_id.find(q.quiz_id);
        if (it == by_id.end()) throw DataError("journal has no entry for quiz " + q.quiz_id + " (rerun `ink eval`)");
        out.push_back({&q, answer_rank(q.answer, it->second->candidates), it->second->error.has_value()});
        by_id.erase(it);
    }
    if (!by_id.empty()) throw DataError("journal entry for unknown quiz " + by_id.begin()->first);
    return out;
}

inline std::vector<std::string> ordered_families(std::span<const ScoredQuiz> items) {
    std::vector<std::string> lead = {"call", "import", "alias", "alias_adv"};
    std::set<std::string> present;
    for (const auto& it : items) present.insert(it.quiz->row_label());
    std::vector<std::string> out;
    for (const auto& f : lead) {
        if (present.erase(f)) out.push_back(f);
    }
    out.insert(out.end(), present.begin(), present.end());
    return out;
}

inline ScoreReport score(std::span<const quizforge::PopQuiz> quizzes, std::span<const PredictionResponse> journal,
                         const std::vector<int>& ks = kDefaultKs, Aggregation agg = Aggregation::micro,
                         const std::string& model = "") {
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1 || (i > 0 && ks[i] <= ks[i - 1])) throw ConfigError("k list must be positive and increasing");
    }
    const auto items = join_journal(quizzes, journal);
    ScoreReport rep;
    rep.model = model;
    rep.ks = ks;
    rep.aggregation = agg;
    auto add = [&](const std::string& fam, const std::string& kind, const std::vector<ScoredQuiz>& group) {
        if (group.empty()) return;
        auto row = score_group(group, ks, agg);
        row.model = model;
        row.family = fam;
        row.mask_kind = kind;
        check_monotone(row);
        rep.rows.push_back(std::move(row));
    };
    for (const auto& fam : ordered_families(items)) {
        std::vector<ScoredQuiz> all;
        for (const char* kind : {"first", "last", "full"}) {
            std::vector<ScoredQuiz> g;
            for (const auto& it : items) {
                if (it.quiz->row_label() == fam && tokvocab::to_string(it.quiz->mask_kind) == std::string(kind)) g.push_back(it);
            }
            all.insert(all.end(), g.begin(), g.end());
            add(fam, kind, g);
        }
        add(fam, "all", all);
    }
    add("all", "all", items);
    return rep;
}

inline std::string report_csv(const ScoreReport& rep) {
    std::ostringstream os;
    os << "model,family,mask_kind,aggregation,n,failed";
    for (int k : rep.ks) os << ",P@" << k;
    os << '\n';
    for (const auto& r : rep.rows) {
        os << r.model << ',' << r.family << ',' << r.mask_kind << ',' << to_string(r.aggregation) << ',' << r.n << ','
           << r.failed;
        for (auto c : r.p) os << ',' << format_centi(c);
        os << '\n';
    }
    return os.str();
}

inline json report_json(const ScoreReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows) {
        json p = json::object();
        for (std::size_t i = 0; i < rep.ks.size(); ++i) p["P@" + std::to_string(rep.ks[i])] = format_centi(r.p[i]);
        rows.push_back({{"family", r.family}, {"mask_kind", r.mask_kind}, {"n", r.n}, {"failed", r.failed}, {"p", p}});
    }
    return {{"format", "ink-report/1"},
            {"model", rep.model},
            {"aggregation", to_string(rep.aggregation)},
            {"rounding", "half-even, 2 decimals, percent"},
            {"ks", rep.ks},
            {"rows", rows}};
}

}  // namespace ink::probe
