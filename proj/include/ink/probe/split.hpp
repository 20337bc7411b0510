#pragma once

// Seen/unseen memorization split. Seen: the FQN occurs in the predictor's
// training corpus. Unseen: it does not, and neither does anything from its
// library. Unseen FQNs of seen libraries are dropped.

#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/jsonl.hpp"
#include "ink/quizforge/quiz.hpp"

namespace ink::probe {

struct SplitSpec {
    std::set<std::string> seen_fqns;
    std::set<std::string> unseen_fqns;
    std::set<std::string> seen_libraries;
};

struct SplitResult {
    SplitSpec spec;
    std::vector<quizforge::PopQuiz> seen, unseen, dropped;
    std::set<std::string> dropped_fqns;
};

inline std::string library_of(const std::string& fqn) { return fqn.substr(0, fqn.find('.')); }

// One FQN per line; blank lines and '#' comments are ignored.
inline std::set<std::string> load_fqn_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open training FQN list " + path.string());
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        out.insert(line.substr(b, e - b + 1));
    }
    return out;
}

inline SplitResult split_seen_unseen(std::span<const quizforge::PopQuiz> quizzes, const std::set<std::string>& training) {
    SplitResult r;
    r.spec.seen_fqns = training;
    for (const auto& f : training) r.spec.seen_libraries.insert(library_of(f));
    for (const auto& q : quizzes) {
        if (training.count(q.fqn)) {
            r.seen.push_back(q);
        } else if (!r.spec.seen_libraries.count(library_of(q.fqn))) {
            r.unseen.push_back(q);
            r.spec.unseen_fqns.insert(q.fqn);
        } else {
            r.dropped.push_back(q);
            r.dropped_fqns.insert(q.fqn);
        }
    }
    return r;
}

inline json to_json(const SplitResult& r) {
    return {{"format", "ink-split/1"},
            {"seen_libraries", r.spec.seen_libraries},
            {"unseen_fqns", r.spec.unseen_fqns},
            {"dropped_fqns", r.dropped_fqns},
            {"training_fqns", r.spec.seen_fqns.size()},
            {"quizzes", {{"seen", r.seen.size()}, {"unseen", r.unseen.size()}, {"dropped", r.dropped.size()}}}};
}

}  // namespace ink::probe
