#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/jsonl.hpp"
#include "ink/probe/predictor.hpp"
#include "ink/probe/protocol.hpp"
#include "ink/quizforge/quiz.hpp"

namespace ink::probe {

using quizforge::PopQuiz;

inline std::map<std::string, std::string> answer_key(std::span<const PopQuiz> quizzes) {
    std::map<std::string, std::string> out;
    for (const auto& q : quizzes) out.emplace(q.quiz_id, q.answer);
    return out;
}

// Responses come back in quiz order regardless of completion order.
inline std::vector<PredictionResponse> evaluate(std::span<const PopQuiz> quizzes, Predictor& predictor,
                                                const EvalOptions& opt = {}) {
    if (opt.k < 1) throw ConfigError("k must be >= 1");
    std::set<std::string> ids;
    std::vector<PredictionRequest> reqs;
    for (const auto& q : quizzes) {
        if (!ids.insert(q.quiz_id).second) throw DataError("duplicate quiz_id " + q.quiz_id + " in quiz set");
        reqs.push_back({q.quiz_id, q.template_text, opt.k});
    }
    auto out = predictor.run(reqs, opt);
    if (out.size() != reqs.size()) throw ProtocolError("predictor returned " + std::to_string(out.size()) + " responses for " +
                                                       std::to_string(reqs.size()) + " requests");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].quiz_id != reqs[i].quiz_id) throw ProtocolError("response order does not match requests at " + reqs[i].quiz_id);
    }
    return out;
}

inline void write_journal(const std::filesystem::path& path, std::span<const PredictionResponse> responses) {
    JsonlWriter w(path);
    for (const auto& r : responses) w.write(to_json(r));
}

inline std::vector<PredictionResponse> read_journal(const std::filesystem::path& path) {
    std::vector<PredictionResponse> out;
    std::set<std::string> seen;
    for (const auto& row : read_jsonl(path)) {
        PredictionResponse r;
        try {
            r = response_from_json(row);
        } catch (const ProtocolError& e) {
            throw DataError(path.string() + ": " + e.what());
        }
        if (!seen.insert(r.quiz_id).second) throw DataError(path.string() + ": duplicate quiz_id " + r.quiz_id);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ink::probe
