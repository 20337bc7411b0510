#pragma once

// Predictor wire protocol, version 1 (one JSON object per line):
//   request  {"v":1,"quiz_id":"..","text":"..[MASK]..","k":50}
//   response {"v":1,"quiz_id":"..","candidates":[{"t":"tok","s":-0.12},..]}
// Candidates are ordered by score descending, ties by token ascending, with
// no two candidates comparing equal. An adapter may answer {"v":1,"quiz_id":
// "..","error":".."} for a request it cannot serve.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/jsonl.hpp"
#include "ink/version.hpp"

namespace ink::probe {

struct Candidate {
    std::string t;
    double s = 0.0;

    bool operator==(const Candidate&) const = default;
};

struct PredictionRequest {
    std::string quiz_id;
    std::string text;
    int k = 50;
};

struct PredictionResponse {
    std::string quiz_id;
    std::vector<Candidate> candidates;
    std::optional<std::string> error;  // set for failed predictions; candidates are then empty
    int attempts = 1;
};

inline json to_json(const PredictionRequest& r) {
    return {{"v", kProtocolVersion}, {"quiz_id", r.quiz_id}, {"text", r.text}, {"k", r.k}};
}

inline PredictionRequest request_from_json(const json& j) {
    if (!j.is_object() || j.value("v", 0) != kProtocolVersion) throw ProtocolError("request is not protocol v1: " + j.dump());
    try {
        PredictionRequest r{j.at("quiz_id").get<std::string>(), j.at("text").get<std::string>(), j.at("k").get<int>()};
        if (r.k < 1) throw ProtocolError("request k must be >= 1");
        return r;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed request: ") + e.what());
    }
}

// Journal and wire form. Failures keep their error text.
inline json to_json(const PredictionResponse& r) {
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back({{"t", c.t}, {"s", c.s}});
    json j = {{"v", kProtocolVersion}, {"quiz_id", r.quiz_id}, {"candidates", cands}};
    if (r.error) j["error"] = *r.error;
    return j;
}

inline PredictionResponse response_from_json(const json& j) {
    if (!j.is_object()) throw ProtocolError("response is not a JSON object: " + j.dump());
    if (j.value("v", 0) != kProtocolVersion) throw ProtocolError("response has wrong protocol version: " + j.dump());
    PredictionResponse r;
    try {
        r.quiz_id = j.at("quiz_id").get<std::string>();
        if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
        if (j.contains("candidates")) {
            for (const auto& c : j["candidates"]) r.candidates.push_back({c.at("t").get<std::string>(), c.at("s").get<double>()});
        } else if (!r.error) {
            throw ProtocolError("response for " + r.quiz_id + " has neither candidates nor error");
        }
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed response: ") + e.what() + ": " + j.dump());
    }
    return r;
}

inline PredictionResponse parse_response_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError("response is not JSON: " + line.substr(0, 200));
    }
    return response_from_json(j);
}

inline bool ranked_before(const Candidate& a, const Candidate& b) { return a.s > b.s || (a.s == b.s && a.t < b.t); }

inline void validate_candidates(const PredictionResponse& r, int k) {
    if (static_cast<int>(r.candidates.size()) > k) {
        throw ProtocolError("response for " + r.quiz_id + " has " + std::to_string(r.candidates.size()) +
                            " candidates, more than k=" + std::to_string(k));
    }
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        if (!std::isfinite(r.candidates[i].s)) {
            throw ProtocolError("response for " + r.quiz_id + ": candidate " + std::to_string(i) + " has a non-finite score");
        }
        if (i > 0 && !ranked_before(r.candidates[i - 1], r.candidates[i])) {
            throw ProtocolError("response for " + r.quiz_id + ": candidates " + std::to_string(i - 1) + " and " +
                                std::to_string(i) + " are not in descending score order");
        }
    }
}

}  // namespace ink::probe
