#pragma once

// Predictor back ends:
//   cmd:<argv>       child process speaking the protocol over stdin/stdout
//   http:<url>       one POST per request, body and reply are protocol objects
//   mock:<mode>      in-process reference predictors (oracle, never, rank=N,
//                    random:<seed>) that need no model at all

#include <atomic>
#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "httplib.h"
#include "ink/error.hpp"
#include "ink/hash.hpp"
#include "ink/parallel.hpp"
#include "ink/probe/protocol.hpp"
#include "ink/process.hpp"
#include "ink/quizforge/adversarial.hpp"

namespace ink::probe {

struct EvalOptions {
    int k = 50;
    unsigned in_flight = 8;
    int retries = 2;
    std::chrono::milliseconds timeout{30000};
};

class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::string id() const = 0;
    // One response per request, index-aligned; failed predictions carry `error`.
    virtual std::vector<PredictionResponse> run(std::span<const PredictionRequest> requests, const EvalOptions& opt) = 0;
};

inline PredictionResponse failure(const std::string& quiz_id, std::string why, int attempts) {
    PredictionResponse r;
    r.quiz_id = quiz_id;
    r.error = std::move(why);
    r.attempts = attempts;
    return r;
}

// ---------------------------------------------------------------- mock

enum class MockMode { oracle, never, rank, random };

// Fills k slots with scores -1, -2, ...; the answer sits at `rank` (1-based)
// and is absent when rank is 0 or beyond k.
inline std::vector<Candidate> mock_candidates(const std::string& answer, int rank, int k) {
    std::vector<Candidate> out;
    int filler = 0;
    for (int pos = 1; pos <= k; ++pos) {
        std::string t;
        if (pos == rank) {
            t = answer;
        } else {
            do t = "__filler_" + std::to_string(filler++);
            while (t == answer);
        }
        out.push_back({std::move(t), -static_cast<double>(pos)});
    }
    return out;
}

class MockPredictor : public Predictor {
public:
    MockPredictor(const std::string& spec, std::map<std::string, std::string> answers)
        : spec_(spec), answers_(std::move(answers)) {
        if (spec == "oracle") {
            mode_ = MockMode::oracle;
        } else if (spec == "never") {
            mode_ = MockMode::never;
        } else if (spec.rfind("rank=", 0) == 0) {
            mode_ = MockMode::rank;
            rank_ = parse_number(spec.substr(5));
        } else if (spec.rfind("random:", 0) == 0) {
            mode_ = MockMode::random;
            seed_ = parse_number(spec.substr(7));
        } else {
            throw ConfigError("unknown mock predictor '" + spec + "' (oracle, never, rank=N, random:SEED)");
        }
    }

    std::string id() const override { return "mock:" + spec_; }

    PredictionResponse answer(const PredictionRequest& req) const {
        auto it = answers_.find(req.quiz_id);
        if (it == answers_.end()) return failure(req.quiz_id, "mock predictor has no answer for this quiz", 1);
        int rank = 0;
        switch (mode_) {
            case MockMode::oracle: rank = 1; break;
            case MockMode::never: rank = 0; break;
            case MockMode::rank: rank = static_cast<int>(rank_); break;
            case MockMode::random: {
                quizforge::SplitMix64 rng(quizforge::quiz_seed(seed_, req.quiz_id));
                rank = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(req.k))) + 1;
                break;
            }
        }
        PredictionResponse r;
        r.quiz_id = req.quiz_id;
        r.candidates = mock_candidates(it->second, rank, req.k);
        return r;
    }

    std::vector<PredictionResponse> run(std::span<const PredictionRequest> requests, const EvalOptions&) override {
        std::vector<PredictionResponse> out;
        for (const auto& r : requests) out.push_back(answer(r));
        return out;
    }

private:
    std::string spec_;
    std::map<std::string, std::string> answers_;
    MockMode mode_ = MockMode::oracle;
    std::uint64_t rank_ = 1;
    std::uint64_t seed_ = 0;

    static std::uint64_t parse_number(const std::string& s) {
        try {
            std::size_t used = 0;
            auto v = std::stoull(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError("mock predictor: '" + s + "' is not a number");
    }
};

// ---------------------------------------------------------------- cmd

class CmdPredictor : public Predictor {
public:
    explicit CmdPredictor(std::vector<std::string> argv) : argv_(std::move(argv)) {
        if (argv_.empty()) throw ConfigError("cmd predictor needs a command line");
    }

    std::string id() const override {
        std::string s = "cmd:";
        for (std::size_t i = 0; i < argv_.size(); ++i) s += (i ? " " : "") + argv_[i];
        return s;
    }

    std::vector<PredictionResponse> run(std::span<const PredictionRequest> requests, const EvalOptions& opt) override {
        const std::size_t n = requests.size();
        std::vector<std::optional<PredictionResponse>> out(n);
        std::vector<int> attempts(n, 0);
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < n; ++i) index.emplace(requests[i].quiz_id, i);
        std::deque<std::size_t> queue;
        for (std::size_t i = 0; i < n; ++i) queue.push_back(i);
        std::map<std::string, std::size_t> pending;
        if (n == 0) return {};

        ChildProcess proc(argv_);
        auto give_up_or_requeue = [&](std::size_t i, const std::string& why) {
            if (attempts[i] > opt.retries) out[i] = failure(requests[i].quiz_id, why, attempts[i]);
            else queue.push_back(i);
        };
        auto recover = [&](const std::string& why) {
            std::vector<std::size_t> lost;
            for (const auto& [id, i] : pending) lost.push_back(i);
            std::sort(lost.begin(), lost.end());
            pending.clear();
            for (auto i : lost) give_up_or_requeue(i, why);
            proc.restart();
        };

        while (!queue.empty() || !pending.empty()) {
            bool broken = false;
            while (!queue.empty() && pending.size() < std::max(1u, opt.in_flight)) {
                const std::size_t i = queue.front();
                queue.pop_front();
                ++attempts[i];
                pending.emplace(requests[i].quiz_id, i);
                if (!proc.write_line(to_json(requests[i]).dump())) {
                    broken = true;
                    break;
                }
            }
            if (broken) {
                recover("predictor process closed its input");
                continue;
            }
            auto line = proc.read_line(opt.timeout);
            if (!line) {
                recover(proc.eof() ? "predictor process exited" : "predictor timed out");
                continue;
            }
            if (line->empty()) continue;
            auto resp = parse_response_line(*line);
            auto it = pending.find(resp.quiz_id);
            if (it == pending.end()) {
                throw ProtocolError(index.count(resp.quiz_id) ? "unsolicited or duplicate response for quiz_id " + resp.quiz_id
                                                              : "response carries unknown quiz_id " + resp.quiz_id);
            }
            const std::size_t i = it->second;
            pending.erase(it);
            if (resp.error) {
                give_up_or_requeue(i, *resp.error);
                continue;
            }
            validate_candidates(resp, requests[i].k);
            resp.attempts = attempts[i];
            out[i] = std::move(resp);
        }
        std::vector<PredictionResponse> result;
        for (auto& r : out) result.push_back(std::move(*r));
        return result;
    }

private:
    std::vector<std::string> argv_;
};

// ---------------------------------------------------------------- http

class HttpPredictor : public Predictor {
public:
    explicit HttpPredictor(std::string url) : url_(std::move(url)) {
        auto scheme_end = url_.find("://");
        if (scheme_end == std::string::npos) throw ConfigError("http predictor needs a URL like http://host:port/path");
        auto path_start = url_.find('/', scheme_end + 3);
        origin_ = url_.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : url_.substr(path_start);
        if (url_.rfind("https://", 0) == 0) throw ConfigError("https predictors are not supported; use http:// or cmd:");
    }

    std::string id() const override { return "http:" + url_; }

    std::vector<PredictionResponse> run(std::span<const PredictionRequest> requests, const EvalOptions& opt) override {
        std::vector<PredictionResponse> out(requests.size());
        parallel_for(requests.size(), std::max(1u, opt.in_flight), [&](std::size_t i) {
            const auto& req = requests[i];
            httplib::Client cli(origin_);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opt.timeout).count();
            cli.set_read_timeout(std::max<long>(1, static_cast<long>(secs)), 0);
            cli.set_connection_timeout(std::max<long>(1, static_cast<long>(secs)), 0);
            std::string why = "no attempt made";
            for (int attempt = 1; attempt <= opt.retries + 1; ++attempt) {
                auto res = cli.Post(path_, to_json(req).dump(), "application/json");
                if (!res) {
                    why = "http error: " + httplib::to_string(res.error());
                    continue;
                }
                if (res->status != 200) {
                    why = "http status " + std::to_string(res->status);
                    continue;
                }
                auto resp = parse_response_line(res->body);
                if (resp.quiz_id != req.quiz_id) {
                    throw ProtocolError("response for " + req.quiz_id + " carries quiz_id " + resp.quiz_id);
                }
                if (resp.error) {
                    why = *resp.error;
                    continue;
                }
                validate_candidates(resp, req.k);
                resp.attempts = attempt;
                out[i] = std::move(resp);
                return;
            }
            out[i] = failure(req.quiz_id, why, opt.retries + 1);
        });
        return out;
    }

private:
    std::string url_;
    std::string origin_;
    std::string path_;
};

// Whitespace-separated argv with single/double quotes for embedded spaces.
inline std::vector<std::string> split_command(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    bool have = false;
    char quote = 0;
    for (char c : s) {
        if (quote) {
            if (c == quote) quote = 0;
            else cur += c;
        } else if (c == '\'' || c == '"') {
            quote = c;
            have = true;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (have) out.push_back(std::move(cur));
            cur.clear();
            have = false;
        } else {
            cur += c;
            have = true;
        }
    }
    if (quote) throw ConfigError("unbalanced quote in predictor command: " + s);
    if (have) out.push_back(std::move(cur));
    return out;
}

inline std::unique_ptr<Predictor> make_predictor(const std::string& spec, std::map<std::string, std::string> answers) {
    if (spec.rfind("cmd:", 0) == 0) return std::make_unique<CmdPredictor>(split_command(spec.substr(4)));
    if (spec.rfind("http://", 0) == 0) return std::make_unique<HttpPredictor>(spec);
    if (spec.rfind("http:", 0) == 0) return std::make_unique<HttpPredictor>(spec.substr(5));
    if (spec.rfind("mock:", 0) == 0) return std::make_unique<MockPredictor>(spec.substr(5), std::move(answers));
    throw ConfigError("unknown predictor spec '" + spec + "' (expected cmd:<argv>, http:<url> or mock:<mode>)");
}

}  // namespace ink::probe
