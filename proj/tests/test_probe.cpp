#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "ink/probe.hpp"
#include "support.hpp"

using namespace ink;
using namespace ink::probe;
using quizforge::PopQuiz;

namespace {

PredictionResponse at_rank(const PopQuiz& q, int rank, int k = 50) {
    PredictionResponse r;
    r.quiz_id = q.quiz_id;
    if (rank > 0) r.candidates = mock_candidates(q.answer, rank, k);
    return r;
}

std::vector<PopQuiz> synthetic_set(std::size_t n, const std::vector<std::string>& fqns) {
    std::vector<PopQuiz> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(inktest::synthetic_quiz(fqns[i % fqns.size()], static_cast<int>(i) + 1));
    return out;
}

std::string ink_cmd(const std::string& args) { return "cmd:" + inktest::ink_binary().string() + " mock-predictor " + args; }

}  // namespace

// ---------------------------------------------------------------- protocol

TEST(Protocol, RequestValidation) {
    EXPECT_THROW(request_from_json(json{{"quiz_id", "a"}, {"text", "x"}, {"k", 5}}), ProtocolError);
    EXPECT_THROW(request_from_json(json{{"v", 1}, {"quiz_id", "a"}, {"text", "x"}, {"k", 0}}), ProtocolError);
    EXPECT_THROW(request_from_json(json{{"v", 1}, {"quiz_id", 3}, {"text", "x"}, {"k", 5}}), ProtocolError);
    auto r = request_from_json(to_json(PredictionRequest{"q1", "a.[MASK]", 7}));
    EXPECT_EQ(r.quiz_id, "q1");
    EXPECT_EQ(r.k, 7);
}

TEST(Protocol, ResponseValidation) {
    EXPECT_THROW(parse_response_line("not json"), ProtocolError);
    EXPECT_THROW(parse_response_line(R"({"v":2,"quiz_id":"a","candidates":[]})"), ProtocolError);
    EXPECT_THROW(parse_response_line(R"({"v":1,"quiz_id":"a"})"), ProtocolError);
    EXPECT_THROW(parse_response_line(R"({"v":1,"quiz_id":"a","candidates":[{"t":"x"}]})"), ProtocolError);
    auto err = parse_response_line(R"({"v":1,"quiz_id":"a","error":"oom"})");
    EXPECT_EQ(err.error, "oom");

    PredictionResponse r;
    r.quiz_id = "a";
    r.candidates = {{"b", 1.0}, {"a", 1.0}};
    EXPECT_THROW(validate_candidates(r, 5), ProtocolError);  // tie must break by token
    r.candidates = {{"a", 1.0}, {"b", 1.0}, {"c", 0.5}};
    EXPECT_NO_THROW(validate_candidates(r, 5));
    EXPECT_THROW(validate_candidates(r, 2), ProtocolError);
    r.candidates = {{"a", 0.5}, {"b", 1.0}};
    EXPECT_THROW(validate_candidates(r, 5), ProtocolError);
    r.candidates = {{"a", std::nan("")}};
    EXPECT_THROW(validate_candidates(r, 5), ProtocolError);
    r.candidates = {{"a", 1.0}, {"a", 1.0}};
    EXPECT_THROW(validate_candidates(r, 5), ProtocolError);
}

TEST(Protocol, ResponseJsonRoundTrip) {
    PredictionResponse r;
    r.quiz_id = "z";
    r.candidates = mock_candidates("ans", 3, 5);
    auto back = response_from_json(to_json(r));
    EXPECT_EQ(back.candidates, r.candidates);
    EXPECT_NO_THROW(validate_candidates(back, 5));
}

// ---------------------------------------------------------------- scoring

TEST(Score, RankInCandidateList) {
    std::vector<Candidate> c = {{"api", -1}, {"gui", -2}, {"service", -3}, {"security", -4}, {"com", -5}};
    EXPECT_EQ(answer_rank("service", c), 3);
    EXPECT_EQ(answer_rank("Service", c), 0);
    EXPECT_EQ(answer_rank("x", {}), 0);
    std::vector<Candidate> marked = {{"\xC4\xA0" "file", -1}, {"##alg", -2}};
    EXPECT_EQ(answer_rank(" file", marked), 1);
    EXPECT_EQ(answer_rank("alg", marked), 2);
}

TEST(Score, HalfEvenCentiPercent) {
    EXPECT_EQ(centi_percent(1, 4), 2500);
    EXPECT_EQ(centi_percent(1, 6), 1667);
    EXPECT_EQ(centi_percent(1, 20000), 0);  // 0.5 -> 0
    EXPECT_EQ(centi_percent(3, 20000), 2);  // 1.5 -> 2
    EXPECT_EQ(centi_percent(0, 0), 0);
    EXPECT_EQ(format_centi(2935), "29.35");
    EXPECT_EQ(format_centi(10000), "100.00");
    EXPECT_EQ(format_centi(5), "0.05");
}

TEST(Score, ControlledRanksGiveClosedForm) {
    auto qs = synthetic_set(4, {"numpy.linalg.qr"});
    std::vector<PredictionResponse> j = {at_rank(qs[0], 1), at_rank(qs[1], 3), at_rank(qs[2], 7), at_rank(qs[3], 0)};
    auto rep = score(qs, j);
    const auto* all = rep.find("all", "all");
    ASSERT_NE(all, nullptr);
    EXPECT_EQ(all->n, 4u);
    EXPECT_EQ(all->p, (std::vector<std::int64_t>{2500, 5000, 7500, 7500, 7500, 7500, 7500}));
}

TEST(Score, AllEmptyScoresZero) {
    auto qs = synthetic_set(5, {"a.b", "c.d"});
    std::vector<PredictionResponse> j;
    for (const auto& q : qs) j.push_back(at_rank(q, 0));
    for (const auto& row : score(qs, j).rows) {
        for (auto p : row.p) EXPECT_EQ(p, 0);
    }
}

TEST(Score, SixQuizMicroAndMacroTally) {
    auto qs = synthetic_set(6, {"alpha.f", "alpha.f", "alpha.f", "alpha.f", "beta.g", "beta.g"});
    const std::vector<int> ranks = {1, 2, 20, 0, 5, 0};
    std::vector<PredictionResponse> j;
    for (std::size_t i = 0; i < qs.size(); ++i) j.push_back(at_rank(qs[i], ranks[i]));
    auto micro = score(qs, j, kDefaultKs, Aggregation::micro);
    auto macro = score(qs, j, kDefaultKs, Aggregation::macro_by_fqn);
    for (std::size_t ki = 0; ki < kDefaultKs.size(); ++ki) {
        const int k = kDefaultKs[ki];
        int ha = 0, hb = 0;
        for (std::size_t i = 0; i < 4; ++i) ha += ranks[i] > 0 && ranks[i] <= k;
        for (std::size_t i = 4; i < 6; ++i) hb += ranks[i] > 0 && ranks[i] <= k;
        const auto want_micro = std::llround(10000.0 * (ha + hb) / 6.0);
        const auto want_macro = std::llround(10000.0 * (ha / 4.0 + hb / 2.0) / 2.0);
        EXPECT_EQ(micro.find("all", "all")->p[ki], want_micro) << "k=" << k;
        EXPECT_EQ(macro.find("all", "all")->p[ki], want_macro) << "k=" << k;
    }
}

TEST(Score, RankInvarianceUnderScoreScaling) {
    auto qs = synthetic_set(30, {"a.b", "c.d", "e.f"});
    quizforge::SplitMix64 rng(3);
    std::vector<PredictionResponse> j, scaled;
    for (const auto& q : qs) {
        auto r = at_rank(q, static_cast<int>(rng.below(60)));
        j.push_back(r);
        for (auto& c : r.candidates) c.s *= 7.25;
        scaled.push_back(r);
    }
    EXPECT_EQ(report_csv(score(qs, j)), report_csv(score(qs, scaled)));
    EXPECT_EQ(report_json(score(qs, j)).dump(), report_json(score(qs, scaled)).dump());
}

TEST(Score, MockOracleAndNever) {
    auto qs = synthetic_set(12, {"a.b", "c.d"});
    for (const auto& [mode, want] : {std::pair<std::string, std::int64_t>{"oracle", 10000}, {"never", 0}}) {
        MockPredictor m(mode, answer_key(qs));
        auto j = evaluate(qs, m);
        for (const auto& row : score(qs, j).rows) {
            for (auto p : row.p) EXPECT_EQ(p, want) << mode;
        }
        for (auto agg : {Aggregation::micro, Aggregation::macro_by_fqn}) {
            const auto rep = score(qs, j, kDefaultKs, agg);
            for (auto p : rep.find("all", "all")->p) EXPECT_EQ(p, want);
        }
    }
}

TEST(Score, FixedRankMockMatchesClosedForm) {
    auto qs = synthetic_set(8, {"a.b"});
    for (int rank : {1, 4, 5, 6, 10, 11, 25, 50, 51}) {
        MockPredictor m("rank=" + std::to_string(rank), answer_key(qs));
        auto rep = score(qs, evaluate(qs, m));
        for (std::size_t ki = 0; ki < kDefaultKs.size(); ++ki) {
            EXPECT_EQ(rep.find("all", "all")->p[ki], rank <= kDefaultKs[ki] ? 10000 : 0) << rank;
        }
    }
}

TEST(Score, MonotoneOnRandomizedRuns) {
    quizforge::SplitMix64 rng(2024);
    for (int run = 0; run < 1000; ++run) {
        const std::size_t n = 1 + rng.below(40);
        auto qs = synthetic_set(n, {"a.b", "c.d", "e.f", "g.h"});
        for (auto& q : qs) {
            q.mask_kind = static_cast<tokvocab::MaskKind>(rng.below(3));
            q.family = static_cast<tokvocab::Family>(rng.below(3));
        }
        MockPredictor m("random:" + std::to_string(run), answer_key(qs));
        auto j = evaluate(qs, m);
        for (auto agg : {Aggregation::micro, Aggregation::macro_by_fqn}) {
            auto rep = score(qs, j, kDefaultKs, agg);
            for (const auto& row : rep.rows) {
                for (std::size_t i = 0; i < row.p.size(); ++i) {
                    EXPECT_GE(row.p[i], 0);
                    EXPECT_LE(row.p[i], 10000);
                    if (i) {
                        ASSERT_LE(row.p[i - 1], row.p[i]) << "run " << run;
                    }
                }
            }
        }
    }
}

TEST(Score, FailuresScoreZeroAndAreCounted) {
    auto qs = synthetic_set(4, {"a.b"});
    std::vector<PredictionResponse> j = {at_rank(qs[0], 1), failure(qs[1].quiz_id, "down", 3), at_rank(qs[2], 1),
                                         failure(qs[3].quiz_id, "down", 3)};
    const auto rep = score(qs, j);
    const auto* all = rep.find("all", "all");
    EXPECT_EQ(all->failed, 2u);
    EXPECT_EQ(all->p[0], 5000);
}

TEST(Score, JournalMustCoverQuizzes) {
    auto qs = synthetic_set(3, {"a.b"});
    std::vector<PredictionResponse> j = {at_rank(qs[0], 1), at_rank(qs[1], 1)};
    try {
        score(qs, j);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("ink eval"), std::string::npos);
    }
    j.push_back(at_rank(qs[2], 1));
    j.push_back(at_rank(inktest::synthetic_quiz("x.y", 99), 1));
    EXPECT_THROW(score(qs, j), DataError);
}

TEST(Score, RowsPerFamilyAndKindAndCsvShape) {
    auto qs = synthetic_set(6, {"a.b"});
    qs[0].mask_kind = tokvocab::MaskKind::first;
    qs[1].mask_kind = tokvocab::MaskKind::last;
    qs[2].family = tokvocab::Family::import;
    std::vector<PredictionResponse> j;
    for (const auto& q : qs) j.push_back(at_rank(q, 2));
    auto rep = score(qs, j, {1, 5}, Aggregation::micro, "m");
    EXPECT_NE(rep.find("call", "first"), nullptr);
    EXPECT_NE(rep.find("call", "last"), nullptr);
    EXPECT_NE(rep.find("call", "full"), nullptr);
    EXPECT_NE(rep.find("import", "full"), nullptr);
    EXPECT_EQ(rep.find("import", "first"), nullptr);
    auto csv = report_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,family,mask_kind,aggregation,n,failed,P@1,P@5");
    EXPECT_NE(csv.find("m,all,all,micro,6,0,0.00,100.00"), std::string::npos) << csv;
    EXPECT_THROW(score(qs, j, {5, 1}), ConfigError);
}

// ---------------------------------------------------------------- split

TEST(Split, DefinitionExample) {
    std::vector<PopQuiz> qs = {inktest::synthetic_quiz("numpy.linalg.qr"), inktest::synthetic_quiz("numpy.ma.filled"),
                               inktest::synthetic_quiz("scipy.stats.norm")};
    auto r = split_seen_unseen(qs, {"numpy.linalg.qr"});
    ASSERT_EQ(r.seen.size(), 1u);
    ASSERT_EQ(r.unseen.size(), 1u);
    ASSERT_EQ(r.dropped.size(), 1u);
    EXPECT_EQ(r.seen[0].fqn, "numpy.linalg.qr");
    EXPECT_EQ(r.unseen[0].fqn, "scipy.stats.norm");
    EXPECT_EQ(r.dropped[0].fqn, "numpy.ma.filled");
    EXPECT_EQ(r.spec.seen_libraries, (std::set<std::string>{"numpy"}));

    auto empty = split_seen_unseen(qs, {});
    EXPECT_EQ(empty.unseen.size(), 3u);
    EXPECT_TRUE(empty.seen.empty());
    EXPECT_TRUE(empty.dropped.empty());
}

TEST(Split, FiftyFqnFixture) {
    auto oracle = inktest::split_oracle();
    ASSERT_EQ(oracle.fqns.size(), 50u);
    std::vector<PopQuiz> qs;
    for (const auto& f : oracle.fqns) qs.push_back(inktest::synthetic_quiz(f));
    auto training = load_fqn_list(inktest::fixtures() / "split" / "training_fqns.txt");
    auto r = split_seen_unseen(qs, training);
    std::map<std::string, std::string> got;
    for (const auto& q : r.seen) got[q.fqn] = "seen";
    for (const auto& q : r.unseen) got[q.fqn] = "unseen";
    for (const auto& q : r.dropped) got[q.fqn] = "dropped";
    EXPECT_EQ(got, oracle.expected);
    for (const auto& f : r.spec.unseen_fqns) EXPECT_FALSE(r.spec.seen_libraries.count(library_of(f))) << f;
}

TEST(Split, PartitionProperty) {
    quizforge::SplitMix64 rng(77);
    const std::vector<std::string> libs = {"aa", "bb", "cc", "dd"};
    for (int round = 0; round < 300; ++round) {
        std::vector<PopQuiz> qs;
        std::set<std::string> training;
        const auto n = rng.below(30);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::string f = libs[rng.below(libs.size())] + ".m" + std::to_string(rng.below(5));
            qs.push_back(inktest::synthetic_quiz(f, static_cast<int>(i)));
            if (rng.below(3) == 0) training.insert(f);
        }
        if (rng.below(2)) training.insert("zz.other");
        auto r = split_seen_unseen(qs, training);
        std::multiset<std::string> ids_in, ids_out;
        for (const auto& q : qs) ids_in.insert(q.quiz_id);
        for (const auto* part : {&r.seen, &r.unseen, &r.dropped}) {
            for (const auto& q : *part) ids_out.insert(q.quiz_id);
        }
        EXPECT_EQ(ids_in, ids_out);
        for (const auto& q : r.seen) EXPECT_TRUE(training.count(q.fqn));
        for (const auto& q : r.unseen) {
            EXPECT_FALSE(training.count(q.fqn));
            EXPECT_FALSE(r.spec.seen_libraries.count(library_of(q.fqn)));
        }
    }
}

// ---------------------------------------------------------------- NL comparison

TEST(NlCompare, MeanOverVariants) {
    PopQuiz base = inktest::synthetic_quiz("os.path.isfile");
    PopQuiz bare = inktest::synthetic_quiz("os.path.exists");
    std::vector<PopQuiz> qs = {base, bare};
    std::vector<PredictionResponse> j = {at_rank(base, 3), at_rank(bare, 0)};
    for (int i = 0; i < 10; ++i) {
        PopQuiz v = base;
        v.nl_context = "query " + std::to_string(i);
        v.nl_separator = " ";
        v.template_text = *v.nl_context + " " + base.template_text;
        v.base_quiz_id = base.quiz_id;
        v.quiz_id = PopQuiz::make_id(v.family, v.template_text, v.answer);
        qs.push_back(v);
        j.push_back(at_rank(v, i < 7 ? 4 : 0));
    }
    auto c = compare_nl(qs, j, {1, 5});
    ASSERT_EQ(c.rows.size(), 2u);  // call, all
    const auto& row = c.rows[0];
    EXPECT_EQ(row.family, "call");
    EXPECT_EQ(row.bases, 1u);  // the variant-free quiz is excluded
    EXPECT_EQ(row.variants, 10u);
    EXPECT_EQ(row.without_nl, (std::vector<std::int64_t>{0, 10000}));
    EXPECT_EQ(row.with_nl, (std::vector<std::int64_t>{0, 7000}));

    qs.erase(qs.begin());
    j.erase(j.begin());
    EXPECT_THROW(compare_nl(qs, j, {1, 5}), DataError);
}

// ---------------------------------------------------------------- predictors

class CmdPredictorTest : public ::testing::Test {
protected:
    inktest::TempDir dir{"cmd"};
    std::vector<PopQuiz> qs = synthetic_set(23, {"numpy.linalg.qr", "os.path.join", "json.loads"});
    std::string quizzes = (dir / "q.jsonl").string();

    void SetUp() override { quizforge::write_quizzes(quizzes, qs); }

    std::vector<PredictionResponse> run(const std::string& args, EvalOptions opt = {}) {
        auto p = make_predictor(ink_cmd("--quizzes " + quizzes + " " + args), {});
        return evaluate(qs, *p, opt);
    }
};

TEST_F(CmdPredictorTest, OracleWithReorderedBatches) {
    EvalOptions opt;
    opt.k = 10;
    auto j = run("--mode oracle --batch 4", opt);
    ASSERT_EQ(j.size(), qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        EXPECT_EQ(j[i].quiz_id, qs[i].quiz_id);
        EXPECT_FALSE(j[i].error);
        EXPECT_EQ(j[i].candidates.size(), 10u);
        EXPECT_EQ(answer_rank(qs[i].answer, j[i].candidates), 1);
    }
}

TEST_F(CmdPredictorTest, CrashesAreRetried) {
    EvalOptions opt;
    opt.retries = 10;
    opt.in_flight = 3;
    auto j = run("--mode oracle --crash-after 5", opt);
    int retried = 0;
    for (const auto& r : j) {
        EXPECT_FALSE(r.error) << *r.error;
        retried += r.attempts > 1;
    }
    EXPECT_GT(retried, 0);
}

TEST_F(CmdPredictorTest, ErrorRepliesBecomeFailuresAfterRetries) {
    EvalOptions opt;
    opt.retries = 0;
    opt.in_flight = 1;
    auto j = run("--mode oracle --error-every 3", opt);
    for (std::size_t i = 0; i < j.size(); ++i) EXPECT_EQ(j[i].error.has_value(), i % 3 == 2) << i;
    opt.retries = 2;
    int recovered = 0;
    for (const auto& r : run("--mode oracle --error-every 3", opt)) {
        if (r.error) EXPECT_EQ(r.attempts, 3);
        else recovered += r.attempts > 1;
    }
    EXPECT_GT(recovered, 0);
}

TEST_F(CmdPredictorTest, ViolationsAreProtocolErrors) {
    for (const char* v : {"unsorted", "unknown-id", "too-many"}) {
        EXPECT_THROW(run(std::string("--mode oracle --violate ") + v), ProtocolError) << v;
    }
}

TEST(CmdPredictor, TimeoutRecordsFailure) {
    auto qs = synthetic_set(2, {"a.b"});
    CmdPredictor p({"sleep", "5"});
    EvalOptions opt;
    opt.timeout = std::chrono::milliseconds(200);
    opt.retries = 1;
    auto j = evaluate(qs, p, opt);
    for (const auto& r : j) {
        ASSERT_TRUE(r.error);
        EXPECT_EQ(r.attempts, 2);
        EXPECT_TRUE(r.candidates.empty());
    }
}

TEST(CmdPredictor, MissingProgramIsConfigError) {
    auto qs = synthetic_set(1, {"a.b"});
    CmdPredictor p({"/nonexistent/predictor"});
    EXPECT_THROW(evaluate(qs, p), ConfigError);
}

TEST(HttpPredictor, ServesOverPost) {
    auto qs = synthetic_set(15, {"a.b", "c.d"});
    MockPredictor oracle("oracle", answer_key(qs));
    httplib::Server srv;
    std::mutex mu;
    std::set<std::string> seen;
    srv.Post("/predict", [&](const httplib::Request& req, httplib::Response& res) {
        auto request = request_from_json(json::parse(req.body));
        {
            // the first attempt of every other quiz fails with a server error
            std::lock_guard lock(mu);
            if (seen.insert(request.quiz_id).second && seen.size() % 2 == 0) {
                res.status = 503;
                return;
            }
        }
        auto r = oracle.answer(request);
        res.set_content(to_json(r).dump(), "application/json");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    auto p = make_predictor("http://127.0.0.1:" + std::to_string(port) + "/predict", {});
    EvalOptions opt;
    opt.in_flight = 4;
    auto j = evaluate(qs, *p, opt);
    srv.stop();
    t.join();
    int retried = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        EXPECT_FALSE(j[i].error);
        EXPECT_EQ(answer_rank(qs[i].answer, j[i].candidates), 1);
        retried += j[i].attempts == 2;
    }
    EXPECT_EQ(retried, 7);
    EXPECT_THROW(make_predictor("https://example.com/x", {}), ConfigError);
    EXPECT_THROW(make_predictor("telnet:x", {}), ConfigError);
}

TEST(Journal, RoundTripAndDuplicates) {
    inktest::TempDir dir("journal");
    auto qs = synthetic_set(4, {"a.b"});
    std::vector<PredictionResponse> j = {at_rank(qs[0], 1), failure(qs[1].quiz_id, "x", 2), at_rank(qs[2], 0),
                                         at_rank(qs[3], 9)};
    write_journal(dir / "j.jsonl", j);
    auto back = read_journal(dir / "j.jsonl");
    ASSERT_EQ(back.size(), 4u);
    EXPECT_EQ(back[1].error, "x");
    EXPECT_EQ(back[3].candidates, j[3].candidates);
    j.push_back(j[0]);
    write_journal(dir / "d.jsonl", j);
    EXPECT_THROW(read_journal(dir / "d.jsonl"), DataError);
}
