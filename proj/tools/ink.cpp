// ink: builds API-name pop quizzes from Python corpora and probes predictors.
//
// Exit codes: 0 ok, 1 usage/configuration error, 2 data error,
// 3 predictor protocol error. Logs go to stderr.

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "ink/pipeline.hpp"
#include "ink/version.hpp"

namespace fs = std::filesystem;
using namespace ink;

namespace {

void log_info(const std::string& msg) {
    if (msg.rfind("warning: ", 0) == 0) spdlog::warn("{}", msg.substr(9));
    else spdlog::info("{}", msg);
}

// ---------------------------------------------------------------- config

// Flat per-stage TOML tables: [stage] key = value | [list].
class StageConfig {
public:
    StageConfig() = default;

    static StageConfig load(const fs::path& path) {
        if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
        StageConfig c;
        c.base_ = fs::absolute(path).parent_path();
        std::vector<CLI::ConfigItem> items;
        try {
            items = CLI::ConfigTOML().from_file(path.string());
        } catch (const CLI::Error& e) {
            throw ConfigError("cannot parse " + path.string() + ": " + e.what());
        }
        for (const auto& it : items) {
            if (it.name == "++" || it.name == "--") continue;
            std::string table = it.parents.empty() ? "" : it.parents.front();
            for (std::size_t i = 1; i < it.parents.size(); ++i) table += "." + it.parents[i];
            c.values_[table][it.name] = it.inputs;
        }
        return c;
    }

    bool has_table(const std::string& t) const { return values_.count(t) > 0; }

    std::optional<std::vector<std::string>> list(const std::string& t, const std::string& key) const {
        auto ti = values_.find(t);
        if (ti == values_.end()) return std::nullopt;
        auto ki = ti->second.find(key);
        if (ki == ti->second.end()) return std::nullopt;
        return ki->second;
    }

    std::optional<std::string> str(const std::string& t, const std::string& key) const {
        auto l = list(t, key);
        if (!l) return std::nullopt;
        if (l->size() != 1) throw ConfigError("[" + t + "] " + key + " must be a single value");
        return l->front();
    }

    std::optional<fs::path> path(const std::string& t, const std::string& key) const {
        auto s = str(t, key);
        if (!s) return std::nullopt;
        return resolve(*s);
    }

    std::vector<fs::path> paths(const std::string& t, const std::string& key) const {
        std::vector<fs::path> out;
        if (auto l = list(t, key)) {
            for (const auto& s : *l) out.push_back(resolve(s));
        }
        return out;
    }

    template <typename T>
    std::optional<T> num(const std::string& t, const std::string& key) const {
        auto s = str(t, key);
        if (!s) return std::nullopt;
        try {
            std::size_t used = 0;
            long long v = std::stoll(*s, &used);
            if (used != s->size() || v < 0) throw std::invalid_argument(*s);
            return static_cast<T>(v);
        } catch (const std::exception&) {
            throw ConfigError("[" + t + "] " + key + " must be a non-negative integer, got '" + *s + "'");
        }
    }

    std::optional<bool> flag(const std::string& t, const std::string& key) const {
        auto s = str(t, key);
        if (!s) return std::nullopt;
        if (*s == "true") return true;
        if (*s == "false") return false;
        throw ConfigError("[" + t + "] " + key + " must be true or false");
    }

    fs::path resolve(const std::string& s) const {
        fs::path p(s);
        return p.is_absolute() ? p : (base_ / p).lexically_normal();
    }

private:
    fs::path base_;
    std::map<std::string, std::map<std::string, std::vector<std::string>>> values_;
};

std::vector<int> parse_ks(const std::vector<std::string>& raw) {
    std::vector<int> ks;
    for (const auto& s : raw) {
        try {
            ks.push_back(std::stoi(s));
        } catch (const std::exception&) {
            throw ConfigError("k list entry '" + s + "' is not an integer");
        }
    }
    return ks;
}

// ---------------------------------------------------------------- all

struct AllOptions {
    fs::path config;
    fs::path out_dir;
    std::optional<std::uint64_t> seed;
    std::string predictor;
};

void run_all(const AllOptions& o, unsigned jobs) {
    if (o.config.empty()) throw ConfigError("`ink all` needs --config <file.toml>");
    auto cfg = StageConfig::load(o.config);
    fs::path out = !o.out_dir.empty() ? o.out_dir : cfg.path("all", "out_dir").value_or(fs::path("ink-out"));
    fs::create_directories(out);
    const std::uint64_t seed = o.seed ? *o.seed : cfg.num<std::uint64_t>("all", "seed").value_or(0);
    if (auto j = cfg.num<unsigned>("all", "jobs"); j && jobs == 0) jobs = *j;
    jobs = resolve_jobs(jobs);

    pipeline::ExtractParams ex;
    ex.roots = cfg.paths("extract", "roots");
    ex.glob = cfg.str("extract", "glob").value_or(corpus::kDefaultGlob);
    ex.out = out / "manifest.jsonl";
    ex.jobs = jobs;
    pipeline::run_extract(ex, log_info);

    pipeline::run_resolve({ex.out, out / "usages.jsonl", jobs}, log_info);

    const fs::path profiles = cfg.path("vocab", "profiles").value_or(fs::path());
    pipeline::run_vocab({profiles, out / "uvocab.json"}, log_info);

    pipeline::GenquizParams gq;
    gq.usages = out / "usages.jsonl";
    gq.uvocab = out / "uvocab.json";
    gq.profiles = profiles;
    gq.out = out / "quizzes.jsonl";
    gq.ref_profile = cfg.str("genquiz", "ref_profile").value_or("");
    gq.gate = cfg.flag("genquiz", "gate").value_or(true);
    gq.jobs = jobs;
    pipeline::run_genquiz(gq, log_info);

    fs::path benchmark_base = gq.out;
    if (cfg.has_table("nl") && cfg.flag("nl", "enabled").value_or(true)) {
        pipeline::NlParams nl;
        nl.quizzes = gq.out;
        nl.queries = cfg.path("nl", "queries").value_or(fs::path());
        nl.profiles = profiles;
        nl.out = out / "nl.jsonl";
        nl.ref_profile = cfg.str("nl", "ref_profile").value_or(gq.ref_profile);
        nl.opt.max_queries = cfg.num<std::size_t>("nl", "max_queries").value_or(10);
        nl.opt.max_tokens = cfg.num<std::size_t>("nl", "max_tokens").value_or(512);
        nl.opt.separator = cfg.str("nl", "separator").value_or(" ");
        pipeline::run_nl(nl, log_info);
        benchmark_base = nl.out;
    }

    std::vector<quizforge::PopQuiz> benchmark = quizforge::read_quizzes(benchmark_base);
    std::vector<fs::path> bench_inputs{benchmark_base};
    if (cfg.has_table("adversarial") && cfg.flag("adversarial", "enabled").value_or(true)) {
        pipeline::AdversarialParams adv;
        adv.quizzes = gq.out;
        adv.usages = out / "usages.jsonl";
        adv.out = out / "adversarial.jsonl";
        adv.seed = cfg.num<std::uint64_t>("adversarial", "seed").value_or(seed);
        adv.variants = cfg.num<std::size_t>("adversarial", "variants").value_or(10);
        pipeline::run_adversarial(adv, log_info);
        auto extra = quizforge::read_quizzes(adv.out);
        benchmark.insert(benchmark.end(), extra.begin(), extra.end());
        bench_inputs.push_back(adv.out);
    }
    const fs::path bench_path = out / "benchmark.jsonl";
    quizforge::write_quizzes(bench_path, benchmark);
    pipeline::write_sidecar(bench_path, {"all", bench_inputs, json::object(), seed, {}});

    pipeline::EvalParams ev;
    ev.quizzes = bench_path;
    ev.out = out / "journal.jsonl";
    ev.predictor = !o.predictor.empty() ? o.predictor : cfg.str("eval", "predictor").value_or("mock:oracle");
    ev.opt.k = cfg.num<int>("eval", "k").value_or(50);
    ev.opt.in_flight = cfg.num<unsigned>("eval", "in_flight").value_or(std::max(1u, jobs));
    ev.opt.retries = cfg.num<int>("eval", "retries").value_or(2);
    ev.opt.timeout = std::chrono::milliseconds(cfg.num<long>("eval", "timeout_ms").value_or(30000));
    pipeline::run_eval(ev, log_info);

    pipeline::ScoreParams sc;
    sc.journal = ev.out;
    sc.quizzes = bench_path;
    sc.out = out / "report.csv";
    sc.agg = probe::aggregation_from_string(cfg.str("score", "agg").value_or("micro"));
    if (auto ks = cfg.list("score", "ks")) sc.ks = parse_ks(*ks);
    pipeline::run_score(sc, log_info);

    if (benchmark_base != gq.out) {
        auto cmp = probe::compare_nl(benchmark, probe::read_journal(ev.out), sc.ks);
        const fs::path nl_csv = out / "nl_report.csv";
        std::ofstream(nl_csv, std::ios::binary | std::ios::trunc) << probe::nl_comparison_csv(cmp, pipeline::model_from_journal(ev.out));
        pipeline::write_sidecar(nl_csv, {"report", {ev.out, bench_path}, {{"nl", true}}, std::nullopt, {}});
        log_info("report: NL comparison -> " + nl_csv.string());
    }
    log_info("all: artifacts in " + out.string());
}

// ---------------------------------------------------------------- report

std::string report_table(const probe::ScoreReport& rep) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "family" << std::setw(7) << "mask" << std::right << std::setw(7) << "n"
       << std::setw(7) << "failed";
    for (int k : rep.ks) os << std::setw(8) << ("P@" + std::to_string(k));
    os << '\n';
    for (const auto& r : rep.rows) {
        os << std::left << std::setw(12) << r.family << std::setw(7) << r.mask_kind << std::right << std::setw(7) << r.n
           << std::setw(7) << r.failed;
        for (auto c : r.p) os << std::setw(8) << probe::format_centi(c);
        os << '\n';
    }
    return os.str();
}

void emit(const std::string& text, const fs::path& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream o(out, std::ios::binary | std::ios::trunc);
    if (!o) throw DataError("cannot write " + out.string());
    o << text;
}

// ---------------------------------------------------------------- mock predictor

struct MockServeOptions {
    fs::path quizzes;
    std::string mode = "oracle";
    std::size_t batch = 1;         // answer in reversed batches to exercise out-of-order joins
    std::size_t crash_after = 0;   // exit after this many responses
    std::size_t error_every = 0;   // every Nth request gets an error reply
    std::string violate;           // unsorted | unknown-id | too-many
};

int serve_mock(const MockServeOptions& o) {
    std::map<std::string, std::string> answers;
    if (!o.quizzes.empty()) answers = probe::answer_key(quizforge::read_quizzes(o.quizzes));
    probe::MockPredictor mock(o.mode, answers);
    std::size_t served = 0, seen = 0;
    std::vector<std::string> pending;
    auto flush = [&] {
        for (auto it = pending.rbegin(); it != pending.rend(); ++it) std::cout << *it << '\n';
        std::cout.flush();
        served += pending.size();
        pending.clear();
        if (o.crash_after && served >= o.crash_after) std::_Exit(1);
    };
    std::string buf;
    char chunk[65536];
    bool open = true;
    while (open || !pending.empty()) {
        pollfd p{STDIN_FILENO, POLLIN, 0};
        int r = open ? ::poll(&p, 1, pending.empty() ? -1 : 50) : 0;
        if (r <= 0) {
            flush();
            continue;
        }
        ssize_t n = ::read(STDIN_FILENO, chunk, sizeof chunk);
        if (n <= 0) {
            open = false;
            continue;
        }
        buf.append(chunk, static_cast<std::size_t>(n));
        for (std::size_t nl; (nl = buf.find('\n')) != std::string::npos;) {
            std::string line = buf.substr(0, nl);
            buf.erase(0, nl + 1);
            if (line.empty()) continue;
            auto req = probe::request_from_json(json::parse(line));
            ++seen;
            probe::PredictionResponse resp;
            if (o.error_every && seen % o.error_every == 0) {
                resp = probe::failure(req.quiz_id, "injected failure", 1);
            } else {
                resp = mock.answer(req);
            }
            if (o.violate == "unsorted" && resp.candidates.size() > 1) std::swap(resp.candidates[0], resp.candidates[1]);
            if (o.violate == "unknown-id") resp.quiz_id = "no-such-quiz";
            if (o.violate == "too-many") resp.candidates = probe::mock_candidates("x", 0, req.k + 1);
            pending.push_back(probe::to_json(resp).dump());
            if (pending.size() >= std::max<std::size_t>(1, o.batch)) flush();
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_logger_st("ink");
    logger->set_pattern("ink %l: %v");
    spdlog::set_default_logger(logger);

    CLI::App app{"ink - API-name pop quizzes for code models"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    app.fallthrough();
    unsigned jobs = 0;
    bool verbose = false, quiet_mode = false;
    app.add_option("-j,--jobs", jobs, "worker threads (default: $INK_JOBS or all cores)");
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet_mode, "warnings and errors only");

    // extract
    pipeline::ExtractParams ex;
    auto* c_extract = app.add_subcommand("extract", "scan corpus roots into a content-addressed manifest");
    c_extract->add_option("--roots", ex.roots, "repository root directories")->required();
    c_extract->add_option("--glob", ex.glob, "include pattern")->capture_default_str();
    c_extract->add_option("--out", ex.out, "manifest JSONL")->required();

    // resolve
    pipeline::ResolveParams rs;
    auto* c_resolve = app.add_subcommand("resolve", "resolve API usages to fully qualified names");
    c_resolve->add_option("--manifest", rs.manifest, "manifest from `ink extract`");
    c_resolve->add_option("--out", rs.out, "usages JSONL")->required();

    // vocab
    pipeline::VocabParams vp;
    auto* c_vocab = app.add_subcommand("vocab", "intersect tokenizer vocabularies");
    c_vocab->add_option("--profiles", vp.profiles, "directory of profile JSON files");
    c_vocab->add_option("--out", vp.out, "unified vocabulary JSON")->required();

    // genquiz
    pipeline::GenquizParams gq;
    bool no_gate = false;
    auto* c_gen = app.add_subcommand("genquiz", "generate call/import/alias pop quizzes");
    c_gen->add_option("--usages", gq.usages, "usages from `ink resolve`");
    c_gen->add_option("--uvocab", gq.uvocab, "unified vocabulary from `ink vocab`");
    c_gen->add_option("--profiles", gq.profiles, "profile directory");
    c_gen->add_option("--ref-profile", gq.ref_profile, "profile used for segmentation (default: first by model_id)");
    c_gen->add_option("--out", gq.out, "quiz JSONL")->required();
    c_gen->add_option("--counts", gq.counts, "counts JSON (default: <out>.counts.json)");
    c_gen->add_flag("--no-gate", no_gate, "keep answers outside the unified vocabulary");

    // adversarial
    pipeline::AdversarialParams adv;
    auto* c_adv = app.add_subcommand("adversarial", "re-alias alias quizzes with aliases of other modules");
    c_adv->add_option("--quizzes", adv.quizzes, "quiz JSONL from `ink genquiz`");
    c_adv->add_option("--usages", adv.usages, "usages JSONL; widens the alias pool");
    c_adv->add_option("--seed", adv.seed, "sampling seed")->capture_default_str();
    c_adv->add_option("--variants", adv.variants, "variants per alias quiz")->capture_default_str();
    c_adv->add_option("--out", adv.out, "adversarial quiz JSONL")->required();
    c_adv->add_option("--counts", adv.counts, "counts JSON (default: <out>.counts.json)");

    // nl
    pipeline::NlParams nl;
    auto* c_nl = app.add_subcommand("nl", "prefix quizzes with natural-language queries");
    c_nl->add_option("--quizzes", nl.quizzes, "quiz JSONL from `ink genquiz`");
    c_nl->add_option("--queries", nl.queries, "query table JSONL {fqn, queries}");
    c_nl->add_option("--profiles", nl.profiles, "profile directory");
    c_nl->add_option("--ref-profile", nl.ref_profile, "profile used for the length cap");
    c_nl->add_option("--max-queries", nl.opt.max_queries)->capture_default_str();
    c_nl->add_option("--max-tokens", nl.opt.max_tokens)->capture_default_str();
    c_nl->add_option("--separator", nl.opt.separator, "text between query and statement");
    c_nl->add_option("--out", nl.out, "quiz JSONL with variants")->required();

    // eval
    pipeline::EvalParams ev;
    long timeout_ms = 30000;
    auto* c_eval = app.add_subcommand("eval", "query a predictor for every quiz");
    c_eval->add_option("--quizzes", ev.quizzes, "quiz JSONL");
    c_eval->add_option("--predictor", ev.predictor, "cmd:<argv> | http:<url> | mock:<mode>");
    c_eval->add_option("--k", ev.opt.k, "candidates requested")->capture_default_str();
    c_eval->add_option("--in-flight", ev.opt.in_flight, "outstanding requests")->capture_default_str();
    c_eval->add_option("--retries", ev.opt.retries, "retries per failed request")->capture_default_str();
    c_eval->add_option("--timeout-ms", timeout_ms, "per-response timeout")->capture_default_str();
    c_eval->add_option("--out", ev.out, "results journal JSONL")->required();

    // score
    pipeline::ScoreParams sc;
    std::string agg = "micro";
    auto* c_score = app.add_subcommand("score", "P@k report from a results journal");
    c_score->add_option("--journal", sc.journal, "journal from `ink eval`");
    c_score->add_option("--quizzes", sc.quizzes, "the quiz file that was evaluated");
    c_score->add_option("--agg", agg, "micro | macro")->capture_default_str();
    c_score->add_option("--ks", sc.ks, "cutoffs")->delimiter(',');
    c_score->add_option("--model", sc.model, "model column (default: predictor id)");
    c_score->add_option("--out", sc.out, "report CSV (JSON twin written alongside)")->required();

    // split
    pipeline::SplitParams sp;
    auto* c_split = app.add_subcommand("split", "seen/unseen memorization split");
    c_split->add_option("--quizzes", sp.quizzes, "quiz JSONL");
    c_split->add_option("--training-fqns", sp.training, "FQNs seen in training, one per line");
    c_split->add_option("--out-dir", sp.out_dir, "output directory")->required();

    // report
    fs::path rp_journal, rp_quizzes, rp_out;
    std::string rp_format = "table", rp_agg = "micro", rp_model;
    std::vector<int> rp_ks = probe::kDefaultKs;
    bool rp_nl = false;
    auto* c_report = app.add_subcommand("report", "render a report (stdout unless --out)");
    c_report->add_option("--journal", rp_journal, "journal from `ink eval`");
    c_report->add_option("--quizzes", rp_quizzes, "the quiz file that was evaluated");
    c_report->add_option("--format", rp_format, "csv | json | table")
        ->check(CLI::IsMember({"csv", "json", "table"}))
        ->capture_default_str();
    c_report->add_option("--agg", rp_agg, "micro | macro")->capture_default_str();
    c_report->add_option("--ks", rp_ks, "cutoffs")->delimiter(',');
    c_report->add_option("--model", rp_model, "model column");
    c_report->add_flag("--nl", rp_nl, "paired with/without NL context table");
    c_report->add_option("--out", rp_out, "output file");

    // all
    AllOptions all;
    auto* c_all = app.add_subcommand("all", "extract -> resolve -> vocab -> genquiz -> eval -> score from a TOML config");
    c_all->add_option("--config", all.config, "TOML config with per-stage tables");
    c_all->add_option("--out-dir", all.out_dir, "overrides [all] out_dir");
    c_all->add_option("--seed", all.seed, "overrides [all] seed");
    c_all->add_option("--predictor", all.predictor, "overrides [eval] predictor");

    // mock-predictor
    MockServeOptions ms;
    auto* c_mock = app.add_subcommand("mock-predictor", "reference predictor over stdin/stdout (protocol v1)");
    c_mock->add_option("--quizzes", ms.quizzes, "quiz JSONL providing the answers");
    c_mock->add_option("--mode", ms.mode, "oracle | never | rank=N | random:SEED")->capture_default_str();
    c_mock->add_option("--batch", ms.batch, "reply in reversed batches of this size");
    c_mock->add_option("--crash-after", ms.crash_after, "exit after this many replies");
    c_mock->add_option("--error-every", ms.error_every, "error reply for every Nth request");
    c_mock->add_option("--violate", ms.violate, "unsorted | unknown-id | too-many");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    spdlog::set_level(quiet_mode ? spdlog::level::warn : verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        const unsigned j = resolve_jobs(jobs);
        if (*c_extract) {
            ex.jobs = j;
            pipeline::run_extract(ex, log_info);
        } else if (*c_resolve) {
            rs.jobs = j;
            pipeline::run_resolve(rs, log_info);
        } else if (*c_vocab) {
            pipeline::run_vocab(vp, log_info);
        } else if (*c_gen) {
            gq.gate = !no_gate;
            gq.jobs = j;
            pipeline::run_genquiz(gq, log_info);
        } else if (*c_adv) {
            pipeline::run_adversarial(adv, log_info);
        } else if (*c_nl) {
            pipeline::run_nl(nl, log_info);
        } else if (*c_eval) {
            ev.opt.timeout = std::chrono::milliseconds(timeout_ms);
            pipeline::run_eval(ev, log_info);
        } else if (*c_score) {
            sc.agg = probe::aggregation_from_string(agg);
            pipeline::run_score(sc, log_info);
        } else if (*c_split) {
            pipeline::run_split(sp, log_info);
        } else if (*c_report) {
            if (rp_nl) {
                pipeline::require_input(rp_journal, "results journal", "ink eval");
                pipeline::require_input(rp_quizzes, "quiz file", "ink nl");
                auto cmp = probe::compare_nl(quizforge::read_quizzes(rp_quizzes), probe::read_journal(rp_journal), rp_ks);
                emit(probe::nl_comparison_csv(cmp, rp_model.empty() ? pipeline::model_from_journal(rp_journal) : rp_model),
                     rp_out);
            } else {
                auto rep = pipeline::load_and_score(rp_journal, rp_quizzes, probe::aggregation_from_string(rp_agg), rp_ks,
                                                    rp_model);
                emit(rp_format == "csv"    ? probe::report_csv(rep)
                     : rp_format == "json" ? probe::report_json(rep).dump(2) + "\n"
                                           : report_table(rep),
                     rp_out);
            }
        } else if (*c_all) {
            run_all(all, jobs);
        } else if (*c_mock) {
            return serve_mock(ms);
        }
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const ProtocolError& e) {
        spdlog::error("predictor protocol violation: {}", e.what());
        return 3;
    } catch (const DataError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const json::exception& e) {
        spdlog::error("malformed JSON: {}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
