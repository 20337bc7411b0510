#pragma once

// Stage runners shared by the CLI and the end-to-end tests. Each stage reads
// declared inputs, writes one artifact (plus companions) and a sidecar
// "<artifact>.meta.json" carrying everything non-reproducible: timestamps,
// input hashes, seed and parameters. Artifacts themselves are deterministic.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ink/corpus.hpp"
#include "ink/error.hpp"
#include "ink/hash.hpp"
#include "ink/jsonl.hpp"
#include "ink/parallel.hpp"
#include "ink/probe.hpp"
#include "ink/pyfqn.hpp"
#include "ink/quizforge.hpp"
#include "ink/tokvocab.hpp"
#include "ink/version.hpp"

namespace ink::pipeline {

namespace fs = std::filesystem;

using Log = std::function<void(const std::string&)>;

inline void quiet(const std::string&) {}

// Missing inputs name the subcommand that produces them.
inline void require_input(const fs::path& p, const std::string& what, const std::string& producer) {
    if (p.empty()) throw DataError("no " + what + " given; produce one with `" + producer + "`");
    if (!fs::exists(p)) throw DataError(what + " '" + p.string() + "' does not exist; produce it with `" + producer + "`");
}

inline std::string hash_input(const fs::path& p) {
    if (fs::is_regular_file(p)) return sha256_file(p);
    if (!fs::is_directory(p)) return "";
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), p).generic_string(), sha256_file(e.path()));
    }
    std::sort(files.begin(), files.end());
    std::string buf;
    for (const auto& [rel, h] : files) buf += rel + '\0' + h + '\n';
    return sha256_hex(buf);
}

inline fs::path sidecar_path(const fs::path& artifact) { return fs::path(artifact.string() + ".meta.json"); }

struct Provenance {
    std::string stage;
    std::vector<fs::path> inputs;
    json params = json::object();
    std::optional<std::uint64_t> seed;
    std::vector<std::string> warnings;
};

inline void write_sidecar(const fs::path& artifact, const Provenance& prov) {
    json inputs = json::array();
    for (const auto& p : prov.inputs) inputs.push_back({{"path", p.string()}, {"sha256", hash_input(p)}});
    json doc = {{"tool_version", kToolVersion},
                {"stage", prov.stage},
                {"created_at", corpus::utc_timestamp()},
                {"artifact", {{"path", artifact.string()}, {"sha256", hash_input(artifact)}}},
                {"inputs", inputs},
                {"params", prov.params},
                {"rng_seed", prov.seed ? json(*prov.seed) : json(nullptr)},
                {"warnings", prov.warnings}};
    write_json_file(sidecar_path(artifact), doc);
}

inline std::vector<std::string> warning_strings(const std::vector<Warning>& ws, std::size_t cap = 1000) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ws.size() && i < cap; ++i) out.push_back(ws[i].str());
    if (ws.size() > cap) out.push_back("... " + std::to_string(ws.size() - cap) + " more");
    return out;
}

inline fs::path with_suffix(const fs::path& p, const std::string& suffix) {
    auto stem = p.parent_path() / p.stem();
    return fs::path(stem.string() + suffix);
}

// ------------------------------------------------------------------ extract

struct ExtractParams {
    std::vector<fs::path> roots;
    std::string glob = corpus::kDefaultGlob;
    fs::path out;
    unsigned jobs = 1;
};

inline void run_extract(const ExtractParams& p, const Log& log = quiet) {
    if (p.roots.empty()) throw ConfigError("extract needs at least one corpus root");
    auto m = corpus::ingest_corpus(p.roots, p.glob, p.jobs);
    corpus::write_manifest(m, p.out);
    std::vector<std::string> warnings;
    for (const auto& s : m.skipped) warnings.push_back(s.repo_id + "/" + s.rel_path + ": skipped (" + s.reason + ")");
    write_sidecar(p.out, {"extract", p.roots, {{"glob", p.glob}}, std::nullopt, warnings});
    log("extract: " + std::to_string(m.units.size()) + " source files, " + std::to_string(m.skipped.size()) + " skipped -> " +
        p.out.string());
}

// ------------------------------------------------------------------ resolve

struct ResolveParams {
    fs::path manifest;
    fs::path out;
    unsigned jobs = 1;
};

inline std::vector<pyfqn::ApiUsage> read_usages(const fs::path& path) {
    std::vector<pyfqn::ApiUsage> out;
    for (const auto& row : read_jsonl(path)) {
        try {
            out.push_back(pyfqn::usage_from_json(row));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": malformed usage row: " + e.what());
        }
    }
    return out;
}

inline void run_resolve(const ResolveParams& p, const Log& log = quiet) {
    require_input(p.manifest, "corpus manifest", "ink extract");
    auto m = corpus::read_manifest(p.manifest);
    std::vector<pyfqn::UsageResult> results(m.units.size());
    parallel_for(m.units.size(), p.jobs, [&](std::size_t i) {
        auto unit = m.units[i];
        corpus::load_text(m, unit);
        results[i] = pyfqn::extract_usages(unit);
    });
    JsonlWriter w(p.out);
    std::vector<Warning> warnings;
    std::size_t n = 0;
    for (auto& r : results) {
        for (const auto& u : r.usages) w.write(pyfqn::to_json(u));
        n += r.usages.size();
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
    }
    w.flush();
    for (const auto& wr : warnings) log("warning: " + wr.str());
    write_sidecar(p.out, {"resolve", {p.manifest}, json::object(), std::nullopt, warning_strings(warnings)});
    log("resolve: " + std::to_string(n) + " usages from " + std::to_string(m.units.size()) + " files -> " + p.out.string());
}

// ------------------------------------------------------------------ vocab

struct VocabParams {
    fs::path profiles;
    fs::path out;
};

inline void run_vocab(const VocabParams& p, const Log& log = quiet) {
    require_input(p.profiles, "tokenizer profile directory", "tools/make_toy_profiles.py or your own profiles");
    auto profiles = tokvocab::load_profiles(p.profiles);
    auto uv = tokvocab::build_unified_vocab(profiles);
    write_json_file(p.out, tokvocab::to_json(uv));
    write_sidecar(p.out, {"vocab", {p.profiles}, {{"profiles", uv.source_profiles}}, std::nullopt, {}});
    log("vocab: " + std::to_string(uv.tokens.size()) + " shared tokens across " + std::to_string(profiles.size()) +
        " profiles -> " + p.out.string());
}

// ------------------------------------------------------------------ genquiz

struct GenquizParams {
    fs::path usages;
    fs::path uvocab;
    fs::path profiles;
    fs::path out;
    fs::path counts;  // default: <out stem>.counts.json
    std::string ref_profile;  // default: first profile by model_id
    bool gate = true;
    unsigned jobs = 1;
};

inline const tokvocab::TokenizerProfile& pick_ref(const std::vector<tokvocab::TokenizerProfile>& profiles,
                                                   const std::string& id) {
    return id.empty() ? profiles.front() : tokvocab::find_profile(profiles, id);
}

inline fs::path counts_path(const fs::path& out, const fs::path& given) {
    return given.empty() ? with_suffix(out, ".counts.json") : given;
}

inline void run_genquiz(const GenquizParams& p, const Log& log = quiet) {
    require_input(p.usages, "usage file", "ink resolve");
    require_input(p.uvocab, "unified vocabulary", "ink vocab");
    require_input(p.profiles, "tokenizer profile directory", "tools/make_toy_profiles.py or your own profiles");
    auto profiles = tokvocab::load_profiles(p.profiles);
    auto uv = tokvocab::uvocab_from_json(read_json_file(p.uvocab));
    if (uv.ref() != tokvocab::build_unified_vocab(profiles).ref()) {
        throw DataError("unified vocabulary " + p.uvocab.string() + " was built from different profiles; rerun `ink vocab`");
    }
    const auto& ref = pick_ref(profiles, p.ref_profile);
    auto usages = read_usages(p.usages);
    quizforge::GenOptions opt;
    opt.gate = p.gate;
    opt.jobs = p.jobs;
    auto r = quizforge::generate_quizzes(usages, ref, uv, opt);
    r.set.check_unique_ids();
    quizforge::write_quizzes(p.out, r.set.quizzes);
    const auto cpath = counts_path(p.out, p.counts);
    auto counts = quizforge::counts_to_json(r.set);
    counts["ref_profile"] = ref.model_id;
    counts["gate"] = p.gate;
    counts["skipped_statements"] = r.skip_reasons;
    write_json_file(cpath, counts);
    Provenance prov{"genquiz", {p.usages, p.uvocab, p.profiles}, {{"ref_profile", ref.model_id}, {"gate", p.gate}},
                    std::nullopt, r.skips};
    write_sidecar(p.out, prov);
    write_sidecar(cpath, prov);
    log("genquiz: " + std::to_string(r.set.quizzes.size()) + " quizzes from " + std::to_string(r.statements) +
        " statements (" + std::to_string(r.skips.size()) + " skipped) -> " + p.out.string());
}

// ------------------------------------------------------------------ adversarial

struct AdversarialParams {
    fs::path quizzes;
    fs::path usages;  // optional: widens the alias pool to import-only aliases
    fs::path out;
    fs::path counts;
    std::uint64_t seed = 0;
    std::size_t variants = 10;
};

inline void run_adversarial(const AdversarialParams& p, const Log& log = quiet) {
    require_input(p.quizzes, "quiz file", "ink genquiz");
    auto quizzes = quizforge::read_quizzes(p.quizzes);
    quizforge::AliasPool pool;
    std::vector<fs::path> inputs{p.quizzes};
    if (!p.usages.empty()) {
        require_input(p.usages, "usage file", "ink resolve");
        pool = quizforge::collect_alias_pool(std::span<const pyfqn::ApiUsage>(read_usages(p.usages)));
        inputs.push_back(p.usages);
    } else {
        pool = quizforge::collect_alias_pool(std::span<const quizforge::PopQuiz>(quizzes));
    }
    auto r = quizforge::make_adversarial(quizzes, pool, p.seed, p.variants);
    quizforge::write_quizzes(p.out, r.quizzes);
    quizforge::QuizSet qs{r.quizzes, "", {{"alias_quizzes", r.base_quizzes}, {"short_pool", r.short_pool}}};
    qs.check_unique_ids();
    const auto cpath = counts_path(p.out, p.counts);
    write_json_file(cpath, quizforge::counts_to_json(qs));
    for (const auto& w : r.warnings) log("warning: " + w.str());
    Provenance prov{"adversarial", inputs, {{"variants", p.variants}}, p.seed, warning_strings(r.warnings)};
    write_sidecar(p.out, prov);
    write_sidecar(cpath, prov);
    log("adversarial: " + std::to_string(r.quizzes.size()) + " variants of " + std::to_string(r.base_quizzes) +
        " alias quizzes -> " + p.out.string());
}

// ------------------------------------------------------------------ nl

struct NlParams {
    fs::path quizzes;
    fs::path queries;
    fs::path profiles;
    fs::path out;
    std::string ref_profile;
    quizforge::NlOptions opt;
};

inline void run_nl(const NlParams& p, const Log& log = quiet) {
    require_input(p.quizzes, "quiz file", "ink genquiz");
    require_input(p.queries, "query table", "an external NL query dataset");
    require_input(p.profiles, "tokenizer profile directory", "tools/make_toy_profiles.py or your own profiles");
    auto profiles = tokvocab::load_profiles(p.profiles);
    const auto& ref = pick_ref(profiles, p.ref_profile);
    auto quizzes = quizforge::read_quizzes(p.quizzes);
    auto r = quizforge::attach_nl_context(quizzes, quizforge::load_query_table(p.queries), ref, p.opt);
    quizforge::QuizSet qs{r.quizzes, "", {}};
    qs.check_unique_ids();
    quizforge::write_quizzes(p.out, r.quizzes);
    write_sidecar(p.out, {"nl",
                          {p.quizzes, p.queries, p.profiles},
                          {{"ref_profile", ref.model_id},
                           {"max_queries", p.opt.max_queries},
                           {"max_tokens", p.opt.max_tokens},
                           {"separator", p.opt.separator},
                           {"variants", r.variants},
                           {"too_long", r.too_long},
                           {"unusable_query", r.unusable_query}},
                          std::nullopt,
                          {}});
    log("nl: " + std::to_string(r.variants) + " variants (" + std::to_string(r.too_long) + " over " +
        std::to_string(p.opt.max_tokens) + " tokens) -> " + p.out.string());
}

// ------------------------------------------------------------------ eval

struct EvalParams {
    fs::path quizzes;
    fs::path out;
    std::string predictor;
    probe::EvalOptions opt;
};

inline void run_eval(const EvalParams& p, const Log& log = quiet) {
    require_input(p.quizzes, "quiz file", "ink genquiz");
    if (p.predictor.empty()) throw ConfigError("eval needs --predictor (cmd:<argv>, http:<url> or mock:<mode>)");
    auto quizzes = quizforge::read_quizzes(p.quizzes);
    auto predictor = probe::make_predictor(p.predictor, probe::answer_key(quizzes));
    auto responses = probe::evaluate(quizzes, *predictor, p.opt);
    probe::write_journal(p.out, responses);
    std::size_t failed = 0;
    std::vector<std::string> warnings;
    for (const auto& r : responses) {
        if (r.error) {
            ++failed;
            warnings.push_back(r.quiz_id + ": " + *r.error);
        }
    }
    write_sidecar(p.out, {"eval",
                          {p.quizzes},
                          {{"predictor", predictor->id()},
                           {"k", p.opt.k},
                           {"in_flight", p.opt.in_flight},
                           {"retries", p.opt.retries},
                           {"failed", failed}},
                          std::nullopt,
                          warnings});
    log("eval: " + std::to_string(responses.size()) + " responses (" + std::to_string(failed) + " failed) from " +
        predictor->id() + " -> " + p.out.string());
}

// ------------------------------------------------------------------ score

struct ScoreParams {
    fs::path journal;
    fs::path quizzes;
    fs::path out;  // CSV; a JSON twin goes next to it
    probe::Aggregation agg = probe::Aggregation::micro;
    std::vector<int> ks = probe::kDefaultKs;
    std::string model;  // default: predictor id from the journal sidecar
};

inline std::string model_from_journal(const fs::path& journal) {
    auto side = sidecar_path(journal);
    if (!fs::exists(side)) return "unknown";
    return read_json_file(side).value("params", json::object()).value("predictor", std::string("unknown"));
}

inline probe::ScoreReport load_and_score(const fs::path& journal, const fs::path& quizzes, probe::Aggregation agg,
                                         const std::vector<int>& ks, std::string model) {
    require_input(journal, "results journal", "ink eval");
    require_input(quizzes, "quiz file", "ink genquiz");
    if (model.empty()) model = model_from_journal(journal);
    auto qs = quizforge::read_quizzes(quizzes);
    auto js = probe::read_journal(journal);
    return probe::score(qs, js, ks, agg, model);
}

inline void run_score(const ScoreParams& p, const Log& log = quiet) {
    auto rep = load_and_score(p.journal, p.quizzes, p.agg, p.ks, p.model);
    const fs::path csv = p.out.extension() == ".json" ? with_suffix(p.out, ".csv") : p.out;
    const fs::path js = with_suffix(csv, ".json");
    {
        std::ofstream o(csv, std::ios::binary | std::ios::trunc);
        if (!o) throw DataError("cannot write " + csv.string());
        o << probe::report_csv(rep);
    }
    write_json_file(js, probe::report_json(rep));
    Provenance prov{"score", {p.journal, p.quizzes}, {{"aggregation", probe::to_string(p.agg)}, {"ks", p.ks}, {"model", rep.model}},
                    std::nullopt, {}};
    write_sidecar(csv, prov);
    write_sidecar(js, prov);
    log("score: " + std::to_string(rep.rows.size()) + " rows (" + probe::to_string(p.agg) + ") -> " + csv.string());
}

// ------------------------------------------------------------------ split

struct SplitParams {
    fs::path quizzes;
    fs::path training;
    fs::path out_dir;
};

inline probe::SplitResult run_split(const SplitParams& p, const Log& log = quiet) {
    require_input(p.quizzes, "quiz file", "ink genquiz");
    require_input(p.training, "training FQN list", "the predictor's training-corpus FQN dump");
    auto r = probe::split_seen_unseen(quizforge::read_quizzes(p.quizzes), probe::load_fqn_list(p.training));
    fs::create_directories(p.out_dir);
    quizforge::write_quizzes(p.out_dir / "seen.jsonl", r.seen);
    quizforge::write_quizzes(p.out_dir / "unseen.jsonl", r.unseen);
    quizforge::write_quizzes(p.out_dir / "dropped.jsonl", r.dropped);
    write_json_file(p.out_dir / "split.json", probe::to_json(r));
    write_sidecar(p.out_dir / "split.json", {"split", {p.quizzes, p.training}, json::object(), std::nullopt, {}});
    log("split: seen " + std::to_string(r.seen.size()) + ", unseen " + std::to_string(r.unseen.size()) + ", dropped " +
        std::to_string(r.dropped.size()) + " -> " + p.out_dir.string());
    return r;
}

}  // namespace ink::pipeline
