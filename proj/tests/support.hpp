#pragma once

// Oracles and helpers shared by the unit tests and the acceptance runner.
// The brute-force enumerator deliberately avoids quizforge: it walks the
// usages, tokenizes each level itself and tallies cells directly.

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ink/corpus.hpp"
#include "ink/pyfqn.hpp"
#include "ink/quizforge.hpp"
#include "ink/tokvocab.hpp"

namespace inktest {

namespace fs = std::filesystem;

inline fs::path fixtures() { return fs::path(INK_FIXTURE_DIR); }
inline fs::path ink_binary() { return fs::path(INK_BINARY); }

inline std::vector<fs::path> corpus_roots() {
    return {fixtures() / "mini_corpus" / "alpha", fixtures() / "mini_corpus" / "beta"};
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = fs::temp_directory_path() / ("ink-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& s) const { return path / s; }
};

inline void write_file(const fs::path& p, const std::string& bytes) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << bytes;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, '\t')) cols.push_back(c);
        rows.push_back(std::move(cols));
    }
    return rows;
}

// "repo \t path \t origin \t fqn \t alias" rows, alias as name=imported or "-".
inline std::string usage_row(const ink::pyfqn::ApiUsage& u) {
    std::string a = u.alias ? u.alias->name + "=" + u.alias->imported_fqn : "-";
    return u.repo_id + "\t" + u.rel_path + "\t" + ink::pyfqn::to_string(u.origin) + "\t" + u.fqn + "\t" + a;
}

inline std::set<std::string> oracle_rows() {
    std::set<std::string> out;
    for (const auto& r : read_tsv(fixtures() / "mini_corpus_oracle.tsv")) {
        out.insert(r.at(0) + "\t" + r.at(1) + "\t" + r.at(2) + "\t" + r.at(3) + "\t" + r.at(4));
    }
    return out;
}

inline std::vector<ink::pyfqn::ApiUsage> mini_usages() {
    auto m = ink::corpus::ingest_corpus(corpus_roots());
    std::vector<ink::pyfqn::ApiUsage> out;
    for (const auto& u : m.units) {
        auto r = ink::pyfqn::extract_usages(u);
        out.insert(out.end(), r.usages.begin(), r.usages.end());
    }
    return out;
}

inline std::vector<ink::tokvocab::TokenizerProfile> toy_profiles() {
    return ink::tokvocab::load_profiles(fixtures() / "profiles");
}

// Hand-written WordPiece profile; "##x" entries are continuations.
inline ink::tokvocab::TokenizerProfile wp_profile(const std::string& id, const std::vector<std::string>& vocab) {
    ink::json doc = {{"model_id", id}, {"mask_surface", "[MASK]"}, {"vocabulary", vocab}, {"tokenizer", {{"type", "wordpiece"}}}};
    return ink::tokvocab::profile_from_json(doc);
}

// Covers every ASCII identifier character by character, plus some whole words.
inline ink::tokvocab::TokenizerProfile char_profile(const std::string& id, std::vector<std::string> words = {}) {
    for (char c = 'a'; c <= 'z'; ++c) {
        words.emplace_back(1, c);
        words.push_back("##" + std::string(1, c));
        words.emplace_back(1, static_cast<char>(c - 'a' + 'A'));
        words.push_back("##" + std::string(1, static_cast<char>(c - 'a' + 'A')));
    }
    for (char c = '0'; c <= '9'; ++c) {
        words.emplace_back(1, c);
        words.push_back("##" + std::string(1, c));
    }
    words.push_back("_");
    words.push_back(".");
    return wp_profile(id, words);
}

// ---------------------------------------------------------------- brute force

struct Cell {
    std::size_t first = 0, last = 0, full = 0;
};

// Loops over every statement, every maskable level and every masking
// position, applies the gate, and dedups on (fqn, family, level, kind).
inline std::map<std::string, Cell> brute_force_counts(const std::vector<ink::pyfqn::ApiUsage>& usages,
                                                      const ink::tokvocab::TokenizerProfile& ref,
                                                      const std::set<std::string>& uvocab, bool gate) {
    std::set<std::string> fqns;
    std::set<std::pair<std::string, ink::pyfqn::AliasRef>> aliased;
    for (const auto& u : usages) {
        fqns.insert(u.fqn);
        if (u.origin == ink::pyfqn::Origin::alias_call && u.alias) aliased.emplace(u.fqn, *u.alias);
    }
    std::set<std::tuple<std::string, std::string, int, std::string>> seen;
    std::map<std::string, Cell> out{{"call", {}}, {"import", {}}, {"alias", {}}};

    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string p;
        while (std::getline(ss, p, '.')) parts.push_back(p);
        return parts;
    };
    // fixed: levels that must tokenize but are never masked; open: (module level, text)
    auto enumerate = [&](const std::string& family, const std::string& fqn, const std::vector<std::string>& fixed,
                         const std::vector<std::pair<int, std::string>>& open) {
        for (const auto& f : fixed) {
            if (!ref.tokenize(f)) return;
        }
        std::vector<std::vector<std::string>> toks;
        for (const auto& [lvl, text] : open) {
            auto t = ref.tokenize(text);
            if (!t || t->empty()) return;
            toks.push_back(*t);
        }
        for (std::size_t i = 0; i < open.size(); ++i) {
            const int lvl = open[i].first;
            const auto& t = toks[i];
            std::vector<std::pair<std::string, std::string>> slots;  // kind, answer
            if (t.size() == 1) slots = {{"full", t[0]}};
            else slots = {{"first", t.front()}, {"last", t.back()}};
            for (const auto& [kind, answer] : slots) {
                if (gate && !uvocab.count(answer)) continue;
                if (!seen.emplace(fqn, family, lvl, kind).second) continue;
                auto& c = out[family];
                (kind == "first" ? c.first : kind == "last" ? c.last : c.full)++;
            }
        }
    };

    for (const auto& fqn : fqns) {
        auto parts = split(fqn);
        std::vector<std::pair<int, std::string>> open;
        for (std::size_t i = 0; i < parts.size(); ++i) open.emplace_back(static_cast<int>(i), parts[i]);
        if (parts.size() >= 2) {
            enumerate("call", fqn, {}, open);
            enumerate("import", fqn, {}, open);
        }
    }
    for (const auto& [fqn, alias] : aliased) {
        auto parts = split(fqn);
        auto head = split(alias.imported_fqn);
        if (head.size() >= parts.size()) continue;
        if (alias.form == ink::pyfqn::AliasForm::from_import_as && head.size() < 2) continue;
        std::vector<std::string> fixed(head.begin(), head.end());
        fixed.push_back(alias.name);
        std::vector<std::pair<int, std::string>> open;
        for (std::size_t i = head.size(); i < parts.size(); ++i) open.emplace_back(static_cast<int>(i), parts[i]);
        enumerate("alias", fqn, fixed, open);
    }
    return out;
}

// ---------------------------------------------------------------- reconstruction

// Substituting the answer yields a statement that parses and re-segments to
// the structure the quiz was cut from, with the mask at the same slot.
inline bool reconstructs(const ink::quizforge::PopQuiz& q, const ink::tokvocab::TokenizerProfile& ref, std::string* why = nullptr) {
    using namespace ink;
    auto fail = [&](const std::string& m) {
        if (why) *why = q.quiz_id + ": " + m;
        return false;
    };
    const auto stmt = q.reconstruct();
    auto parsed = tokvocab::parse_statement(stmt, q.family);
    if (!parsed) return fail("statement does not parse: " + stmt);
    if (parsed->fqn != q.fqn) return fail("parsed fqn " + parsed->fqn + " != " + q.fqn);
    auto seg = tokvocab::segment_statement(parsed->fqn, parsed->alias, q.family, ref);
    if (!seg) return fail("re-segmentation failed: " + seg.skip_reason);
    if (seg.seg->raw_text != stmt) return fail("raw text differs");

    std::optional<pyfqn::AliasRef> original_alias = q.meta.alias;
    if (original_alias && q.meta.adversarial_alias) original_alias->name = *q.meta.adversarial_alias;
    auto original = tokvocab::segment_statement(q.fqn, original_alias, q.family, ref);
    if (!original || !original.seg->same_structure(*seg.seg)) return fail("structure differs from the original segmentation");

    for (std::size_t l = 0; l < seg.seg->levels.size(); ++l) {
        if (seg.seg->fqn_level[l] != q.level_index) continue;
        const auto& lvl = seg.seg->levels[l];
        if (q.token_index < 0 || q.token_index >= static_cast<int>(lvl.size())) return fail("token index out of range");
        if (lvl[q.token_index] != q.answer) return fail("answer is not the token at the masked slot");
        if (seg.seg->render(static_cast<int>(l), q.token_index, tokvocab::kMask) != q.statement_template()) {
            return fail("re-rendered template differs");
        }
        const bool single = lvl.size() == 1;
        if (single != (q.mask_kind == tokvocab::MaskKind::full)) return fail("mask kind does not match level size");
        if (!single && q.mask_kind == tokvocab::MaskKind::first && q.token_index != 0) return fail("first mask not at token 0");
        if (!single && q.mask_kind == tokvocab::MaskKind::last && q.token_index != static_cast<int>(lvl.size()) - 1) {
            return fail("last mask not at final token");
        }
        return true;
    }
    return fail("masked level not found");
}

// ---------------------------------------------------------------- split

struct SplitOracle {
    std::vector<std::string> fqns;
    std::map<std::string, std::string> expected;  // fqn -> seen | unseen | dropped
};

inline SplitOracle split_oracle() {
    SplitOracle o;
    std::ifstream in(fixtures() / "split" / "fqns.txt");
    for (std::string l; std::getline(in, l);) {
        if (!l.empty()) o.fqns.push_back(l);
    }
    for (const auto& r : read_tsv(fixtures() / "split" / "expected.tsv")) o.expected[r.at(0)] = r.at(1);
    return o;
}

inline ink::quizforge::PopQuiz synthetic_quiz(const std::string& fqn, int n = 0) {
    ink::quizforge::PopQuiz q;
    q.family = ink::tokvocab::Family::call;
    q.fqn = fqn;
    q.answer = fqn.substr(fqn.rfind('.') + 1);
    q.template_text = fqn.substr(0, fqn.rfind('.') + 1) + std::string(ink::tokvocab::kMask);
    if (n) q.template_text += std::to_string(n);
    q.mask_kind = ink::tokvocab::MaskKind::full;
    q.level_index = static_cast<int>(std::count(fqn.begin(), fqn.end(), '.'));
    q.meta.library = fqn.substr(0, fqn.find('.'));
    q.quiz_id = ink::quizforge::PopQuiz::make_id(q.family, q.template_text, q.answer);
    return q;
}

}  // namespace inktest
