#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/hash.hpp"
#include "ink/jsonl.hpp"
#include "ink/pyfqn/types.hpp"
#include "ink/text.hpp"
#include "ink/tokvocab/profile.hpp"
#include "ink/tokvocab/segment.hpp"

namespace ink::quizforge {

using tokvocab::Family;
using tokvocab::kMask;
using tokvocab::MaskKind;

struct QuizMeta {
    std::string library;
    std::optional<pyfqn::AliasRef> alias;
    std::optional<std::string> adversarial_alias;
};

struct PopQuiz {
    std::string quiz_id;
    Family family = Family::call;
    std::string template_text;
    std::string answer;
    std::string fqn;
    int level_index = 0;  // module level of the fqn
    int token_index = 0;  // token within that level
    MaskKind mask_kind = MaskKind::full;
    std::optional<std::string> nl_context;
    std::string nl_separator;
    std::optional<std::string> base_quiz_id;
    QuizMeta meta;

    static std::string make_id(Family f, const std::string& tmpl, const std::string& answer) {
        return stable_id(tokvocab::to_string(f), tmpl, answer);
    }

    // Template without any NL prefix.
    std::string statement_template() const {
        if (!nl_context) return template_text;
        return template_text.substr(nl_context->size() + nl_separator.size());
    }

    // The statement with the answer put back, NL prefix dropped.
    std::string reconstruct() const {
        auto s = statement_template();
        auto pos = s.find(kMask);
        if (pos == std::string::npos) throw DataError("quiz " + quiz_id + " has no mask placeholder");
        return s.replace(pos, kMask.size(), answer);
    }

    std::string row_label() const {
        std::string label = tokvocab::to_string(family);
        if (nl_context) label += "+nl";
        return label;
    }
};

inline json to_json(const PopQuiz& q) {
    json meta = {{"library", q.meta.library}};
    if (q.meta.alias) meta["alias"] = pyfqn::to_json(*q.meta.alias);
    if (q.meta.adversarial_alias) meta["adversarial_alias"] = *q.meta.adversarial_alias;
    json j = {{"quiz_id", q.quiz_id},         {"family", tokvocab::to_string(q.family)},
              {"template", q.template_text},  {"answer", q.answer},
              {"fqn", q.fqn},                 {"level_index", q.level_index},
              {"token_index", q.token_index}, {"mask_kind", tokvocab::to_string(q.mask_kind)},
              {"meta", meta}};
    if (q.nl_context) {
        j["nl_context"] = *q.nl_context;
        j["nl_separator"] = q.nl_separator;
    }
    if (q.base_quiz_id) j["base_quiz_id"] = *q.base_quiz_id;
    return j;
}

inline PopQuiz quiz_from_json(const json& j) {
    PopQuiz q;
    try {
        q.quiz_id = j.at("quiz_id").get<std::string>();
        q.family = tokvocab::family_from_string(j.at("family").get<std::string>());
        q.template_text = j.at("template").get<std::string>();
        q.answer = j.at("answer").get<std::string>();
        q.fqn = j.at("fqn").get<std::string>();
        q.level_index = j.at("level_index").get<int>();
        q.token_index = j.value("token_index", 0);
        q.mask_kind = tokvocab::mask_kind_from_string(j.at("mask_kind").get<std::string>());
        if (j.contains("nl_context")) {
            q.nl_context = j["nl_context"].get<std::string>();
            q.nl_separator = j.value("nl_separator", std::string(" "));
        }
        if (j.contains("base_quiz_id")) q.base_quiz_id = j["base_quiz_id"].get<std::string>();
        const auto& meta = j.at("meta");
        q.meta.library = meta.value("library", std::string());
        if (meta.contains("alias")) q.meta.alias = pyfqn::alias_from_json(meta["alias"]);
        if (meta.contains("adversarial_alias")) q.meta.adversarial_alias = meta["adversarial_alias"].get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed quiz record: ") + e.what());
    }
    if (text::count_occurrences(q.template_text, kMask) != 1) {
        throw DataError("quiz " + q.quiz_id + ": template must contain exactly one " + std::string(kMask));
    }
    return q;
}

struct KindCounts {
    std::size_t first = 0, last = 0, full = 0;

    std::size_t total() const { return first + last + full; }
    std::size_t& operator[](MaskKind k) { return k == MaskKind::first ? first : k == MaskKind::last ? last : full; }
    bool operator==(const KindCounts&) const = default;
};

using CountTable = std::map<std::string, KindCounts>;  // row label -> counts

inline CountTable tally(const std::vector<PopQuiz>& quizzes) {
    CountTable t;
    for (const auto& q : quizzes) ++t[q.row_label()][q.mask_kind];
    return t;
}

struct QuizSet {
    std::vector<PopQuiz> quizzes;
    std::string uvocab_ref;
    std::map<std::string, std::size_t> notes;  // e.g. short adversarial pools, dropped variants

    CountTable counts() const { return tally(quizzes); }

    void check_unique_ids() const {
        std::set<std::string> seen;
        for (const auto& q : quizzes) {
            if (!seen.insert(q.quiz_id).second) throw DataError("duplicate quiz_id " + q.quiz_id);
        }
    }
};

// Rows follow the family order call, import, alias, then anything else.
inline json counts_to_json(const QuizSet& qs) {
    auto table = qs.counts();
    for (const char* f : {"call", "import", "alias"}) table.try_emplace(f);
    static const std::array<std::string, 3> lead = {"call", "import", "alias"};
    json rows = json::array();
    auto emit = [&](const std::string& label, const KindCounts& c) {
        rows.push_back({{"family", label}, {"first", c.first}, {"last", c.last}, {"full", c.full}, {"total", c.total()}});
    };
    for (const auto& f : lead) emit(f, table.at(f));
    for (const auto& [label, c] : table) {
        if (std::find(lead.begin(), lead.end(), label) == lead.end()) emit(label, c);
    }
    json doc = {{"format", "ink-quiz-counts/1"}, {"uvocab_ref", qs.uvocab_ref}, {"rows", rows}};
    if (!qs.notes.empty()) doc["notes"] = qs.notes;
    return doc;
}

inline CountTable counts_from_json(const json& doc) {
    CountTable t;
    for (const auto& r : doc.at("rows")) {
        KindCounts c{r.at("first").get<std::size_t>(), r.at("last").get<std::size_t>(), r.at("full").get<std::size_t>()};
        if (c.total() != r.at("total").get<std::size_t>()) throw DataError("counts row total mismatch");
        t[r.at("family").get<std::string>()] = c;
    }
    return t;
}

inline void write_quizzes(const std::filesystem::path& path, const std::vector<PopQuiz>& quizzes) {
    JsonlWriter w(path);
    for (const auto& q : quizzes) w.write(to_json(q));
}

inline std::vector<PopQuiz> read_quizzes(const std::filesystem::path& path) {
    std::vector<PopQuiz> out;
    for (const auto& row : read_jsonl(path)) out.push_back(quiz_from_json(row));
    return out;
}

}  // namespace ink::quizforge
