#pragma once

// Tokenizer profiles: a model's vocabulary plus a tokenize contract.
//
// Surfaces are normalized before any set operation: a leading
// space-marker sigil (GPT-2 "Ġ", SentencePiece "▁", or whatever the
// profile declares) becomes a single leading ' ', and a WordPiece
// continuation prefix ("##") is stripped. Space-prefixed and bare forms of
// the same word stay distinct.
//
// Profile file (JSON):
//   {
//     "model_id": "toy-bpe",
//     "mask_surface": "<mask>",
//     "vocabulary": ["a", "b", "Ġfile", ...],
//     "tokenizer": {"type": "bpe", "space_marker": "Ġ", "merges": ["l i", ...]}
//                | {"type": "wordpiece", "continuation_prefix": "##"}
//                | {"type": "bridge", "command": ["python3", "tok.py"]}
//   }

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ink/error.hpp"
#include "ink/jsonl.hpp"
#include "ink/process.hpp"
#include "ink/text.hpp"
#include "ink/version.hpp"

namespace ink::tokvocab {

namespace fs = std::filesystem;

inline constexpr std::string_view kMask = "[MASK]";

struct SurfaceMarkers {
    std::vector<std::string> space_markers{"\xC4\xA0", "\xE2\x96\x81"};  // Ġ, ▁
    std::string continuation_prefix;                                       // "##" for WordPiece
};

inline std::string normalize_surface(std::string_view raw, const SurfaceMarkers& m) {
    for (const auto& marker : m.space_markers) {
        if (!marker.empty() && raw.substr(0, marker.size()) == marker) {
            return " " + std::string(raw.substr(marker.size()));
        }
    }
    const auto& cp = m.continuation_prefix;
    if (!cp.empty() && raw.size() > cp.size() && raw.substr(0, cp.size()) == cp) {
        return std::string(raw.substr(cp.size()));
    }
    return std::string(raw);
}

// Produces normalized surfaces, or nullopt when the text cannot be covered.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::optional<std::vector<std::string>> tokenize(std::string_view text) const = 0;
};

// Splits like GPT-2's pre-tokenizer restricted to ASCII classes: an optional
// single leading space followed by a run of letters, digits, or other
// symbols; whitespace runs leave their last space to the following word.
inline std::vector<std::string> gpt2_pretokenize(std::string_view s) {
    auto cls = [](unsigned char c) {
        if (std::isalpha(c) || c >= 0x80) return 0;
        if (std::isdigit(c)) return 1;
        if (std::isspace(c)) return 3;
        return 2;
    };
    std::vector<std::string> out;
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        if (cls(static_cast<unsigned char>(s[i])) == 3) {
            std::size_t j = i;
            while (j < n && cls(static_cast<unsigned char>(s[j])) == 3) ++j;
            if (j < n && s[j - 1] == ' ') {
                if (j - 1 > i) out.emplace_back(s.substr(i, j - 1 - i));
                i = j - 1;
            } else {
                out.emplace_back(s.substr(i, j - i));
                i = j;
                continue;
            }
        }
        const std::size_t start = i;
        if (s[i] == ' ') ++i;
        const int k = cls(static_cast<unsigned char>(s[i]));
        while (i < n && cls(static_cast<unsigned char>(s[i])) == k) ++i;
        out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

class BpeTokenizer : public Tokenizer {
public:
    BpeTokenizer(std::unordered_set<std::string> raw_vocab, const std::vector<std::pair<std::string, std::string>>& merges,
                 SurfaceMarkers markers, std::string space_marker)
        : raw_vocab_(std::move(raw_vocab)), markers_(std::move(markers)), space_marker_(std::move(space_marker)) {
        for (std::size_t r = 0; r < merges.size(); ++r) {
            ranks_.emplace(merges[r].first + '\x1f' + merges[r].second, static_cast<int>(r));
        }
    }

    std::optional<std::vector<std::string>> tokenize(std::string_view text) const override {
        std::vector<std::string> out;
        for (const auto& piece : gpt2_pretokenize(text)) {
            std::vector<std::string> symbols;
            for (auto& cp : text::codepoints(piece)) symbols.push_back(cp == " " ? space_marker_ : cp);
            apply_merges(symbols);
            for (auto& sym : symbols) {
                if (!raw_vocab_.count(sym)) return std::nullopt;
                out.push_back(normalize_surface(sym, markers_));
            }
        }
        return out;
    }

private:
    std::unordered_set<std::string> raw_vocab_;
    SurfaceMarkers markers_;
    std::string space_marker_;
    std::unordered_map<std::string, int> ranks_;

    void apply_merges(std::vector<std::string>& symbols) const {
        while (symbols.size() > 1) {
            int best = -1;
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                auto it = ranks_.find(symbols[i] + '\x1f' + symbols[i + 1]);
                if (it != ranks_.end() && (best < 0 || it->second < best)) best = it->second;
            }
            if (best < 0) return;
            std::vector<std::string> merged;
            for (std::size_t i = 0; i < symbols.size(); ++i) {
                if (i + 1 < symbols.size()) {
                    auto it = ranks_.find(symbols[i] + '\x1f' + symbols[i + 1]);
                    if (it != ranks_.end() && it->second == best) {
                        merged.push_back(symbols[i] + symbols[i + 1]);
                        ++i;
                        continue;
                    }
                }
                merged.push_back(symbols[i]);
            }
            symbols = std::move(merged);
        }
    }
};

// Greedy longest-match-first over whitespace/punctuation-split words.
class WordPieceTokenizer : public Tokenizer {
public:
    WordPieceTokenizer(std::unordered_set<std::string> raw_vocab, SurfaceMarkers markers)
        : raw_vocab_(std::move(raw_vocab)), markers_(std::move(markers)) {}

    std::optional<std::vector<std::string>> tokenize(std::string_view text) const override {
        std::vector<std::string> out;
        for (const auto& word : split_words(text)) {
            auto cps = text::codepoints(word);
            std::size_t start = 0;
            while (start < cps.size()) {
                std::size_t end = cps.size();
                std::optional<std::string> hit;
                while (end > start) {
                    std::string sub;
                    for (std::size_t k = start; k < end; ++k) sub += cps[k];
                    if (start > 0) sub = markers_.continuation_prefix + sub;
                    if (raw_vocab_.count(sub)) {
                        hit = std::move(sub);
                        break;
                    }
                    --end;
                }
                if (!hit) return std::nullopt;
                out.push_back(normalize_surface(*hit, markers_));
                start = end;
            }
        }
        return out;
    }

private:
    std::unordered_set<std::string> raw_vocab_;
    SurfaceMarkers markers_;

    static std::vector<std::string> split_words(std::string_view s) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : s) {
            auto c = static_cast<unsigned char>(ch);
            if (std::isspace(c)) {
                if (!cur.empty()) out.push_back(std::move(cur));
                cur.clear();
            } else if (c < 0x80 && !std::isalnum(c)) {
                if (!cur.empty()) out.push_back(std::move(cur));
                cur.clear();
                out.emplace_back(1, ch);
            } else {
                cur.push_back(ch);
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
        return out;
    }
};

// Delegates to an external process speaking {"v":1,"op":"tokenize","text":..}
// -> {"v":1,"tokens":[..]} over line-delimited JSON. Results are cached.
class BridgeTokenizer : public Tokenizer {
public:
    BridgeTokenizer(std::vector<std::string> argv, SurfaceMarkers markers)
        : argv_(std::move(argv)), markers_(std::move(markers)) {}

    std::optional<std::vector<std::string>> tokenize(std::string_view text) const override {
        std::lock_guard lock(mu_);
        std::string key(text);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        if (!proc_) proc_ = std::make_unique<ChildProcess>(argv_);
        json req = {{"v", kProtocolVersion}, {"op", "tokenize"}, {"text", key}};
        if (!proc_->write_line(req.dump())) throw ProtocolError("tokenizer bridge closed its input");
        auto line = proc_->read_line(std::chrono::seconds(30));
        if (!line) throw ProtocolError("tokenizer bridge did not answer");
        std::optional<std::vector<std::string>> result;
        try {
            auto resp = json::parse(*line);
            if (resp.value("v", 0) != kProtocolVersion) throw ProtocolError("tokenizer bridge: wrong protocol version");
            if (!resp.at("tokens").is_null()) {
                std::vector<std::string> toks;
                for (const auto& t : resp.at("tokens")) toks.push_back(normalize_surface(t.get<std::string>(), markers_));
                result = std::move(toks);
            }
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("tokenizer bridge: malformed reply: ") + e.what());
        }
        cache_.emplace(std::move(key), result);
        return result;
    }

private:
    std::vector<std::string> argv_;
    SurfaceMarkers markers_;
    mutable std::mutex mu_;
    mutable std::unique_ptr<ChildProcess> proc_;
    mutable std::map<std::string, std::optional<std::vector<std::string>>> cache_;
};

struct TokenizerProfile {
    std::string model_id;
    std::string mask_surface;
    std::unordered_set<std::string> vocabulary;  // normalized surfaces
    std::shared_ptr<const Tokenizer> tokenizer;

    bool contains(const std::string& surface) const { return vocabulary.count(surface) > 0; }

    // Fails when the tokenizer cannot cover the text or emits a surface
    // outside the vocabulary.
    std::optional<std::vector<std::string>> tokenize(std::string_view text) const {
        if (!tokenizer) throw ConfigError("profile '" + model_id + "' has no tokenizer");
        auto toks = tokenizer->tokenize(text);
        if (!toks) return std::nullopt;
        for (const auto& t : *toks) {
            if (!contains(t)) return std::nullopt;
        }
        return toks;
    }

    // Token count of a statement whose "[MASK]" placeholders each count as
    // one model token.
    std::optional<std::size_t> count_tokens(std::string_view text) const {
        std::size_t total = 0;
        std::size_t start = 0;
        while (true) {
            auto pos = text.find(kMask, start);
            auto piece = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
            if (!piece.empty()) {
                auto toks = tokenize(piece);
                if (!toks) return std::nullopt;
                total += toks->size();
            }
            if (pos == std::string_view::npos) break;
            ++total;
            start = pos + kMask.size();
        }
        return total;
    }
};

inline TokenizerProfile profile_from_json(const json& doc, const fs::path& base_dir = {}) {
    TokenizerProfile p;
    try {
        p.model_id = doc.at("model_id").get<std::string>();
        p.mask_surface = doc.value("mask_surface", std::string(kMask));
        const auto& tok = doc.at("tokenizer");
        const std::string type = tok.at("type").get<std::string>();
        SurfaceMarkers markers;
        std::string space_marker = tok.value("space_marker", std::string("\xC4\xA0"));
        if (std::find(markers.space_markers.begin(), markers.space_markers.end(), space_marker) == markers.space_markers.end()) {
            markers.space_markers.insert(markers.space_markers.begin(), space_marker);
        }
        markers.continuation_prefix = tok.value("continuation_prefix", type == "wordpiece" ? std::string("##") : std::string());

        std::unordered_set<std::string> raw;
        for (const auto& v : doc.at("vocabulary")) {
            auto s = v.get<std::string>();
            p.vocabulary.insert(normalize_surface(s, markers));
            raw.insert(std::move(s));
        }
        if (type == "bpe") {
            std::vector<std::pair<std::string, std::string>> merges;
            for (const auto& m : tok.value("merges", json::array())) {
                auto s = m.get<std::string>();
                auto sp = s.find(' ');
                if (sp == std::string::npos) throw ConfigError("profile '" + p.model_id + "': malformed merge '" + s + "'");
                merges.emplace_back(s.substr(0, sp), s.substr(sp + 1));
            }
            p.tokenizer = std::make_shared<BpeTokenizer>(std::move(raw), merges, markers, space_marker);
        } else if (type == "wordpiece") {
            p.tokenizer = std::make_shared<WordPieceTokenizer>(std::move(raw), markers);
        } else if (type == "bridge") {
            auto argv = tok.at("command").get<std::vector<std::string>>();
            if (!argv.empty() && !base_dir.empty() && fs::exists(base_dir / argv.back())) {
                argv.back() = (base_dir / argv.back()).string();
            }
            p.tokenizer = std::make_shared<BridgeTokenizer>(std::move(argv), markers);
        } else {
            throw ConfigError("profile '" + p.model_id + "': unknown tokenizer type '" + type + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed tokenizer profile: ") + e.what());
    }
    return p;
}

inline TokenizerProfile load_profile(const fs::path& path) {
    return profile_from_json(read_json_file(path), path.parent_path());
}

// Every *.json in the directory, ordered by model_id.
inline std::vector<TokenizerProfile> load_profiles(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("profile directory not found: " + dir.string());
    std::vector<TokenizerProfile> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(load_profile(e.path()));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.model_id < b.model_id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].model_id == out[i - 1].model_id) throw ConfigError("duplicate profile model_id '" + out[i].model_id + "'");
    }
    if (out.empty()) throw ConfigError("no tokenizer profiles (*.json) in " + dir.string());
    return out;
}

inline const TokenizerProfile& find_profile(const std::vector<TokenizerProfile>& profiles, std::string_view model_id) {
    for (const auto& p : profiles) {
        if (p.model_id == model_id) return p;
    }
    throw ConfigError("no tokenizer profile with model_id '" + std::string(model_id) + "'");
}

}  // namespace ink::tokvocab
