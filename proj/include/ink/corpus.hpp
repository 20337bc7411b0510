#pragma once

// Corpus ingestion: walks repository roots, hashes every matching file and
// produces a manifest ordered by (repo_id, rel_path).
//
// Each root directory is one repository; its repo_id is the directory name
// (suffixed "-2", "-3", ... when two roots share a name). Files that are not
// valid UTF-8 or cannot be read appear as skip records, so
// units + skipped always equals the number of glob matches.

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ink/error.hpp"
#include "ink/hash.hpp"
#include "ink/jsonl.hpp"
#include "ink/text.hpp"
#include "ink/version.hpp"

namespace ink::corpus {

namespace fs = std::filesystem;

inline constexpr const char* kDefaultGlob = "*.py";
inline constexpr const char* kManifestFormat = "ink-manifest/1";

struct SourceUnit {
    std::string repo_id;
    std::string rel_path;
    std::string content_hash;
    std::size_t byte_len = 0;
    std::string text;  // empty when loaded from a manifest file until load_text()
};

struct SkipRecord {
    std::string repo_id;
    std::string rel_path;
    std::size_t byte_len = 0;
    std::string reason;
};

struct RepoRoot {
    std::string repo_id;
    std::string path;
};

struct CorpusManifest {
    std::vector<RepoRoot> roots;
    std::string include_glob = kDefaultGlob;
    std::vector<SourceUnit> units;
    std::vector<SkipRecord> skipped;
    std::string created_at;
    std::string tool_version = kToolVersion;

    const RepoRoot& root_of(std::string_view repo_id) const {
        for (const auto& r : roots) {
            if (r.repo_id == repo_id) return r;
        }
        throw DataError("manifest has no root for repo '" + std::string(repo_id) + "'");
    }
};

inline std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// A pattern without '/' is matched against the file name; otherwise against
// the repository-relative path.
inline bool glob_matches(std::string_view pattern, const std::string& rel_path) {
    const std::string pat(pattern);
    if (pat.find('/') == std::string::npos) {
        auto name = fs::path(rel_path).filename().string();
        return ::fnmatch(pat.c_str(), name.c_str(), 0) == 0;
    }
    return ::fnmatch(pat.c_str(), rel_path.c_str(), 0) == 0;
}

namespace detail {

struct Candidate {
    std::string repo_id;
    std::string rel_path;
    fs::path abs_path;
};

inline std::vector<RepoRoot> assign_repo_ids(const std::vector<fs::path>& roots) {
    std::vector<RepoRoot> out;
    std::map<std::string, int> seen;
    for (const auto& root : roots) {
        std::error_code ec;
        if (!fs::is_directory(root, ec)) {
            throw ConfigError("corpus root does not exist or is not a directory: " + root.string());
        }
        auto abs = fs::weakly_canonical(fs::absolute(root));
        std::string base = abs.filename().string();
        if (base.empty()) base = "root";
        int n = ++seen[base];
        out.push_back({n == 1 ? base : base + "-" + std::to_string(n), abs.string()});
    }
    return out;
}

}  // namespace detail

inline CorpusManifest ingest_corpus(const std::vector<fs::path>& roots, std::string_view include_glob = kDefaultGlob,
                                    unsigned jobs = 1) {
    CorpusManifest manifest;
    manifest.include_glob = std::string(include_glob);
    manifest.created_at = utc_timestamp();
    manifest.roots = detail::assign_repo_ids(roots);

    std::vector<detail::Candidate> candidates;
    for (const auto& root : manifest.roots) {
        const fs::path base(root.path);
        std::error_code ec;
        for (fs::recursive_directory_iterator it(base, fs::directory_options::skip_permission_denied, ec), end;
             it != end; it.increment(ec)) {
            if (ec) break;
            if (!it->is_regular_file(ec)) continue;
            auto rel = fs::relative(it->path(), base, ec).generic_string();
            if (ec) continue;
            if (glob_matches(include_glob, rel)) candidates.push_back({root.repo_id, rel, it->path()});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return std::tie(a.repo_id, a.rel_path) < std::tie(b.repo_id, b.rel_path);
    });

    struct Slot {
        std::optional<SourceUnit> unit;
        std::optional<SkipRecord> skip;
    };
    std::vector<Slot> slots(candidates.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
            const auto& c = candidates[i];
            std::string bytes;
            try {
                bytes = read_file_bytes(c.abs_path);
            } catch (const DataError& e) {
                slots[i].skip = SkipRecord{c.repo_id, c.rel_path, 0, "unreadable"};
                continue;
            }
            if (auto bad = text::first_invalid_utf8(bytes)) {
                slots[i].skip = SkipRecord{c.repo_id, c.rel_path, bytes.size(),
                                           "invalid UTF-8 at byte " + std::to_string(*bad)};
                continue;
            }
            slots[i].unit = SourceUnit{c.repo_id, c.rel_path, sha256_hex(bytes), bytes.size(), std::move(bytes)};
        }
    };
    unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(candidates.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (auto& s : slots) {
        if (s.unit) manifest.units.push_back(std::move(*s.unit));
        if (s.skip) manifest.skipped.push_back(std::move(*s.skip));
    }
    return manifest;
}

// Header line plus one line per unit or skip record, merged in
// (repo_id, rel_path) order. created_at is left to the sidecar so the file
// is byte-identical across runs.
inline void write_manifest(const CorpusManifest& m, const fs::path& path) {
    JsonlWriter out(path);
    json roots = json::array();
    for (const auto& r : m.roots) roots.push_back({{"repo_id", r.repo_id}, {"path", r.path}});
    out.write({{"format", kManifestFormat}, {"tool_version", m.tool_version}, {"glob", m.include_glob}, {"roots", roots}});

    std::vector<json> rows;
    for (const auto& u : m.units) {
        rows.push_back({{"repo_id", u.repo_id}, {"rel_path", u.rel_path}, {"content_hash", u.content_hash},
                        {"byte_len", u.byte_len}});
    }
    for (const auto& s : m.skipped) {
        rows.push_back({{"repo_id", s.repo_id}, {"rel_path", s.rel_path}, {"byte_len", s.byte_len}, {"skipped", s.reason}});
    }
    std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
        return std::tie(a["repo_id"].get_ref<const std::string&>(), a["rel_path"].get_ref<const std::string&>()) <
               std::tie(b["repo_id"].get_ref<const std::string&>(), b["rel_path"].get_ref<const std::string&>());
    });
    for (const auto& r : rows) out.write(r);
}

inline CorpusManifest read_manifest(const fs::path& path) {
    auto rows = read_jsonl(path);
    if (rows.empty() || rows[0].value("format", "") != kManifestFormat) {
        throw DataError(path.string() + ": not a corpus manifest (missing header line)");
    }
    CorpusManifest m;
    const auto& header = rows[0];
    m.tool_version = header.value("tool_version", "");
    m.include_glob = header.value("glob", kDefaultGlob);
    for (const auto& r : header.at("roots")) m.roots.push_back({r.at("repo_id"), r.at("path")});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.contains("skipped")) {
            m.skipped.push_back({r.at("repo_id"), r.at("rel_path"), r.value("byte_len", std::size_t{0}), r.at("skipped")});
        } else {
            m.units.push_back({r.at("repo_id"), r.at("rel_path"), r.at("content_hash"), r.at("byte_len"), {}});
        }
    }
    return m;
}

// Re-reads a unit's file and checks it still matches the recorded hash.
inline void load_text(const CorpusManifest& m, SourceUnit& unit) {
    auto file = fs::path(m.root_of(unit.repo_id).path) / unit.rel_path;
    auto bytes = read_file_bytes(file);
    if (sha256_hex(bytes) != unit.content_hash) {
        throw DataError(file.string() + " changed since extraction (content hash mismatch); rerun `ink extract`");
    }
    unit.text = std::move(bytes);
}

}  // namespace ink::corpus
