#include <gtest/gtest.h>

#include "support.hpp"

using namespace ink;
using inktest::TempDir;
using inktest::write_file;

TEST(Corpus, EmptyDirectoryGivesNoUnits) {
    TempDir d("empty");
    auto m = corpus::ingest_corpus({d.path});
    EXPECT_TRUE(m.units.empty());
    EXPECT_TRUE(m.skipped.empty());
    EXPECT_EQ(m.roots.size(), 1u);
}

TEST(Corpus, GlobFiltersByExtension) {
    TempDir d("glob");
    write_file(d / "a.py", "import os\n");
    write_file(d / "b.txt", "import os\n");
    auto m = corpus::ingest_corpus({d.path}, "*.py");
    ASSERT_EQ(m.units.size(), 1u);
    EXPECT_EQ(m.units[0].rel_path, "a.py");
    EXPECT_EQ(m.units[0].byte_len, 10u);
    EXPECT_EQ(m.units[0].content_hash, sha256_hex("import os\n"));
}

TEST(Corpus, MiniCorpusHasTwentyUnitsInOrder) {
    auto m = corpus::ingest_corpus(inktest::corpus_roots());
    ASSERT_EQ(m.units.size(), 20u);
    EXPECT_TRUE(m.skipped.empty());
    for (std::size_t i = 1; i < m.units.size(); ++i) {
        const auto& a = m.units[i - 1];
        const auto& b = m.units[i];
        EXPECT_LT(std::tie(a.repo_id, a.rel_path), std::tie(b.repo_id, b.rel_path));
    }
}

TEST(Corpus, NonexistentRootIsConfigError) {
    EXPECT_THROW(corpus::ingest_corpus({"/nonexistent/ink/root"}), ConfigError);
}

TEST(Corpus, UndecodableFileIsRecordedAsSkip) {
    TempDir d("utf8");
    write_file(d / "good.py", "x = 1\n");
    write_file(d / "bad.py", "s = '\xFF\xFE'\n");
    auto m = corpus::ingest_corpus({d.path});
    ASSERT_EQ(m.units.size(), 1u);
    ASSERT_EQ(m.skipped.size(), 1u);
    EXPECT_EQ(m.skipped[0].rel_path, "bad.py");
    EXPECT_FALSE(m.skipped[0].reason.empty());
}

TEST(Corpus, UnitsPlusSkipsEqualGlobMatches) {
    // property: random trees of matching / non-matching / undecodable files
    quizforge::SplitMix64 rng(11);
    for (int round = 0; round < 20; ++round) {
        TempDir d("prop");
        std::size_t matches = 0;
        const int files = static_cast<int>(rng.below(15));
        for (int i = 0; i < files; ++i) {
            const bool py = rng.below(3) != 0;
            const bool bad = rng.below(4) == 0;
            std::string name = "d" + std::to_string(rng.below(3)) + "/f" + std::to_string(i) + (py ? ".py" : ".md");
            write_file(d / name, bad ? std::string("\x80\x81") : std::string("pass\n"));
            matches += py;
        }
        auto m = corpus::ingest_corpus({d.path}, "*.py", 1 + static_cast<unsigned>(rng.below(4)));
        EXPECT_EQ(m.units.size() + m.skipped.size(), matches);
    }
}

TEST(Corpus, ManifestIsDeterministicAndRoundTrips) {
    TempDir d("manifest");
    auto m1 = corpus::ingest_corpus(inktest::corpus_roots(), corpus::kDefaultGlob, 1);
    auto m2 = corpus::ingest_corpus(inktest::corpus_roots(), corpus::kDefaultGlob, 8);
    corpus::write_manifest(m1, d / "a.jsonl");
    corpus::write_manifest(m2, d / "b.jsonl");
    EXPECT_EQ(inktest::slurp(d / "a.jsonl"), inktest::slurp(d / "b.jsonl"));

    auto back = corpus::read_manifest(d / "a.jsonl");
    ASSERT_EQ(back.units.size(), m1.units.size());
    for (std::size_t i = 0; i < back.units.size(); ++i) {
        EXPECT_EQ(back.units[i].content_hash, m1.units[i].content_hash);
        EXPECT_TRUE(back.units[i].text.empty());
        corpus::load_text(back, back.units[i]);
        EXPECT_EQ(back.units[i].text, m1.units[i].text);
    }
}

TEST(Corpus, LoadTextDetectsChangedFile) {
    TempDir d("mismatch");
    write_file(d / "src" / "a.py", "import os\n");
    auto m = corpus::ingest_corpus({d / "src"});
    corpus::write_manifest(m, d / "m.jsonl");
    write_file(d / "src" / "a.py", "import sys\n");
    auto back = corpus::read_manifest(d / "m.jsonl");
    try {
        corpus::load_text(back, back.units.at(0));
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("ink extract"), std::string::npos);
    }
}
