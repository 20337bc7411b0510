#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>

#include "ink/hash.hpp"
#include "ink/parallel.hpp"
#include "ink/text.hpp"

using namespace ink;

TEST(Text, Utf8Validation) {
    EXPECT_FALSE(text::first_invalid_utf8("plain ascii"));
    EXPECT_FALSE(text::first_invalid_utf8("caf\xC3\xA9 \xE2\x82\xAC \xF0\x9F\x98\x80"));
    EXPECT_EQ(text::first_invalid_utf8("ab\xFF"), 2u);
    EXPECT_EQ(text::first_invalid_utf8("\xC0\xAF"), 0u);          // overlong '/'
    EXPECT_EQ(text::first_invalid_utf8("x\xED\xA0\x80"), 1u);     // surrogate
    EXPECT_EQ(text::first_invalid_utf8("\xE2\x82"), 0u);          // truncated
}

TEST(Text, CodepointsAndSplit) {
    EXPECT_EQ(text::codepoint_count("caf\xC3\xA9"), 4u);
    EXPECT_EQ(text::codepoints("a\xC3\xA9").size(), 2u);
    EXPECT_EQ(text::split("a.b..c", '.'), (std::vector<std::string>{"a", "b", "", "c"}));
    EXPECT_EQ(text::join({"a", "b", "c"}, "."), "a.b.c");
    EXPECT_EQ(text::join({"a", "b", "c"}, ".", 1), "b.c");
    EXPECT_EQ(text::count_occurrences("[MASK] x [MASK]", "[MASK]"), 2u);
    EXPECT_TRUE(text::is_dotted_name("numpy.linalg.qr"));
    EXPECT_FALSE(text::is_dotted_name("numpy..qr"));
    EXPECT_FALSE(text::is_identifier("1abc"));
}

TEST(Hash, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Hash, StableIdSeparatesFields) {
    EXPECT_NE(stable_id(std::string("ab"), std::string("c")), stable_id(std::string("a"), std::string("bc")));
    EXPECT_EQ(stable_id(std::string("x")).size(), 16u);
    EXPECT_EQ(stable_id(std::string("x")), stable_id(std::string("x")));
}

TEST(Parallel, VisitsEveryIndexOnce) {
    for (unsigned jobs : {1u, 2u, 7u}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Parallel, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t i) {
                                  if (i == 37) throw DataError("boom");
                              }),
                 DataError);
}

TEST(Parallel, JobsResolution) {
    ::setenv("INK_JOBS", "3", 1);
    EXPECT_EQ(resolve_jobs(0), 3u);
    EXPECT_EQ(resolve_jobs(5), 5u);
    ::setenv("INK_JOBS", "many", 1);
    EXPECT_THROW(resolve_jobs(0), ConfigError);
    ::unsetenv("INK_JOBS");
    EXPECT_GE(resolve_jobs(0), 1u);
}
