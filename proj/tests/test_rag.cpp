#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stonediag/agents.hpp"
#include "stonediag/errors.hpp"
#include "stonediag/gateway.hpp"
#include "stonediag/rag.hpp"
#include "stonediag/text.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <cstring>

using namespace stonediag;

namespace {

EmbeddedChunk make_entry(const std::string& chunk_id, std::vector<double> vec,
                         const std::string& text = "chunk text") {
    DocumentChunk c;
    c.chunk_id = chunk_id;
    c.source_id = "src";
    c.text = text;
    c.approx_tokens = approx_token_count(text);
    return {std::move(c), std::move(vec)};
}

// Test-side oracle: full scan with long-hand cosine and a stable sort.
std::vector<std::pair<std::string, double>> brute_force_topk(const VectorStore& store,
                                                             const std::vector<double>& qv,
                                                             int k) {
    std::vector<std::pair<std::string, double>> scored;
    for (const EmbeddedChunk& e : store.entries()) {
        double dot_acc = 0.0;
        for (std::size_t d = 0; d < qv.size(); ++d) dot_acc += qv[d] * e.vector[d];
        scored.emplace_back(e.chunk.chunk_id, dot_acc);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
    return scored;
}

} // namespace

TEST_CASE("approx_token_count uses the 4/3 word approximation") {
    CHECK(approx_token_count("") == 0);
    CHECK(approx_token_count("one two three") == 4);      // ceil(3*4/3)
    CHECK(approx_token_count("a b c d e f") == 8);        // 6 words
}

TEST_CASE("under-size text yields one chunk equal to the whole text") {
    std::string text;
    for (int i = 0; i < 50; ++i) text += "word" + std::to_string(i) + " ";
    const auto chunks = chunk_document("doc", text, 512, 64);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].chunk_id == "doc#000000");
    CHECK(split_words(chunks[0].text).size() == 50);
    CHECK(chunks[0].approx_tokens <= 512);
}

TEST_CASE("empty text yields an empty chunk list") {
    CHECK(chunk_document("doc", "", 512, 64).empty());
    CHECK(chunk_document("doc", "   \n\t ", 512, 64).empty());
}

TEST_CASE("chunking preconditions") {
    CHECK_THROWS_AS(chunk_document("doc", "x", 64, 64), MisuseError);
    CHECK_THROWS_AS(chunk_document("doc", "x", 64, -1), MisuseError);
}

TEST_CASE("fuzzed chunking: overlap removal reconstructs the word sequence") {
    test_support::WordGen gen(11);
    for (int iter = 0; iter < 60; ++iter) {
        const int words = gen.next_int(0, 400);
        const std::string text = gen.words(words);
        const int target = gen.next_int(8, 120);
        const int overlap = gen.next_int(0, target - 1);
        const auto chunks = chunk_document("doc", text, target, overlap);

        const std::size_t target_words =
            std::max<std::size_t>(1, static_cast<std::size_t>(target) * 3 / 4);
        const std::size_t overlap_words =
            std::min(static_cast<std::size_t>(overlap) * 3 / 4, target_words - 1);
        std::vector<std::string> rebuilt;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            auto piece = split_words(chunks[i].text);
            const std::size_t skip = i == 0 ? 0 : overlap_words;
            REQUIRE(piece.size() >= skip);
            rebuilt.insert(rebuilt.end(), piece.begin() + static_cast<std::ptrdiff_t>(skip),
                           piece.end());
            CHECK(chunks[i].approx_tokens <= target);
            CHECK(chunks[i].approx_tokens > 0);
            // Consecutive chunks share exactly the overlap region.
            if (i > 0) {
                const auto prev = split_words(chunks[i - 1].text);
                REQUIRE(prev.size() >= overlap_words);
                std::vector<std::string> tail(prev.end() - static_cast<std::ptrdiff_t>(overlap_words),
                                              prev.end());
                std::vector<std::string> head(piece.begin(),
                                              piece.begin() + static_cast<std::ptrdiff_t>(overlap_words));
                CHECK(tail == head);
            }
        }
        CHECK(rebuilt == split_words(text));
    }
}

TEST_CASE("upsert: insert, idempotent replace, exhaustive lookup") {
    VectorStore store(2, {"m", "t"});
    store.upsert(make_entry("a#1", {1.0, 0.0}));
    CHECK(store.size() == 1);

    store.upsert(make_entry("a#1", {0.0, 1.0}));
    CHECK(store.size() == 1);
    CHECK(store.find("a#1")->vector == std::vector<double>{0.0, 1.0});

    test_support::WordGen gen(13);
    VectorStore big(4, {"m", "t"});
    const int n = 100;
    for (int i = 0; i < n; ++i) {
        auto vec = MockBackend::pseudo_embedding("entry" + std::to_string(i), 4);
        big.upsert(make_entry("c#" + std::to_string(i), vec));
    }
    CHECK(big.size() == static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        CHECK(big.find("c#" + std::to_string(i)) != nullptr);
}

TEST_CASE("upsert rejects dimension mismatches and non-unit vectors") {
    VectorStore store(2, {"m", "t"});
    CHECK_THROWS_AS(store.upsert(make_entry("a#1", {1.0, 0.0, 0.0})), VectorError);
    CHECK_THROWS_AS(store.upsert(make_entry("a#1", {0.9, 0.0})), VectorError);
}

TEST_CASE("query on a stored vector returns that chunk first with score 1") {
    VectorStore store(8, {"m", "t"});
    for (int i = 0; i < 10; ++i)
        store.upsert(make_entry("c#" + std::to_string(i),
                                MockBackend::pseudo_embedding("t" + std::to_string(i), 8)));
    const auto qv = MockBackend::pseudo_embedding("t4", 8);
    const auto hits = query(store, qv, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].entry.chunk.chunk_id == "c#4");
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("k larger than the store returns the whole store, sorted") {
    VectorStore store(4, {"m", "t"});
    for (int i = 0; i < 5; ++i)
        store.upsert(make_entry("c#" + std::to_string(i),
                                MockBackend::pseudo_embedding("x" + std::to_string(i), 4)));
    const auto qv = MockBackend::pseudo_embedding("q", 4);
    const auto hits = query(store, qv, 50);
    REQUIRE(hits.size() == 5);
    for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
}

TEST_CASE("query rejects bad arguments") {
    VectorStore store(4, {"m", "t"});
    store.upsert(make_entry("c#0", MockBackend::pseudo_embedding("x", 4)));
    const auto qv = MockBackend::pseudo_embedding("q", 4);
    CHECK_THROWS_AS(query(store, std::vector<double>{1.0, 0.0}, 1), VectorError);
    CHECK_THROWS_AS(query(store, std::vector<double>{0.7, 0.0, 0.0, 0.0}, 1), VectorError);
    CHECK_THROWS_AS(query(store, qv, 0), MisuseError);
}

TEST_CASE("equal scores break ties by ascending chunk_id, repeatably") {
    VectorStore store(2, {"m", "t"});
    // Same vector under shuffled ids: every score ties.
    const std::vector<double> v{1.0, 0.0};
    for (const char* id : {"c#7", "c#1", "c#9", "c#3"}) store.upsert(make_entry(id, v));
    const auto first = query(store, v, 4);
    REQUIRE(first.size() == 4);
    CHECK(first[0].entry.chunk.chunk_id == "c#1");
    CHECK(first[1].entry.chunk.chunk_id == "c#3");
    CHECK(first[2].entry.chunk.chunk_id == "c#7");
    CHECK(first[3].entry.chunk.chunk_id == "c#9");
    for (int repeat = 0; repeat < 5; ++repeat) {
        const auto again = query(store, v, 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(again[i].entry.chunk.chunk_id == first[i].entry.chunk.chunk_id);
            CHECK(again[i].score == first[i].score);
        }
    }
}

TEST_CASE("parallel and serial query agree with the brute-force oracle") {
    for (const std::size_t size : {10ul, 100ul, 1000ul}) {
        VectorStore store(16, {"m", "t"});
        for (std::size_t i = 0; i < size; ++i)
            store.upsert(make_entry("c#" + std::to_string(1000 + i),
                                    MockBackend::pseudo_embedding("e" + std::to_string(i), 16)));
        for (int k : {1, 5, 50}) {
            for (int q = 0; q < 20; ++q) {
                const auto qv =
                    MockBackend::pseudo_embedding("query " + std::to_string(q), 16);
                const auto expected = brute_force_topk(store, qv, k);
                const auto via_parallel = query(store, qv, k);
                const auto via_serial = query_serial(store, qv, k);
                REQUIRE(via_parallel.size() == expected.size());
                REQUIRE(via_serial.size() == expected.size());
                for (std::size_t i = 0; i < expected.size(); ++i) {
                    CHECK(via_parallel[i].entry.chunk.chunk_id == expected[i].first);
                    CHECK(via_parallel[i].score == expected[i].second);
                    CHECK(via_serial[i].entry.chunk.chunk_id == expected[i].first);
                    CHECK(via_serial[i].score == expected[i].second);
                }
            }
        }
    }
}

TEST_CASE("store persistence round-trips, bit-exact vectors") {
    VectorStore empty(3, {"model-x", "1970-01-01T00:00:00Z"});
    const std::string empty_bytes = save_store(empty);
    CHECK(store_equal(load_store(empty_bytes, "<t>"), empty));

    VectorStore store(6, {"model-x", "1970-01-01T00:00:00Z"});
    for (int i = 0; i < 3; ++i)
        store.upsert(make_entry("s#" + std::to_string(i),
                                MockBackend::pseudo_embedding("v" + std::to_string(i), 6),
                                "text " + std::to_string(i)));
    const std::string bytes = save_store(store);
    const VectorStore reloaded = load_store(bytes, "<t>");
    CHECK(store_equal(reloaded, store));
    // Deterministic serialization: a second save is byte-identical.
    CHECK(save_store(reloaded) == bytes);
}

TEST_CASE("fuzzed store round-trip equality") {
    test_support::WordGen gen(17);
    for (int iter = 0; iter < 25; ++iter) {
        const int dim = gen.next_int(1, 24);
        VectorStore store(dim, {gen.word(), "1970-01-01T00:00:00Z"});
        const int n = gen.next_int(0, 30);
        for (int i = 0; i < n; ++i)
            store.upsert(make_entry("f#" + std::to_string(i),
                                    MockBackend::pseudo_embedding(gen.words(3), dim),
                                    gen.words(gen.next_int(1, 10))));
        const std::string bytes = save_store(store);
        CHECK(store_equal(load_store(bytes, "<fuzz>"), store));
    }
}

TEST_CASE("corrupt store files raise integrity errors citing the offset") {
    VectorStore store(2, {"m", "t"});
    store.upsert(make_entry("s#0", {1.0, 0.0}));
    std::string bytes = save_store(store);

    SUBCASE("flipped payload byte breaks the checksum") {
        const std::size_t pos = bytes.find("s#0");
        bytes[pos] = 'z';
        try {
            load_store(bytes, "store.bin");
            FAIL("expected IntegrityError");
        } catch (const IntegrityError& e) {
            const std::string what = e.what();
            CHECK(what.find("checksum mismatch") != std::string::npos);
            CHECK(what.find("offset") != std::string::npos);
        }
    }
    SUBCASE("truncated file") {
        CHECK_THROWS_AS(load_store(bytes.substr(0, 10), "store.bin"), IntegrityError);
    }
    SUBCASE("dimension header mismatch") {
        // Entry vector disagrees with the announced dimension; refresh the
        // checksum so the dimension check itself is what fires.
        std::string tampered = bytes;
        const std::size_t pos = tampered.find("\"dimension\":2");
        tampered.replace(pos, 13, "\"dimension\":3");
        const std::size_t trailer = tampered.rfind("{\"checksum");
        std::string body = tampered.substr(0, trailer);
        tampered = body + "{\"checksum_fnv1a64\":\"" + to_hex16(fnv1a64(body)) + "\"}\n";
        CHECK_THROWS_AS(load_store(tampered, "store.bin"), VectorError);
    }
}

TEST_CASE("build_query_text is deterministic and embeds the identity") {
    AgentIdentity lith;
    lith.id = "lithologist";
    lith.role_name = "Lithologist";
    lith.competence_areas = {"lithological identification", "stone texture"};
    AgentIdentity path = lith;
    path.id = "pathologist";
    path.role_name = "Pathologist";
    path.competence_areas = {"decay morphology"};

    const std::string q1 = build_query_text(lith, "prompt text");
    CHECK(q1 == build_query_text(lith, "prompt text"));
    CHECK(q1 != build_query_text(path, "prompt text"));
    for (const std::string& area : lith.competence_areas)
        CHECK(q1.find(area) != std::string::npos);
    CHECK(q1.find("prompt text") != std::string::npos);
}
