// Benchmark: OpenMP-parallel top-k retrieval scan against the serial
// reference, on synthetic stores of mock-embedded chunks. Verifies that both
// paths return identical results while timing them.
//
// Usage: query_bench [dimension] [queries-per-size]

#include "stonediag/gateway.hpp"
#include "stonediag/rag.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

using namespace stonediag;

namespace {

VectorStore build_store(std::size_t entries, int dimension) {
    VectorStore store(dimension, {"bench-embed", "1970-01-01T00:00:00Z"});
    for (std::size_t i = 0; i < entries; ++i) {
        DocumentChunk chunk;
        char id[32];
        std::snprintf(id, sizeof(id), "bench#%06zu", i);
        chunk.chunk_id = id;
        chunk.source_id = "bench";
        chunk.text = "synthetic chunk " + std::to_string(i);
        chunk.approx_tokens = 4;
        store.upsert({chunk, MockBackend::pseudo_embedding(chunk.text, dimension)});
    }
    return store;
}

double time_queries(const VectorStore& store, int k, int repeats, bool parallel) {
    const auto t0 = std::chrono::steady_clock::now();
    double checksum = 0.0;
    for (int q = 0; q < repeats; ++q) {
        const auto qv =
            MockBackend::pseudo_embedding("query " + std::to_string(q), store.dimension());
        const auto hits = parallel ? query(store, qv, k) : query_serial(store, qv, k);
        checksum += hits.front().score;
    }
    const auto t1 = std::chrono::steady_clock::now();
    (void)checksum;
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

} // namespace

int main(int argc, char** argv) {
    const int dimension = argc > 1 ? std::atoi(argv[1]) : 256;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 20;

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not compiled in, both columns run serial code\n");
#endif
    std::printf("dimension %d, %d queries per point\n\n", dimension, repeats);
    std::printf("%10s %6s %14s %14s %8s\n", "entries", "k", "serial ms", "parallel ms",
                "speedup");

    for (std::size_t entries : {1000ul, 10000ul, 50000ul}) {
        const VectorStore store = build_store(entries, dimension);
        for (int k : {1, 5, 50}) {
            // Cross-check before timing: identical order and scores.
            const auto qv = MockBackend::pseudo_embedding("crosscheck", dimension);
            const auto a = query(store, qv, k);
            const auto b = query_serial(store, qv, k);
            if (a.size() != b.size()) {
                std::fprintf(stderr, "result size mismatch\n");
                return 1;
            }
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i].entry.chunk.chunk_id != b[i].entry.chunk.chunk_id ||
                    a[i].score != b[i].score) {
                    std::fprintf(stderr, "result mismatch at rank %zu\n", i);
                    return 1;
                }
            }
            const double serial_ms = time_queries(store, k, repeats, false);
            const double parallel_ms = time_queries(store, k, repeats, true);
            std::printf("%10zu %6d %14.3f %14.3f %7.2fx\n", entries, k, serial_ms, parallel_ms,
                        serial_ms / parallel_ms);
        }
    }
    return 0;
}
