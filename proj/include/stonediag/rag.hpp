#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stonediag {

struct AgentIdentity; // agents.hpp

struct DocumentChunk {
    std::string chunk_id;  // "<source_id>#<6-digit ordinal>"
    std::string source_id;
    std::string text;      // non-empty
    int approx_tokens = 0; // > 0

    bool operator==(const DocumentChunk&) const = default;
};

struct EmbeddedChunk {
    DocumentChunk chunk;
    std::vector<double> vector; // unit L2 norm, store dimension
};

struct StoreMetadata {
    std::string embedding_model_id;
    std::string created_at; // ISO-8601 UTC; zeroed epoch under mock backends
};

// Flat in-memory vector store. Entries keep insertion order; retrieval is an
// exact full scan, which keeps results oracle-checkable. Read-only during a
// diagnostic run, so concurrent queries need no locking.
class VectorStore {
public:
    VectorStore(int dimension, StoreMetadata metadata);

    int dimension() const { return dimension_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<EmbeddedChunk>& entries() const { return entries_; }
    const StoreMetadata& metadata() const { return metadata_; }

    // Replaces the entry with the same chunk_id in place, else appends.
    void upsert(EmbeddedChunk entry);

    const EmbeddedChunk* find(const std::string& chunk_id) const;

private:
    int dimension_;
    StoreMetadata metadata_;
    std::vector<EmbeddedChunk> entries_;
};

struct ScoredChunk {
    EmbeddedChunk entry;
    double score; // exact dot product; cosine for unit vectors
};

// Words-per-token approximation used everywhere tokens are estimated:
// ceil(words * 4 / 3), counting whitespace-delimited words.
int approx_token_count(std::string_view text);

// Word-boundary chunking with exact overlap between consecutive chunks.
// Empty text yields an empty list. Requires target_tokens > overlap_tokens >= 0.
std::vector<DocumentChunk> chunk_document(const std::string& source_id, std::string_view text,
                                          int target_tokens, int overlap_tokens);

// Top-k by score descending, ties broken by ascending chunk_id. The scan is
// OpenMP-parallel across entries; per-entry dot products are evaluated in a
// fixed order, so scores are bit-identical to query_serial.
std::vector<ScoredChunk> query(const VectorStore& store, std::span<const double> query_vector,
                               int k);

// Serial reference implementation, kept for tests and the benchmark.
std::vector<ScoredChunk> query_serial(const VectorStore& store,
                                      std::span<const double> query_vector, int k);

// Store file: header line {format_version, dimension, embedding_model_id,
// created_at, entry_count}, one JSON line per entry with the vector encoded
// as base64 little-endian IEEE-754 doubles, then a {"checksum_fnv1a64"}
// trailer over every preceding byte. load(save(s)) == s with vectors
// bit-exact.
std::string save_store(const VectorStore& store);
void save_store_file(const VectorStore& store, const std::string& path);
VectorStore load_store(std::string_view bytes, const std::string& origin);
VectorStore load_store_file(const std::string& path);

bool store_equal(const VectorStore& a, const VectorStore& b); // vectors compared bit-exact

// Deterministic retrieval query text for an agent and case.
std::string build_query_text(const AgentIdentity& identity, const std::string& case_prompt);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
void require_unit_norm(std::span<const double> v, const char* what);

} // namespace stonediag
