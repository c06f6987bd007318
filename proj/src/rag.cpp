#include "stonediag/rag.hpp"

#include "stonediag/agents.hpp"
#include "stonediag/errors.hpp"
#include "stonediag/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace stonediag {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr double kNormTolerance = 1e-6;
constexpr int kStoreFormatVersion = 1;
} // namespace

VectorStore::VectorStore(int dimension, StoreMetadata metadata)
    : dimension_(dimension), metadata_(std::move(metadata)) {
    if (dimension_ <= 0) throw VectorError("store: dimension must be positive");
}

void VectorStore::upsert(EmbeddedChunk entry) {
    if (static_cast<int>(entry.vector.size()) != dimension_)
        throw VectorError("store: entry dimension " + std::to_string(entry.vector.size()) +
                          " does not match store dimension " + std::to_string(dimension_));
    require_unit_norm(entry.vector, "store entry");
    if (entry.chunk.text.empty()) throw InputError("store: chunk text must be non-empty");
    if (entry.chunk.approx_tokens <= 0) throw InputError("store: approx_tokens must be positive");
    for (EmbeddedChunk& existing : entries_) {
        if (existing.chunk.chunk_id == entry.chunk.chunk_id) {
            existing = std::move(entry);
            return;
        }
    }
    entries_.push_back(std::move(entry));
}

const EmbeddedChunk* VectorStore::find(const std::string& chunk_id) const {
    for (const EmbeddedChunk& e : entries_)
        if (e.chunk.chunk_id == chunk_id) return &e;
    return nullptr;
}

int approx_token_count(std::string_view text) {
    const std::size_t words = split_words(text).size();
    return static_cast<int>((words * 4 + 2) / 3);
}

std::vector<DocumentChunk> chunk_document(const std::string& source_id, std::string_view text,
                                          int target_tokens, int overlap_tokens) {
    if (overlap_tokens < 0 || target_tokens <= overlap_tokens)
        throw MisuseError("chunking requires target_tokens > overlap_tokens >= 0");

    const std::vector<std::string> words = split_words(text);
    if (words.empty()) return {};

    // Token budget -> word budget under the 4/3 approximation. Flooring can
    // collapse the two budgets onto each other, so the effective overlap is
    // clamped below the chunk size to keep the scan advancing.
    const std::size_t target_words =
        std::max<std::size_t>(1, static_cast<std::size_t>(target_tokens) * 3 / 4);
    const std::size_t overlap_words =
        std::min(static_cast<std::size_t>(overlap_tokens) * 3 / 4, target_words - 1);
    const std::size_t step = target_words - overlap_words;

    std::vector<DocumentChunk> chunks;
    std::size_t start = 0;
    int ordinal = 0;
    while (start < words.size()) {
        const std::size_t end = std::min(start + target_words, words.size());
        std::vector<std::string> piece(words.begin() + static_cast<std::ptrdiff_t>(start),
                                       words.begin() + static_cast<std::ptrdiff_t>(end));
        DocumentChunk chunk;
        char ord[16];
        std::snprintf(ord, sizeof(ord), "%06d", ordinal++);
        chunk.chunk_id = source_id + "#" + ord;
        chunk.source_id = source_id;
        chunk.text = join(piece, " ");
        chunk.approx_tokens = approx_token_count(chunk.text);
        chunks.push_back(std::move(chunk));
        if (end == words.size()) break;
        start += step;
    }
    return chunks;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

void require_unit_norm(std::span<const double> v, const char* what) {
    const double norm = l2_norm(v);
    if (std::abs(norm - 1.0) > kNormTolerance)
        throw VectorError(std::string(what) + ": vector norm " + std::to_string(norm) +
                          " is not unit within 1e-6");
}

namespace {

std::vector<ScoredChunk> top_k_from_scores(const VectorStore& store,
                                           const std::vector<double>& scores, int k) {
    std::vector<std::size_t> order(store.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return store.entries()[a].chunk.chunk_id < store.entries()[b].chunk.chunk_id;
    });
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::vector<ScoredChunk> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({store.entries()[order[i]], scores[order[i]]});
    return out;
}

void check_query_args(const VectorStore& store, std::span<const double> qv, int k) {
    if (k < 1) throw MisuseError("query: k must be >= 1");
    if (static_cast<int>(qv.size()) != store.dimension())
        throw VectorError("query: vector dimension " + std::to_string(qv.size()) +
                          " does not match store dimension " +
                          std::to_string(store.dimension()));
    require_unit_norm(qv, "query");
}

} // namespace

std::vector<ScoredChunk> query(const VectorStore& store, std::span<const double> query_vector,
                               int k) {
    check_query_args(store, query_vector, k);
    const auto n = static_cast<std::ptrdiff_t>(store.size());
    std::vector<double> scores(store.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        scores[static_cast<std::size_t>(i)] =
            dot(query_vector, store.entries()[static_cast<std::size_t>(i)].vector);
    return top_k_from_scores(store, scores, k);
}

std::vector<ScoredChunk> query_serial(const VectorStore& store,
                                      std::span<const double> query_vector, int k) {
    check_query_args(store, query_vector, k);
    std::vector<double> scores(store.size());
    for (std::size_t i = 0; i < store.size(); ++i)
        scores[i] = dot(query_vector, store.entries()[i].vector);
    return top_k_from_scores(store, scores, k);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::string encode_vector(const std::vector<double>& v) {
    std::string bytes;
    bytes.reserve(v.size() * 8);
    for (double d : v) {
        const auto u = std::bit_cast<std::uint64_t>(d);
        for (int b = 0; b < 8; ++b) // little-endian
            bytes += static_cast<char>((u >> (8 * b)) & 0xFF);
    }
    return base64_encode(bytes);
}

std::vector<double> decode_vector(const std::string& b64, const std::string& where) {
    const std::vector<unsigned char> bytes = base64_decode(b64);
    if (bytes.size() % 8 != 0)
        throw IntegrityError(where + ": vector payload is not a multiple of 8 bytes");
    std::vector<double> v(bytes.size() / 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t u = 0;
        for (int b = 7; b >= 0; --b) u = (u << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
        v[i] = std::bit_cast<double>(u);
    }
    return v;
}

} // namespace

std::string save_store(const VectorStore& store) {
    std::string out;
    ordered_json header;
    header["format_version"] = kStoreFormatVersion;
    header["dimension"] = store.dimension();
    header["embedding_model_id"] = store.metadata().embedding_model_id;
    header["created_at"] = store.metadata().created_at;
    header["entry_count"] = store.size();
    out += header.dump();
    out += '\n';
    for (const EmbeddedChunk& e : store.entries()) {
        ordered_json j;
        j["chunk_id"] = e.chunk.chunk_id;
        j["source_id"] = e.chunk.source_id;
        j["text"] = e.chunk.text;
        j["approx_tokens"] = e.chunk.approx_tokens;
        j["vector_b64"] = encode_vector(e.vector);
        out += j.dump();
        out += '\n';
    }
    ordered_json trailer;
    trailer["checksum_fnv1a64"] = to_hex16(fnv1a64(out));
    out += trailer.dump();
    out += '\n';
    return out;
}

void save_store_file(const VectorStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("store: cannot write " + path);
    out << save_store(store);
}

VectorStore load_store(std::string_view bytes, const std::string& origin) {
    // Split into lines, tracking byte offsets for error reporting.
    struct Line {
        std::string_view text;
        std::size_t offset;
    };
    std::vector<Line> lines;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) nl = bytes.size();
        if (nl > pos) lines.push_back({bytes.substr(pos, nl - pos), pos});
        pos = nl + 1;
    }
    if (lines.size() < 2)
        throw IntegrityError(origin + ": truncated store file (header or trailer missing)");

    const Line trailer_line = lines.back();
    ordered_json trailer;
    try {
        trailer = ordered_json::parse(trailer_line.text);
    } catch (const std::exception& e) {
        throw IntegrityError(origin + ": offset " + std::to_string(trailer_line.offset) +
                             ": unreadable trailer: " + e.what());
    }
    if (!trailer.contains("checksum_fnv1a64"))
        throw IntegrityError(origin + ": offset " + std::to_string(trailer_line.offset) +
                             ": trailer lacks checksum_fnv1a64");
    const std::string expected = trailer.at("checksum_fnv1a64").get<std::string>();
    const std::string actual =
        to_hex16(fnv1a64(std::string_view(bytes.data(), trailer_line.offset)));
    if (expected != actual)
        throw IntegrityError(origin + ": offset " + std::to_string(trailer_line.offset) +
                             ": checksum mismatch (file says " + expected + ", computed " +
                             actual + ")");

    auto parse_line = [&](const Line& line) {
        try {
            return ordered_json::parse(line.text);
        } catch (const std::exception& e) {
            throw IntegrityError(origin + ": offset " + std::to_string(line.offset) + ": " +
                                 e.what());
        }
    };

    const ordered_json header = parse_line(lines.front());
    int version = 0;
    int dimension = 0;
    std::size_t entry_count = 0;
    StoreMetadata meta;
    try {
        version = header.at("format_version").get<int>();
        dimension = header.at("dimension").get<int>();
        meta.embedding_model_id = header.at("embedding_model_id").get<std::string>();
        meta.created_at = header.at("created_at").get<std::string>();
        entry_count = header.at("entry_count").get<std::size_t>();
    } catch (const std::exception& e) {
        throw IntegrityError(origin + ": offset 0: bad header: " + e.what());
    }
    if (version != kStoreFormatVersion)
        throw IntegrityError(origin + ": unsupported format_version " + std::to_string(version));

    VectorStore store(dimension, meta);
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
        const ordered_json j = parse_line(lines[i]);
        EmbeddedChunk e;
        const std::string where = origin + ": offset " + std::to_string(lines[i].offset);
        try {
            e.chunk.chunk_id = j.at("chunk_id").get<std::string>();
            e.chunk.source_id = j.at("source_id").get<std::string>();
            e.chunk.text = j.at("text").get<std::string>();
            e.chunk.approx_tokens = j.at("approx_tokens").get<int>();
            e.vector = decode_vector(j.at("vector_b64").get<std::string>(), where);
        } catch (const InputError&) {
            throw;
        } catch (const std::exception& ex) {
            throw IntegrityError(where + ": " + ex.what());
        }
        if (static_cast<int>(e.vector.size()) != dimension)
            throw VectorError(where + ": entry dimension " + std::to_string(e.vector.size()) +
                              " does not match header dimension " + std::to_string(dimension));
        if (store.find(e.chunk.chunk_id))
            throw IntegrityError(where + ": duplicate chunk_id " + e.chunk.chunk_id);
        store.upsert(std::move(e));
    }
    if (store.size() != entry_count)
        throw IntegrityError(origin + ": header announces " + std::to_string(entry_count) +
                             " entries, file carries " + std::to_string(store.size()));
    return store;
}

VectorStore load_store_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("store: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    return load_store(bytes, path);
}

bool store_equal(const VectorStore& a, const VectorStore& b) {
    if (a.dimension() != b.dimension() || a.size() != b.size()) return false;
    if (a.metadata().embedding_model_id != b.metadata().embedding_model_id ||
        a.metadata().created_at != b.metadata().created_at)
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const EmbeddedChunk& x = a.entries()[i];
        const EmbeddedChunk& y = b.entries()[i];
        if (!(x.chunk == y.chunk)) return false;
        if (x.vector.size() != y.vector.size()) return false;
        if (std::memcmp(x.vector.data(), y.vector.data(), x.vector.size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

std::string build_query_text(const AgentIdentity& identity, const std::string& case_prompt) {
    std::string out = identity.role_name;
    out += " | ";
    out += join(identity.competence_areas, ", ");
    out += " | ";
    out += case_prompt;
    return out;
}

} // namespace stonediag
