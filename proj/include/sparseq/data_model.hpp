#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparseq/errors.hpp"
#include "sparseq/queries.hpp"

namespace sparseq {

// A histogram over an abstract universe. Universe elements are identified
// by their ids (non-empty byte strings); two elements are equal iff their
// ids are byte-equal. No zero-count entries are stored.
struct Database {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;  // n, the number of records

  bool empty() const { return counts.empty(); }
};

// Weights sum to 1 (within 1e-9).
struct NormalizedDatabase {
  std::map<std::string, double> weights;
};

struct RecordInput {
  std::string id;
  std::uint64_t count = 0;
};

// Aggregates records into a Database; duplicate ids are summed.
// Empty input -> EmptyDatabase; zero counts or empty ids -> ParseError.
Database make_database(const std::vector<RecordInput>& records);

struct LoadedDatabase {
  Database db;
  // Declared universe width from an optional {"universe_bits": L} header
  // record (projection mode only).
  std::optional<std::uint32_t> universe_bits;
};

// JSONL, one {"id": string, "count": positive integer} object per line.
LoadedDatabase load_database_jsonl(std::istream& in);
LoadedDatabase load_database_file(const std::string& path);

NormalizedDatabase normalize(const Database& db);

// Exact (non-private) query value: (1/n) * sum over the query support of
// weight(x) * count(x). Elements outside the database contribute 0.
double evaluate_exact(const SparseQuery& q, const Database& db);

// Projection-mode indexing. Ids must be '0'/'1' strings of length at most
// universe_bits; the index is the big-endian value of the bits plus 1, so
// it lies in [1, 2^universe_bits].
std::uint64_t element_index(std::string_view id, std::uint32_t universe_bits);

// Inverse of element_index with fixed-width output: the universe_bits-long
// bit string whose big-endian value is index - 1.
std::string element_id_for_index(std::uint64_t index, std::uint32_t universe_bits);

}  // namespace sparseq
