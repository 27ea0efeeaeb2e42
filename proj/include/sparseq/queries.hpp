#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sparseq/errors.hpp"

namespace sparseq {

// A sparse linear query: a finite support map from element ids to weights
// in (0,1]. The sparsity of a query is the number of elements it is
// strictly positive on; zero-weight entries are never stored.
struct SparseQuery {
  std::map<std::string, double> support;
  std::string label;
};

std::size_t sparsity(const SparseQuery& q);

// Builds a query from (id, weight) terms. Zero weights are dropped,
// duplicate ids are summed, and the result must be non-empty with all
// weights in (0,1] and sparsity at most m_cap.
SparseQuery make_query(const std::vector<std::pair<std::string, double>>& terms,
                       std::size_t m_cap, std::string label = {});

// Wire format: space-separated "id:weight" terms with an optional leading
// "label|" prefix. parse_query and serialize_query are inverse on support
// and weights.
SparseQuery parse_query(std::string_view text, std::size_t m_cap);
std::string serialize_query(const SparseQuery& q);

// A conjunction over the d-dimensional boolean hypercube that fixes the
// bits in `fixed_positions` (1-based) to 1. Expands to a query supported
// on the 2^(d-|S|) satisfying points, each with weight 1; ids are the
// d-character bit strings.
struct ConjunctionSpec {
  std::uint32_t dimension = 0;                  // d
  std::vector<std::uint32_t> fixed_positions;   // S, subset of [d]
};

SparseQuery conjunction_to_sparse(const ConjunctionSpec& spec, std::size_t m_cap);

// JSONL: one {"d": int, "fixed": [positions]} object per line.
std::vector<ConjunctionSpec> load_conjunctions_jsonl(std::istream& in);

}  // namespace sparseq
