#include "sparseq/queries.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <set>

#include "json.hpp"

namespace sparseq {

std::size_t sparsity(const SparseQuery& q) { return q.support.size(); }

SparseQuery make_query(const std::vector<std::pair<std::string, double>>& terms,
                       std::size_t m_cap, std::string label) {
  SparseQuery q;
  q.label = std::move(label);
  for (const auto& [id, weight] : terms) {
    if (id.empty()) {
      fail(Errc::parse_error, "empty element id in query");
    }
    if (!std::isfinite(weight) || weight < 0.0 || weight > 1.0) {
      fail(Errc::range_error, "weight " + std::to_string(weight) + " for id '" + id +
                                  "' is outside (0,1]");
    }
    if (weight == 0.0) continue;  // zero entries do not count toward sparsity
    q.support[id] += weight;
  }
  if (q.support.empty()) {
    fail(Errc::validation_error, "query has empty support");
  }
  for (const auto& [id, weight] : q.support) {
    if (weight > 1.0) {
      fail(Errc::range_error, "accumulated weight for id '" + id + "' exceeds 1");
    }
  }
  if (q.support.size() > m_cap) {
    fail(Errc::sparsity_exceeded, "query sparsity " + std::to_string(q.support.size()) +
                                      " exceeds cap " + std::to_string(m_cap));
  }
  return q;
}

SparseQuery parse_query(std::string_view text, std::size_t m_cap) {
  std::string label;
  if (auto bar = text.find('|'); bar != std::string_view::npos) {
    label = std::string(text.substr(0, bar));
    text = text.substr(bar + 1);
  }
  std::vector<std::pair<std::string, double>> terms;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    std::size_t end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(pos, end - pos);
    pos = end;
    std::size_t colon = token.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 >= token.size()) {
      fail(Errc::parse_error, "malformed term '" + std::string(token) + "' (expected id:weight)");
    }
    std::string_view weight_text = token.substr(colon + 1);
    double weight = 0.0;
    auto [ptr, ec] = std::from_chars(weight_text.data(), weight_text.data() + weight_text.size(), weight);
    if (ec != std::errc() || ptr != weight_text.data() + weight_text.size()) {
      fail(Errc::parse_error, "malformed weight in term '" + std::string(token) + "'");
    }
    terms.emplace_back(std::string(token.substr(0, colon)), weight);
  }
  if (terms.empty()) {
    fail(Errc::parse_error, "query line has no terms");
  }
  return make_query(terms, m_cap, std::move(label));
}

std::string serialize_query(const SparseQuery& q) {
  std::string out;
  if (!q.label.empty()) {
    if (q.label.find('|') != std::string::npos) {
      fail(Errc::validation_error, "query label may not contain '|'");
    }
    out += q.label;
    out += '|';
  }
  bool first = true;
  char buf[40];
  for (const auto& [id, weight] : q.support) {
    if (id.find(' ') != std::string::npos || id.find('\n') != std::string::npos) {
      fail(Errc::validation_error, "id '" + id + "' is not representable in the wire format");
    }
    if (!first) out += ' ';
    first = false;
    std::snprintf(buf, sizeof(buf), "%.17g", weight);
    out += id;
    out += ':';
    out += buf;
  }
  return out;
}

SparseQuery conjunction_to_sparse(const ConjunctionSpec& spec, std::size_t m_cap) {
  const std::uint32_t d = spec.dimension;
  if (d == 0 || d > 64) {
    fail(Errc::validation_error, "conjunction dimension must be in 1..64");
  }
  if (spec.fixed_positions.empty()) {
    fail(Errc::validation_error, "conjunction must fix at least one position");
  }
  std::set<std::uint32_t> fixed;
  for (std::uint32_t p : spec.fixed_positions) {
    if (p < 1 || p > d) {
      fail(Errc::validation_error, "fixed position " + std::to_string(p) + " outside [1," +
                                       std::to_string(d) + "]");
    }
    if (!fixed.insert(p).second) {
      fail(Errc::validation_error, "duplicate fixed position " + std::to_string(p));
    }
  }
  const std::uint32_t free_bits = d - static_cast<std::uint32_t>(fixed.size());
  if (free_bits >= 64 || (static_cast<std::uint64_t>(1) << free_bits) > m_cap) {
    fail(Errc::sparsity_exceeded, "conjunction support 2^" + std::to_string(free_bits) +
                                      " exceeds cap " + std::to_string(m_cap));
  }
  std::vector<std::uint32_t> free_positions;
  for (std::uint32_t p = 1; p <= d; ++p) {
    if (!fixed.count(p)) free_positions.push_back(p);
  }
  SparseQuery q;
  std::string bits(d, '0');
  for (std::uint32_t p : fixed) bits[p - 1] = '1';
  const std::uint64_t combos = static_cast<std::uint64_t>(1) << free_bits;
  for (std::uint64_t v = 0; v < combos; ++v) {
    for (std::uint32_t j = 0; j < free_bits; ++j) {
      bits[free_positions[j] - 1] = ((v >> (free_bits - 1 - j)) & 1ull) ? '1' : '0';
    }
    q.support[bits] = 1.0;
  }
  return q;
}

std::vector<ConjunctionSpec> load_conjunctions_jsonl(std::istream& in) {
  std::vector<ConjunctionSpec> specs;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, "line " + std::to_string(line_number) + ": " + e.what());
    }
    if (!obj.contains("d") || !obj["d"].is_number_unsigned()) {
      fail(Errc::parse_error, "line " + std::to_string(line_number) + ": missing integer field 'd'");
    }
    if (!obj.contains("fixed") || !obj["fixed"].is_array()) {
      fail(Errc::parse_error, "line " + std::to_string(line_number) + ": missing array field 'fixed'");
    }
    ConjunctionSpec spec;
    spec.dimension = obj["d"].get<std::uint32_t>();
    for (const auto& v : obj["fixed"]) {
      if (!v.is_number_unsigned()) {
        fail(Errc::parse_error, "line " + std::to_string(line_number) + ": fixed positions must be positive integers");
      }
      spec.fixed_positions.push_back(v.get<std::uint32_t>());
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace sparseq
