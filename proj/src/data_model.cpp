#include "sparseq/data_model.hpp"

#include <fstream>

#include "json.hpp"

namespace sparseq {

Database make_database(const std::vector<RecordInput>& records) {
  if (records.empty()) {
    fail(Errc::empty_database, "no records");
  }
  Database db;
  for (const auto& rec : records) {
    if (rec.id.empty()) {
      fail(Errc::parse_error, "empty element id");
    }
    if (rec.count == 0) {
      fail(Errc::parse_error, "count must be a positive integer for id '" + rec.id + "'");
    }
    db.counts[rec.id] += rec.count;
    db.total += rec.count;
  }
  return db;
}

LoadedDatabase load_database_jsonl(std::istream& in) {
  LoadedDatabase loaded;
  std::vector<RecordInput> records;
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
    if (obj.contains("universe_bits")) {
      if (!obj["universe_bits"].is_number_unsigned() || obj["universe_bits"].get<std::uint64_t>() == 0 ||
          obj["universe_bits"].get<std::uint64_t>() > 128) {
        fail(Errc::parse_error,
             "line " + std::to_string(line_number) + ": universe_bits must be an integer in 1..128");
      }
      loaded.universe_bits = obj["universe_bits"].get<std::uint32_t>();
      continue;
    }
    if (!obj.contains("id") || !obj["id"].is_string()) {
      fail(Errc::parse_error, "line " + std::to_string(line_number) + ": missing string field 'id'");
    }
    if (!obj.contains("count") || !obj["count"].is_number_unsigned() ||
        obj["count"].get<std::uint64_t>() == 0) {
      fail(Errc::parse_error,
           "line " + std::to_string(line_number) + ": 'count' must be a positive integer");
    }
    std::string id = obj["id"].get<std::string>();
    if (id.empty()) {
      fail(Errc::parse_error, "line " + std::to_string(line_number) + ": empty element id");
    }
    records.push_back({std::move(id), obj["count"].get<std::uint64_t>()});
  }
  loaded.db = make_database(records);
  return loaded;
}

LoadedDatabase load_database_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail(Errc::io_error, "cannot open database file '" + path + "'");
  }
  return load_database_jsonl(in);
}

NormalizedDatabase normalize(const Database& db) {
  if (db.empty() || db.total == 0) {
    fail(Errc::empty_database, "cannot normalize an empty database");
  }
  NormalizedDatabase out;
  const double n = static_cast<double>(db.total);
  for (const auto& [id, count] : db.counts) {
    out.weights[id] = static_cast<double>(count) / n;
  }
  return out;
}

double evaluate_exact(const SparseQuery& q, const Database& db) {
  if (db.empty() || db.total == 0) {
    fail(Errc::empty_database, "cannot evaluate a query on an empty database");
  }
  double sum = 0.0;
  for (const auto& [id, weight] : q.support) {
    auto it = db.counts.find(id);
    if (it != db.counts.end()) {
      sum += weight * static_cast<double>(it->second);
    }
  }
  return sum / static_cast<double>(db.total);
}

std::uint64_t element_index(std::string_view id, std::uint32_t universe_bits) {
  if (universe_bits == 0 || universe_bits > 64) {
    fail(Errc::validation_error, "universe_bits must be in 1..64 for indexing");
  }
  if (id.empty()) {
    fail(Errc::parse_error, "empty element id");
  }
  if (id.size() > universe_bits) {
    fail(Errc::index_overflow, "id '" + std::string(id) + "' is longer than " +
                                   std::to_string(universe_bits) + " bits");
  }
  std::uint64_t value = 0;
  for (char c : id) {
    if (c != '0' && c != '1') {
      fail(Errc::parse_error, "id '" + std::string(id) + "' is not a bit string");
    }
    value = (value << 1) | static_cast<std::uint64_t>(c - '0');
  }
  return value + 1;
}

std::string element_id_for_index(std::uint64_t index, std::uint32_t universe_bits) {
  if (universe_bits == 0 || universe_bits > 64) {
    fail(Errc::validation_error, "universe_bits must be in 1..64 for indexing");
  }
  if (index == 0 || (universe_bits < 64 && index > (1ull << universe_bits))) {
    fail(Errc::index_overflow, "index out of range for " + std::to_string(universe_bits) + " bits");
  }
  std::uint64_t value = index - 1;
  std::string id(universe_bits, '0');
  for (std::uint32_t i = 0; i < universe_bits; ++i) {
    if ((value >> i) & 1ull) {
      id[universe_bits - 1 - i] = '1';
    }
  }
  return id;
}

}  // namespace sparseq
