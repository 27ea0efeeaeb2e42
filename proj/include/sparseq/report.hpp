#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sparseq {

// SHA-1 hex digest; used to tag report records with a content hash of the
// exact configuration that produced them.
std::string sha1_hex(std::span<const std::uint8_t> bytes);
std::string sha1_hex(const std::string& text);

struct Report {
  std::string scenario;
  nlohmann::ordered_json config;  // exact experiment configuration
  std::string config_digest;      // sha1 of the config dump
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // preformatted cells
  nlohmann::ordered_json summary;              // aggregates (success fraction, medians)
};

// Writes <dir>/<scenario>.csv and <dir>/<scenario>_summary.json with
// deterministic field order, creating the directory if needed. Writing the
// same report twice produces byte-identical files.
void emit_report(const Report& report, const std::string& out_dir);

// Deterministic numeric cell formatting shared by all scenarios.
std::string format_cell(double value);
std::string format_cell(std::uint64_t value);

}  // namespace sparseq
