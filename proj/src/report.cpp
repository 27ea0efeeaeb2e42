#include "sparseq/report.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "sparseq/errors.hpp"

namespace sparseq {

namespace {

std::uint32_t rotl32(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

}  // namespace

std::string sha1_hex(std::span<const std::uint8_t> bytes) {
  std::uint32_t h0 = 0x67452301u, h1 = 0xEFCDAB89u, h2 = 0x98BADCFEu, h3 = 0x10325476u,
                h4 = 0xC3D2E1F0u;

  // message with 0x80, zero padding, and 64-bit big-endian bit length
  std::vector<std::uint8_t> msg(bytes.begin(), bytes.end());
  const std::uint64_t bit_len = static_cast<std::uint64_t>(bytes.size()) * 8;
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0x00);
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<std::uint8_t>(bit_len >> (8 * i)));

  std::uint32_t w[80];
  for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
    for (int i = 0; i < 16; ++i) {
      w[i] = (static_cast<std::uint32_t>(msg[chunk + 4 * i]) << 24) |
             (static_cast<std::uint32_t>(msg[chunk + 4 * i + 1]) << 16) |
             (static_cast<std::uint32_t>(msg[chunk + 4 * i + 2]) << 8) |
             static_cast<std::uint32_t>(msg[chunk + 4 * i + 3]);
    }
    for (int i = 16; i < 80; ++i) {
      w[i] = rotl32(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    }
    std::uint32_t a = h0, b = h1, c = h2, d = h3, e = h4;
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | ((~b) & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t temp = rotl32(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rotl32(b, 30);
      b = a;
      a = temp;
    }
    h0 += a;
    h1 += b;
    h2 += c;
    h3 += d;
    h4 += e;
  }

  char out[41];
  std::snprintf(out, sizeof(out), "%08x%08x%08x%08x%08x", h0, h1, h2, h3, h4);
  return std::string(out);
}

std::string sha1_hex(const std::string& text) {
  return sha1_hex(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string format_cell(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return std::string(buf);
}

std::string format_cell(std::uint64_t value) { return std::to_string(value); }

void emit_report(const Report& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    fail(Errc::io_error, "cannot create directory '" + out_dir + "': " + ec.message());
  }

  const fs::path csv_path = fs::path(out_dir) / (report.scenario + ".csv");
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) fail(Errc::io_error, "cannot write '" + csv_path.string() + "'");
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
      if (i) csv << ',';
      csv << report.columns[i];
    }
    csv << '\n';
    for (const auto& row : report.rows) {
      if (row.size() != report.columns.size()) {
        fail(Errc::validation_error, "report row width does not match the column list");
      }
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) csv << ',';
        csv << row[i];
      }
      csv << '\n';
    }
  }

  const fs::path json_path = fs::path(out_dir) / (report.scenario + "_summary.json");
  {
    nlohmann::ordered_json doc;
    doc["scenario"] = report.scenario;
    doc["config"] = report.config;
    doc["config_digest"] = report.config_digest;
    doc["summary"] = report.summary;
    std::ofstream js(json_path, std::ios::binary);
    if (!js) fail(Errc::io_error, "cannot write '" + json_path.string() + "'");
    js << doc.dump(2) << '\n';
  }
}

}  // namespace sparseq
