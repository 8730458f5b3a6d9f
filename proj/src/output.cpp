#include "brm/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "brm/digest.hpp"
#include "brm/errors.hpp"

#ifndef BRM_VERSION
#define BRM_VERSION "0.0.0"
#endif

namespace brm {

CsvTable::CsvTable(std::string title, std::vector<Column> columns)
    : title_(std::move(title)), columns_(std::move(columns)) {}

CsvTable& CsvTable::row() {
  rows_.emplace_back();
  rows_.back().reserve(columns_.size());
  return *this;
}

CsvTable& CsvTable::cell(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return cell(std::string_view(buf));
}

CsvTable& CsvTable::cell(long x) { return cell(std::string_view(std::to_string(x))); }

CsvTable& CsvTable::cell(std::string_view text) {
  if (rows_.empty()) row();
  rows_.back().emplace_back(text);
  return *this;
}

std::string CsvTable::render() const {
  std::ostringstream o;
  o << "# " << title_ << "\n# ";
  for (std::size_t i = 0; i < columns_.size(); ++i)
    o << (i ? "; " : "") << columns_[i].name << " [" << columns_[i].unit << "]";
  o << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) o << (i ? "," : "") << columns_[i].name;
  o << "\n";
  for (const auto& r : rows_) {
    if (r.size() != columns_.size()) throw std::logic_error("csv row width mismatch in " + title_);
    for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
    o << "\n";
  }
  std::string body = o.str();
  body += "# fnv1a64 " + fnv1a64_hex(body) + "\n";
  return body;
}

std::string write_table(const std::filesystem::path& dir, const std::string& name,
                        const CsvTable& table) {
  const std::string text = table.render();
  std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
  f << text;
  f.close();
  if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  const auto pos = text.rfind("# fnv1a64 ");
  return text.substr(pos + 10, 16);
}

bool verify_checksum(std::string_view text) {
  if (text.empty() || text.back() != '\n') return false;
  const auto pos = text.rfind("# fnv1a64 ", text.size() - 2);
  if (pos == std::string_view::npos || (pos > 0 && text[pos - 1] != '\n')) return false;
  const auto hex = text.substr(pos + 10, text.size() - pos - 11);
  return hex == fnv1a64_hex(text.substr(0, pos));
}

RunManifest::RunManifest(std::filesystem::path dir, nlohmann::json header)
    : dir_(std::move(dir)), j_(std::move(header)) {
  j_["status"] = "running";
  j_["outputs"] = nlohmann::json::array();
  flush();
}

void RunManifest::add_output(const std::string& name, const std::string& checksum) {
  j_["outputs"].push_back({{"file", name}, {"fnv1a64", checksum}});
  flush();
}

void RunManifest::set(const std::string& key, nlohmann::json value) {
  j_[key] = std::move(value);
  flush();
}

void RunManifest::finish(const std::string& status, double wall_seconds) {
  j_["status"] = status;
  j_["wall_time_s"] = wall_seconds;
  flush();
}

void RunManifest::fail(const std::string& kind, const std::string& message, double wall_seconds) {
  j_["failure"] = {{"kind", kind}, {"message", message}};
  finish("failed", wall_seconds);
}

void RunManifest::flush() const {
  std::ofstream f(path(), std::ios::binary | std::ios::trunc);
  f << j_.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write " + path().string());
}

std::string version_string() { return std::string("brm ") + BRM_VERSION; }

}  // namespace brm
