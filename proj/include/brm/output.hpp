#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace brm {

struct Column {
  std::string name;
  std::string unit;  // "1" for dimensionless
};

/// CSV table with a comment header naming each column's quantity and unit
/// and a terminal `# fnv1a64 <hex>` line hashing every byte before it. A
/// file without a valid terminal line was not completely written.
class CsvTable {
 public:
  CsvTable(std::string title, std::vector<Column> columns);

  CsvTable& row();
  CsvTable& cell(double x);
  CsvTable& cell(long x);
  CsvTable& cell(int x) { return cell(static_cast<long>(x)); }
  CsvTable& cell(std::string_view text);

  std::size_t rows() const { return rows_.size(); }
  std::string render() const;

 private:
  std::string title_;
  std::vector<Column> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes `table` to dir/name and returns its checksum.
std::string write_table(const std::filesystem::path& dir, const std::string& name,
                        const CsvTable& table);

/// True when the text ends with a checksum line matching its content.
bool verify_checksum(std::string_view text);

/// Run manifest, rewritten in place as the run progresses. The first write
/// happens before any result file exists.
class RunManifest {
 public:
  RunManifest(std::filesystem::path dir, nlohmann::json header);

  void add_output(const std::string& name, const std::string& checksum);
  void set(const std::string& key, nlohmann::json value);
  void finish(const std::string& status, double wall_seconds);
  void fail(const std::string& kind, const std::string& message, double wall_seconds);

  const nlohmann::json& json() const { return j_; }
  std::filesystem::path path() const { return dir_ / "manifest.json"; }

 private:
  void flush() const;

  std::filesystem::path dir_;
  nlohmann::json j_;
};

/// Version string of the library build, "brm <semver>[+g<commit>]".
std::string version_string();

}  // namespace brm
