#include "vigil/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace vigil {

namespace fs = std::filesystem;

int DatasetManifest::label_index(const std::string& label) const {
  for (size_t i = 0; i < class_labels.size(); ++i)
    if (class_labels[i] == label) return static_cast<int>(i);
  return -1;
}

std::string DatasetManifest::resolve(const ManifestEntry& entry) const {
  if (root.empty()) return entry.path;
  return (fs::path(root) / entry.path).string();
}

void DatasetManifest::rebuild_labels() {
  class_labels.clear();
  for (const ManifestEntry& e : entries)
    if (label_index(e.label) < 0) class_labels.push_back(e.label);
}

DatasetManifest DatasetManifest::load(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + csv_path);

  DatasetManifest manifest;
  manifest.root = fs::path(csv_path).parent_path().string();

  std::string line;
  int lineno = 0;
  if (!std::getline(in, line))
    throw FormatError("manifest " + csv_path + ": empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,label")
    throw FormatError("manifest " + csv_path +
                      ": first line must be the header `path,label`");

  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    // Labels are comma-free by construction, so the last comma splits.
    const size_t comma = line.rfind(',');
    if (comma == std::string::npos)
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": expected `path,label`");
    ManifestEntry e;
    e.path = line.substr(0, comma);
    e.label = line.substr(comma + 1);
    if (e.path.empty() || e.label.empty())
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": empty path or label");
    if (!seen.insert(e.path).second)
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": duplicate path \"" + e.path + "\"");
    manifest.entries.push_back(std::move(e));
  }
  manifest.rebuild_labels();
  return manifest;
}

void DatasetManifest::save(const std::string& csv_path) const {
  std::set<std::string> seen;
  for (const ManifestEntry& e : entries) {
    if (e.label.find(',') != std::string::npos)
      throw ConfigError("manifest: label \"" + e.label + "\" contains a comma");
    if (e.path.empty() || e.label.empty())
      throw ConfigError("manifest: empty path or label");
    if (!seen.insert(e.path).second)
      throw ConfigError("manifest: duplicate path \"" + e.path + "\"");
  }
  std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open manifest for writing: " + csv_path);
  out << "path,label\n";
  for (const ManifestEntry& e : entries) out << e.path << ',' << e.label << '\n';
  if (!out) throw IoError("write failed: " + csv_path);
}

}  // namespace vigil
