#pragma once

#include <string>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

struct ManifestEntry {
  std::string path;   // relative to the manifest's directory
  std::string label;
};

// `path,label` CSV with a header row. Class labels are ordered by first
// occurrence; paths must be unique and labels must not contain commas.
struct DatasetManifest {
  std::string root;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_labels;

  int label_index(const std::string& label) const;
  std::string resolve(const ManifestEntry& entry) const;
  void rebuild_labels();

  static DatasetManifest load(const std::string& csv_path);
  void save(const std::string& csv_path) const;
};

}  // namespace vigil
