#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace morpho {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column; throws DataError naming `source` if absent.
  std::size_t column(const std::string& name, const std::string& source = "csv") const;
};

// Header row required. Supports double-quoted fields with "" escapes.
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace morpho
