#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "noda/params.hpp"

namespace noda {

/// One entry of the "NODM" named-blob container.
struct NamedBlob {
  std::string name;
  std::vector<int> dims;  // empty for rank-0 scalars
  std::vector<double> payload;
};

void write_blob_file(const std::filesystem::path& path, const std::vector<NamedBlob>& blobs);
std::vector<NamedBlob> read_blob_file(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const NodaParams& params);
NodaParams load_model(const std::filesystem::path& path);

}  // namespace noda
