#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace iceberg {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void append_line(const std::filesystem::path& path, const std::string& line);

// Named-tensor archive: little-endian binary, doubles stored in Eigen's
// column-major order. Used for ensemble members and model checkpoints.
struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

void save_tensor_archive(const std::filesystem::path& path,
                         const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensor_archive(const std::filesystem::path& path);

}  // namespace iceberg
