#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace triwad {

enum class MatrixFormat { Csv, Binary };

MatrixFormat parse_format(const std::string& name);

/// Dense row-major matrix of finite doubles. Rows are support points,
/// columns are feature coordinates. Immutable after construction apart
/// from element assignment through mutable_values() during building.
class DataMatrix {
public:
  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::size_t dim);
  DataMatrix(std::size_t rows, std::size_t dim, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }

  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * dim_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return values_[i * dim_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  // Throws Error if the matrix is empty or holds a non-finite value.
  void validate() const;

  bool operator==(const DataMatrix& other) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

// Headerless CSV ('.' decimal separator, LF endings) or "WADM" binary:
//   bytes 0-3   ASCII "WADM"
//   bytes 4-7   format version 1, little-endian u32
//   bytes 8-15  rows, little-endian u64
//   bytes 16-23 dim, little-endian u64
//   then rows*dim IEEE-754 binary64 little-endian, row-major.
DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
void write_matrix(const DataMatrix& m, const std::filesystem::path& path,
                  MatrixFormat format);

// In-memory codecs for the binary format; the wire protocol embeds these
// blobs as base64 so cross-process runs stay bit-exact.
std::string encode_wadm(const DataMatrix& m);
DataMatrix decode_wadm(std::span<const std::byte> bytes);
DataMatrix decode_wadm(const std::string& bytes);

}  // namespace triwad
