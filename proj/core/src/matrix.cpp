#include "triwad/matrix.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "triwad/error.hpp"

namespace triwad {

namespace {

constexpr char kMagic[4] = {'W', 'A', 'D', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "WADM I/O assumes a little-endian host");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

template <typename T>
void put_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(std::span<const std::byte> bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

}  // namespace

MatrixFormat parse_format(const std::string& name) {
  if (name == "csv") return MatrixFormat::Csv;
  if (name == "binary") return MatrixFormat::Binary;
  throw ConfigError("unknown matrix format '" + name + "' (expected csv|binary)");
}

DataMatrix::DataMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), values_(rows * dim, 0.0) {
  if (rows == 0 || dim == 0) throw Error("matrix dimensions must be >= 1");
}

DataMatrix::DataMatrix(std::size_t rows, std::size_t dim,
                       std::vector<double> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (rows == 0 || dim == 0) throw Error("matrix dimensions must be >= 1");
  if (values_.size() != rows * dim)
    throw Error("matrix value count does not match rows*dim");
  validate();
}

void DataMatrix::validate() const {
  if (rows_ == 0 || dim_ == 0) throw Error("empty matrix");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw Error("non-finite value at row " + std::to_string(i / dim_ + 1) +
                  ", column " + std::to_string(i % dim_ + 1));
  }
}

namespace {

DataMatrix load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t row = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::size_t cols = 0;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(ptr, end, v);
      if (ec != std::errc()) {
        throw ParseError(path.string() + ": row " + std::to_string(row) +
                         ": cannot parse value '" +
                         std::string(ptr, end) + "'");
      }
      if (!std::isfinite(v))
        throw ParseError(path.string() + ": row " + std::to_string(row) +
                         ": non-finite value");
      values.push_back(v);
      ++cols;
      ptr = next;
      if (ptr == end) break;
      if (*ptr != ',')
        throw ParseError(path.string() + ": row " + std::to_string(row) +
                         ": expected ',' before '" + std::string(ptr, end) + "'");
      ++ptr;
    }
    if (dim == 0) {
      dim = cols;
    } else if (cols != dim) {
      throw ParseError(path.string() + ": row " + std::to_string(row) +
                       ": expected " + std::to_string(dim) + " columns, got " +
                       std::to_string(cols));
    }
  }
  if (row == 0) throw ParseError(path.string() + ": empty file");
  return DataMatrix(row, dim, std::move(values));
}

void write_csv(const DataMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.dim(); ++j) {
      // %.17g round-trips binary64 exactly.
      int len = std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) out.put(',');
      out.write(buf, len);
    }
    out.put('\n');
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

std::string encode_wadm(const DataMatrix& m) {
  m.validate();
  std::string out;
  out.reserve(24 + m.values().size() * 8);
  out.append(kMagic, 4);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, m.rows());
  put_le<std::uint64_t>(out, m.dim());
  for (double v : m.values()) put_le<double>(out, v);
  return out;
}

DataMatrix decode_wadm(std::span<const std::byte> bytes) {
  if (bytes.size() < 24) throw ParseError("WADM blob truncated (header)");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ParseError("WADM magic mismatch");
  auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kFormatVersion)
    throw ParseError("unsupported WADM version " + std::to_string(version));
  auto rows = get_le<std::uint64_t>(bytes, 8);
  auto dim = get_le<std::uint64_t>(bytes, 16);
  if (rows == 0 || dim == 0) throw ParseError("WADM header declares empty matrix");
  if (rows > (1u << 24) || dim > (1u << 24) ||
      bytes.size() != 24 + rows * dim * 8)
    throw ParseError("WADM payload size mismatch");
  std::vector<double> values(rows * dim);
  std::memcpy(values.data(), bytes.data() + 24, values.size() * 8);
  return DataMatrix(rows, dim, std::move(values));
}

DataMatrix decode_wadm(const std::string& bytes) {
  return decode_wadm(std::as_bytes(std::span(bytes.data(), bytes.size())));
}

DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  if (format == MatrixFormat::Csv) return load_csv(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  try {
    return decode_wadm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_matrix(const DataMatrix& m, const std::filesystem::path& path,
                  MatrixFormat format) {
  m.validate();
  if (format == MatrixFormat::Csv) {
    write_csv(m, path);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  std::string blob = encode_wadm(m);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace triwad
