#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "uenl/data.h"
#include "uenl/errors.h"
#include "uenl/format.h"

namespace uenl {
namespace {

constexpr std::uint8_t kIdxUnsignedByte = 0x08;

std::uint32_t ReadBigEndian32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string Hex(std::uint32_t v) {
  std::ostringstream out;
  out << "0x" << std::hex;
  out.width(8);
  out.fill('0');
  out << v;
  return out.str();
}

std::vector<std::uint8_t> ReadBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Splits one CSV line on commas.
std::vector<std::string_view> SplitCells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string StripCr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

IdxArray ParseIdx(std::span<const std::uint8_t> file, const std::string& source) {
  if (file.size() < 4) {
    throw DataError(source + ": truncated IDX header, expected at least 4 bytes, got " +
                    std::to_string(file.size()));
  }
  const std::uint32_t magic = ReadBigEndian32(file, 0);
  const std::uint32_t rank = magic & 0xFF;
  if ((magic >> 8) != kIdxUnsignedByte || rank == 0) {
    throw DataError(source + ": bad IDX magic " + Hex(magic) +
                    " at offset 0, expected 0x000008nn with nn >= 1");
  }
  const std::size_t header = 4 + 4 * std::size_t{rank};
  if (file.size() < header) {
    throw DataError(source + ": truncated IDX header, expected " + std::to_string(header) +
                    " bytes, got " + std::to_string(file.size()));
  }
  IdxArray out;
  std::size_t payload = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    out.dims.push_back(ReadBigEndian32(file, 4 + 4 * i));
    payload *= out.dims.back();
  }
  const std::size_t actual = file.size() - header;
  if (actual != payload) {
    throw DataError(source + ": IDX payload at offset " + std::to_string(header) +
                    (actual < payload ? " is truncated" : " has trailing bytes") +
                    ", expected " + std::to_string(payload) + " bytes, got " +
                    std::to_string(actual));
  }
  out.bytes.assign(file.begin() + static_cast<std::ptrdiff_t>(header), file.end());
  return out;
}

IdxArray ReadIdxFile(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = ReadBytes(path);
  return ParseIdx(bytes, path.string());
}

std::vector<std::uint8_t> EncodeIdx(const IdxArray& array) {
  if (array.dims.empty() || array.dims.size() > 255) {
    throw DataError("IDX arrays need 1 to 255 dimensions");
  }
  std::size_t payload = 1;
  for (std::uint32_t d : array.dims) payload *= d;
  if (payload != array.bytes.size()) {
    throw DataError("IDX dims describe " + std::to_string(payload) + " bytes but " +
                    std::to_string(array.bytes.size()) + " were given");
  }
  std::vector<std::uint8_t> out = {0, 0, kIdxUnsignedByte,
                                   static_cast<std::uint8_t>(array.dims.size())};
  for (std::uint32_t d : array.dims) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      out.push_back(static_cast<std::uint8_t>(d >> shift));
    }
  }
  out.insert(out.end(), array.bytes.begin(), array.bytes.end());
  return out;
}

void WriteIdxFile(const std::filesystem::path& path, const IdxArray& array) {
  const std::vector<std::uint8_t> bytes = EncodeIdx(array);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

Dataset LoadIdx(const std::filesystem::path& images,
                const std::optional<std::filesystem::path>& labels, std::string name) {
  const IdxArray img = ReadIdxFile(images);
  const std::size_t n = img.dims[0];
  const std::size_t d = n == 0 ? 0 : img.bytes.size() / n;
  std::vector<double> x(img.bytes.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = img.bytes[i] / 255.0;
  Dataset out;
  out.name = std::move(name);
  out.features = Tensor({n, d}, std::move(x));
  if (labels) {
    const IdxArray lab = ReadIdxFile(*labels);
    if (lab.dims.size() != 1 || lab.dims[0] != n) {
      throw DataError(labels->string() + ": expected a rank-1 label file of length " +
                      std::to_string(n));
    }
    out.labels = std::vector<int>(lab.bytes.begin(), lab.bytes.end());
  }
  return out;
}

Dataset ReadCsv(std::istream& in, bool has_labels, std::string name,
                const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing CSV header");
  const std::string header = StripCr(line);
  const std::vector<std::string_view> columns = SplitCells(header);
  const std::size_t d = columns.size() - (has_labels ? 1 : 0);
  if (d == 0) throw DataError(source + ": CSV header has no feature columns");
  for (std::size_t j = 0; j < d; ++j) {
    if (columns[j] != "x" + std::to_string(j + 1)) {
      throw DataError(source + ":1: expected header column x" + std::to_string(j + 1) +
                      ", got '" + std::string(columns[j]) + "'");
    }
  }
  if (has_labels && columns.back() != "label") {
    throw DataError(source + ":1: expected last header column 'label'");
  }
  std::vector<double> x;
  std::vector<int> labels;
  std::size_t line_number = 1;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_number;
    line = StripCr(line);
    if (line.empty()) continue;
    const std::vector<std::string_view> cells = SplitCells(line);
    if (cells.size() != columns.size()) {
      throw DataError(source + ":" + std::to_string(line_number) + ": expected " +
                      std::to_string(columns.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      if (!ParseDouble(cells[j], v) || !std::isfinite(v)) {
        throw DataError(source + ":" + std::to_string(line_number) + ": column " +
                        std::to_string(j + 1) + " is not a finite number: '" +
                        std::string(cells[j]) + "'");
      }
      x.push_back(v);
    }
    if (has_labels) {
      double v = 0.0;
      if (!ParseDouble(cells.back(), v) || v < 0 || v != std::floor(v) || v > 1e9) {
        throw DataError(source + ":" + std::to_string(line_number) + ": column " +
                        std::to_string(columns.size()) +
                        " is not a non-negative integer label: '" +
                        std::string(cells.back()) + "'");
      }
      labels.push_back(static_cast<int>(v));
    }
    ++n;
  }
  Dataset out;
  out.name = std::move(name);
  out.features = Tensor({n, d}, std::move(x));
  if (has_labels) out.labels = std::move(labels);
  return out;
}

Dataset LoadCsv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return ReadCsv(in, has_labels, path.stem().string(), path.string());
}

void WriteCsv(std::ostream& out, const Dataset& data) {
  data.Validate();
  const std::size_t d = data.dim();
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << j + 1;
  if (data.labels) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out << (j ? "," : "") << FormatDouble(data.features.at(i, j));
    }
    if (data.labels) out << ',' << (*data.labels)[i];
    out << '\n';
  }
}

void SaveCsv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  WriteCsv(out, data);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace uenl
