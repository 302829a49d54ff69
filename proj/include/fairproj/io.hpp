#pragma once

// Dataset persistence.
//
// CSV layout:
//   # attr:gender=male|female          one declaration line per attribute
//   id,attr:gender,e0,e1,...,e{D-1}    header
//   r0,male,0.25,-1.5,...              one record per row
// Vocabularies come from the declaration lines, never from the rows, so a
// declared group with no rows stays visible. Token matrices are not
// representable in CSV. Numbers are written in shortest round-trip form.
//
// Binary layout (all integers little-endian):
//   "FPRJ"  u32 version (=1)  u64 n  u64 D
//   n*D f32 pooled vectors, row-major
//   u64 L   L bytes of UTF-8 JSON: {"ids", "schema", "labels", "tokens"}
//   for each entry of "tokens" (in order): u64 T, then T*D f32
// "labels" maps attribute name to per-record group indices; "tokens" lists
// the record indices that carry token matrices.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairproj/dataset.hpp"
#include "fairproj/errors.hpp"

namespace fairproj {

enum class DatasetFormat { csv, binary };

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  static_assert(sizeof(T) == sizeof(U));
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
  T get_le() {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(what_ + ": truncated file");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) throw DataError(where + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline nlohmann::json schema_to_json(const GroupSchema& schema) {
  auto arr = nlohmann::json::array();
  for (const auto& a : schema.attributes()) arr.push_back({{"name", a.name}, {"groups", a.groups}});
  return arr;
}

inline GroupSchema schema_from_json(const nlohmann::json& j) {
  std::vector<Attribute> attrs;
  for (const auto& a : j) attrs.push_back({a.at("name").get<std::string>(), a.at("groups").get<std::vector<std::string>>()});
  return GroupSchema(std::move(attrs));
}

}  // namespace detail

inline DatasetFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::binary;
}

inline std::string encode_csv(const EmbeddingDataset& data) {
  std::string out;
  for (const auto& a : data.schema().attributes()) {
    out += "# attr:" + a.name + "=";
    for (std::size_t g = 0; g < a.groups.size(); ++g) out += (g ? "|" : "") + a.groups[g];
    out += '\n';
  }
  out += "id";
  for (const auto& a : data.schema().attributes()) out += ",attr:" + a.name;
  for (std::size_t j = 0; j < data.dimension(); ++j) out += ",e" + std::to_string(j);
  out += '\n';
  for (const auto& r : data.records()) {
    if (r.id.find_first_of(",\n\r") != std::string::npos) throw DataError("CSV: id '" + r.id + "' contains a separator");
    out += r.id;
    for (const auto& a : data.schema().attributes()) out += "," + r.attributes.at(a.name);
    for (double v : r.vector) out += "," + detail::format_double(v);
    out += '\n';
  }
  return out;
}

inline EmbeddingDataset decode_csv(std::string_view text) {
  std::vector<Attribute> declared;
  std::vector<std::string_view> lines;
  for (auto line : detail::split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
  }
  std::size_t li = 0;
  for (; li < lines.size(); ++li) {
    auto line = lines[li];
    if (line.empty()) continue;
    if (line.front() != '#') break;
    line.remove_prefix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (!line.starts_with("attr:")) continue;
    line.remove_prefix(5);
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("CSV: malformed attribute declaration");
    Attribute a{std::string(line.substr(0, eq)), {}};
    for (auto g : detail::split(line.substr(eq + 1), '|')) a.groups.emplace_back(g);
    declared.push_back(std::move(a));
  }
  if (li >= lines.size()) throw DataError("CSV: missing header");
  const auto header = detail::split(lines[li++], ',');
  if (header.empty() || header[0] != "id") throw DataError("CSV: header must start with 'id'");

  std::vector<Attribute> ordered;
  std::size_t col = 1;
  for (; col < header.size() && header[col].starts_with("attr:"); ++col) {
    const std::string name(header[col].substr(5));
    auto it = std::find_if(declared.begin(), declared.end(), [&](const Attribute& a) { return a.name == name; });
    if (it == declared.end()) throw DataError("CSV: attribute '" + name + "' has no vocabulary declaration");
    ordered.push_back(*it);
  }
  if (ordered.size() != declared.size()) throw DataError("CSV: declared attribute missing from header");
  const std::size_t n_attr = ordered.size();
  const std::size_t dim = header.size() - col;
  for (std::size_t j = 0; j < dim; ++j)
    if (header[col + j] != "e" + std::to_string(j)) throw DataError("CSV: expected column e" + std::to_string(j));
  if (dim == 0) throw DataError("CSV: no embedding columns");
  GroupSchema schema(std::move(ordered));

  std::vector<EmbeddingRecord> records;
  for (; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string where = "CSV line " + std::to_string(li + 1);
    const auto cells = detail::split(lines[li], ',');
    if (cells.size() != 1 + n_attr + dim)
      throw DataError(where + ": expected " + std::to_string(1 + n_attr + dim) + " fields, got " +
                      std::to_string(cells.size()));
    EmbeddingRecord r;
    r.id = std::string(cells[0]);
    for (std::size_t k = 0; k < n_attr; ++k) r.attributes[schema.attributes()[k].name] = std::string(cells[1 + k]);
    r.vector.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) r.vector.push_back(detail::parse_double(cells[1 + n_attr + j], where));
    records.push_back(std::move(r));
  }
  return EmbeddingDataset(std::move(records), dim, std::move(schema));
}

inline std::string encode_binary(const EmbeddingDataset& data) {
  std::string out = "FPRJ";
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint64_t>(out, data.size());
  detail::put_le<std::uint64_t>(out, data.dimension());
  for (const auto& r : data.records())
    for (double v : r.vector) detail::put_le<float>(out, static_cast<float>(v));

  nlohmann::json trailer;
  auto ids = nlohmann::json::array();
  for (const auto& r : data.records()) ids.push_back(r.id);
  trailer["ids"] = ids;
  trailer["schema"] = detail::schema_to_json(data.schema());
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& a : data.schema().attributes()) {
    std::vector<std::size_t> idx;
    for (const auto& r : data.records()) idx.push_back(data.schema().group_index(a.name, r.attributes.at(a.name)));
    labels[a.name] = idx;
  }
  trailer["labels"] = labels;
  std::vector<std::size_t> token_records;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i].tokens) token_records.push_back(i);
  trailer["tokens"] = token_records;
  const std::string js = trailer.dump();
  detail::put_le<std::uint64_t>(out, js.size());
  out += js;
  for (auto i : token_records) {
    const Matrix& t = *data[i].tokens;
    detail::put_le<std::uint64_t>(out, t.rows());
    for (double v : t.data()) detail::put_le<float>(out, static_cast<float>(v));
  }
  return out;
}

inline EmbeddingDataset decode_binary(std::string_view bytes) {
  detail::ByteReader in(bytes, "binary dataset");
  if (in.take(4) != "FPRJ") throw DataError("binary dataset: bad magic");
  const auto version = in.get_le<std::uint32_t>();
  if (version != 1) throw DataError("binary dataset: unsupported version " + std::to_string(version));
  const auto n = in.get_le<std::uint64_t>();
  const auto dim = in.get_le<std::uint64_t>();
  if (n == 0) throw DataError("empty dataset");
  if (dim == 0) throw DataError("binary dataset: zero dimension");
  if (dim > in.remaining() / 4 / n) throw DataError("binary dataset: truncated file");
  std::vector<EmbeddingRecord> records(n);
  for (auto& r : records) {
    r.vector.resize(dim);
    for (auto& v : r.vector) v = in.get_le<float>();
  }
  const auto len = in.get_le<std::uint64_t>();
  if (len > in.remaining()) throw DataError("binary dataset: truncated trailer");
  nlohmann::json trailer;
  try {
    trailer = nlohmann::json::parse(in.take(len));
    const auto ids = trailer.at("ids").get<std::vector<std::string>>();
    if (ids.size() != n) throw DataError("binary dataset: id count does not match n");
    GroupSchema schema = detail::schema_from_json(trailer.at("schema"));
    for (std::size_t i = 0; i < n; ++i) records[i].id = ids[i];
    for (const auto& a : schema.attributes()) {
      const auto idx = trailer.at("labels").at(a.name).get<std::vector<std::size_t>>();
      if (idx.size() != n) throw DataError("binary dataset: label count mismatch for '" + a.name + "'");
      for (std::size_t i = 0; i < n; ++i) {
        if (idx[i] >= a.groups.size()) throw DataError("binary dataset: label index out of range");
        records[i].attributes[a.name] = a.groups[idx[i]];
      }
    }
    for (auto i : trailer.at("tokens").get<std::vector<std::size_t>>()) {
      if (i >= n || records[i].tokens) throw DataError("binary dataset: bad token record index");
      const auto t = in.get_le<std::uint64_t>();
      if (t == 0 || t > in.remaining() / 4 / dim) throw DataError("binary dataset: truncated token matrix");
      Matrix m(t, dim);
      for (auto& v : m.data()) v = in.get_le<float>();
      records[i].tokens = std::move(m);
    }
    if (in.remaining() != 0) throw DataError("binary dataset: trailing bytes");
    return EmbeddingDataset(std::move(records), dim, std::move(schema));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("binary dataset: bad trailer: ") + e.what());
  }
}

inline EmbeddingDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  const std::string bytes = detail::read_file(path);
  return format == DatasetFormat::csv ? decode_csv(bytes) : decode_binary(bytes);
}

inline EmbeddingDataset load_dataset(const std::filesystem::path& path) {
  return load_dataset(path, format_from_path(path));
}

inline void save_dataset(const EmbeddingDataset& data, const std::filesystem::path& path, DatasetFormat format) {
  detail::write_file(path, format == DatasetFormat::csv ? encode_csv(data) : encode_binary(data));
}

inline void save_dataset(const EmbeddingDataset& data, const std::filesystem::path& path) {
  save_dataset(data, path, format_from_path(path));
}

}  // namespace fairproj
