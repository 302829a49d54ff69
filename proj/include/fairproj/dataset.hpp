#pragma once

// Labeled embedding data: group schemas, records, datasets, one-hot group
// indicator matrices and Cartesian (joint) attribute schemas.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairproj/errors.hpp"
#include "fairproj/linalg.hpp"

namespace fairproj {

struct Attribute {
  std::string name;
  std::vector<std::string> groups;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

// Ordered protected attributes, each with an ordered group vocabulary.
class GroupSchema {
 public:
  GroupSchema() = default;
  explicit GroupSchema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
    std::set<std::string> names;
    for (const auto& a : attributes_) {
      if (a.name.empty()) throw DataError("schema: empty attribute name");
      if (!names.insert(a.name).second) throw DataError("schema: duplicate attribute '" + a.name + "'");
      if (a.groups.empty()) throw DataError("schema: attribute '" + a.name + "' has no groups");
      std::set<std::string> labels;
      for (const auto& g : a.groups) {
        if (g.empty()) throw DataError("schema: empty group label in '" + a.name + "'");
        if (!labels.insert(g).second)
          throw DataError("schema: duplicate group '" + g + "' in attribute '" + a.name + "'");
      }
    }
  }

  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t size() const { return attributes_.size(); }

  bool has(const std::string& name) const { return find(name) != nullptr; }

  const Attribute& attribute(const std::string& name) const {
    if (const auto* a = find(name)) return *a;
    throw DataError("unknown attribute '" + name + "'");
  }

  std::size_t group_count(const std::string& name) const { return attribute(name).groups.size(); }

  std::size_t group_index(const std::string& attr, const std::string& label) const {
    const auto& groups = attribute(attr).groups;
    auto it = std::find(groups.begin(), groups.end(), label);
    if (it == groups.end()) throw DataError("label '" + label + "' not in vocabulary of '" + attr + "'");
    return static_cast<std::size_t>(it - groups.begin());
  }

  friend bool operator==(const GroupSchema&, const GroupSchema&) = default;

 private:
  const Attribute* find(const std::string& name) const {
    for (const auto& a : attributes_)
      if (a.name == name) return &a;
    return nullptr;
  }

  std::vector<Attribute> attributes_;
};

struct EmbeddingRecord {
  std::string id;
  Vector vector;
  std::map<std::string, std::string> attributes;
  std::optional<Matrix> tokens;  // T x D
};

// Column-wise mean of a T x D token matrix.
inline Vector pool_tokens(const Matrix& tokens) {
  if (tokens.rows() == 0) throw DataError("pool_tokens: no token rows");
  Vector mean(tokens.cols(), 0.0);
  for (std::size_t t = 0; t < tokens.rows(); ++t) {
    auto r = tokens.row(t);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(tokens.rows());
  return mean;
}

// Immutable after construction.
class EmbeddingDataset {
 public:
  EmbeddingDataset(std::vector<EmbeddingRecord> records, std::size_t dimension, GroupSchema schema)
      : records_(std::move(records)), dimension_(dimension), schema_(std::move(schema)) {
    if (records_.empty()) throw DataError("empty dataset");
    if (dimension_ == 0) throw DataError("dataset dimension must be positive");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      const std::string where = "record " + std::to_string(i) + " ('" + r.id + "')";
      if (!ids.insert(r.id).second) throw DataError("duplicate id '" + r.id + "'");
      if (r.vector.size() != dimension_)
        throw DataError(where + ": vector has " + std::to_string(r.vector.size()) + " entries, expected " +
                        std::to_string(dimension_));
      if (r.tokens && (r.tokens->cols() != dimension_ || r.tokens->rows() == 0))
        throw DataError(where + ": token matrix shape does not match dimension");
      for (const auto& a : schema_.attributes()) {
        auto it = r.attributes.find(a.name);
        if (it == r.attributes.end()) throw DataError(where + ": missing label for '" + a.name + "'");
        schema_.group_index(a.name, it->second);
      }
      for (const auto& [name, label] : r.attributes)
        if (!schema_.has(name)) throw DataError(where + ": attribute '" + name + "' not in schema");
    }
  }

  const std::vector<EmbeddingRecord>& records() const { return records_; }
  const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  std::size_t dimension() const { return dimension_; }
  const GroupSchema& schema() const { return schema_; }

  // Pooled vectors as an n x D matrix.
  Matrix matrix() const {
    Matrix x(records_.size(), dimension_);
    for (std::size_t i = 0; i < records_.size(); ++i)
      std::copy(records_[i].vector.begin(), records_[i].vector.end(), x.row(i).begin());
    return x;
  }

 private:
  std::vector<EmbeddingRecord> records_;
  std::size_t dimension_;
  GroupSchema schema_;
};

// Cartesian product of several attributes' vocabularies. Composites are
// enumerated lexicographically: the first listed attribute varies slowest.
class JointGroupSchema {
 public:
  static constexpr char kSeparator = '|';

  std::vector<std::string> attributes;
  std::vector<std::vector<std::string>> composites;

  std::size_t size() const { return composites.size(); }

  std::string label(std::size_t i) const {
    std::string s;
    for (std::size_t k = 0; k < composites[i].size(); ++k) {
      if (k) s += kSeparator;
      s += composites[i][k];
    }
    return s;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(label(i));
    return out;
  }
};

inline JointGroupSchema joint_schema(const GroupSchema& schema, const std::vector<std::string>& attributes) {
  if (attributes.empty()) throw ConfigError("joint_schema: no attributes given");
  std::set<std::string> seen;
  for (const auto& a : attributes) {
    if (!schema.has(a)) throw ConfigError("joint_schema: unknown attribute '" + a + "'");
    if (!seen.insert(a).second) throw ConfigError("joint_schema: duplicate attribute '" + a + "'");
  }
  JointGroupSchema joint;
  joint.attributes = attributes;
  joint.composites = {{}};
  for (const auto& a : attributes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& prefix : joint.composites)
      for (const auto& g : schema.attribute(a).groups) {
        auto c = prefix;
        c.push_back(g);
        next.push_back(std::move(c));
      }
    joint.composites = std::move(next);
  }
  return joint;
}

// n x G group membership matrix. One-hot matrices have exactly one 1 per row;
// stacked matrices (several attributes side by side) have one per attribute.
class GroupIndicatorMatrix {
 public:
  GroupIndicatorMatrix(Matrix z, std::vector<std::string> columns) : z_(std::move(z)), columns_(std::move(columns)) {
    if (z_.cols() != columns_.size()) throw DataError("indicator: column labels do not match matrix");
    for (double v : z_.data())
      if (v != 0.0 && v != 1.0) throw DataError("indicator: entries must be 0 or 1");
  }

  const Matrix& matrix() const { return z_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return z_.rows(); }
  std::size_t group_count() const { return columns_.size(); }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> c(columns_.size(), 0);
    for (std::size_t i = 0; i < z_.rows(); ++i)
      for (std::size_t g = 0; g < c.size(); ++g)
        if (z_(i, g) != 0.0) ++c[g];
    return c;
  }

  std::vector<std::size_t> members(std::size_t g) const {
    std::vector<std::size_t> m;
    for (std::size_t i = 0; i < z_.rows(); ++i)
      if (z_(i, g) != 0.0) m.push_back(i);
    return m;
  }

  // Column of the (first) 1 in row i.
  std::size_t group_of(std::size_t i) const {
    for (std::size_t g = 0; g < columns_.size(); ++g)
      if (z_(i, g) != 0.0) return g;
    throw DataError("indicator: row " + std::to_string(i) + " has no group");
  }

  std::size_t index_of(const std::string& label) const {
    auto it = std::find(columns_.begin(), columns_.end(), label);
    if (it == columns_.end()) throw ConfigError("unknown group '" + label + "'");
    return static_cast<std::size_t>(it - columns_.begin());
  }

  // Throws DataError naming the first group without members.
  void require_nonempty() const {
    const auto c = counts();
    for (std::size_t g = 0; g < c.size(); ++g)
      if (c[g] == 0) throw DataError("group '" + columns_[g] + "' has no members");
  }

  // Copy without the given columns.
  GroupIndicatorMatrix without_columns(const std::vector<std::size_t>& drop) const {
    std::vector<std::size_t> keep;
    for (std::size_t g = 0; g < columns_.size(); ++g)
      if (std::find(drop.begin(), drop.end(), g) == drop.end()) keep.push_back(g);
    Matrix z(z_.rows(), keep.size());
    std::vector<std::string> cols;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      cols.push_back(columns_[keep[k]]);
      for (std::size_t i = 0; i < z_.rows(); ++i) z(i, k) = z_(i, keep[k]);
    }
    return GroupIndicatorMatrix(std::move(z), std::move(cols));
  }

 private:
  Matrix z_;
  std::vector<std::string> columns_;
};

inline GroupIndicatorMatrix build_indicator(const EmbeddingDataset& data, const std::string& attribute) {
  const auto& attr = data.schema().attribute(attribute);
  Matrix z(data.size(), attr.groups.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = data[i].attributes.find(attribute);
    if (it == data[i].attributes.end())
      throw DataError("record '" + data[i].id + "' has no label for '" + attribute + "'");
    z(i, data.schema().group_index(attribute, it->second)) = 1.0;
  }
  return GroupIndicatorMatrix(std::move(z), attr.groups);
}

inline GroupIndicatorMatrix build_indicator(const EmbeddingDataset& data, const JointGroupSchema& joint) {
  std::vector<std::size_t> radix;
  for (const auto& a : joint.attributes) radix.push_back(data.schema().group_count(a));
  Matrix z(data.size(), joint.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < joint.attributes.size(); ++k) {
      const auto& name = joint.attributes[k];
      auto it = data[i].attributes.find(name);
      if (it == data[i].attributes.end())
        throw DataError("record '" + data[i].id + "' has no label for '" + name + "'");
      col = col * radix[k] + data.schema().group_index(name, it->second);
    }
    z(i, col) = 1.0;
  }
  return GroupIndicatorMatrix(std::move(z), joint.labels());
}

// Per-attribute one-hot matrices concatenated column-wise. Columns are
// labeled "attribute=group".
inline GroupIndicatorMatrix build_stacked_indicator(const EmbeddingDataset& data,
                                                    const std::vector<std::string>& attributes) {
  std::vector<GroupIndicatorMatrix> parts;
  std::size_t total = 0;
  for (const auto& a : attributes) {
    parts.push_back(build_indicator(data, a));
    total += parts.back().group_count();
  }
  Matrix z(data.size(), total);
  std::vector<std::string> cols;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (const auto& c : parts[k].columns()) cols.push_back(attributes[k] + "=" + c);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t g = 0; g < parts[k].group_count(); ++g) z(i, offset + g) = parts[k].matrix()(i, g);
    offset += parts[k].group_count();
  }
  return GroupIndicatorMatrix(std::move(z), std::move(cols));
}

// Same records with pooled vectors (and tokens) replaced.
inline EmbeddingDataset with_vectors(const EmbeddingDataset& data, const Matrix& x) {
  if (x.rows() != data.size()) throw DataError("with_vectors: row count mismatch");
  std::vector<EmbeddingRecord> recs = data.records();
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].vector.assign(x.row(i).begin(), x.row(i).end());
  return EmbeddingDataset(std::move(recs), x.cols(), data.schema());
}

}  // namespace fairproj
