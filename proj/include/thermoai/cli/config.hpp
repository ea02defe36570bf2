#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <type_traits>
#include <vector>

#include "thermoai/core/json_io.hpp"

namespace thermoai::cli {

/// Nested rows, the form configs are written in.
inline Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

/// View of one object in an experiment config. Reads report the full field
/// path on failure; defaulted reads write the default back so the config
/// ends up fully resolved.
class Node {
 public:
  Node(Json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j_->is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "/" + key; }
  Json& json() const { return *j_; }

  bool has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }

  Json& raw(const std::string& key) const {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    return (*j_)[key];
  }

  Node child(const std::string& key) const { return Node(raw(key), field(key)); }

  template <class T>
  T get(const std::string& key) const {
    return convert<T>(raw(key), field(key));
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!has(key)) {
      (*j_)[key] = fallback;
      return fallback;
    }
    return get<T>(key);
  }

  double positive(const std::string& key) const {
    const double v = get<double>(key);
    if (!(v > 0.0)) throw ConfigError(field(key), "must be positive");
    return v;
  }
  double positive(const std::string& key, double fallback) const {
    const double v = get<double>(key, fallback);
    if (!(v > 0.0)) throw ConfigError(field(key), "must be positive");
    return v;
  }
  std::size_t count(const std::string& key) const {
    const auto v = get<std::size_t>(key);
    if (v == 0) throw ConfigError(field(key), "must be at least 1");
    return v;
  }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    const auto v = get<std::size_t>(key, fallback);
    if (v == 0) throw ConfigError(field(key), "must be at least 1");
    return v;
  }

  Matrix matrix(const std::string& key) const { return matrix_from_json(raw(key), field(key)); }
  Matrix matrix(const std::string& key, const Matrix& fallback) const {
    if (!has(key)) (*j_)[key] = matrix_rows(fallback);
    return matrix(key);
  }
  Vector vector(const std::string& key) const { return vector_from_json(raw(key), field(key)); }
  Vector vector(const std::string& key, const Vector& fallback) const {
    if (!has(key)) (*j_)[key] = vector_to_json(fallback);
    return vector(key);
  }

  /// Rejects keys outside `keys` (catches misspelled fields).
  void allow(std::initializer_list<const char*> keys) const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool ok = false;
      for (const char* k : keys) ok = ok || it.key() == k;
      if (!ok) throw ConfigError(field(it.key()), "unknown field");
    }
  }

 private:
  template <class T>
  struct is_vector : std::false_type {};
  template <class T>
  struct is_vector<std::vector<T>> : std::true_type {};

  template <class T>
  static T convert(const Json& v, const std::string& f) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(f, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(f, "expected a string");
      return v.get<std::string>();
    } else if constexpr (is_vector<T>::value) {
      if (!v.is_array()) throw ConfigError(f, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<typename T::value_type>(v[i], f + "/" + std::to_string(i)));
      return out;
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(f, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError(f, "must be finite");
      return static_cast<T>(d);
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(f, "expected a nonnegative integer");
      return v.get<T>();
    } else {
      if (!v.is_number_integer()) throw ConfigError(f, "expected an integer");
      return v.get<T>();
    }
  }

  Json* j_;
  std::string path_;
};

/// Parses a JSON file; parse errors become ConfigErrors on `field`.
inline Json read_json_file(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open file '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(field, "invalid JSON in '" + path.string() + "': " + e.what());
  }
}

/// Replaces top-level string values of `keys` by the JSON document they name
/// (relative to base_dir). The manifest then records content, not paths.
inline void inline_file_references(Json& config, const std::filesystem::path& base_dir,
                                   std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (!config.contains(k) || !config[k].is_string()) continue;
    std::filesystem::path p = config[k].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError(k, "referenced file does not exist: '" + p.string() + "'");
    config[k] = read_json_file(p, k);
  }
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace thermoai::cli
