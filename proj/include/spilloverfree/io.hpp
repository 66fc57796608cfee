#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spilloverfree/spectral.hpp"
#include "spilloverfree/types.hpp"

namespace spillfree {

enum class MatrixSymmetry { General, Symmetric };

/// Matrix Market reader: coordinate or array layout, real or integer field,
/// general, symmetric or skew-symmetric storage. `source` names the input in
/// ParseError messages, which carry line and column.
Matrix<double> parse_matrix(std::istream& in, const std::string& source);
Matrix<double> read_matrix(const std::filesystem::path& path);

/// Array layout, 17 significant digits. Symmetric storage writes the lower
/// triangle of (A + A^T) / 2.
void format_matrix(std::ostream& out, const Matrix<double>& a,
                   MatrixSymmetry symmetry = MatrixSymmetry::General);
void write_matrix(const Matrix<double>& a, const std::filesystem::path& path,
                  MatrixSymmetry symmetry = MatrixSymmetry::General);

/// Spectral text format:
///   p s
///   pair <alpha> <beta>     (s lines)
///   real <lambda>           (p - 2s lines)
///   <Matrix Market array block holding X, n x p>   (optional)
/// Without the X block the eigenvector matrix is 0 x p.
RealSpectralData<double> parse_spectral(std::istream& in, const std::string& source);
RealSpectralData<double> read_spectral(const std::filesystem::path& path);
void format_spectral(std::ostream& out, const RealSpectralData<double>& d);
void write_spectral(const RealSpectralData<double>& d, const std::filesystem::path& path);

/// Ordered key=value report. The first line is a timestamp comment; every
/// other line depends only on the inputs.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, long value) { set(key, static_cast<long long>(value)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::string* get(const std::string& key) const;

  std::string body() const;
  /// Body preceded by the timestamp header.
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Key/value entries of a report file; comment lines are skipped.
std::map<std::string, std::string> read_report(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace spillfree
