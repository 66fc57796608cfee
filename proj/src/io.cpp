#include "spilloverfree/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace spillfree {

namespace {

struct Token {
  std::string text;
  int column;  // 1-based
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Line reader that tracks positions for error messages.
class LineSource {
 public:
  LineSource(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no_;
    return true;
  }

  /// Next line that is neither blank nor a '%' comment.
  bool next_content(std::vector<Token>& tokens) {
    std::string line;
    while (next(line)) {
      tokens = tokenize(line);
      if (tokens.empty() || tokens.front().text.front() == '%') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(int column, const std::string& what) const {
    throw Error(ErrorCode::ParseError, fmt::format("{}:{}:{}: {}", name_, line_no_, column, what));
  }

  [[noreturn]] void fail_eof(const std::string& what) const {
    throw Error(ErrorCode::ParseError,
                fmt::format("{}:{}:1: unexpected end of input, {}", name_, line_no_ + 1, what));
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string name_;
  int line_no_ = 0;
};

double to_double(const LineSource& src, const Token& t) {
  const char* begin = t.text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    src.fail(t.column, fmt::format("'{}' is not a real number", t.text));
  }
  return v;
}

long long to_integer(const LineSource& src, const Token& t) {
  const char* begin = t.text.c_str();
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    src.fail(t.column, fmt::format("'{}' is not an integer", t.text));
  }
  return v;
}

enum class Storage { General, Symmetric, Skew };

Matrix<double> parse_matrix_from(LineSource& src) {
  std::string header;
  std::vector<Token> h;
  while (true) {
    if (!src.next(header)) src.fail_eof("expected a %%MatrixMarket header");
    h = tokenize(header);
    if (!h.empty()) break;
  }
  if (lower(h[0].text) != "%%matrixmarket") {
    src.fail(h[0].column, "expected a %%MatrixMarket header");
  }
  if (h.size() < 5) src.fail(static_cast<int>(header.size()) + 1, "incomplete header");
  if (lower(h[1].text) != "matrix") src.fail(h[1].column, "only 'matrix' objects are supported");
  const std::string layout = lower(h[2].text);
  if (layout != "coordinate" && layout != "array") {
    src.fail(h[2].column, fmt::format("unknown layout '{}'", h[2].text));
  }
  const std::string field = lower(h[3].text);
  if (field != "real" && field != "integer" && field != "double") {
    src.fail(h[3].column, fmt::format("unsupported field '{}'", h[3].text));
  }
  const std::string sym = lower(h[4].text);
  Storage storage;
  if (sym == "general") {
    storage = Storage::General;
  } else if (sym == "symmetric") {
    storage = Storage::Symmetric;
  } else if (sym == "skew-symmetric") {
    storage = Storage::Skew;
  } else {
    src.fail(h[4].column, fmt::format("unsupported symmetry '{}'", h[4].text));
  }

  std::vector<Token> t;
  if (!src.next_content(t)) src.fail_eof("expected a size line");
  const bool coordinate = layout == "coordinate";
  const std::size_t want = coordinate ? 3 : 2;
  if (t.size() != want) {
    src.fail(t.size() > want ? t[want].column : t.back().column,
             fmt::format("size line needs {} integers", want));
  }
  const long long rows = to_integer(src, t[0]);
  const long long cols = to_integer(src, t[1]);
  if (rows < 0) src.fail(t[0].column, "negative row count");
  if (cols < 0) src.fail(t[1].column, "negative column count");
  if (storage != Storage::General && rows != cols) {
    src.fail(t[0].column, "symmetric storage requires a square matrix");
  }
  Matrix<double> a = Matrix<double>::Zero(rows, cols);

  auto place = [&](Index i, Index j, double v) {
    a(i, j) = v;
    if (i != j) {
      if (storage == Storage::Symmetric) a(j, i) = v;
      if (storage == Storage::Skew) a(j, i) = -v;
    }
  };

  if (coordinate) {
    const long long nnz = to_integer(src, t[2]);
    if (nnz < 0) src.fail(t[2].column, "negative entry count");
    for (long long e = 0; e < nnz; ++e) {
      if (!src.next_content(t)) src.fail_eof(fmt::format("expected {} entries", nnz));
      if (t.size() != 3) src.fail(t.front().column, "coordinate entry needs 'row col value'");
      const long long i = to_integer(src, t[0]);
      const long long j = to_integer(src, t[1]);
      if (i < 1 || i > rows) src.fail(t[0].column, "row index out of range");
      if (j < 1 || j > cols) src.fail(t[1].column, "column index out of range");
      if (storage != Storage::General && i < j) {
        src.fail(t[0].column, "symmetric storage lists only the lower triangle");
      }
      place(i - 1, j - 1, to_double(src, t[2]));
    }
  } else {
    for (long long j = 0; j < cols; ++j) {
      const long long first = storage == Storage::General ? 0 : (storage == Storage::Skew ? j + 1 : j);
      for (long long i = first; i < rows; ++i) {
        if (!src.next_content(t)) src.fail_eof("array data is incomplete");
        if (t.size() != 1) src.fail(t[1].column, "array entry lines hold one value");
        place(i, j, to_double(src, t[0]));
      }
    }
  }
  return a;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IOError, fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  if (!out) throw Error(ErrorCode::IOError, fmt::format("failed writing '{}'", path.string()));
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

Matrix<double> parse_matrix(std::istream& in, const std::string& source) {
  LineSource src(in, source);
  return parse_matrix_from(src);
}

Matrix<double> read_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_matrix(in, path.string());
}

void format_matrix(std::ostream& out, const Matrix<double>& a, MatrixSymmetry symmetry) {
  const bool sym = symmetry == MatrixSymmetry::Symmetric;
  if (sym && a.rows() != a.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "symmetric storage requires a square matrix");
  }
  out << "%%MatrixMarket matrix array real " << (sym ? "symmetric" : "general") << '\n';
  out << a.rows() << ' ' << a.cols() << '\n';
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = sym ? j : 0; i < a.rows(); ++i) {
      const double v = sym ? (i == j ? a(i, j) : (a(i, j) + a(j, i)) / 2.0) : a(i, j);
      out << format_double(v) << '\n';
    }
  }
}

void write_matrix(const Matrix<double>& a, const std::filesystem::path& path,
                  MatrixSymmetry symmetry) {
  std::ostringstream os;
  format_matrix(os, a, symmetry);
  write_text(path, os.str());
}

RealSpectralData<double> parse_spectral(std::istream& in, const std::string& source) {
  LineSource src(in, source);
  std::vector<Token> t;
  auto next = [&](const char* what) {
    while (true) {
      if (!src.next_content(t)) src.fail_eof(what);
      if (t.front().text.front() != '#') return;
    }
  };
  next("expected the 'p s' header");
  if (t.size() != 2) src.fail(t.front().column, "header must be 'p s'");
  const long long p = to_integer(src, t[0]);
  const long long s = to_integer(src, t[1]);
  if (p < 1) src.fail(t[0].column, "p must be at least 1");
  if (s < 0) src.fail(t[1].column, "s must be nonnegative");
  if (2 * s > p) {
    throw Error(ErrorCode::MalformedBlocks,
                fmt::format("{}:{}: {} conjugate pairs do not fit in {} eigenvalues", source,
                            src.line_no(), s, p));
  }
  RealSpectralData<double> d;
  d.s = s;
  d.Lambda = Matrix<double>::Zero(p, p);
  for (long long j = 0; j < s; ++j) {
    next("expected a 'pair' line");
    if (t.size() != 3 || t[0].text != "pair") src.fail(t[0].column, "expected 'pair <alpha> <beta>'");
    const double a = to_double(src, t[1]);
    const double b = to_double(src, t[2]);
    if (!(b > 0)) {
      throw Error(ErrorCode::MalformedBlocks,
                  fmt::format("{}:{}:{}: pair imaginary part must be positive", source,
                              src.line_no(), t[2].column));
    }
    d.Lambda.block<2, 2>(2 * j, 2 * j) << a, b, -b, a;
  }
  for (long long j = 2 * s; j < p; ++j) {
    next("expected a 'real' line");
    if (t.size() != 2 || t[0].text != "real") src.fail(t[0].column, "expected 'real <lambda>'");
    d.Lambda(j, j) = to_double(src, t[1]);
  }
  // Optional eigenvector block.
  std::string line;
  std::streampos mark;
  bool has_x = false;
  while (true) {
    mark = in.tellg();
    if (!src.next(line)) break;
    const auto tk = tokenize(line);
    if (tk.empty()) continue;
    if (lower(tk.front().text) == "%%matrixmarket") {
      has_x = true;
      break;
    }
    if (tk.front().text.front() == '%' || tk.front().text.front() == '#') continue;
    src.fail(tk.front().column, "unexpected content after the eigenvalue list");
  }
  if (has_x) {
    in.clear();
    in.seekg(mark);
    const int offset = src.line_no() - 1;
    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::istringstream sub(rest);
    LineSource xs(sub, source + "(X block after line " + std::to_string(offset) + ")");
    d.X = parse_matrix_from(xs);
    if (d.X.cols() != p) {
      throw Error(ErrorCode::MalformedBlocks,
                  fmt::format("{}: X has {} columns but p = {}", source, d.X.cols(), p));
    }
  } else {
    d.X.resize(0, p);
  }
  check_real_spectral(d);
  return d;
}

RealSpectralData<double> read_spectral(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_spectral(in, path.string());
}

void format_spectral(std::ostream& out, const RealSpectralData<double>& d) {
  check_real_spectral(d);
  out << d.p() << ' ' << d.s << '\n';
  for (Index j = 0; j < d.s; ++j) {
    out << "pair " << format_double(d.Lambda(2 * j, 2 * j)) << ' '
        << format_double(d.Lambda(2 * j, 2 * j + 1)) << '\n';
  }
  for (Index j = 2 * d.s; j < d.p(); ++j) out << "real " << format_double(d.Lambda(j, j)) << '\n';
  if (d.X.rows() > 0) format_matrix(out, d.X);
}

void write_spectral(const RealSpectralData<double>& d, const std::filesystem::path& path) {
  std::ostringstream os;
  format_spectral(os, d);
  write_text(path, os.str());
}

}  // namespace spillfree
