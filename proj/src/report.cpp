#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "spilloverfree/io.hpp"

namespace spillfree {

void Report::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos) {
    throw Error(ErrorCode::Usage, fmt::format("invalid report key '{}'", key));
  }
  std::string clean = value;
  for (char& c : clean) {
    if (c == '\n') c = ' ';
  }
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = clean;
      return;
    }
  }
  entries_.emplace_back(key, clean);
}

void Report::set(const std::string& key, double value) { set(key, format_double(value)); }
void Report::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void Report::set(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

const std::string* Report::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::string Report::body() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

std::string Report::str() const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return std::string("# generated ") + stamp + "\n" + body();
}

void Report::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IOError, fmt::format("cannot open '{}' for writing", path.string()));
  out << str();
  if (!out) throw Error(ErrorCode::IOError, fmt::format("failed writing '{}'", path.string()));
}

std::map<std::string, std::string> read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, fmt::format("cannot open '{}' for reading", path.string()));
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}:1: expected key=value", path.string(), line_no));
    }
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IOError, "SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOError, fmt::format("cannot open '{}' for reading", path.string()));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

}  // namespace spillfree
