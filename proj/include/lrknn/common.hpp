#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lrknn {

inline constexpr std::string_view version = "0.1.0";

/// Error in a domain operation (bad input data, degenerate fit, ...).
/// Carries the name of the module that raised it; what() is
/// "<module>: <message>".
class domain_error : public std::runtime_error {
public:
  domain_error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

private:
  std::string module_;
};

/// Shortest decimal string that round-trips to the same binary64 value.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Write a whole file atomically: write to a sibling temp file, then rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw domain_error("io", "cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw domain_error("io", "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

} // namespace lrknn
