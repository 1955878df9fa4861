#include "conetest/reports.hpp"

#include <fstream>
#include <system_error>

#include "conetest/errors.hpp"

namespace conetest {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DomainError("cannot open '" + tmp.string() + "' for writing");
    os << content;
    os.flush();
    if (!os) throw DomainError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DomainError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

std::string report_filename(const std::string& experiment, const std::string& fingerprint, const std::string& ext) {
  return experiment + "-" + fingerprint.substr(0, 16) + "." + ext;
}

}  // namespace conetest
