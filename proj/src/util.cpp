#include "dfx/util.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <fcntl.h>
#include <fstream>
#include <sstream>

#include "dfx/error.hpp"

namespace dfx::util {

std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr) != 1)
    throw IoFailure("sha256 digest computation failed");
  static const char* hexchars = "0123456789abcdef";
  std::string out(digest_len * 2, '0');
  for (unsigned int i = 0; i < digest_len; ++i) {
    out[2 * i] = hexchars[digest[i] >> 4];
    out[2 * i + 1] = hexchars[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  return sha256_hex(bytes.data(), bytes.size());
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoFailure("cannot open for reading: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open for writing: " + p.string());
  out << content;
  if (!out) throw IoFailure("write failed: " + p.string());
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoFailure("cannot open for reading: " + p.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

void write_binary_file(const std::filesystem::path& p, const void* data, std::size_t len) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open for writing: " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!out) throw IoFailure("write failed: " + p.string());
}

DirLock::DirLock(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  lockfile_ = dir / ".dfx.lock";
  for (int attempt = 0; attempt < 2; ++attempt) {
    int fd = ::open(lockfile_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      std::string pid = std::to_string(::getpid()) + "\n";
      ssize_t n = ::write(fd, pid.data(), pid.size());
      (void)n;
      ::close(fd);
      held_ = true;
      return;
    }
    // Reclaim only if the holding pid is gone.
    std::ifstream in(lockfile_);
    long pid = 0;
    if (in >> pid && pid > 0 && ::kill(static_cast<pid_t>(pid), 0) == 0)
      throw IoFailure("workdir locked by pid " + std::to_string(pid) + ": " + lockfile_.string());
    std::error_code ec;
    std::filesystem::remove(lockfile_, ec);
  }
  throw IoFailure("could not acquire lock: " + lockfile_.string());
}

DirLock::~DirLock() {
  if (held_) {
    std::error_code ec;
    std::filesystem::remove(lockfile_, ec);
  }
}

}  // namespace dfx::util
