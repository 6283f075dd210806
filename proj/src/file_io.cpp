#include "aerobroker/file_io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace aerobroker::io {

namespace {

class Fd {
public:
    Fd(const std::filesystem::path& path, int flags) : fd_(::open(path.c_str(), flags, 0644)) {
        if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "open " + path.string());
    }
    ~Fd() {
        if (fd_ >= 0) ::close(fd_);
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    int get() const { return fd_; }

private:
    int fd_;
};

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void append_durable(const std::filesystem::path& path, std::string_view bytes) {
    Fd fd(path, O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC);
    const char* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        ssize_t n = ::write(fd.get(), p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::system_error(errno, std::generic_category(), "write " + path.string());
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd.get()) != 0) throw std::system_error(errno, std::generic_category(), "fdatasync");
}

void truncate_durable(const std::filesystem::path& path, std::uintmax_t size) {
    Fd fd(path, O_WRONLY | O_CLOEXEC);
    if (::ftruncate(fd.get(), static_cast<off_t>(size)) != 0)
        throw std::system_error(errno, std::generic_category(), "ftruncate " + path.string());
    if (::fdatasync(fd.get()) != 0) throw std::system_error(errno, std::generic_category(), "fdatasync");
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

void put_u32_be(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v >> 24));
    out.push_back(static_cast<char>(v >> 16));
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v));
}

std::uint32_t get_u32_be(std::string_view b) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(b[0])) << 24 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[1])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[2])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[3]));
}

}  // namespace aerobroker::io
