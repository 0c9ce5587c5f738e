#include <hashclust/bytes.hpp>
#include <hashclust/error.hpp>

#include <fstream>
#include <iterator>
#include <system_error>

namespace hashclust {

byte_buffer read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    byte_buffer data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw error(errc::io_error, "read failed: " + path.string());
    }
    return data;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw error(errc::io_error, "cannot create " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw error(errc::io_error, "write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw error(errc::io_error, "cannot rename onto " + path.string());
    }
}

} // namespace hashclust
