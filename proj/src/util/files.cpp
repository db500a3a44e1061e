#include "lexmae/util/files.hpp"

#include <fstream>
#include <sstream>

#include "lexmae/util/errors.hpp"

namespace lexmae::util {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw io_error("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw io_error("short write to '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

void require_artifact(const std::filesystem::path& path, const std::string& what, const std::string& produced_by)
{
    if (!std::filesystem::exists(path)) {
        throw pipeline_order_error("missing " + what + " '" + path.string() + "'; run `" + produced_by + "` first");
    }
}

}  // namespace lexmae::util
