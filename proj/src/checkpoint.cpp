#include "kernclass/checkpoint.hpp"

#include <cstring>

#include "io_util.hpp"
#include "kernclass/errors.hpp"

namespace kernclass {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& data, std::size_t& pos) {
    if (pos + 4 > data.size()) throw IoError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
}

}  // namespace

void save_tensors(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    std::string out = "KCP1";
    put_u32(out, 1);  // format version
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(tensor->rank()));
        for (int d : tensor->shape()) put_u32(out, static_cast<std::uint32_t>(d));
        std::size_t bytes = tensor->size() * sizeof(double);
        std::size_t offset = out.size();
        out.resize(offset + bytes);
        std::memcpy(out.data() + offset, tensor->data(), bytes);
    }
    detail::atomic_write_file(path, out);
}

std::vector<std::pair<std::string, Tensor>> load_tensors(const std::filesystem::path& path) {
    std::string data = detail::read_file(path);
    if (data.size() < 4 || data.compare(0, 4, "KCP1") != 0)
        throw IoError(path.string() + ": not a checkpoint file");
    std::size_t pos = 4;
    if (get_u32(data, pos) != 1) throw IoError(path.string() + ": unsupported checkpoint version");

    std::uint32_t count = get_u32(data, pos);
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = get_u32(data, pos);
        if (pos + name_len > data.size()) throw IoError("checkpoint truncated");
        std::string name = data.substr(pos, name_len);
        pos += name_len;
        std::uint32_t rank = get_u32(data, pos);
        if (rank > 8) throw IoError("checkpoint rank out of range");
        std::vector<int> shape;
        std::size_t size = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape.push_back(static_cast<int>(get_u32(data, pos)));
            size *= static_cast<std::size_t>(shape.back());
        }
        std::size_t bytes = size * sizeof(double);
        if (pos + bytes > data.size()) throw IoError("checkpoint truncated");
        std::vector<double> values(size);
        std::memcpy(values.data(), data.data() + pos, bytes);
        pos += bytes;
        out.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
    }
    if (pos != data.size()) throw IoError(path.string() + ": trailing bytes in checkpoint");
    return out;
}

}  // namespace kernclass
