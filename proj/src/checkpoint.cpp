#include "oazr/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace oazr {

namespace {

constexpr char kMagic[] = "OAZR1\n";
constexpr size_t kMagicLen = 6;

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32(std::string& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
    }
    uint32_t u32() {
        need(4);
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 4;
        return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
               (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    }
    float f32() {
        const uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
    std::string out;
    out.append(kMagic, kMagicLen);
    const std::vector<int> order = store.indices_by_name();
    put_u32(out, static_cast<uint32_t>(order.size()));
    for (int i : order) {
        const std::string& name = store.name(i);
        const Tensor& t = store.value(i);
        put_u32(out, static_cast<uint32_t>(name.size()));
        out.append(name);
        put_u32(out, static_cast<uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    }
    for (int i : order) {
        const Tensor& t = store.value(i);
        for (double v : t.data) put_f32(out, static_cast<float>(v));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    if (r.bytes(kMagicLen) != std::string(kMagic, kMagicLen))
        throw std::runtime_error("checkpoint: bad magic");
    const uint32_t count = r.u32();

    struct Entry {
        std::string name;
        std::vector<int> shape;
    };
    std::vector<Entry> manifest;
    manifest.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        Entry e;
        const uint32_t name_len = r.u32();
        e.name = r.bytes(name_len);
        const uint32_t rank = r.u32();
        if (rank > 8) throw std::runtime_error("checkpoint: implausible rank");
        for (uint32_t d = 0; d < rank; ++d) e.shape.push_back(static_cast<int>(r.u32()));
        manifest.push_back(std::move(e));
    }

    ParamStore store;
    for (const Entry& e : manifest) {
        Tensor t = Tensor::zeros(e.shape);
        for (double& v : t.data) v = static_cast<double>(r.f32());
        store.add(e.name, std::move(t));
    }
    if (r.pos != buf.size()) throw std::runtime_error("checkpoint: trailing bytes");
    return store;
}

}  // namespace oazr
