#include "lf2w/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace lf2w {

namespace {

constexpr char kMagic[4] = {'L', 'F', '2', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

void put_string(std::string& buf, const std::string& s) {
    put_u64(buf, s.size());
    buf.append(s);
}

struct Reader {
    const std::string& buf;
    std::size_t at = 0;

    void need(std::size_t n) const {
        if (at + n > buf.size()) throw checkpoint_error("checkpoint: truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[at++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(buf[at + i])) << (8 * i);
        at += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(buf[at + i])) << (8 * i);
        at += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = buf.substr(at, n);
        at += n;
        return s;
    }
};

void put_tensor(std::string& buf, const std::string& name, const Matrix& m, Precision prec) {
    put_string(buf, name);
    put_u8(buf, prec == Precision::f32 ? 0 : 1);
    put_u32(buf, 2);  // rank
    put_u64(buf, m.rows());
    put_u64(buf, m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (prec == Precision::f32)
            put_f32(buf, static_cast<float>(m.data()[i]));
        else
            put_f64(buf, m.data()[i]);
    }
}

Matrix read_tensor(Reader& r, std::string& name) {
    name = r.str();
    const std::uint8_t prec = r.u8();
    const std::uint32_t rank = r.u32();
    if (rank != 2) throw checkpoint_error("checkpoint: unsupported tensor rank");
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = prec == 0 ? static_cast<double>(r.f32()) : r.f64();
    return m;
}

} // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    std::uint64_t h = seed;
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_string(buf, ckpt.config_json);

    const auto names = ckpt.params.names();
    put_u64(buf, names.size());
    for (const auto& name : names)
        put_tensor(buf, name, ckpt.params.get(name), ckpt.precision);

    put_u8(buf, ckpt.optimizer.has_value() ? 1 : 0);
    if (ckpt.optimizer) {
        put_u64(buf, ckpt.optimizer->step);
        put_u64(buf, ckpt.optimizer->m.size());
        for (const auto& [name, m] : ckpt.optimizer->m) put_tensor(buf, name, m, ckpt.precision);
        for (const auto& [name, v] : ckpt.optimizer->v) put_tensor(buf, name, v, ckpt.precision);
    }

    put_u64(buf, fnv1a64(buf.data(), buf.size()));

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw checkpoint_error("checkpoint: cannot open " + path + " for writing");
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw checkpoint_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw checkpoint_error("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    if (buf.size() < 16) throw checkpoint_error("checkpoint: file too small");
    const std::size_t body = buf.size() - 8;
    Reader tail{buf, body};
    const std::uint64_t stored = tail.u64();
    if (stored != fnv1a64(buf.data(), body))
        throw checkpoint_error("checkpoint: checksum mismatch");

    Reader r{buf, 0};
    r.need(4);
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw checkpoint_error("checkpoint: bad magic");
    r.at = 4;
    const std::uint32_t version = r.u32();
    if (version != kVersion) throw checkpoint_error("checkpoint: unsupported version");

    Checkpoint ckpt;
    ckpt.config_json = r.str();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string name;
        Matrix m = read_tensor(r, name);
        ckpt.params.add(name, m);
    }
    if (r.u8() == 1) {
        OptimizerState opt;
        opt.step = r.u64();
        const std::uint64_t cnt = r.u64();
        for (std::uint64_t i = 0; i < cnt; ++i) {
            std::string name;
            Matrix m = read_tensor(r, name);
            opt.m.emplace(std::move(name), std::move(m));
        }
        for (std::uint64_t i = 0; i < cnt; ++i) {
            std::string name;
            Matrix m = read_tensor(r, name);
            opt.v.emplace(std::move(name), std::move(m));
        }
        ckpt.optimizer = std::move(opt);
    }
    return ckpt;
}

} // namespace lf2w
