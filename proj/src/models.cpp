#include "gazecast/models.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "gazecast/errors.hpp"

namespace gazecast {

namespace {

void write_u32_le(std::ofstream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32_le(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_string(std::ofstream& os, const std::string& s) {
    write_u32_le(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& is) {
    uint32_t n = read_u32_le(is);
    if (n > 4096) throw ParseError("checkpoint: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}

}  // namespace

std::string arch_name(Arch a) { return a == Arch::Lstm ? "lstm" : "tsmixer"; }

Arch arch_from_name(const std::string& name) {
    if (name == "lstm") return Arch::Lstm;
    if (name == "tsmixer") return Arch::Tsmixer;
    throw std::invalid_argument("unknown architecture '" + name + "' (expected lstm or tsmixer)");
}

MatF predict(const ParamSetF& params, const MatF& window) {
    TapeF tape;
    auto bp = bind_params(tape, params);
    auto out = model_forward(tape, bp, tape.constant(window));
    return tape.value(out);
}

void save_checkpoint(const ParamSetF& params, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("save_checkpoint: cannot open " + path);
    os.write("GZCK", 4);
    write_u32_le(os, 1);
    write_string(os, arch_name(params.arch));
    write_u32_le(os, static_cast<uint32_t>(params.dims.input_dim));
    write_u32_le(os, static_cast<uint32_t>(params.dims.hidden));
    write_u32_le(os, static_cast<uint32_t>(params.dims.past));
    write_u32_le(os, static_cast<uint32_t>(params.dims.horizon));
    write_u32_le(os, static_cast<uint32_t>(params.dims.blocks));
    write_u32_le(os, static_cast<uint32_t>(params.mats.size()));
    for (const auto& [name, m] : params.mats) {
        write_string(os, name);
        write_u32_le(os, static_cast<uint32_t>(m.rows));
        write_u32_le(os, static_cast<uint32_t>(m.cols));
        for (float v : m.data) {
            uint32_t u;
            std::memcpy(&u, &v, 4);
            write_u32_le(os, u);
        }
    }
    if (!os) throw ParseError("save_checkpoint: write failed for " + path);
}

ParamSetF load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("load_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::strncmp(magic, "GZCK", 4) != 0)
        throw ParseError("load_checkpoint: bad magic in " + path);
    uint32_t version = read_u32_le(is);
    if (version != 1)
        throw ParseError("load_checkpoint: unsupported version " + std::to_string(version));
    ParamSetF p;
    p.arch = arch_from_name(read_string(is));
    p.dims.input_dim = static_cast<int>(read_u32_le(is));
    p.dims.hidden = static_cast<int>(read_u32_le(is));
    p.dims.past = static_cast<int>(read_u32_le(is));
    p.dims.horizon = static_cast<int>(read_u32_le(is));
    p.dims.blocks = static_cast<int>(read_u32_le(is));
    uint32_t n = read_u32_le(is);
    if (!is || n > 10000) throw ParseError("load_checkpoint: corrupt matrix count in " + path);
    for (uint32_t i = 0; i < n; ++i) {
        std::string name = read_string(is);
        int rows = static_cast<int>(read_u32_le(is));
        int cols = static_cast<int>(read_u32_le(is));
        if (!is || rows <= 0 || cols <= 0 || static_cast<int64_t>(rows) * cols > (1 << 28))
            throw ParseError("load_checkpoint: corrupt shape for '" + name + "' in " + path);
        MatF m(rows, cols);
        for (float& v : m.data) {
            uint32_t u = read_u32_le(is);
            std::memcpy(&v, &u, 4);
        }
        p.mats.emplace_back(std::move(name), std::move(m));
    }
    if (!is) throw ParseError("load_checkpoint: truncated file " + path);
    return p;
}

}  // namespace gazecast
