#include "adi/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace adi {

namespace fs = std::filesystem;

void atomic_write(const fs::path& path, const void* data, size_t size) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!f) throw std::runtime_error("atomic_write: short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void atomic_write(const fs::path& path, const std::string& bytes) {
    atomic_write(path, bytes.data(), bytes.size());
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_file: cannot open " + path.string());
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return s;
}

void write_f64_blob(const fs::path& path, const Array& a) {
    // x86-64 doubles are already little-endian IEEE-754
    atomic_write(path, a.data.data(), a.data.size() * sizeof(double));
}

std::vector<double> read_f64_blob(const fs::path& path) {
    std::string bytes = read_file(path);
    if (bytes.size() % sizeof(double) != 0)
        throw std::runtime_error("read_f64_blob: " + path.string() + " size is not a multiple of 8");
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

void write_ppm(const fs::path& path, const Array& img) {
    if (img.ndim() != 3 || img.shape[0] != 3)
        throw std::invalid_argument("write_ppm: expected {3,H,W} image, got " + shape_str(img.shape));
    const int64_t H = img.shape[1], W = img.shape[2];
    std::string out = "P6\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
    out.reserve(out.size() + static_cast<size_t>(3 * H * W));
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x)
            for (int64_t c = 0; c < 3; ++c) {
                double v = img.data[static_cast<size_t>((c * H + y) * W + x)];
                v = std::min(1.0, std::max(0.0, v));
                out.push_back(static_cast<char>(std::lround(v * 255.0)));
            }
    atomic_write(path, out);
}

}  // namespace adi
