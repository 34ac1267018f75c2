#include "adi/checkpoint.hpp"

#include "adi/io.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

namespace adi {

static constexpr char kMagic[8] = {'A', 'D', 'I', 'C', 'K', 'P', 'T', '1'};
static constexpr char kVersion = 0x01;

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
    std::string out(kMagic, sizeof(kMagic));
    out.push_back(kVersion);
    out += "params " + std::to_string(params.size()) + "\n";
    for (size_t i = 0; i < params.size(); ++i) {
        out += params.name(i);
        for (int64_t d : params.value(i).shape) out += " " + std::to_string(d);
        out += "\n";
    }
    out += "end\n";
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& v = params.value(i).data;
        size_t off = out.size();
        out.resize(off + v.size() * sizeof(double));
        std::memcpy(out.data() + off, v.data(), v.size() * sizeof(double));
    }
    atomic_write(path, out);
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    if (bytes.size() < sizeof(kMagic) + 1 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: " + path.string() + " has no ADICKPT1 magic");
    if (bytes[sizeof(kMagic)] != kVersion)
        throw std::runtime_error("checkpoint: unsupported version byte in " + path.string());

    size_t pos = sizeof(kMagic) + 1;
    auto read_line = [&]() {
        size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos) throw std::runtime_error("checkpoint: truncated header in " + path.string());
        std::string line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };

    std::istringstream head(read_line());
    std::string word;
    size_t count = 0;
    head >> word >> count;
    if (word != "params") throw std::runtime_error("checkpoint: malformed manifest in " + path.string());

    ParamSet params;
    std::vector<std::pair<std::string, Shape>> manifest;
    for (size_t i = 0; i < count; ++i) {
        std::istringstream ls(read_line());
        std::string name;
        ls >> name;
        Shape shape;
        int64_t d;
        while (ls >> d) shape.push_back(d);
        if (name.empty() || shape.empty())
            throw std::runtime_error("checkpoint: malformed manifest line in " + path.string());
        manifest.emplace_back(name, shape);
    }
    if (read_line() != "end") throw std::runtime_error("checkpoint: manifest not terminated in " + path.string());

    for (auto& [name, shape] : manifest) {
        const size_t n = static_cast<size_t>(shape_numel(shape));
        if (pos + n * sizeof(double) > bytes.size())
            throw std::runtime_error("checkpoint: truncated data for " + name + " in " + path.string());
        std::vector<double> data(n);
        std::memcpy(data.data(), bytes.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
        params.add(name, Array(shape, std::move(data)));
    }
    return params;
}

}  // namespace adi
