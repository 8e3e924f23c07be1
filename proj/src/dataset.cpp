#include "wavebc/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wavebc {

namespace {

constexpr char kMagic[4] = {'R', 'B', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

// FNV-1a 64-bit over the payload bytes.
struct Checksum {
    std::uint64_t state = 1469598103934665603ull;
    void feed(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 1099511628211ull;
        }
    }
};

template <class T>
void put(std::string& out, Checksum& ck, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
    ck.feed(p, sizeof(T));
}

void put_bytes(std::string& out, Checksum& ck, const void* data, std::size_t n) {
    out.append(static_cast<const char*>(data), n);
    ck.feed(data, n);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    Checksum ck;

    template <class T>
    T get() {
        if (pos + sizeof(T) > buf.size()) throw DatasetError("dataset truncated");
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        ck.feed(buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string get_bytes(std::size_t n) {
        if (pos + n > buf.size()) throw DatasetError("dataset truncated");
        std::string s = buf.substr(pos, n);
        ck.feed(buf.data() + pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

bool DatasetContainer::has(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return true;
    return false;
}

const NamedArray& DatasetContainer::get(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw DatasetError("dataset is missing array '" + name + "'");
}

void DatasetContainer::add(const std::string& name, std::vector<std::uint64_t> dims,
                           Eigen::VectorXd data) {
    std::uint64_t total = 1;
    for (auto d : dims) total *= d;
    if (total != static_cast<std::uint64_t>(data.size()))
        throw DimensionError("DatasetContainer::add: dims do not match data size");
    arrays.push_back(NamedArray{name, std::move(dims), std::move(data)});
}

void write_dataset(const std::string& path, const DatasetContainer& ds) {
    std::string out;
    Checksum ck;
    put_bytes(out, ck, kMagic, 4);
    put(out, ck, kVersion);
    put(out, ck, static_cast<std::uint64_t>(ds.manifest.size()));
    put_bytes(out, ck, ds.manifest.data(), ds.manifest.size());
    put(out, ck, static_cast<std::uint32_t>(ds.arrays.size()));
    for (const auto& a : ds.arrays) {
        put(out, ck, static_cast<std::uint32_t>(a.name.size()));
        put_bytes(out, ck, a.name.data(), a.name.size());
        put(out, ck, static_cast<std::uint32_t>(a.dims.size()));
        for (auto d : a.dims) put(out, ck, d);
        put_bytes(out, ck, a.data.data(), a.data.size() * sizeof(double));
    }
    const std::uint64_t sum = ck.state;
    out.append(reinterpret_cast<const char*>(&sum), sizeof sum);

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DatasetError("cannot open '" + tmp + "' for writing");
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw DatasetError("short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

DatasetContainer read_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open dataset '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t) + sizeof(std::uint64_t))
        throw DatasetError("dataset too short");

    Reader r{buf, 0, {}};
    const std::string magic = r.get_bytes(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw DatasetError("bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) throw DatasetError("unsupported dataset version");
    const auto mlen = r.get<std::uint64_t>();
    DatasetContainer ds;
    ds.manifest = r.get_bytes(mlen);
    const auto n_arrays = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
        NamedArray a;
        const auto nlen = r.get<std::uint32_t>();
        a.name = r.get_bytes(nlen);
        const auto ndims = r.get<std::uint32_t>();
        std::uint64_t total = 1;
        for (std::uint32_t d = 0; d < ndims; ++d) {
            a.dims.push_back(r.get<std::uint64_t>());
            total *= a.dims.back();
        }
        if (r.pos + total * sizeof(double) > buf.size()) throw DatasetError("dataset truncated");
        a.data.resize(static_cast<Eigen::Index>(total));
        std::memcpy(a.data.data(), buf.data() + r.pos, total * sizeof(double));
        r.ck.feed(buf.data() + r.pos, total * sizeof(double));
        r.pos += total * sizeof(double);
        ds.arrays.push_back(std::move(a));
    }
    const std::uint64_t expected = r.ck.state;
    if (r.pos + sizeof(std::uint64_t) != buf.size()) throw DatasetError("trailing bytes in dataset");
    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + r.pos, sizeof stored);
    if (stored != expected) throw DatasetError("checksum mismatch");
    return ds;
}

DatasetContainer dataset_from_response(const RunConfig& cfg, const ResponseData& R) {
    DatasetContainer ds;
    std::string manifest = config_echo(cfg);
    manifest += "flags.noise_level = " + std::to_string(R.synthetic_noise_level) + "\n";
    manifest += std::string("flags.nonlocal_source = ") + (R.nonlocal_source ? "true" : "false") + "\n";
    manifest += "provenance.tool = wavebc\n";
    ds.manifest = manifest;

    const int ng = R.control.n_gamma;
    const int ns = R.n_slices();
    Eigen::VectorXd flat(static_cast<Eigen::Index>(ns) * ng * ng);
    for (int s = 0; s < ns; ++s)
        for (int j = 0; j < ng; ++j)
            for (int i = 0; i < ng; ++i)
                flat(static_cast<Eigen::Index>(s) * ng * ng + j * ng + i) = R.kernel[s](j, i);
    ds.add("kernel", {static_cast<std::uint64_t>(ns), static_cast<std::uint64_t>(ng),
                      static_cast<std::uint64_t>(ng)},
           std::move(flat));
    return ds;
}

ResponseData response_from_dataset(const DatasetContainer& ds, RunConfig& cfg_out) {
    // The manifest may carry flags.* and provenance.* keys beyond the config echo.
    std::string cfg_text;
    std::istringstream in(ds.manifest);
    std::string line;
    double noise_level = 0.0;
    bool nonlocal = false;
    while (std::getline(in, line)) {
        if (line.rfind("flags.noise_level", 0) == 0) {
            noise_level = std::stod(line.substr(line.find('=') + 1));
        } else if (line.rfind("flags.nonlocal_source", 0) == 0) {
            nonlocal = line.find("true") != std::string::npos;
        } else if (line.rfind("provenance.", 0) == 0) {
            continue;
        } else {
            cfg_text += line + "\n";
        }
    }
    cfg_out = parse_config_text(cfg_text);

    const NamedArray& k = ds.get("kernel");
    if (k.dims.size() != 3) throw DatasetError("kernel must be a rank-3 array");
    const auto ns = static_cast<int>(k.dims[0]);
    const auto ng = static_cast<int>(k.dims[1]);
    if (static_cast<int>(k.dims[2]) != ng) throw DatasetError("kernel slices must be square");
    if (ng != cfg_out.n_gamma || ns != 2 * cfg_out.n_tau)
        throw DatasetError("kernel dimensions do not match the manifest grid");

    ResponseData R;
    R.T = cfg_out.T;
    R.control = cfg_out.make_control_grid();
    R.synthetic_noise_level = noise_level;
    R.nonlocal_source = nonlocal;
    R.kernel.assign(ns, Eigen::MatrixXd::Zero(ng, ng));
    for (int s = 0; s < ns; ++s)
        for (int j = 0; j < ng; ++j)
            for (int i = 0; i < ng; ++i)
                R.kernel[s](j, i) = k.data(static_cast<Eigen::Index>(s) * ng * ng + j * ng + i);
    R.check();
    return R;
}

}  // namespace wavebc
