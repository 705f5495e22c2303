#include "tr/io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <utility>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "binary tensor formats are little-endian; big-endian hosts are unsupported");

namespace tr {

namespace {

constexpr std::uint32_t kSharedFlag = 1u;

void write_bytes(std::ofstream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw IoError("write: stream failure");
}

void read_bytes(std::ifstream& is, void* p, std::size_t n, const std::string& path) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n)) {
        throw IoError("read: short read in " + path);
    }
}

template <typename T>
void write_pod(std::ofstream& os, T v) {
    write_bytes(os, &v, sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is, const std::string& path) {
    T v;
    read_bytes(is, &v, sizeof(T), path);
    return v;
}

void write_tensor_body(std::ofstream& os, const DenseTensor& t) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.order()));
    for (std::int64_t n : t.dims()) write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(n));
    for (const Complex& v : t.data()) {
        write_pod<double>(os, v.real());
        write_pod<double>(os, v.imag());
    }
}

DenseTensor read_tensor_body(std::ifstream& is, const std::string& path) {
    const std::uint32_t d = read_pod<std::uint32_t>(is, path);
    if (d == 0 || d > 64) throw IoError("read: implausible tensor order in " + path);
    Dims dims(d);
    for (std::uint32_t k = 0; k < d; ++k) {
        dims[k] = static_cast<std::int64_t>(read_pod<std::uint64_t>(is, path));
        if (dims[k] <= 0) throw IoError("read: non-positive mode size in " + path);
    }
    const std::int64_t total = dims_product(dims);
    std::vector<Complex> data(static_cast<std::size_t>(total));
    for (std::int64_t i = 0; i < total; ++i) {
        const double re = read_pod<double>(is, path);
        const double im = read_pod<double>(is, path);
        data[static_cast<std::size_t>(i)] = Complex(re, im);
    }
    return DenseTensor(std::move(dims), std::move(data));
}

void check_magic(std::ifstream& is, const char* magic, const std::string& path) {
    char buf[4];
    read_bytes(is, buf, 4, path);
    for (int i = 0; i < 4; ++i) {
        if (buf[i] != magic[i]) {
            throw IoError("read: bad magic in " + path + " (expected " + magic + ")");
        }
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("write: cannot open " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read: cannot open " + path);
    return is;
}

nlohmann::json tensor_to_json(const DenseTensor& t) {
    nlohmann::json j;
    j["dims"] = t.dims();
    nlohmann::json data = nlohmann::json::array();
    for (const Complex& v : t.data()) data.push_back({v.real(), v.imag()});
    j["data"] = std::move(data);
    return j;
}

DenseTensor tensor_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("dims") || !j.contains("data")) {
        throw IoError("json: missing dims/data in " + path);
    }
    Dims dims = j.at("dims").get<Dims>();
    const std::int64_t total = dims_product(dims);
    const nlohmann::json& data = j.at("data");
    if (static_cast<std::int64_t>(data.size()) != total) {
        throw IoError("json: data length does not match dims in " + path);
    }
    std::vector<Complex> values(static_cast<std::size_t>(total));
    for (std::int64_t i = 0; i < total; ++i) {
        const auto& pair = data[static_cast<std::size_t>(i)];
        if (!pair.is_array() || pair.size() != 2) {
            throw IoError("json: entries must be [re, im] pairs in " + path);
        }
        values[static_cast<std::size_t>(i)] =
            Complex(pair[0].get<double>(), pair[1].get<double>());
    }
    return DenseTensor(std::move(dims), std::move(values));
}

}  // namespace

RingDecomposition SharedCoreRing::to_ring() const {
    if (order < 2) throw DimensionError("SharedCoreRing: order must be at least 2");
    std::vector<DenseTensor> cores(static_cast<std::size_t>(order), core);
    return RingDecomposition(std::move(cores));
}

void write_trt(const std::string& path, const DenseTensor& t) {
    std::ofstream os = open_out(path);
    write_bytes(os, "TRT1", 4);
    write_tensor_body(os, t);
}

DenseTensor read_trt(const std::string& path) {
    std::ifstream is = open_in(path);
    check_magic(is, "TRT1", path);
    return read_tensor_body(is, path);
}

void write_trc(const std::string& path, const RingDecomposition& ring) {
    std::ofstream os = open_out(path);
    write_bytes(os, "TRC1", 4);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ring.order()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ring.rank()));
    write_pod<std::uint32_t>(os, 0u);
    for (std::int64_t k = 0; k < ring.order(); ++k) write_tensor_body(os, ring.core(k));
}

void write_trc(const std::string& path, const SharedCoreRing& shared) {
    std::ofstream os = open_out(path);
    write_bytes(os, "TRC1", 4);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(shared.order));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(shared.core.dims()[1]));
    write_pod<std::uint32_t>(os, kSharedFlag);
    write_tensor_body(os, shared.core);
}

StoredDecomposition read_trc(const std::string& path) {
    std::ifstream is = open_in(path);
    check_magic(is, "TRC1", path);
    const std::uint32_t d = read_pod<std::uint32_t>(is, path);
    const std::uint32_t r = read_pod<std::uint32_t>(is, path);
    const std::uint32_t flags = read_pod<std::uint32_t>(is, path);
    StoredDecomposition out;
    if (flags & kSharedFlag) {
        SharedCoreRing s;
        s.order = d;
        s.core = read_tensor_body(is, path);
        if (s.core.dims().size() != 3 || s.core.dims()[1] != r || s.core.dims()[2] != r) {
            throw IoError("read: shared core shape mismatch in " + path);
        }
        out.shared = std::move(s);
        return out;
    }
    std::vector<DenseTensor> cores;
    cores.reserve(d);
    for (std::uint32_t k = 0; k < d; ++k) cores.push_back(read_tensor_body(is, path));
    RingDecomposition ring(std::move(cores));
    if (ring.rank() != static_cast<std::int64_t>(r)) {
        throw IoError("read: recorded rank does not match cores in " + path);
    }
    out.ring = std::move(ring);
    return out;
}

void write_tensor_json(const std::string& path, const DenseTensor& t) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("write: cannot open " + path);
    os << tensor_to_json(t).dump(2) << "\n";
    if (!os) throw IoError("write: stream failure on " + path);
}

DenseTensor read_tensor_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("json: parse error in " + path + ": " + e.what());
    }
    return tensor_from_json(j, path);
}

void write_decomposition_json(const std::string& path, const StoredDecomposition& d) {
    nlohmann::json j;
    if (d.is_shared()) {
        j["shared"] = true;
        j["order"] = d.shared->order;
        j["rank"] = d.shared->core.dims()[1];
        j["cores"] = nlohmann::json::array({tensor_to_json(d.shared->core)});
    } else if (d.ring) {
        j["shared"] = false;
        j["order"] = d.ring->order();
        j["rank"] = d.ring->rank();
        nlohmann::json cores = nlohmann::json::array();
        for (std::int64_t k = 0; k < d.ring->order(); ++k) {
            cores.push_back(tensor_to_json(d.ring->core(k)));
        }
        j["cores"] = std::move(cores);
    } else {
        throw ValidationError("write_decomposition_json: empty decomposition");
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("write: cannot open " + path);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write: stream failure on " + path);
}

StoredDecomposition read_decomposition_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("json: parse error in " + path + ": " + e.what());
    }
    StoredDecomposition out;
    const bool shared = j.value("shared", false);
    if (!j.contains("cores") || !j.at("cores").is_array() || j.at("cores").empty()) {
        throw IoError("json: missing cores in " + path);
    }
    if (shared) {
        SharedCoreRing s;
        s.order = j.at("order").get<std::int64_t>();
        s.core = tensor_from_json(j.at("cores")[0], path);
        out.shared = std::move(s);
        return out;
    }
    std::vector<DenseTensor> cores;
    for (const auto& cj : j.at("cores")) cores.push_back(tensor_from_json(cj, path));
    out.ring = RingDecomposition(std::move(cores));
    return out;
}

namespace {

nlohmann::json pair_to_json(const ProbePair& p) {
    nlohmann::json j;
    j["first"] = p.first;
    j["second"] = p.second;
    j["gamma"] = p.gamma;
    return j;
}

ProbePair pair_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("first") || !j.contains("second") || !j.contains("gamma")) {
        throw IoError("json: probe pair needs first/second/gamma in " + path);
    }
    ProbePair p;
    p.first = j.at("first").get<MultiIndex>();
    p.second = j.at("second").get<MultiIndex>();
    p.gamma = j.at("gamma").get<std::vector<std::int64_t>>();
    return p;
}

}  // namespace

void write_probe_config_json(const std::string& path, const ProbeConfig& cfg) {
    nlohmann::json j;
    j["pair_a"] = pair_to_json(cfg.pair_a);
    j["pair_b"] = pair_to_json(cfg.pair_b);
    j["companion"] = cfg.companion;
    j["mode_gammas"] = cfg.mode_gammas;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("write: cannot open " + path);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write: stream failure on " + path);
}

ProbeConfig read_probe_config_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("json: parse error in " + path + ": " + e.what());
    }
    if (!j.contains("pair_a") || !j.contains("pair_b") || !j.contains("companion") ||
        !j.contains("mode_gammas")) {
        throw IoError("json: probe plan needs pair_a/pair_b/companion/mode_gammas in " + path);
    }
    try {
        ProbeConfig cfg;
        cfg.pair_a = pair_from_json(j.at("pair_a"), path);
        cfg.pair_b = pair_from_json(j.at("pair_b"), path);
        cfg.companion = j.at("companion").get<MultiIndex>();
        cfg.mode_gammas = j.at("mode_gammas").get<std::vector<std::vector<std::int64_t>>>();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("json: malformed probe plan in " + path + ": " + e.what());
    }
}

}  // namespace tr
