#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "tr/harness.hpp"
#include "tr/io.hpp"
#include "tr/rng.hpp"

using namespace tr;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("tr_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

DenseTensor random_tensor(const Dims& dims, Rng& rng) {
    DenseTensor t(dims);
    for (Complex& x : t.data()) x = rng.normal_complex();
    return t;
}

double max_diff(const DenseTensor& a, const DenseTensor& b) {
    REQUIRE(a.dims() == b.dims());
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

double max_ring_diff(const RingDecomposition& a, const RingDecomposition& b) {
    REQUIRE(a.order() == b.order());
    double m = 0.0;
    for (std::int64_t k = 0; k < a.order(); ++k) m = std::max(m, max_diff(a.core(k), b.core(k)));
    return m;
}

}  // namespace

TEST_CASE("trt files round-trip bit-exactly") {
    TempDir tmp;
    Rng rng(1, "io");
    const DenseTensor t = random_tensor({3, 4, 2}, rng);
    const std::string path = tmp.file("t.trt");
    write_trt(path, t);
    const DenseTensor back = read_trt(path);
    REQUIRE(back.dims() == t.dims());
    for (std::size_t i = 0; i < t.data().size(); ++i) CHECK(back.data()[i] == t.data()[i]);
}

TEST_CASE("trc files round-trip a full ring") {
    TempDir tmp;
    Rng rng(2, "cores");
    const RingDecomposition ring = random_ring({3, 4, 5}, 2, rng, 1.0, true);
    const std::string path = tmp.file("cores.trc");
    write_trc(path, ring);
    const StoredDecomposition back = read_trc(path);
    REQUIRE(!back.is_shared());
    CHECK(max_ring_diff(*back.ring, ring) == 0.0);
}

TEST_CASE("trc files round-trip a shared core") {
    TempDir tmp;
    Rng rng(3, "cores");
    const RingDecomposition proto = random_ring({4, 4, 4, 4}, 2, rng, 1.0, true);
    SharedCoreRing shared;
    shared.order = 4;
    shared.core = proto.core(0);
    const std::string path = tmp.file("shared.trc");
    write_trc(path, shared);
    const StoredDecomposition back = read_trc(path);
    REQUIRE(back.is_shared());
    CHECK(back.shared->order == 4);
    CHECK(max_diff(back.shared->core, shared.core) == 0.0);
    // Expansion places the same core on every mode.
    const RingDecomposition expanded = back.as_ring();
    CHECK(expanded.order() == 4);
    for (std::int64_t k = 0; k < 4; ++k) CHECK(max_diff(expanded.core(k), shared.core) == 0.0);
}

TEST_CASE("json tensor and decomposition files round-trip") {
    TempDir tmp;
    Rng rng(4, "io");
    const DenseTensor t = random_tensor({2, 3, 2}, rng);
    const std::string tpath = tmp.file("t.json");
    write_tensor_json(tpath, t);
    CHECK(max_diff(read_tensor_json(tpath), t) == 0.0);

    Rng core_rng(5, "cores");
    const RingDecomposition ring = random_ring({3, 3, 3}, 2, core_rng, 1.0, true);
    StoredDecomposition stored;
    stored.ring = ring;
    const std::string dpath = tmp.file("d.json");
    write_decomposition_json(dpath, stored);
    const StoredDecomposition back = read_decomposition_json(dpath);
    REQUIRE(!back.is_shared());
    CHECK(max_ring_diff(*back.ring, ring) == 0.0);

    SharedCoreRing shared;
    shared.order = 3;
    shared.core = ring.core(0);
    StoredDecomposition stored_shared;
    stored_shared.shared = shared;
    const std::string spath = tmp.file("s.json");
    write_decomposition_json(spath, stored_shared);
    const StoredDecomposition sback = read_decomposition_json(spath);
    REQUIRE(sback.is_shared());
    CHECK(max_diff(sback.shared->core, shared.core) == 0.0);
}

TEST_CASE("probe plans round-trip through JSON") {
    TempDir tmp;
    const Dims dims{5, 5, 5, 5};
    const ProbeConfig cfg = default_probe_config(dims, 2);
    const std::string path = tmp.file("probes.json");
    write_probe_config_json(path, cfg);
    const ProbeConfig back = read_probe_config_json(path);
    CHECK(back.pair_a.first == cfg.pair_a.first);
    CHECK(back.pair_a.second == cfg.pair_a.second);
    CHECK(back.pair_a.gamma == cfg.pair_a.gamma);
    CHECK(back.pair_b.first == cfg.pair_b.first);
    CHECK(back.pair_b.second == cfg.pair_b.second);
    CHECK(back.pair_b.gamma == cfg.pair_b.gamma);
    CHECK(back.companion == cfg.companion);
    CHECK(back.mode_gammas == cfg.mode_gammas);
    // The round-tripped plan still validates.
    validate_probe_config(dims, 2, back);
}

TEST_CASE("missing files raise IoError") {
    CHECK_THROWS_AS(read_trt("/nonexistent/nowhere.trt"), IoError);
    CHECK_THROWS_AS(read_trc("/nonexistent/nowhere.trc"), IoError);
    CHECK_THROWS_AS(read_tensor_json("/nonexistent/nowhere.json"), IoError);
    CHECK_THROWS_AS(read_probe_config_json("/nonexistent/nowhere.json"), IoError);
}

TEST_CASE("corrupt binary files raise IoError") {
    TempDir tmp;
    const std::string bad_magic = tmp.file("bad_magic.trt");
    {
        std::ofstream os(bad_magic, std::ios::binary);
        os << "NOPE" << std::string(64, '\0');
    }
    CHECK_THROWS_AS(read_trt(bad_magic), IoError);

    Rng rng(6, "io");
    const DenseTensor t = random_tensor({3, 3}, rng);
    const std::string truncated = tmp.file("short.trt");
    write_trt(truncated, t);
    {
        // Chop the file mid-payload.
        std::error_code ec;
        std::filesystem::resize_file(truncated, 24, ec);
        REQUIRE(!ec);
    }
    CHECK_THROWS_AS(read_trt(truncated), IoError);
}

TEST_CASE("malformed json raises IoError") {
    TempDir tmp;
    const std::string garbage = tmp.file("garbage.json");
    {
        std::ofstream os(garbage);
        os << "{ not json";
    }
    CHECK_THROWS_AS(read_tensor_json(garbage), IoError);
    CHECK_THROWS_AS(read_decomposition_json(garbage), IoError);
    CHECK_THROWS_AS(read_probe_config_json(garbage), IoError);

    const std::string wrong_len = tmp.file("wrong_len.json");
    {
        std::ofstream os(wrong_len);
        os << R"({"dims": [2, 2], "data": [[1.0, 0.0]]})";
    }
    CHECK_THROWS_AS(read_tensor_json(wrong_len), IoError);

    const std::string missing = tmp.file("missing.json");
    {
        std::ofstream os(missing);
        os << R"({"pair_a": {"first": [0], "second": [1], "gamma": [0]}})";
    }
    CHECK_THROWS_AS(read_probe_config_json(missing), IoError);
}

TEST_CASE("shared trc with inconsistent recorded rank is rejected") {
    TempDir tmp;
    Rng rng(7, "cores");
    const RingDecomposition ring = random_ring({3, 3, 3}, 2, rng, 1.0, true);
    const std::string path = tmp.file("cores.trc");
    write_trc(path, ring);
    // Flip the recorded rank byte (offset: magic 4 + order 4 = 8).
    {
        std::fstream fs(path, std::ios::in | std::ios::out | std::ios::binary);
        fs.seekp(8);
        const std::uint32_t wrong = 5;
        fs.write(reinterpret_cast<const char*>(&wrong), sizeof(wrong));
    }
    CHECK_THROWS_AS(read_trc(path), IoError);
}
