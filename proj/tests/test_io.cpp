#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "orthoseg/io.hpp"
#include "orthoseg/rng.hpp"

using namespace orthoseg;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
    return fs::temp_directory_path() / ("orthoseg_io_" + name);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("image png round trip (8-bit gray and rgb)") {
    Pcg32 rng(1);
    for (int ch : {1, 3}) {
        ImageGrid img(7, 9, ch);
        for (float& v : img.raw()) v = static_cast<float>(rng.uniform_int(256)) / 255.0f;
        fs::path p = tmp("img.png");
        write_image_png(p.string(), img);
        ImageGrid back = read_image_png(p.string());
        REQUIRE(back.channels() == ch);
        for (size_t i = 0; i < img.size(); ++i)
            CHECK(back.raw()[i] == doctest::Approx(img.raw()[i]).epsilon(1e-6));
        fs::remove(p);
    }
}

TEST_CASE("label png: 16-bit round trip, large ids, overflow guard") {
    LabelMap m(5, 6, 0);
    m.at(0, 0) = 1;
    m.at(2, 3) = 40000;
    m.at(4, 5) = 65535;
    fs::path p = tmp("lbl.png");
    write_label_png(p.string(), m);
    CHECK(read_label_png(p.string()) == m);

    m.at(1, 1) = 70000;
    CHECK_THROWS_AS(write_label_png(p.string(), m), io_error);
    fs::remove(p);
}

TEST_CASE("tensor file: round trip and rejection of bad magic") {
    Pcg32 rng(2);
    Raster<float> t(6, 5, 4);
    for (float& v : t.raw()) v = static_cast<float>(rng.uniform(-3, 3));
    fs::path p = tmp("t.osgt");
    write_tensor(p.string(), t);
    Raster<float> back = read_tensor(p.string());
    REQUIRE(back.same_shape(t));
    CHECK(back.raw() == t.raw());  // bit-exact

    std::ofstream bad(tmp("bad.osgt"), std::ios::binary);
    bad << "NOPE1234";
    bad.close();
    CHECK_THROWS_AS(read_tensor(tmp("bad.osgt").string()), io_error);
    fs::remove(p);
    fs::remove(tmp("bad.osgt"));
}

TEST_CASE("checkpoint: bit-exact save/load/save, refusal on magic/version") {
    NetworkSpec spec;
    spec.base_channels = 4;
    spec.depth = 2;
    spec.embedding_dim = 4;
    spec.head_channels = 6;
    ParamSet<float> params = init_parameters<float>(spec, 99);

    fs::path p1 = tmp("a.oseg"), p2 = tmp("b.oseg");
    save_checkpoint(p1.string(), spec, params);
    auto [spec2, params2] = load_checkpoint(p1.string());
    CHECK(spec2 == spec);
    REQUIRE(params2.same_layout(params));
    for (size_t i = 0; i < params.count(); ++i) CHECK(params2.tensors[i].v == params.tensors[i].v);

    save_checkpoint(p2.string(), spec2, params2);
    CHECK(slurp(p1) == slurp(p2));

    // tensor files and checkpoints must not be confused
    CHECK_THROWS_AS(read_tensor(p1.string()), io_error);

    std::ofstream bad(tmp("bad.oseg"), std::ios::binary);
    bad << "OSEG";
    uint8_t version[2] = {9, 0};
    bad.write(reinterpret_cast<char*>(version), 2);
    bad.close();
    CHECK_THROWS_AS(load_checkpoint(tmp("bad.oseg").string()), io_error);

    fs::remove(p1);
    fs::remove(p2);
    fs::remove(tmp("bad.oseg"));
}

TEST_CASE("tensor header bytes are pinned little-endian") {
    Raster<float> t(1, 2, 1);
    t.at(0, 0, 0) = 1.0f;
    t.at(0, 0, 1) = -2.0f;
    fs::path p = tmp("pin.osgt");
    write_tensor(p.string(), t);
    std::string bytes = slurp(p);
    REQUIRE(bytes.size() == 4 + 2 + 4 + 12 + 8);
    CHECK(bytes.substr(0, 4) == "OSGT");
    CHECK(static_cast<uint8_t>(bytes[4]) == 1);  // version lo
    CHECK(static_cast<uint8_t>(bytes[5]) == 0);  // version hi
    CHECK(static_cast<uint8_t>(bytes[6]) == 3);  // rank
    // dims c=1, h=1, w=2
    CHECK(static_cast<uint8_t>(bytes[10]) == 1);
    CHECK(static_cast<uint8_t>(bytes[14]) == 1);
    CHECK(static_cast<uint8_t>(bytes[18]) == 2);
    // 1.0f little-endian = 00 00 80 3f
    CHECK(static_cast<uint8_t>(bytes[22]) == 0x00);
    CHECK(static_cast<uint8_t>(bytes[23]) == 0x00);
    CHECK(static_cast<uint8_t>(bytes[24]) == 0x80);
    CHECK(static_cast<uint8_t>(bytes[25]) == 0x3f);
    fs::remove(p);
}
