#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dbrn/extractor.hpp"
#include "dbrn/features_io.hpp"
#include "test_util.hpp"

using namespace dbrn;

TEST_CASE("grid shapes for the default stride schedule") {
    const ExtractorConfig cfg;
    CHECK(extract_grid_shape(84, 84, cfg) == std::pair<int, int>{5, 5});
    CHECK(extract_grid_shape(92, 92, cfg) == std::pair<int, int>{5, 5});
    CHECK(extract_grid_shape(108, 108, cfg) == std::pair<int, int>{6, 6});
    CHECK(extract_grid_shape(84, 108, cfg) == std::pair<int, int>{6, 5});
    CHECK_THROWS_AS(extract_grid_shape(8, 8, cfg), ResolutionError);

    ExtractorConfig bad;
    bad.strides = {4, 2}; // length disagrees with num_layers
    CHECK_THROWS_AS(extract_grid_shape(84, 84, bad), ParameterError);
}

TEST_CASE("extract shape, zero input, determinism") {
    Rng rng(7);
    const Image img = random_image(rng, 84, 84);
    ExtractorConfig cfg;
    cfg.seed = 42;

    const FeatureMap a = extract(img, cfg);
    CHECK(a.width == 5);
    CHECK(a.height == 5);
    CHECK(a.dim == cfg.out_dim);

    const FeatureMap b = extract(img, cfg);
    CHECK(a.data == b.data); // bitwise determinism

    const Image zeros(84, 84, 1, std::vector<double>(84 * 84, 0.0));
    const FeatureMap z = extract(zeros, cfg);
    for (double v : z.data) CHECK(v == 0.0);

    ExtractorConfig other = cfg;
    other.seed = 43;
    CHECK(extract(img, other).data != a.data); // seed actually matters
}

TEST_CASE("extract is positively homogeneous") {
    Rng rng(8);
    const Image img = random_image(rng, 84, 84);
    const ExtractorConfig cfg;
    const FeatureMap base = extract(img, cfg);

    // power-of-two scale: exact in both double and float32 rounding
    Image half = img;
    for (double& v : half.pixels) v *= 0.5;
    const FeatureMap h = extract(half, cfg);
    for (std::size_t i = 0; i < base.data.size(); ++i) {
        CHECK(h.data[i] == 0.5 * base.data[i]);
    }

    // arbitrary positive scale: exact up to the float32 output rounding
    const double alpha = 0.37;
    Image scaled = img;
    for (double& v : scaled.pixels) v *= alpha;
    const FeatureMap s = extract(scaled, cfg);
    for (std::size_t i = 0; i < base.data.size(); ++i) {
        CHECK(s.data[i] == doctest::Approx(alpha * base.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("extract on 3-channel input") {
    Rng rng(9);
    const Image img = random_image(rng, 84, 84, 3);
    const FeatureMap m = extract(img, ExtractorConfig{});
    CHECK(m.width == 5);
    CHECK(m.height == 5);
    CHECK(m.data == extract(img, ExtractorConfig{}).data);
}

TEST_CASE("resize_image identity, closed form, constant, errors") {
    Rng rng(10);
    const Image img = random_image(rng, 12, 17);
    const Image same = resize_image(img, 12, 17);
    CHECK(same.pixels == img.pixels);

    // 2x2 [[0,1],[0,1]] to 2x4: columns interpolate linearly from 0 to 1
    const Image two(2, 2, 1, std::vector<double>{0.0, 1.0, 0.0, 1.0});
    const Image wide = resize_image(two, 2, 4);
    const double expect[4] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 4; ++x) {
            CHECK(wide.at(y, x, 0) == doctest::Approx(expect[x]).epsilon(1e-12));
        }
    }

    const Image flat(5, 5, 1, std::vector<double>(25, 0.42));
    const Image grown = resize_image(flat, 9, 3);
    for (double v : grown.pixels) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));

    CHECK_THROWS_AS(resize_image(img, 1, 5), ParameterError);
}

TEST_CASE("feature file round-trip is bitwise") {
    Rng rng(12);
    std::vector<FeatureMap> maps;
    for (int i = 0; i < 10; ++i) {
        FeatureMap m = random_map(rng, 1 + static_cast<int>(rng.below(4)),
                                  1 + static_cast<int>(rng.below(4)),
                                  1 + static_cast<int>(rng.below(6)));
        // the format stores float32, so make the payload float-grained
        for (double& v : m.data) v = static_cast<double>(static_cast<float>(v));
        maps.push_back(std::move(m));
    }
    const std::string path =
        (std::filesystem::temp_directory_path() / "dbrn_roundtrip.dbrnft").string();
    save_features(maps, path);
    const std::vector<FeatureMap> loaded = load_features(path);
    REQUIRE(loaded.size() == maps.size());
    for (std::size_t i = 0; i < maps.size(); ++i) {
        CHECK(loaded[i].width == maps[i].width);
        CHECK(loaded[i].height == maps[i].height);
        CHECK(loaded[i].dim == maps[i].dim);
        CHECK(loaded[i].data == maps[i].data);
    }
    std::filesystem::remove(path);
}

TEST_CASE("feature file format errors carry byte offsets") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "dbrn_badfile.dbrnft").string();

    { // wrong magic
        std::ofstream out(path, std::ios::binary);
        out << "NOTDBRN1";
        const unsigned char zero[4] = {0, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(zero), 4);
    }
    CHECK_THROWS_AS(load_features(path), FormatError);

    { // truncated: promises one map, delivers nothing
        std::ofstream out(path, std::ios::binary);
        out << "DBRNFT01";
        const unsigned char one[4] = {1, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(one), 4);
    }
    try {
        load_features(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }

    { // non-finite payload: w=h=d=1, data = NaN
        std::ofstream out(path, std::ios::binary);
        out << "DBRNFT01";
        const unsigned char head[16] = {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(head), 16);
        const unsigned char nan_bytes[4] = {0x00, 0x00, 0xC0, 0x7F};
        out.write(reinterpret_cast<const char*>(nan_bytes), 4);
    }
    CHECK_THROWS_AS(load_features(path), FormatError);

    { // trailing garbage after the last map
        save_features({}, path);
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << "x";
    }
    CHECK_THROWS_AS(load_features(path), FormatError);

    CHECK_THROWS_AS(load_features("/nonexistent/dbrn.dbrnft"), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("empty feature list round-trips") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "dbrn_empty.dbrnft").string();
    save_features({}, path);
    CHECK(std::filesystem::file_size(path) == 12); // magic + count only
    CHECK(load_features(path).empty());
    std::filesystem::remove(path);
}

TEST_CASE("image validation") {
    CHECK_THROWS_AS(Image(2, 2, 2, std::vector<double>(8, 0.0)), ParameterError);
    CHECK_THROWS_AS(Image(2, 2, 1, std::vector<double>{0.0, 0.5, 1.0, 1.5}), ParameterError);
    CHECK_THROWS_AS(Image(2, 2, 1, std::vector<double>(3, 0.0)), DimensionError);
}
