// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace tprim;
using tprim::testing::Rng;

namespace {

SceneFile mixed_scene() {
    Rng rng(11);
    SceneFile sf;
    sf.scene.num_classes = 3;
    sf.scene.primitives = {tprim::testing::random_primitive(rng, Kind::TP, 3),
                           tprim::testing::random_primitive(rng, Kind::TSQ, 3),
                           tprim::testing::random_primitive(rng, Kind::TSQIW, 3)};
    sf.class_names = {"car", "tree", "road"};
    return sf;
}

void expect_same_primitive(const Primitive &a, const Primitive &b) {
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.center, b.center);
    EXPECT_EQ(a.scale, b.scale);
    EXPECT_EQ(a.rotation.w, b.rotation.w);
    EXPECT_EQ(a.rotation.x, b.rotation.x);
    EXPECT_EQ(a.rotation.y, b.rotation.y);
    EXPECT_EQ(a.rotation.z, b.rotation.z);
    EXPECT_EQ(a.opacity, b.opacity);
    EXPECT_EQ(a.semantics, b.semantics);
    EXPECT_EQ(a.eps1, b.eps1);
    EXPECT_EQ(a.eps2, b.eps2);
    EXPECT_EQ(a.warp, b.warp);
    EXPECT_EQ(a.nu, b.nu);
}

std::size_t count_lines(const std::string &s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

} // namespace

TEST(SceneFile, RoundTripIsExact) {
    const SceneFile sf = mixed_scene();
    const SceneFile back = read_scene_string(write_scene_string(sf));
    EXPECT_EQ(back.scene.num_classes, 3);
    EXPECT_EQ(back.class_names, sf.class_names);
    ASSERT_EQ(back.scene.primitives.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) expect_same_primitive(back.scene.primitives[i], sf.scene.primitives[i]);
    EXPECT_EQ(write_scene_string(back), write_scene_string(sf));
}

TEST(SceneFile, MinimalRecordUsesDefaults) {
    const std::string text = R"({"version": 1, "num_classes": 2, "primitives": [
        {"kind": "TP", "m": [1, 2, 3], "s": [1, 1, 1], "rot": [1, 0, 0, 0], "opacity": 0.5, "semantics": [0, 1]}]})";
    const SceneFile sf = read_scene_string(text);
    ASSERT_EQ(sf.scene.primitives.size(), 1u);
    EXPECT_EQ(sf.scene.primitives[0].center, (Vec3{1, 2, 3}));
    EXPECT_EQ(sf.scene.primitives[0].nu, Primitive{}.nu);
}

TEST(SceneFile, StrictModeRejectsUnknownFields) {
    std::string text = write_scene_string(mixed_scene());
    const std::string extra = text.substr(0, 1) + "\"colour\": 1," + text.substr(1);
    EXPECT_THROW(read_scene_string(extra), FormatError);
    EXPECT_NO_THROW(read_scene_string(extra, false));
    const auto pos = text.find("\"opacity\"");
    text.insert(pos, "\"mass\": 2, ");
    EXPECT_THROW(read_scene_string(text), FormatError);
    EXPECT_NO_THROW(read_scene_string(text, false));
}

TEST(SceneFile, MalformedDocuments) {
    EXPECT_THROW(read_scene_string("{"), FormatError);
    EXPECT_THROW(read_scene_string("[]"), FormatError);
    EXPECT_THROW(read_scene_string(R"({"version": 2, "num_classes": 1})"), FormatError);
    EXPECT_THROW(read_scene_string(R"({"version": 1})"), FormatError);
    EXPECT_THROW(read_scene_string(R"({"version": 1, "num_classes": 2, "class_names": ["a"]})"), FormatError);
    // Semantics length disagrees with num_classes.
    EXPECT_THROW(read_scene_string(R"({"version": 1, "num_classes": 2, "primitives": [
        {"kind": "TP", "m": [0, 0, 0], "s": [1, 1, 1], "rot": [1, 0, 0, 0], "opacity": 0.5, "semantics": [0]}]})"),
                 FormatError);
    EXPECT_THROW(read_scene_string(R"({"version": 1, "num_classes": 1, "primitives": [
        {"kind": "BOX", "m": [0, 0, 0], "s": [1, 1, 1], "rot": [1, 0, 0, 0], "opacity": 0.5, "semantics": [0]}]})"),
                 FormatError);
}

TEST(SceneFile, BlankDocumentIsEmptyScene) {
    for (const char *text : {"", "  \n\t"}) {
        const SceneFile sf = read_scene_string(text);
        EXPECT_TRUE(sf.scene.primitives.empty());
        EXPECT_EQ(sf.scene.num_classes, 1);
    }
}

TEST(GridFile, LabelRoundTripAndLayout) {
    Rng rng(1);
    GridSpec spec;
    spec.dims = {5, 4, 3};
    LabelGrid g(spec, 4);
    for (auto &l : g.labels) l = static_cast<std::uint8_t>(rng.integer(0, 4));
    const std::string bytes = write_grid_string(to_grid_file(g));
    EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 12 + 24 + 24 + 4 + 60);
    EXPECT_EQ(bytes.substr(0, 4), "TFOC");
    EXPECT_EQ(bytes.substr(8, 4), "GRID");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 5);
    const LabelGrid back = label_grid_from(read_grid_string(bytes));
    EXPECT_EQ(back.spec, g.spec);
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_EQ(write_grid_string(to_grid_file(back)), bytes);
}

TEST(GridFile, ProbabilityAndDepthRoundTrip) {
    Rng rng(2);
    GridSpec spec;
    spec.dims = {3, 3, 2};
    ProbabilityGrid p(spec, 2);
    for (auto &x : p.probs) x = static_cast<float>(rng.uniform(0, 1));
    const GridFile pf = to_grid_file(p);
    EXPECT_EQ(read_grid_string(write_grid_string(pf)), pf);
    const ProbabilityGrid pb = probability_grid_from(read_grid_string(write_grid_string(pf)));
    EXPECT_EQ(pb.probs, p.probs);
    // A PROB record also decodes to labels by argmax.
    EXPECT_EQ(label_grid_from(pf).labels, to_labels(p).labels);

    DepthMap m(6, 4, 5, 0.5);
    for (auto &x : m.data) x = static_cast<float>(rng.uniform(0, 1));
    const GridFile df = to_grid_file(m);
    EXPECT_EQ(df.extent[2], 2.5);
    const DepthMap mb = depth_map_from(read_grid_string(write_grid_string(df)));
    EXPECT_EQ(mb.width, 6);
    EXPECT_EQ(mb.num_bins, 5);
    EXPECT_EQ(mb.bin_interval, 0.5);
    EXPECT_EQ(mb.data, m.data);
}

TEST(GridFile, CorruptInputs) {
    GridSpec spec;
    spec.dims = {2, 2, 2};
    const std::string good = write_grid_string(to_grid_file(LabelGrid(spec, 1)));
    EXPECT_THROW(read_grid_string(good.substr(0, good.size() - 1)), FormatError);
    EXPECT_THROW(read_grid_string(good + "x"), FormatError);
    EXPECT_THROW(read_grid_string(good.substr(0, 10)), FormatError);
    std::string bad = good;
    bad[0] = 'X';
    EXPECT_THROW(read_grid_string(bad), FormatError);
    bad = good;
    bad[4] = 7;
    EXPECT_THROW(read_grid_string(bad), FormatError);
    bad = good;
    bad.replace(8, 4, "ABCD");
    EXPECT_THROW(read_grid_string(bad), FormatError);
    bad = good;
    bad.back() = 9; // label above the class count
    EXPECT_THROW(label_grid_from(read_grid_string(bad)), FormatError);
    EXPECT_THROW(depth_map_from(read_grid_string(good)), FormatError);
}

TEST(Ply, VertexCounts) {
    GridSpec spec;
    spec.origin = {0, 0, 0};
    spec.extent = {4, 4, 4};
    spec.dims = {4, 4, 4};
    LabelGrid g(spec, 2);
    std::string ply = write_ply_string(g);
    EXPECT_NE(ply.find("element vertex 0\n"), std::string::npos);
    EXPECT_EQ(ply.substr(ply.size() - 11), "end_header\n");

    g.labels[spec.index(1, 2, 3)] = 2;
    ply = write_ply_string(g);
    EXPECT_NE(ply.find("element vertex 1\n"), std::string::npos);
    const std::string body = ply.substr(ply.find("end_header\n") + 11);
    std::istringstream in(body);
    double x, y, z;
    int r, gg, b, label;
    in >> x >> y >> z >> r >> gg >> b >> label;
    EXPECT_EQ(x, 1.5);
    EXPECT_EQ(y, 2.5);
    EXPECT_EQ(z, 3.5);
    EXPECT_EQ(label, 2);

    Rng rng(3);
    std::size_t occupied = 0;
    for (auto &l : g.labels) occupied += (l = static_cast<std::uint8_t>(rng.integer(0, 2))) != 0;
    ply = write_ply_string(g);
    EXPECT_NE(ply.find("element vertex " + std::to_string(occupied) + "\n"), std::string::npos);
    EXPECT_EQ(count_lines(ply.substr(ply.find("end_header\n") + 11)), occupied);
}

TEST(Points, ParseAndReject) {
    const auto pts = read_points_string("# header\n1 2 3\n\n4,5,6  # trailing\n  -1e-3 0 7.5\n");
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_EQ(pts[1], (Vec3{4, 5, 6}));
    EXPECT_EQ(pts[2].x, -1e-3);
    EXPECT_THROW(read_points_string("1 2\n"), FormatError);
    EXPECT_TRUE(read_points_string("").empty());
}

TEST(Synthetic, DeterministicAndSelfConsistent) {
    for (const char *name : {"three-boxes", "driving-toy"}) {
        const auto a = synthetic_preset(name, 7), b = synthetic_preset(name, 7), c = synthetic_preset(name, 8);
        EXPECT_EQ(write_scene_string(a.file), write_scene_string(b.file));
        EXPECT_NE(write_scene_string(a.file), write_scene_string(c.file));
        const LabelGrid la = to_labels(splat(a.file.scene, a.spec, 1e-3));
        const LabelGrid lb = to_labels(splat(b.file.scene, b.spec, 1e-3));
        EXPECT_EQ(*miou(confusion(la, lb)), 1.0);
        for (int cls = 1; cls <= a.file.scene.num_classes; ++cls)
            EXPECT_TRUE(std::count(la.labels.begin(), la.labels.end(), cls) > 0) << name << " class " << cls;
    }
    EXPECT_THROW(synthetic_preset("nope", 1), InvalidInput);
}
