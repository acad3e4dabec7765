// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// File formats.
//
// Scene files are JSON:
//   {"version": 1, "num_classes": C, "class_names": [...],
//    "primitives": [{"kind": "TP"|"TSQ"|"TSQIW", "m": [3], "s": [3],
//                    "rot": [w, x, y, z], "opacity": o, "semantics": [C],
//                    "eps": [e1, e2], "warp_weights": [24], "nu": v}, ...]}
// "class_names", "eps", "warp_weights" and "nu" are optional. Unknown keys
// are rejected in strict mode.
//
// Grid files are little-endian binary:
//   char[4]  "TFOC"
//   u32      version (1)
//   char[4]  "GRID" | "PROB" | "DPTH"
//   u32[3]   dims
//   f64[3]   origin
//   f64[3]   extent
//   u32      class count
//   payload  GRID: u8 label per voxel
//            PROB: f32[C+1] per voxel, class index inner
//            DPTH: f32 per (x, y, bin)
// Voxels are ordered x-fastest, then y, then z. A depth map stores
// dims = (W, H, D), origin = 0 and extent = (W, H, D * bin_interval).

#include "tprim/depth.hpp"
#include "tprim/errors.hpp"
#include "tprim/fitting.hpp"
#include "tprim/metrics.hpp"
#include "tprim/scene.hpp"
#include "tprim/skeleton.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tprim {

// ---------------------------------------------------------------------------
// Scene files

struct SceneFile {
    Scene scene;
    std::vector<std::string> class_names; ///< empty or one per class
};

inline constexpr int kSceneFileVersion = 1;

namespace detail {

using json = nlohmann::json;

inline Vec3 vec3_from(const json &j, const char *what) {
    if (!j.is_array() || j.size() != 3) throw FormatError(std::string(what) + " must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline void check_keys(const json &obj, std::initializer_list<const char *> allowed, const char *where) {
    for (const auto &[key, value] : obj.items()) {
        bool ok = false;
        for (const char *a : allowed) ok = ok || key == a;
        if (!ok) throw FormatError(std::string("unknown field '") + key + "' in " + where);
    }
}

inline json primitive_to_json(const Primitive &p) {
    json j;
    j["kind"] = std::string(kind_name(p.kind));
    j["m"] = {p.center.x, p.center.y, p.center.z};
    j["s"] = {p.scale.x, p.scale.y, p.scale.z};
    j["rot"] = {p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z};
    j["opacity"] = p.opacity;
    j["semantics"] = p.semantics;
    if (p.kind != Kind::TP) j["eps"] = {p.eps1, p.eps2};
    if (p.kind == Kind::TSQIW) j["warp_weights"] = std::vector<double>(p.warp.begin(), p.warp.end());
    j["nu"] = p.nu;
    return j;
}

inline Primitive primitive_from_json(const json &j, bool strict) {
    if (!j.is_object()) throw FormatError("primitive record must be an object");
    if (strict) check_keys(j, {"kind", "m", "s", "rot", "opacity", "semantics", "eps", "warp_weights", "nu"}, "primitive");
    Primitive p;
    p.kind = parse_kind(j.at("kind").get<std::string>());
    p.center = vec3_from(j.at("m"), "m");
    p.scale = vec3_from(j.at("s"), "s");
    const json &r = j.at("rot");
    if (!r.is_array() || r.size() != 4) throw FormatError("rot must be an array of 4 numbers (w, x, y, z)");
    p.rotation = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
    p.opacity = j.at("opacity").get<double>();
    p.semantics = j.at("semantics").get<std::vector<double>>();
    if (j.contains("eps")) {
        const auto e = j["eps"].get<std::vector<double>>();
        if (e.size() != 2) throw FormatError("eps must be an array of 2 numbers");
        p.eps1 = e[0];
        p.eps2 = e[1];
    }
    if (j.contains("warp_weights")) {
        const auto w = j["warp_weights"].get<std::vector<double>>();
        if (w.size() != static_cast<std::size_t>(kNumBasisFields)) throw FormatError("warp_weights must hold 24 numbers");
        std::copy(w.begin(), w.end(), p.warp.begin());
    }
    if (j.contains("nu")) p.nu = j["nu"].get<double>();
    return p;
}

} // namespace detail

inline std::string write_scene_string(const SceneFile &sf) {
    detail::json j;
    j["version"] = kSceneFileVersion;
    j["num_classes"] = sf.scene.num_classes;
    if (!sf.class_names.empty()) j["class_names"] = sf.class_names;
    j["primitives"] = detail::json::array();
    for (const auto &p : sf.scene.primitives) j["primitives"].push_back(detail::primitive_to_json(p));
    return j.dump(2) + "\n";
}

/// Parses a scene document. A blank document is the empty one-class scene.
inline SceneFile read_scene_string(const std::string &text, bool strict = true) {
    SceneFile sf;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return sf;
    try {
        const auto j = detail::json::parse(text);
        if (!j.is_object()) throw FormatError("scene document must be a JSON object");
        if (strict) detail::check_keys(j, {"version", "num_classes", "class_names", "primitives"}, "scene");
        const int version = j.at("version").get<int>();
        if (version != kSceneFileVersion) throw FormatError("unsupported scene version " + std::to_string(version));
        sf.scene.num_classes = j.at("num_classes").get<int>();
        if (j.contains("class_names")) sf.class_names = j["class_names"].get<std::vector<std::string>>();
        if (j.contains("primitives")) {
            if (!j["primitives"].is_array()) throw FormatError("primitives must be an array");
            for (const auto &pj : j["primitives"]) sf.scene.primitives.push_back(detail::primitive_from_json(pj, strict));
        }
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("scene file: ") + e.what());
    } catch (const InvalidInput &e) {
        throw FormatError(std::string("scene file: ") + e.what());
    }
    if (!sf.class_names.empty() && static_cast<int>(sf.class_names.size()) != sf.scene.num_classes)
        throw FormatError("scene file: class_names length differs from num_classes");
    try {
        sf.scene.validate();
    } catch (const InvalidInput &e) {
        throw FormatError(std::string("scene file: ") + e.what());
    }
    return sf;
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << text;
    if (!out) throw FormatError("write failed for '" + path + "'");
}

inline SceneFile read_scene(const std::string &path, bool strict = true) {
    return read_scene_string(read_text_file(path), strict);
}
inline void write_scene(const std::string &path, const SceneFile &sf) { write_text_file(path, write_scene_string(sf)); }

// ---------------------------------------------------------------------------
// Grid files

enum class GridTag { labels, probabilities, depth };

/// Header plus raw payload; converts to and from the in-memory grids.
struct GridFile {
    GridTag tag = GridTag::labels;
    std::array<std::uint32_t, 3> dims{};
    std::array<double, 3> origin{};
    std::array<double, 3> extent{};
    std::uint32_t num_classes = 0;
    std::vector<std::uint8_t> labels; ///< GRID payload
    std::vector<float> values;        ///< PROB and DPTH payload

    friend bool operator==(const GridFile &, const GridFile &) = default;
};

inline constexpr std::uint32_t kGridFileVersion = 1;

namespace detail {

inline const char *tag_text(GridTag t) {
    switch (t) {
    case GridTag::labels: return "GRID";
    case GridTag::probabilities: return "PROB";
    case GridTag::depth: return "DPTH";
    }
    return "????";
}

template <class U>
void put_le(std::string &out, U v) {
    for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

struct Reader {
    const std::string &buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (buf.size() - pos < n) throw FormatError("grid file: truncated");
    }
    template <class U>
    U le() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t b = 0; b < sizeof(U); ++b)
            v |= static_cast<U>(static_cast<unsigned char>(buf[pos + b])) << (8 * b);
        pos += sizeof(U);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

inline std::size_t payload_count(const GridFile &g) {
    std::size_t n = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
    if (g.tag == GridTag::probabilities) n *= static_cast<std::size_t>(g.num_classes) + 1;
    return n;
}

} // namespace detail

inline std::string write_grid_string(const GridFile &g) {
    const std::size_t n = detail::payload_count(g);
    if ((g.tag == GridTag::labels ? g.labels.size() : g.values.size()) != n)
        throw InvalidInput("grid file: payload length does not match the header");
    std::string out = "TFOC";
    detail::put_le<std::uint32_t>(out, kGridFileVersion);
    out += detail::tag_text(g.tag);
    for (auto d : g.dims) detail::put_le<std::uint32_t>(out, d);
    for (double v : g.origin) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    for (double v : g.extent) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    detail::put_le<std::uint32_t>(out, g.num_classes);
    if (g.tag == GridTag::labels) {
        out.append(reinterpret_cast<const char *>(g.labels.data()), g.labels.size());
    } else {
        for (float v : g.values) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

inline GridFile read_grid_string(const std::string &buf) {
    detail::Reader r{buf};
    if (r.bytes(4) != "TFOC") throw FormatError("grid file: bad magic");
    const auto version = r.le<std::uint32_t>();
    if (version != kGridFileVersion) throw FormatError("grid file: unsupported version " + std::to_string(version));
    GridFile g;
    const std::string tag = r.bytes(4);
    if (tag == "GRID") g.tag = GridTag::labels;
    else if (tag == "PROB") g.tag = GridTag::probabilities;
    else if (tag == "DPTH") g.tag = GridTag::depth;
    else throw FormatError("grid file: unknown record type '" + tag + "'");
    for (auto &d : g.dims) d = r.le<std::uint32_t>();
    for (auto &v : g.origin) v = std::bit_cast<double>(r.le<std::uint64_t>());
    for (auto &v : g.extent) v = std::bit_cast<double>(r.le<std::uint64_t>());
    g.num_classes = r.le<std::uint32_t>();
    const std::size_t n = detail::payload_count(g);
    const std::size_t width = g.tag == GridTag::labels ? 1 : 4;
    if (n != 0 && (buf.size() - r.pos) / width < n) throw FormatError("grid file: payload shorter than header implies");
    if (buf.size() - r.pos != n * width) throw FormatError("grid file: trailing bytes after payload");
    if (g.tag == GridTag::labels) {
        g.labels.resize(n);
        std::memcpy(g.labels.data(), buf.data() + r.pos, n);
    } else {
        g.values.resize(n);
        for (auto &v : g.values) v = std::bit_cast<float>(r.le<std::uint32_t>());
    }
    return g;
}

inline GridFile read_grid(const std::string &path) { return read_grid_string(read_text_file(path)); }
inline void write_grid(const std::string &path, const GridFile &g) { write_text_file(path, write_grid_string(g)); }

namespace detail {

inline void fill_spec_header(GridFile &g, const GridSpec &spec) {
    for (int a = 0; a < 3; ++a) {
        g.dims[a] = static_cast<std::uint32_t>(spec.dims[a]);
        g.origin[a] = spec.origin[a];
        g.extent[a] = spec.extent[a];
    }
}

inline GridSpec spec_from_header(const GridFile &g) {
    GridSpec spec;
    for (int a = 0; a < 3; ++a) {
        if (g.dims[a] < 1 || g.dims[a] > 1u << 20) throw FormatError("grid file: dims out of range");
        spec.dims[a] = static_cast<int>(g.dims[a]);
        spec.origin[a] = g.origin[a];
        spec.extent[a] = g.extent[a];
    }
    try {
        spec.validate();
    } catch (const InvalidInput &e) {
        throw FormatError(std::string("grid file: ") + e.what());
    }
    return spec;
}

} // namespace detail

inline GridFile to_grid_file(const LabelGrid &g) {
    GridFile f;
    f.tag = GridTag::labels;
    detail::fill_spec_header(f, g.spec);
    f.num_classes = static_cast<std::uint32_t>(g.num_classes);
    f.labels = g.labels;
    return f;
}

inline GridFile to_grid_file(const ProbabilityGrid &g) {
    GridFile f;
    f.tag = GridTag::probabilities;
    detail::fill_spec_header(f, g.spec);
    f.num_classes = static_cast<std::uint32_t>(g.num_classes);
    f.values.assign(g.probs.begin(), g.probs.end());
    return f;
}

inline GridFile to_grid_file(const DepthMap &m) {
    GridFile f;
    f.tag = GridTag::depth;
    f.dims = {static_cast<std::uint32_t>(m.width), static_cast<std::uint32_t>(m.height),
              static_cast<std::uint32_t>(m.num_bins)};
    f.extent = {static_cast<double>(m.width), static_cast<double>(m.height), m.num_bins * m.bin_interval};
    f.values.assign(m.data.begin(), m.data.end());
    return f;
}

/// Label grid from a GRID record, or the argmax of a PROB record.
inline LabelGrid label_grid_from(const GridFile &f) {
    if (f.tag == GridTag::depth) throw FormatError("grid file: expected GRID or PROB, found DPTH");
    if (f.num_classes < 1 || f.num_classes > 255) throw FormatError("grid file: class count out of range");
    const GridSpec spec = detail::spec_from_header(f);
    if (f.tag == GridTag::probabilities) {
        ProbabilityGrid p(spec, static_cast<int>(f.num_classes));
        p.probs.assign(f.values.begin(), f.values.end());
        return to_labels(p);
    }
    LabelGrid g(spec, static_cast<int>(f.num_classes));
    g.labels = f.labels;
    for (auto l : g.labels)
        if (l > f.num_classes) throw FormatError("grid file: label exceeds class count");
    return g;
}

inline ProbabilityGrid probability_grid_from(const GridFile &f) {
    if (f.tag != GridTag::probabilities) throw FormatError("grid file: expected PROB record");
    if (f.num_classes < 1 || f.num_classes > 255) throw FormatError("grid file: class count out of range");
    ProbabilityGrid p(detail::spec_from_header(f), static_cast<int>(f.num_classes));
    p.probs.assign(f.values.begin(), f.values.end());
    return p;
}

inline DepthMap depth_map_from(const GridFile &f) {
    if (f.tag != GridTag::depth) throw FormatError("grid file: expected DPTH record");
    if (f.dims[0] < 1 || f.dims[1] < 1 || f.dims[2] < 1) throw FormatError("grid file: depth dims must be positive");
    if (!(f.extent[2] > 0.0)) throw FormatError("grid file: depth extent must be positive");
    DepthMap m(static_cast<int>(f.dims[0]), static_cast<int>(f.dims[1]), static_cast<int>(f.dims[2]),
               f.extent[2] / f.dims[2]);
    m.data.assign(f.values.begin(), f.values.end());
    return m;
}

// ---------------------------------------------------------------------------
// Point lists: one "x y z" per line, '#' starts a comment.

inline std::vector<Vec3> read_points_string(const std::string &text) {
    std::vector<Vec3> pts;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
        if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
        for (char &ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ls(line);
        Vec3 p;
        if (!(ls >> p.x >> p.y >> p.z)) throw FormatError("points: line " + std::to_string(lineno) + " needs x y z");
        pts.push_back(p);
    }
    return pts;
}

inline PointCloud read_points(const std::string &path, PointSource source) {
    PointCloud pc;
    pc.points = read_points_string(read_text_file(path));
    pc.sources.assign(pc.points.size(), source);
    return pc;
}

inline std::string write_anchors_string(const SkeletonResult &r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "# x y z source\n";
    for (std::size_t i = 0; i < r.anchors.size(); ++i)
        out << r.anchors[i].x << ' ' << r.anchors[i].y << ' ' << r.anchors[i].z << ' '
            << (i < r.lidar_count ? "lidar" : "camera") << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// PLY export of occupied voxel centers

inline std::array<std::uint8_t, 3> class_color(int c) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 10> palette{{{230, 25, 75},
                                                                          {60, 180, 75},
                                                                          {255, 225, 25},
                                                                          {0, 130, 200},
                                                                          {245, 130, 48},
                                                                          {145, 30, 180},
                                                                          {70, 240, 240},
                                                                          {240, 50, 230},
                                                                          {210, 245, 60},
                                                                          {128, 128, 128}}};
    return palette[static_cast<std::size_t>(c - 1) % palette.size()];
}

inline std::string write_ply_string(const LabelGrid &g) {
    std::size_t count = 0;
    for (auto l : g.labels) count += l != 0;
    std::ostringstream out;
    out << "ply\nformat ascii 1.0\ncomment occupied voxel centers\nelement vertex " << count
        << "\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\n"
           "property uchar blue\nproperty uchar label\nend_header\n";
    out << std::setprecision(9);
    for (std::size_t v = 0; v < g.labels.size(); ++v) {
        if (g.labels[v] == 0) continue;
        const Vec3 c = g.spec.center(v);
        const auto col = class_color(g.labels[v]);
        out << static_cast<float>(c.x) << ' ' << static_cast<float>(c.y) << ' ' << static_cast<float>(c.z) << ' '
            << int(col[0]) << ' ' << int(col[1]) << ' ' << int(col[2]) << ' ' << int(g.labels[v]) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Metric and trace reports

inline std::string format_optional(const std::optional<double> &v) {
    if (!v) return "undefined";
    std::ostringstream s;
    s << std::setprecision(6) << std::fixed << *v;
    return s.str();
}

inline std::string metrics_csv(const ConfusionCounts &c, const std::vector<std::string> &names = {}) {
    std::ostringstream out;
    out << "class,name,tp,fp,fn,iou\n";
    for (std::size_t k = 1; k < c.classes.size(); ++k) {
        const std::string name = k - 1 < names.size() ? names[k - 1] : "class" + std::to_string(k);
        out << k << ',' << name << ',' << c.classes[k].tp << ',' << c.classes[k].fp << ',' << c.classes[k].fn << ','
            << format_optional(iou(c.classes[k])) << '\n';
    }
    out << "geometry,occupied," << c.geometry.tp << ',' << c.geometry.fp << ',' << c.geometry.fn << ','
        << format_optional(iou(c.geometry)) << '\n';
    out << "mean,miou,,,," << format_optional(miou(c)) << '\n';
    return out.str();
}

inline std::string metrics_table(const ConfusionCounts &c, const std::vector<std::string> &names = {}) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "class" << std::right << std::setw(12) << "TP" << std::setw(12) << "FP"
        << std::setw(12) << "FN" << std::setw(12) << "IoU" << '\n';
    for (std::size_t k = 1; k < c.classes.size(); ++k) {
        const std::string name = k - 1 < names.size() ? names[k - 1] : "class" + std::to_string(k);
        out << std::left << std::setw(16) << name << std::right << std::setw(12) << c.classes[k].tp << std::setw(12)
            << c.classes[k].fp << std::setw(12) << c.classes[k].fn << std::setw(12)
            << format_optional(iou(c.classes[k])) << '\n';
    }
    out << std::left << std::setw(16) << "geometry" << std::right << std::setw(12) << c.geometry.tp << std::setw(12)
        << c.geometry.fp << std::setw(12) << c.geometry.fn << std::setw(12) << format_optional(iou(c.geometry))
        << '\n';
    out << "mIoU " << format_optional(miou(c)) << "  (voxels evaluated: " << c.voxels << ")\n";
    return out.str();
}

inline std::string trace_csv(const std::vector<TraceEntry> &trace) {
    std::ostringstream out;
    out << std::setprecision(17) << "iteration,lovasz,bce,total\n";
    for (const auto &t : trace) out << t.iteration << ',' << t.loss.lovasz << ',' << t.loss.bce << ',' << t.loss.total << '\n';
    return out.str();
}

} // namespace tprim
