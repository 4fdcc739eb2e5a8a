#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgcr/bezier.hpp"
#include "sgcr/camera.hpp"
#include "sgcr/edge_map.hpp"
#include "sgcr/metrics.hpp"
#include "sgcr/splat.hpp"
#include "sgcr/trainer.hpp"
#include "sgcr/wireframe.hpp"

#include <json.hpp>

namespace sgcr::io {

using nlohmann::json;

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline void fail(const std::string& what) { throw std::runtime_error(what); }

inline std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) fail("cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
    if (!f) fail("cannot open for reading: " + path);
    return f;
}

// ---------------------------------------------------------------------------
// Edge maps: 16-bit binary PGM (P5, maxval 65535, big-endian samples).

inline void save_edge_map(const EdgeMap& img, const std::string& path) {
    auto f = open_out(path, true);
    f << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
    std::vector<uint8_t> buf(img.size() * 2);
    for (size_t i = 0; i < img.size(); ++i) {
        const double clamped = img.pixels[i] < 0 ? 0 : (img.pixels[i] > 1 ? 1 : img.pixels[i]);
        const uint16_t v = uint16_t(clamped * 65535.0 + 0.5);
        buf[i * 2] = uint8_t(v >> 8);
        buf[i * 2 + 1] = uint8_t(v & 0xff);
    }
    f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

inline EdgeMap load_edge_map(const std::string& path) {
    auto f = open_in(path, true);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P5" || w <= 0 || h <= 0 || maxval <= 0) fail("bad PGM header: " + path);
    f.get();  // single whitespace after maxval
    EdgeMap img(w, h);
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<uint8_t> buf(img.size() * bytes);
    f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (!f) fail("truncated PGM: " + path);
    for (size_t i = 0; i < img.size(); ++i) {
        const unsigned v = bytes == 2 ? unsigned(buf[i * 2]) << 8 | buf[i * 2 + 1] : buf[i];
        img.pixels[i] = double(v) / double(maxval);
    }
    return img;
}

// ---------------------------------------------------------------------------
// Gaussian interchange: ASCII header with the shared radius, one record per
// Gaussian (x y z opacity color), 17 significant digits.

inline void save_gaussians(const SphericalGaussianSet& set, const std::string& path,
                           long iteration = -1) {
    auto f = open_out(path);
    f << "sgcr_gaussians 1\n";
    f << "radius " << fmt(set.radius) << '\n';
    if (iteration >= 0) f << "iteration " << iteration << '\n';
    f << "count " << set.count() << '\n';
    for (const auto& g : set.gaussians)
        f << fmt(g.center.x) << ' ' << fmt(g.center.y) << ' ' << fmt(g.center.z) << ' '
          << fmt(g.opacity) << ' ' << fmt(g.color) << '\n';
}

inline SphericalGaussianSet load_gaussians(const std::string& path, long* iteration = nullptr) {
    auto f = open_in(path);
    std::string tag;
    int version = 0;
    f >> tag >> version;
    if (tag != "sgcr_gaussians" || version != 1) fail("bad gaussian file header: " + path);
    SphericalGaussianSet set;
    size_t n = 0;
    if (iteration) *iteration = -1;
    while (f >> tag) {
        if (tag == "radius") {
            f >> set.radius;
        } else if (tag == "iteration") {
            long it = -1;
            f >> it;
            if (iteration) *iteration = it;
        } else if (tag == "count") {
            f >> n;
            break;
        } else {
            fail("unknown gaussian header field '" + tag + "': " + path);
        }
    }
    set.gaussians.resize(n);
    for (auto& g : set.gaussians)
        f >> g.center.x >> g.center.y >> g.center.z >> g.opacity >> g.color;
    if (!f) fail("truncated gaussian file: " + path);
    return set;
}

// ---------------------------------------------------------------------------
// Camera document: shared intrinsics plus one row-major world-to-camera
// matrix per view.

inline void save_cameras(const std::vector<Camera>& cams, const std::string& path) {
    if (cams.empty()) fail("save_cameras: no cameras");
    json doc;
    doc["width"] = cams[0].width;
    doc["height"] = cams[0].height;
    doc["fx"] = cams[0].fx;
    doc["fy"] = cams[0].fy;
    doc["cx"] = cams[0].cx;
    doc["cy"] = cams[0].cy;
    doc["views"] = json::array();
    for (const auto& c : cams) doc["views"].push_back(c.world_to_camera.m);
    open_out(path) << doc.dump(2) << '\n';
}

inline std::vector<Camera> load_cameras(const std::string& path) {
    json doc = json::parse(open_in(path));
    std::vector<Camera> cams;
    for (const auto& view : doc.at("views")) {
        Camera c;
        c.width = doc.at("width");
        c.height = doc.at("height");
        c.fx = doc.at("fx");
        c.fy = doc.at("fy");
        c.cx = doc.at("cx");
        c.cy = doc.at("cy");
        for (int i = 0; i < 16; ++i) c.world_to_camera.m[i] = view.at(i);
        c.validate();
        cams.push_back(c);
    }
    if (cams.empty()) fail("camera file has no views: " + path);
    return cams;
}

// ---------------------------------------------------------------------------
// Point lists: one "x y z" line per point.

inline void save_points(const std::vector<Vec3>& pts, const std::string& path) {
    auto f = open_out(path);
    for (const auto& p : pts) f << fmt(p.x) << ' ' << fmt(p.y) << ' ' << fmt(p.z) << '\n';
}

inline std::vector<Vec3> load_points(const std::string& path) {
    auto f = open_in(path);
    std::vector<Vec3> pts;
    Vec3 p;
    while (f >> p.x >> p.y >> p.z) pts.push_back(p);
    if (pts.empty()) fail("point file empty: " + path);
    return pts;
}

// ---------------------------------------------------------------------------
// Curve document: per-curve arrays of 4 control points and 4 weights.

inline void save_curves(const CurveNetwork& net, const std::string& path) {
    json doc;
    doc["curves"] = json::array();
    for (const auto& c : net.curves) {
        json jc;
        jc["control_points"] = json::array();
        for (const auto& p : c.control_points) jc["control_points"].push_back({p.x, p.y, p.z});
        jc["weights"] = c.weights;
        doc["curves"].push_back(jc);
    }
    open_out(path) << doc.dump(2) << '\n';
}

inline CurveNetwork load_curves(const std::string& path) {
    json doc = json::parse(open_in(path));
    CurveNetwork net;
    for (const auto& jc : doc.at("curves")) {
        RationalBezier c;
        for (int i = 0; i < 4; ++i) {
            const auto& p = jc.at("control_points").at(i);
            c.control_points[i] = {p.at(0), p.at(1), p.at(2)};
            c.weights[i] = jc.at("weights").at(i);
        }
        net.curves.push_back(c);
    }
    return net;
}

// ---------------------------------------------------------------------------
// Wireframe model description.

inline void save_model(const WireframeModel& model, const std::string& path) {
    json doc;
    doc["segments"] = json::array();
    for (const auto& s : model.segments)
        doc["segments"].push_back({s.a.x, s.a.y, s.a.z, s.b.x, s.b.y, s.b.z});
    doc["arcs"] = json::array();
    for (const auto& a : model.arcs)
        doc["arcs"].push_back({a.center.x, a.center.y, a.center.z, a.axis.x, a.axis.y, a.axis.z,
                               a.radius, a.start_angle, a.end_angle});
    doc["occluders"] = json::array();
    for (const auto& o : model.occluders) {
        if (const auto* box = std::get_if<AxisAlignedBox>(&o))
            doc["occluders"].push_back(
                {{"type", "box"},
                 {"lo", {box->lo.x, box->lo.y, box->lo.z}},
                 {"hi", {box->hi.x, box->hi.y, box->hi.z}}});
        else if (const auto* cyl = std::get_if<FiniteCylinder>(&o))
            doc["occluders"].push_back({{"type", "cylinder"},
                                        {"base", {cyl->base.x, cyl->base.y, cyl->base.z}},
                                        {"axis", {cyl->axis.x, cyl->axis.y, cyl->axis.z}},
                                        {"radius", cyl->radius},
                                        {"height", cyl->height}});
    }
    open_out(path) << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Training log: delimited text table.

inline void save_train_log(const std::vector<TrainLogEntry>& log, const std::string& path) {
    auto f = open_out(path);
    f << "iteration\ttotal\tedge\tdssim\toc\treg\tcount\tevent\n";
    for (const auto& e : log)
        f << e.iteration << '\t' << fmt(e.total) << '\t' << fmt(e.edge) << '\t' << fmt(e.dssim)
          << '\t' << fmt(e.oc) << '\t' << fmt(e.reg) << '\t' << e.count << '\t' << e.event << '\n';
}

inline std::vector<TrainLogEntry> load_train_log(const std::string& path) {
    auto f = open_in(path);
    std::string header;
    std::getline(f, header);
    std::vector<TrainLogEntry> log;
    TrainLogEntry e;
    while (f >> e.iteration >> e.total >> e.edge >> e.dssim >> e.oc >> e.reg >> e.count >> e.event)
        log.push_back(e);
    return log;
}

// ---------------------------------------------------------------------------
// Metric report: structured document plus a one-line summary.

inline void save_metrics(const MetricReport& r, const std::string& path,
                         const std::string& summary_path = {}) {
    json doc;
    doc["chamfer"] = r.chamfer;
    doc["precision"] = r.precision;
    doc["recall"] = r.recall;
    doc["fscore"] = r.fscore;
    doc["iou"] = r.iou;
    doc["n_pred"] = r.n_pred;
    doc["n_gt"] = r.n_gt;
    doc["threshold"] = r.threshold;
    open_out(path) << doc.dump(2) << '\n';
    if (!summary_path.empty()) {
        open_out(summary_path) << fmt(r.chamfer) << '\t' << fmt(r.precision) << '\t'
                               << fmt(r.recall) << '\t' << fmt(r.fscore) << '\t' << fmt(r.iou)
                               << '\n';
    }
}

inline MetricReport load_metrics(const std::string& path) {
    json doc = json::parse(open_in(path));
    MetricReport r;
    r.chamfer = doc.at("chamfer");
    r.precision = doc.at("precision");
    r.recall = doc.at("recall");
    r.fscore = doc.at("fscore");
    r.iou = doc.at("iou");
    r.n_pred = doc.at("n_pred");
    r.n_gt = doc.at("n_gt");
    r.threshold = doc.at("threshold");
    return r;
}

}  // namespace sgcr::io
