// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsc/errors.hpp"
#include "gsc/io.hpp"

namespace gsc {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Gram-Schmidt on the rows; input is already orthonormal to ~1e-4, this
/// just tightens it to machine precision deterministically.
Mat3 reorthonormalize(const Mat3& r) {
    Vec3 r0{r(0, 0), r(0, 1), r(0, 2)};
    Vec3 r1{r(1, 0), r(1, 1), r(1, 2)};
    r0 = normalized(r0);
    r1 = normalized(r1 - r0 * dot(r0, r1));
    const Vec3 r2 = cross(r0, r1);
    Mat3 out;
    for (int c = 0; c < 3; ++c) {
        out(0, static_cast<std::size_t>(c)) = r0[static_cast<std::size_t>(c)];
        out(1, static_cast<std::size_t>(c)) = r1[static_cast<std::size_t>(c)];
        out(2, static_cast<std::size_t>(c)) = r2[static_cast<std::size_t>(c)];
    }
    return out;
}

} // namespace

std::array<double, 16> Camera::world_to_camera() const {
    std::array<double, 16> m{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
            m[static_cast<std::size_t>(r * 4 + c)] =
                rotation(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        m[static_cast<std::size_t>(r * 4 + 3)] = translation[static_cast<std::size_t>(r)];
    }
    m[15] = 1.0;
    return m;
}

Camera Camera::from_w2c(double fx, double fy, double cx, double cy, int width, int height,
                        const std::array<double, 16>& w2c, const std::string& label,
                        double ortho_tol) {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw ValidationError(label + ": fx and fy must be positive");
    if (width <= 0 || height <= 0)
        throw ValidationError(label + ": width and height must be positive");
    for (double v : w2c)
        if (!std::isfinite(v))
            throw ValidationError(label + ": non-finite world_to_camera entry");

    constexpr double kAffineTol = 1e-6;
    if (std::abs(w2c[12]) > kAffineTol || std::abs(w2c[13]) > kAffineTol ||
        std::abs(w2c[14]) > kAffineTol || std::abs(w2c[15] - 1.0) > kAffineTol)
        throw ValidationError(label + ": world_to_camera last row must be (0,0,0,1)");

    Mat3 rot;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            rot(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                w2c[static_cast<std::size_t>(r * 4 + c)];

    const Mat3 rtr = rot.transposed() * rot;
    const double dev = std::sqrt(frobenius_sq(rtr - Mat3::identity()));
    if (dev > ortho_tol) {
        std::ostringstream msg;
        msg << label << ": rotation block is not orthonormal (|R^T R - I|_F = " << dev
            << ", tolerance " << ortho_tol << ")";
        throw ValidationError(msg.str());
    }
    if (det(rot) <= 0.0)
        throw ValidationError(label + ": rotation block must have determinant +1");

    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = width;
    cam.height = height;
    cam.rotation = reorthonormalize(rot);
    cam.translation = {w2c[3], w2c[7], w2c[11]};
    return cam;
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx,
                       double fy, double cx, double cy, int width, int height) {
    const Vec3 forward = normalized(target - eye);
    if (norm(forward) == 0.0 || norm(cross(forward, up)) < 1e-12)
        throw InvalidInputError("look_at: view direction is degenerate or parallel to up");
    // Camera frame: z forward, y the down direction orthogonal to forward,
    // x completing the right-handed triple (x = y cross z).
    const Vec3 down = normalized(-up + forward * dot(up, forward));
    const Vec3 right = cross(down, forward);
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = width;
    cam.height = height;
    for (int c = 0; c < 3; ++c) {
        cam.rotation(0, static_cast<std::size_t>(c)) = right[static_cast<std::size_t>(c)];
        cam.rotation(1, static_cast<std::size_t>(c)) = down[static_cast<std::size_t>(c)];
        cam.rotation(2, static_cast<std::size_t>(c)) = forward[static_cast<std::size_t>(c)];
    }
    cam.translation = -(cam.rotation * eye);
    return cam;
}

std::vector<Camera> read_cameras(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidInputError("read_cameras: cannot open '" + path + "'");

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("read_cameras: " + path + ": " + e.what());
    }
    if (!doc.is_array())
        throw FormatError("read_cameras: " + path + ": top-level value must be an array");

    std::vector<Camera> cameras;
    cameras.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& rec = doc[i];
        const std::string label = "camera " + std::to_string(i);
        if (!rec.is_object())
            throw FormatError("read_cameras: " + label + ": record must be an object");
        auto num = [&](const char* key) -> double {
            if (!rec.contains(key) || !rec[key].is_number())
                throw FormatError("read_cameras: " + label + ": missing numeric field '" +
                                  key + "'");
            return rec[key].get<double>();
        };
        if (!rec.contains("world_to_camera") || !rec["world_to_camera"].is_array() ||
            rec["world_to_camera"].size() != 16)
            throw FormatError("read_cameras: " + label +
                              ": world_to_camera must be an array of 16 numbers");
        std::array<double, 16> w2c{};
        for (std::size_t k = 0; k < 16; ++k) {
            const json& v = rec["world_to_camera"][k];
            if (!v.is_number())
                throw FormatError("read_cameras: " + label +
                                  ": world_to_camera entries must be numbers");
            w2c[k] = v.get<double>();
        }
        cameras.push_back(Camera::from_w2c(num("fx"), num("fy"), num("cx"), num("cy"),
                                           static_cast<int>(num("width")),
                                           static_cast<int>(num("height")), w2c, label));
    }
    return cameras;
}

void write_cameras(const std::vector<Camera>& cameras, const std::string& path) {
    ordered_json doc = ordered_json::array();
    for (const Camera& cam : cameras) {
        ordered_json rec;
        rec["fx"] = cam.fx;
        rec["fy"] = cam.fy;
        rec["cx"] = cam.cx;
        rec["cy"] = cam.cy;
        rec["width"] = cam.width;
        rec["height"] = cam.height;
        rec["world_to_camera"] = cam.world_to_camera();
        doc.push_back(std::move(rec));
    }
    std::ofstream out(path);
    if (!out)
        throw IoError("write_cameras: cannot open '" + path + "' for writing");
    out << doc.dump(2) << "\n";
    if (!out)
        throw IoError("write_cameras: failed writing '" + path + "'");
}

} // namespace gsc
