// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gsc/errors.hpp"
#include "gsc/io.hpp"
#include "gsc/log.hpp"

namespace gsc {

namespace {

struct PlyHeader {
    std::size_t vertex_count = 0;
    std::vector<std::string> properties; // in file order, all float32
};

PlyHeader parse_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line) || (line != "ply" && line != "ply\r"))
        throw FormatError(path + ": not a PLY file (missing 'ply' magic)");

    PlyHeader h;
    bool format_seen = false;
    bool in_vertex_element = false;
    bool vertex_seen = false;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok.empty())
            continue;
        if (tok == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt != "binary_little_endian")
                throw FormatError(path + ": unsupported PLY format '" + fmt +
                                  "' (only binary_little_endian is supported)");
            format_seen = true;
        } else if (tok == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                if (vertex_seen)
                    throw FormatError(path + ": duplicate vertex element");
                h.vertex_count = count;
                in_vertex_element = true;
                vertex_seen = true;
            } else {
                // Any non-vertex element would shift the binary layout in a
                // way this reader does not model.
                if (!vertex_seen)
                    throw FormatError(path + ": unexpected element '" + name +
                                      "' before vertex");
                in_vertex_element = false;
            }
        } else if (tok == "property") {
            if (!in_vertex_element)
                continue; // properties of trailing elements are irrelevant
            std::string type, name;
            ls >> type >> name;
            if (type == "list")
                throw FormatError(path + ": list properties are not supported");
            if (type != "float" && type != "float32")
                throw FormatError(path + ": property '" + name + "' has type '" + type +
                                  "' (only float32 is supported)");
            h.properties.push_back(name);
        } else if (tok == "end_header") {
            if (!format_seen)
                throw FormatError(path + ": missing format line");
            if (!vertex_seen)
                throw FormatError(path + ": missing vertex element");
            return h;
        } else {
            throw FormatError(path + ": unrecognized header line '" + line + "'");
        }
    }
    throw FormatError(path + ": truncated header (no end_header)");
}

} // namespace

GaussianCloud read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInputError("read_ply: cannot open '" + path + "'");

    const PlyHeader h = parse_header(in, path);

    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < h.properties.size(); ++i) {
        if (!col.emplace(h.properties[i], i).second)
            throw FormatError(path + ": duplicate property '" + h.properties[i] + "'");
    }

    auto require = [&](const std::string& name) -> std::size_t {
        auto it = col.find(name);
        if (it == col.end())
            throw FormatError(path + ": missing required property '" + name + "'");
        return it->second;
    };

    const std::size_t ix = require("x"), iy = require("y"), iz = require("z");
    const std::size_t idc[3] = {require("f_dc_0"), require("f_dc_1"), require("f_dc_2")};
    const std::size_t iop = require("opacity");
    const std::size_t isc[3] = {require("scale_0"), require("scale_1"), require("scale_2")};
    const std::size_t irot[4] = {require("rot_0"), require("rot_1"), require("rot_2"),
                                 require("rot_3")};

    // f_rest_* must form a contiguous 0..R-1 block with R in {0,9,24,45}.
    std::size_t n_rest = 0;
    for (const auto& name : h.properties)
        if (name.rfind("f_rest_", 0) == 0)
            ++n_rest;
    const int sh_deg = sh_degree_from_count(3 + n_rest); // throws on bad counts
    std::vector<std::size_t> irest(n_rest);
    for (std::size_t j = 0; j < n_rest; ++j)
        irest[j] = require("f_rest_" + std::to_string(j));

    const std::size_t stride = h.properties.size();
    std::vector<float> row(stride);

    GaussianCloud cloud;
    cloud.primitives.resize(h.vertex_count);
    const int n_coeffs = sh_coeff_count(sh_deg);

    for (std::size_t v = 0; v < h.vertex_count; ++v) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(stride * sizeof(float)));
        if (!in)
            throw FormatError(path + ": unexpected end of file in vertex data");
        GaussianPrimitive& g = cloud.primitives[v];
        g.mean = {row[ix], row[iy], row[iz]};
        g.opacity_logit = row[iop];
        g.log_scales = {row[isc[0]], row[isc[1]], row[isc[2]]};
        g.rotation = {row[irot[0]], row[irot[1]], row[irot[2]], row[irot[3]]};
        g.sh_coeffs.resize(static_cast<std::size_t>(n_coeffs));
        g.sh_coeffs[0] = row[idc[0]];
        g.sh_coeffs[1] = row[idc[1]];
        g.sh_coeffs[2] = row[idc[2]];
        for (std::size_t j = 0; j < n_rest; ++j)
            g.sh_coeffs[3 + j] = row[irest[j]];
    }
    log::debug("read_ply: ", path, ": ", cloud.size(), " primitives, SH degree ", sh_deg);
    return cloud;
}

void write_ply(const GaussianCloud& cloud, const std::string& path) {
    // Empty clouds get a degree-0 header with zero vertices.
    int sh_deg = 0;
    if (!cloud.empty()) {
        sh_deg = cloud.primitives[0].sh_degree();
        for (const auto& g : cloud.primitives)
            if (g.sh_degree() != sh_deg)
                throw InvalidInputError(
                    "write_ply: primitives have mixed SH degrees; PLY requires a "
                    "homogeneous layout");
    }
    const std::size_t n_rest = static_cast<std::size_t>(sh_coeff_count(sh_deg)) - 3;

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_ply: cannot open '" + path + "' for writing");

    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    for (const char* p : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"})
        out << "property float " << p << "\n";
    for (std::size_t j = 0; j < n_rest; ++j)
        out << "property float f_rest_" << j << "\n";
    for (const char* p : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
                          "rot_2", "rot_3"})
        out << "property float " << p << "\n";
    out << "end_header\n";

    // In-memory values are double; the vanilla layout stores float32.
    std::vector<float> row(14 + n_rest);
    const auto f = [](double v) { return static_cast<float>(v); };
    for (const auto& g : cloud.primitives) {
        std::size_t k = 0;
        row[k++] = f(g.mean[0]);
        row[k++] = f(g.mean[1]);
        row[k++] = f(g.mean[2]);
        row[k++] = f(g.sh_coeffs[0]);
        row[k++] = f(g.sh_coeffs[1]);
        row[k++] = f(g.sh_coeffs[2]);
        for (std::size_t j = 0; j < n_rest; ++j)
            row[k++] = f(g.sh_coeffs[3 + j]);
        row[k++] = f(g.opacity_logit);
        row[k++] = f(g.log_scales[0]);
        row[k++] = f(g.log_scales[1]);
        row[k++] = f(g.log_scales[2]);
        row[k++] = f(g.rotation[0]);
        row[k++] = f(g.rotation[1]);
        row[k++] = f(g.rotation[2]);
        row[k++] = f(g.rotation[3]);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out)
        throw IoError("write_ply: failed writing '" + path + "'");
}

} // namespace gsc
