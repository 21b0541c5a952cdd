#include "arsafe/geom/io.hpp"

#include "arsafe/error.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace arsafe::geom {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
    throw IoError(path.string() + ": " + what);
}

[[noreturn]] void fail_at(const fs::path& path, std::streamoff offset, const std::string& what) {
    throw IoError(path.string() + " at byte offset " + std::to_string(offset) + ": " + what);
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    return out;
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& in, const fs::path& path) {
    std::string tok;
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(c);
    }
    if (tok.empty()) fail_at(path, in.tellg(), "unexpected end of header");
    return tok;
}

int header_int(std::istream& in, const fs::path& path) {
    const std::string tok = header_token(in, path);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(path, "malformed header field '" + tok + "'");
    }
}

struct NetpbmHeader {
    int width = 0;
    int height = 0;
    std::streamoff payload_offset = 0;
};

NetpbmHeader read_netpbm_header(std::istream& in, const fs::path& path, const char* magic) {
    if (header_token(in, path) != magic) fail(path, std::string("expected magic ") + magic);
    NetpbmHeader h;
    h.width = header_int(in, path);
    h.height = header_int(in, path);
    const int maxval = header_int(in, path);
    if (h.width <= 0 || h.height <= 0) fail(path, "non-positive image size");
    if (maxval != 255) fail(path, "only maxval 255 is supported");
    h.payload_offset = in.tellg();
    return h;
}

void read_payload(std::istream& in, const fs::path& path, std::streamoff offset, char* dst, std::size_t bytes) {
    in.read(dst, static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) {
        fail_at(path, offset + in.gcount(),
                "truncated payload: expected " + std::to_string(bytes) + " bytes, found " + std::to_string(in.gcount()));
    }
}

}  // namespace

double meters_per_unit(LengthUnit unit) {
    switch (unit) {
        case LengthUnit::Meter: return 1.0;
        case LengthUnit::Centimeter: return 0.01;
        case LengthUnit::Millimeter: return 0.001;
    }
    return 1.0;
}

LengthUnit unit_from_string(const std::string& s) {
    if (s == "m") return LengthUnit::Meter;
    if (s == "cm") return LengthUnit::Centimeter;
    if (s == "mm") return LengthUnit::Millimeter;
    throw InvalidArgument("unknown length unit '" + s + "' (expected m, cm or mm)");
}

std::string to_string(LengthUnit unit) {
    switch (unit) {
        case LengthUnit::Meter: return "m";
        case LengthUnit::Centimeter: return "cm";
        case LengthUnit::Millimeter: return "mm";
    }
    return "m";
}

void write_pgm(const fs::path& path, const GrayImage& img) {
    auto out = open_out(path);
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.values().data()), static_cast<std::streamsize>(img.size()));
    if (!out) fail(path, "write failed");
}

GrayImage read_pgm(const fs::path& path) {
    auto in = open_in(path);
    const auto h = read_netpbm_header(in, path, "P5");
    GrayImage img(h.width, h.height);
    read_payload(in, path, h.payload_offset, reinterpret_cast<char*>(img.values().data()), img.size());
    return img;
}

void write_ppm(const fs::path& path, const RgbImage& img) {
    auto out = open_out(path);
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    static_assert(sizeof(Rgb8) == 3);
    out.write(reinterpret_cast<const char*>(img.values().data()), static_cast<std::streamsize>(img.size() * 3));
    if (!out) fail(path, "write failed");
}

RgbImage read_ppm(const fs::path& path) {
    auto in = open_in(path);
    const auto h = read_netpbm_header(in, path, "P6");
    RgbImage img(h.width, h.height);
    read_payload(in, path, h.payload_offset, reinterpret_cast<char*>(img.values().data()), img.size() * 3);
    return img;
}

void write_pfm(const fs::path& path, const Raster<double>& img) {
    static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
    auto out = open_out(path);
    out << "Pf\n" << img.width() << ' ' << img.height() << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(img.width()));
    for (int v = img.height() - 1; v >= 0; --v) {
        for (int u = 0; u < img.width(); ++u) {
            const double d = img(u, v);
            row[u] = is_valid(d) ? static_cast<float>(d) : std::numeric_limits<float>::infinity();
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) fail(path, "write failed");
}

Raster<double> read_pfm(const fs::path& path) {
    auto in = open_in(path);
    const std::string magic = header_token(in, path);
    if (magic == "PF") fail(path, "three-channel PFM is not supported");
    if (magic != "Pf") fail(path, "expected magic Pf");
    const int w = header_int(in, path);
    const int h = header_int(in, path);
    const std::string scale_tok = header_token(in, path);
    double scale = 0.0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        fail(path, "malformed scale '" + scale_tok + "'");
    }
    if (w <= 0 || h <= 0) fail(path, "non-positive image size");
    if (scale == 0.0) fail(path, "zero scale field");
    const bool little = scale < 0.0;
    const std::streamoff payload = in.tellg();
    Raster<double> img(w, h);
    std::vector<float> row(static_cast<std::size_t>(w));
    for (int r = 0; r < h; ++r) {
        const std::streamoff at = payload + static_cast<std::streamoff>(r) * w * 4;
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != row.size() * sizeof(float)) {
            fail_at(path, at + in.gcount(),
                    "truncated payload: expected " + std::to_string(static_cast<long long>(w) * h * 4) + " bytes");
        }
        const int v = h - 1 - r;
        for (int u = 0; u < w; ++u) {
            std::uint32_t bits = 0;
            std::memcpy(&bits, &row[u], 4);
            if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
            float f = 0.0f;
            std::memcpy(&f, &bits, 4);
            img(u, v) = std::isfinite(f) ? static_cast<double>(f) : kInvalid;
        }
    }
    return img;
}

Raster<double> quantize_f32(const Raster<double>& img) {
    Raster<double> out = img;
    for (double& d : out.values()) d = is_valid(d) ? static_cast<double>(static_cast<float>(d)) : kInvalid;
    return out;
}

void write_ply(const fs::path& path, const PointCloud& cloud, LengthUnit unit) {
    auto out = open_out(path);
    const double s = 1.0 / meters_per_unit(unit);
    out << "ply\nformat ascii 1.0\n";
    out << "comment frame " << to_string(cloud.frame) << "\n";
    out << "comment unit " << to_string(unit) << "\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_normals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "end_header\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        out << p.x() * s << ' ' << p.y() * s << ' ' << p.z() * s;
        if (cloud.has_normals()) {
            const Vec3& n = cloud.normals[i];
            out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
        }
        out << '\n';
    }
    if (!out) fail(path, "write failed");
}

PointCloud read_ply(const fs::path& path, FrameId frame, LengthUnit unit) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "ply") fail(path, "missing 'ply' magic");
    std::size_t count = 0;
    std::vector<std::string> props;
    bool in_vertex = false;
    bool ascii = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (key == "comment") {
            std::string what, value;
            ls >> what >> value;
            if (what == "unit") unit = unit_from_string(value);
        } else if (key == "element") {
            std::string name;
            ls >> name;
            in_vertex = name == "vertex";
            if (in_vertex) ls >> count;
        } else if (key == "property" && in_vertex) {
            std::string type, name;
            ls >> type >> name;
            props.push_back(name);
        } else if (key == "end_header") {
            break;
        }
    }
    if (!ascii) fail(path, "only ASCII PLY is supported");
    auto find = [&](const char* name) -> int {
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (props[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    const int ix = find("x"), iy = find("y"), iz = find("z");
    const int inx = find("nx"), iny = find("ny"), inz = find("nz");
    if (ix < 0 || iy < 0 || iz < 0) fail(path, "vertex element lacks x/y/z");
    const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
    const double s = meters_per_unit(unit);
    PointCloud cloud(frame);
    cloud.points.reserve(count);
    std::vector<double> vals(props.size());
    for (std::size_t i = 0; i < count; ++i) {
        const std::streamoff at = in.tellg();
        if (!std::getline(in, line)) fail_at(path, at, "expected " + std::to_string(count) + " vertices, got " + std::to_string(i));
        std::istringstream ls(line);
        for (double& v : vals) {
            if (!(ls >> v)) fail_at(path, at, "malformed vertex record " + std::to_string(i));
        }
        cloud.points.emplace_back(vals[ix] * s, vals[iy] * s, vals[iz] * s);
        if (normals) cloud.normals.emplace_back(vals[inx], vals[iny], vals[inz]);
    }
    return cloud;
}

void write_obj(const fs::path& path, const TriangleMesh& mesh, LengthUnit unit) {
    auto out = open_out(path);
    const double s = 1.0 / meters_per_unit(unit);
    out << "# frame " << to_string(mesh.frame) << "\n# unit " << to_string(unit) << "\n";
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x() * s << ' ' << v.y() * s << ' ' << v.z() * s << '\n';
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (!out) fail(path, "write failed");
}

TriangleMesh read_obj(const fs::path& path, FrameId frame, LengthUnit unit) {
    auto in = open_in(path);
    TriangleMesh mesh;
    mesh.frame = frame;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::vector<long>> faces;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "#") {
            std::string what, value;
            ls >> what >> value;
            if (what == "unit") unit = unit_from_string(value);
        } else if (key == "v") {
            double x = 0, y = 0, z = 0;
            if (!(ls >> x >> y >> z)) fail(path, "malformed vertex on line " + std::to_string(lineno));
            mesh.vertices.emplace_back(x, y, z);
        } else if (key == "f") {
            std::vector<long> idx;
            std::string tok;
            while (ls >> tok) {
                const long i = std::stol(tok.substr(0, tok.find('/')));
                idx.push_back(i < 0 ? static_cast<long>(mesh.vertices.size()) + i : i - 1);
            }
            if (idx.size() < 3) fail(path, "face with fewer than 3 vertices on line " + std::to_string(lineno));
            faces.push_back(std::move(idx));
        }
    }
    const double s = meters_per_unit(unit);
    for (auto& v : mesh.vertices) v *= s;
    for (const auto& f : faces) {
        for (long i : f) {
            if (i < 0 || static_cast<std::size_t>(i) >= mesh.vertices.size()) fail(path, "face index out of range");
        }
        for (std::size_t k = 1; k + 1 < f.size(); ++k) {
            mesh.triangles.push_back({static_cast<std::uint32_t>(f[0]), static_cast<std::uint32_t>(f[k]),
                                      static_cast<std::uint32_t>(f[k + 1])});
        }
    }
    return mesh;
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.values().data(), 0, nullptr)) {
        throw IoError(std::string("png encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.values().data(), 0, nullptr)) {
        throw IoError(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IoError(std::string("png decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    RgbImage img(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, img.values().data(), 0, nullptr)) {
        throw IoError(std::string("png decode failed: ") + image.message);
    }
    return img;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    namespace b64 = boost::beast::detail::base64;
    std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
    const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
    out.resize(written);
    return out;
}

}  // namespace arsafe::geom
