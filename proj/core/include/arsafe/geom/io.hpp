#pragma once

#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace arsafe::geom {

/// Length unit declared by a file. Everything in memory is meters.
enum class LengthUnit { Meter, Centimeter, Millimeter };
double meters_per_unit(LengthUnit unit);
LengthUnit unit_from_string(const std::string& s);
std::string to_string(LengthUnit unit);

// 8-bit grayscale / mask images, binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

// 8-bit RGB, binary PPM (P6).
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);

/// Single-channel float PFM ("Pf", negative scale = little-endian, rows stored bottom-up).
/// Values are stored as float32; NaN cells are written as +inf and read back as NaN.
void write_pfm(const std::filesystem::path& path, const Raster<double>& img);
Raster<double> read_pfm(const std::filesystem::path& path);
/// Rounds every cell to float32, i.e. the values a PFM round trip preserves.
Raster<double> quantize_f32(const Raster<double>& img);

/// ASCII PLY with x y z [nx ny nz]; frame and unit recorded as header comments.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, LengthUnit unit = LengthUnit::Meter);
PointCloud read_ply(const std::filesystem::path& path, FrameId frame, LengthUnit unit = LengthUnit::Meter);

/// Wavefront OBJ v/f records; polygons are fan-triangulated.
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh, LengthUnit unit = LengthUnit::Meter);
TriangleMesh read_obj(const std::filesystem::path& path, FrameId frame, LengthUnit unit = LengthUnit::Meter);

/// In-memory PNG encoding (8-bit RGB).
std::vector<std::uint8_t> encode_png(const RgbImage& img);
RgbImage decode_png(const std::vector<std::uint8_t>& bytes);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace arsafe::geom
