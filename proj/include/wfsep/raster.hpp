#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "wfsep/types.hpp"

namespace wfsep {

// Binary raster layout, little-endian throughout:
//   "WFTRAST1" | dtype u8 (0 = float32, 1 = float64) | rank u8 | dims u32[rank] | payload
// Payload is row-major. Complex arrays carry a trailing dimension of 2 (re, im).
enum class Dtype : std::uint8_t { Float32 = 0, Float64 = 1 };

std::size_t dtype_size(Dtype dtype);

struct RasterArray {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
    Dtype dtype = Dtype::Float64;

    std::size_t element_count() const;
    bool operator==(const RasterArray&) const = default;
};

/// Throws ValidationError for non-finite values or a dims/payload mismatch,
/// IoError when the file cannot be written.
void write_raster(const std::filesystem::path& path, const RasterArray& array);

/// Throws IoError, BadMagicError, UnknownDtypeError or TruncatedError.
RasterArray read_raster(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_raster(const RasterArray& array);
RasterArray decode_raster(const std::vector<std::uint8_t>& bytes);

RasterArray to_raster(const EchoSeries& series, Dtype dtype = Dtype::Float64);
EchoSeries series_from_raster(const RasterArray& array, const AcquisitionProtocol& protocol);

/// Maps are stored as a 5 x H x W stack: water, fat, r2star, offres, mask (0/1).
RasterArray to_raster(const ParameterMaps& maps, Dtype dtype = Dtype::Float64);
ParameterMaps maps_from_raster(const RasterArray& array);

RasterArray to_raster(const RealImage& image, Dtype dtype = Dtype::Float64);

}  // namespace wfsep
