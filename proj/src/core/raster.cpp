#include "wfsep/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace wfsep {

namespace {

constexpr char kMagic[8] = {'W', 'F', 'T', 'R', 'A', 'S', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T get(const std::vector<std::uint8_t>& in, std::size_t& offset) {
    if (offset + sizeof(T) > in.size()) throw TruncatedError("raster file is truncated");
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

std::size_t product(const std::vector<std::uint32_t>& dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

}  // namespace

std::size_t dtype_size(Dtype dtype) { return dtype == Dtype::Float32 ? 4 : 8; }

std::size_t RasterArray::element_count() const { return product(dims); }

std::vector<std::uint8_t> encode_raster(const RasterArray& array) {
    if (array.dims.empty() || array.dims.size() > 255)
        throw ValidationError("raster rank must be in [1, 255]");
    if (array.element_count() != array.values.size())
        throw ValidationError("raster dims do not match value count");
    for (double v : array.values)
        if (!std::isfinite(v)) throw ValidationError("raster contains non-finite values");

    std::vector<std::uint8_t> out;
    out.reserve(10 + 4 * array.dims.size() + array.values.size() * dtype_size(array.dtype));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(static_cast<std::uint8_t>(array.dtype));
    out.push_back(static_cast<std::uint8_t>(array.dims.size()));
    for (auto d : array.dims) put<std::uint32_t>(out, d);
    if (array.dtype == Dtype::Float32) {
        for (double v : array.values) put<float>(out, static_cast<float>(v));
    } else {
        for (double v : array.values) put<double>(out, v);
    }
    return out;
}

RasterArray decode_raster(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw BadMagicError("not a raster file (bad magic)");
    std::size_t offset = sizeof(kMagic);
    const auto code = get<std::uint8_t>(bytes, offset);
    if (code > 1) throw UnknownDtypeError("unknown raster dtype code " + std::to_string(code));
    RasterArray array;
    array.dtype = static_cast<Dtype>(code);
    const auto rank = get<std::uint8_t>(bytes, offset);
    if (rank == 0) throw ParseError("raster rank must be at least 1");
    for (std::uint8_t i = 0; i < rank; ++i) array.dims.push_back(get<std::uint32_t>(bytes, offset));

    const std::size_t n = product(array.dims);
    const std::size_t width = dtype_size(array.dtype);
    if (bytes.size() - offset < n * width) throw TruncatedError("raster payload is truncated");
    if (bytes.size() - offset > n * width) throw ParseError("raster payload has trailing bytes");
    array.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        array.values[i] = array.dtype == Dtype::Float32
                              ? static_cast<double>(get<float>(bytes, offset))
                              : get<double>(bytes, offset);
    }
    return array;
}

void write_raster(const std::filesystem::path& path, const RasterArray& array) {
    const auto bytes = encode_raster(array);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open raster for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string(), "failed writing raster");
}

RasterArray read_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open raster for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_raster(bytes);
    } catch (const BadMagicError& e) {
        throw BadMagicError(std::string(e.what()) + ": " + path.string());
    } catch (const TruncatedError& e) {
        throw TruncatedError(std::string(e.what()) + ": " + path.string());
    } catch (const UnknownDtypeError& e) {
        throw UnknownDtypeError(std::string(e.what()) + ": " + path.string());
    }
}

RasterArray to_raster(const EchoSeries& series, Dtype dtype) {
    RasterArray array;
    array.dtype = dtype;
    array.dims = {static_cast<std::uint32_t>(series.echo_count()), static_cast<std::uint32_t>(series.rows()),
                  static_cast<std::uint32_t>(series.cols()), 2};
    array.values.reserve(series.data().size() * 2);
    for (const auto& v : series.data()) {
        array.values.push_back(v.real());
        array.values.push_back(v.imag());
    }
    return array;
}

EchoSeries series_from_raster(const RasterArray& array, const AcquisitionProtocol& protocol) {
    if (array.dims.size() != 4 || array.dims[3] != 2)
        throw ParseError("echo series raster must have dims N x H x W x 2");
    if (array.dims[0] != protocol.echo_count())
        throw ValidationError("echo series raster echo count differs from protocol");
    std::vector<cdouble> data(array.values.size() / 2);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = {array.values[2 * i], array.values[2 * i + 1]};
    return EchoSeries(protocol, array.dims[1], array.dims[2], std::move(data));
}

RasterArray to_raster(const ParameterMaps& maps, Dtype dtype) {
    RasterArray array;
    array.dtype = dtype;
    array.dims = {5, static_cast<std::uint32_t>(maps.rows()), static_cast<std::uint32_t>(maps.cols())};
    array.values.reserve(5 * maps.water.size());
    for (const RealImage* img : {&maps.water, &maps.fat, &maps.r2star, &maps.offres})
        array.values.insert(array.values.end(), img->values().begin(), img->values().end());
    for (auto m : maps.mask.values()) array.values.push_back(m ? 1.0 : 0.0);
    return array;
}

ParameterMaps maps_from_raster(const RasterArray& array) {
    if (array.dims.size() != 3 || array.dims[0] != 5)
        throw ParseError("parameter map raster must have dims 5 x H x W");
    const std::size_t rows = array.dims[1], cols = array.dims[2], plane = rows * cols;
    ParameterMaps maps(rows, cols);
    RealImage* images[] = {&maps.water, &maps.fat, &maps.r2star, &maps.offres};
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < plane; ++i) (*images[k])[i] = array.values[k * plane + i];
    for (std::size_t i = 0; i < plane; ++i) maps.mask[i] = array.values[4 * plane + i] != 0.0 ? 1 : 0;
    return maps;
}

RasterArray to_raster(const RealImage& image, Dtype dtype) {
    RasterArray array;
    array.dtype = dtype;
    array.dims = {static_cast<std::uint32_t>(image.rows()), static_cast<std::uint32_t>(image.cols())};
    array.values.assign(image.values().begin(), image.values().end());
    return array;
}

}  // namespace wfsep
