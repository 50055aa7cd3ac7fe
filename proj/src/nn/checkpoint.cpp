#include "wfsep/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "wfsep/error.hpp"

namespace wfsep::nn {

namespace {

constexpr char kMagic[8] = {'W', 'F', 'T', 'U', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <class T>
void put(std::vector<unsigned char>& out, T value) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &value, sizeof(T));
    out.insert(out.end(), b, b + sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::vector<unsigned char>& b) : bytes_(b) {}

    template <class T>
    T get() {
        if (bytes_.size() - pos_ < sizeof(T)) throw TruncatedError("checkpoint is truncated");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void doubles(std::vector<double>& out, std::size_t n) {
        if ((bytes_.size() - pos_) / sizeof(double) < n) throw TruncatedError("checkpoint is truncated");
        out.resize(n);
        std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const UNetModel& model) {
    std::vector<unsigned char> out(kMagic, kMagic + 8);
    put<std::uint32_t>(out, kVersion);
    const auto& c = model.config;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.in_channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.out_channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.levels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.base_features));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.image_size));
    put<double>(out, c.dropout_rate);
    put<std::uint64_t>(out, model.params.size());
    for (const auto* vec : {&model.params, &model.m, &model.v})
        for (double x : *vec) put<double>(out, x);
    put<std::uint64_t>(out, model.step);
    return out;
}

UNetModel decode_checkpoint(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 8) throw TruncatedError("checkpoint is truncated");
    if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw BadMagicError("not a U-Net checkpoint");
    Reader r(bytes);
    for (int i = 0; i < 8; ++i) r.get<char>();
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
    UNetConfig cfg;
    cfg.in_channels = r.get<std::uint32_t>();
    cfg.out_channels = r.get<std::uint32_t>();
    cfg.levels = r.get<std::uint32_t>();
    cfg.base_features = r.get<std::uint32_t>();
    cfg.image_size = r.get<std::uint32_t>();
    cfg.dropout_rate = r.get<double>();
    try {
        cfg.validate();
    } catch (const ValidationError& e) {
        throw ParseError(std::string("checkpoint config invalid: ") + e.what());
    }
    UNetModel model = build_unet(cfg, 0);
    const auto n = r.get<std::uint64_t>();
    if (n != model.params.size()) throw ParseError("checkpoint parameter count does not match its config");
    r.doubles(model.params, n);
    r.doubles(model.m, n);
    r.doubles(model.v, n);
    model.step = r.get<std::uint64_t>();
    if (!r.at_end()) throw ParseError("trailing bytes after checkpoint");
    return model;
}

void save_checkpoint(const UNetModel& model, const std::string& path) {
    const auto bytes = encode_checkpoint(model);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path, "cannot write checkpoint");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError(path, "failed writing checkpoint");
}

UNetModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path, "cannot open checkpoint");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace wfsep::nn
