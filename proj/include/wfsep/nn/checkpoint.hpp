#pragma once

#include <string>
#include <vector>

#include "wfsep/nn/unet.hpp"

namespace wfsep::nn {

/// "WFTUNET1", u32 version, config block, u64 parameter count, then params,
/// first moments, second moments (f64 each) and the u64 step counter. All
/// little-endian.
std::vector<unsigned char> encode_checkpoint(const UNetModel& model);
UNetModel decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const UNetModel& model, const std::string& path);
UNetModel load_checkpoint(const std::string& path);

}  // namespace wfsep::nn
