#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>

#include "pixcue/mask.hpp"
#include "pixcue/quantize.hpp"
#include "pixcue/train.hpp"
#include "pixcue/types.hpp"

namespace pixcue {

// .pxi image container: magic "PIXI", u32 version, u32 rows, u32 cols,
// u8 dtype (0 = real f32, 1 = interleaved complex f32), row-major LE payload.
void save_image(const RealImage& img, const std::filesystem::path& path);
void save_image(const ComplexImage& img, const std::filesystem::path& path);
void save_image(const KSpaceGrid& k, const std::filesystem::path& path);

using LoadedImage = std::variant<RealImage, ComplexImage>;
LoadedImage load_image(const std::filesystem::path& path);
RealImage load_real_image(const std::filesystem::path& path);
ComplexImage load_complex_image(const std::filesystem::path& path);

// .mask: text, first line N, second line comma-separated sorted indices.
void save_mask(const SamplingMask& m, const std::filesystem::path& path);
SamplingMask load_mask(const std::filesystem::path& path);

// .pxp probability volume: magic "PIXP", u32 version, u32 rows, u32 cols,
// u32 D, then per-pixel length-D f32 vectors.
void save_volume(const ProbabilityVolume& p, const std::filesystem::path& path);
ProbabilityVolume load_volume(const std::filesystem::path& path);

// .pxc checkpoint: magic "PXCU", u32 version, u32 header length, JSON header
// (tensor table, config echo, loss history), then tensors as f32 LE in
// header order.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Plain (ASCII) 8-bit PGM of the min-max normalized map.
void save_pgm(const RealImage& img, const std::filesystem::path& path);

// Whole-file write via temp file + rename so readers never observe partials.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace pixcue
