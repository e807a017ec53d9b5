#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "defreg/image.hpp"

namespace defreg {

// Reads P2 (ASCII) or P5 (binary) graymaps with maxval 1..65535. Errors are
// FormatError with the byte offset of the problem in the message.
GrayImage load_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);

// ROI mask file: any PGM, nonzero pixel = inside.
std::vector<std::uint8_t> load_mask(const std::filesystem::path& path, int expected_width,
                                    int expected_height);

// Binary P5; maxval 255 or 65535 selects 8- or 16-bit samples. Intensities
// are quantized with round-to-nearest.
void save_pgm(const std::filesystem::path& path, const GrayImage& image, int maxval = 65535);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image, int maxval = 65535);

}  // namespace defreg
