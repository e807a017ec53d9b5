#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "defreg/fields.hpp"
#include "defreg/image.hpp"

namespace defreg {

inline constexpr double kMapeFloor = 1e-6;

struct MapeResult {
    double value = 0.0;      // fraction, 0.03 == 3 %
    std::size_t used = 0;    // pixels in the sum
    std::size_t excluded = 0;  // masked-in pixels dropped by the floor
};

// Mean absolute percentage error of `test` against `reference` over masked-in
// pixels whose |reference| reaches the floor. An empty mask means "all".
// Throws UndefinedMapeError when no pixel survives.
MapeResult mape(std::span<const double> reference, std::span<const double> test,
                std::span<const std::uint8_t> mask, double floor = kMapeFloor);

struct ComponentMape {
    std::string component;
    MapeResult result;
    bool defined = true;  // false when every pixel was excluded
};

// Per-component MAPE over the intersection of both validity masks.
// Throws ParameterError on mismatched kinds or dimensions.
std::vector<ComponentMape> compare_fields(const FieldTable& reference, const FieldTable& test,
                                          double floor = kMapeFloor);

inline constexpr int kSsimWindow = 21;
inline constexpr double kSsimSigma = 1.0;

struct SsimReport {
    int width = 0;
    int height = 0;
    std::vector<double> map;  // 0 outside `valid`
    std::vector<std::uint8_t> valid;
    double mean = 0.0;
};

// Gaussian-windowed SSIM (21x21, sigma 1 px, L = 1). The map is evaluated
// only where the whole window lies inside the region; an empty region span
// means the whole image. Throws ParameterError on dimension mismatch or when
// no pixel admits a full window.
SsimReport ssim(const GrayImage& a, const GrayImage& b, std::span<const std::uint8_t> region = {});

// Heat image: SSIM in [-1, 1] mapped linearly onto [0, maxval], invalid = 0.
void save_ssim_pgm(const std::filesystem::path& path, const SsimReport& report, int maxval = 65535);
void write_ssim_csv(std::ostream& out, const SsimReport& report);

}  // namespace defreg
