#include "defreg/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "defreg/errors.hpp"
#include "defreg/pgm.hpp"
#include "defreg/text_format.hpp"

namespace defreg {

MapeResult mape(std::span<const double> reference, std::span<const double> test,
                std::span<const std::uint8_t> mask, double floor) {
    if (reference.size() != test.size()) {
        throw ParameterError("MAPE fields differ in size");
    }
    if (!mask.empty() && mask.size() != reference.size()) {
        throw ParameterError("MAPE mask differs in size");
    }
    MapeResult r;
    double sum = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (!mask.empty() && mask[i] == 0) {
            continue;
        }
        const double y = reference[i];
        if (std::abs(y) < floor) {
            ++r.excluded;
            continue;
        }
        sum += std::abs(y - test[i]) / std::abs(y);
        ++r.used;
    }
    if (r.used == 0) {
        throw UndefinedMapeError("MAPE undefined: no pixel has |reference| >= " +
                                 format_double(floor));
    }
    r.value = sum / static_cast<double>(r.used);
    return r;
}

std::vector<ComponentMape> compare_fields(const FieldTable& reference, const FieldTable& test,
                                          double floor) {
    if (reference.kind != test.kind) {
        throw ParameterError("cannot compare a " + reference.kind + " field with a " + test.kind +
                             " field");
    }
    if (reference.width != test.width || reference.height != test.height) {
        throw ParameterError("field grids differ in size");
    }
    std::vector<std::uint8_t> joint(reference.valid.size());
    for (std::size_t i = 0; i < joint.size(); ++i) {
        joint[i] = (reference.valid[i] && test.valid[i]) ? 1 : 0;
    }
    std::vector<ComponentMape> out;
    for (std::size_t c = 0; c < reference.components.size(); ++c) {
        ComponentMape cm;
        cm.component = reference.components[c];
        try {
            cm.result = mape(reference.values[c], test.values[c], joint, floor);
        } catch (const UndefinedMapeError&) {
            cm.defined = false;
            cm.result.excluded = static_cast<std::size_t>(std::count(joint.begin(), joint.end(), 1));
        }
        out.push_back(cm);
    }
    return out;
}

namespace {

std::vector<double> gaussian_kernel() {
    constexpr int radius = kSsimWindow / 2;
    std::vector<double> k(kSsimWindow);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
        total += k[i + radius];
    }
    for (double& v : k) {
        v /= total;
    }
    return k;
}

// Separable windowed mean, evaluated where the full window fits in the image.
std::vector<double> window_mean(std::span<const double> src, int w, int h,
                                const std::vector<double>& k) {
    constexpr int r = kSsimWindow / 2;
    std::vector<double> tmp(src.size(), 0.0);
    std::vector<double> out(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = r; x < w - r; ++x) {
            double s = 0.0;
            for (int d = -r; d <= r; ++d) {
                s += k[d + r] * src[static_cast<std::size_t>(y) * w + x + d];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    for (int y = r; y < h - r; ++y) {
        for (int x = r; x < w - r; ++x) {
            double s = 0.0;
            for (int d = -r; d <= r; ++d) {
                s += k[d + r] * tmp[static_cast<std::size_t>(y + d) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    return out;
}

}  // namespace

SsimReport ssim(const GrayImage& a, const GrayImage& b, std::span<const std::uint8_t> region) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw ParameterError("SSIM images differ in size");
    }
    const int w = a.width();
    const int h = a.height();
    const std::size_t n = a.size();
    if (!region.empty() && region.size() != n) {
        throw ParameterError("SSIM region differs in size from the images");
    }
    constexpr int r = kSsimWindow / 2;
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;

    // Full-window admissibility by a summed-area table over the region.
    std::vector<long> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        long row = 0;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            row += (region.empty() || region[i]) ? 1 : 0;
            sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
                sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
        }
    }
    auto box = [&](int x0, int y0, int x1, int y1) {  // inclusive-exclusive
        return sat[static_cast<std::size_t>(y1) * (w + 1) + x1] -
               sat[static_cast<std::size_t>(y0) * (w + 1) + x1] -
               sat[static_cast<std::size_t>(y1) * (w + 1) + x0] +
               sat[static_cast<std::size_t>(y0) * (w + 1) + x0];
    };

    const auto k = gaussian_kernel();
    const auto ia = a.intensities();
    const auto ib = b.intensities();
    std::vector<double> aa(n);
    std::vector<double> bb(n);
    std::vector<double> ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = ia[i] * ia[i];
        bb[i] = ib[i] * ib[i];
        ab[i] = ia[i] * ib[i];
    }
    const auto mu_a = window_mean(ia, w, h, k);
    const auto mu_b = window_mean(ib, w, h, k);
    const auto m_aa = window_mean(aa, w, h, k);
    const auto m_bb = window_mean(bb, w, h, k);
    const auto m_ab = window_mean(ab, w, h, k);

    SsimReport rep;
    rep.width = w;
    rep.height = h;
    rep.map.assign(n, 0.0);
    rep.valid.assign(n, 0);
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = r; y < h - r; ++y) {
        for (int x = r; x < w - r; ++x) {
            if (box(x - r, y - r, x + r + 1, y + r + 1) != kSsimWindow * kSsimWindow) {
                continue;
            }
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double var_a = m_aa[i] - mu_a[i] * mu_a[i];
            const double var_b = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            const double s = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
            rep.map[i] = std::min(s, 1.0);
            rep.valid[i] = 1;
            sum += rep.map[i];
            ++count;
        }
    }
    if (count == 0) {
        throw ParameterError("SSIM region admits no full 21x21 window");
    }
    rep.mean = sum / static_cast<double>(count);
    return rep;
}

void save_ssim_pgm(const std::filesystem::path& path, const SsimReport& report, int maxval) {
    std::vector<double> data(report.map.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (report.valid[i]) {
            data[i] = std::clamp((report.map[i] + 1.0) / 2.0, 0.0, 1.0);
        }
    }
    save_pgm(path, GrayImage(report.width, report.height, std::move(data)), maxval);
}

void write_ssim_csv(std::ostream& out, const SsimReport& report) {
    out << "x,y,ssim,valid\n";
    for (int y = 0; y < report.height; ++y) {
        for (int x = 0; x < report.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * report.width + x;
            out << x << ',' << y << ',' << format_double(report.map[i]) << ','
                << static_cast<int>(report.valid[i]) << '\n';
        }
    }
}

}  // namespace defreg
