// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <vector>

#include "gsc/errors.hpp"
#include "gsc/render.hpp"

namespace gsc {

namespace {

constexpr int kWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* who) {
    if (!a.same_shape(b))
        throw InvalidInputError(std::string(who) + ": image shapes do not match");
}

} // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "psnr");
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum_sq += d * d;
    }
    const double mse = sum_sq / static_cast<double>(a.pixels.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

bool psnr_is_infinite(double value) { return std::isinf(value); }

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "ssim");
    if (a.width < kWindow || a.height < kWindow)
        throw InvalidInputError("ssim: images must be at least 11x11");

    // Normalized 11x11 Gaussian window, sigma 1.5.
    double kernel[kWindow][kWindow];
    double ksum = 0.0;
    for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) {
            const double di = i - (kWindow - 1) / 2.0;
            const double dj = j - (kWindow - 1) / 2.0;
            kernel[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * kSsimSigma * kSsimSigma));
            ksum += kernel[i][j];
        }
    for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j)
            kernel[i][j] /= ksum;

    double channel_sum = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        double window_sum = 0.0;
        std::size_t windows = 0;
        for (int y = 0; y + kWindow <= a.height; ++y) {
            for (int x = 0; x + kWindow <= a.width; ++x) {
                double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
                for (int i = 0; i < kWindow; ++i) {
                    for (int j = 0; j < kWindow; ++j) {
                        const double k = kernel[i][j];
                        const double va = a.at(x + j, y + i, c);
                        const double vb = b.at(x + j, y + i, c);
                        mu_a += k * va;
                        mu_b += k * vb;
                        aa += k * va * va;
                        bb += k * vb * vb;
                        ab += k * va * vb;
                    }
                }
                const double var_a = aa - mu_a * mu_a;
                const double var_b = bb - mu_b * mu_b;
                const double cov = ab - mu_a * mu_b;
                const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
                const double den =
                    (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
                window_sum += num / den;
                ++windows;
            }
        }
        channel_sum += window_sum / static_cast<double>(windows);
    }
    return channel_sum / static_cast<double>(a.channels);
}

double view_loss(const ImageBuffer& a, const ImageBuffer& b, double lambda_ssim) {
    require_same_shape(a, b, "view_loss");
    double l1 = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        l1 += std::abs(a.pixels[i] - b.pixels[i]);
    l1 /= static_cast<double>(a.pixels.size());
    if (lambda_ssim == 0.0)
        return l1;
    return (1.0 - lambda_ssim) * l1 + lambda_ssim * (1.0 - ssim(a, b));
}

} // namespace gsc
