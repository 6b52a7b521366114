#include "metrics.hpp"

#include <cmath>

namespace osr {

double psnr(const Image& a, const Image& b) {
    require(a.h == b.h && a.w == b.w && a.c == b.c, errc::invalid_argument,
            "psnr: shape mismatch");
    require(a.range == Range::unit && b.range == Range::unit, errc::invalid_argument,
            "psnr: expects unit-range images");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = double(a.data[i]) - double(b.data[i]);
        mse += d * d;
    }
    mse /= double(a.data.size());
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kWin = 11;

// 11-tap Gaussian, sigma 1.5, normalized
const double* ssim_window() {
    static double w[kWin];
    static bool init = [] {
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - (kWin - 1) / 2.0;
            w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += w[i];
        }
        for (int i = 0; i < kWin; ++i) w[i] /= sum;
        return true;
    }();
    (void)init;
    return w;
}

std::vector<double> mean_channel(const Image& img) {
    std::vector<double> out(size_t(img.h) * img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double s = 0.0;
            for (int ch = 0; ch < img.c; ++ch) s += img.at(y, x, ch);
            out[size_t(y) * img.w + x] = s / img.c;
        }
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    require(a.h == b.h && a.w == b.w && a.c == b.c, errc::invalid_argument,
            "ssim: shape mismatch");
    require(a.h >= kWin && a.w >= kWin, errc::invalid_argument,
            "ssim: image smaller than the 11x11 window");
    const double* win = ssim_window();
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;  // (K*L)^2 with L=1
    std::vector<double> xa = mean_channel(a), xb = mean_channel(b);
    const int w = a.w, oh = a.h - kWin + 1, ow = a.w - kWin + 1;

    double total = 0.0;
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int ky = 0; ky < kWin; ++ky)
                for (int kx = 0; kx < kWin; ++kx) {
                    double wt = win[ky] * win[kx];
                    double va = xa[size_t(oy + ky) * w + ox + kx];
                    double vb = xb[size_t(oy + ky) * w + ox + kx];
                    mx += wt * va;
                    my += wt * vb;
                    sxx += wt * va * va;
                    syy += wt * vb * vb;
                    sxy += wt * va * vb;
                }
            sxx -= mx * mx;
            syy -= my * my;
            sxy -= mx * my;
            total += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                     ((mx * mx + my * my + c1) * (sxx + syy + c2));
        }
    return total / (double(oh) * ow);
}

}  // namespace osr
