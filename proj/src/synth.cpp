#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "image.hpp"

namespace osr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// mid-to-high frequency oriented sinusoids (period 4..8 px)
Image make_grating(int size, Rng& rng) {
    Image img(size, size, 3, Range::unit);
    double period = rng.uniform(4.0, 8.0);
    double theta = rng.uniform(0.0, kTwoPi);
    double fx = std::cos(theta) / period;
    double fy = std::sin(theta) / period;
    double phase = rng.uniform(0.0, kTwoPi);
    double gain[3], base[3];
    for (int k = 0; k < 3; ++k) {
        gain[k] = rng.uniform(0.25, 0.45);
        base[k] = rng.uniform(0.35, 0.55);
    }
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double s = std::sin(kTwoPi * (fx * x + fy * y) + phase);
            for (int k = 0; k < 3; ++k) img.at(y, x, k) = float(base[k] + gain[k] * s);
        }
    clamp_to_range(img);
    return img;
}

// axis-aligned checkerboards with small cells (highest spectral content)
Image make_checker(int size, Rng& rng) {
    Image img(size, size, 3, Range::unit);
    int cell = int(rng.uniform_int(2, 3));
    int ox = int(rng.uniform_int(0, cell - 1));
    int oy = int(rng.uniform_int(0, cell - 1));
    double ca[3], cb[3];
    for (int k = 0; k < 3; ++k) {
        ca[k] = rng.uniform(0.05, 0.35);
        cb[k] = rng.uniform(0.65, 0.95);
    }
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            bool a = (((x + ox) / cell) + ((y + oy) / cell)) % 2 == 0;
            for (int k = 0; k < 3; ++k) img.at(y, x, k) = float(a ? ca[k] : cb[k]);
        }
    return img;
}

// low-pass filtered white noise
Image make_filtered_noise(int size, Rng& rng) {
    Image img(size, size, 3, Range::unit);
    for (auto& v : img.data) v = float(rng.uniform());
    img = gaussian_blur(img, rng.uniform(1.5, 3.0));
    // stretch each channel back to a healthy contrast range
    for (int k = 0; k < 3; ++k) {
        float mn = 1.0f, mx = 0.0f;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                mn = std::min(mn, img.at(y, x, k));
                mx = std::max(mx, img.at(y, x, k));
            }
        float span = std::max(mx - mn, 1e-6f);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                img.at(y, x, k) = 0.1f + 0.8f * (img.at(y, x, k) - mn) / span;
    }
    return img;
}

// smooth gradient background plus a few wide Gaussian bumps (lowest frequency)
Image make_blobs(int size, Rng& rng) {
    Image img(size, size, 3, Range::unit);
    double gx = rng.uniform(-0.3, 0.3) / size;
    double gy = rng.uniform(-0.3, 0.3) / size;
    double base[3];
    for (int k = 0; k < 3; ++k) base[k] = rng.uniform(0.3, 0.6);

    struct Blob {
        double cx, cy, radius, amp[3];
    };
    int n_blobs = int(rng.uniform_int(2, 4));
    std::vector<Blob> blobs(static_cast<size_t>(n_blobs));
    for (auto& b : blobs) {
        b.cx = rng.uniform(0.1, 0.9) * size;
        b.cy = rng.uniform(0.1, 0.9) * size;
        b.radius = rng.uniform(double(size) / 8.0, double(size) / 4.0);
        for (int k = 0; k < 3; ++k) b.amp[k] = rng.uniform(-0.35, 0.35);
    }
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int k = 0; k < 3; ++k) {
                double v = base[k] + gx * (x - size / 2) + gy * (y - size / 2);
                for (const auto& b : blobs) {
                    double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
                    v += b.amp[k] * std::exp(-0.5 * d2 / (b.radius * b.radius));
                }
                img.at(y, x, k) = float(v);
            }
    clamp_to_range(img);
    return img;
}

Image make_class(int class_id, int size, Rng& rng) {
    switch (class_id) {
        case 0: return make_grating(size, rng);
        case 1: return make_checker(size, rng);
        case 2: return make_filtered_noise(size, rng);
        default: return make_blobs(size, rng);
    }
}

}  // namespace

std::vector<LabeledImage> synth_dataset(int n, const std::string& kind, uint64_t seed,
                                        int image_size) {
    require(n >= 1, errc::invalid_argument, "dataset size must be >= 1");
    require(image_size >= 16, errc::invalid_argument, "image_size must be >= 16");

    int fixed_class = -1;
    if (kind != "mixed") {
        for (int k = 0; k < kNumTextureClasses; ++k)
            if (kind == kTextureClassNames[k]) fixed_class = k;
        require(fixed_class >= 0, errc::invalid_argument, "unknown dataset kind: " + kind);
    }

    Rng root(seed);
    std::vector<LabeledImage> out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        Rng rng = root.split(uint64_t(i) + 1);
        int class_id = fixed_class >= 0 ? fixed_class : i % kNumTextureClasses;
        out.push_back({make_class(class_id, image_size, rng), class_id});
    }
    return out;
}

void save_corpus(const std::string& dir, const std::vector<LabeledImage>& items) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, errc::io_error, "cannot create corpus dir: " + dir);
    char name[64];
    for (size_t i = 0; i < items.size(); ++i) {
        std::snprintf(name, sizeof name, "%05zu_%s.png", i,
                      kTextureClassNames[items[i].class_id]);
        write_png((std::filesystem::path(dir) / name).string(), items[i].image);
    }
}

std::vector<LabeledImage> load_corpus(const std::string& dir) {
    require(std::filesystem::is_directory(dir), errc::io_error,
            "corpus dir not found: " + dir);
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    require(!files.empty(), errc::invalid_argument, "corpus dir has no png files: " + dir);

    std::vector<LabeledImage> out;
    for (const auto& p : files) {
        std::string stem = p.stem().string();
        int class_id = -1;
        size_t us = stem.rfind('_');
        if (us != std::string::npos) {
            std::string cls = stem.substr(us + 1);
            for (int k = 0; k < kNumTextureClasses; ++k)
                if (cls == kTextureClassNames[k]) class_id = k;
        }
        require(class_id >= 0, errc::invalid_argument,
                "corpus file name has no class suffix: " + p.filename().string());
        out.push_back({read_png(p.string(), Range::unit), class_id});
    }
    return out;
}

}  // namespace osr
