#include "evalrun.hpp"

#include <cmath>
#include <cstdio>

namespace osr {

void EvalProtocol::validate() const {
    require(!scale_pairs.empty(), errc::invalid_argument, "eval: empty scale pair list");
    for (const auto& p : scale_pairs)
        require(p.lr_size >= 1 && p.hr_size >= p.lr_size, errc::invalid_argument,
                "eval: scale pair needs hr >= lr >= 1");
    require(crop_policy == "random_n" || crop_policy == "center", errc::invalid_argument,
            "eval: unknown crop policy: " + crop_policy);
    require(patches_per_pair >= 1 && sample_steps >= 1, errc::invalid_argument,
            "eval: patches and steps must be >= 1");
}

std::string scale_label_for(int lr_size, int hr_size) {
    double r = double(hr_size) / double(lr_size);
    char buf[32];
    if (r == std::floor(r))
        std::snprintf(buf, sizeof buf, "x%d", int(r));
    else
        std::snprintf(buf, sizeof buf, "x%.1f", r);
    return buf;
}

namespace {

// nearest-neighbor blow-up of the LR patch for the comparison strip
Image nearest_upscale(const Image& img, int oh, int ow) {
    Image out(oh, ow, img.c, img.range);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            int sy = std::min(img.h - 1, y * img.h / oh);
            int sx = std::min(img.w - 1, x * img.w / ow);
            for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
        }
    return out;
}

struct GridStrip {
    Image lr, bicubic, model, hr;  // unit range, hr-sized except lr
};

Image assemble_grid(const std::vector<GridStrip>& strips) {
    int cell = 0;
    for (const auto& s : strips) cell = std::max(cell, s.hr.h);
    if (cell == 0) return Image(1, 1, 3, Range::unit);
    Image grid(cell * int(strips.size()), cell * 4, 3, Range::unit);
    auto blit = [&](const Image& img, int row, int col) {
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int ch = 0; ch < 3; ++ch)
                    grid.at(row * cell + y, col * cell + x, ch) =
                        img.at(y, x, img.c == 3 ? ch : 0);
    };
    for (size_t i = 0; i < strips.size(); ++i) {
        const auto& s = strips[i];
        blit(nearest_upscale(s.lr, s.hr.h, s.hr.w), int(i), 0);
        blit(s.bicubic, int(i), 1);
        blit(s.model, int(i), 2);
        blit(s.hr, int(i), 3);
    }
    return grid;
}

void finalize_row(MetricRow& row) {
    double ps = 0.0, ss = 0.0;
    for (double v : row.psnr_values) ps += v;
    for (double v : row.ssim_values) ss += v;
    row.n_images = int(row.psnr_values.size());
    row.psnr_mean = row.n_images ? ps / row.n_images : std::nan("");
    row.ssim_mean = row.n_images ? ss / row.n_images : std::nan("");
}

}  // namespace

EvalResult run_eval(Context& ctx, const EvalProtocol& proto,
                    const std::vector<LabeledImage>& corpus, uint64_t seed) {
    proto.validate();
    require(!corpus.empty(), errc::invalid_argument, "eval: empty corpus");

    EvalResult result;
    std::vector<GridStrip> strips;
    Rng root(seed);

    for (size_t pi = 0; pi < proto.scale_pairs.size(); ++pi) {
        const ScalePair& pair = proto.scale_pairs[pi];
        PairSpec spec;
        spec.hr_size = pair.hr_size;
        spec.lr_size = pair.lr_size;
        spec.scale = compute_scale(pair.lr_size, pair.hr_size);

        MetricRow model_row, bic_row;
        model_row.scale_label = bic_row.scale_label = scale_label_for(pair.lr_size, pair.hr_size);
        model_row.lr_size = bic_row.lr_size = pair.lr_size;
        model_row.hr_size = bic_row.hr_size = pair.hr_size;
        model_row.method = "model";
        bic_row.method = "bicubic";

        DegradationConfig dcfg;
        dcfg.mode = proto.degrade_mode;
        bool have_strip = false;

        for (int i = 0; i < proto.patches_per_pair; ++i) {
            Rng rng = root.split(pi * 4096 + size_t(i) + 1);
            const auto& item = corpus[size_t(rng.uniform_int(0, int64_t(corpus.size()) - 1))];
            try {
                require(item.image.h >= pair.hr_size && item.image.w >= pair.hr_size,
                        errc::invalid_argument, "eval: corpus image smaller than hr_size");
                int y0, x0;
                if (proto.crop_policy == "center") {
                    y0 = (item.image.h - pair.hr_size) / 2;
                    x0 = (item.image.w - pair.hr_size) / 2;
                } else {
                    y0 = int(rng.uniform_int(0, item.image.h - pair.hr_size));
                    x0 = int(rng.uniform_int(0, item.image.w - pair.hr_size));
                }
                Image hr = crop(item.image, y0, x0, pair.hr_size, pair.hr_size);
                Image lr = degrade(hr, dcfg, spec, rng.next_u64());

                SampleRequest req;
                req.lr = lr;
                req.out_h = req.out_w = pair.hr_size;
                req.steps = proto.sample_steps;
                req.seed = rng.next_u64();
                Image model_out = super_resolve(ctx, req);
                Image bic_out = bicubic_resample(lr, pair.hr_size, pair.hr_size);

                model_row.psnr_values.push_back(psnr(model_out, hr));
                model_row.ssim_values.push_back(ssim(model_out, hr));
                bic_row.psnr_values.push_back(psnr(bic_out, hr));
                bic_row.ssim_values.push_back(ssim(bic_out, hr));
                if (!have_strip) {
                    strips.push_back({lr, bic_out, model_out, hr});
                    have_strip = true;
                }
            } catch (const error&) {
                model_row.flagged = bic_row.flagged = true;  // skip image, keep the row
            }
        }
        finalize_row(model_row);
        finalize_row(bic_row);
        result.rows.push_back(std::move(model_row));
        result.rows.push_back(std::move(bic_row));
    }

    result.grid = assemble_grid(strips);
    return result;
}

EvalProtocol eval_protocol_from(const Config& c) {
    EvalProtocol p;
    if (c.has("eval.scale_pairs")) {
        p.scale_pairs.clear();
        std::string s = c.get("eval.scale_pairs", "");
        size_t pos = 0;
        while (pos < s.size()) {
            size_t comma = s.find(',', pos);
            std::string item = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
            size_t colon = item.find(':');
            require(colon != std::string::npos, errc::invalid_argument,
                    "eval.scale_pairs entries must be lr:hr, got: " + item);
            try {
                p.scale_pairs.push_back(
                    {std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
            } catch (const std::exception&) {
                fail(errc::invalid_argument, "eval.scale_pairs: bad number in: " + item);
            }
            pos = comma == std::string::npos ? s.size() : comma + 1;
        }
    }
    std::string dm = c.get("eval.degrade_mode", "bicubic");
    if (dm == "bicubic")
        p.degrade_mode = DegradeMode::bicubic_only;
    else if (dm == "realworld")
        p.degrade_mode = DegradeMode::realworld;
    else
        fail(errc::invalid_argument, "unknown eval degrade_mode: " + dm);
    p.crop_policy = c.get("eval.crop_policy", p.crop_policy);
    p.patches_per_pair = c.get_int("eval.patches_per_pair", p.patches_per_pair);
    p.sample_steps = c.get_int("eval.sample_steps", p.sample_steps);
    p.validate();
    return p;
}

std::string eval_csv(const std::vector<MetricRow>& rows) {
    std::string out = "scale_label,lr_size,hr_size,method,psnr_mean,ssim_mean,n_images\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%s,%.6f,%.6f,%d\n", r.scale_label.c_str(),
                      r.lr_size, r.hr_size, r.method.c_str(), r.psnr_mean, r.ssim_mean,
                      r.n_images);
        out += buf;
    }
    return out;
}

}  // namespace osr
