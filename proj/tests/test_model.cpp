#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "autoencoder.hpp"
#include "conditioning.hpp"
#include "denoiser.hpp"
#include "grad_check.hpp"
#include "upsampler.hpp"

using namespace osr;

namespace {

// small-but-complete topology used across these tests
ModelConfig tiny_config() {
    ModelConfig mc;
    mc.channels = {8, 12, 16};
    mc.ae_channels = {8, 8, 8};
    mc.imgenc_channels = {8, 8, 12};
    mc.up_channels = 8;
    mc.pe_dim = 16;
    mc.sem_dim = 8;
    mc.cap_tokens = 2;
    mc.fine_tokens = 3;
    mc.T = 25;
    return mc;
}

bool all_equal(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) return false;
    for (size_t i = 0; i < a.v.size(); ++i)
        if (a.v[i] != b.v[i]) return false;
    return true;
}

}  // namespace

/*================================================= parameter init ====*/

TEST_CASE("init_params: seeded determinism and the zero-init neutrality set") {
    ModelConfig mc = tiny_config();
    ParamStore a = init_params(mc, 7);
    ParamStore b = init_params(mc, 7);
    ParamStore c = init_params(mc, 8);

    REQUIRE(a.entries.size() == b.entries.size());
    bool any_diff_seed7 = false, any_diff_seed8 = false;
    for (auto& [name, e] : a.entries) {
        REQUIRE(b.entries.count(name) == 1);
        REQUIRE(c.entries.count(name) == 1);
        const auto& bv = b.entries.at(name).value;
        const auto& cv = c.entries.at(name).value;
        REQUIRE(e.value.shape == bv.shape);
        for (size_t i = 0; i < e.value.v.size(); ++i) {
            any_diff_seed7 |= e.value.v[i] != bv.v[i];
            any_diff_seed8 |= e.value.v[i] != cv.v[i];
        }
    }
    CHECK_FALSE(any_diff_seed7);  // same seed -> bit-equal
    CHECK(any_diff_seed8);        // different seed -> different weights

    // every neutrality-set prefix exists and is exactly zero
    auto zeroed = zero_init_prefixes(mc);
    CHECK(zeroed.size() > 0);
    for (const auto& prefix : zeroed) {
        int matched = 0;
        for (auto& [name, e] : a.entries) {
            if (name.rfind(prefix, 0) != 0) continue;
            ++matched;
            for (float v : e.value.v) CHECK(v == 0.0f);
        }
        CHECK(matched > 0);
    }

    // the scale-embedding trunks must NOT be zero (they need gradient signal)
    bool mscale_nonzero = false;
    for (float v : a.at("mscale.0.l2.w").value.v) mscale_nonzero |= v != 0.0f;
    CHECK(mscale_nonzero);
}

/*================================================= autoencoder ====*/

TEST_CASE("autoencoder: f=4 shapes, seeded determinism, decode clamps") {
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 3);
    Rng rng(1);

    Tensor rgb = Tensor::randn({3, 32, 24}, rng, 0.5f);
    Tensor z = encode_image(ps, mc, rgb);
    REQUIRE(z.shape == std::vector<int>{mc.latent_channels, 8, 6});

    Tensor z2 = encode_image(ps, mc, rgb);
    CHECK(all_equal(z, z2));

    Tensor out = decode_latent(ps, mc, z);
    REQUIRE(out.shape == std::vector<int>{3, 32, 24});
    for (float v : out.v) {
        CHECK(v >= -1.0f);
        CHECK(v <= 1.0f);
    }

    // shape contracts
    Tensor bad_ch = Tensor::randn({1, 32, 32}, rng);
    CHECK_THROWS_AS(encode_image(ps, mc, bad_ch), error);
    Tensor bad_div = Tensor::randn({3, 30, 32}, rng);
    CHECK_THROWS_AS(encode_image(ps, mc, bad_div), error);
    Tensor bad_lat = Tensor::randn({3, 8, 8}, rng);
    CHECK_THROWS_AS(decode_latent(ps, mc, bad_lat), error);
}

TEST_CASE("autoencoder: end-to-end gradient in double") {
    ModelConfig mc = tiny_config();
    auto psd = init_params(mc, 5).cast<double>();

    OpNode node;
    node.forward = [&](const std::vector<TensorT<double>>& in) {
        Net<double> net(psd, mc, false);
        auto z = ae_encode(net, constant(in[0]));
        return ae_decode_raw(net, z)->val;
    };
    node.backward = [&](const std::vector<TensorT<double>>& in, const TensorT<double>& up) {
        Net<double> net(psd, mc, false);
        auto x = leaf(in[0], true);
        auto y = ae_decode_raw(net, ae_encode(net, x));
        backward(y, &up);
        return std::vector<TensorT<double>>{x->grad};
    };
    Rng rng(6);
    auto rep = grad_check(node, {TensorT<double>::randn({3, 16, 16}, rng, 0.5)}, 1e-4);
    CHECK(rep.pass());
}

/*================================================= conditioning ====*/

TEST_CASE("encoded_scale: raw passthrough, log2 option, positivity") {
    ModelConfig mc = tiny_config();
    CHECK(encoded_scale(mc, 5.3125) == 5.3125);
    mc.scale_encoding = "log2";
    CHECK(encoded_scale(mc, 8.0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(encoded_scale(mc, 0.0), error);
    CHECK_THROWS_AS(encoded_scale(mc, -2.0), error);
    mc.scale_encoding = "bogus";
    CHECK_THROWS_AS(encoded_scale(mc, 2.0), error);
}

TEST_CASE("embeddings: per-level widths and determinism") {
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 11);
    Net<float> net(ps, mc, false);

    for (int lvl = 0; lvl < mc.levels(); ++lvl) {
        auto te = timestep_embed(net, lvl, 13);
        REQUIRE(te->val.shape == std::vector<int>{mc.channels[size_t(lvl)]});
        auto ge = global_scale_embed(net, lvl, 4.0);
        REQUIRE(ge->val.shape == std::vector<int>{mc.channels[size_t(lvl)]});
        // zero-init final layer -> global scale embedding starts all-zero
        for (float v : ge->val.v) CHECK(v == 0.0f);
    }

    Net<float> net2(ps, mc, false);
    auto a = timestep_embed(net, 1, 7), b = timestep_embed(net2, 1, 7);
    CHECK(all_equal(a->val, b->val));
    bool timestep_matters = !all_equal(timestep_embed(net, 1, 8)->val, a->val);
    CHECK(timestep_matters);
}

TEST_CASE("modulation_params: exact identity (gain 1, bias 0) at init") {
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 13);
    Net<float> net(ps, mc, false);
    for (int lvl = 0; lvl < mc.levels(); ++lvl) {
        for (double s : {1.0, 4.0, 16.0, 24.0}) {
            auto m = modulation_params(net, lvl, s);
            for (float v : m.gain->val.v) CHECK(v == 1.0f);
            for (float v : m.bias->val.v) CHECK(v == 0.0f);
        }
    }
}

TEST_CASE("semantic tokens: shapes, class ranges, null class, distinct rows") {
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 17);
    Net<float> net(ps, mc, false);

    auto cap = caption_tokens(net, 0);
    REQUIRE(cap->val.shape == std::vector<int>{mc.cap_tokens, mc.sem_dim});
    auto fine = fine_tokens(net, 2);
    REQUIRE(fine->val.shape == std::vector<int>{mc.fine_tokens, mc.sem_dim});

    // the null class is one past the real classes and is valid
    auto null_cap = caption_tokens(net, mc.null_class());
    REQUIRE(null_cap->val.shape == std::vector<int>{mc.cap_tokens, mc.sem_dim});
    CHECK_FALSE(all_equal(null_cap->val, cap->val));
    CHECK_THROWS_AS(caption_tokens(net, mc.null_class() + 1), error);
    CHECK_THROWS_AS(caption_tokens(net, -1), error);
    CHECK_THROWS_AS(fine_tokens(net, mc.null_class() + 1), error);

    // same class twice -> identical tokens
    CHECK(all_equal(caption_tokens(net, 1)->val, caption_tokens(net, 1)->val));
}

/*================================================= fidelity encoder ====*/

TEST_CASE("image encoder: pyramid at 1/2, 1/4, 1/8 and latent-res hint") {
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 19);
    Net<float> net(ps, mc, false);
    Rng rng(2);

    auto rgb = constant(Tensor::randn({3, 32, 48}, rng, 0.5f));
    auto f = fidelity_image_encode(net, rgb);
    REQUIRE(f.pyramid.size() == 3);
    CHECK(f.pyramid[0]->val.shape ==
          std::vector<int>{mc.imgenc_channels[0], 16, 24});
    CHECK(f.pyramid[1]->val.shape ==
          std::vector<int>{mc.imgenc_channels[1], 8, 12});
    CHECK(f.pyramid[2]->val.shape ==
          std::vector<int>{mc.imgenc_channels[2], 4, 6});
    // hint lives on the latent grid (1/4 of pixels for the f=4 autoencoder)
    CHECK(f.hint->val.dim(1) == 8);
    CHECK(f.hint->val.dim(2) == 12);

    auto bad = constant(Tensor::randn({3, 30, 48}, rng));
    CHECK_THROWS_AS(fidelity_image_encode(net, bad), error);

    // toRGB heads give 3-channel maps at the matching resolution
    for (int n = 1; n <= 3; ++n) {
        auto rgb_n = to_rgb(net, n, f.pyramid[size_t(n - 1)]);
        CHECK(rgb_n->val.dim(0) == 3);
        CHECK(rgb_n->val.dim(1) == f.pyramid[size_t(n - 1)]->val.dim(1));
    }
    CHECK_THROWS_AS(to_rgb(net, 0, f.pyramid[0]), error);
    CHECK_THROWS_AS(to_rgb(net, 4, f.pyramid[0]), error);
}

/*================================================= denoiser ====*/

TEST_CASE("denoise: shape contract, determinism, input validation") {
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 23);
    Net<float> net(ps, mc, false);
    Rng rng(3);

    auto z = constant(Tensor::randn({mc.latent_channels, 8, 8}, rng));
    DenoiseInputs<float> in;
    in.t = 5;
    in.s = 4.0;
    in.class_id = 1;
    auto eps = denoise(net, z, in);
    REQUIRE(eps->val.shape == z->val.shape);

    Net<float> net2(ps, mc, false);
    auto eps2 = denoise(net2, z, in);
    CHECK(all_equal(eps->val, eps2->val));

    // wrong latent channel count and non-divisible grids are named errors
    auto badc = constant(Tensor::randn({3, 8, 8}, rng));
    CHECK_THROWS_AS(denoise(net, badc, in), error);
    auto badg = constant(Tensor::randn({mc.latent_channels, 6, 8}, rng));
    CHECK_THROWS_AS(denoise(net, badg, in), error);
    DenoiseInputs<float> badt = in;
    badt.t = mc.T;
    CHECK_THROWS_AS(denoise(net, z, badt), error);
}

TEST_CASE("neutrality: zero-initialized conditioning leaves the bare UNet unchanged") {
    // The additive-control design: freshly initialized scale embeddings,
    // modulation projections, semantic-refinement output projections, and
    // control-branch output convs all contribute exactly zero, so the full
    // conditioned pass equals the bare trunk for ANY scale, condition image,
    // and fine-token perturbation.
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 29);
    Rng rng(4);

    for (int trial = 0; trial < 10; ++trial) {
        Rng trng = rng.split(trial + 1);
        auto z = constant(Tensor::randn({mc.latent_channels, 8, 8}, trng));
        int t = int(trng.uniform_int(0, mc.T - 1));
        int cls = int(trng.uniform_int(0, mc.num_classes));  // includes null
        double s = trng.uniform(1.0, 30.0);

        // random condition image drives the control branch + hint
        Net<float> net(ps, mc, false);
        auto cond = constant(Tensor::randn({3, 32, 32}, trng, 0.5f));
        auto fid = fidelity_image_encode(net, cond);

        DenoiseInputs<float> full;
        full.t = t;
        full.s = s;
        full.class_id = cls;
        full.hint = fid.hint;
        auto eps_full = denoise(net, z, full);

        Net<float> bare_net(ps, mc, false);
        DenoiseInputs<float> bare;
        bare.t = t;
        bare.s = s;
        bare.class_id = cls;
        bare.bare = true;
        auto eps_bare = denoise(bare_net, z, bare);

        REQUIRE(eps_full->val.shape == eps_bare->val.shape);
        int mismatches = 0;
        for (size_t i = 0; i < eps_full->val.v.size(); ++i)
            mismatches += eps_full->val.v[i] != eps_bare->val.v[i];
        CHECK(mismatches == 0);
    }
}

TEST_CASE("neutrality breaks once any conditioning path holds nonzero weights") {
    ModelConfig mc = tiny_config();
    Rng rng(5);
    auto z = constant(Tensor::randn({mc.latent_channels, 8, 8}, rng));
    auto cond_t = Tensor::randn({3, 32, 32}, rng, 0.5f);

    auto run_pair = [&](const std::string& param) {
        ParamStore ps = init_params(mc, 31);
        auto& e = ps.at(param);
        Rng prng(99);
        e.value = Tensor::randn(e.value.shape, prng, 0.05f);

        Net<float> net(ps, mc, false);
        auto fid = fidelity_image_encode(net, constant(cond_t));
        DenoiseInputs<float> full;
        full.t = 3;
        full.s = 7.5;
        full.class_id = 1;
        full.hint = fid.hint;
        auto eps_full = denoise(net, z, full);

        Net<float> bnet(ps, mc, false);
        DenoiseInputs<float> bare;
        bare.t = 3;
        bare.s = 7.5;
        bare.class_id = 1;
        bare.bare = true;
        auto eps_bare = denoise(bnet, z, bare);
        bool differs = false;
        for (size_t i = 0; i < eps_full->val.v.size(); ++i)
            differs |= eps_full->val.v[i] != eps_bare->val.v[i];
        return differs;
    };

    CHECK(run_pair("gscale.0.l1.w"));       // global scale injection
    CHECK(run_pair("refine.0.out.w"));      // control-branch injection
    CHECK(run_pair("sepr.g.mid.out.w"));    // fine-semantics attention
}

TEST_CASE("denoiser: gradients reach the zero-initialized paths") {
    // zero-init must not deadlock learning: the loss gradient w.r.t. the
    // zeroed projections is nonzero on generic inputs
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 37);
    Rng rng(6);

    Net<float> net(ps, mc, true);
    auto z = constant(Tensor::randn({mc.latent_channels, 8, 8}, rng));
    auto fid = fidelity_image_encode(net, constant(Tensor::randn({3, 32, 32}, rng, 0.5f)));
    DenoiseInputs<float> in;
    in.t = 4;
    in.s = 6.0;
    in.class_id = 0;
    in.hint = fid.hint;
    auto eps = denoise(net, z, in);
    auto loss = v_mse(eps, Tensor({mc.latent_channels, 8, 8}));
    backward(loss);

    auto grad_mag = [&](const std::string& name) {
        double m = 0;
        for (float g : ps.at(name).grad.v) m += std::abs(double(g));
        return m;
    };
    CHECK(grad_mag("refine.0.out.w") > 0.0);
    CHECK(grad_mag("refine.1.out.w") > 0.0);
    CHECK(grad_mag("refine.2.out.w") > 0.0);
    CHECK(grad_mag("gscale.0.l1.w") > 0.0);
    CHECK(grad_mag("sepr.g.mid.out.w") > 0.0);
    CHECK(grad_mag("unet.out.w") > 0.0);

    // the modulation gain sits BEHIND the zero injection conv, so its gradient
    // is exactly zero at init; once the conv moves off zero it starts learning
    CHECK(grad_mag("refine.0.gain.w") == 0.0);
    ps.zero_grads();
    {
        auto& e = ps.at("refine.0.out.w");
        Rng prng(123);
        e.value = Tensor::randn(e.value.shape, prng, 0.05f);
    }
    Net<float> net2(ps, mc, true);
    auto fid2 = fidelity_image_encode(
        net2, constant(Tensor::randn({3, 32, 32}, rng, 0.5f)));
    DenoiseInputs<float> in2 = in;
    in2.hint = fid2.hint;
    auto eps2 = denoise(net2, z, in2);
    backward(v_mse(eps2, Tensor({mc.latent_channels, 8, 8})));
    CHECK(grad_mag("refine.0.gain.w") > 0.0);
    CHECK(grad_mag("refine.0.bias.w") > 0.0);
}

TEST_CASE("denoiser: end-to-end gradient check in double") {
    ModelConfig mc = tiny_config();
    mc.channels = {6, 6, 8};
    mc.imgenc_channels = {6, 6, 6};
    auto psd = init_params(mc, 41).cast<double>();

    auto run = [&mc](ParamStoreT<double>& store, const TensorT<double>& zt,
                     const TensorT<double>& cond, bool train) {
        Net<double> net(store, mc, train);
        auto fid = fidelity_image_encode(net, constant(cond));
        DenoiseInputs<double> in;
        in.t = 2;
        in.s = 5.0;
        in.class_id = 1;
        in.hint = fid.hint;
        return denoise(net, leaf(zt, train), in);
    };

    OpNode node;
    node.forward = [&](const std::vector<TensorT<double>>& in) {
        return run(psd, in[0], in[1], false)->val;
    };
    node.backward = [&](const std::vector<TensorT<double>>& in, const TensorT<double>& up) {
        Net<double> net(psd, mc, false);
        auto x = leaf(in[0], true), c = leaf(in[1], true);
        auto fid = fidelity_image_encode(net, c);
        DenoiseInputs<double> din;
        din.t = 2;
        din.s = 5.0;
        din.class_id = 1;
        din.hint = fid.hint;
        auto y = denoise(net, x, din);
        backward(y, &up);
        auto g = [](Var<double>& v) {
            return v->grad.v.empty() ? TensorT<double>(v->val.shape) : v->grad;
        };
        return std::vector<TensorT<double>>{g(x), g(c)};
    };
    Rng rng(7);
    auto rep = grad_check(node,
                          {TensorT<double>::randn({mc.latent_channels, 4, 4}, rng),
                           TensorT<double>::randn({3, 16, 16}, rng, 0.5)},
                          1e-4);
    CHECK(rep.pass());
}

/*================================================= pixel upsampler ====*/

TEST_CASE("upsampler: 4x shape, signed-range contract, zeroed net equals bicubic") {
    ModelConfig mc = tiny_config();
    ParamStore ps = init_params(mc, 43);
    Rng rng(8);

    Image lr(9, 7, 3, Range::signed_);
    for (auto& v : lr.data) v = float(rng.uniform(-1.0, 1.0));
    Image up = mup_apply(ps, mc, lr);
    CHECK(up.h == 36);
    CHECK(up.w == 28);
    CHECK(up.range == Range::signed_);

    Image unit_lr = to_unit(lr);
    CHECK_THROWS_AS(mup_apply(ps, mc, unit_lr), error);

    // zeroing every upsampler parameter reduces the model to plain bicubic:
    // this is the ablation-equivalence behind the --no-mup flag
    for (auto& [name, e] : ps.entries)
        if (name.rfind("up.", 0) == 0)
            e.value = Tensor(e.value.shape);
    Image zeroed = mup_apply(ps, mc, lr);
    Image bic = bicubic_resample(lr, 36, 28);
    for (size_t i = 0; i < bic.data.size(); ++i) CHECK(zeroed.data[i] == bic.data[i]);
}
