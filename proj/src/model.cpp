#include "model.hpp"

namespace osr {

namespace {

struct Initializer {
    ParamStore& ps;
    Rng& rng;

    // He-style fan-in init for convs/linears; zero-init layers get exact zeros
    void conv(const std::string& name, int oc, int ic, int kh, int kw, bool zero = false) {
        ps.add(name + ".w", zero ? Tensor({oc, ic, kh, kw})
                                 : Tensor::randn({oc, ic, kh, kw}, rng,
                                                 std::sqrt(2.0 / double(ic * kh * kw))));
        ps.add(name + ".b", Tensor({oc}));
    }
    void lin(const std::string& name, int in, int out, bool zero = false) {
        ps.add(name + ".w", zero ? Tensor({in, out})
                                 : Tensor::randn({in, out}, rng, std::sqrt(2.0 / double(in))));
        ps.add(name + ".b", Tensor({out}));
    }
    void lin_nobias(const std::string& name, int in, int out) {
        ps.add(name + ".w", Tensor::randn({in, out}, rng, std::sqrt(2.0 / double(in))));
    }
    void norm(const std::string& name, int c) {
        ps.add(name + ".g", Tensor::full({c}, 1.0f));
        ps.add(name + ".b", Tensor({c}));
    }
    void resblock(const std::string& prefix, int c) {
        norm(prefix + ".norm1", c);
        conv(prefix + ".conv1", c, c, 3, 3);
        norm(prefix + ".norm2", c);
        conv(prefix + ".conv2", c, c, 3, 3);
    }
    // caption cross-attention: Q from features, K/V from tokens, out with bias
    void xattn(const std::string& prefix, int c, int d_sem, bool zero_out) {
        norm(prefix + ".norm", c);
        lin_nobias(prefix + ".q", c, c);
        lin_nobias(prefix + ".k", d_sem, c);
        lin_nobias(prefix + ".v", d_sem, c);
        lin(prefix + ".out", c, c, zero_out);
    }
    // SePR: no pre-norm, zero-initialized output projection (neutral at init)
    void sepr(const std::string& prefix, int c, int d_sem) {
        lin_nobias(prefix + ".q", c, c);
        lin_nobias(prefix + ".k", d_sem, c);
        lin_nobias(prefix + ".v", d_sem, c);
        lin(prefix + ".out", c, c, /*zero=*/true);
    }
    // PE -> linear -> silu -> linear embedding network
    void embed_net(const std::string& prefix, int pe_dim, int c, bool zero_final) {
        lin(prefix + ".l2", pe_dim, c);
        lin(prefix + ".l1", c, c, zero_final);
    }
};

}  // namespace

ParamStore init_params(const ModelConfig& cfg, uint64_t seed) {
    ParamStore ps;
    Rng rng(seed);
    Initializer ini{ps, rng};

    const auto& ch = cfg.channels;
    const int zc = cfg.latent_channels;
    const int d = cfg.sem_dim;
    const int n_sem_rows = cfg.num_classes + 1;  // + null class

    /*==== autoencoder ====*/
    const auto& ac = cfg.ae_channels;
    ini.conv("ae.enc.in", ac[0], 3, 3, 3);
    for (int i = 0; i < 2; ++i) {
        std::string p = "ae.enc.d" + std::to_string(i);
        ini.norm(p + ".norm0", ac[size_t(i)]);
        ini.conv(p + ".conv0", ac[size_t(i)], ac[size_t(i)], 3, 3);
        ini.norm(p + ".norm1", ac[size_t(i)]);
        ini.conv(p + ".conv1", ac[size_t(i + 1)], ac[size_t(i)], 3, 3);  // stride 2
    }
    ini.norm("ae.enc.out.norm", ac[2]);
    ini.conv("ae.enc.out", zc, ac[2], 3, 3);
    ini.conv("ae.dec.in", ac[2], zc, 3, 3);
    for (int i = 1; i >= 0; --i) {
        std::string p = "ae.dec.u" + std::to_string(i);
        ini.norm(p + ".norm0", ac[size_t(i + 1)]);
        ini.conv(p + ".conv0", ac[size_t(i + 1)], ac[size_t(i + 1)], 3, 3);
        ini.norm(p + ".norm1", ac[size_t(i + 1)]);
        ini.conv(p + ".conv1", ac[size_t(i)], ac[size_t(i + 1)], 3, 3);  // after 2x upsample
    }
    ini.norm("ae.dec.out.norm", ac[0]);
    ini.conv("ae.dec.out", 3, ac[0], 3, 3);

    /*==== x4 pre-upsampler (residual on top of bicubic) ====*/
    const int uc = cfg.up_channels;
    ini.conv("up.in", uc, 3, 3, 3);
    ini.resblock("up.rb0", uc);
    ini.resblock("up.rb1", uc);
    ini.conv("up.s0", 4 * uc, uc, 3, 3);  // depth-to-space x2
    ini.conv("up.s1", 4 * uc, uc, 3, 3);  // depth-to-space x2
    // zero residual head: the upsampler starts exactly at its bicubic base
    ini.conv("up.out", 3, uc, 3, 3, /*zero=*/true);

    /*==== semantic tables (flattened [class * tokens, d]) ====*/
    ps.add("sem.cap", Tensor::randn({n_sem_rows * cfg.cap_tokens, d}, rng, 0.2));
    ps.add("sem.fine", Tensor::randn({n_sem_rows * cfg.fine_tokens, d}, rng, 0.2));

    /*==== per-level conditioning networks ====*/
    for (int i = 0; i < cfg.levels(); ++i) {
        std::string lvl = std::to_string(i);
        int c = ch[size_t(i)];
        ini.embed_net("unet.temb" + lvl, cfg.pe_dim, c, false);
        ini.embed_net("gscale." + lvl, cfg.pe_dim, c, /*zero_final=*/true);
        ini.embed_net("mscale." + lvl, cfg.pe_dim, c, false);
        ini.lin("refine." + lvl + ".gain", c, c, /*zero=*/true);
        ini.lin("refine." + lvl + ".bias", c, c, /*zero=*/true);
        ini.norm("refine." + lvl + ".norm", c);
        ini.conv("refine." + lvl + ".out", c, c, 1, 1, /*zero=*/true);
    }

    /*==== generation UNet ====*/
    ini.conv("unet.in", ch[0], zc, 3, 3);
    ini.resblock("unet.enc0.rb", ch[0]);
    ini.conv("unet.down0", ch[1], ch[0], 3, 3);
    ini.resblock("unet.enc1.rb", ch[1]);
    if (cfg.has_attn(1)) {
        ini.xattn("unet.enc1.xattn", ch[1], d, false);
        ini.sepr("sepr.g.enc1", ch[1], d);
    }
    ini.conv("unet.down1", ch[2], ch[1], 3, 3);
    ini.resblock("unet.mid.rb", ch[2]);
    if (cfg.has_attn(2)) {
        ini.xattn("unet.mid.xattn", ch[2], d, false);
        ini.sepr("sepr.g.mid", ch[2], d);
    }
    ini.conv("unet.up1", ch[1], ch[2], 3, 3);
    ini.resblock("unet.dec1.rb", ch[1]);
    if (cfg.has_attn(1)) {
        ini.xattn("unet.dec1.xattn", ch[1], d, false);
        ini.sepr("sepr.g.dec1", ch[1], d);
    }
    ini.conv("unet.up0", ch[0], ch[1], 3, 3);
    ini.resblock("unet.dec0.rb", ch[0]);
    ini.norm("unet.out.norm", ch[0]);
    ini.conv("unet.out", zc, ch[0], 3, 3);

    /*==== control branch (UNet-encoder mirror) ====*/
    ini.conv("ctrl.in", ch[0], zc, 3, 3);
    ini.conv("ctrl.hint", ch[0], cfg.imgenc_channels[1], 3, 3);
    ini.resblock("ctrl.enc0.rb", ch[0]);
    ini.conv("ctrl.down0", ch[1], ch[0], 3, 3);
    ini.resblock("ctrl.enc1.rb", ch[1]);
    if (cfg.has_attn(1)) {
        ini.xattn("ctrl.enc1.xattn", ch[1], d, false);
        ini.sepr("sepr.c.enc1", ch[1], d);
    }
    ini.conv("ctrl.down1", ch[2], ch[1], 3, 3);
    ini.resblock("ctrl.mid.rb", ch[2]);
    if (cfg.has_attn(2)) {
        ini.xattn("ctrl.mid.xattn", ch[2], d, false);
        ini.sepr("sepr.c.mid", ch[2], d);
    }

    /*==== fidelity-branch image encoder + LQA heads ====*/
    const auto& ec = cfg.imgenc_channels;
    ini.conv("imgenc.in", ec[0], 3, 3, 3);  // stride 2 -> 1/2
    ini.norm("imgenc.s1.norm", ec[0]);
    ini.conv("imgenc.s1", ec[1], ec[0], 3, 3);  // stride 2 -> 1/4
    ini.norm("imgenc.s2.norm", ec[1]);
    ini.conv("imgenc.s2", ec[2], ec[1], 3, 3);  // stride 2 -> 1/8
    ini.norm("imgenc.proj.norm", ec[1]);
    ini.conv("imgenc.proj", ec[1], ec[1], 3, 3);  // latent-resolution hint
    for (int n = 1; n <= 3; ++n)
        ini.conv("torgb." + std::to_string(n), 3, ec[size_t(n - 1)], 1, 1);

    return ps;
}

std::vector<std::string> zero_init_prefixes(const ModelConfig& cfg) {
    std::vector<std::string> out;
    for (int i = 0; i < cfg.levels(); ++i) {
        std::string lvl = std::to_string(i);
        out.push_back("gscale." + lvl + ".l1");
        out.push_back("refine." + lvl + ".gain");
        out.push_back("refine." + lvl + ".bias");
        out.push_back("refine." + lvl + ".out");
    }
    if (cfg.has_attn(1))
        for (const char* site : {"sepr.g.enc1", "sepr.g.dec1", "sepr.c.enc1"})
            out.push_back(std::string(site) + ".out");
    if (cfg.has_attn(2))
        for (const char* site : {"sepr.g.mid", "sepr.c.mid"})
            out.push_back(std::string(site) + ".out");
    return out;
}

}  // namespace osr
