#include "checkpoint.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace osr {

namespace fs = std::filesystem;
using json = nlohmann::json;

static constexpr int kFormatVersion = 1;

void save_checkpoint(const ParamStore& ps, const CheckpointMeta& meta, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, errc::io_error, "cannot create checkpoint dir: " + dir);

    json arrays = json::array();
    int64_t offset = 0;
    for (const auto& [name, e] : ps.entries) {
        int64_t length = e.value.numel() * int64_t(sizeof(float));
        arrays.push_back({{"name", name},
                          {"dtype", "f32"},
                          {"shape", e.value.shape},
                          {"offset", offset},
                          {"length", length},
                          {"trainable", e.trainable}});
        offset += length;
    }
    json manifest = {{"format", kFormatVersion},
                     {"arrays", arrays},
                     {"config", meta.config},
                     {"schedule",
                      {{"T", meta.schedule_T},
                       {"beta_start", meta.beta_start},
                       {"beta_end", meta.beta_end},
                       {"sigma_mode", meta.sigma_mode}}}};

    {
        std::ofstream f(fs::path(dir) / "manifest.json");
        require(f.good(), errc::io_error, "cannot write manifest.json in " + dir);
        f << manifest.dump(2) << "\n";
        require(f.good(), errc::io_error, "short write: manifest.json");
    }
    {
        std::ofstream f(fs::path(dir) / "weights.bin", std::ios::binary);
        require(f.good(), errc::io_error, "cannot write weights.bin in " + dir);
        for (const auto& [name, e] : ps.entries)
            f.write(reinterpret_cast<const char*>(e.value.data()),
                    std::streamsize(e.value.numel() * int64_t(sizeof(float))));
        require(f.good(), errc::io_error, "short write: weights.bin");
    }
}

ParamStore load_checkpoint(const std::string& dir, CheckpointMeta& meta) {
    fs::path mpath = fs::path(dir) / "manifest.json";
    fs::path wpath = fs::path(dir) / "weights.bin";
    std::ifstream mf(mpath);
    require(mf.good(), errc::io_error, "cannot open " + mpath.string());

    json manifest;
    try {
        manifest = json::parse(mf);
    } catch (const json::exception& e) {
        fail(errc::corrupt_checkpoint, "manifest.json parse error: " + std::string(e.what()));
    }

    struct Rec {
        std::string name;
        std::vector<int> shape;
        int64_t offset, length;
        bool trainable;
    };
    std::vector<Rec> recs;
    try {
        require(manifest.at("format").get<int>() == kFormatVersion, errc::corrupt_checkpoint,
                "unsupported checkpoint format version");
        for (const auto& a : manifest.at("arrays")) {
            Rec r{a.at("name").get<std::string>(), a.at("shape").get<std::vector<int>>(),
                  a.at("offset").get<int64_t>(), a.at("length").get<int64_t>(),
                  a.value("trainable", true)};
            require(a.at("dtype").get<std::string>() == "f32", errc::corrupt_checkpoint,
                    "array " + r.name + ": unsupported dtype");
            recs.push_back(std::move(r));
        }
        meta.config = manifest.at("config").get<std::map<std::string, std::string>>();
        const auto& s = manifest.at("schedule");
        meta.schedule_T = s.at("T").get<int>();
        meta.beta_start = s.at("beta_start").get<double>();
        meta.beta_end = s.at("beta_end").get<double>();
        meta.sigma_mode = s.at("sigma_mode").get<std::string>();
    } catch (const json::exception& e) {
        fail(errc::corrupt_checkpoint, "manifest.json field error: " + std::string(e.what()));
    }

    std::ifstream wf(wpath, std::ios::binary);
    require(wf.good(), errc::io_error, "cannot open " + wpath.string());
    wf.seekg(0, std::ios::end);
    const int64_t file_size = wf.tellg();

    // validate the whole table before materializing any array
    int64_t expect_offset = 0;
    for (const auto& r : recs) {
        int64_t numel = 1;
        for (int d : r.shape) {
            require(d >= 1, errc::corrupt_checkpoint, "array " + r.name + ": bad shape");
            numel *= d;
        }
        require(r.length == numel * int64_t(sizeof(float)), errc::corrupt_checkpoint,
                "array " + r.name + ": length does not match shape");
        require(r.offset == expect_offset, errc::corrupt_checkpoint,
                "array " + r.name + ": non-contiguous offset");
        expect_offset += r.length;
        require(r.offset + r.length <= file_size, errc::corrupt_checkpoint,
                "array " + r.name + ": truncated weights.bin");
    }
    require(expect_offset == file_size, errc::corrupt_checkpoint,
            "weights.bin size does not match manifest");

    ParamStore ps;
    for (const auto& r : recs) {
        Tensor t(r.shape);
        wf.seekg(r.offset);
        wf.read(reinterpret_cast<char*>(t.data()), std::streamsize(r.length));
        require(wf.good(), errc::corrupt_checkpoint, "array " + r.name + ": read failed");
        ps.add(r.name, std::move(t), r.trainable);
    }
    return ps;
}

}  // namespace osr
