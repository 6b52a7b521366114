#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace osr {

void TrainConfig::validate() const {
    require(alpha_lqa >= 0.0, errc::invalid_argument, "alpha_lqa must be >= 0");
    require(learning_rate > 0.0, errc::invalid_argument, "learning_rate must be positive");
    require(batch_size >= 1 && steps >= 0, errc::invalid_argument,
            "batch_size must be >= 1 and steps >= 0");
    require(hr_lo >= 16 && hr_hi >= hr_lo, errc::invalid_argument, "bad hr bounds");
    require(scale_lo >= 1.0 && scale_hi >= scale_lo, errc::invalid_argument,
            "bad scale bounds");
    require(uncond_dropout >= 0.0 && uncond_dropout <= 1.0, errc::invalid_argument,
            "uncond_dropout must be a probability");
    require(grad_clip >= 0.0, errc::invalid_argument, "grad_clip must be >= 0");
}

/*================================================= key = value parsing ====*/

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        require(!item.empty(), errc::invalid_argument, "empty entry in list: " + s);
        out.push_back(std::stoi(item));
    }
    require(!out.empty(), errc::invalid_argument, "empty list value");
    return out;
}

std::string join_int_list(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

// shortest round-trip-exact decimal form
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    for (int prec = 6; prec < 17; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        std::sscanf(probe, "%lf", &back);
        if (back == v) return probe;
    }
    return buf;
}

}  // namespace

Config Config::parse_text(const std::string& text) {
    Config c;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            require(t.back() == ']' && t.size() > 2, errc::invalid_argument,
                    "config line " + std::to_string(lineno) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        require(eq != std::string::npos, errc::invalid_argument,
                "config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq)), val = trim(t.substr(eq + 1));
        require(!key.empty(), errc::invalid_argument,
                "config line " + std::to_string(lineno) + ": empty key");
        c.kv[section.empty() ? key : section + "." + key] = val;
    }
    return c;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), errc::io_error, "cannot open config file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_text(buf.str());
}

std::string Config::serialize() const {
    // group by section prefix; map order keeps output deterministic
    std::string out, current;
    bool first = true;
    for (const auto& [key, val] : kv) {
        size_t dot = key.find('.');
        std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
        std::string bare = dot == std::string::npos ? key : key.substr(dot + 1);
        if (section != current || first) {
            if (!first) out += "\n";
            if (!section.empty()) out += "[" + section + "]\n";
            current = section;
            first = false;
        }
        out += bare + " = " + val + "\n";
    }
    return out;
}

std::string Config::get(const std::string& key, const std::string& dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
}

int Config::get_int(const std::string& key, int dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        fail(errc::invalid_argument, "config key " + key + ": not an integer");
    }
}

double Config::get_double(const std::string& key, double dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        fail(errc::invalid_argument, "config key " + key + ": not a number");
    }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    fail(errc::invalid_argument, "config key " + key + ": not a boolean");
}

/*================================================= struct round trips ====*/

ModelConfig model_config_from(const Config& c) {
    ModelConfig m;
    m.ae_factor = c.get_int("model.ae_factor", m.ae_factor);
    if (c.has("model.ae_channels")) m.ae_channels = parse_int_list(c.get("model.ae_channels", ""));
    m.latent_channels = c.get_int("model.latent_channels", m.latent_channels);
    m.latent_scale = float(c.get_double("model.latent_scale", m.latent_scale));
    if (c.has("model.channels")) m.channels = parse_int_list(c.get("model.channels", ""));
    if (c.has("model.attn_levels")) m.attn_levels = parse_int_list(c.get("model.attn_levels", ""));
    m.pe_dim = c.get_int("model.pe_dim", m.pe_dim);
    m.sem_dim = c.get_int("model.sem_dim", m.sem_dim);
    m.cap_tokens = c.get_int("model.cap_tokens", m.cap_tokens);
    m.fine_tokens = c.get_int("model.fine_tokens", m.fine_tokens);
    m.num_classes = c.get_int("model.num_classes", m.num_classes);
    if (c.has("model.imgenc_channels"))
        m.imgenc_channels = parse_int_list(c.get("model.imgenc_channels", ""));
    m.up_channels = c.get_int("model.up_channels", m.up_channels);
    m.T = c.get_int("model.T", m.T);
    m.beta_start = c.get_double("model.beta_start", m.beta_start);
    m.beta_end = c.get_double("model.beta_end", m.beta_end);
    std::string sm = c.get("model.sigma_mode", "posterior");
    if (sm == "posterior")
        m.sigma_mode = SigmaMode::posterior;
    else if (sm == "beta")
        m.sigma_mode = SigmaMode::beta;
    else
        fail(errc::invalid_argument, "unknown sigma_mode: " + sm);
    m.scale_encoding = c.get("model.scale_encoding", m.scale_encoding);
    m.use_global_scale = c.get_bool("model.use_global_scale", m.use_global_scale);
    m.use_local_mod = c.get_bool("model.use_local_mod", m.use_local_mod);
    m.use_sepr = c.get_bool("model.use_sepr", m.use_sepr);
    m.use_mup = c.get_bool("model.use_mup", m.use_mup);
    return m;
}

TrainConfig train_config_from(const Config& c) {
    TrainConfig t;
    t.alpha_lqa = c.get_double("train.alpha_lqa", t.alpha_lqa);
    t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
    t.batch_size = c.get_int("train.batch_size", t.batch_size);
    t.steps = c.get_int("train.steps", t.steps);
    t.hr_lo = c.get_int("train.hr_lo", t.hr_lo);
    t.hr_hi = c.get_int("train.hr_hi", t.hr_hi);
    t.scale_lo = c.get_double("train.scale_lo", t.scale_lo);
    t.scale_hi = c.get_double("train.scale_hi", t.scale_hi);
    std::string dm = c.get("train.degrade_mode", "bicubic");
    if (dm == "bicubic")
        t.degrade_mode = DegradeMode::bicubic_only;
    else if (dm == "realworld")
        t.degrade_mode = DegradeMode::realworld;
    else
        fail(errc::invalid_argument, "unknown degrade_mode: " + dm);
    t.uncond_dropout = c.get_double("train.uncond_dropout", t.uncond_dropout);
    t.grad_clip = c.get_double("train.grad_clip", t.grad_clip);
    if (c.has("train.seed")) {
        try {
            t.seed = std::stoull(c.get("train.seed", "0"));
        } catch (const std::exception&) {
            fail(errc::invalid_argument, "config key train.seed: not an integer");
        }
    }
    t.validate();
    return t;
}

void write_model_config(Config& c, const ModelConfig& m) {
    c.set("model.ae_factor", std::to_string(m.ae_factor));
    c.set("model.ae_channels", join_int_list(m.ae_channels));
    c.set("model.latent_channels", std::to_string(m.latent_channels));
    c.set("model.latent_scale", fmt_double(m.latent_scale));
    c.set("model.channels", join_int_list(m.channels));
    c.set("model.attn_levels", join_int_list(m.attn_levels));
    c.set("model.pe_dim", std::to_string(m.pe_dim));
    c.set("model.sem_dim", std::to_string(m.sem_dim));
    c.set("model.cap_tokens", std::to_string(m.cap_tokens));
    c.set("model.fine_tokens", std::to_string(m.fine_tokens));
    c.set("model.num_classes", std::to_string(m.num_classes));
    c.set("model.imgenc_channels", join_int_list(m.imgenc_channels));
    c.set("model.up_channels", std::to_string(m.up_channels));
    c.set("model.T", std::to_string(m.T));
    c.set("model.beta_start", fmt_double(m.beta_start));
    c.set("model.beta_end", fmt_double(m.beta_end));
    c.set("model.sigma_mode", m.sigma_mode == SigmaMode::posterior ? "posterior" : "beta");
    c.set("model.scale_encoding", m.scale_encoding);
    c.set("model.use_global_scale", m.use_global_scale ? "true" : "false");
    c.set("model.use_local_mod", m.use_local_mod ? "true" : "false");
    c.set("model.use_sepr", m.use_sepr ? "true" : "false");
    c.set("model.use_mup", m.use_mup ? "true" : "false");
}

void write_train_config(Config& c, const TrainConfig& t) {
    c.set("train.alpha_lqa", fmt_double(t.alpha_lqa));
    c.set("train.learning_rate", fmt_double(t.learning_rate));
    c.set("train.batch_size", std::to_string(t.batch_size));
    c.set("train.steps", std::to_string(t.steps));
    c.set("train.hr_lo", std::to_string(t.hr_lo));
    c.set("train.hr_hi", std::to_string(t.hr_hi));
    c.set("train.scale_lo", fmt_double(t.scale_lo));
    c.set("train.scale_hi", fmt_double(t.scale_hi));
    c.set("train.degrade_mode",
          t.degrade_mode == DegradeMode::bicubic_only ? "bicubic" : "realworld");
    c.set("train.uncond_dropout", fmt_double(t.uncond_dropout));
    c.set("train.grad_clip", fmt_double(t.grad_clip));
    c.set("train.seed", std::to_string(t.seed));
}

}  // namespace osr
