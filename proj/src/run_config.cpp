#include "uvbody/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace uvbody {

namespace {

struct Field {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(const std::string& s);

template <>
int parse_number<int>(const std::string& s) {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

template <>
double parse_number<double>(const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

template <>
uint64_t parse_number<uint64_t>(const std::string& s) {
    size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return static_cast<uint64_t>(v);
}

// ordered so emission is canonical
const std::vector<std::pair<std::string, Field>>& fields() {
    auto num = [](auto member) {
        using T = std::decay_t<decltype(std::declval<RunConfig>().*member)>;
        return Field{[member](RunConfig& c, const std::string& s) { c.*member = parse_number<T>(s); },
                     [member](const RunConfig& c) {
                         if constexpr (std::is_same_v<T, double>) return fmt_double(c.*member);
                         else return std::to_string(c.*member);
                     }};
    };
    auto occ = [](int OcclusionConfig::* member) {
        return Field{
            [member](RunConfig& c, const std::string& s) { c.occlusion.*member = parse_number<int>(s); },
            [member](const RunConfig& c) { return std::to_string(c.occlusion.*member); }};
    };
    auto aug = [](double AugmentConfig::* member) {
        return Field{
            [member](RunConfig& c, const std::string& s) { c.augment.*member = parse_number<double>(s); },
            [member](const RunConfig& c) { return fmt_double(c.augment.*member); }};
    };
    static const std::vector<std::pair<std::string, Field>> list = {
        {"model.vertex_budget", num(&RunConfig::vertex_budget)},
        {"atlas.width", num(&RunConfig::atlas_width)},
        {"atlas.height", num(&RunConfig::atlas_height)},
        {"image.width", num(&RunConfig::image_width)},
        {"image.height", num(&RunConfig::image_height)},
        {"camera.scale", num(&RunConfig::camera_scale)},
        {"camera.offset_x", num(&RunConfig::camera_offset_x)},
        {"camera.offset_y", num(&RunConfig::camera_offset_y)},
        {"pose.limit_scale", num(&RunConfig::pose_limit_scale)},
        {"shape.beta_range", num(&RunConfig::beta_range)},
        {"noise.map_sigma", num(&RunConfig::map_noise_sigma)},
        {"occlusion.count_min", occ(&OcclusionConfig::count_min)},
        {"occlusion.count_max", occ(&OcclusionConfig::count_max)},
        {"occlusion.size_min", occ(&OcclusionConfig::size_min)},
        {"occlusion.size_max", occ(&OcclusionConfig::size_max)},
        {"augment.noise_sigma", aug(&AugmentConfig::noise_sigma)},
        {"augment.occlusion_prob", aug(&AugmentConfig::occlusion_prob)},
        {"train.epochs", num(&RunConfig::train_epochs)},
        {"train.batch", num(&RunConfig::train_batch)},
        {"train.lr", num(&RunConfig::train_lr)},
        {"train.dropout", num(&RunConfig::train_dropout)},
        {"train.hidden", num(&RunConfig::train_hidden)},
        {"train.inpaint_blocks", num(&RunConfig::inpaint_blocks)},
        {"train.gik_blocks", num(&RunConfig::gik_blocks)},
        {"train.w_theta", num(&RunConfig::w_theta)},
        {"train.w_beta", num(&RunConfig::w_beta)},
        {"train.w_ji", num(&RunConfig::w_ji)},
        {"train.w_vi", num(&RunConfig::w_vi)},
        {"ik.min_texels", num(&RunConfig::min_texels)},
        {"fusion.band_width", num(&RunConfig::band_width)},
        {"seed.data", num(&RunConfig::seed_data)},
        {"seed.train", num(&RunConfig::seed_train)},
        {"seed.occlusion", num(&RunConfig::seed_occlusion)},
        {"seed.noise", num(&RunConfig::seed_noise)},
    };
    return list;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::validate() const {
    if (vertex_budget < 500) throw std::invalid_argument("config: model.vertex_budget must be >= 500");
    if (atlas_width < 32 || atlas_height < 32)
        throw std::invalid_argument("config: atlas resolution must be >= 32");
    if (image_width < 16 || image_height < 16)
        throw std::invalid_argument("config: image resolution must be >= 16");
    if (!(camera_scale > 0.0)) throw std::invalid_argument("config: camera.scale must be positive");
    if (pose_limit_scale < 0.0 || pose_limit_scale > 1.5)
        throw std::invalid_argument("config: pose.limit_scale must lie in [0, 1.5]");
    if (beta_range < 0.0 || beta_range > 5.0)
        throw std::invalid_argument("config: shape.beta_range must lie in [0, 5]");
    if (map_noise_sigma < 0.0) throw std::invalid_argument("config: noise.map_sigma must be >= 0");
    if (train_epochs < 1 || train_batch < 2 || train_hidden < 1 || inpaint_blocks < 0 || gik_blocks < 0)
        throw std::invalid_argument("config: invalid training sizes");
    if (min_texels < 1) throw std::invalid_argument("config: ik.min_texels must be >= 1");
    if (band_width < 0) throw std::invalid_argument("config: fusion.band_width must be >= 0");
    occlusion.validate();
    augment.validate();
}

RunConfig parse_run_config(const std::string& text) {
    std::map<std::string, const Field*> by_name;
    for (const auto& [name, field] : fields()) by_name[name] = &field;

    RunConfig config;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        auto it = by_name.find(key);
        if (it == by_name.end())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                        key + "'");
        try {
            it->second->set(config, value);
        } catch (const std::exception&) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad value for '" +
                                        key + "'");
        }
        seen.insert(key);
    }
    for (const char* required : {"seed.data", "seed.train", "seed.occlusion", "seed.noise"})
        if (!seen.count(required))
            throw std::invalid_argument(std::string("config: missing required key '") + required + "'");
    config.validate();
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_to_text(const RunConfig& config) {
    std::string out;
    for (const auto& [name, field] : fields()) {
        out += name;
        out += " = ";
        out += field.get(config);
        out += "\n";
    }
    return out;
}

}  // namespace uvbody
