#include "defreg/config.hpp"

#include <fstream>
#include <sstream>

#include "defreg/errors.hpp"
#include "defreg/text_format.hpp"

namespace defreg {

namespace {

struct Context {
    std::string key;  // section.key
    int line = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(key + " (line " + std::to_string(line) + "): " + what);
    }
};

double as_double(const Context& ctx, std::string_view value) {
    try {
        return parse_double(value, ctx.key);
    } catch (const Error&) {
        ctx.fail("expected a number, got '" + std::string(value) + "'");
    }
}

long as_long(const Context& ctx, std::string_view value) {
    try {
        return parse_long(value, ctx.key);
    } catch (const Error&) {
        ctx.fail("expected an integer, got '" + std::string(value) + "'");
    }
}

std::vector<std::string_view> split_list(std::string_view value) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::size_t end = comma == std::string_view::npos ? value.size() : comma;
        out.push_back(trim(value.substr(start, end - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

void apply_registration(RegistrationConfig& cfg, std::string_view key, std::string_view value,
                        const Context& ctx) {
    if (key == "metric") {
        try {
            cfg.metric = parse_metric_kind(value);
        } catch (const Error& e) {
            ctx.fail(e.what());
        }
    } else if (key == "samples") {
        const long n = as_long(ctx, value);
        if (n < 0) {
            ctx.fail("must not be negative");
        }
        cfg.samples = static_cast<std::size_t>(n);
    } else if (key == "spacing") {
        const auto parts = split_list(value);
        if (parts.size() == 1) {
            const double s = as_double(ctx, parts[0]);
            cfg.spacing = {s, s};
        } else if (parts.size() == 2) {
            cfg.spacing = {as_double(ctx, parts[0]), as_double(ctx, parts[1])};
        } else {
            ctx.fail("expected one value or 'sx, sy'");
        }
    } else if (key == "pyramid_levels") {
        cfg.pyramid_levels.clear();
        for (const auto part : split_list(value)) {
            cfg.pyramid_levels.push_back(static_cast<int>(as_long(ctx, part)));
        }
    } else if (key == "interpolation") {
        if (value == "cubic" || value == "cubic_bspline") {
            cfg.interpolation = Interpolation::cubic_bspline;
        } else if (value == "bilinear") {
            cfg.interpolation = Interpolation::bilinear;
        } else {
            ctx.fail("expected 'cubic' or 'bilinear'");
        }
    } else {
        ctx.fail("unknown key");
    }
}

void apply_asgd(AsgdConfig& cfg, std::string_view key, std::string_view value,
                const Context& ctx) {
    if (key == "max_iterations") {
        cfg.max_iterations = static_cast<int>(as_long(ctx, value));
    } else if (key == "a") {
        if (value == "auto") {
            cfg.a.reset();
        } else {
            cfg.a = as_double(ctx, value);
        }
    } else if (key == "A") {
        cfg.A = as_double(ctx, value);
    } else if (key == "alpha") {
        cfg.alpha = as_double(ctx, value);
    } else if (key == "time_window") {
        cfg.time_window = as_double(ctx, value);
    } else if (key == "initial_step") {
        cfg.initial_step = as_double(ctx, value);
    } else if (key == "seed") {
        const long s = as_long(ctx, value);
        if (s < 0) {
            ctx.fail("must not be negative");
        }
        cfg.seed = static_cast<std::uint64_t>(s);
    } else {
        ctx.fail("unknown key");
    }
}

void apply_dic(DicParams& cfg, std::string_view key, std::string_view value, const Context& ctx) {
    if (key == "subset_radius") {
        cfg.subset_radius = static_cast<int>(as_long(ctx, value));
    } else if (key == "step") {
        cfg.step = static_cast<int>(as_long(ctx, value));
    } else if (key == "search_radius") {
        cfg.search_radius = static_cast<int>(as_long(ctx, value));
    } else if (key == "strain_radius") {
        cfg.strain_radius = as_double(ctx, value);
    } else if (key == "min_correlation") {
        cfg.min_correlation = as_double(ctx, value);
    } else {
        ctx.fail("unknown key");
    }
}

std::string strip_comment(std::string_view line) {
    const std::size_t cut = line.find_first_of("#;");
    return std::string(trim(line.substr(0, cut)));
}

}  // namespace

RunConfig parse_config(std::string_view text, RunConfig base) {
    RunConfig cfg = std::move(base);
    std::string section;
    int line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        ++line_no;
        const std::string line = strip_comment(text.substr(start, end - start));
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            }
            section = std::string(trim(std::string_view(line).substr(1, line.size() - 2)));
            if (section != "registration" && section != "asgd" && section != "dic") {
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" +
                                  section + "]");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string_view key = trim(std::string_view(line).substr(0, eq));
        const std::string_view value = trim(std::string_view(line).substr(eq + 1));
        Context ctx{(section.empty() ? std::string() : section + ".") + std::string(key), line_no};
        if (section.empty()) {
            ctx.fail("key outside of any section");
        }
        if (value.empty()) {
            ctx.fail("missing value");
        }
        if (section == "registration") {
            apply_registration(cfg.registration, key, value, ctx);
        } else if (section == "asgd") {
            apply_asgd(cfg.registration.asgd, key, value, ctx);
        } else {
            apply_dic(cfg.dic, key, value, ctx);
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str(), std::move(base));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
    const auto& r = config.registration;
    const auto& a = r.asgd;
    const auto& d = config.dic;
    std::string levels;
    for (std::size_t i = 0; i < r.pyramid_levels.size(); ++i) {
        levels += (i ? ", " : "") + std::to_string(r.pyramid_levels[i]);
    }
    return {
        {"registration.metric", std::string(to_string(r.metric))},
        {"registration.samples", std::to_string(r.samples)},
        {"registration.spacing", format_double(r.spacing.x) + ", " + format_double(r.spacing.y)},
        {"registration.pyramid_levels", levels},
        {"registration.interpolation",
         r.interpolation == Interpolation::bilinear ? "bilinear" : "cubic"},
        {"asgd.max_iterations", std::to_string(a.max_iterations)},
        {"asgd.a", a.a ? format_double(*a.a) : "auto"},
        {"asgd.A", format_double(a.A)},
        {"asgd.alpha", format_double(a.alpha)},
        {"asgd.time_window", format_double(a.time_window)},
        {"asgd.initial_step", format_double(a.initial_step)},
        {"asgd.seed", std::to_string(a.seed)},
        {"dic.subset_radius", std::to_string(d.subset_radius)},
        {"dic.step", std::to_string(d.step)},
        {"dic.search_radius", std::to_string(d.search_radius)},
        {"dic.strain_radius", format_double(d.strain_radius)},
        {"dic.min_correlation", format_double(d.min_correlation)},
    };
}

std::string render_config(const RunConfig& config) {
    std::string out;
    std::string section;
    for (const auto& [key, value] : config_entries(config)) {
        const std::size_t dot = key.find('.');
        const std::string s = key.substr(0, dot);
        if (s != section) {
            out += (section.empty() ? "[" : "\n[") + s + "]\n";
            section = s;
        }
        out += key.substr(dot + 1) + " = " + value + "\n";
    }
    return out;
}

}  // namespace defreg
