#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "defreg/config.hpp"
#include "defreg/dic.hpp"
#include "defreg/errors.hpp"
#include "defreg/parallel.hpp"
#include "defreg/pgm.hpp"
#include "defreg/registration.hpp"
#include "defreg/rng.hpp"
#include "defreg/strain.hpp"
#include "defreg/synthetic.hpp"
#include "defreg/text_format.hpp"
#include "defreg/validation.hpp"

namespace defreg::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::uint64_t> seed;
};

struct SynthOptions {
    int width = 256;
    int height = 256;
    int frames = 2;
    std::string field = "identity";
    double tx = 0.0;
    double ty = 0.0;
    double fxx = 1.0;
    double fxy = 0.0;
    double fyx = 0.0;
    double fyy = 1.0;
    std::optional<double> anchor_x;
    std::optional<double> anchor_y;
    double angle_deg = 0.0;
    double amplitude = 0.5;
    double period = 50.0;
    std::string axis = "x";
    double noise = 0.0;
    SpeckleParams speckle;
};

struct Inputs {
    std::vector<std::string> images;
    std::string mask;
    std::string reference;
    std::string test;
    std::string field_csv;
    double floor = kMapeFloor;
};

// Collects everything needed to repeat a run; written even when the command
// fails so that no output directory is left without one.
class Manifest {
public:
    Manifest(std::string command, const std::vector<std::string>& args) {
        doc_["tool"] = "defreg";
        doc_["version"] = kVersion;
        doc_["command"] = std::move(command);
        doc_["arguments"] = args;
        doc_["inputs"] = json::array();
        doc_["outputs"] = json::array();
        doc_["summary"] = json::object();
    }

    void set(const std::string& key, json value) { doc_[key] = std::move(value); }
    json& summary() { return doc_["summary"]; }

    void input(const std::string& path) {
        doc_["inputs"].push_back({{"path", path}, {"fnv1a64", content_hash(path)}});
    }
    void output(const fs::path& path) { doc_["outputs"].push_back(path.filename().string()); }

    void write(const fs::path& dir, const std::string& status, const std::string& error) {
        doc_["status"] = status;
        if (!error.empty()) {
            doc_["error"] = error;
        }
        std::ofstream out(dir / "manifest.json");
        out << doc_.dump(2) << '\n';
    }

private:
    json doc_;
};

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    return out;
}

std::string step_name(const char* stem, std::size_t index, const char* ext) {
    std::string digits = std::to_string(index);
    digits.insert(0, digits.size() < 3 ? 3 - digits.size() : 0, '0');
    return std::string(stem) + "_" + digits + ext;
}

json config_json(const RunConfig& config) {
    json out = json::object();
    for (const auto& [key, value] : config_entries(config)) {
        out[key] = value;
    }
    return out;
}

RunConfig resolve_config(const Common& common) {
    RunConfig config = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
    if (common.seed) {
        config.registration.asgd.seed = *common.seed;
    }
    return config;
}

GrayImage load_image(const std::string& path, const std::string& mask, Manifest& manifest) {
    manifest.input(path);
    GrayImage image = load_pgm(path);
    if (!mask.empty()) {
        image = image.with_mask(load_mask(mask, image.width(), image.height()));
    }
    return image;
}

AnalyticField build_field(const SynthOptions& o) {
    const Vec2 centre{(o.width - 1) / 2.0, (o.height - 1) / 2.0};
    const Vec2 anchor{o.anchor_x.value_or(centre.x), o.anchor_y.value_or(centre.y)};
    if (o.field == "identity") {
        return AnalyticField::translation(0.0, 0.0);
    }
    if (o.field == "translation") {
        return AnalyticField::translation(o.tx, o.ty);
    }
    if (o.field == "affine") {
        return AnalyticField::affine_about({o.fxx, o.fxy, o.fyx, o.fyy}, anchor);
    }
    if (o.field == "rigid") {
        return AnalyticField::rigid(o.angle_deg * std::numbers::pi / 180.0, centre, {o.tx, o.ty});
    }
    if (o.field == "sinusoid") {
        if (o.axis != "x" && o.axis != "y") {
            throw ConfigError("--axis must be x or y");
        }
        return AnalyticField::sinusoid(o.amplitude, o.period,
                                       o.axis == "x" ? AnalyticField::Axis::x
                                                     : AnalyticField::Axis::y);
    }
    throw ConfigError("unknown --field '" + o.field +
                      "' (expected identity, translation, affine, rigid or sinusoid)");
}

void run_synth(const Common& common, const SynthOptions& o, Manifest& manifest,
               std::ostream& out) {
    if (o.frames < 2) {
        throw ConfigError("--frames must be at least 2");
    }
    if (o.width < 8 || o.height < 8) {
        throw ConfigError("--width and --height must be at least 8");
    }
    if (!(o.noise >= 0.0)) {
        throw ConfigError("--noise must not be negative");
    }
    const std::uint64_t seed = common.seed.value_or(0);
    SpeckleParams speckle = o.speckle;
    speckle.seed = mix_seed(seed, Stream::speckle);
    const AnalyticField field = build_field(o);

    // Frame k carries the fraction k / (frames - 1) of the final motion.
    std::vector<AnalyticField> cumulative;
    for (int k = 1; k < o.frames; ++k) {
        const double s = static_cast<double>(k) / (o.frames - 1);
        cumulative.push_back(o.field == "rigid" && k + 1 == o.frames ? field : field.scaled(s));
    }
    if (o.field == "rigid" && o.frames > 2) {
        throw ConfigError("--field rigid supports only --frames 2");
    }
    for (const auto& f : cumulative) {
        f.check_no_folding(o.width, o.height);
    }
    const SpecklePattern pattern(o.width, o.height, speckle);
    const SyntheticSequence seq =
        generate_sequence(pattern, o.width, o.height, cumulative, o.noise, seed);

    const fs::path dir = common.out_dir;
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
        const fs::path path = dir / step_name("frame", k, ".pgm");
        save_pgm(path, seq.frames[k], 65535);
        manifest.output(path);
    }
    for (std::size_t k = 0; k < seq.truths.size(); ++k) {
        const fs::path disp = dir / step_name("truth_displacement", k + 1, ".csv");
        auto d = open_output(disp);
        write_displacement_csv(d, seq.truths[k]);
        manifest.output(disp);
        const fs::path strain = dir / step_name("truth_strain", k + 1, ".csv");
        auto s = open_output(strain);
        write_strain_csv(s, analytic_strain(cumulative[k], o.width, o.height));
        manifest.output(strain);
    }
    manifest.set("seed", seed);
    manifest.set("generator", json{{"width", o.width},
                                   {"height", o.height},
                                   {"frames", o.frames},
                                   {"field", field.describe()},
                                   {"noise_sigma", o.noise},
                                   {"speckle_density", o.speckle.density},
                                   {"speckle_radius_min", o.speckle.radius_min},
                                   {"speckle_radius_max", o.speckle.radius_max}});
    out << "synth: wrote " << seq.frames.size() << " frames (" << field.describe() << ") to "
        << dir.string() << '\n';
}

int run_register(const Common& common, const Inputs& in, Manifest& manifest, std::ostream& out) {
    if (in.images.size() < 2) {
        throw ConfigError("register needs at least two images");
    }
    const RunConfig config = resolve_config(common);
    manifest.set("seed", config.registration.asgd.seed);
    manifest.set("config", config_json(config));
    config.registration.validate();
    if (!in.mask.empty()) {
        manifest.input(in.mask);
    }
    std::vector<GrayImage> images;
    for (const auto& path : in.images) {
        images.push_back(load_image(path, in.mask, manifest));
    }

    const SequenceResult result = register_sequence(images, config.registration);
    const fs::path dir = common.out_dir;
    bool aborted = false;
    json steps = json::array();
    for (std::size_t i = 0; i < result.steps.size(); ++i) {
        const SequenceStep& step = result.steps[i];
        const fs::path tpath = dir / step_name("transform", i + 1, ".txt");
        auto t = open_output(tpath);
        write_transform(t, step.transform);
        manifest.output(tpath);
        const fs::path dpath = dir / step_name("displacement", i + 1, ".csv");
        auto d = open_output(dpath);
        write_displacement_csv(d, step.cumulative);
        manifest.output(dpath);
        const fs::path rpath = dir / step_name("trace", i + 1, ".csv");
        auto r = open_output(rpath);
        write_trace_csv(r, step.trace);
        manifest.output(rpath);
        aborted = aborted || step.aborted;
        steps.push_back({{"step", i + 1},
                         {"ssim_mean", std::isnan(step.ssim_mean) ? json(nullptr)
                                                                  : json(step.ssim_mean)},
                         {"final_metric", step.trace.iterations.empty()
                                              ? json(nullptr)
                                              : json(step.trace.iterations.back().value)},
                         {"aborted", step.aborted},
                         {"upstream_abort", step.upstream_abort}});
        if (step.aborted) {
            steps.back()["abort_reason"] = step.trace.abort_reason;
        }
    }
    const fs::path report = dir / "ssim_report.txt";
    auto rep = open_output(report);
    write_sequence_report(rep, result);
    manifest.output(report);
    manifest.summary()["steps"] = steps;

    out << "register: " << result.steps.size() << " step(s)";
    if (!result.steps.empty()) {
        out << ", final SSIM " << format_double(result.steps.back().ssim_mean);
    }
    out << '\n';
    if (aborted) {
        out << "register: optimization aborted (degenerate overlap); see manifest\n";
        return kNumerical;
    }
    return kOk;
}

void run_strain(const Common& common, const Inputs& in, Manifest& manifest, std::ostream& out) {
    manifest.input(in.field_csv);
    std::ifstream file(in.field_csv);
    if (!file) {
        throw FormatError("cannot open " + in.field_csv);
    }
    const DisplacementField field = read_displacement_csv(file);
    const StrainField strain = green_lagrange_strain(field);
    const fs::path path = fs::path(common.out_dir) / "strain.csv";
    auto o = open_output(path);
    write_strain_csv(o, strain);
    manifest.output(path);
    out << "strain: wrote " << path.string() << '\n';
}

void run_dic(const Common& common, const Inputs& in, Manifest& manifest, std::ostream& out) {
    if (in.images.size() != 2) {
        throw ConfigError("dic needs exactly two images (reference, deformed)");
    }
    const RunConfig config = resolve_config(common);
    manifest.set("config", config_json(config));
    config.dic.validate();
    if (!in.mask.empty()) {
        manifest.input(in.mask);
    }
    const GrayImage ref = load_image(in.images[0], in.mask, manifest);
    const GrayImage def = load_image(in.images[1], "", manifest);
    const DicMeasurement m = dic_measure(ref, def, config.dic);
    const StrainField strain = dic_strain(m.field, config.dic.strain_radius);

    const fs::path dpath = fs::path(common.out_dir) / "dic_displacement.csv";
    auto d = open_output(dpath);
    write_displacement_csv(d, m.field);
    manifest.output(dpath);
    const fs::path spath = fs::path(common.out_dir) / "dic_strain.csv";
    auto s = open_output(spath);
    write_strain_csv(s, strain);
    manifest.output(spath);

    const std::size_t valid = m.field.valid_count();
    manifest.summary()["seeds"] = m.seeds.size();
    manifest.summary()["valid_seeds"] = valid;
    out << "dic: " << valid << " of " << m.seeds.size() << " seeds valid\n";
}

FieldTable read_table(const std::string& path, Manifest& manifest) {
    manifest.input(path);
    std::ifstream file(path);
    if (!file) {
        throw FormatError("cannot open " + path);
    }
    try {
        return read_field_csv(file);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void run_compare(const Common& common, const Inputs& in, Manifest& manifest, std::ostream& out) {
    const FieldTable ref = read_table(in.reference, manifest);
    const FieldTable test = read_table(in.test, manifest);
    std::vector<ComponentMape> rows;
    try {
        rows = compare_fields(ref, test, in.floor);
    } catch (const ParameterError& e) {
        // Mismatched schemas are a data problem, not a usage one.
        throw FormatError(e.what());
    }
    const fs::path path = fs::path(common.out_dir) / "compare.csv";
    auto o = open_output(path);
    o << "component,mape,used,excluded,defined\n";
    json summary = json::array();
    for (const auto& r : rows) {
        const double value = r.defined ? r.result.value : 0.0;
        o << r.component << ',' << format_double(value) << ',' << r.result.used << ','
          << r.result.excluded << ',' << (r.defined ? 1 : 0) << '\n';
        out << r.component << ": MAPE " << format_double(value) << " (used " << r.result.used
            << ", excluded " << r.result.excluded << (r.defined ? "" : ", undefined") << ")\n";
        summary.push_back({{"component", r.component},
                           {"mape", value},
                           {"used", r.result.used},
                           {"excluded", r.result.excluded},
                           {"defined", r.defined}});
    }
    manifest.output(path);
    manifest.set("floor", in.floor);
    manifest.summary()["components"] = summary;
}

void run_ssim(const Common& common, const Inputs& in, Manifest& manifest, std::ostream& out) {
    if (in.images.size() != 2) {
        throw ConfigError("ssim needs exactly two images");
    }
    const GrayImage a = load_image(in.images[0], "", manifest);
    const GrayImage b = load_image(in.images[1], "", manifest);
    std::vector<std::uint8_t> region;
    if (!in.mask.empty()) {
        manifest.input(in.mask);
        region = load_mask(in.mask, a.width(), a.height());
    }
    const SsimReport report = ssim(a, b, region);
    const fs::path csv = fs::path(common.out_dir) / "ssim.csv";
    auto o = open_output(csv);
    write_ssim_csv(o, report);
    manifest.output(csv);
    const fs::path pgm = fs::path(common.out_dir) / "ssim.pgm";
    save_ssim_pgm(pgm, report);
    manifest.output(pgm);
    manifest.summary()["ssim_mean"] = report.mean;
    out << "ssim: mean " << format_double(report.mean) << '\n';
}

void add_common(CLI::App* sub, Common& common) {
    sub->add_option("--config", common.config_path, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", common.out_dir, "Output directory (created if missing)");
    sub->add_option("--threads", common.threads, "Worker thread cap")->check(CLI::Range(1u, 1024u));
    sub->add_option("--seed", common.seed, "Master random seed");
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DegenerateOverlapError*>(&e)) {
        return kNumerical;
    }
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e)) {
        return kUsage;
    }
    return kData;
}

}  // namespace

std::string content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path);
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
        h >>= 4;
    }
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"defreg: B-spline image registration for full-field strain", "defreg"};
    app.require_subcommand(1);

    Common common;
    SynthOptions synth;
    Inputs in;

    auto* s = app.add_subcommand("synth", "Generate a speckle pair or sequence with ground truth");
    add_common(s, common);
    s->add_option("--width", synth.width);
    s->add_option("--height", synth.height);
    s->add_option("--frames", synth.frames, "Frame count (2 = pair)");
    s->add_option("--field", synth.field, "identity|translation|affine|rigid|sinusoid");
    s->add_option("--tx", synth.tx);
    s->add_option("--ty", synth.ty);
    s->add_option("--fxx", synth.fxx);
    s->add_option("--fxy", synth.fxy);
    s->add_option("--fyx", synth.fyx);
    s->add_option("--fyy", synth.fyy);
    s->add_option("--anchor-x", synth.anchor_x, "Fixed point of an affine field");
    s->add_option("--anchor-y", synth.anchor_y);
    s->add_option("--angle", synth.angle_deg, "Rotation in degrees");
    s->add_option("--amplitude", synth.amplitude);
    s->add_option("--period", synth.period);
    s->add_option("--axis", synth.axis);
    s->add_option("--noise", synth.noise, "Gaussian noise sigma");
    s->add_option("--density", synth.speckle.density, "Speckles per 100 px^2");
    s->add_option("--radius-min", synth.speckle.radius_min);
    s->add_option("--radius-max", synth.speckle.radius_max);

    auto* r = app.add_subcommand("register", "Register an ordered image sequence");
    add_common(r, common);
    r->add_option("images", in.images, "PGM frames in order")->required();
    r->add_option("--mask", in.mask, "ROI mask applied to every frame")->check(CLI::ExistingFile);

    auto* st = app.add_subcommand("strain", "Green-Lagrange strain of a displacement CSV");
    add_common(st, common);
    st->add_option("field", in.field_csv, "Displacement CSV")->required();

    auto* d = app.add_subcommand("dic", "Subset DIC on a reference/deformed pair");
    add_common(d, common);
    d->add_option("images", in.images, "Reference and deformed PGM")->required();
    d->add_option("--mask", in.mask, "ROI mask of the reference")->check(CLI::ExistingFile);

    auto* c = app.add_subcommand("compare", "Per-component MAPE of two field CSVs");
    add_common(c, common);
    c->add_option("reference", in.reference)->required();
    c->add_option("test", in.test)->required();
    c->add_option("--floor", in.floor, "Reference magnitudes below this are excluded");

    auto* ss = app.add_subcommand("ssim", "Windowed SSIM of two images");
    add_common(ss, common);
    ss->add_option("images", in.images, "Two PGM images")->required();
    ss->add_option("--mask", in.mask, "Evaluation region")->check(CLI::ExistingFile);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    set_max_threads(common.threads);

    std::error_code ec;
    fs::create_directories(common.out_dir, ec);
    if (ec) {
        err << "error: cannot create output directory " << common.out_dir << ": " << ec.message()
            << '\n';
        return kData;
    }
    Manifest manifest(command, args);
    manifest.set("threads", common.threads);

    int code = kOk;
    std::string message;
    try {
        if (command == "synth") {
            run_synth(common, synth, manifest, out);
        } else if (command == "register") {
            code = run_register(common, in, manifest, out);
        } else if (command == "strain") {
            run_strain(common, in, manifest, out);
        } else if (command == "dic") {
            run_dic(common, in, manifest, out);
        } else if (command == "compare") {
            run_compare(common, in, manifest, out);
        } else {
            run_ssim(common, in, manifest, out);
        }
    } catch (const std::exception& e) {
        code = exit_code_for(e);
        message = e.what();
        err << "error: " << message << '\n';
    }
    manifest.write(common.out_dir, code == kOk ? "ok" : "failed", message);
    return code;
}

}  // namespace defreg::cli
