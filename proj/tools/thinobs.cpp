// Command-line front end: one subcommand per experiment kind, or a JSON
// config with a list of scenarios.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <thinobs/harness.hpp>

namespace {

using thinobs::json;

enum class Kind { Num, Int, Vec, Nums, Str, Box, NumOrAuto };

struct Flag {
    std::string name;
    std::string key;
    Kind kind;
    std::string help;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Flag> flags;
};

const std::vector<Command>& commands() {
    static const Flag nu{"--nu", "nu", Kind::Vec, "plane normal x,y,z (normalized)"};
    static const Flag offset{"--offset", "offset", Kind::Num, "plane offset c in x·nu = c (default: through the box centre)"};
    static const Flag box{"--box", "box", Kind::Box, "lo..hi, once per axis"};
    static const Flag shape{"--shape", "shape", Kind::Str, "ball:r or ellipsoid:a,b,c"};
    static const Flag psi{"--psi", "psi", Kind::Str, "bump:cx,cy,cz,radius,height or const:v"};
    static const Flag f{"--f", "f", Kind::Str, "const:v or bump:cx,cy,cz,radius,height"};
    static const Flag h{"--h", "h", Kind::Num, "grid spacing"};
    static const Flag omega{"--omega", "omega", Kind::Num, "SOR relaxation factor"};
    static const Flag capnu{"--capnu", "capnu", Kind::NumOrAuto, "averaged capacity: auto or a value"};
    static const std::vector<Command> list{
        {"count", "intersections of the plane with the holes, as window counts",
         {nu, offset, {"--eps", "eps", Kind::Nums, "period (repeatable)"}, shape, box}},
        {"equidist", "window-count ratios A / (N eps^p)",
         {nu, {"--alpha", "alpha", Kind::Vec, "slope vector (instead of --nu)"}, {"--eps", "eps", Kind::Nums, "period (repeatable)"},
          {"--p", "p", Kind::Num, "window exponent"}, {"--t", "t", Kind::Nums, "window start (repeatable)"}, box}},
        {"discrepancy", "discrepancy of {j alpha}",
         {{"--alpha", "alpha", Kind::Nums, "alpha (repeatable)"}, {"--N", "N", Kind::Int, "sample length"},
          {"--kesten", "kesten", Kind::Int, "number of seeded uniform alphas"},
          {"--sweep", "sweep", Kind::Str, "dyadic:kmin..kmax"}}},
        {"capacity", "capacity bracket of a slice or a solid shape",
         {shape, nu, {"--s", "s", Kind::Num, "slice offset along nu"}, {"--R", "R", Kind::Num, "truncation radius"}, h,
          {"--growth", "growth", Kind::Num, "grid growth outside the core"}}},
        {"avgcap", "averaged capacity by slice quadrature",
         {shape, nu, {"--m", "m", Kind::Int, "quadrature nodes"}, {"--rule", "rule", Kind::Str, "trapezoid, simpson or graded"}, h,
          {"--R", "R", Kind::Num, "truncation radius"}}},
        {"corrector-energy", "cell corrector energies against sigma cap_nu",
         {nu, offset, {"--eps", "eps", Kind::Num, "period"}, shape, box, {"--h-local", "h_local", Kind::Num, "physical cell grid spacing"},
          capnu}},
        {"solve-eps", "eps-level thin obstacle problem",
         {psi, f, nu, offset, {"--eps", "eps", Kind::Num, "period"}, shape, h, omega, box}},
        {"solve-limit", "homogenized limit problem", {psi, f, nu, offset, capnu, shape, h, omega, box}},
        {"converge", "eps-level solutions against the limit",
         {psi, f, nu, offset, {"--eps", "eps", Kind::Nums, "period (repeatable)"}, capnu, shape, h, omega, box}},
        {"accept", "acceptance criteria", {{"--suite", "suite", Kind::Str, "counting, discrepancy, capacity, avgcap, corrector, obstacle or all"}}},
    };
    return list;
}

json convert(const Flag& flag, const std::vector<std::string>& raw) {
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw thinobs::Error(thinobs::ErrorCode::ConfigError, flag.name + ": expected a number, got '" + s + "'");
    };
    switch (flag.kind) {
    case Kind::Num: return number(raw.back());
    case Kind::Int: return static_cast<std::int64_t>(number(raw.back()));
    case Kind::Str: return raw.back();
    case Kind::NumOrAuto: return raw.back() == "auto" ? json("auto") : json(number(raw.back()));
    case Kind::Vec: return thinobs::parse_vector(raw.back());
    case Kind::Nums: {
        json out = json::array();
        for (const auto& r : raw)
            for (double v : thinobs::parse_vector(r)) out.push_back(v);
        return out;
    }
    case Kind::Box: return raw;
    }
    return nullptr;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thin obstacles on perforated hyperplanes: counting, capacities, correctors, obstacle solves"};
    // --h is a grid spacing, so help is long-form only (subcommands inherit this).
    app.set_help_flag("--help", "print this help and exit");
    app.set_version_flag("--version", thinobs::kToolVersion);
    std::string config_path, out_dir;
    std::uint64_t seed = 20240611;
    unsigned threads = 1;
    bool quick = false, check = false;
    app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (CSV, fields, manifest)");
    auto* seed_opt = app.add_option("--seed", seed, "64-bit seed for random experiments");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    auto* quick_opt = app.add_flag("--quick", quick, "reduced grids; acceptance verdicts are indicative");
    app.add_flag("--check", check, "exit non-zero if any acceptance criterion fails");
    app.require_subcommand(0, 1);

    std::map<std::string, std::map<std::string, std::vector<std::string>>> raw;
    std::map<std::string, bool> solid;
    std::map<std::string, CLI::App*> subs;
    for (const auto& cmd : commands()) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->fallthrough();
        subs[cmd.name] = sub;
        for (const auto& flag : cmd.flags) {
            auto* opt = sub->add_option(flag.name, raw[cmd.name][flag.key], flag.help);
            if (flag.kind == Kind::Nums || flag.kind == Kind::Box) opt->allow_extra_args(false);
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        }
        if (cmd.name == "capacity") {
            auto* g = sub->add_option_group("target");
            g->add_flag("--solid", solid["solid"], "capacity of the solid shape");
            g->add_flag("--slice", solid["slice"], "capacity of the slice (default)");
            g->require_option(0, 1);
        }
    }

    CLI11_PARSE(app, argc, argv);

    try {
        json config = json::object();
        CLI::App* chosen = nullptr;
        for (auto& [name, sub] : subs)
            if (sub->parsed()) chosen = sub;
        if (!config_path.empty()) {
            if (chosen) throw thinobs::Error(thinobs::ErrorCode::ConfigError, "--config cannot be combined with a subcommand");
            config = thinobs::load_config(config_path);
        } else if (chosen) {
            json sc = {{"name", chosen->get_name()}, {"kind", chosen->get_name()}};
            for (const auto& cmd : commands()) {
                if (cmd.name != chosen->get_name()) continue;
                for (const auto& flag : cmd.flags) {
                    const auto& values = raw[cmd.name][flag.key];
                    if (!values.empty()) sc[flag.key] = convert(flag, values);
                }
            }
            if (chosen->get_name() == "capacity" && solid["solid"]) sc["mode"] = "solid";
            config["scenarios"] = json::array({sc});
        } else {
            std::cout << app.help();
            return 0;
        }
        if (!out_dir.empty() && !config.contains("output_dir")) config["output_dir"] = out_dir;
        thinobs::RunContext ctx;
        if (*seed_opt) config["seed"] = seed;
        if (*threads_opt) config["threads"] = threads;
        if (*quick_opt) config["quick"] = quick;
        ctx.log = &std::cout;
        if (config.contains("output_dir") && !config["output_dir"].is_string())
            throw thinobs::Error(thinobs::ErrorCode::ConfigError, "output_dir: expected a string");
        const std::string dir = config.contains("output_dir") ? config["output_dir"].get<std::string>() : out_dir;

        const auto bundle = thinobs::run(config, ctx);
        if (!dir.empty()) {
            thinobs::write_bundle(bundle, dir);
        } else {
            for (const auto& s : bundle.scenarios) {
                if (!s.verdicts.empty()) continue;
                if (bundle.scenarios.size() > 1) std::cout << "# " << s.name << "\n";
                std::cout << s.csv;
            }
        }
        if (check && !bundle.all_pass()) return 1;
    } catch (const thinobs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == thinobs::ErrorCode::ConfigError ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
