// Command-line front end for the CAD pipeline. Exit codes: 0 success,
// 2 when a stage is requested before its inputs exist, 1 for anything else.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mipcad/io/png.hpp"
#include "mipcad/pipeline/stages.hpp"
#include "mipcad/synth/phantom.hpp"

namespace {

struct run_opts {
    std::string config;
    int fold = -1;  // -1 keeps the config's fold
};

mipcad::pipeline_config load(const run_opts& o) {
    mipcad::pipeline_config cfg = mipcad::load_config(o.config);
    if (o.fold >= 0) cfg.fold = o.fold;  // range-checked when the fold plan is built
    return cfg;
}

void add_run_opts(CLI::App* app, run_opts& o) {
    app->add_option("--config", o.config, "pipeline config JSON")->required();
    app->add_option("--fold", o.fold, "override the config's fold index");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIP-based lung nodule detection pipeline"};
    app.require_subcommand(1);

    // synth: self-contained phantom dataset for demos and end-to-end checks.
    auto* synth = app.add_subcommand("synth", "generate a synthetic CT mini-dataset");
    std::string synth_out = "data";
    int synth_n = 6;
    uint64_t synth_seed = 7;
    int snx = 64, sny = 64, snz = 40;
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--scans", synth_n, "number of volumes");
    synth->add_option("--seed", synth_seed, "base RNG seed");
    synth->add_option("--nx", snx, "volume width");
    synth->add_option("--ny", sny, "volume height");
    synth->add_option("--nz", snz, "volume slice count");

    run_opts ro;
    auto* run = app.add_subcommand("run", "run every stage in order");
    add_run_opts(run, ro);

    std::vector<std::pair<CLI::App*, mipcad::stage>> stage_cmds;
    for (mipcad::stage s :
         {mipcad::stage::segment, mipcad::stage::mip, mipcad::stage::train_detect,
          mipcad::stage::detect, mipcad::stage::merge, mipcad::stage::train_fpr,
          mipcad::stage::score, mipcad::stage::froc_eval, mipcad::stage::report}) {
        auto* c = app.add_subcommand(mipcad::stage_name(s),
                                     std::string("run the ") + mipcad::stage_name(s) + " stage");
        add_run_opts(c, ro);
        stage_cmds.emplace_back(c, s);
    }

    // export-png: quick look at any cached array slice.
    auto* expng = app.add_subcommand("export-png", "render one slice of a cached array");
    std::string ep_in, ep_out = "slice.png";
    int ep_slice = 0;
    expng->add_option("--in", ep_in, "array file (.arr)")->required();
    expng->add_option("--slice", ep_slice, "slice index");
    expng->add_option("--out", ep_out, "output PNG");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            mipcad::phantom_params p;
            p.nx = snx;
            p.ny = sny;
            p.nz = snz;
            const auto ids = mipcad::write_mini_dataset(synth_out, synth_n, synth_seed, p);
            std::cout << "wrote " << ids.size() << " volumes under " << synth_out << '\n';
            return 0;
        }
        if (expng->parsed()) {
            const auto a = mipcad::io::load_array<float>(ep_in);
            if (ep_slice < 0 || ep_slice >= a.nz())
                throw mipcad::parameter_error("slice index out of range");
            float lo = a.raw()[0], hi = a.raw()[0];
            for (size_t i = 0; i < a.size(); ++i) {
                lo = std::min(lo, a.raw()[i]);
                hi = std::max(hi, a.raw()[i]);
            }
            const float scale = hi > lo ? 255.f / (hi - lo) : 0.f;
            std::vector<uint8_t> rgb(size_t(a.nx()) * a.ny() * 3);
            for (int y = 0; y < a.ny(); ++y)
                for (int x = 0; x < a.nx(); ++x) {
                    const auto v = uint8_t((a(x, y, ep_slice) - lo) * scale);
                    const size_t o = (size_t(y) * a.nx() + x) * 3;
                    rgb[o] = rgb[o + 1] = rgb[o + 2] = v;
                }
            mipcad::io::write_png_rgb(ep_out, rgb, a.nx(), a.ny());
            std::cout << "wrote " << ep_out << '\n';
            return 0;
        }
        if (run->parsed()) {
            mipcad::run_all(load(ro), &std::cout);
            return 0;
        }
        for (const auto& [cmd, s] : stage_cmds)
            if (cmd->parsed()) {
                mipcad::run_stage(load(ro), s, &std::cout);
                return 0;
            }
    } catch (const mipcad::dependency_error& e) {
        std::cerr << "dependency error: " << e.what() << '\n';
        return 2;
    } catch (const mipcad::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
