#include "nk/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace nk;

namespace {

struct Inline {
    std::string config_file;
    std::string poly;
    int nvars = 0;
    double radius = 0;
    std::vector<int> L;
    int grid = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::vector<std::string> checks;
};

void add_common(CLI::App* sub, Inline& in)
{
    sub->add_option("--config", in.config_file, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--poly", in.poly, "polynomial, e.g. \"x1*x2\"");
    sub->add_option("--nvars", in.nvars, "number of variables (default: highest index)");
    sub->add_option("--radius", in.radius, "kernel support radius R");
    sub->add_option("--L", in.L, "truncation levels")->delimiter(',');
    sub->add_option("--grid", in.grid, "piece-bound grid density");
    sub->add_option("--seed", in.seed, "random seed");
    sub->add_option("--out", in.out, "output directory");
}

RunConfig build_config(const CLI::App* sub, const Inline& in)
{
    RunConfig c;
    if (!in.config_file.empty()) {
        Json j;
        try {
            j = Json::parse(read_file(in.config_file));
        } catch (const Json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        c = config_from_json(j);
    }
    auto set = [&](const char* name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o && o->count() > 0;
    };
    if (set("--poly"))
        c.poly = in.poly;
    if (set("--nvars"))
        c.nvars = in.nvars;
    if (set("--radius"))
        c.radius = in.radius;
    if (set("--L"))
        c.L = in.L;
    if (set("--grid"))
        c.grid = in.grid;
    if (set("--seed"))
        c.seed = in.seed;
    if (set("--out"))
        c.output_dir = in.out;
    if (set("--checks"))
        c.checks = in.checks;
    return validate(c);
}

void emit(const CLI::App* sub, const RunConfig& c, StageResult& s, const std::string& file)
{
    std::cout << s.report.dump(2) << "\n";
    if (sub->count("--out") == 0)
        return;
    std::filesystem::create_directories(c.output_dir);
    write_file(std::filesystem::path(c.output_dir) / file, s.report.dump(2) + "\n");
    for (auto& [name, table] : s.tables)
        write_file(std::filesystem::path(c.output_dir) / name, table.str());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Newton polyhedra, dyadic singular kernels and numerical checks of their estimates"};
    app.require_subcommand(1);

    Inline in;
    auto* analyze = app.add_subcommand("analyze", "Newton polyhedron and invariants as JSON");
    auto* hyp = app.add_subcommand("hypotheses", "face zero-order screen (exit 2 on violation, 3 on budget)");
    auto* vk = app.add_subcommand("verify-kernel", "piece bounds, cancellation and the distribution pairing");
    auto* ve = app.add_subcommand("verify-estimates", "sublevel, dyadic-rectangle, Fourier, multiplier, symbol and operator checks");
    auto* run = app.add_subcommand("run", "full pipeline with reports, CSV series and a manifest");
    for (auto* s : {analyze, hyp, vk, ve, run})
        add_common(s, in);
    ve->add_option("--checks", in.checks, "checks to run")
        ->delimiter(',')
        ->check(CLI::IsMember(all_estimate_checks()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_pass : exit_usage;
    }

    try {
        const CLI::App* sub = app.get_subcommands().front();
        const RunConfig c = build_config(sub, in);
        if (sub == analyze) {
            StageResult s = stage_analyze(c);
            emit(sub, c, s, "newton.json");
            return exit_pass;
        }
        if (sub == hyp) {
            StageResult s = stage_hypotheses(c);
            emit(sub, c, s, "hypotheses.json");
            return s.exit_code;
        }
        if (sub == vk) {
            StageResult s = stage_verify_kernel(c);
            emit(sub, c, s, "kernel.json");
            return s.exit_code;
        }
        if (sub == ve) {
            const StageResult a = stage_analyze(c);
            const StageResult h = stage_hypotheses(c);
            StageResult s = stage_verify_estimates(c, a.report, h.report);
            emit(sub, c, s, "estimates.json");
            return s.exit_code;
        }
        const RunManifest m = run_pipeline(c);
        for (const auto& st : m.document.at("stages"))
            std::cout << st.at("name").get<std::string>() << ": " << st.at("status").get<std::string>()
                      << (st.contains("reason") ? " (" + st.at("reason").get<std::string>() + ")" : "") << "\n";
        std::cout << "manifest: " << (std::filesystem::path(c.output_dir) / "manifest.json").string() << "\n";
        return m.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_check_failed;
    }
}
