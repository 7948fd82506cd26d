// vibench: run stochastic extragradient benchmarks from JSON configs.

#include "vibench/bench.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace vb = vibench::bench;

namespace {

int report_error(const std::exception& e, int code) {
    std::cerr << "vibench: error: " << e.what() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic extragradient benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, problem_path, out_dir;
    unsigned jobs = 1;
    std::uint64_t seed_offset = 0, verify_seed = 0;

    auto* run = app.add_subcommand("run", "Run every arm and seed of a config");
    run->add_option("config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    run->add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("--out,-o", out_dir, "Output directory (overrides VIBENCH_OUT and the config)");
    run->add_option("--seed-offset", seed_offset, "Added to every seed");

    auto* verify = app.add_subcommand("verify", "Re-certify the constants stored in a problem file");
    verify->add_option("problem", problem_path, "Problem file")->required()->check(CLI::ExistingFile);
    verify->add_option("--seed", verify_seed, "Seed for sampled checks");

    auto* constants = app.add_subcommand("constants", "Print problem constants and step prescriptions");
    constants->add_option("config", config_path, "JSON config")->required()->check(CLI::ExistingFile);

    auto* exp = app.add_subcommand("export", "Generate the config's problem and save it");
    exp->add_option("config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    exp->add_option("problem", problem_path, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? vb::kExitOk : vb::kExitConfig;
    }

    try {
        if (*run) {
            const vb::RunPlan plan = vb::parse_config(config_path);
            vb::ExecOptions opt;
            opt.jobs = jobs;
            opt.seed_offset = seed_offset;
            if (!out_dir.empty()) opt.out_dir = out_dir;
            const vb::ExecResult r = vb::execute(plan, opt);
            for (const auto& arm : r.arms) {
                std::size_t diverged = 0;
                for (const auto& s : arm.seeds) diverged += s.trace.summary.diverged ? 1 : 0;
                std::cout << arm.arm.label << ": " << arm.seeds.size() - diverged << "/" << arm.seeds.size()
                          << " seeds completed";
                if (!arm.aggregate.empty()) {
                    std::cout << ", median final rel_err " << vb::format_double(arm.aggregate.back().rel_err.median)
                              << ", rel_opnorm " << vb::format_double(arm.aggregate.back().rel_opnorm.median);
                }
                std::cout << "\n";
            }
            std::cout << "outputs in " << r.output_dir << "\n";
            if (r.exit_code == vb::kExitAllDiverged) std::cerr << "vibench: every seed diverged\n";
            return r.exit_code;
        }
        if (*verify) {
            const vibench::FiniteSumProblem p = vibench::load_problem(problem_path);
            bool ok = true;
            for (const auto& line : vb::verify_problem(p, verify_seed)) {
                std::cout << (line.pass ? "PASS " : "FAIL ") << line.name;
                if (!line.detail.empty()) std::cout << "  " << line.detail;
                std::cout << "\n";
                ok = ok && line.pass;
            }
            return ok ? vb::kExitOk : vb::kExitFailure;
        }
        if (*constants) {
            std::cout << vb::constants_report(vb::parse_config(config_path)) << "\n";
            return vb::kExitOk;
        }
        if (*exp) {
            const vb::RunPlan plan = vb::parse_config(config_path);
            vibench::save_problem(vb::build_problem(plan.problem), problem_path);
            std::cout << "wrote " << problem_path << "\n";
            return vb::kExitOk;
        }
    } catch (const vb::ConfigError& e) {
        return report_error(e, vb::kExitConfig);
    } catch (const std::exception& e) {
        return report_error(e, vb::kExitFailure);
    }
    return vb::kExitFailure;
}
