#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "fedtgan/app.hpp"

using namespace fedtgan;
namespace fs = std::filesystem;

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("fedtgan");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
    const char* level = std::getenv("FEDTGAN_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

int exit_code(ErrorKind k) { return k == ErrorKind::Config ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App cli{"Federated tabular GAN experiments"};
    cli.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_override;

    auto* run = cli.add_subcommand("run", "train one experiment and write its output directory");
    run->add_option("--config", config_path, "run config (YAML)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--seed-override", seed_override, "replace the config seed");

    auto* validate = cli.add_subcommand("validate", "check a config and print the experiment plan");
    validate->add_option("--config", config_path, "run config (YAML)")->required()->check(CLI::ExistingFile);
    validate->add_option("--seed-override", seed_override, "replace the config seed");

    std::vector<std::string> dirs;
    std::string csv_out;
    auto* compare = cli.add_subcommand("compare", "tabulate final scores of finished runs");
    compare->add_option("dirs", dirs, "run output directories")->required();
    compare->add_option("--out", csv_out, "also write the table as CSV");

    std::uint32_t client_id = 0;
    std::string address;
    auto* client = cli.add_subcommand("client", "serve one shard to a tcp federator");
    client->add_option("--config", config_path, "run config (YAML)")->required()->check(CLI::ExistingFile);
    client->add_option("--id", client_id, "client index")->required();
    client->add_option("--address", address, "federator host:port (defaults to the config)");
    client->add_option("--seed-override", seed_override, "replace the config seed");

    std::size_t rows = 5000;
    std::uint64_t fixture_seed = 1;
    std::string fixture_out;
    auto* fixture = cli.add_subcommand("fixture", "write the synthetic mixed-type table as CSV");
    fixture->add_option("--rows", rows, "row count");
    fixture->add_option("--seed", fixture_seed, "generator seed");
    fixture->add_option("--out", fixture_out, "CSV path")->required();

    CLI11_PARSE(cli, argc, argv);

    try {
        auto load = [&] {
            auto cfg = app::load_config(config_path);
            if (seed_override) cfg.set_seed(*seed_override);
            return cfg;
        };
        if (*run) {
            auto cfg = load();
            if (!out_dir.empty()) cfg.output = out_dir;
            const auto result = app::cmd_run(cfg, cfg.output);
            std::cout << "avg_jsd " << app::detail::format_real(result.final_score.avg_jsd.value_or(NAN)) << "\navg_wd "
                      << app::detail::format_real(result.final_score.avg_wd.value_or(NAN)) << '\n';
        } else if (*validate) {
            const auto cfg = load();
            std::cout << app::describe(app::cmd_validate(cfg), cfg);
        } else if (*compare) {
            std::vector<fs::path> paths(dirs.begin(), dirs.end());
            const auto rows = app::cmd_compare(paths);
            std::cout << app::comparison_text(rows);
            if (!csv_out.empty()) app::detail::write_text(csv_out, app::comparison_csv(rows));
        } else if (*client) {
            const auto cfg = load();
            app::cmd_client(cfg, client_id, address.empty() ? cfg.transport.address : address);
        } else if (*fixture) {
            write_csv(make_mixed_table(rows, fixture_seed), fs::path(fixture_out));
        }
    } catch (const Error& e) {
        spdlog::error("{}: {}", to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
