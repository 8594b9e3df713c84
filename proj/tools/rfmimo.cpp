// SPDX-License-Identifier: Apache-2.0
//
// rfmimo - 1-bit direct RF-sampling massive MU-MIMO-OFDM uplink simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "rfmimo/harness/experiment.hpp"
#include "rfmimo/validation.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

namespace {

using namespace rfmimo;

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    int threads = 0;
    std::string format = "csv";
    bool quiet = false;
};

harness::ExperimentConfig load(const Globals& g)
{
    harness::ExperimentConfig cfg = g.config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(g.config_path);
    if (g.seed) cfg.master_seed = *g.seed;
    cfg.validate();
    return cfg;
}

harness::RunOptions run_options(const Globals& g)
{
    harness::RunOptions opt;
    opt.threads = g.threads > 0 ? g.threads : std::max(1u, std::thread::hardware_concurrency());
    opt.log = g.quiet ? nullptr : &std::cerr;
    return opt;
}

void echo_config(const harness::ExperimentConfig& cfg, const harness::RunOptions& opt)
{
    if (!opt.log) return;
    *opt.log << "config: B=" << cfg.antennas.front() << " U=" << cfg.users << " N=" << cfg.samples
             << " S=" << cfg.occupied.size() << " L=" << cfg.taps << " seed=" << cfg.master_seed
             << " BW=" << harness::detail::format("%.2f", cfg.bandwidth_hz() / 1e6) << " MHz"
             << " OSR=" << harness::detail::format("%.1f", cfg.oversampling_rate()) << " threads=" << opt.threads
             << "\n";
}

int finish(const harness::RunReport& report, const Globals& g, const harness::RunOptions& opt)
{
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    const auto files = harness::emit_results(report, g.out_dir, harness::parse_output_format(g.format));
    if (opt.log)
        for (const auto& f : files) *opt.log << "wrote " << (std::filesystem::path(g.out_dir) / f).string() << "\n";
    return kOk;
}

void print_crossings(const harness::RunReport& report)
{
    for (const auto& c : report.crossings) {
        std::cout << "B=" << c.antennas << " " << to_string(c.quantizer) << "/" << to_string(c.dither) << " "
                  << c.label << " (" << harness::detail::num(c.percent) << "%): ";
        if (!c.supported) {
            std::cout << "never below the line (min " << harness::detail::format("%.2f", c.min_evm_pct) << "%)\n";
            continue;
        }
        std::cout << "[" << (c.low_db ? harness::detail::format("%.2f", *c.low_db) : std::string("<grid"))
                  << ", " << (c.high_db ? harness::detail::format("%.2f", *c.high_db) : std::string(">grid"))
                  << "] dB\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"1-bit direct RF-sampling MU-MIMO-OFDM uplink simulator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file");
    app.add_option("--seed", g.seed, "master seed (overrides the config)");
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_flag("-q,--quiet", g.quiet, "no progress output");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo EVM and constellations for one operating point");
    auto* sweep = app.add_subcommand("sweep", "EVM table over the SNR grid and antenna counts");
    auto* psd = app.add_subcommand("psd", "empirical and analytical PSD of the ADC output");
    auto* dither = app.add_subcommand("dither-opt", "optimized dither power per SNR");
    auto* validate = app.add_subcommand("validate", "oracle and invariant suite");
    for (auto* sub : {simulate, sweep, psd, dither, validate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        const harness::RunOptions opt = run_options(g);
        if (validate->parsed()) {
            const harness::ExperimentConfig cfg = load(g);
            validation::OracleOptions vo;
            vo.seed = cfg.master_seed;
            vo.threads = opt.threads;
            vo.log = &std::cout;
            harness::RunReport report;
            report.command = "validate";
            report.config = cfg;
            report.validation = validation::run_oracles(vo);
            finish(report, g, opt);
            const bool ok = std::all_of(report.validation.begin(), report.validation.end(),
                                        [](const auto& c) { return c.passed; });
            std::cout << (ok ? "all checks passed\n" : "some checks failed\n");
            return ok ? kOk : kNumericalError;
        }
        const harness::ExperimentConfig cfg = load(g);
        echo_config(cfg, opt);
        harness::RunReport report;
        if (simulate->parsed()) report = harness::run_monte_carlo(cfg, opt);
        else if (sweep->parsed()) report = harness::run_sweep(cfg, opt);
        else if (psd->parsed()) report = harness::run_psd(cfg, opt);
        else report = harness::run_dither_optimization(cfg, opt);
        if (sweep->parsed()) print_crossings(report);
        return finish(report, g, opt);
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
